import csv
import io
import textwrap

import pytest

from ccnoc.cli import NOC_HEADER, main
from ccnoc.config import ConfigError, RunConfig, load_config, parse_config
from ccnoc.topology import TopologyKind

TINY = """
[run]
seed = {seed}
output = out

[topology]
kind = {kind}
cores = 16

[routing]
policy = {routing}

[trace]
generator = {gen}
length = {length}
rate = {rate}

[train]
episodes = 2
epoch_cycles = 200
"""


def write_cfg(tmp_path, name="c.ini", seed=1, kind="mesh", routing="xy",
              gen="shared_hotspot", length=300, rate=0.05, extra=""):
    p = tmp_path / name
    p.write_text(TINY.format(seed=seed, kind=kind, routing=routing, gen=gen, length=length,
                             rate=rate) + textwrap.dedent(extra))
    return p


def rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


# ------------------------------------------------------------------ config


def test_defaults_validate_once_seeded():
    cfg = RunConfig(seed=0)
    cfg.validate()
    assert cfg.kind is TopologyKind.MESH and cfg.routing == "xy"


def test_parse_sections(tmp_path):
    cfg = load_config(write_cfg(tmp_path, kind="torus", routing="weighted", extra="""
        [energy]
        e_link = 2e-12
        """))
    assert cfg.kind is TopologyKind.TORUS and cfg.routing == "weighted"
    assert cfg.energy.e_link == 2e-12
    assert cfg.train.episodes == 2 and cfg.trace.length == 300
    assert cfg._resolve(cfg.output) == tmp_path / "out"


@pytest.mark.parametrize("text", [
    "[run]\nseed = x\n",
    "[bogus]\na = 1\n",
    "[trace]\ncolour = red\n",
    "[run]\nccta = maybe\n",
    "[train]\nalphas = 1 2\n",
    "[energy]\ne_link = -1\n",
    "no section header\n",
])
def test_bad_configs_raise(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_xy_needs_mesh():
    with pytest.raises(ConfigError):
        parse_config("[run]\nseed=1\n[topology]\nkind=torus\n").validate()


def test_generators_need_seed():
    with pytest.raises(ConfigError):
        parse_config("[trace]\ngenerator=uniform_random\n").validate()


def test_trace_file_core_mismatch(tmp_path):
    from ccnoc.workload import gen_uniform_random, save_trace
    save_trace(gen_uniform_random(8, 20, 0.1, 0.3, 8, 0), tmp_path / "t.trace")
    cfg = parse_config("[trace]\ngenerator=file\npath=t.trace\n", tmp_path)
    cfg.validate()
    with pytest.raises(ConfigError):
        cfg.build_trace()


def test_weights_file_must_match_topology(tmp_path):
    from ccnoc.topology import build_topology
    (tmp_path / "w.edges").write_text(build_topology("torus", 16).to_edge_list())
    cfg = parse_config("[run]\nseed=1\n[routing]\npolicy=weighted\nweights=w.edges\n", tmp_path)
    with pytest.raises(ConfigError):
        cfg.build_graph()


def test_weights_file_is_applied(tmp_path):
    from ccnoc.topology import build_topology
    g = build_topology("mesh", 16)
    heavy = g.with_weights([3.0] * len(g.link_weights))
    (tmp_path / "w.edges").write_text(heavy.to_edge_list())
    cfg = parse_config("[run]\nseed=1\n[routing]\npolicy=weighted\nweights=w.edges\n", tmp_path)
    assert cfg.build_graph().link_weights == heavy.link_weights


# --------------------------------------------------------------------- run


def test_run_writes_reports(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["run", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    for name in ("noc_metrics.csv", "link_flits.csv", "ccta_aggregate.csv",
                 "ccta_transactions.csv", "link_traffic.png", "transaction_times.png"):
        assert (out / name).stat().st_size > 0, name
    assert (out / "noc_metrics.csv").read_text().splitlines()[0] == ",".join(NOC_HEADER)
    assert "cycles" in capsys.readouterr().out


def test_run_with_zero_rate_reports_zeros(tmp_path):
    cfg = write_cfg(tmp_path, rate=0.0, gen="uniform_random")
    assert main(["run", "--config", str(cfg), "--quiet"]) == 0
    (m,) = rows(tmp_path / "out" / "noc_metrics.csv")
    assert all(float(m[k]) == 0.0 for k in NOC_HEADER if k not in ("topology", "routing"))
    (a,) = rows(tmp_path / "out" / "ccta_aggregate.csv")
    assert all(float(v) == 0.0 for v in a.values())


def test_run_is_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path)
    outs = []
    for d in ("a", "b"):
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / d), "--quiet"]) == 0
        outs.append({f: (tmp_path / d / f).read_bytes() for f in
                     ("noc_metrics.csv", "link_flits.csv", "ccta_aggregate.csv",
                      "ccta_transactions.csv")})
    assert outs[0] == outs[1]


def test_seed_flag_overrides_file(tmp_path):
    cfg = write_cfg(tmp_path, seed=1)
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "a"), "--quiet"])
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "b"), "--quiet", "--seed", "2"])
    main(["run", "--config", str(write_cfg(tmp_path, "d.ini", seed=2)),
          "--out", str(tmp_path / "c"), "--quiet"])
    a, b, c = ((tmp_path / d / "ccta_transactions.csv").read_bytes() for d in "abc")
    assert a != b and b == c


def test_analyze_reproduces_run_aggregates(tmp_path, capsys):
    cfg = write_cfg(tmp_path, kind="fattree", routing="weighted")
    assert main(["run", "--config", str(cfg), "--quiet"]) == 0
    out = tmp_path / "out"
    assert main(["analyze", str(out / "ccta_transactions.csv"), "--out", str(tmp_path / "an"),
                 "--quiet"]) == 0
    assert (tmp_path / "an" / "ccta_aggregate.csv").read_bytes() == \
        (out / "ccta_aggregate.csv").read_bytes()


# ------------------------------------------------------------------- train


def test_train_twice_gives_identical_history(tmp_path):
    cfg = write_cfg(tmp_path)
    for d in ("a", "b"):
        assert main(["train", "--config", str(cfg), "--out", str(tmp_path / d), "--quiet"]) == 0
    a = (tmp_path / "a" / "training_history.csv").read_bytes()
    assert a == (tmp_path / "b" / "training_history.csv").read_bytes()
    assert len(a.decode().splitlines()) > 2
    assert (tmp_path / "a" / "checkpoints" / "final" / "q_net.ffn").exists()
    assert (tmp_path / "a" / "training.png").stat().st_size > 0


def test_train_episode_override(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["train", "--config", str(cfg), "--quiet", "--episodes", "1"]) == 0
    eps = {r["episode"] for r in rows(tmp_path / "out" / "training_history.csv")}
    assert eps == {"0"}


# -------------------------------------------------------------- topologies


def test_topologies_dump(tmp_path, capsys):
    assert main(["topologies", "torus", "16", "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "# " in text
    assert (tmp_path / "Torus_16.edges").read_text() in text


def test_topologies_all_kinds(capsys):
    assert main(["topologies"]) == 0
    assert capsys.readouterr().out.count("# ") >= len(TopologyKind)


# -------------------------------------------------------------- exit codes


@pytest.mark.parametrize("argv", [[], ["bogus"], ["run", "--nope"], ["topologies", "mesh", "x"]])
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1


def test_config_errors_exit_1(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 1
    assert main(["run", "--config", str(write_cfg(tmp_path, kind="torus"))]) == 1
    assert main(["topologies", "hypercube"]) == 1
    assert main(["topologies", "mesh", "7"]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,dump\n")
    assert main(["analyze", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_runtime_errors_exit_2(tmp_path, monkeypatch, capsys):
    import ccnoc.cli

    def boom(*a, **k):
        raise RuntimeError("simulated failure")
    monkeypatch.setattr(ccnoc.cli, "CoherentSystem", boom)
    assert main(["run", "--config", str(write_cfg(tmp_path))]) == 2
    assert "simulated failure" in capsys.readouterr().err
