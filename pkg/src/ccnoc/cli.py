"""Command line entry point: ``ccnoc run|train|analyze|topologies``.

Exit codes: 0 ok, 1 usage or configuration error, 2 runtime error.
Set ``CCNOC_LOG`` (e.g. ``DEBUG``) for log output on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import time
from pathlib import Path

from ccnoc.ccta import Analyzer, aggregate, aggregate_csv, load_raw_csv
from ccnoc.coherence import CoherenceError, CoherentSystem, ProtocolViolation
from ccnoc.config import ConfigError, RunConfig, load_config
from ccnoc.energy import ENERGY_HEADER, estimate_from_metrics
from ccnoc.noc.network import DeadlockSuspected
from ccnoc.noc.routing import compute_routing_tables, xy_routing_table
from ccnoc.optimizer import TrainingConfig, run_training
from ccnoc.topology import TopologyKind, build_topology, validate

log = logging.getLogger("ccnoc")

NOC_HEADER = ["cycles", "topology", "routing", "injected", "ejected", "L_t", "D_t",
              "link_util", "flit_hops", "router_traversals"] + ENERGY_HEADER


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common(p):
    p.add_argument("--config", type=Path, help="INI configuration file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--quiet", action="store_true", help="suppress the summary")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ccnoc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = sub.add_parser("run", help="simulate one configuration and write reports")
    _common(p)
    p = sub.add_parser("train", help="train the topology and link-weight agent")
    _common(p)
    p.add_argument("--episodes", type=int, help="override [train] episodes")
    p = sub.add_parser("analyze", help="recompute CCTA aggregates from a transaction dump")
    p.add_argument("transactions", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--quiet", action="store_true")
    p = sub.add_parser("topologies", help="dump a topology edge list and validation report")
    p.add_argument("kind", nargs="?", help="topology kind (default: all six)")
    p.add_argument("cores", nargs="?", type=int, default=16)
    p.add_argument("--out", type=Path)
    p.add_argument("--quiet", action="store_true")
    return ap


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output = args.out
    elif args.config:
        cfg.output = cfg._resolve(cfg.output)
    cfg.validate()
    return cfg


def _say(args, text=""):
    if not args.quiet:
        print(text)


def noc_csv_row(m, cycles, kind, routing, energy) -> list[str]:
    return [str(cycles), kind.label, routing, str(m.injected_packets), str(m.ejected_packets),
            repr(m.L_t), repr(m.D_t), repr(m.average_link_utilization), str(m.flit_hops),
            str(m.router_traversals)] + energy.csv_row()


def _write_csv(path: Path, header, rows):
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(out.getvalue())


def cmd_run(args) -> int:
    from ccnoc import plotting

    cfg = _load(args)
    trace = cfg.build_trace()
    graph = cfg.build_graph()
    tables = xy_routing_table(graph) if cfg.routing == "xy" else compute_routing_tables(graph)
    ccta = Analyzer() if cfg.ccta else None
    t0 = time.perf_counter()
    sys_ = CoherentSystem(graph, tables, trace.accesses, ccta=ccta, check=cfg.check)
    sys_.run(max_cycles=cfg.cycles)
    elapsed = time.perf_counter() - t0
    cycles = sys_.cycle
    m = sys_.network.collect_noc_metrics()
    energy = estimate_from_metrics(m, cycles, graph.node_count, cfg.energy)

    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "noc_metrics.csv", NOC_HEADER,
               [noc_csv_row(m, cycles, cfg.kind, cfg.routing, energy)])
    (out / "link_flits.csv").write_text(sys_.network.link_counts_csv())
    plotting.plot_link_traffic(m.link_flits, out / "link_traffic.png")
    cc = None
    if ccta is not None:
        cc = ccta.report()
        (out / "ccta_aggregate.csv").write_text(aggregate_csv([cc]))
        (out / "ccta_transactions.csv").write_text(ccta.raw_csv())
        plotting.plot_transaction_times(ccta.sealed(), out / "transaction_times.png")

    finished = sys_.finished()
    _say(args, f"ccnoc run: {cfg.kind.label} {cfg.cores} cores, {cfg.routing} routing, "
               f"trace {trace.generator} ({len(trace)} accesses)")
    _say(args, f"  cycles            {cycles}{'' if finished else '  (budget reached)'}")
    _say(args, f"  accesses done     {sys_.completed_accesses}")
    _say(args, f"  packets           {m.ejected_packets} ejected / {m.injected_packets} injected")
    _say(args, f"  L_t / D_t         {m.L_t:.3f} / {m.D_t:.3f} cycles")
    _say(args, f"  link utilization  {m.average_link_utilization:.4f}")
    if cc is not None:
        _say(args, f"  H_t               {cc.H_t:.2f} cycles over {cc.counts['WriteHitS']} upgrades")
        _say(args, f"  write miss avg    {cc.write_miss_time_avg:.2f} cycles")
        _say(args, f"  read miss avg     {cc.mem_fetch_time_avg:.2f} cycles")
        _say(args, f"  C_t               {cc.C_t} messages")
    _say(args, f"  energy            {energy.total_J:.4e} J ({energy.J_per_packet:.4e} J/packet)")
    _say(args, f"  wall time         {elapsed:.2f} s; reports in {out}")
    return 0


def cmd_train(args) -> int:
    from ccnoc import plotting

    cfg = _load(args)
    if cfg.seed is None:
        raise ConfigError("training needs a seed")
    trace = cfg.build_trace()
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    tr = cfg.train
    episodes = args.episodes if args.episodes is not None else tr.episodes
    tcfg = TrainingConfig(episodes=episodes, seed=cfg.seed, agent=cfg.agent_config(),
                          alphas=tr.alphas, checkpoint_every=tr.checkpoint_every,
                          checkpoint_dir=out / "checkpoints",
                          history_path=out / "training_history.csv")

    def progress(ep, r):
        if not args.quiet and (ep + 1) % max(1, episodes // 10) == 0:
            print(f"  episode {ep + 1:4d}/{episodes}  reward {r:+.4f}", flush=True)

    hist, agent, div = run_training(trace, tcfg, epoch_cycles=tr.epoch_cycles,
                                    max_epochs=tr.max_epochs, on_episode=progress)
    agent.save(out / "checkpoints" / "final")
    first = {}
    for rec in hist.records:
        first.setdefault(rec.episode, rec.topology.label)
    plotting.plot_training(hist.episode_rewards, [first.get(e, "?") for e in
                                                  range(len(hist.episode_rewards))],
                           out / "training.png", [k.label for k in TopologyKind])
    r = hist.episode_rewards
    k = min(10, len(r))
    _say(args, f"ccnoc train: {episodes} episodes, {len(hist.records)} epochs")
    if k:
        _say(args, f"  mean reward first {k}: {sum(r[:k]) / k:+.4f}  last {k}: {sum(r[-k:]) / k:+.4f}")
    if hist.aborted:
        _say(args, f"  aborted episodes: {[e for e, _ in hist.aborted]}")
    _say(args, f"  history in {out / 'training_history.csv'}")
    return 0


def cmd_analyze(args) -> int:
    try:
        text = args.transactions.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {args.transactions}: {exc}") from None
    try:
        records = load_raw_csv(text)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad transaction dump: {exc}") from None
    report = aggregate_csv([aggregate(records)])
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "ccta_aggregate.csv").write_text(report)
    if not args.quiet:
        sys.stdout.write(report)
    return 0


def cmd_topologies(args) -> int:
    kinds = [TopologyKind.parse(args.kind)] if args.kind else list(TopologyKind)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
    status = 0
    for kind in kinds:
        g = build_topology(kind, args.cores)
        rep = validate(g)
        if args.out:
            (args.out / f"{kind.label}_{args.cores}.edges").write_text(g.to_edge_list())
        if not args.quiet:
            sys.stdout.write(g.to_edge_list())
            print(f"# {rep}")
        if not rep.ok:
            status = 2
    return status


COMMANDS = {"run": cmd_run, "train": cmd_train, "analyze": cmd_analyze,
            "topologies": cmd_topologies}


def main(argv=None) -> int:
    level = os.environ.get("CCNOC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"ccnoc: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.cmd](args)
    except (ConfigError, ValueError) as exc:
        print(f"ccnoc: configuration error: {exc}", file=sys.stderr)
        return 1
    except (ProtocolViolation, CoherenceError, DeadlockSuspected) as exc:
        print(f"ccnoc: simulation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        log.debug("unhandled", exc_info=True)
        print(f"ccnoc: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
