import pytest
from hypothesis import given, strategies as st

from ccnoc.energy import ENERGY_HEADER, EnergyParams, estimate


def test_zero():
    r = estimate(0, 0, 0, 100, 16, EnergyParams(p_static=0))
    assert (r.dynamic_J, r.static_J, r.total_J, r.J_per_packet) == (0, 0, 0, 0)
    assert r.no_packets


def test_link_only():
    r = estimate(100, 0, 1, 0, 16, EnergyParams(1e-12, 0, 0))
    assert r.dynamic_J == pytest.approx(1e-10, rel=1e-12)


def test_defaults_and_header():
    p = EnergyParams()
    assert (p.e_link, p.e_router, p.p_static) == (1e-12, 2e-12, 0.1e-12)
    assert ENERGY_HEADER == ["dyn_J", "static_J", "total_J", "J_per_packet"]
    r = estimate(10, 20, 5, 100, 4)
    assert r.dynamic_J == pytest.approx(10e-12 + 40e-12)
    assert r.static_J == pytest.approx(0.1e-12 * 400)
    assert r.J_per_packet == r.total_J / 5


def test_negative_params_rejected():
    with pytest.raises(ValueError):
        EnergyParams(e_link=-1)


counts = st.integers(0, 10**6)


@given(counts, counts, st.integers(1, 1000), counts, st.integers(1, 64))
def test_linearity_and_total(h, r, n, cyc, nodes):
    a = estimate(h, r, n, cyc, nodes)
    b = estimate(2 * h, 2 * r, n, cyc, nodes)
    assert b.dynamic_J == pytest.approx(2 * a.dynamic_J, rel=1e-12, abs=0)
    assert a.total_J == a.dynamic_J + a.static_J


@given(counts, counts, counts, st.floats(0, 1e-11), st.floats(0, 1e-11))
def test_monotone_in_params(h, r, cyc, e, de):
    lo = estimate(h, r, 1, cyc, 4, EnergyParams(e, e, e))
    hi = estimate(h, r, 1, cyc, 4, EnergyParams(e + de, e + de, e + de))
    assert hi.total_J >= lo.total_J
