import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaugelab import lie
from gaugelab.connection import (
    ConnectionState,
    GaugeMap,
    bianchi_residual,
    cocycle_check,
    conjugate,
    curvature,
    curvature_shift_residual,
    dd_residual,
    gauge_transform,
    plaquette_curvature,
    pure_gauge,
)
from gaugelab.errors import GroupError, ShapeError, TopologyError
from gaugelab.grid import Chart, FormField
from gaugelab.samples import random_algebra_form, random_connection, random_gauge_map, trig_polynomial
from gaugelab.yang_mills import ym_action


def su2(rng, size=()):
    return lie.from_components(rng.normal(size=size + (3,)), "SU2")


@given(st.integers(0, 2**31 - 1))
def test_constant_connection_curvature_is_commutator(seed):
    rng = np.random.default_rng(seed)
    c = Chart.torus((6, 6))
    A, B = su2(rng), su2(rng)
    comps = np.stack([np.broadcast_to(A, c.dims + (2, 2)), np.broadcast_to(B, c.dims + (2, 2))])
    F = curvature(ConnectionState.from_components(c, "SU2", comps))
    assert np.allclose(F.data[0], A @ B - B @ A, atol=1e-13)


def test_linear_abelian_potential_gives_constant_field():
    c = Chart.box((9, 9), -1, 1)
    x, y = (np.broadcast_to(v, c.dims) for v in c.coords())
    comps = np.zeros((2,) + c.dims + (1, 1), complex)
    comps[0, ..., 0, 0] = -0.5j * 1.3 * y
    comps[1, ..., 0, 0] = 0.5j * 1.3 * x
    F = curvature(ConnectionState.from_components(c, "U1", comps))
    assert np.allclose(F.data[0, ..., 0, 0], 1.3j)


def test_connection_values_must_lie_in_algebra():
    c = Chart.torus((4, 4))
    comps = np.ones((2, 4, 4, 2, 2), complex)
    with pytest.raises(GroupError):
        ConnectionState.from_components(c, "SU2", comps)
    with pytest.raises(ShapeError):
        ConnectionState.from_components(c, "SU2", np.zeros((2, 4, 4, 1, 1), complex))


def test_gauge_map_must_lie_in_group():
    c = Chart.torus((4, 4))
    with pytest.raises(GroupError):
        GaugeMap(c, "SU2", 2 * lie.identity("SU2", c.dims))


def test_abelian_pure_gauge_is_exactly_flat():
    c = Chart.torus((16, 16, 16))
    X = 1j * trig_polynomial(c, np.random.default_rng(2), max_mode=2)[..., None, None]
    g = GaugeMap.exp(c, "U1", X)
    assert curvature(pure_gauge(g)).sup_norm() < 1e-12


def test_su2_pure_gauge_curvature_is_second_order():
    errs = []
    for N in (32, 64):
        c = Chart.torus((N, N))
        errs.append(curvature(pure_gauge(random_gauge_map(c, "SU2", 4, max_mode=1))).sup_norm())
    assert math.log2(errs[0] / errs[1]) > 1.8


def test_pure_gauge_with_analytic_derivative_is_flat_to_roundoff_for_constant_map():
    c = Chart.torus((8, 8))
    g = GaugeMap.constant(c, "SU2", lie.expm(su2(np.random.default_rng(0))))
    assert curvature(pure_gauge(g)).sup_norm() < 1e-14


def test_gauge_covariance_converges():
    errs = []
    for N in (16, 32):
        c = Chart.torus((N,) * 3)
        con = random_connection(c, "SU2", 1, max_mode=1)
        g = random_gauge_map(c, "SU2", 2, max_mode=1, amplitude=0.5)
        errs.append((curvature(gauge_transform(con, g)) - conjugate(curvature(con), g)).sup_norm())
    assert math.log2(errs[0] / errs[1]) > 1.8


def test_transform_composition_abelian_exact():
    c = Chart.torus((12, 12))
    rng = np.random.default_rng(5)
    con = random_connection(c, "U1", 3, max_mode=1)
    X1 = 1j * trig_polynomial(c, rng, max_mode=1)[..., None, None]
    X2 = 1j * trig_polynomial(c, rng, max_mode=1)[..., None, None]
    g1, g2 = GaugeMap.exp(c, "U1", X1), GaugeMap.exp(c, "U1", X2)
    both = GaugeMap.exp(c, "U1", X1 + X2)
    lhs = gauge_transform(gauge_transform(con, g1), g2).omega
    assert (lhs - gauge_transform(con, both).omega).sup_norm() < 1e-12


def test_action_invariant_under_constant_su2_gauge():
    c = Chart.torus((8, 8, 8))
    con = random_connection(c, "SU2", 9, max_mode=1)
    g = GaugeMap.constant(c, "SU2", lie.expm(su2(np.random.default_rng(1))))
    assert ym_action(gauge_transform(con, g)) == pytest.approx(ym_action(con), rel=1e-12)


def test_abelian_bianchi_exact():
    c = Chart.torus((10, 10, 10))
    assert bianchi_residual(random_connection(c, "U1", 1)) < 1e-12


def test_bianchi_and_dd_converge_in_3d():
    bi, dd = [], []
    for N in (16, 32):
        c = Chart.torus((N,) * 3)
        con = random_connection(c, "SU2", 11, max_mode=1)
        bi.append(bianchi_residual(con))
        dd.append(dd_residual(con, random_algebra_form(c, "SU2", 1, np.random.default_rng(3), max_mode=1)))
    assert math.log2(bi[0] / bi[1]) > 1.8
    assert math.log2(dd[0] / dd[1]) > 1.8


def test_curvature_shift_identity_is_exact():
    c = Chart.torus((8, 8, 8))
    con = random_connection(c, "SU2", 1, max_mode=1)
    kappa = random_algebra_form(c, "SU2", 1, np.random.default_rng(8), max_mode=1)
    assert curvature_shift_residual(con, kappa) < 1e-11


def test_plaquettes_agree_with_curvature():
    errs = []
    for N in (32, 64):
        c = Chart.torus((N, N))
        con = random_connection(c, "SU2", 6, max_mode=1, amplitude=0.5)
        F = curvature(con).data[0]
        centre = 0.25 * (F + np.roll(F, -1, 0) + np.roll(F, -1, 1) + np.roll(np.roll(F, -1, 0), -1, 1))
        errs.append(np.max(np.abs(plaquette_curvature(con, (0, 1)) - centre)))
    # (Id - P) / h^2 carries an O(h) remainder: first order
    assert math.log2(errs[0] / errs[1]) > 0.9


def test_cocycle_flags_inconsistent_triple():
    rng = np.random.default_rng(0)
    g_ab = lie.expm(su2(rng, (5,)))
    g_bc = lie.expm(su2(rng, (5,)))
    good = {("a", "b"): g_ab, ("b", "c"): g_bc, ("c", "a"): lie.dagger(g_ab @ g_bc)}
    rep = cocycle_check(good)
    assert rep["residual"] < 1e-12 and not rep["flagged"]
    bad = dict(good)
    bad[("c", "a")] = lie.expm(su2(rng, (5,)))
    rep = cocycle_check(bad)
    assert rep["flagged"] and rep["worst_triple"] == ("a", "b", "c")


def test_cocycle_missing_data():
    g = lie.identity("SU2", (3,))
    with pytest.raises(TopologyError):
        cocycle_check({("a", "b"): g, ("b", "c"): g, ("c", "d"): g})


def test_adding_perturbation_checks_shape():
    c = Chart.torus((4, 4))
    con = ConnectionState.trivial(c, "SU2")
    with pytest.raises(ShapeError):
        con + FormField.zeros(c, 2, (2, 2), complex)
