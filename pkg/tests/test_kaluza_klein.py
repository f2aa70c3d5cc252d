import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugelab import lie
from gaugelab.errors import DomainError, ShapeError
from gaugelab.kaluza_klein import (
    BundleSpec,
    BundleState,
    kk_coeffs,
    kk_geodesic,
    koszul,
    lorentz_compare,
    scalar_curvature_decomposition,
    summary_json,
    total_brackets,
)


def random_spec(group, seed):
    rng = np.random.default_rng(seed)
    k = len(lie.algebra_basis(group))
    if group == "U1":
        omega = {(0, i, j): rng.normal() for i, j in [(0, 1), (0, 2), (1, 2)]}
    else:
        omega = {(int(rng.integers(k)), 0, 1): rng.normal()}
    return BundleSpec.constant_field(group, 3, omega)


def state(group, seed, x=(0.0, 0.0, 0.0)):
    rng = np.random.default_rng(seed)
    k = len(lie.algebra_basis(group))
    g = lie.expm(lie.from_components(rng.normal(size=k), group))
    return BundleState(np.array(x, float), g, rng.normal(size=3) * 0.5, rng.normal(size=k) * 0.5)


def test_zero_field_abelian_table_vanishes():
    b = BundleSpec.constant_field("U1", 3, {})
    assert not np.any(kk_coeffs(b, np.zeros(3)))


def test_constant_field_entries():
    b = BundleSpec.constant_field("U1", 2, {(0, 0, 1): 0.8})
    W = kk_coeffs(b, np.zeros(2))
    # F = -Omega: W[s,i,j] = F/2, W[i,j,s] = -F/2, W[i,s,j] = -F/2
    assert W[2, 0, 1] == pytest.approx(-0.4)
    assert W[0, 1, 2] == pytest.approx(0.4)
    assert W[0, 2, 1] == pytest.approx(0.4)


def test_su2_zero_field_entries_are_structure_constants():
    b = BundleSpec.constant_field("SU2", 2, {})
    W = kk_coeffs(b, np.zeros(2))
    C = lie.structure_constants("SU2")
    assert np.allclose(W[2:, 2:, 2:], -0.5 * np.einsum("snb->sbn", C))


@pytest.mark.parametrize("group", ["U1", "SU2", "SO3"])
@given(seed=st.integers(0, 2**31 - 1))
def test_table_matches_koszul_and_is_antisymmetric(group, seed):
    b = random_spec(group, seed)
    s = state(group, seed)
    W = kk_coeffs(b, s.x, s.g)
    G = koszul(total_brackets(b, s.x, s.g))
    assert np.allclose(W, np.einsum("cab->abc", G), atol=1e-14)
    assert np.array_equal(W, -np.swapaxes(W, 0, 1))


def test_base_frame_coefficients_for_round_sphere():
    """Polar frame of the unit sphere: nabla_{X_2} X_2 = -cot(theta) X_1."""
    b = BundleSpec("U1", 2, lambda x: np.zeros((1, 2, 2)), frame_fn=lambda x: np.diag([1.0, 1 / np.sin(x[0])]))
    th = 1.1
    W = kk_coeffs(b, np.array([th, 0.4]))
    # W[A,B,C] = <nabla_{e_C} e_A, e_B>
    assert W[1, 0, 1] == pytest.approx(-1 / np.tan(th), rel=1e-7)


def test_nonabelian_constant_field_requires_commuting_generators():
    with pytest.raises(ShapeError):
        BundleSpec.constant_field("SU2", 3, {(0, 0, 1): 1.0, (1, 1, 2): 1.0})


def test_zero_field_geodesic_is_straight():
    b = BundleSpec.constant_field("U1", 3, {})
    s = BundleState(np.zeros(3), lie.identity("U1"), np.array([0.3, -0.2, 0.1]), np.array([0.7]))
    tr = kk_geodesic(b, s, 2.0, 1e-2)
    assert np.allclose(tr.x[-1], 2.0 * s.u, atol=1e-13)
    assert tr.charge_drift == 0.0


def test_cyclotron_frequency():
    """Omega = B0 dx^dy, charge q: the base orbit closes after 2 pi / (q B0)."""
    B0, q = 1.5, 0.8
    b = BundleSpec.constant_field("U1", 3, {(0, 0, 1): B0})
    s = BundleState(np.zeros(3), lie.identity("U1"), np.array([0.4, 0.0, 0.0]), np.array([q]))
    T = 2 * np.pi / (q * B0)
    tr = kk_geodesic(b, s, T, T / 4000)
    assert np.allclose(tr.x[-1], 0.0, atol=1e-10)
    radius = np.max(np.linalg.norm(tr.x[:, :2], axis=1)) / 2
    assert radius == pytest.approx(0.4 / (q * B0), rel=1e-6)


@pytest.mark.parametrize("group,tol", [("U1", 1e-5), ("SU2", 1e-4), ("SO3", 1e-4)])
def test_lorentz_oracle_agreement_and_conservation(group, tol):
    b = random_spec(group, 5)
    r = lorentz_compare(b, state(group, 6), 4.0, 2e-3)
    assert r["distance"] < tol
    assert r["charge_drift"] < 1e-8
    assert r["energy_drift"] < 1e-8


def test_gauge_charge_conserved_along_commuting_block():
    b = BundleSpec.constant_field("SU2", 3, {(2, 0, 1): 1.2})
    tr = kk_geodesic(b, state("SU2", 2), 3.0, 1e-2)
    Q = tr.gauge_charge("SU2")
    assert np.max(np.abs(Q[:, 2] - Q[0, 2])) < 1e-10


def test_leaving_the_window_raises():
    b = BundleSpec.constant_field("U1", 3, {}, window=([-1.0] * 3, [1.0] * 3))
    s = BundleState(np.zeros(3), lie.identity("U1"), np.array([1.0, 0.0, 0.0]), np.array([0.0]))
    with pytest.raises(DomainError):
        kk_geodesic(b, s, 2.0, 1e-2)


def test_scalar_curvature_trivial_cases():
    r = scalar_curvature_decomposition(BundleSpec.constant_field("U1", 3, {}), np.zeros(3))
    assert r["PR"] == r["MR"] == r["Fterm"] == r["GR"] == 0.0


def test_scalar_curvature_single_field_component():
    """Hand expansion (O'Neill): PR = -|A|^2 = -(1/4) sum_{i,j} F_ij^2 = -F0^2 / 2."""
    F0 = 1.3
    r = scalar_curvature_decomposition(BundleSpec.constant_field("U1", 4, {(0, 0, 1): F0}), np.zeros(4))
    assert r["PR"] == pytest.approx(-0.5 * F0**2, abs=1e-12)
    assert r["residual"] < 1e-12


@pytest.mark.parametrize("group,expected", [("SU2", 3.0), ("SO3", 0.75)])
def test_group_scalar_curvature(group, expected):
    """Bi-invariant -tr metric: SU(2) is S^3 of radius sqrt 2 (R = 6/2).  The
    3x3 trace form is four times the fundamental one, so SO(3) has R = 3/4."""
    r = scalar_curvature_decomposition(BundleSpec.constant_field(group, 2, {}), np.zeros(2))
    C = lie.structure_constants(group)
    assert r["GR"] == pytest.approx(0.25 * np.sum(C**2))
    assert r["PR"] == pytest.approx(expected, abs=1e-10)
    assert r["residual"] < 1e-10


def test_hopf_fibration_curvature():
    """S^3(1) over S^2(1/2) with F = 2: PR = 6, MR = 8."""
    rad = 0.5
    b = BundleSpec(
        "U1",
        2,
        curvature_fn=lambda x: np.array([[[0.0, 2.0], [-2.0, 0.0]]]),
        potential_fn=lambda x: np.array([[0.0, -0.5 * np.cos(x[0])]]),
        frame_fn=lambda x: np.diag([1 / rad, 1 / (rad * np.sin(x[0]))]),
    )
    r = scalar_curvature_decomposition(b, np.array([1.1, 0.3]))
    assert r["MR"] == pytest.approx(8.0, abs=1e-5)
    assert r["PR"] == pytest.approx(6.0, abs=1e-5)


def test_trajectory_outputs(tmp_path):
    b = BundleSpec.constant_field("U1", 3, {(0, 0, 1): 1.0})
    r = lorentz_compare(b, state("U1", 1), 0.5, 1e-2)
    r["trajectory"].write_csv(tmp_path / "traj.csv")
    lines = (tmp_path / "traj.csv").read_text().splitlines()
    assert lines[0] == "t,x0,x1,x2,u0,u1,u2,q0"
    assert len(lines) == 52
    summary = json.loads(summary_json(r))
    assert list(summary) == ["distance", "charge_drift", "energy_drift"]
