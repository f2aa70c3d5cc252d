import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm as scipy_expm

from gaugelab import lie
from gaugelab.errors import GroupError

GROUPS = ["U1", "SU2", "SO3"]


@pytest.mark.parametrize("group", GROUPS)
def test_basis_is_orthonormal_for_negative_trace(group):
    B = lie.algebra_basis(group)
    gram = -np.real(np.einsum("aij,bji->ab", B, B))
    assert np.allclose(gram, np.eye(len(B)))


@pytest.mark.parametrize("group", GROUPS)
def test_structure_constants_reproduce_brackets(group):
    B = lie.algebra_basis(group)
    C = lie.structure_constants(group)
    for s in range(len(B)):
        for b in range(len(B)):
            br = B[s] @ B[b] - B[b] @ B[s]
            assert np.allclose(br, np.einsum("g,gij->ij", C[:, s, b], B))


def test_su2_structure_constant_norm():
    C = lie.structure_constants("SU2")
    assert np.sum(C**2) == pytest.approx(12.0)
    assert abs(C[2, 0, 1]) == pytest.approx(np.sqrt(2))


@pytest.mark.parametrize("group", GROUPS)
@given(seed=st.integers(0, 2**31 - 1))
def test_components_round_trip(group, seed):
    rng = np.random.default_rng(seed)
    k = len(lie.algebra_basis(group))
    c = rng.normal(size=(3, k))
    assert np.allclose(lie.algebra_components(lie.from_components(c, group), group), c)


@pytest.mark.parametrize("group", GROUPS)
@given(seed=st.integers(0, 2**31 - 1))
def test_closed_form_exponential_matches_scipy(group, seed):
    rng = np.random.default_rng(seed)
    k = len(lie.algebra_basis(group))
    X = lie.from_components(rng.normal(scale=2.0, size=k), group)
    assert np.allclose(lie.expm(X), scipy_expm(X), atol=1e-12)
    assert lie.group_defect(lie.expm(X), group) < 1e-12


@given(seed=st.integers(0, 2**31 - 1))
def test_project_group_is_nearest_and_idempotent(seed):
    rng = np.random.default_rng(seed)
    g = lie.expm(lie.from_components(rng.normal(size=3), "SU2"))
    noisy = g + 1e-6 * rng.normal(size=(2, 2))
    p = lie.project_group(noisy, "SU2")
    assert lie.group_defect(p, "SU2") < 1e-13
    assert np.linalg.norm(p - g) < 1e-5
    assert np.allclose(lie.project_group(p, "SU2"), p)


def test_rotation_angle_axis_of_known_rotation():
    R = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    angle, axis = lie.rotation_angle_axis(R)
    assert angle == pytest.approx(np.pi / 2)
    assert np.allclose(axis, [0, 0, 1])


def test_unknown_group():
    with pytest.raises(GroupError):
        lie.algebra_basis("SU3")
