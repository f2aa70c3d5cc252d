import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaugelab.errors import DegreeError, DomainError, ShapeError
from gaugelab.forms import FrameMetric, form_inner, hodge_star, wedge
from gaugelab.grid import (
    Chart,
    FormField,
    PatchedField,
    TwoPatchSphere,
    codifferential,
    ext_d,
    harmonic_basis,
    hodge_decompose,
    inner,
    integrate_top,
    laplacian,
    laplacian_matrix,
    partial,
    read_formfield,
    star,
    wedge_fields,
    write_formfield,
)
from gaugelab.samples import random_algebra_form, trig_polynomial


def torus2(N):
    return Chart.torus((N, N))


def one_form(chart, seed):
    rng = np.random.default_rng(seed)
    return FormField.from_components(
        chart, 1, {(k,): trig_polynomial(chart, rng, terms=5, max_mode=3) for k in range(1, chart.ndim + 1)}
    )


# --- charts ----------------------------------------------------------------------


def test_resolution_floor():
    with pytest.raises(DomainError):
        Chart.torus((3, 8))


def test_box_includes_endpoints_and_trapezoid_weights():
    c = Chart.box((5, 9), -1.0, 1.0)
    assert c.axis_coords(0)[[0, -1]].tolist() == [-1.0, 1.0]
    assert c.weights().sum() == pytest.approx(4.0)


def test_layers_for_margin_tracks_physical_distance():
    a, b = Chart.box((16,) * 2, -2, 2), Chart.box((32,) * 2, -2, 2)
    m = 0.5
    assert a.layers_for_margin(m) * a.spacing[0] == pytest.approx(b.layers_for_margin(m) * b.spacing[0], abs=a.spacing[0])


# --- derivatives -------------------------------------------------------------------


@pytest.mark.parametrize("make", [lambda N: Chart.torus((N, N)), lambda N: Chart.box((N, N), 0.0, 2.0)])
def test_d_of_function_converges_second_order(make):
    errs = []
    for N in (32, 64):
        c = make(N)
        x, y = c.coords()
        f = FormField.from_components(c, 0, {(): np.sin(x) * np.cos(2 * y)})
        df = ext_d(f)
        e1 = np.max(np.abs(df.component((1,)) - np.cos(x) * np.cos(2 * y)))
        e2 = np.max(np.abs(df.component((2,)) + 2 * np.sin(x) * np.sin(2 * y)))
        errs.append(max(e1, e2))
    assert math.log2(errs[0] / errs[1]) > 1.8


def test_dd_vanishes_on_torus():
    c = Chart.torus((16, 16, 16))
    a = one_form(c, 3)
    assert ext_d(ext_d(a)).sup_norm() < 1e-12


def test_one_sided_scheme_needs_periodic_axis():
    c = Chart.box((8, 8), 0.0, 1.0)
    with pytest.raises(DomainError):
        partial(np.zeros(c.dims), 0, c, "forward")


@given(st.integers(0, 2**31 - 1))
def test_codifferential_is_adjoint_of_d(seed):
    c = torus2(16)
    a = one_form(c, seed)
    rng = np.random.default_rng(seed + 1)
    b = FormField.from_components(c, 2, {(1, 2): trig_polynomial(c, rng, max_mode=3)})
    assert inner(ext_d(a), b) == pytest.approx(inner(a, codifferential(b)), abs=1e-10)


def test_laplacian_of_eigenfunction():
    errs = []
    for N in (32, 64):
        c = Chart.torus((N, N, N))
        x, y, z = c.coords()
        f = FormField.from_components(c, 0, {(): np.sin(x + 2 * z) * np.ones(c.dims)})
        errs.append(np.max(np.abs(laplacian(f, "central").data[0] - 5 * np.sin(x + 2 * z))))
    assert math.log2(errs[0] / errs[1]) > 1.8


def test_star_requires_orthonormal_chart():
    c = Chart.box((8, 8), 0.0, 1.0, orthonormal=False)
    with pytest.raises(DomainError):
        star(FormField.zeros(c, 1))


@given(st.integers(0, 2**31 - 1))
def test_field_star_matches_pointwise_star(seed):
    c = Chart.torus((6, 6, 6, 6), metric=FrameMetric.minkowski())
    rng = np.random.default_rng(seed)
    a = FormField(c, 2, rng.normal(size=(6,) + c.dims))
    idx = tuple(rng.integers(0, 6, size=4))
    assert star(a).at(idx).allclose(hodge_star(a.at(idx)))


def test_wedge_fields_matches_pointwise(rng):
    c = Chart.torus((5, 5, 5))
    a = random_algebra_form(c, "SU2", 1, rng, max_mode=1)
    b = random_algebra_form(c, "SU2", 1, rng, max_mode=1)
    w = wedge_fields(a, b, "commutator")
    idx = (1, 2, 3)
    assert w.at(idx).allclose(wedge(a.at(idx), b.at(idx), "commutator"), atol=1e-12)


def test_field_arithmetic_errors():
    c = torus2(8)
    with pytest.raises(DegreeError):
        FormField.zeros(c, 1) + FormField.zeros(c, 2)
    with pytest.raises(ShapeError):
        FormField.zeros(c, 1) + FormField.zeros(c, 1, (2, 2))
    with pytest.raises(ShapeError):
        FormField(c, 1, np.zeros((2, 8, 7)))


# --- Hodge decomposition -------------------------------------------------------------


def symbol_kernel_count(N, ncomp):
    """Oracle: the mimetic Laplacian on T^2 is diagonal in Fourier space with
    eigenvalue 4 (sin^2(pi k1/N) + sin^2(pi k2/N)) / h^2 per component."""
    k = np.arange(N)
    s = np.sin(np.pi * k / N) ** 2
    return ncomp * int(np.sum(np.isclose(s[:, None] + s[None, :], 0.0)))


def test_harmonic_dimension_against_dense_spectrum():
    c = torus2(8)
    L = laplacian_matrix(c, 1).toarray()
    vals = np.linalg.eigvalsh(L)
    assert int(np.sum(np.abs(vals) < 1e-9)) == symbol_kernel_count(8, 2) == 2
    assert harmonic_basis(c, 1).shape[1] == 2


def test_harmonic_basis_for_functions_and_top_forms():
    c = torus2(8)
    assert harmonic_basis(c, 0).shape[1] == 1
    assert harmonic_basis(c, 2).shape[1] == 1


def test_decomposition_recovers_known_parts():
    c = torus2(32)
    x, y = c.coords()
    f = np.sin(x) * np.cos(y)
    g = np.cos(2 * x + y)
    # exact part d f, coexact part delta (g dx^dy), harmonic part 0.3 dx - 0.2 dy
    exact = ext_d(FormField.from_components(c, 0, {(): f}), "forward")
    co = codifferential(FormField.from_components(c, 2, {(1, 2): g}), "backward")
    harm = FormField.from_components(c, 1, {(1,): np.full(c.dims, 0.3), (2,): np.full(c.dims, -0.2)})
    r = hodge_decompose(exact + co + harm)
    assert (r.exact - exact).sup_norm() < 1e-8
    assert (r.coexact - co).sup_norm() < 1e-8
    assert (r.harmonic - harm).sup_norm() < 1e-10
    assert r.harmonic_dim == 2


@given(st.integers(0, 2**31 - 1))
def test_decomposition_is_orthogonal_and_complete(seed):
    c = torus2(16)
    a = one_form(c, seed)
    r = hodge_decompose(a)
    assert r.residual_norm < 1e-10
    assert max(r.orthogonality.values()) < 1e-9
    assert ((r.exact + r.coexact + r.harmonic) - a).sup_norm() < 1e-9


def test_decomposition_needs_closed_chart():
    with pytest.raises(DomainError):
        hodge_decompose(FormField.zeros(Chart.box((8, 8), 0, 1), 1))


# --- integration -------------------------------------------------------------------


def test_integrate_constant_top_form():
    c = torus2(16)
    vol = FormField.from_components(c, 2, {(1, 2): np.ones(c.dims)})
    assert integrate_top(vol) == pytest.approx((2 * math.pi) ** 2)


def test_sphere_area_with_partition_of_unity():
    S = TwoPatchSphere.build()

    def area(ch):
        th = ch.coords()[0]
        return FormField.from_components(ch, 2, {(1, 2): np.sin(th) * np.ones(ch.dims)})

    assert integrate_top(PatchedField(S, area(S.north), area(S.south))) == pytest.approx(4 * math.pi, abs=1e-3)


def test_integrate_top_rejects_lower_degree():
    with pytest.raises(DegreeError):
        integrate_top(FormField.zeros(torus2(8), 1))


# --- serialization -------------------------------------------------------------------


def test_formfield_round_trip(tmp_path, rng):
    c = Chart.torus((4, 5))
    a = random_algebra_form(c, "SU2", 1, rng, max_mode=1)
    path = tmp_path / "a.txt"
    write_formfield(a, path, {"note": "sample"})
    b, header = read_formfield(path)
    assert header["note"] == "sample"
    assert b.chart == a.chart and b.degree == 1
    assert np.array_equal(a.data, b.data)
