"""Connections on trivialised charts: curvature, gauge changes, covariant d.

Conventions (left action): a gauge change ``g`` maps
``omega -> g omega g^-1 - (dg) g^-1`` (equivalently ``g omega g^-1 + g d(g^-1)``)
and ``Omega -> g Omega g^-1``.  The curvature is ``Omega = d omega + omega ^ omega``
with the matrix-product wedge; the minus sign on the Maurer-Cartan term is
the one compatible with that curvature, so pure gauge ``-(dg) g^-1`` is flat.  On the fundamental representation ``D eta = d eta + omega ^ eta``; on
the adjoint representation ``D a = d a + omega ^ a - (-1)^p a ^ omega``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import lie
from .errors import GroupError, ShapeError, TopologyError
from .forms import check_algebra
from .grid import Chart, FormField, ext_d, partial, wedge_fields


@dataclass(frozen=True, eq=False)
class GaugeMap:
    """Group-valued function on a chart.

    ``generator`` optionally records an algebra-valued ``X`` with
    ``g = exp(X)``.  For abelian groups it lets ``(dg) g^-1 = dX`` be formed
    with the same stencil as :func:`ext_d`, so discrete curvature transforms
    exactly.  ``derivative`` optionally supplies analytic ``d_k g`` as an array
    shaped ``(n, *dims, k, k)``.
    """

    chart: Chart
    group: str
    values: np.ndarray
    generator: np.ndarray | None = None
    derivative: np.ndarray | None = None

    def __post_init__(self):
        k = lie.matrix_size(self.group)
        v = np.asarray(self.values)
        if v.shape != self.chart.dims + (k, k):
            raise ShapeError(f"gauge map shape {v.shape} != {self.chart.dims + (k, k)}")
        if lie.group_defect(v, self.group) > 1e-12 * max(1.0, float(np.max(np.abs(v)))):
            raise GroupError(f"values are not in {self.group} to 1e-12")
        if self.group == "SO3" and np.iscomplexobj(v):
            v = np.real(v)
        v = v.view()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def identity(cls, chart: Chart, group: str) -> "GaugeMap":
        return cls(chart, group, lie.identity(group, chart.dims))

    @classmethod
    def constant(cls, chart: Chart, group: str, g: np.ndarray) -> "GaugeMap":
        g = np.asarray(g)
        vals = np.broadcast_to(g, chart.dims + g.shape).copy()
        return cls(chart, group, vals, derivative=np.zeros((chart.ndim,) + vals.shape, vals.dtype))

    @classmethod
    def exp(cls, chart: Chart, group: str, X: np.ndarray) -> "GaugeMap":
        """g = exp(X) for an algebra-valued array ``X`` shaped (*dims, k, k)."""
        X = lie.project_algebra(np.asarray(X), lie.algebra_tag(group))
        g = lie.project_group(lie.expm(X), group)
        return cls(chart, group, g, generator=X)

    @property
    def inverse_values(self) -> np.ndarray:
        return lie.dagger(self.values)

    def maurer_cartan(self, scheme: str = "central") -> np.ndarray:
        """Components of (dg) g^-1, shape (n, *dims, k, k), projected to the algebra."""
        n = self.chart.ndim
        tag = lie.algebra_tag(self.group)
        if self.generator is not None and self.group == "U1":
            return np.stack([partial(self.generator, k, self.chart, scheme) for k in range(n)])
        if self.derivative is not None:
            dg = self.derivative
        else:
            dg = np.stack([partial(self.values, k, self.chart, scheme) for k in range(n)])
        return lie.project_algebra(dg @ self.inverse_values, tag)


@dataclass(frozen=True, eq=False)
class ConnectionState:
    """Matrix of connection 1-forms on one chart, plus optional transitions."""

    chart: Chart
    group: str
    omega: FormField
    transitions: dict | None = None

    def __post_init__(self):
        tag = lie.algebra_tag(self.group)
        k = lie.matrix_size(self.group)
        if self.omega.degree != 1:
            raise ShapeError("connection form must have degree 1")
        if self.omega.value_shape != (k, k):
            raise ShapeError(f"{self.group} connection needs {k}x{k} values")
        if self.omega.chart != self.chart:
            raise ShapeError("connection form lives on another chart")
        if not check_algebra(self.omega.data, tag, 1e-12):
            raise GroupError(f"connection values are not in {tag}")
        if self.omega.tag != tag:
            object.__setattr__(self, "omega", FormField(self.chart, 1, self.omega.data, tag))

    @classmethod
    def from_components(cls, chart: Chart, group: str, comps: np.ndarray, transitions=None):
        """From an array (n, *dims, k, k) of omega(d/dx_k)."""
        return cls(chart, group, FormField(chart, 1, comps, lie.algebra_tag(group)), transitions)

    @classmethod
    def trivial(cls, chart: Chart, group: str) -> "ConnectionState":
        k = lie.matrix_size(group)
        dtype = float if group == "SO3" else complex
        return cls.from_components(chart, group, np.zeros((chart.ndim,) + chart.dims + (k, k), dtype))

    @property
    def tag(self) -> str:
        return lie.algebra_tag(self.group)

    def __add__(self, kappa: FormField) -> "ConnectionState":
        if kappa.degree != 1 or kappa.value_shape != self.omega.value_shape:
            raise ShapeError("perturbation must be a 1-form with the same matrix shape")
        return ConnectionState(self.chart, self.group, self.omega + kappa, self.transitions)


def curvature(c: ConnectionState, scheme: str = "central") -> FormField:
    """Omega = d omega + omega ^ omega."""
    om = c.omega
    out = ext_d(om, scheme) + wedge_fields(om, om, "matrix_contract")
    return FormField(c.chart, 2, out.data, c.tag)


def gauge_transform(c: ConnectionState, g: GaugeMap, scheme: str = "central") -> ConnectionState:
    """omega~ = g omega g^-1 - (dg) g^-1, so that curvature transforms by conjugation."""
    if g.group != c.group:
        raise GroupError(f"gauge map group {g.group} != connection group {c.group}")
    if g.chart != c.chart:
        raise ShapeError("gauge map and connection live on different charts")
    mc = g.maurer_cartan(scheme)
    new = g.values @ c.omega.data @ g.inverse_values - mc
    new = lie.project_algebra(new, c.tag)
    return ConnectionState.from_components(c.chart, c.group, new, c.transitions)


def pure_gauge(g: GaugeMap, scheme: str = "central") -> ConnectionState:
    """Flat connection -(dg) g^-1, the gauge transform of the trivial one."""
    return gauge_transform(ConnectionState.trivial(g.chart, g.group), g, scheme)


def conjugate(a: FormField, g: GaugeMap) -> FormField:
    """Pointwise g a g^-1 (tensorial transformation)."""
    return FormField(a.chart, a.degree, g.values @ a.data @ g.inverse_values, a.tag)


def _check_matrix_form(c: ConnectionState, a: FormField):
    if a.chart != c.chart:
        raise ShapeError("form and connection live on different charts")
    if a.value_shape != c.omega.value_shape:
        raise ShapeError(f"value shape {a.value_shape} does not match connection {c.omega.value_shape}")


def cov_ext_derivative(
    c: ConnectionState, a: FormField, adjoint_rep: bool = True, scheme: str = "central"
) -> FormField:
    """Covariant exterior derivative on the adjoint or fundamental representation."""
    _check_matrix_form(c, a)
    out = ext_d(a, scheme) + wedge_fields(c.omega, a, "matrix_contract")
    if adjoint_rep:
        right = wedge_fields(a, c.omega, "matrix_contract")
        out = out + right if a.degree % 2 else out - right
    return FormField(c.chart, a.degree + 1, out.data, a.tag)


def curvature_action(c: ConnectionState, a: FormField, adjoint_rep: bool = True) -> FormField:
    """Expected D(D a): Omega ^ a - a ^ Omega (adjoint) or Omega ^ a (fundamental)."""
    _check_matrix_form(c, a)
    F = curvature(c)
    out = wedge_fields(F, a, "matrix_contract")
    if adjoint_rep:
        out = out - wedge_fields(a, F, "matrix_contract")
    return out


def dd_residual(c: ConnectionState, a: FormField, adjoint_rep: bool = True, layers: int = 0) -> float:
    """Sup norm of D(D a) minus the curvature action."""
    DDa = cov_ext_derivative(c, cov_ext_derivative(c, a, adjoint_rep), adjoint_rep)
    return (DDa - curvature_action(c, a, adjoint_rep)).sup_norm(layers)


def bianchi_residual(c: ConnectionState, layers: int = 0) -> float:
    """Sup norm of d Omega + omega ^ Omega - Omega ^ omega."""
    return cov_ext_derivative(c, curvature(c), adjoint_rep=True).sup_norm(layers)


def curvature_shift(c: ConnectionState, kappa: FormField) -> FormField:
    """Curvature of the perturbed connection omega + kappa."""
    return curvature(c + kappa)


def curvature_shift_residual(c: ConnectionState, kappa: FormField, layers: int = 0) -> float:
    """Sup norm of Omega(omega + kappa) - (Omega + D kappa + kappa ^ kappa)."""
    expected = (
        curvature(c)
        + cov_ext_derivative(c, kappa, adjoint_rep=True)
        + wedge_fields(kappa, kappa, "matrix_contract")
    )
    return (curvature_shift(c, kappa) - expected).sup_norm(layers)


def cocycle_check(transitions: dict, tol: float = 0.1) -> dict:
    """Consistency of transition maps sampled on common overlap points.

    ``transitions[(a, b)]`` is an array (..., k, k) of g_ab.  Pairs are checked
    for g_ab g_ba = Id; every triple of charts for g_ab g_bc g_ca = Id.  Missing
    data for a pair or triple raises :class:`TopologyError`.
    """
    charts = sorted({x for key in transitions for x in key})

    def get(a, b):
        if (a, b) in transitions:
            return np.asarray(transitions[(a, b)])
        if (b, a) in transitions:
            return lie.dagger(np.asarray(transitions[(b, a)]))
        raise TopologyError(f"no transition data between {a!r} and {b!r}")

    def dev(m):
        eye = np.eye(m.shape[-1])
        return float(np.max(np.abs(m - eye), initial=0.0))

    pair = 0.0
    for a, b in transitions:
        if (b, a) in transitions:
            pair = max(pair, dev(np.asarray(transitions[(a, b)]) @ np.asarray(transitions[(b, a)])))
    triple = None
    worst = None
    if len(charts) >= 3:
        triple = 0.0
        for a, b, cc in combinations(charts, 3):
            r = dev(get(a, b) @ get(b, cc) @ get(cc, a))
            if r > triple:
                triple, worst = r, (a, b, cc)
    residual = max(pair, triple or 0.0)
    return {
        "pair_residual": pair,
        "triple_residual": triple,
        "worst_triple": worst,
        "residual": residual,
        "flagged": residual > tol,
    }


def plaquette_curvature(c: ConnectionState, axes: tuple[int, int]) -> np.ndarray:
    """Curvature estimate from elementary plaquette holonomies (cross-check only).

    Links are ``exp(-h omega_k)`` at edge midpoints; the counter-clockwise
    plaquette holonomy is ``Id - h_i h_j Omega_ij + O(h^3)``.  Values are
    located at plaquette centres.  Needs periodic axes.
    """
    i, j = axes
    ch = c.chart
    if not (ch.periodic[i] and ch.periodic[j]):
        raise ShapeError("plaquettes need periodic axes")
    om = c.omega.data
    hi, hj = ch.spacing[i], ch.spacing[j]

    def link(k, h):
        mid = 0.5 * (om[k] + np.roll(om[k], -1, axis=k))
        return lie.expm(-h * mid)

    Ui, Uj = link(i, hi), link(j, hj)
    Ui_up = np.roll(Ui, -1, axis=j)
    Uj_right = np.roll(Uj, -1, axis=i)
    P = lie.dagger(Uj) @ lie.dagger(Ui_up) @ Uj_right @ Ui
    eye = np.eye(P.shape[-1])
    return lie.project_algebra((eye - P) / (hi * hj), c.tag)
