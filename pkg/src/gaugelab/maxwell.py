"""Electromagnetism on Minkowski charts as the abelian gauge theory.

Coordinates are ordered (x, y, z, t) with metric signs (+, +, +, -).  The
field strength is ``F = *_S B + E ^ dt``, so with the component order of
:func:`gaugelab.forms.basis`::

    F_xy = Bz, F_xz = -By, F_yz = Bx, F_xt = Ex, F_yt = Ey, F_zt = Ez

and the current is ``J = j_x dx + j_y dy + j_z dz - rho dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .forms import FrameMetric
from .grid import Chart, FormField, ext_d, star

# positions of (xy, xz, xt, yz, yt, zt) in the lexicographic 2-form basis
_XY, _XZ, _XT, _YZ, _YT, _ZT = range(6)

# Sign relating *d*F to J, frozen from the static oracle E = (x, 0, 0),
# rho = div E = 1 (see tests/test_maxwell.py).
CURRENT_SIGN = 1

# Sign in the raised Lorentz co-force, q (E + s v x B); frozen from the
# component expansion F(., v) with B = (0, 0, B0), v = (v, 0, 0).
LORENTZ_SIGN = 1


def minkowski_torus(n: int, length: float = 2 * math.pi) -> Chart:
    return Chart.torus((n,) * 4, length, FrameMetric.minkowski(), id="minkowski-torus")


def minkowski_box(n: int, lower=-1.0, upper=1.0) -> Chart:
    return Chart.box((n,) * 4, lower, upper, FrameMetric.minkowski(), id="minkowski-box")


def _check_chart(chart: Chart):
    if chart.ndim != 4 or chart.metric.eta != (1, 1, 1, -1):
        raise DomainError("electromagnetism needs a 4D chart with signature (+,+,+,-)")


def _fields3(chart, V, name):
    arrs = [np.broadcast_to(np.asarray(v, dtype=float), chart.dims) for v in V]
    if len(arrs) != 3:
        raise ShapeError(f"{name} needs three components")
    return arrs


def assemble_F(chart: Chart, E, B) -> FormField:
    _check_chart(chart)
    Ex, Ey, Ez = _fields3(chart, E, "E")
    Bx, By, Bz = _fields3(chart, B, "B")
    data = np.stack([Bz, -By, Ex, Bx, Ey, Ez])
    return FormField(chart, 2, data)


def extract_EB(F: FormField) -> tuple[np.ndarray, np.ndarray]:
    d = F.data
    E = np.stack([d[_XT], d[_YT], d[_ZT]])
    B = np.stack([d[_YZ], -d[_XZ], d[_XY]])
    return E, B


def assemble_J(chart: Chart, rho, j) -> FormField:
    _check_chart(chart)
    jx, jy, jz = _fields3(chart, j, "j")
    r = np.broadcast_to(np.asarray(rho, dtype=float), chart.dims)
    return FormField(chart, 1, np.stack([jx, jy, jz, -r]))


@dataclass(frozen=True, eq=False)
class EMField:
    chart: Chart
    E: tuple
    B: tuple
    rho: object = 0.0
    j: tuple = (0.0, 0.0, 0.0)

    @property
    def F(self) -> FormField:
        return assemble_F(self.chart, self.E, self.B)

    @property
    def J(self) -> FormField:
        return assemble_J(self.chart, self.rho, self.j)


def source_form(F: FormField) -> FormField:
    """*d*F, the left-hand side of the inhomogeneous equations."""
    return star(ext_d(star(F)))


def maxwell_residuals(em, J: FormField | None = None, layers: int = 0) -> tuple[float, float]:
    """(sup |dF|, sup |*d*F - J|) from an :class:`EMField` or a 2-form plus J."""
    if isinstance(em, EMField):
        F, J = em.F, em.J
    else:
        F = em
        if J is None:
            J = FormField.zeros(F.chart, 1)
    homog = ext_d(F).sup_norm(layers)
    inhom = (source_form(F) - J.scale(CURRENT_SIGN)).sup_norm(layers)
    return homog, inhom


def potential_to_F(A: FormField) -> FormField:
    if A.degree != 1:
        raise ShapeError("potential must be a 1-form")
    return ext_d(A)


def continuity_residual(J: FormField, layers: int = 0) -> float:
    """sup |d *J|."""
    if J.degree != 1:
        raise ShapeError("current must be a 1-form")
    return ext_d(star(J)).sup_norm(layers)


def field_matrix(F: FormField, index) -> np.ndarray:
    """Antisymmetric 4x4 matrix F(e_a, e_b) at a grid index."""
    M = np.zeros((4, 4))
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    for k, (a, b) in enumerate(pairs):
        v = float(F.data[(k,) + tuple(index)])
        M[a, b], M[b, a] = v, -v
    return M


def lorentz_coforce(F: FormField, v, q: float, index) -> np.ndarray:
    """Covector q F(., v) at grid point ``index``; v = (vx, vy, vz, vt)."""
    return q * field_matrix(F, index) @ np.asarray(v, dtype=float)


def raise_index(covector, metric: FrameMetric | None = None) -> np.ndarray:
    metric = metric or FrameMetric.minkowski()
    return np.asarray(metric.eta, dtype=float) * np.asarray(covector)


# --- scenarios ------------------------------------------------------------------


def plane_wave(chart: Chart, amplitude: float = 1.0) -> EMField:
    """E = (cos(z - t), 0, 0), B = (0, cos(z - t), 0): a vacuum solution."""
    x, y, z, t = chart.coords()
    w = amplitude * np.cos(z - t)
    zero = np.zeros(chart.dims)
    return EMField(chart, (np.broadcast_to(w, chart.dims), zero, zero), (zero, np.broadcast_to(w, chart.dims), zero))


def uniform_B(chart: Chart, B0: float = 1.0) -> EMField:
    return EMField(chart, (0.0, 0.0, 0.0), (0.0, 0.0, B0))


def uniform_E(chart: Chart, E0: float = 1.0) -> EMField:
    return EMField(chart, (E0, 0.0, 0.0), (0.0, 0.0, 0.0))


def uniform_B_potential(chart: Chart, B0: float = 1.0) -> FormField:
    """A = -B0 y dx, whose exterior derivative is B0 dx ^ dy (box charts)."""
    x, y, z, t = chart.coords()
    comps = {(1,): np.broadcast_to(-B0 * y, chart.dims)}
    return FormField.from_components(chart, 1, comps)


def uniform_E_potential(chart: Chart, E0: float = 1.0) -> FormField:
    """A = E0 x dt, so dA = E0 dx ^ dt (box charts)."""
    x, y, z, t = chart.coords()
    return FormField.from_components(chart, 1, {(4,): np.broadcast_to(E0 * x, chart.dims)})


def mismatched_charge(chart: Chart, rho0: float = 1.0) -> EMField:
    """Uniform charge with a periodic field that cannot carry it (violation)."""
    x, y, z, t = chart.coords()
    E = (np.broadcast_to(np.sin(x), chart.dims), 0.0, 0.0)
    return EMField(chart, E, (0.0, 0.0, 0.0), rho=rho0)
