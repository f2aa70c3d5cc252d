"""Parallel transport along sampled curves and loop holonomy.

Transport solves ``dP/dt = -omega(sigma'(t)) P`` with ``P(t0) = Id`` by the
classical fourth-order Runge-Kutta method, projecting back onto the group
after every step.  Connection coefficients along the curve come from
multilinear interpolation of the grid values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from . import lie
from .connection import ConnectionState
from .errors import CurveError, DomainError, GroupError
from .grid import Chart


# --- curves -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampledCurve:
    """Curve in chart coordinates given by samples ``(t_i, x_i)``.

    Between samples the curve is a cubic spline per smooth piece; ``breaks``
    lists sample indices where the curve has corners.  When ``func`` and
    ``deriv`` are supplied they are used instead of the spline.
    """

    chart: Chart
    t: np.ndarray
    points: np.ndarray
    closed: bool = False
    breaks: tuple[int, ...] = ()
    func: Callable | None = None
    deriv: Callable | None = None
    area: float | None = None
    _splines: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.chart.ndim or len(t) != len(pts):
            raise CurveError("points must be (len(t), chart dimension)")
        if len(t) < 2 or np.any(np.diff(t) <= 0):
            raise CurveError("curve parameter must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "points", pts)
        if self.closed and not self._coincide(pts[0], pts[-1]):
            raise CurveError("closed curve must end where it starts")
        knots = sorted({0, len(t) - 1, *self.breaks})
        object.__setattr__(self, "breaks", tuple(knots))
        if self.func is None:
            sp = []
            for a, b in zip(knots, knots[1:]):
                seg_t, seg_x = t[a : b + 1], pts[a : b + 1]
                kind = "not-a-knot" if len(seg_t) > 3 else "natural"
                sp.append(CubicSpline(seg_t, seg_x, axis=0, bc_type=kind) if len(seg_t) > 2 else _Linear(seg_t, seg_x))
            object.__setattr__(self, "_splines", sp)

    def _coincide(self, a, b, tol=1e-12):
        d = np.abs(a - b)
        for k in range(self.chart.ndim):
            if self.chart.periodic[k]:
                L = self.chart.dims[k] * self.chart.spacing[k]
                d[k] = min(d[k] % L, L - d[k] % L)
        return bool(np.all(d <= tol * max(1.0, float(np.max(np.abs(a))))))

    @property
    def pieces(self) -> list[tuple[float, float]]:
        return [(self.t[a], self.t[b]) for a, b in zip(self.breaks, self.breaks[1:])]

    def _piece(self, s):
        for k, (a, b) in enumerate(self.pieces):
            if s <= b:
                return k
        return len(self.pieces) - 1

    def position(self, s: float) -> np.ndarray:
        if self.func is not None:
            return np.asarray(self.func(s), dtype=float)
        return self._splines[self._piece(s)](s)

    def velocity(self, s: float, piece: int | None = None) -> np.ndarray:
        if self.deriv is not None:
            return np.asarray(self.deriv(s), dtype=float)
        k = self._piece(s) if piece is None else piece
        return self._splines[k](s, 1)

    def reversed(self) -> "SampledCurve":
        t0, t1 = self.t[0], self.t[-1]
        f = None if self.func is None else (lambda s, f=self.func: f(t0 + t1 - s))
        df = None if self.deriv is None else (lambda s, g=self.deriv: -np.asarray(g(t0 + t1 - s)))
        m = len(self.t) - 1
        return SampledCurve(
            self.chart, (t0 + t1 - self.t)[::-1], self.points[::-1], self.closed,
            tuple(m - b for b in self.breaks), f, df,
            None if self.area is None else -self.area,
        )

    def split(self, s: float) -> tuple["SampledCurve", "SampledCurve"]:
        """The two sub-curves on [t0, s] and [s, t1] (analytic curves only)."""
        if self.func is None:
            raise CurveError("splitting needs an analytic curve")
        n = max(8, len(self.t) // 2)
        t_a = np.linspace(self.t[0], s, n)
        t_b = np.linspace(s, self.t[-1], n)
        mk = lambda tt: SampledCurve(self.chart, tt, np.array([self.func(x) for x in tt]), False, (), self.func, self.deriv)
        return mk(t_a), mk(t_b)

    # -- constructors --------------------------------------------------------
    @classmethod
    def from_function(cls, chart, func, deriv, t0=0.0, t1=1.0, samples=64, closed=False, area=None):
        t = np.linspace(t0, t1, samples)
        pts = np.array([func(s) for s in t])
        return cls(chart, t, pts, closed, (), func, deriv, area)

    @classmethod
    def polygon(cls, chart, vertices, closed=True, area=None) -> "SampledCurve":
        """Piecewise-linear curve through ``vertices``, one unit of t per edge."""
        v = np.asarray(vertices, dtype=float)
        if closed and not np.allclose(v[0], v[-1]):
            v = np.vstack([v, v[:1]])
        t = np.arange(len(v), dtype=float)
        return cls(chart, t, v, closed, tuple(range(1, len(v) - 1)), area=area)


class _Linear:
    def __init__(self, t, x):
        self.t, self.x = t, x

    def __call__(self, s, nu=0):
        a, b = self.t[0], self.t[-1]
        slope = (self.x[-1] - self.x[0]) / (b - a)
        return slope if nu == 1 else self.x[0] + (s - a) * slope


def square_loop(chart: Chart, center, side: float, axes=(0, 1)) -> SampledCurve:
    """Counter-clockwise square in the ``axes`` plane, with its area attached."""
    c = np.asarray(center, dtype=float)
    i, j = axes
    corners = []
    for di, dj in ((-1, -1), (1, -1), (1, 1), (-1, 1), (-1, -1)):
        p = c.copy()
        p[i] += di * side / 2
        p[j] += dj * side / 2
        corners.append(p)
    return SampledCurve.polygon(chart, corners, closed=True, area=side * side)


# --- interpolation -----------------------------------------------------------------


def interpolate(chart: Chart, values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of ``values`` (shape (*dims, ...)) at ``x``."""
    n = chart.ndim
    lo_idx, frac = [], []
    for k in range(n):
        h = chart.spacing[k]
        off = 0.5 if chart.cell_centered[k] else 0.0
        u = (x[k] - chart.origin[k]) / h - off
        N = chart.dims[k]
        if chart.periodic[k]:
            i0 = math.floor(u)
            f = u - i0
            lo_idx.append((i0 % N, (i0 + 1) % N))
        else:
            tol = 1e-9
            if u < -tol or u > N - 1 + tol:
                raise DomainError(f"point {tuple(x)} lies outside chart {chart.id!r}")
            u = min(max(u, 0.0), N - 1)
            i0 = min(int(math.floor(u)), N - 2)
            f = u - i0
            lo_idx.append((i0, i0 + 1))
        frac.append(f)
    out = 0.0
    for corner in range(1 << n):
        w = 1.0
        idx = []
        for k in range(n):
            bit = (corner >> k) & 1
            w *= frac[k] if bit else 1.0 - frac[k]
            idx.append(lo_idx[k][bit])
        if w != 0.0:
            out = out + w * values[tuple(idx)]
    return out


def connection_along(c: ConnectionState, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """omega_x(v) by interpolation of each component."""
    om = c.omega.data
    A = 0.0
    for k in range(c.chart.ndim):
        if v[k] != 0.0:
            A = A + v[k] * interpolate(c.chart, om[k], x)
    if np.isscalar(A):
        k = om.shape[-1]
        A = np.zeros((k, k), dtype=om.dtype)
    return A


# --- transport -----------------------------------------------------------------------


@dataclass(frozen=True)
class TransportOp:
    group: str
    value: np.ndarray
    drift: float = 0.0
    steps: int = 0

    def __post_init__(self):
        lie.matrix_size(self.group)


def _check_group(a, b):
    if a.group != b.group:
        raise GroupError(f"cannot compose {a.group} with {b.group}")


def compose(a: TransportOp, b: TransportOp) -> TransportOp:
    """a after b, i.e. the matrix product a.value @ b.value."""
    _check_group(a, b)
    return TransportOp(a.group, a.value @ b.value, max(a.drift, b.drift), a.steps + b.steps)


def inverse(a: TransportOp) -> TransportOp:
    return TransportOp(a.group, lie.dagger(a.value), a.drift, a.steps)


def identity_op(group: str) -> TransportOp:
    return TransportOp(group, lie.identity(group))


def _rk4_piece(c, curve, piece, t0, t1, step, P, group):
    nsteps = max(1, math.ceil((t1 - t0) / step - 1e-12))
    h = (t1 - t0) / nsteps
    drift = 0.0

    def rhs(s, M):
        x = curve.position(s)
        v = curve.velocity(s, piece)
        return -connection_along(c, x, v) @ M

    s = t0
    for _ in range(nsteps):
        k1 = rhs(s, P)
        k2 = rhs(s + h / 2, P + h / 2 * k1)
        k3 = rhs(s + h / 2, P + h / 2 * k2)
        k4 = rhs(s + h, P + h * k3)
        P = P + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = max(drift, lie.group_defect(P, group))
        P = lie.project_group(P, group)
        s += h
    return P, drift, nsteps


def transport(c: ConnectionState, curve: SampledCurve, step: float = 1e-3) -> TransportOp:
    """P_sigma(t1, t0): transport from the start of the curve to its end."""
    if step <= 0:
        raise ValueError("step must be positive")
    if curve.chart != c.chart:
        raise DomainError("curve and connection live on different charts")
    P = lie.identity(c.group)
    drift, steps = 0.0, 0
    for piece, (a, b) in enumerate(curve.pieces):
        P, d, n = _rk4_piece(c, curve, piece, a, b, step, P, c.group)
        drift, steps = max(drift, d), steps + n
    return TransportOp(c.group, P, drift, steps)


def holonomy(c: ConnectionState, loop: SampledCurve, step: float = 1e-3) -> TransportOp:
    if not loop.closed:
        raise CurveError("holonomy needs a closed curve")
    return transport(c, loop, step)


def holonomy_of_legs(c: ConnectionState, legs: list[SampledCurve], step: float = 1e-3) -> TransportOp:
    """Holonomy of a loop given as consecutive legs, composed in order."""
    for a, b in zip(legs, legs[1:] + legs[:1]):
        if not np.allclose(a.position(a.t[-1]), b.position(b.t[0]), atol=1e-10):
            raise CurveError("legs do not join into a closed loop")
    total = identity_op(c.group)
    for leg in legs:
        total = compose(transport(c, leg, step), total)
    return total


def flatness_score(c: ConnectionState, loops, step: float = 1e-3) -> float:
    """Max over loops of ||holonomy - Id|| / enclosed area (Frobenius norm)."""
    worst = 0.0
    eye = lie.identity(c.group)
    for loop in loops:
        if loop.area is None or loop.area == 0:
            raise CurveError("flatness loops need a nonzero enclosed area")
        H = holonomy(c, loop, step).value
        worst = max(worst, float(np.linalg.norm(H - eye)) / abs(loop.area))
    return worst


# --- curve files ---------------------------------------------------------------------


def write_curve(curve: SampledCurve, path) -> None:
    with open(path, "w") as fh:
        inner = ",".join(str(b) for b in curve.breaks[1:-1])
        fh.write(f"# curve chart={curve.chart.id} closed={int(curve.closed)} breaks={inner}\n")
        fh.write("# t " + " ".join(curve.chart.metric.labels) + "\n")
        for s, x in zip(curve.t, curve.points):
            fh.write(" ".join(format(v, ".17g") for v in (s, *x)) + "\n")


def read_curve(chart: Chart, path, closed: bool | None = None) -> SampledCurve:
    flag = False
    breaks: tuple[int, ...] = ()
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# curve"):
                fields = dict(tok.split("=", 1) for tok in line[1:].split() if "=" in tok)
                flag = fields.get("closed") == "1"
                breaks = tuple(int(b) for b in fields.get("breaks", "").split(",") if b)
                continue
            if line.startswith("#"):
                continue
            if line.strip():
                rows.append([float(v) for v in line.split()])
    arr = np.array(rows)
    return SampledCurve(chart, arr[:, 0], arr[:, 1:], flag if closed is None else closed, breaks)
