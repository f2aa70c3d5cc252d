"""Yang-Mills action, field equation residual, gradient flow, duality tools."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import lie
from .connection import ConnectionState, cov_ext_derivative, curvature
from .errors import ConvergenceError, DegreeError, DomainError
from .forms import basis, degree_tables
from .grid import (
    Chart,
    FormField,
    codiff_sign,
    inner,
    integrate_top,
    l2_norm,
    star,
    trace_field,
    wedge_fields,
)


@dataclass(frozen=True)
class YMConfig:
    step_size: float = 0.05
    tol: float = 1e-12
    rel_tol: float = 0.0
    max_iter: int = 500
    record_every: int = 1
    min_step: float = 1e-14

    def __post_init__(self):
        if self.step_size <= 0 or self.tol <= 0:
            raise ValueError("step_size and tol must be positive")
        if self.max_iter < 0 or self.record_every < 1:
            raise ValueError("max_iter >= 0 and record_every >= 1 required")


@dataclass
class FlowTrace:
    rows: list = field(default_factory=list)

    def append(self, iteration: int, action: float, residual: float):
        if self.rows and iteration <= self.rows[-1][0]:
            raise ValueError("iterations must increase")
        self.rows.append((int(iteration), float(action), float(residual)))

    @property
    def actions(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "action", "residual"])
            for it, s, r in self.rows:
                w.writerow([it, format(s, ".17g"), format(r, ".17g")])


def ym_action(c: ConnectionState) -> float:
    """S = -integral of tr(Omega ^ *Omega) = <<Omega, Omega>>."""
    F = curvature(c)
    density = trace_field(wedge_fields(F, star(F), "matrix_contract"))
    return -integrate_top(FormField(c.chart, density.degree, np.real(density.data)))


def ym_action_inner(c: ConnectionState) -> float:
    """Same action through the L2 pairing (independent route)."""
    F = curvature(c)
    return inner(F, F)


def ym_gradient(c: ConnectionState, F: FormField | None = None) -> FormField:
    """Covariant codifferential of the curvature, sign * D * Omega."""
    F = curvature(c) if F is None else F
    n = c.chart.ndim
    out = star(cov_ext_derivative(c, star(F), adjoint_rep=True))
    return out if codiff_sign(n, 2) > 0 else -out


def ym_residual(c: ConnectionState, layers: int = 0) -> float:
    """L2 norm of D(*Omega), optionally over the interior only."""
    F = curvature(c)
    return l2_norm(cov_ext_derivative(c, star(F), adjoint_rep=True), layers)


def _project(c: ConnectionState, data: np.ndarray) -> ConnectionState:
    return ConnectionState.from_components(c.chart, c.group, lie.project_algebra(data, c.tag), c.transitions)


def ym_flow(c: ConnectionState, cfg: YMConfig = YMConfig()) -> tuple[ConnectionState, FlowTrace]:
    """Steepest descent omega <- omega - step * grad with step halving on increase.

    Stops when the residual drops below ``tol * (1 + ||Omega||)`` or below
    ``rel_tol`` times the initial residual, or after ``max_iter`` accepted
    steps.  Accepted steps never increase the action.
    """
    trace = FlowTrace()
    S = ym_action(c)
    F = curvature(c)
    grad = ym_gradient(c, F)
    res = l2_norm(grad)
    res0 = res
    trace.append(0, S, res)

    def done(res, F):
        return res <= cfg.tol * (1.0 + l2_norm(F)) or (cfg.rel_tol > 0 and res <= cfg.rel_tol * res0)

    step = cfg.step_size
    it = 0
    while it < cfg.max_iter and not done(res, F):
        while True:
            trial = _project(c, c.omega.data - step * grad.data)
            S_new = ym_action(trial)
            if S_new <= S:
                break
            step *= 0.5
            if step < cfg.min_step:
                raise ConvergenceError("step size underflow in Yang-Mills flow", residual=res, trace=trace)
        it += 1
        c, S = trial, S_new
        F = curvature(c)
        grad = ym_gradient(c, F)
        res = l2_norm(grad)
        if it % cfg.record_every == 0 or done(res, F) or it == cfg.max_iter:
            trace.append(it, S, res)
    return c, trace


# --- duality ---------------------------------------------------------------------


def _check_middle(F: FormField):
    if F.chart.ndim != 4 or F.degree != 2:
        raise DegreeError("self-duality needs a 2-form in dimension 4")
    if F.metric.neg_count:
        raise DomainError("self-duality split needs Euclidean signature")


def sd_asd_split(F: FormField) -> tuple[FormField, FormField]:
    """(F+, F-) with F+- = (F +- *F) / 2."""
    _check_middle(F)
    sF = star(F)
    return (F + sF).scale(0.5), (F - sF).scale(0.5)


def duality_defect(F: FormField, layers: int = 0) -> float:
    """sup ||F - *F|| / sup ||F|| (0 for self-dual fields)."""
    _check_middle(F)
    top = F.sup_norm(layers)
    return (F - star(F)).sup_norm(layers) / top if top else 0.0


# --- instanton ----------------------------------------------------------------------

# position in the quaternion x = x_r + x_i i + x_j j + x_k k of each chart axis;
# the real part sits on the last axis (an odd relabelling of x0..x3) so that the
# curvature is self-dual for the orientation e^1 ^ e^2 ^ e^3 ^ e^4
BPST_AXES = (1, 2, 3, 0)


def _quat_mul(a, b):
    a0, a1, a2, a3 = a
    b0, b1, b2, b3 = b
    return (
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    )


def bpst_sample(chart: Chart, scale: float = 1.0, axes=BPST_AXES) -> ConnectionState:
    """omega = Im( conj(x) dx / (scale^2 + |x|^2) ) as an su(2)-valued 1-form.

    Imaginary quaternion units i, j, k map to -i sigma_1, -i sigma_2, -i sigma_3.
    ``axes[q]`` is the chart axis carrying quaternion slot q (0 = real part).
    """
    if chart.ndim != 4 or chart.metric.neg_count:
        raise DomainError("the instanton sample needs a Euclidean 4-dimensional chart")
    X = chart.coords()
    q = [np.broadcast_to(X[axes[s]], chart.dims) for s in range(4)]
    r2 = sum(v * v for v in q)
    conj = (q[0], -q[1], -q[2], -q[3])
    comps = np.zeros((4,) + chart.dims + (2, 2), dtype=complex)
    for slot in range(4):
        unit = [0.0, 0.0, 0.0, 0.0]
        unit[slot] = 1.0
        prod = _quat_mul(conj, unit)
        im = np.stack(prod[1:], axis=-1) / (scale**2 + r2)[..., None]
        comps[axes[slot]] = np.einsum("...m,mij->...ij", im, lie.QUATERNION_UNITS)
    return ConnectionState.from_components(chart, "SU2", comps)


# --- conformal rescaling of the star ------------------------------------------------


def conformal_star(F: FormField, f: np.ndarray, on: str = "forms") -> FormField:
    """Hodge star of the metric f^2 g, built from its defining relation.

    For each basis element the result is the unique form with
    ``e^K ^ *~e^I = <e^K, e^I>~ mu~``.  On p-forms the rescaled pairing is
    ``f^(-2p) <,>`` and ``mu~ = f^n mu``; ``on="multivectors"`` uses the dual
    scalings ``f^(2p)`` and ``f^(-n)`` instead.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise DomainError("conformal factor must be positive")
    f = np.broadcast_to(f, F.chart.dims)
    n, p = F.chart.ndim, F.degree
    if on == "forms":
        pair_scale, vol_scale = f ** (-2 * p), f**n
    elif on == "multivectors":
        pair_scale, vol_scale = f ** (2 * p), f ** (-n)
    else:
        raise ValueError("on must be 'forms' or 'multivectors'")
    factor = pair_scale * vol_scale
    factor = factor.reshape(factor.shape + (1,) * len(F.value_shape))
    # wedge table between degree p and n - p: (top, i, j, sign)
    table = {(i, j): s for _, i, j, s in degree_tables(p, n - p, n)}
    metric = F.metric
    out = np.zeros((math.comb(n, n - p),) + F.data.shape[1:], dtype=F.data.dtype)
    for i, I in enumerate(basis(p, n)):
        # only e^I ^ e^J with J = complement can be nonzero; solve for its coefficient
        for j, J in enumerate(basis(n - p, n)):
            s = table.get((i, j))
            if s is not None:
                out[j] += (metric.sigma(I) * s) * factor * F.data[i]
    return FormField(F.chart, n - p, out, F.tag)


def conformal_star_check(F: FormField, f, on: str = "forms") -> float:
    """sup || *~F - f^k *F || with k = n - 2p (forms) or 2p - n (multivectors)."""
    f = np.asarray(f, dtype=float)
    n, p = F.chart.ndim, F.degree
    k = n - 2 * p if on == "forms" else 2 * p - n
    scaled = star(F).scale(np.broadcast_to(f, F.chart.dims) ** k)
    return (conformal_star(F, f, on) - scaled).sup_norm()
