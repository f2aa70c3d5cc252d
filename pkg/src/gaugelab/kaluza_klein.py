"""Bundle metric on P = M x G, its Levi-Civita coefficients, geodesics, curvature.

The total space carries the orthonormal frame ``e_A``: horizontal lifts
``e_i`` of a base frame ``X_i`` followed by the fundamental fields ``e_s`` of
an orthonormal (-tr) basis of the Lie algebra.  Indices 0..m-1 are
horizontal, m..m+k-1 vertical.  The brackets are

    [e_s, e_b] = C[g, s, b] e_g,   [e_i, e_s] = 0,
    [e_i, e_j] = lift([X_i, X_j]) + F[s, i, j] e_s,

with ``F = -Ad(g^-1) Omega(X_i, X_j)`` for the curvature ``Omega`` in the
chosen gauge.  Connection coefficients use the convention
``de^A = w^A_B ^ e^B`` with ``w^A_B = W[A, B, C] e^C``, equivalently
``W[A, B, C] = <nabla_{e_C} e_A, e_B>``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from . import lie
from .errors import DomainError, ShapeError

# --- bundle description ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BundleSpec:
    """Trivial bundle over a window of R^m with a G-connection.

    ``curvature_fn(x)`` returns Omega[s, i, j] = Omega^s(X_i, X_j) in the
    orthonormal algebra basis; ``potential_fn(x)`` returns A[s, a], the
    coefficient of dx^a (needed for the group coordinate and, for nonabelian
    fields, for horizontal derivatives).  ``frame_fn(x)`` returns E[i, a] with
    X_i = E[i, a] d/dx^a (identity when omitted).
    """

    group: str
    base_dim: int
    curvature_fn: Callable
    potential_fn: Callable | None = None
    frame_fn: Callable | None = None
    window: tuple | None = None
    fd_step: float = 1e-4
    structure: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        C = lie.structure_constants(self.group)
        object.__setattr__(self, "structure", C)
        if not np.array_equal(C, -np.swapaxes(C, 1, 2)):
            raise ShapeError("structure constants must be antisymmetric in the lower indices")
        # ad-invariance of the orthonormal basis: C[g, s, b] = -C[b, s, g]
        if not np.allclose(C, -np.transpose(C, (2, 1, 0)), atol=1e-14):
            raise ShapeError("structure constants are not ad-antisymmetric")

    @property
    def k(self) -> int:
        return len(self.structure)

    @property
    def dim(self) -> int:
        return self.base_dim + self.k

    @property
    def abelian(self) -> bool:
        return not np.any(self.structure)

    def frame(self, x) -> np.ndarray:
        return np.eye(self.base_dim) if self.frame_fn is None else np.asarray(self.frame_fn(x), float)

    def check_window(self, x):
        if self.window is None:
            return
        lo, hi = self.window
        if np.any(x < np.asarray(lo)) or np.any(x > np.asarray(hi)):
            raise DomainError(f"trajectory left the chart window at x = {tuple(np.round(x, 6))}")

    # -- constructors --------------------------------------------------------
    @classmethod
    def constant_field(cls, group: str, base_dim: int, omega: dict, window=None) -> "BundleSpec":
        """Constant curvature Omega^s_ij given as {(s, i, j): value} (0-based).

        The potential A^s = 1/2 Omega^s_ab x^a dx^b reproduces it when the
        nonzero generators commute, which is checked.
        """
        k = len(lie.algebra_basis(group))
        Om = np.zeros((k, base_dim, base_dim))
        for (s, i, j), v in omega.items():
            Om[s, i, j] += v
            Om[s, j, i] -= v
        active = [s for s in range(k) if np.any(Om[s])]
        C = lie.structure_constants(group)
        for a in active:
            for b in active:
                if np.any(C[:, a, b]):
                    raise ShapeError("constant nonabelian curvature needs commuting generators")
        Om.setflags(write=False)
        return cls(
            group, base_dim,
            curvature_fn=lambda x, Om=Om: Om,
            potential_fn=lambda x, Om=Om: 0.5 * np.einsum("sab,a->sb", Om, np.asarray(x, float)),
            window=window,
        )

    @classmethod
    def from_connection(cls, c, window=None) -> "BundleSpec":
        """Sample curvature and potential of a :class:`ConnectionState` by interpolation."""
        from .connection import curvature
        from .transport import interpolate

        chart = c.chart
        m = chart.ndim
        F = curvature(c).data
        pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
        Om_grid = lie.algebra_components(F, c.group)  # (npairs, *dims, k)
        A_grid = lie.algebra_components(c.omega.data, c.group)  # (m, *dims, k)

        def curv(x):
            vals = interpolate(chart, np.moveaxis(Om_grid, 0, -2), np.asarray(x))
            out = np.zeros((vals.shape[-1], m, m))
            for p, (i, j) in enumerate(pairs):
                out[:, i, j] = vals[p]
                out[:, j, i] = -vals[p]
            return out

        def pot(x):
            vals = interpolate(chart, np.moveaxis(A_grid, 0, -2), np.asarray(x))
            return vals.T

        if window is None:
            window = tuple(zip(*[chart.extent(k) for k in range(m)]))
        return cls(c.group, m, curv, pot, window=window)


def adjoint_matrix(g: np.ndarray, group: str) -> np.ndarray:
    """M[s, t] = <e_s, g e_t g^-1>: components of Ad(g)."""
    basis = lie.algebra_basis(group)
    moved = g @ basis @ lie.dagger(g)
    return lie.algebra_components(moved, group).T


# --- frame data ---------------------------------------------------------------------


def base_brackets(b: BundleSpec, x) -> np.ndarray:
    """c[i, j, k] with [X_i, X_j] = c[i, j, k] X_k (finite differences of the frame)."""
    m = b.base_dim
    if b.frame_fn is None:
        return np.zeros((m, m, m))
    x = np.asarray(x, float)
    E = b.frame(x)
    h = b.fd_step
    dE = np.zeros((m, m, m))  # dE[a, i, c] = d_a E[i, c]
    for a in range(m):
        dx = np.zeros(m)
        dx[a] = h
        dE[a] = (b.frame(x + dx) - b.frame(x - dx)) / (2 * h)
    # [X_i, X_j]^c = E[i,a] d_a E[j,c] - E[j,a] d_a E[i,c]
    XiEj = np.einsum("ia,ajc->ijc", E, dE)
    vec = XiEj - np.swapaxes(XiEj, 0, 1)
    return vec @ np.linalg.inv(E)


def koszul(c: np.ndarray) -> np.ndarray:
    """G[X, Y, Z] = <nabla_X Y, Z> for an orthonormal frame with brackets c[X, Y, Z]."""
    return 0.5 * (c - np.einsum("yzx->xyz", c) + np.einsum("zxy->xyz", c))


def base_coeffs(b: BundleSpec, x) -> np.ndarray:
    """Wbar[i, j, k] = <nabla_{X_k} X_i, X_j> of the base frame."""
    return np.einsum("kij->ijk", koszul(base_brackets(b, x)))


def field_strength(b: BundleSpec, x, g=None) -> np.ndarray:
    """F[s, i, j] = -(Ad(g^-1) Omega(X_i, X_j))^s, the vertical part of [e_i, e_j]."""
    Om = np.asarray(b.curvature_fn(x), float)
    if g is not None and not b.abelian:
        M = adjoint_matrix(lie.dagger(g), b.group)
        Om = np.einsum("st,tij->sij", M, Om)
    return -Om


def kk_coeffs(b: BundleSpec, x, g=None) -> np.ndarray:
    """Full table W[A, B, C] of the bundle Levi-Civita connection.

    Entries, with F as in :func:`field_strength`::

        W[i, j, k] = Wbar[i, j, k]          W[i, j, s] = -F[s, i, j] / 2
        W[s, i, j] = F[s, i, j] / 2         W[i, s, j] = -F[s, i, j] / 2
        W[s, b, n] = -C[s, n, b] / 2
    """
    m, k = b.base_dim, b.k
    W = np.zeros((m + k, m + k, m + k))
    W[:m, :m, :m] = base_coeffs(b, x)
    F = field_strength(b, x, g)
    H, V = slice(0, m), slice(m, m + k)
    W[H, H, V] = -0.5 * np.einsum("sij->ijs", F)
    W[V, H, H] = 0.5 * F
    W[H, V, H] = -0.5 * np.einsum("sij->isj", F)
    W[V, V, V] = -0.5 * np.einsum("snb->sbn", b.structure)
    return W


def total_brackets(b: BundleSpec, x, g=None) -> np.ndarray:
    """c[A, B, C] = <[e_A, e_B], e_C> on the total space."""
    m, k = b.base_dim, b.k
    c = np.zeros((m + k, m + k, m + k))
    c[:m, :m, :m] = base_brackets(b, x)
    c[:m, :m, m:] = np.einsum("sij->ijs", field_strength(b, x, g))
    c[m:, m:, m:] = np.einsum("gsb->sbg", b.structure)
    return c


# --- geodesics ------------------------------------------------------------------------


@dataclass
class BundleState:
    x: np.ndarray
    g: np.ndarray
    u: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, float)
        self.u = np.asarray(self.u, float)
        self.q = np.asarray(self.q, float)
        self.g = np.asarray(self.g)


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    q: np.ndarray
    g: np.ndarray

    @property
    def energy(self) -> np.ndarray:
        return np.sum(self.u**2, axis=1) + np.sum(self.q**2, axis=1)

    @property
    def charge_drift(self) -> float:
        return float(np.max(np.abs(self.q - self.q[0])))

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def gauge_charge(self, group: str) -> np.ndarray:
        """Ad(g) q: the charge seen in the fixed gauge."""
        return np.array([adjoint_matrix(g, group) @ q for g, q in zip(self.g, self.q)])

    def write_csv(self, path) -> None:
        m, k = self.x.shape[1], self.q.shape[1]
        head = ["t"] + [f"x{i}" for i in range(m)] + [f"u{i}" for i in range(m)] + [f"q{s}" for s in range(k)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(head)
            for row in zip(self.t, self.x, self.u, self.q):
                w.writerow([format(row[0], ".17g")] + [format(v, ".17g") for v in np.concatenate(row[1:])])


def _horizontal_generator(b: BundleSpec, x, g, xdot) -> np.ndarray:
    """g^-1 dg/dt for a horizontal motion: -Ad(g^-1) A(xdot), as a matrix."""
    if b.potential_fn is None:
        return np.zeros_like(g)
    A = np.asarray(b.potential_fn(x), float) @ xdot  # components along e_s
    Amat = lie.from_components(A, b.group)
    return -lie.dagger(g) @ Amat @ g


def _rhs(b: BundleSpec, x, g, u, q):
    m = b.base_dim
    E = b.frame(x)
    xdot = u @ E
    W = kk_coeffs(b, x, g)
    v = np.concatenate([u, q])
    acc = np.einsum("abc,b,c->a", W, v, v)
    qmat = lie.from_components(q, b.group)
    gdot = g @ qmat + g @ _horizontal_generator(b, x, g, xdot)
    return xdot, gdot, acc[:m], acc[m:]


def kk_geodesic(b: BundleSpec, s0: BundleState, T: float, step: float, record_every: int = 1) -> Trajectory:
    """Classical RK4 for the frame geodesic equations du^A/dt = W[A,B,C] u^B u^C."""
    if T <= 0 or step <= 0:
        raise ValueError("T and step must be positive")
    n = max(1, int(round(T / step)))
    h = T / n
    g = lie.project_group(np.asarray(s0.g, dtype=float if b.group == "SO3" else complex), b.group)
    x, u, q = s0.x.copy(), s0.u.copy(), s0.q.copy()
    b.check_window(x)
    ts, xs, us, qs, gs = [0.0], [x], [u], [q], [g]
    for it in range(1, n + 1):
        k1 = _rhs(b, x, g, u, q)
        k2 = _rhs(b, x + h / 2 * k1[0], g + h / 2 * k1[1], u + h / 2 * k1[2], q + h / 2 * k1[3])
        k3 = _rhs(b, x + h / 2 * k2[0], g + h / 2 * k2[1], u + h / 2 * k2[2], q + h / 2 * k2[3])
        k4 = _rhs(b, x + h * k3[0], g + h * k3[1], u + h * k3[2], q + h * k3[3])
        x = x + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        g = lie.project_group(g + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]), b.group)
        u = u + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        q = q + h / 6 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
        b.check_window(x)
        if it % record_every == 0 or it == n:
            ts.append(it * h)
            xs.append(x)
            us.append(u)
            qs.append(q)
            gs.append(g)
    return Trajectory(np.array(ts), np.array(xs), np.array(us), np.array(qs), np.array(gs))


def lorentz_oracle(b: BundleSpec, s0: BundleState, times: np.ndarray):
    """Base motion of a charged particle, integrated independently with DOP853.

    du^i/dt = <Omega(X_i, X_j), Q> u^j + base Levi-Civita terms, and the gauge
    charge Q = Ad(g) q obeys dQ/dt = [Q, A(xdot)] (constant when abelian).
    """
    m, k = b.base_dim, b.k
    C = b.structure
    Q0 = adjoint_matrix(np.asarray(s0.g), b.group) @ s0.q

    def f(t, y):
        x, u, Q = y[:m], y[m : 2 * m], y[2 * m :]
        E = b.frame(x)
        xdot = u @ E
        Om = np.asarray(b.curvature_fn(x), float)
        du = np.einsum("sij,s,j->i", Om, Q, u)
        if b.frame_fn is not None:
            du = du + np.einsum("ijk,j,k->i", base_coeffs(b, x), u, u)
        dQ = np.zeros(k)
        if b.potential_fn is not None and np.any(C):
            A = np.asarray(b.potential_fn(x), float) @ xdot
            dQ = np.einsum("gsb,s,b->g", C, Q, A)
        return np.concatenate([xdot, du, dQ])

    y0 = np.concatenate([s0.x, s0.u, Q0])
    sol = solve_ivp(f, (times[0], times[-1]), y0, method="DOP853", t_eval=times, rtol=1e-12, atol=1e-13)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[:m].T, sol.y[m : 2 * m].T


def lorentz_compare(b: BundleSpec, s0: BundleState, T: float, step: float) -> dict:
    traj = kk_geodesic(b, s0, T, step)
    xo, uo = lorentz_oracle(b, s0, traj.t)
    dist = float(np.max(np.linalg.norm(traj.x - xo, axis=1)))
    return {
        "distance": dist,
        "charge_drift": traj.charge_drift,
        "energy_drift": traj.energy_drift,
        "trajectory": traj,
    }


# --- scalar curvature -----------------------------------------------------------------


def _frame_directional(b: BundleSpec, fn, x, g, A: int, h: float):
    """Derivative of fn(x, g) along the frame vector e_A at (x, g)."""
    m = b.base_dim
    x = np.asarray(x, float)
    if A < m:
        E = b.frame(x)
        dx = E[A]
        if b.potential_fn is not None and not b.abelian:
            Acomp = np.asarray(b.potential_fn(x), float) @ dx
            gen = -lie.dagger(g) @ lie.from_components(Acomp, b.group) @ g
        else:
            gen = None

        def at(s):
            gg = g if gen is None else g @ lie.expm(s * gen)
            return fn(x + s * dx, gg)
    else:
        if b.abelian:
            return 0.0 * fn(x, g)
        gen = lie.algebra_basis(b.group)[A - m]

        def at(s):
            return fn(x, g @ lie.expm(s * gen))

    return _richardson(at, h)


def _richardson(at, h):
    """Central difference at s = 0 with one Richardson step (fourth order)."""
    coarse = (at(h) - at(-h)) / (2 * h)
    fine = (at(h / 2) - at(-h / 2)) / h
    return (4 * fine - coarse) / 3


def frame_scalar_curvature(Gfn, dim: int, deriv) -> float:
    """Scalar curvature from G[X,Y,Z] = <nabla_X Y, Z> and its frame derivatives.

    ``deriv(A)`` returns e_A[G] as an array shaped like G.
    """
    G = Gfn()
    dG = [deriv(A) for A in range(dim)]
    total = 0.0
    for A in range(dim):
        for B in range(dim):
            if A == B:
                continue
            # <R(e_A, e_B) e_B, e_A>
            val = dG[A][B, B, A] - dG[B][A, B, A]
            val += G[B, B, :] @ G[A, :, A] - G[A, B, :] @ G[B, :, A]
            val -= (G[A, B, :] - G[B, A, :]) @ G[:, B, A]
            total += val
    return float(total)


def scalar_curvature_decomposition(b: BundleSpec, x, g=None) -> dict:
    """Total-space, base, field and group scalar curvatures and the identity residual.

    PR is computed from the coefficient table of :func:`kk_coeffs` and its
    frame derivatives; MR from the base coefficients alone.  The field term is
    (1/2) sum_s sum_{i<j} F[s,i,j]^2 and the group term (1/4) sum C^2.
    """
    x = np.asarray(x, float)
    if g is None:
        g = lie.identity(b.group)
    m, k = b.base_dim, b.k
    h = b.fd_step * 10

    def G_total(xx, gg):
        return np.einsum("abc->cab", kk_coeffs(b, xx, gg))

    PR = frame_scalar_curvature(
        lambda: G_total(x, g), m + k, lambda A: _frame_directional(b, G_total, x, g, A, h)
    )

    def G_base(xx, gg):
        return np.einsum("abc->cab", base_coeffs(b, xx))

    def dbase(A):
        E = b.frame(x)
        return _richardson(lambda s: G_base(x + s * E[A], g), h)

    MR = frame_scalar_curvature(lambda: G_base(x, g), m, dbase)
    F = field_strength(b, x, g)
    iu = np.triu_indices(m, 1)
    Fterm = 0.5 * float(np.sum(F[:, iu[0], iu[1]] ** 2))
    GR = 0.25 * float(np.sum(b.structure**2))
    return {
        "PR": PR,
        "MR": MR,
        "Fterm": Fterm,
        "GR": GR,
        "residual": abs(PR - (MR - Fterm + GR)),
    }


def summary_json(result: dict) -> str:
    keys = ("distance", "charge_drift", "energy_drift")
    return json.dumps({k: result[k] for k in keys}, indent=2)
