"""Sampled form fields on charted grids and the finite-difference complex.

A :class:`FormField` stores the coefficients of a p-form at every grid point
in one array of shape ``(ncomp, *dims, *value_shape)``, where components are
ordered like :func:`gaugelab.forms.basis`.  Matrix-valued fields carry the
matrix in the trailing two axes.

Derivatives come in three flavours.  ``central`` (the default) uses symmetric
differences, which commute on periodic axes so ``d o d = 0`` to round-off.
``forward`` and ``backward`` are one-sided; pairing a forward ``d`` with a
backward codifferential gives an exactly adjoint complex whose Laplacian is
the compact 5-point stencil, which is what the Hodge solver uses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, DegreeError, DomainError, ShapeError
from .forms import FrameMetric, MultiIndex, PointForm, basis, degree_tables

SCHEMES = ("central", "forward", "backward")


@dataclass(frozen=True)
class Chart:
    """Regular coordinate grid.

    ``origin`` is the coordinate of index 0 on every axis.  Non-periodic axes
    are either node-based (trapezoid quadrature) or cell-centred (midpoint
    quadrature).  ``orthonormal`` says whether coordinate differentials form
    an orthonormal coframe, which the Hodge star requires.
    """

    id: str
    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    periodic: tuple[bool, ...]
    metric: FrameMetric
    origin: tuple[float, ...] | None = None
    cell_centered: tuple[bool, ...] | None = None
    orthonormal: bool = True

    def __post_init__(self):
        n = len(self.dims)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))
        if self.origin is None:
            object.__setattr__(self, "origin", (0.0,) * n)
        if self.cell_centered is None:
            object.__setattr__(self, "cell_centered", (False,) * n)
        if not (len(self.spacing) == len(self.periodic) == len(self.origin) == n):
            raise ShapeError("dims, spacing, periodic and origin must have equal length")
        if self.metric.dim != n:
            raise ShapeError(f"metric dimension {self.metric.dim} != grid dimension {n}")
        if any(d < 4 for d in self.dims):
            raise DomainError(f"resolution must be at least 4 per axis, got {self.dims}")
        if any(h <= 0 for h in self.spacing):
            raise DomainError("grid spacing must be positive")

    # -- constructors --------------------------------------------------------
    @classmethod
    def torus(cls, dims, length=2 * math.pi, metric=None, id="torus") -> "Chart":
        dims = tuple(dims)
        n = len(dims)
        lengths = (length,) * n if np.isscalar(length) else tuple(length)
        return cls(
            id,
            dims,
            tuple(L / N for L, N in zip(lengths, dims)),
            (True,) * n,
            metric or FrameMetric.euclidean(n),
        )

    @classmethod
    def box(cls, dims, lower, upper, metric=None, id="box", orthonormal=True) -> "Chart":
        """Node-based grid including both endpoints on every axis."""
        dims = tuple(dims)
        n = len(dims)
        lower = (lower,) * n if np.isscalar(lower) else tuple(lower)
        upper = (upper,) * n if np.isscalar(upper) else tuple(upper)
        spacing = tuple((b - a) / (N - 1) for a, b, N in zip(lower, upper, dims))
        return cls(
            id,
            dims,
            spacing,
            (False,) * n,
            metric or FrameMetric.euclidean(n),
            origin=tuple(float(a) for a in lower),
            orthonormal=orthonormal,
        )

    # -- geometry ------------------------------------------------------------
    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def npoints(self) -> int:
        return int(np.prod(self.dims))

    def axis_coords(self, k: int) -> np.ndarray:
        off = 0.5 if self.cell_centered[k] else 0.0
        return self.origin[k] + (np.arange(self.dims[k]) + off) * self.spacing[k]

    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis."""
        axes = [self.axis_coords(k) for k in range(self.ndim)]
        return tuple(np.meshgrid(*axes, indexing="ij", sparse=True))

    def extent(self, k: int) -> tuple[float, float]:
        """Coordinate interval covered by axis ``k``."""
        lo = self.origin[k]
        h = self.spacing[k]
        if self.periodic[k] or self.cell_centered[k]:
            return lo, lo + self.dims[k] * h
        return lo, lo + (self.dims[k] - 1) * h

    def axis_weights(self, k: int) -> np.ndarray:
        h = self.spacing[k]
        w = np.full(self.dims[k], h)
        if not (self.periodic[k] or self.cell_centered[k]):
            w[0] = w[-1] = h / 2
        return w

    def weights(self) -> np.ndarray:
        """Quadrature weights on the grid (periodic/midpoint/trapezoid per axis)."""
        ws = [self.axis_weights(k) for k in range(self.ndim)]
        return reduce(np.multiply.outer, ws)

    @property
    def uniform_weight(self) -> float | None:
        if all(p or c for p, c in zip(self.periodic, self.cell_centered)):
            return float(np.prod(self.spacing))
        return None

    def interior(self, layers: int = 0) -> tuple[slice, ...]:
        """Index slices dropping ``layers`` points at each non-periodic end."""
        out = []
        for N, per in zip(self.dims, self.periodic):
            out.append(slice(None) if per or layers == 0 else slice(layers, N - layers))
        return tuple(out)

    def layers_for_margin(self, margin: float) -> int:
        """Smallest layer count whose excluded strip is at least ``margin`` wide."""
        h = min(s for s, p in zip(self.spacing, self.periodic) if not p) if not all(self.periodic) else 1.0
        return int(math.ceil(margin / h - 1e-9))

    def refined(self, factor: int = 2) -> "Chart":
        """Same domain sampled ``factor`` times finer."""
        dims, spacing, origin = [], [], []
        for k in range(self.ndim):
            lo, hi = self.extent(k)
            if self.periodic[k] or self.cell_centered[k]:
                N = self.dims[k] * factor
                h = (hi - lo) / N
            else:
                N = (self.dims[k] - 1) * factor + 1
                h = (hi - lo) / (N - 1)
            dims.append(N)
            spacing.append(h)
            origin.append(lo)
        return Chart(
            self.id, tuple(dims), tuple(spacing), self.periodic, self.metric,
            tuple(origin), self.cell_centered, self.orthonormal,
        )


def ncomp(p: int, n: int) -> int:
    return math.comb(n, p)


@dataclass(frozen=True, eq=False)
class FormField:
    """A p-form sampled on a chart; immutable."""

    chart: Chart
    degree: int
    data: np.ndarray
    tag: str | None = None

    def __post_init__(self):
        n = self.chart.ndim
        if not 0 <= self.degree <= n:
            raise DegreeError(f"degree {self.degree} out of range for n={n}")
        data = np.asarray(self.data)
        expect = (ncomp(self.degree, n),) + self.chart.dims
        if data.shape[: n + 1] != expect:
            raise ShapeError(f"data shape {data.shape} does not start with {expect}")
        if data.ndim not in (n + 1, n + 3):
            raise ShapeError("values must be scalars or square matrices")
        if data.ndim == n + 3 and data.shape[-1] != data.shape[-2]:
            raise ShapeError("matrix values must be square")
        data = data.view()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    # -- constructors --------------------------------------------------------
    @classmethod
    def zeros(cls, chart: Chart, degree: int, value_shape=(), dtype=float, tag=None) -> "FormField":
        shape = (ncomp(degree, chart.ndim),) + chart.dims + tuple(value_shape)
        return cls(chart, degree, np.zeros(shape, dtype=dtype), tag)

    @classmethod
    def from_components(cls, chart: Chart, degree: int, comps: dict, tag=None, value_shape=None) -> "FormField":
        """Build from ``{multi-index: array}``; arrays broadcast against the grid.

        Values are matrices when an array has ``ndim + 2`` axes or when
        ``value_shape`` says so (needed for constant matrices).
        """
        idx = basis(degree, chart.ndim)
        pos = {I: k for k, I in enumerate(idx)}
        sample = None
        for I, arr in comps.items():
            if MultiIndex(I) not in pos:
                raise DegreeError(f"{I} is not a degree-{degree} index in dimension {chart.ndim}")
            sample = np.asarray(arr)
        vshape, dtype = tuple(value_shape or ()), float
        if sample is not None:
            if value_shape is None and sample.ndim == chart.ndim + 2:
                vshape = sample.shape[-2:]
            dtype = np.result_type(*[np.asarray(a).dtype for a in comps.values()], float)
        data = np.zeros((len(idx),) + chart.dims + vshape, dtype=dtype)
        for I, arr in comps.items():
            arr = np.asarray(arr)
            data[pos[MultiIndex(I)]] = np.broadcast_to(arr, chart.dims + vshape)
        return cls(chart, degree, data, tag)

    # -- basic properties ----------------------------------------------------
    @property
    def value_shape(self) -> tuple[int, ...]:
        return self.data.shape[1 + self.chart.ndim:]

    @property
    def is_matrix(self) -> bool:
        return len(self.value_shape) == 2

    @property
    def metric(self) -> FrameMetric:
        return self.chart.metric

    def component(self, I) -> np.ndarray:
        I = MultiIndex(I)
        idx = basis(self.degree, self.chart.ndim)
        try:
            return self.data[idx.index(I)]
        except ValueError:
            raise DegreeError(f"{tuple(I)} is not a degree-{self.degree} index") from None

    def at(self, index) -> PointForm:
        """PointForm at a grid index."""
        index = tuple(index)
        coeffs = {}
        for k, I in enumerate(basis(self.degree, self.chart.ndim)):
            v = self.data[(k,) + index]
            coeffs[I] = np.array(v) if np.ndim(v) else v.item()
        return PointForm(self.degree, self.metric, coeffs)

    def with_data(self, data, degree=None, tag=None) -> "FormField":
        return FormField(self.chart, self.degree if degree is None else degree, data, tag)

    def _check(self, other):
        if not isinstance(other, FormField):
            return NotImplemented
        if other.chart != self.chart or other.degree != self.degree:
            raise DegreeError("fields must share chart and degree")
        if other.value_shape != self.value_shape:
            raise ShapeError(f"value shapes differ: {self.value_shape} vs {other.value_shape}")
        return None

    def __add__(self, other):
        if (r := self._check(other)) is NotImplemented:
            return r
        return self.with_data(self.data + other.data, tag=self.tag if self.tag == other.tag else None)

    def __sub__(self, other):
        if (r := self._check(other)) is NotImplemented:
            return r
        return self.with_data(self.data - other.data, tag=self.tag if self.tag == other.tag else None)

    def __neg__(self):
        return self.with_data(-self.data, tag=self.tag)

    def scale(self, c) -> "FormField":
        """Multiply by a constant or by a grid function (broadcast over values)."""
        c = np.asarray(c)
        if c.ndim == self.chart.ndim and c.ndim > 0:
            c = c.reshape(c.shape + (1,) * len(self.value_shape))
        return self.with_data(c * self.data, tag=self.tag if np.isrealobj(c) else None)

    def sup_norm(self, layers: int = 0) -> float:
        """Max over grid points of the Euclidean norm of all coefficients."""
        return float(np.sqrt(np.max(pointwise_sq(self, layers), initial=0.0)))


def pointwise_sq(a: FormField, layers: int = 0) -> np.ndarray:
    """Sum of squared coefficient moduli at each grid point."""
    n = a.chart.ndim
    sq = np.abs(a.data) ** 2
    sq = sq.reshape(sq.shape[: n + 1] + (-1,)).sum(axis=-1).sum(axis=0)
    return sq[a.chart.interior(layers)]


# --- reductions -------------------------------------------------------------


def grid_sum(values: np.ndarray) -> float:
    """Deterministic compensated sum of a real array."""
    return math.fsum(np.ravel(values).tolist())


def integrate_scalar(chart: Chart, f: np.ndarray) -> float:
    return grid_sum(np.real(f) * chart.weights())


def inner(a: FormField, b: FormField) -> float:
    """Discrete L2 pairing: quadrature of the pointwise form inner product."""
    if a.degree != b.degree or a.chart != b.chart:
        raise DegreeError("inner product needs equal degree and chart")
    if a.value_shape != b.value_shape:
        raise ShapeError("value shapes differ")
    n = a.chart.ndim
    sig = np.array([a.metric.sigma(I) for I in basis(a.degree, n)], dtype=float)
    if a.is_matrix:
        per = -np.real(np.einsum("c...ij,c...ji->c...", a.data, b.data))
    else:
        per = np.real(a.data * b.data) if not np.iscomplexobj(a.data) else np.real(np.conj(a.data) * b.data)
    per = np.tensordot(sig, per, axes=1)
    return integrate_scalar(a.chart, per)


def l2_norm(a: FormField, layers: int = 0) -> float:
    """Coefficient L2 norm (signature-blind), optionally over an interior region."""
    sq = pointwise_sq(a, layers)
    w = a.chart.weights()[a.chart.interior(layers)]
    return math.sqrt(grid_sum(sq * w))


# --- derivatives --------------------------------------------------------------


def partial(arr: np.ndarray, axis: int, chart: Chart, scheme: str = "central") -> np.ndarray:
    """Derivative along grid axis ``axis`` of an array shaped ``(*dims, ...)``."""
    h = chart.spacing[axis]
    if chart.periodic[axis]:
        if scheme == "central":
            return (np.roll(arr, -1, axis) - np.roll(arr, 1, axis)) / (2 * h)
        if scheme == "forward":
            return (np.roll(arr, -1, axis) - arr) / h
        if scheme == "backward":
            return (arr - np.roll(arr, 1, axis)) / h
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme != "central":
        raise DomainError("one-sided schemes need periodic axes")
    return np.gradient(arr, h, axis=axis, edge_order=2)


def _d_table(p: int, n: int):
    """(target k, source i, axis, sign) for d: degree p -> p+1."""
    return tuple((k, j, axis, s) for k, axis, j, s in degree_tables(1, p, n))


def ext_d(a: FormField, scheme: str = "central") -> FormField:
    """Exterior derivative by coefficientwise finite differences."""
    n = a.chart.ndim
    if a.degree >= n:
        raise DegreeError(f"d of a top-degree form (p = n = {n})")
    p = a.degree
    out = np.zeros((ncomp(p + 1, n),) + a.data.shape[1:], dtype=a.data.dtype)
    for k, j, axis, s in _d_table(p, n):
        der = partial(a.data[j], axis, a.chart, scheme)
        if s > 0:
            out[k] += der
        else:
            out[k] -= der
    return FormField(a.chart, p + 1, out, a.tag)


def star_signs(metric: FrameMetric, p: int) -> tuple[tuple[int, int, int], ...]:
    """(target, source, sign) for the Hodge star on degree-p components."""
    n = metric.dim
    target = {I: k for k, I in enumerate(basis(n - p, n))}
    return tuple(
        (target[I.complement(n)], k, metric.star_sign(I)) for k, I in enumerate(basis(p, n))
    )


def star(a: FormField) -> FormField:
    """Pointwise Hodge star; requires an orthonormal coordinate coframe."""
    if not a.chart.orthonormal:
        raise DomainError(f"chart {a.chart.id!r} has a non-orthonormal coframe; no star available")
    n = a.chart.ndim
    out = np.empty((ncomp(n - a.degree, n),) + a.data.shape[1:], dtype=a.data.dtype)
    for k, j, s in star_signs(a.metric, a.degree):
        out[k] = s * a.data[j]
    return FormField(a.chart, n - a.degree, out, a.tag)


def codiff_sign(n: int, p: int) -> int:
    return (-1) ** (n * (p + 1) + 1)


def codifferential(a: FormField, scheme: str = "central") -> FormField:
    """delta = (-1)^(n(p+1)+1) * d * on p-forms."""
    if a.degree == 0:
        raise DegreeError("codifferential of a 0-form")
    n = a.chart.ndim
    sign = codiff_sign(n, a.degree)
    out = star(ext_d(star(a), scheme))
    return out if sign > 0 else -out


def _mimetic_ok(chart: Chart) -> bool:
    return all(chart.periodic)


def laplacian(a: FormField, scheme: str = "auto") -> FormField:
    """Hodge Laplacian d delta + delta d (positive semi-definite).

    ``auto`` uses the forward/backward pair on fully periodic charts and
    central differences otherwise.
    """
    if scheme == "auto":
        scheme = "mimetic" if _mimetic_ok(a.chart) else "central"
    if scheme == "mimetic":
        fwd, bwd = "forward", "backward"
    elif scheme == "central":
        fwd = bwd = "central"
    else:
        raise ValueError(f"unknown laplacian scheme {scheme!r}")
    n = a.chart.ndim
    total = None
    if a.degree > 0:
        total = ext_d(codifferential(a, bwd), fwd)
    if a.degree < n:
        part = codifferential(ext_d(a, fwd), bwd)
        total = part if total is None else total + part
    return total


# --- assembled sparse operators (used by the Hodge solver and as oracles) ----


def _diff_matrix(N: int, h: float, scheme: str) -> sp.csr_matrix:
    shift = sp.diags([np.ones(N - 1), np.ones(1)], [1, -(N - 1)], shape=(N, N))
    eye = sp.identity(N)
    if scheme == "forward":
        return ((shift - eye) / h).tocsr()
    if scheme == "backward":
        return ((eye - shift.T) / h).tocsr()
    if scheme == "central":
        return ((shift - shift.T) / (2 * h)).tocsr()
    raise ValueError(scheme)


def _axis_operator(chart: Chart, axis: int, scheme: str) -> sp.csr_matrix:
    if not chart.periodic[axis]:
        raise DomainError("assembled operators need periodic axes")
    mats = [sp.identity(N, format="csr") for N in chart.dims]
    mats[axis] = _diff_matrix(chart.dims[axis], chart.spacing[axis], scheme)
    return reduce(lambda x, y: sp.kron(x, y, format="csr"), mats)


def d_matrix(chart: Chart, p: int, scheme: str = "forward") -> sp.csr_matrix:
    """Sparse matrix of ext_d on degree-p components (component-major layout)."""
    n = chart.ndim
    N = chart.npoints
    axes = [_axis_operator(chart, k, scheme) for k in range(n)]
    blocks = [[None] * ncomp(p, n) for _ in range(ncomp(p + 1, n))]
    for k, j, axis, s in _d_table(p, n):
        blocks[k][j] = s * axes[axis]
    empty = sp.csr_matrix((N, N))
    blocks = [[b if b is not None else empty for b in row] for row in blocks]
    return sp.bmat(blocks, format="csr")


def star_matrix(chart: Chart, p: int) -> sp.csr_matrix:
    n = chart.ndim
    N = chart.npoints
    rows, cols, vals = [], [], []
    for k, j, s in star_signs(chart.metric, p):
        rows.append(k)
        cols.append(j)
        vals.append(s)
    P = sp.csr_matrix((vals, (rows, cols)), shape=(ncomp(n - p, n), ncomp(p, n)))
    return sp.kron(P, sp.identity(N), format="csr")


def laplacian_matrix(chart: Chart, p: int, scheme: str = "mimetic") -> sp.csr_matrix:
    """Assembled Hodge Laplacian on degree-p components of a periodic chart."""
    n = chart.ndim
    fwd, bwd = ("forward", "backward") if scheme == "mimetic" else ("central", "central")
    size = ncomp(p, n) * chart.npoints
    L = sp.csr_matrix((size, size))
    if p > 0:
        # delta_p = sign * star d star, acting on p-forms
        delta = codiff_sign(n, p) * (
            star_matrix(chart, n - p + 1) @ d_matrix(chart, n - p, bwd) @ star_matrix(chart, p)
        )
        L = L + d_matrix(chart, p - 1, fwd) @ delta
    if p < n:
        delta_up = codiff_sign(n, p + 1) * (
            star_matrix(chart, n - p) @ d_matrix(chart, n - p - 1, bwd) @ star_matrix(chart, p + 1)
        )
        L = L + delta_up @ d_matrix(chart, p, fwd)
    return L.tocsr()


# --- Hodge decomposition ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    exact: FormField
    coexact: FormField
    harmonic: FormField
    residual_norm: float
    harmonic_dim: int
    iterations: int = 0
    orthogonality: dict = field(default_factory=dict)


def harmonic_basis(chart: Chart, p: int, threshold: float | None = None) -> np.ndarray:
    """Orthonormal (Euclidean) basis of the kernel of the assembled Laplacian.

    Columns are vectors in the component-major layout.  Found by shift-invert
    Lanczos near zero; the number of requested eigenpairs grows until a
    nonzero eigenvalue is seen.
    """
    L = laplacian_matrix(chart, p)
    size = L.shape[0]
    if threshold is None:
        threshold = 1e-8 * 4 * chart.ndim / min(chart.spacing) ** 2
    k = min(size - 2, 2 * ncomp(p, chart.ndim) + 6)
    # fixed start vector keeps reports bitwise reproducible
    v0 = np.random.default_rng(0).standard_normal(size)
    while True:
        vals, vecs = spla.eigsh(L, k=k, sigma=-1e-3, which="LM", v0=v0)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        kernel = vals < threshold
        if not kernel.all() or k >= size - 2:
            break
        k = min(size - 2, 2 * k)
    Q, _ = np.linalg.qr(vecs[:, kernel])
    return Q


def _as_columns(a: FormField) -> np.ndarray:
    """Component-major vectors, one column per real value entry."""
    n = a.chart.ndim
    flat = a.data.reshape((ncomp(a.degree, n) * a.chart.npoints, -1))
    if np.iscomplexobj(flat):
        return np.concatenate([flat.real, flat.imag], axis=1)
    return flat


def _from_columns(a: FormField, cols: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(a.data):
        half = cols.shape[1] // 2
        cols = cols[:, :half] + 1j * cols[:, half:]
    return cols.reshape(a.data.shape)


def hodge_decompose(a: FormField, tol: float = 1e-10, max_iter: int | None = None) -> DecompositionResult:
    """Split ``a`` into exact + coexact + harmonic parts on a periodic chart.

    The harmonic part is the orthogonal projection onto the Laplacian kernel.
    The remainder is inverted with conjugate gradients, ``L phi = r``, and then
    ``exact = d delta phi`` and ``coexact = delta d phi``.
    """
    chart = a.chart
    if not all(chart.periodic):
        raise DomainError("Hodge decomposition needs a closed (fully periodic) chart")
    if chart.metric.neg_count or not chart.orthonormal:
        raise DomainError("Hodge decomposition needs a Riemannian orthonormal chart")
    n, p = chart.ndim, a.degree
    zero = a.with_data(np.zeros_like(a.data))
    if not np.any(a.data):
        return DecompositionResult(zero, zero, zero, 0.0, 0)

    w = chart.uniform_weight
    sw = math.sqrt(w)
    X = _as_columns(a)
    Q = harmonic_basis(chart, p)
    H = Q @ (Q.T @ X)
    R = X - H
    L = laplacian_matrix(chart, p)
    size = L.shape[0]
    max_iter = 10 * size if max_iter is None else max_iter

    phis = np.zeros_like(R)
    iters = 0
    for c in range(R.shape[1]):
        b = R[:, c]
        bn = np.linalg.norm(b)
        if bn == 0:
            continue
        count = [0]

        def cb(_xk, count=count):
            count[0] += 1

        rtol = min(1e-3, 0.01 * tol / (sw * bn))
        phi, info = spla.cg(L, b, rtol=rtol, atol=0.0, maxiter=max_iter, callback=cb)
        iters = max(iters, count[0])
        phi -= Q @ (Q.T @ phi)
        res = sw * np.linalg.norm(b - L @ phi)
        if info != 0 and res > tol:
            raise ConvergenceError(
                f"conjugate gradients stopped after {count[0]} iterations", residual=res
            )
        phis[:, c] = phi

    fwd, bwd = "forward", "backward"
    exact_cols = np.zeros_like(R)
    coexact_cols = np.zeros_like(R)
    if p > 0:
        delta = codiff_sign(n, p) * (
            star_matrix(chart, n - p + 1) @ d_matrix(chart, n - p, bwd) @ star_matrix(chart, p)
        )
        exact_cols = d_matrix(chart, p - 1, fwd) @ (delta @ phis)
    if p < n:
        delta_up = codiff_sign(n, p + 1) * (
            star_matrix(chart, n - p) @ d_matrix(chart, n - p - 1, bwd) @ star_matrix(chart, p + 1)
        )
        coexact_cols = delta_up @ (d_matrix(chart, p, fwd) @ phis)

    exact = a.with_data(_from_columns(a, exact_cols))
    coexact = a.with_data(_from_columns(a, coexact_cols))
    harmonic = a.with_data(_from_columns(a, H))
    resid = sw * float(np.linalg.norm(X - H - exact_cols - coexact_cols))
    if resid > tol:
        raise ConvergenceError(f"reconstruction residual {resid:.3e} exceeds {tol:.1e}", residual=resid)
    ortho = {
        "harmonic_exact": abs(w * float(np.sum(H * exact_cols))),
        "harmonic_coexact": abs(w * float(np.sum(H * coexact_cols))),
        "exact_coexact": abs(w * float(np.sum(exact_cols * coexact_cols))),
    }
    return DecompositionResult(exact, coexact, harmonic, resid, Q.shape[1], iters, ortho)


# --- integration ---------------------------------------------------------------


def integrate_top(a) -> float:
    """Integral of a top-degree form (real part of the volume coefficient)."""
    if isinstance(a, PatchedField):
        return a.integrate()
    n = a.chart.ndim
    if a.degree != n:
        raise DegreeError(f"integrate_top needs degree {n}, got {a.degree}")
    if a.value_shape:
        raise ShapeError("integrate a scalar-valued form (take a trace first)")
    return integrate_scalar(a.chart, a.data[0])


# --- two-patch sphere ------------------------------------------------------------


@dataclass(frozen=True)
class TwoPatchSphere:
    """Round unit S^2 covered by two (theta, phi) patches.

    ``north`` covers theta in [0, band_hi] and ``south`` covers [band_lo, pi];
    theta is sampled at cell centres so neither pole is a grid point, phi is
    periodic.  The partition of unity switches from north to south across the
    overlap band with a cos^2 profile.
    """

    north: Chart
    south: Chart
    band: tuple[float, float]

    @classmethod
    def build(cls, n_theta: int = 128, n_phi: int = 256, band=(math.pi / 3, 2 * math.pi / 3)):
        lo, hi = band
        if not 0 < lo < hi < math.pi:
            raise DomainError("overlap band must be a nonempty sub-interval of (0, pi)")
        metric = FrameMetric(2, 0, ("theta", "phi"))
        hp = 2 * math.pi / n_phi

        def patch(name, t0, t1):
            return Chart(
                name, (n_theta, n_phi), ((t1 - t0) / n_theta, hp), (False, True), metric,
                origin=(t0, 0.0), cell_centered=(True, False), orthonormal=False,
            )

        return cls(patch("north", 0.0, hi), patch("south", lo, math.pi), (lo, hi))

    def north_weight(self, theta: np.ndarray) -> np.ndarray:
        lo, hi = self.band
        s = np.clip((theta - lo) / (hi - lo), 0.0, 1.0)
        return np.cos(0.5 * math.pi * s) ** 2

    def patch_weight(self, chart: Chart) -> np.ndarray:
        theta = chart.coords()[0]
        chi = self.north_weight(theta)
        return chi if chart is self.north or chart.id == "north" else 1.0 - chi


@dataclass(frozen=True, eq=False)
class PatchedField:
    """A form given patchwise on a :class:`TwoPatchSphere`."""

    sphere: TwoPatchSphere
    north: FormField
    south: FormField

    def integrate(self) -> float:
        total = 0.0
        for part in (self.north, self.south):
            if part.degree != 2:
                raise DegreeError("integrate_top needs 2-forms on S^2")
            if part.value_shape:
                raise ShapeError("integrate a scalar-valued form (take a trace first)")
            chi = self.sphere.patch_weight(part.chart)
            total += integrate_scalar(part.chart, chi * np.real(part.data[0]))
        return total


# --- serialization -----------------------------------------------------------------

_MAGIC = "# gaugelab formfield v1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_formfield(a: FormField, path, extra_header: dict | None = None) -> None:
    """Self-describing column text: header lines, then one row per coefficient."""
    c = a.chart
    lines = [_MAGIC]
    for key, val in (extra_header or {}).items():
        lines.append(f"# {key} {val}")
    lines += [
        f"# chart {c.id}",
        "# dims " + " ".join(map(str, c.dims)),
        "# spacing " + " ".join(map(_fmt, c.spacing)),
        "# origin " + " ".join(map(_fmt, c.origin)),
        "# periodic " + " ".join(str(int(x)) for x in c.periodic),
        "# cell_centered " + " ".join(str(int(x)) for x in c.cell_centered),
        f"# orthonormal {int(c.orthonormal)}",
        f"# signature {c.metric.dim} {c.metric.neg_count}",
        "# labels " + " ".join(c.metric.labels),
        f"# degree {a.degree}",
        "# value_shape " + " ".join(map(str, a.value_shape)),
        f"# tag {a.tag or '-'}",
        f"# complex {int(np.iscomplexobj(a.data))}",
    ]
    idx = basis(a.degree, c.ndim)
    is_cplx = np.iscomplexobj(a.data)
    for k, I in enumerate(idx):
        comp = a.data[k]
        for gi in np.ndindex(*c.dims):
            vals = np.ravel(comp[gi])
            parts = []
            for v in vals:
                parts.append(_fmt(np.real(v)))
                if is_cplx:
                    parts.append(_fmt(np.imag(v)))
            mi = ",".join(map(str, I)) or "-"
            lines.append(" ".join(map(str, gi)) + f" {mi} " + " ".join(parts))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_formfield(path) -> tuple[FormField, dict]:
    """Inverse of :func:`write_formfield`; returns the field and unknown header keys."""
    header, rows = {}, []
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
        if first != _MAGIC:
            raise ShapeError(f"{path}: not a form-field file")
        for line in fh:
            if line.startswith("# "):
                key, _, val = line[2:].rstrip("\n").partition(" ")
                header[key] = val
            elif line.strip():
                rows.append(line.split())
    ints = lambda s: tuple(int(x) for x in s.split())
    floats = lambda s: tuple(float(x) for x in s.split())
    dims = ints(header.pop("dims"))
    n_dim, neg = ints(header.pop("signature"))
    metric = FrameMetric(n_dim, neg, tuple(header.pop("labels").split()))
    chart = Chart(
        header.pop("chart"), dims, floats(header.pop("spacing")),
        tuple(bool(x) for x in ints(header.pop("periodic"))), metric,
        origin=floats(header.pop("origin")),
        cell_centered=tuple(bool(x) for x in ints(header.pop("cell_centered"))),
        orthonormal=bool(int(header.pop("orthonormal"))),
    )
    degree = int(header.pop("degree"))
    vshape = ints(header.pop("value_shape"))
    tag = header.pop("tag")
    is_cplx = bool(int(header.pop("complex")))
    idx = basis(degree, len(dims))
    pos = {I: k for k, I in enumerate(idx)}
    data = np.zeros((len(idx),) + dims + vshape, dtype=complex if is_cplx else float)
    nd = len(dims)
    for r in rows:
        gi = tuple(int(x) for x in r[:nd])
        mi = MultiIndex(()) if r[nd] == "-" else MultiIndex(int(x) for x in r[nd].split(","))
        vals = np.array([float(x) for x in r[nd + 1:]])
        if is_cplx:
            vals = vals[0::2] + 1j * vals[1::2]
        data[(pos[mi],) + gi] = vals.reshape(vshape) if vshape else vals[0]
    return FormField(chart, degree, data, None if tag == "-" else tag), header


# --- pointwise algebra on fields ---------------------------------------------------


def _mul(x, y, mode):
    if mode == "scalar":
        if x.ndim > y.ndim:
            y = y.reshape(y.shape + (1, 1))
        elif y.ndim > x.ndim:
            x = x.reshape(x.shape + (1, 1))
        return x * y
    if mode == "matrix_contract":
        return x @ y
    if mode == "commutator":
        return x @ y - y @ x
    raise ValueError(f"unknown wedge mode {mode!r}")


def wedge_fields(a: FormField, b: FormField, mode: str = "scalar") -> FormField:
    """Pointwise exterior product of two fields; see :func:`gaugelab.forms.wedge`."""
    if a.chart != b.chart:
        raise DegreeError("fields live on different charts")
    n = a.chart.ndim
    p, q = a.degree, b.degree
    if p + q > n:
        raise DegreeError(f"degree overflow: {p} + {q} > {n}")
    if mode == "scalar":
        if a.is_matrix and b.is_matrix:
            raise ShapeError("scalar mode needs at least one scalar-valued operand")
        vshape = a.value_shape or b.value_shape
    else:
        if not (a.is_matrix and b.is_matrix):
            raise ShapeError(f"{mode} mode needs matrix values on both sides")
        if a.value_shape != b.value_shape:
            raise ShapeError(f"matrix shapes differ: {a.value_shape} vs {b.value_shape}")
        vshape = a.value_shape
    dtype = np.result_type(a.data, b.data)
    out = np.zeros((ncomp(p + q, n),) + a.chart.dims + tuple(vshape), dtype=dtype)
    for k, i, j, s in degree_tables(p, q, n):
        term = _mul(a.data[i], b.data[j], mode)
        if s > 0:
            out[k] += term
        else:
            out[k] -= term
    if mode == "commutator":
        out *= math.factorial(p) * math.factorial(q) / math.factorial(p + q)
    return FormField(a.chart, p + q, out)


def trace_field(a: FormField) -> FormField:
    if not a.is_matrix:
        raise TypeError("trace of a scalar-valued form is undefined")
    return FormField(a.chart, a.degree, np.trace(a.data, axis1=-2, axis2=-1))


def conjugate_field(a: FormField, g: np.ndarray, g_inv: np.ndarray) -> FormField:
    """Pointwise g a g^-1 for matrix-valued ``a``."""
    return FormField(a.chart, a.degree, g @ a.data @ g_inv, a.tag)
