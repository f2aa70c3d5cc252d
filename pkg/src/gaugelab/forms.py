"""Pointwise exterior algebra over an orthonormal frame of arbitrary signature.

Forms are stored by their coefficients on the basis ``e^I = e^{i_1} ^ ... ^ e^{i_p}``
with ``I`` strictly increasing and 1-based.  Evaluation follows the determinant
convention, ``(e^1 ^ e^2)(e_1, e_2) = 1``.

The Hodge star acts on basis elements as ``*e^I = sigma(I) tau(I) e^{I^C}``, where
``tau(I)`` is the sign of the permutation ``(1..n) -> (I, I^C)`` and ``sigma(I)`` is
the product of the metric signs ``eta_i`` over ``i in I``.  This gives
``** = (-1)^(p(n-p)+s)`` and ``a ^ *b = <a, b> mu``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import factorial

import numpy as np

from .errors import DegreeError, InvalidIndex, ShapeError

__all__ = [
    "MultiIndex",
    "FrameMetric",
    "PointForm",
    "parity",
    "complement",
    "basis",
    "permutation_sign",
    "wedge",
    "hodge_star",
    "form_inner",
    "trace_form",
    "value_pairing",
    "LIE_TAGS",
    "check_algebra",
    "volume_form",
    "degree_tables",
]

LIE_TAGS = ("u1", "su2", "so3", "gl")


class MultiIndex(tuple):
    """Strictly increasing tuple of 1-based frame indices."""

    def __new__(cls, indices=()):
        idx = tuple(int(i) for i in indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidIndex(f"multi-index must be strictly increasing, got {idx}")
        if any(i < 1 for i in idx):
            raise InvalidIndex(f"frame indices start at 1, got {idx}")
        return super().__new__(cls, idx)

    @property
    def degree(self) -> int:
        return len(self)

    def complement(self, n: int) -> "MultiIndex":
        return complement(self, n)


def _validate(I, n):
    I = MultiIndex(I)
    if any(i > n for i in I):
        raise InvalidIndex(f"index out of range 1..{n}: {tuple(I)}")
    return I


def permutation_sign(seq) -> int:
    """Sign of the permutation sorting ``seq`` (distinct entries)."""
    seq = list(seq)
    sign = 1
    # cycle decomposition on ranks
    order = sorted(range(len(seq)), key=seq.__getitem__)
    seen = [False] * len(seq)
    for start in range(len(seq)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = order[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def complement(I, n: int) -> MultiIndex:
    I = _validate(I, n)
    return MultiIndex(i for i in range(1, n + 1) if i not in I)


def parity(I, n: int) -> int:
    """tau(I): sign of the permutation taking (1..n) to (I, I^C)."""
    I = _validate(I, n)
    return permutation_sign(tuple(I) + tuple(complement(I, n)))


@lru_cache(maxsize=None)
def basis(p: int, n: int) -> tuple[MultiIndex, ...]:
    """Increasing multi-indices of degree ``p`` in dimension ``n``, lexicographic."""
    if p < 0 or p > n:
        raise DegreeError(f"no {p}-forms in dimension {n}")
    return tuple(MultiIndex(c) for c in combinations(range(1, n + 1), p))


@dataclass(frozen=True)
class FrameMetric:
    """Diagonal orthonormal-frame metric with ``neg_count`` negative directions.

    Negative directions are the last ``neg_count`` frame vectors, so Minkowski
    space is ``FrameMetric(4, 1, ("x", "y", "z", "t"))`` with eta = (+, +, +, -).
    """

    dim: int
    neg_count: int = 0
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if not 0 <= self.neg_count <= self.dim:
            raise ValueError("need 0 <= s <= n")
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(f"x{i}" for i in range(1, self.dim + 1)))
        if len(self.labels) != self.dim:
            raise ValueError("one label per frame direction")

    @classmethod
    def euclidean(cls, n: int) -> "FrameMetric":
        return cls(n, 0)

    @classmethod
    def minkowski(cls) -> "FrameMetric":
        return cls(4, 1, ("x", "y", "z", "t"))

    @property
    def eta(self) -> tuple[int, ...]:
        s = self.neg_count
        return (1,) * (self.dim - s) + (-1,) * s

    def sigma(self, I) -> int:
        """Product of eta_i over the multi-index (norm sign of e^I)."""
        eta = self.eta
        out = 1
        for i in I:
            out *= eta[i - 1]
        return out

    def star_sign(self, I) -> int:
        return self.sigma(I) * parity(I, self.dim)

    def star_star_sign(self, p: int) -> int:
        return (-1) ** (p * (self.dim - p) + self.neg_count)


# --- Lie-algebra-valued coefficients --------------------------------------


def check_algebra(value, tag: str, tol: float = 1e-12) -> bool:
    """True when ``value`` lies in the Lie algebra named by ``tag``."""
    if tag not in LIE_TAGS:
        raise ValueError(f"unknown Lie algebra tag {tag!r}")
    A = np.asarray(value)
    if tag == "gl":
        return True
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        return False
    scale = max(1.0, float(np.max(np.abs(A))) if A.size else 1.0)
    if tag == "so3":
        return bool(
            np.max(np.abs(np.imag(A)), initial=0.0) <= tol * scale
            and np.max(np.abs(A + np.swapaxes(A, -1, -2)), initial=0.0) <= tol * scale
        )
    herm = np.max(np.abs(A + np.conj(np.swapaxes(A, -1, -2))), initial=0.0)
    if herm > tol * scale:
        return False
    if tag == "su2":
        return bool(np.max(np.abs(np.trace(A, axis1=-2, axis2=-1)), initial=0.0) <= tol * scale)
    return True


def value_pairing(a, b) -> float:
    """Pairing of coefficient values: product for scalars, -Re tr(AB) for matrices."""
    a_mat = np.ndim(a) >= 2
    b_mat = np.ndim(b) >= 2
    if a_mat != b_mat:
        raise ShapeError("cannot pair a scalar value with a matrix value")
    if a_mat:
        return float(-np.real(np.trace(np.asarray(a) @ np.asarray(b))))
    return float(np.real(a * b))


def _is_zero(v) -> bool:
    return not np.any(np.asarray(v) != 0)


@dataclass(frozen=True)
class PointForm:
    """A p-form at a single point: sparse map MultiIndex -> coefficient.

    Coefficients are real/complex scalars or square matrices (Lie-algebra values,
    optionally tagged).  Zero coefficients are never stored.
    """

    degree: int
    metric: FrameMetric
    coeffs: dict = field(default_factory=dict)
    tag: str | None = None

    def __post_init__(self):
        n = self.metric.dim
        if not 0 <= self.degree <= n:
            raise DegreeError(f"degree {self.degree} out of range for n={n}")
        canon = {}
        for key, val in self.coeffs.items():
            I = _validate(key, n)
            if len(I) != self.degree:
                raise DegreeError(f"key {tuple(I)} has degree {len(I)}, expected {self.degree}")
            if np.ndim(val) >= 2:
                val = np.array(val)
                val.setflags(write=False)
            if not _is_zero(val):
                canon[I] = val
        object.__setattr__(self, "coeffs", canon)
        if self.tag is not None:
            for val in canon.values():
                if not check_algebra(val, self.tag):
                    raise ShapeError(f"coefficient not in Lie algebra {self.tag}")

    @classmethod
    def basis_form(cls, I, metric: FrameMetric, value=1.0, tag=None) -> "PointForm":
        I = MultiIndex(I)
        return cls(len(I), metric, {I: value}, tag)

    @classmethod
    def zero(cls, degree: int, metric: FrameMetric) -> "PointForm":
        return cls(degree, metric, {})

    @property
    def is_matrix(self) -> bool:
        return any(np.ndim(v) >= 2 for v in self.coeffs.values())

    def __getitem__(self, I):
        return self.coeffs.get(MultiIndex(I), 0.0)

    def _combine(self, other, op):
        if other.metric != self.metric or other.degree != self.degree:
            raise DegreeError("forms must share degree and metric")
        keys = set(self.coeffs) | set(other.coeffs)
        return PointForm(
            self.degree,
            self.metric,
            {k: op(self.coeffs.get(k, 0.0), other.coeffs.get(k, 0.0)) for k in keys},
        )

    def __add__(self, other):
        return self._combine(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._combine(other, lambda x, y: x - y)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, c) -> "PointForm":
        return PointForm(self.degree, self.metric, {k: c * v for k, v in self.coeffs.items()}, self.tag)

    def allclose(self, other, atol=1e-12) -> bool:
        diff = self - other
        return all(np.max(np.abs(v)) <= atol for v in diff.coeffs.values())


def _product(x, y, mode):
    xm, ym = np.ndim(x) >= 2, np.ndim(y) >= 2
    if mode == "scalar":
        if xm and ym:
            raise ShapeError("scalar mode needs at least one scalar-valued operand")
        return x * y
    if not (xm and ym):
        raise ShapeError(f"{mode} mode needs matrix values on both sides")
    if np.shape(x) != np.shape(y):
        raise ShapeError(f"matrix shapes differ: {np.shape(x)} vs {np.shape(y)}")
    if mode == "matrix_contract":
        return x @ y
    if mode == "commutator":
        return x @ y - y @ x
    raise ValueError(f"unknown wedge mode {mode!r}")


def wedge(a: PointForm, b: PointForm, mode: str = "scalar") -> PointForm:
    """Exterior product with the coefficient product chosen by ``mode``.

    ``scalar``: ordinary product (one side may be matrix-valued).
    ``matrix_contract``: matrix product, ``a`` value on the left.
    ``commutator``: Lie bracket of values, normalised so that for a Lie-algebra
    valued 1-form ``(l ^ l)(e_1, e_2) = [l(e_1), l(e_2)]``; in general this is
    ``p! q! / (p+q)!`` times the bracket-weighted determinant wedge.
    """
    if a.metric != b.metric:
        raise DegreeError("forms live on different frames")
    n = a.metric.dim
    p, q = a.degree, b.degree
    if p + q > n:
        raise DegreeError(f"degree overflow: {p} + {q} > {n}")
    out = {}
    for I, x in a.coeffs.items():
        for J, y in b.coeffs.items():
            if set(I) & set(J):
                continue
            K = MultiIndex(sorted(I + J))
            term = permutation_sign(tuple(I) + tuple(J)) * _product(x, y, mode)
            out[K] = out[K] + term if K in out else term
    if mode == "commutator":
        norm = factorial(p) * factorial(q) / factorial(p + q)
        out = {k: norm * v for k, v in out.items()}
    return PointForm(p + q, a.metric, out)


def hodge_star(a: PointForm) -> PointForm:
    m = a.metric
    n = m.dim
    out = {}
    for I, v in a.coeffs.items():
        out[complement(I, n)] = m.star_sign(I) * v
    return PointForm(n - a.degree, m, out, a.tag)


def form_inner(a: PointForm, b: PointForm) -> float:
    """Pointwise inner product; matrix values paired by -tr(AB)."""
    if a.degree != b.degree or a.metric != b.metric:
        raise DegreeError("inner product needs equal degree and metric")
    total = 0.0
    for I, x in a.coeffs.items():
        y = b.coeffs.get(I)
        if y is not None:
            total += a.metric.sigma(I) * value_pairing(x, y)
    return total


def trace_form(a: PointForm) -> PointForm:
    if a.coeffs and not a.is_matrix:
        raise TypeError("trace of a scalar-valued form is undefined")
    return PointForm(a.degree, a.metric, {k: np.trace(v) for k, v in a.coeffs.items()})


def volume_form(metric: FrameMetric) -> PointForm:
    return PointForm.basis_form(tuple(range(1, metric.dim + 1)), metric)


@lru_cache(maxsize=None)
def degree_tables(p: int, q: int, n: int):
    """Index table for wedging a p-form with a q-form in dimension n.

    Returns tuples ``(k, i, j, sign)`` meaning that component ``i`` of the
    first factor times component ``j`` of the second contributes with ``sign``
    to component ``k`` of the product (positions within :func:`basis`).
    """
    if p + q > n:
        raise DegreeError(f"degree overflow: {p} + {q} > {n}")
    pos = {I: k for k, I in enumerate(basis(p + q, n))}
    out = []
    for i, I in enumerate(basis(p, n)):
        for j, J in enumerate(basis(q, n)):
            if set(I) & set(J):
                continue
            K = MultiIndex(sorted(I + J))
            out.append((pos[K], i, j, permutation_sign(tuple(I) + tuple(J))))
    return tuple(sorted(out))
