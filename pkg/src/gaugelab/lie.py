"""Matrix groups U(1), SU(2), SO(3): algebra bases, projections, exponentials."""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm as _expm

from .errors import GroupError

GROUPS = {"U1": ("u1", 1), "SU2": ("su2", 2), "SO3": ("so3", 3)}

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# quaternion units i, j, k as su(2) matrices; (-i s1)(-i s2) = -i s3 reproduces ij = k
QUATERNION_UNITS = -1j * PAULI


def algebra_tag(group: str) -> str:
    try:
        return GROUPS[group][0]
    except KeyError:
        raise GroupError(f"unknown group {group!r}; expected one of {sorted(GROUPS)}") from None


def matrix_size(group: str) -> int:
    algebra_tag(group)
    return GROUPS[group][1]


def algebra_basis(group: str) -> np.ndarray:
    """Basis of the Lie algebra, orthonormal for <A, B> = -tr(AB)."""
    if group == "U1":
        return np.array([[[1j]]])
    if group == "SU2":
        return QUATERNION_UNITS / np.sqrt(2.0)
    if group == "SO3":
        L = np.zeros((3, 3, 3))
        for a in range(3):
            for b in range(3):
                for c in range(3):
                    L[a, b, c] = -_levi_civita(a, b, c)
        return L / np.sqrt(2.0)
    raise GroupError(f"unknown group {group!r}")


def _levi_civita(a, b, c):
    return (a - b) * (b - c) * (c - a) / 2


def structure_constants(group: str) -> np.ndarray:
    """C[g, s, b] with [e_s, e_b] = C[g, s, b] e_g in the orthonormal basis."""
    basis = algebra_basis(group)
    k = len(basis)
    C = np.zeros((k, k, k))
    for s in range(k):
        for b in range(k):
            comm = basis[s] @ basis[b] - basis[b] @ basis[s]
            for g in range(k):
                C[g, s, b] = -np.real(np.trace(comm @ basis[g]))
    C[np.abs(C) < 1e-14] = 0.0
    return C


def algebra_components(X: np.ndarray, group: str) -> np.ndarray:
    """Coordinates of algebra-valued arrays (..., k, k) in the orthonormal basis."""
    basis = algebra_basis(group)
    return -np.real(np.einsum("...ij,sji->...s", X, basis))


def from_components(coeffs: np.ndarray, group: str) -> np.ndarray:
    basis = algebra_basis(group)
    out = np.einsum("...s,sij->...ij", coeffs, basis)
    return out if group != "SO3" else np.real(out)


def dagger(g: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(g, -1, -2))


def project_algebra(X: np.ndarray, tag: str) -> np.ndarray:
    """Nearest algebra element: anti-hermitian (traceless for su2), antisymmetric for so3."""
    if tag == "gl":
        return X
    if tag == "so3":
        R = np.real(X)
        return 0.5 * (R - np.swapaxes(R, -1, -2))
    A = 0.5 * (X - dagger(X))
    if tag == "su2":
        k = A.shape[-1]
        tr = np.trace(A, axis1=-2, axis2=-1)[..., None, None]
        A = A - tr * np.eye(k) / k
    return A


def project_group(g: np.ndarray, group: str) -> np.ndarray:
    """Polar projection onto SU(2)/SO(3); phase renormalisation for U(1)."""
    if group == "U1":
        return g / np.abs(g)
    u, _, vh = np.linalg.svd(g)
    P = u @ vh
    if group == "SO3":
        P = np.real(P)
        det = np.linalg.det(P)
        if np.any(det < 0):
            raise GroupError("orientation-reversing matrix cannot be projected onto SO(3)")
        return P
    det = np.linalg.det(P)
    return P / np.sqrt(det)[..., None, None]


def group_defect(g: np.ndarray, group: str) -> float:
    """Max deviation from the group constraints (unitarity and determinant)."""
    k = g.shape[-1]
    eye = np.eye(k)
    unit = np.max(np.abs(dagger(g) @ g - eye))
    if group == "U1":
        return float(unit)
    det = np.linalg.det(g)
    return float(max(unit, np.max(np.abs(det - 1.0))))


def expm(X: np.ndarray) -> np.ndarray:
    """Matrix exponential, batched over leading axes (closed form for 1x1, 2x2)."""
    X = np.asarray(X)
    if X.shape[-1] == 1:
        return np.exp(X)
    if X.shape[-1] == 2:
        return _expm2(X)
    if X.ndim == 2:
        return _expm(X)
    flat = X.reshape((-1,) + X.shape[-2:])
    return np.stack([_expm(x) for x in flat]).reshape(X.shape)


def _expm2(X):
    # X = t I + Y with Y traceless, Y^2 = s^2 I
    t = 0.5 * (X[..., 0, 0] + X[..., 1, 1])
    Y = X - t[..., None, None] * np.eye(2)
    s2 = -(Y[..., 0, 0] * Y[..., 1, 1] - Y[..., 0, 1] * Y[..., 1, 0])
    s = np.sqrt(s2.astype(complex))
    small = np.abs(s) < 1e-8
    safe = np.where(small, 1.0, s)
    c = np.where(small, 1 + s2 / 2, np.cosh(safe))
    sh = np.where(small, 1 + s2 / 6, np.sinh(safe) / safe)
    out = np.exp(t)[..., None, None] * (c[..., None, None] * np.eye(2) + sh[..., None, None] * Y)
    return np.real(out) if np.isrealobj(X) else out


def identity(group: str, shape=()) -> np.ndarray:
    k = matrix_size(group)
    dtype = float if group == "SO3" else complex
    return np.broadcast_to(np.eye(k, dtype=dtype), tuple(shape) + (k, k)).copy()


def rotation_angle_axis(R: np.ndarray) -> tuple[float, np.ndarray]:
    """Angle in [0, pi] and unit axis of a 3x3 rotation."""
    R = np.real(R)
    c = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    angle = float(np.arccos(c))
    axis = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    norm = np.linalg.norm(axis)
    return angle, axis / norm if norm > 0 else axis
