#!/usr/bin/env python3
"""
Quaternion and Vector-Field Algebra

Exact small-matrix algebra behind the symmetry groups of K^n (K = R, C, H):
- Quaternions with left/right 4x4 real matrix representations L_q, R_q
- Complete systems of orthonormal linear tangent vector fields on S^1, S^3, S^7
- Block-diagonal lifts to R^N (N = d*n), the group elements G_lambda
- Section frames F_d(theta) = [theta, A_1 theta, ..., A_{d-1} theta] and an
  orthonormal basis of their complement H_theta

All returned arrays are read-only so values can be shared across workers.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

SUPPORTED_BLOCK_SIZES = (1, 2, 4, 8)
UNIT_TOLERANCE = 1e-12
PIVOT_TOLERANCE = 1e-10

# S^7 table: row k lists (sign, index) so that (A_k sigma)_r = sign * sigma_index
_S7_TABLE = [
    [(1, 2), (-1, 1), (1, 4), (-1, 3), (1, 6), (-1, 5), (-1, 8), (1, 7)],
    [(1, 3), (-1, 4), (-1, 1), (1, 2), (1, 7), (1, 8), (-1, 5), (-1, 6)],
    [(1, 4), (1, 3), (-1, 2), (-1, 1), (1, 8), (-1, 7), (1, 6), (-1, 5)],
    [(1, 5), (-1, 6), (-1, 7), (-1, 8), (-1, 1), (1, 2), (1, 3), (1, 4)],
    [(1, 6), (1, 5), (-1, 8), (1, 7), (-1, 2), (-1, 1), (-1, 4), (1, 3)],
    [(1, 7), (1, 8), (1, 5), (-1, 6), (-1, 3), (1, 4), (-1, 1), (-1, 2)],
    [(1, 8), (-1, 7), (1, 6), (1, 5), (-1, 4), (-1, 3), (1, 2), (-1, 1)],
]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Quaternion:
    """q = q0 e0 + q1 e1 + q2 e2 + q3 e3"""
    q0: float
    q1: float = 0.0
    q2: float = 0.0
    q3: float = 0.0

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "Quaternion":
        if len(v) != 4:
            raise ValueError(f"Quaternion needs 4 components, got {len(v)}")
        return cls(float(v[0]), float(v[1]), float(v[2]), float(v[3]))

    @classmethod
    def unit(cls, i: int) -> "Quaternion":
        """Basis unit e_i."""
        v = [0.0, 0.0, 0.0, 0.0]
        v[i] = 1.0
        return cls.from_vector(v)

    def as_vector(self) -> np.ndarray:
        return np.array([self.q0, self.q1, self.q2, self.q3], dtype=float)

    def conj(self) -> "Quaternion":
        return Quaternion(self.q0, -self.q1, -self.q2, -self.q3)

    def norm(self) -> float:
        return float(np.sqrt(self.q0**2 + self.q1**2 + self.q2**2 + self.q3**2))

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        return quat_mul(self, other)

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion.from_vector(self.as_vector() + other.as_vector())

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion.from_vector(self.as_vector() - other.as_vector())


def quat_mul(p: Quaternion, q: Quaternion) -> Quaternion:
    """Product pq with e1e2 = e3, e2e3 = e1, e3e1 = e2 and ei^2 = -e0."""
    return Quaternion(
        p.q0 * q.q0 - p.q1 * q.q1 - p.q2 * q.q2 - p.q3 * q.q3,
        p.q0 * q.q1 + p.q1 * q.q0 + p.q2 * q.q3 - p.q3 * q.q2,
        p.q0 * q.q2 - p.q1 * q.q3 + p.q2 * q.q0 + p.q3 * q.q1,
        p.q0 * q.q3 + p.q1 * q.q2 - p.q2 * q.q1 + p.q3 * q.q0,
    )


def left_matrix(q: Quaternion) -> np.ndarray:
    """L_q with L_q v_p = v_{qp}."""
    q0, q1, q2, q3 = q.q0, q.q1, q.q2, q.q3
    return _frozen([
        [q0, -q1, -q2, -q3],
        [q1, q0, -q3, q2],
        [q2, q3, q0, -q1],
        [q3, -q2, q1, q0],
    ])


def right_matrix(q: Quaternion) -> np.ndarray:
    """R_q with R_q v_p = v_{pq}."""
    q0, q1, q2, q3 = q.q0, q.q1, q.q2, q.q3
    return _frozen([
        [q0, -q1, -q2, -q3],
        [q1, q0, q3, -q2],
        [q2, -q3, q0, q1],
        [q3, q2, -q1, q0],
    ])


@dataclass(frozen=True)
class VectorFieldSystem:
    """Matrices A_1..A_{d-1} of a complete system of tangent fields on S^{d-1}."""
    d: int
    matrices: Tuple[np.ndarray, ...]
    chirality: str = "left"

    def lifted(self, n: int) -> List[np.ndarray]:
        """Block-diagonal lifts diag(A_i, ..., A_i) with n blocks."""
        eye = np.eye(n)
        return [np.kron(eye, a) for a in self.matrices]


def _check_block_size(d: int) -> None:
    if d not in SUPPORTED_BLOCK_SIZES:
        raise ValueError(
            f"d must be one of {{1, 2, 4, 8}} (only S^0, S^1, S^3, S^7 are "
            f"parallelizable, so complete vector-field systems exist only there), got {d}"
        )


def _s7_matrices() -> List[np.ndarray]:
    matrices = []
    for row_spec in _S7_TABLE:
        a = np.zeros((8, 8))
        for r, (sign, index) in enumerate(row_spec):
            a[r, index - 1] = sign
        matrices.append(_frozen(a))
    return matrices


def vector_field_system(d: int, chirality: str = "left") -> VectorFieldSystem:
    """Standard system for d in {1, 2, 4, 8}; chirality matters only for d = 4."""
    _check_block_size(d)
    if chirality not in ("left", "right"):
        raise ValueError(f"chirality must be 'left' or 'right', got {chirality!r}")

    if d == 1:
        matrices: List[np.ndarray] = []
    elif d == 2:
        matrices = [_frozen([[0.0, -1.0], [1.0, 0.0]])]
    elif d == 4:
        if chirality == "left":
            matrices = [left_matrix(Quaternion.unit(i)) for i in (1, 2, 3)]
        else:
            matrices = [right_matrix(Quaternion.unit(i).conj()) for i in (1, 2, 3)]
    else:
        matrices = _s7_matrices()

    return VectorFieldSystem(d=d, matrices=tuple(matrices), chirality=chirality if d == 4 else "left")


def conjugated_system(sys: VectorFieldSystem, gamma: Optional[np.ndarray] = None) -> VectorFieldSystem:
    """System {gamma^T A_i gamma} for an orthogonal conjugator gamma (default identity)."""
    if gamma is None:
        return sys
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (sys.d, sys.d):
        raise ValueError(f"conjugator must be {sys.d}x{sys.d}, got {gamma.shape}")
    if np.max(np.abs(gamma.T @ gamma - np.eye(sys.d))) > 1e-10:
        raise ValueError("conjugator must be orthogonal")
    matrices = tuple(_frozen(gamma.T @ a @ gamma) for a in sys.matrices)
    return VectorFieldSystem(d=sys.d, matrices=matrices, chirality=sys.chirality)


def radon_hurwitz(d: int) -> int:
    """rho(d) = 2^r + 8s - 1 for d = 2^(4s+r) * odd, 0 <= r < 4."""
    if d < 1:
        raise ValueError(f"d must be a positive integer, got {d}")
    power = 0
    while d % 2 == 0:
        d //= 2
        power += 1
    s, r = divmod(power, 4)
    return 2**r + 8 * s - 1


def _check_unit(v: np.ndarray, what: str) -> None:
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        raise ValueError(f"{what} must be a unit vector (|{what}| = {norm:.15g})")


def g_lambda(sys: VectorFieldSystem, lam: Sequence[float]) -> np.ndarray:
    """sum_{i=0}^{d-1} lambda_i A_i with A_0 = I."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (sys.d,):
        raise ValueError(f"lambda must have {sys.d} components, got {lam.shape}")
    _check_unit(lam, "lambda")
    g = lam[0] * np.eye(sys.d)
    for coeff, a in zip(lam[1:], sys.matrices):
        g = g + coeff * a
    return _frozen(g)


@dataclass(frozen=True)
class GroupElement:
    n: int
    d: int
    lam: np.ndarray
    matrix: np.ndarray


def group_element(sys: VectorFieldSystem, n: int, lam: Sequence[float]) -> GroupElement:
    """Block-diagonal lift diag(g_lambda, ..., g_lambda) with n blocks."""
    if n < 2:
        raise ValueError(f"block count n must be >= 2, got {n}")
    g = g_lambda(sys, lam)
    return GroupElement(n=n, d=sys.d, lam=_frozen(lam), matrix=_frozen(np.kron(np.eye(n), g)))


def reflect_J(n: int, d: int = 4) -> np.ndarray:
    """n copies of diag(-1, 1, 1, 1); swaps left and right quaternionic structures."""
    if d != 4:
        raise ValueError(f"the reflection J is defined only for d = 4, got d = {d}")
    block = np.diag([-1.0, 1.0, 1.0, 1.0])
    return _frozen(np.kron(np.eye(n), block))


@dataclass(frozen=True)
class SectionFrame:
    theta: np.ndarray
    frame: np.ndarray
    basisH: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.theta.shape[0]

    @property
    def d(self) -> int:
        return self.frame.shape[1]


def _complete_basis(frame: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of span(frame) from the standard basis."""
    N, k = frame.shape
    columns = [frame[:, j] for j in range(k)]
    completion = []
    for idx in range(N):
        if len(columns) == N:
            break
        v = np.zeros(N)
        v[idx] = 1.0
        # two Gram-Schmidt sweeps keep the completion orthonormal to ~1e-16
        for _ in range(2):
            for c in columns:
                v = v - np.dot(c, v) * c
        norm = np.linalg.norm(v)
        if norm < PIVOT_TOLERANCE:
            continue
        v = v / norm
        columns.append(v)
        completion.append(v)
    return np.column_stack(completion) if completion else np.zeros((N, 0))


def frame_matrix(sys: VectorFieldSystem, n: int, theta: np.ndarray) -> np.ndarray:
    """F_d(theta) without validation or completion; theta may be a batch (M, N)."""
    theta = np.asarray(theta, dtype=float)
    lifted = sys.lifted(n)
    if theta.ndim == 1:
        return np.column_stack([theta] + [a @ theta for a in lifted])
    return np.stack([theta] + [theta @ a.T for a in lifted], axis=-1)


def section_frame(sys: VectorFieldSystem, n: int, theta: Sequence[float]) -> SectionFrame:
    """Frame F_d(theta) and a deterministic orthonormal basis of H_theta."""
    theta = np.asarray(theta, dtype=float)
    N = sys.d * n
    if theta.shape != (N,):
        raise ValueError(f"theta must have N = d*n = {N} components, got {theta.shape}")
    _check_unit(theta, "theta")
    frame = frame_matrix(sys, n, theta)
    return SectionFrame(theta=_frozen(theta), frame=_frozen(frame), basisH=_frozen(_complete_basis(frame)))


def projector(frame: np.ndarray) -> np.ndarray:
    return frame @ frame.T


def frames_span_equal(f1: np.ndarray, f2: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(projector(f1) - projector(f2))) < tol)


def audit_vector_field_system(sys: VectorFieldSystem, tol: float = 1e-12) -> List[str]:
    """Failed identities of a vector-field system (empty list when complete)."""
    failures = []
    eye = np.eye(sys.d)
    for i, a in enumerate(sys.matrices, start=1):
        if np.max(np.abs(a + a.T)) > tol:
            failures.append(f"A_{i} is not skew-symmetric")
        if np.max(np.abs(a.T @ a - eye)) > tol:
            failures.append(f"A_{i} is not orthogonal")
        elif abs(np.linalg.det(a) - 1.0) > 1e-9:
            failures.append(f"det A_{i} != 1")
        for j, b in enumerate(sys.matrices, start=1):
            if j <= i:
                continue
            if np.max(np.abs(a.T @ b + b.T @ a)) > tol:
                failures.append(f"A_{i}, A_{j} do not anticommute (A_i^T A_j + A_j^T A_i != 0)")
    return failures


def fiber_spanning_report(sys: VectorFieldSystem, n: int, trials: int = 200, seed: int = 0) -> float:
    """Worst |P(F(g theta)) - P(F(theta))| over random theta and lambda."""
    rng = np.random.default_rng(seed)
    N = sys.d * n
    worst = 0.0
    for _ in range(trials):
        theta = rng.standard_normal(N)
        theta /= np.linalg.norm(theta)
        lam = rng.standard_normal(sys.d)
        lam /= np.linalg.norm(lam)
        g = group_element(sys, n, lam).matrix
        f1 = frame_matrix(sys, n, theta)
        f2 = frame_matrix(sys, n, g @ theta)
        worst = max(worst, float(np.max(np.abs(projector(f1) - projector(f2)))))
    return worst


def random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)
