#!/usr/bin/env python3
"""
Spherical Transforms

Funk-Minkowski transform M, the analytic cosine-transform family M^alpha,
spherical Radon transforms R_i and R_i^alpha, homogeneous extension E_lambda
and the Riesz-derivative operator D_m on S^{N-1}.

Analytic continuation of M^alpha to exponents such as 1-d or alpha+1-N is
carried only by Funk-Hecke multipliers on harmonic sums:

    m_j(alpha) = (-1)^(j/2) Gamma((j+1-alpha)/2) / Gamma((j+N-1+alpha)/2)   (j even)

The closed form is checked against Gauss-Jacobi quadrature of the kernel
|t|^(alpha-1) the first time a dimension N is used.
"""

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from bp_algebra import _complete_basis
from bp_sphere import (
    HarmonicSum,
    QuadratureRule,
    SphericalFunction,
    gauss_jacobi,
    gegenbauer_normalized,
    sphere_area,
    sphere_quadrature,
)

EXCLUSION_MARGIN = 1e-6
VALIDATION_TOLERANCE = 1e-10
KERNEL_NODES = 48


class ExclusionError(ValueError):
    """A parameter hit an excluded set of the transform family."""


# ==================== Constants and exclusions ====================

def _near_integer(x: float) -> Optional[int]:
    k = int(round(x))
    return k if abs(x - k) < EXCLUSION_MARGIN else None


def check_alpha(alpha: float) -> None:
    k = _near_integer(alpha)
    if k is not None and k > 0 and k % 2 == 1:
        raise ExclusionError(f"α ≠ 1,3,5,… (poles of γ_N(α)); got α = {alpha}")


def check_radon_alpha(N: int, i: int, alpha: float) -> None:
    if alpha <= 0:
        raise ExclusionError(f"Re α > 0 is required for R_i^α, got α = {alpha}")
    k = _near_integer(alpha + i - N)
    if k is not None and k >= 0 and k % 2 == 0:
        raise ExclusionError(f"α+i−N ≠ 0,2,4,… ; got α+i−N = {alpha + i - N}")


def check_dm_order(N: int, d: int, m: float) -> None:
    k = _near_integer(2 * m - (N - d))
    if k is not None and k >= 0 and k % 2 == 0:
        raise ExclusionError(f"2m ≠ N−d, N−d+2, … ; got 2m = {2 * m}, N−d = {N - d}")


def gamma_N(N: int, alpha: float) -> float:
    """gamma_N(alpha) = sigma_{N-1} Gamma((1-alpha)/2) / (2 pi^((N-1)/2) Gamma(alpha/2))."""
    check_alpha(alpha)
    return float(np.sqrt(np.pi) * special.gamma((1.0 - alpha) / 2.0)
                 * special.rgamma(N / 2.0) * special.rgamma(alpha / 2.0))


def gamma_Ni(N: int, i: int, alpha: float) -> float:
    """Normalizing constant of R_i^alpha."""
    check_radon_alpha(N, i, alpha)
    return float(np.sqrt(np.pi) * special.gamma((N - alpha - i) / 2.0)
                 * special.rgamma(N / 2.0) * special.rgamma(alpha / 2.0))


def radon_limit_constant(i: int) -> float:
    """c_i = sigma_{i-1} / (2 pi^((i-1)/2)), the alpha -> 0 limit R_i^alpha -> c_i R_i."""
    return sphere_area(i - 1) / (2.0 * np.pi ** ((i - 1) / 2.0))


# ==================== Multipliers ====================

def _kernel_beta_ratio(N: int, alpha: float) -> float:
    return float(special.beta(alpha / 2.0, (N - 1) / 2.0) / special.beta(0.5, (N - 1) / 2.0))


def kernel_mean(N: int, alpha: float, g: Callable[[np.ndarray], np.ndarray], nodes: int = KERNEL_NODES) -> float:
    """Mean of |t|^(alpha-1) g(t) with t = theta.u, theta uniform on S^{N-1}.

    With x = t^2 the weight becomes x^(alpha/2-1)(1-x)^((N-3)/2), handled by a
    Gauss-Jacobi rule; exact when g is an even polynomial of degree < 4*nodes.
    """
    y, w = gauss_jacobi(nodes, (N - 3) / 2.0, alpha / 2.0 - 1.0)
    s = np.sqrt(0.5 * (1.0 + y))
    even_part = 0.5 * (np.asarray(g(s)) + np.asarray(g(-s)))
    return _kernel_beta_ratio(N, alpha) * float(np.dot(w, even_part))


def multiplier_by_quadrature(N: int, alpha: float, j: int) -> float:
    """m_j(alpha) from the Funk-Hecke integral; valid for alpha > 0."""
    if j % 2:
        return 0.0
    return gamma_N(N, alpha) * kernel_mean(N, alpha, lambda t: gegenbauer_normalized(N, j, t))


def _closed_form(N: int, alpha: float, j: int) -> float:
    sign = -1.0 if (j // 2) % 2 else 1.0
    return float(sign * special.gamma((j + 1.0 - alpha) / 2.0) * special.rgamma((j + N - 1.0 + alpha) / 2.0))


@lru_cache(maxsize=None)
def validate_closed_form(N: int, j_max: int = 12) -> float:
    """Largest relative gap between closed form and quadrature over 0 < alpha < 1."""
    worst = 0.0
    for alpha in (0.25, 0.5, 0.75):
        for j in range(0, j_max + 1, 2):
            quad = multiplier_by_quadrature(N, alpha, j)
            exact = _closed_form(N, alpha, j)
            worst = max(worst, abs(quad - exact) / max(abs(exact), 1e-300))
    if worst > VALIDATION_TOLERANCE:
        raise RuntimeError(
            f"Funk-Hecke closed form disagrees with quadrature for N = {N}: relative gap {worst:.3e}"
        )
    return worst


def funk_hecke_multiplier(N: int, alpha: float, j: int) -> float:
    """Eigenvalue of M^alpha on degree-j spherical harmonics of S^{N-1}."""
    check_alpha(alpha)
    if j % 2:
        return 0.0
    validate_closed_form(N)
    return _closed_form(N, alpha, j)


def funk_multiplier(N: int, j: int) -> float:
    """Eigenvalue of the probability-normalized Funk transform: P_j(0)."""
    if j % 2:
        return 0.0
    return float(gegenbauer_normalized(N, j, np.array(0.0)))


@dataclass
class MultiplierTable:
    N: int
    alpha: float
    values: Dict[int, float] = field(default_factory=dict)

    @classmethod
    def build(cls, N: int, alpha: float, j_max: int = 12) -> "MultiplierTable":
        return cls(N, alpha, {j: funk_hecke_multiplier(N, alpha, j) for j in range(0, j_max + 1, 2)})

    def reciprocity_defects(self) -> Dict[int, float]:
        """|m_j(alpha) m_j(2-N-alpha) - 1| per stored degree."""
        partner = MultiplierTable.build(self.N, 2 - self.N - self.alpha, max(self.values))
        return {j: abs(m * partner.values[j] - 1.0) for j, m in self.values.items()}

    def to_dict(self) -> dict:
        return {"N": self.N, "alpha": self.alpha,
                "multipliers": {str(j): m for j, m in sorted(self.values.items())}}

    @classmethod
    def from_dict(cls, data: dict) -> "MultiplierTable":
        return cls(int(data["N"]), float(data["alpha"]),
                   {int(j): float(m) for j, m in data["multipliers"].items()})


def save_multiplier_tables(tables: Sequence[MultiplierTable], filename: str) -> None:
    with open(filename, "w", encoding="utf-8") as f:
        json.dump({"tables": [t.to_dict() for t in tables]}, f, indent=2)


def load_multiplier_tables(filename: str) -> List[MultiplierTable]:
    with open(filename, "r", encoding="utf-8") as f:
        data = json.load(f)
    return [MultiplierTable.from_dict(t) for t in data["tables"]]


# ==================== Subsphere integration ====================

def subsphere_rule(k: int, rule: Optional[QuadratureRule] = None, resolution: int = 16,
                   seed: Optional[int] = None, samples: int = 20_000) -> QuadratureRule:
    """Rule on S^{k-1}; S^0 is the two-point rule, k <= 4 defaults to product rules."""
    if rule is not None:
        if rule.N != k:
            raise ValueError(f"quadrature rule lives on S^{rule.N - 1}, need S^{k - 1}")
        return rule
    if k == 1:
        return QuadratureRule(kind="deterministic-product", N=1,
                              nodes=np.array([[1.0], [-1.0]]), weights=np.array([0.5, 0.5]))
    if k <= 4:
        return sphere_quadrature(k, "deterministic", resolution)
    if seed is None:
        raise ValueError(f"S^{k - 1} needs a Monte Carlo rule; pass quad or a seed")
    return sphere_quadrature(k, "monte-carlo", seed=seed, samples=samples)


def orthonormal_basis(xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 1:
        xi = xi[:, None]
    q, _ = np.linalg.qr(xi)
    return q


def complement_basis(xi: np.ndarray) -> np.ndarray:
    return _complete_basis(orthonormal_basis(xi))


def subsphere_mean(f: Callable[[np.ndarray], np.ndarray], basis: np.ndarray,
                   rule: Optional[QuadratureRule] = None, seed: Optional[int] = None) -> Tuple[float, float]:
    """Mean of f over S^{N-1} ∩ span(basis) with its standard error."""
    rule = subsphere_rule(basis.shape[1], rule, seed=seed)
    return rule.integrate(f(rule.mapped(basis)))


# ==================== Transforms ====================

def funk_transform(f: SphericalFunction, u: Sequence[float], quad: Optional[QuadratureRule] = None) -> float:
    """(Mf)(u): mean of f over the great subsphere S^{N-1} ∩ u^perp."""
    u = np.asarray(u, dtype=float)
    return subsphere_mean(f, complement_basis(u), quad)[0]


def funk_transform_harmonic(f: HarmonicSum) -> HarmonicSum:
    return f.apply_multipliers(lambda j: funk_multiplier(f.N, j))


def _nested_kernel_mean(f: Callable[[np.ndarray], np.ndarray], u: np.ndarray, alpha: float,
                        inner: QuadratureRule, nodes: int) -> float:
    """Mean of |theta.u|^(alpha-1) f(theta) with theta = t u + sqrt(1-t^2) w."""
    N = u.shape[0]
    perp = complement_basis(u)
    w_points = inner.mapped(perp)

    def profile(t: np.ndarray) -> np.ndarray:
        out = np.empty_like(t)
        for k, tk in enumerate(t):
            pts = tk * u[None, :] + np.sqrt(max(1.0 - tk * tk, 0.0)) * w_points
            out[k] = np.dot(inner.weights, f(pts))
        return out

    return kernel_mean(N, alpha, profile, nodes)


def cosine_transform_direct(f: SphericalFunction, alpha: float, u: Sequence[float],
                            quad: Optional[QuadratureRule] = None, nodes: int = KERNEL_NODES) -> float:
    """(M^alpha f)(u) = gamma_N(alpha) * mean of f(theta)|theta.u|^(alpha-1), alpha > 0.

    Harmonic sums use the Funk-Hecke 1-D integral per term; other inputs are
    integrated with t = theta.u as the outer variable (Gauss-Jacobi in t^2,
    which absorbs the |t|^(alpha-1) singularity) and quad on S^{N-2} inside.
    """
    if alpha <= 0:
        raise ExclusionError(f"the direct cosine transform needs α > 0, got α = {alpha}")
    const = gamma_N(f.N, alpha)
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    if isinstance(f, HarmonicSum):
        total = 0.0
        for term in f.terms:
            if term.degree % 2:
                continue
            fh = kernel_mean(f.N, alpha, lambda t, j=term.degree: gegenbauer_normalized(f.N, j, t), nodes)
            total += term.coefficient * fh * float(term.component(u[None, :])[0])
        return const * total
    inner = subsphere_rule(f.N - 1, quad)
    return const * _nested_kernel_mean(f, u, alpha, inner, nodes)


def cosine_transform(f: HarmonicSum, alpha: float) -> HarmonicSum:
    """M^alpha on an even harmonic sum by exact multipliers (any admissible real alpha)."""
    if not isinstance(f, HarmonicSum):
        raise ValueError("cosine_transform acts on harmonic sums; project the function first")
    if f.parity != "even":
        raise ValueError(f"cosine_transform needs an even harmonic sum, got parity {f.parity!r}")
    check_alpha(alpha)
    tail = abs(funk_hecke_multiplier(f.N, alpha, f.max_degree + 2))
    scale = max([abs(funk_hecke_multiplier(f.N, alpha, j)) for j in f.degrees()] + [tail])
    return f.apply_multipliers(lambda j: funk_hecke_multiplier(f.N, alpha, j), residual=scale * f.residual)


def radon_transform(f: Callable[[np.ndarray], np.ndarray], xi: np.ndarray,
                    quad: Optional[QuadratureRule] = None, seed: Optional[int] = None) -> float:
    """(R_i f)(xi): mean of f over S^{N-1} ∩ xi for an i-dimensional subspace xi."""
    basis = orthonormal_basis(xi)
    N, i = basis.shape
    if not 1 <= i <= N - 1:
        raise ValueError(f"subspace dimension must satisfy 1 <= i <= N-1, got i = {i}, N = {N}")
    return subsphere_mean(f, basis, quad, seed)[0]


def generalized_radon(f: Callable[[np.ndarray], np.ndarray], xi: np.ndarray, alpha: float,
                      quad: Optional[QuadratureRule] = None, nodes: int = 32,
                      seed: Optional[int] = None) -> float:
    """(R_i^alpha f)(xi) = gamma_{N,i}(alpha) * mean of |Pr_{xi^perp} theta|^(alpha+i-N) f(theta).

    theta = sqrt(1-x) v + sqrt(x) w with v on S^{N-1} ∩ xi, w on S^{N-1} ∩ xi^perp
    and x = |Pr_{xi^perp} theta|^2 ~ Beta((N-i)/2, i/2); the power of x is folded
    into the Gauss-Jacobi weight. quad, when given, is used on S^{N-1} ∩ xi.
    """
    basis = orthonormal_basis(xi)
    N, i = basis.shape
    const = gamma_Ni(N, i, alpha)
    perp = _complete_basis(basis)
    v_rule = subsphere_rule(i, quad, seed=seed)
    w_rule = subsphere_rule(N - i, None, seed=None if seed is None else seed + 1)
    v_pts = v_rule.mapped(basis)
    w_pts = w_rule.mapped(perp)

    y, wx = gauss_jacobi(nodes, i / 2.0 - 1.0, alpha / 2.0 - 1.0)
    x = 0.5 * (1.0 + y)
    ratio = float(special.beta(alpha / 2.0, i / 2.0) / special.beta((N - i) / 2.0, i / 2.0))
    total = 0.0
    for xk, wk in zip(x, wx):
        pts = (np.sqrt(1.0 - xk) * v_pts[:, None, :] + np.sqrt(xk) * w_pts[None, :, :]).reshape(-1, N)
        vals = np.asarray(f(pts)).reshape(v_pts.shape[0], w_pts.shape[0])
        total += wk * float(v_rule.weights @ vals @ w_rule.weights)
    return const * ratio * total


def homogeneous_extend(f: Callable[[np.ndarray], np.ndarray], lam: float) -> Callable[[np.ndarray], np.ndarray]:
    """E_lambda f: x -> |x|^lambda f(x/|x|) on R^N minus the origin."""

    def extended(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        r = np.linalg.norm(pts, axis=1)
        values = r**lam * np.asarray(f(pts / r[:, None]), dtype=float)
        return values[0] if single else values

    return extended


# ==================== Riesz derivative ====================

def riesz_multiplier(N: int, d: int, m: float, j: int) -> float:
    """Eigenvalue of D_m on degree-j harmonics.

    Integer m: product over steps of (1/4)(j - a)(j + a + N - 2) with the
    homogeneity a = -d, -d-2, ... of (-Delta)^k E_{-d} Y_j. Half-integer m: the
    ratio m_j(1-d-2m) / m_j(1-d).
    """
    check_dm_order(N, d, m)
    if abs(m - round(m)) < 1e-12:
        value = 1.0
        for k in range(int(round(m))):
            a = -d - 2 * k
            value *= 0.25 * (j - a) * (j + a + N - 2)
        return value
    return funk_hecke_multiplier(N, 1 - d - 2 * m, j) / funk_hecke_multiplier(N, 1 - d, j)


def riesz_Dm_harmonic(f: HarmonicSum, d: int, m: float) -> HarmonicSum:
    return f.apply_multipliers(lambda j: riesz_multiplier(f.N, d, m, j), residual=f.residual)


def _fd_laplacian(g: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> float:
    N = x.shape[0]
    shifts = np.vstack([x + h * e for e in np.eye(N)] + [x - h * e for e in np.eye(N)])
    values = np.atleast_1d(g(shifts))
    return float((np.sum(values) - 2 * N * float(np.atleast_1d(g(x[None, :]))[0])) / h**2)


def fd_laplacian(g: Callable[[np.ndarray], np.ndarray], x: np.ndarray, steps: Sequence[float] = (1e-2, 5e-3)) -> float:
    """Central-difference Laplacian with one Richardson step (second-order stencil)."""
    h1, h2 = steps
    l1 = _fd_laplacian(g, x, h1)
    l2 = _fd_laplacian(g, x, h2)
    ratio = (h1 / h2) ** 2
    return (ratio * l2 - l1) / (ratio - 1.0)


def riesz_Dm(f: SphericalFunction, d: int, m: int, theta: Sequence[float],
             steps: Sequence[float] = (1e-2, 5e-3)) -> float:
    """(D_m f)(theta) = 2^(-2m) [(-Delta)^m E_{-d} f](theta).

    Exact for harmonic sums; finite differences of the homogeneous extension
    (integer m only) for any other function.
    """
    theta = np.asarray(theta, dtype=float)
    N = f.N
    check_dm_order(N, d, m)
    if isinstance(f, HarmonicSum):
        return float(riesz_Dm_harmonic(f, d, m)(theta[None, :])[0])
    if abs(m - round(m)) > 1e-12:
        raise ValueError(f"finite-difference D_m needs integer m, got m = {m}; supply a harmonic sum")
    m = int(round(m))
    g: Callable[[np.ndarray], np.ndarray] = homogeneous_extend(f, -d)
    for _ in range(m):
        g = _laplacian_operator(g, steps)
    value = float(np.atleast_1d(g(theta[None, :]))[0])
    return (-0.25) ** m * value


def _laplacian_operator(g: Callable[[np.ndarray], np.ndarray], steps: Sequence[float]) -> Callable[[np.ndarray], np.ndarray]:
    def lap(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.array([fd_laplacian(g, p, steps) for p in points])
    return lap


def harmonic_defect(component: Callable[[np.ndarray], np.ndarray], degree: int, points: np.ndarray) -> float:
    """max |Delta (E_j Y)| at the given unit points: zero iff Y is a degree-j harmonic."""
    extended = homogeneous_extend(component, degree)
    return max(abs(fd_laplacian(extended, p)) for p in np.atleast_2d(points))
