#!/usr/bin/env python3
"""
Sphere Quadrature and Spherical Functions

Integration and function representations on S^{N-1}. Every mean is taken
against the probability measure; sphere areas appear only explicitly.

Quadrature:
- Deterministic product rules (N <= 4): uniform angles on S^1,
  Gauss-Legendre in z x uniform angle on S^2, Gauss-Legendre in sin^2 x two
  uniform angles on S^3 (Hopf coordinates)
- Monte Carlo in any N: normalized Gaussian samples from a seeded generator
- Low-discrepancy theta grids: scrambled Sobol points through the normal quantile

Functions:
- EvaluatorFunction: black-box callable
- ZonalFunction: profile of t = a.theta
- AxialFunction: profile of s = |F^T theta| for an orthonormal k-frame F
- HarmonicSum: finite sum of degree-j harmonics (zonal blends or axial
  harmonics), the form on which transforms act by exact multipliers
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special
from scipy.stats import norm, qmc

DETERMINISTIC = "deterministic-product"
MONTE_CARLO = "monte-carlo"
DEFAULT_DEGREE_CAP = 12
_DENSE_AXES_SEED = 20240607


def sphere_area(k: int) -> float:
    """Surface area sigma_k of S^k in R^{k+1}."""
    return float(2.0 * np.pi ** ((k + 1) / 2.0) / special.gamma((k + 1) / 2.0))


def gauss_jacobi(n: int, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes on [-1, 1] for weight (1-y)^a (1+y)^b, weights normalized to sum 1."""
    y, w = special.roots_jacobi(n, a, b)
    return y, w / np.sum(w)


def normalize_rows(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return points / np.linalg.norm(points, axis=-1, keepdims=True)


# ==================== Quadrature ====================

@dataclass(frozen=True)
class QuadratureRule:
    """Probability-normalized rule on S^{N-1}."""
    kind: str
    N: int
    nodes: np.ndarray
    weights: np.ndarray
    seed: Optional[int] = None
    antithetic: bool = False

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def integrate(self, values: np.ndarray) -> Tuple[float, float]:
        """Weighted mean of node values and its standard error (0 for deterministic rules)."""
        values = np.asarray(values, dtype=float)
        mean = float(np.dot(self.weights, values))
        if self.kind != MONTE_CARLO:
            return mean, 0.0
        if self.antithetic:
            half = self.size // 2
            values = 0.5 * (values[:half] + values[half:])
        se = float(np.std(values, ddof=1) / np.sqrt(values.shape[0]))
        return mean, se

    def mapped(self, basis: np.ndarray) -> np.ndarray:
        """Nodes carried into the subspace spanned by the orthonormal columns of basis."""
        return self.nodes @ np.asarray(basis).T


def _circle_rule(m: int) -> Tuple[np.ndarray, np.ndarray]:
    phi = 2.0 * np.pi * np.arange(m) / m
    return np.column_stack([np.cos(phi), np.sin(phi)]), np.full(m, 1.0 / m)


def _s2_rule(n: int) -> Tuple[np.ndarray, np.ndarray]:
    z, wz = special.roots_legendre(n)
    m = 2 * n
    phi = 2.0 * np.pi * np.arange(m) / m
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    r = np.sqrt(1.0 - zz**2)
    nodes = np.column_stack([(r * np.cos(pp)).ravel(), (r * np.sin(pp)).ravel(), zz.ravel()])
    weights = np.repeat(wz / 2.0, m) / m
    return nodes, weights


def _s3_rule(n: int) -> Tuple[np.ndarray, np.ndarray]:
    # s = sin^2(eta) is uniform on [0, 1] under the probability measure of S^3
    y, wy = special.roots_legendre(n)
    s = 0.5 * (1.0 + y)
    ws = wy / 2.0
    m = 2 * n
    phi = 2.0 * np.pi * np.arange(m) / m
    ss, p1, p2 = np.meshgrid(s, phi, phi, indexing="ij")
    c = np.sqrt(1.0 - ss)
    r = np.sqrt(ss)
    nodes = np.column_stack([
        (c * np.cos(p1)).ravel(), (c * np.sin(p1)).ravel(),
        (r * np.cos(p2)).ravel(), (r * np.sin(p2)).ravel(),
    ])
    weights = np.repeat(ws, m * m) / (m * m)
    return nodes, weights


def sphere_quadrature(N: int, kind: str = "deterministic", resolution: int = 16,
                      seed: Optional[int] = None, samples: int = 100_000,
                      antithetic: bool = True) -> QuadratureRule:
    """Quadrature rule on S^{N-1}.

    kind "deterministic" gives product rules exact for polynomials of degree
    below 2*resolution (N <= 4 only). kind "monte-carlo" needs a seed; with
    antithetic sampling every node x is paired with -x.
    """
    if N < 2:
        raise ValueError(f"sphere quadrature needs N >= 2, got N = {N}")
    if kind in ("deterministic", DETERMINISTIC):
        if N > 4:
            raise ValueError(
                f"deterministic product rules exist only for N <= 4 (got N = {N}); "
                f"use kind='monte-carlo'"
            )
        if resolution < 1:
            raise ValueError(f"resolution must be positive, got {resolution}")
        if N == 2:
            nodes, weights = _circle_rule(2 * resolution)
        elif N == 3:
            nodes, weights = _s2_rule(resolution)
        else:
            nodes, weights = _s3_rule(resolution)
        return QuadratureRule(kind=DETERMINISTIC, N=N, nodes=nodes, weights=weights)

    if kind in ("monte-carlo", MONTE_CARLO):
        if seed is None:
            raise ValueError("Monte Carlo quadrature requires a seed")
        if samples < 2:
            raise ValueError(f"samples must be >= 2, got {samples}")
        rng = np.random.default_rng(seed)
        if antithetic:
            half = normalize_rows(rng.standard_normal(((samples + 1) // 2, N)))
            nodes = np.vstack([half, -half])
        else:
            nodes = normalize_rows(rng.standard_normal((samples, N)))
        weights = np.full(nodes.shape[0], 1.0 / nodes.shape[0])
        return QuadratureRule(kind=MONTE_CARLO, N=N, nodes=nodes, weights=weights,
                              seed=seed, antithetic=antithetic)

    raise ValueError(f"unknown quadrature kind {kind!r} (use 'deterministic' or 'monte-carlo')")


def theta_grid(N: int, points: int = 4096, seed: int = 0) -> np.ndarray:
    """Low-discrepancy directions: scrambled Sobol -> normal quantile -> normalize."""
    sampler = qmc.Sobol(d=N, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(points, 2))))
    u = sampler.random_base2(m)[:points]
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    return normalize_rows(norm.ppf(u))


# ==================== Gegenbauer helpers ====================

def gegenbauer_normalized(N: int, j: int, t: np.ndarray) -> np.ndarray:
    """Degree-j zonal polynomial on S^{N-1} normalized to P_j(1) = 1."""
    t = np.asarray(t, dtype=float)
    if j == 0:
        return np.ones_like(t)
    if N == 2:
        return special.eval_chebyt(j, t)
    lam = (N - 2) / 2.0
    return special.eval_gegenbauer(j, lam, t) / special.eval_gegenbauer(j, lam, 1.0)


def harmonic_dimension(N: int, j: int) -> int:
    """Dimension of the space of degree-j spherical harmonics on S^{N-1}."""
    upper = special.comb(j + N - 1, N - 1, exact=True)
    lower = special.comb(j + N - 3, N - 1, exact=True) if j >= 2 else 0
    return int(upper - lower)


def _degrees(cap: int, parity: str) -> List[int]:
    if parity == "even":
        return list(range(0, cap + 1, 2))
    if parity == "odd":
        return list(range(1, cap + 1, 2))
    return list(range(0, cap + 1))


# ==================== Spherical functions ====================

class SphericalFunction:
    """Function on S^{N-1}; subclasses evaluate batches of points (M, N) -> (M,)."""

    def __init__(self, N: int, parity: str = "mixed"):
        if parity not in ("even", "odd", "mixed"):
            raise ValueError(f"parity must be even, odd or mixed, got {parity!r}")
        self.N = N
        self.parity = parity

    def __call__(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def at(self, theta: Sequence[float]) -> float:
        return float(self(np.asarray(theta, dtype=float)[None, :])[0])


class EvaluatorFunction(SphericalFunction):
    def __init__(self, N: int, fn: Callable[[np.ndarray], np.ndarray], parity: str = "mixed"):
        super().__init__(N, parity)
        self.fn = fn

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.atleast_2d(points)), dtype=float)


class ZonalFunction(SphericalFunction):
    """theta -> profile(axis . theta)"""

    def __init__(self, N: int, axis: Sequence[float], profile: Callable[[np.ndarray], np.ndarray],
                 parity: str = "mixed"):
        super().__init__(N, parity)
        axis = np.asarray(axis, dtype=float)
        self.axis = axis / np.linalg.norm(axis)
        self.profile = profile

    def __call__(self, points: np.ndarray) -> np.ndarray:
        t = np.clip(np.atleast_2d(points) @ self.axis, -1.0, 1.0)
        return np.asarray(self.profile(t), dtype=float)


class AxialFunction(SphericalFunction):
    """theta -> profile(|F^T theta|) for an orthonormal N x k frame F (always even)."""

    def __init__(self, N: int, frame: np.ndarray, profile: Callable[[np.ndarray], np.ndarray]):
        super().__init__(N, "even")
        frame = np.asarray(frame, dtype=float)
        if frame.ndim == 1:
            frame = frame[:, None]
        self.frame = frame
        self.profile = profile

    @property
    def k(self) -> int:
        return self.frame.shape[1]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        s = np.linalg.norm(np.atleast_2d(points) @ self.frame, axis=1)
        return np.asarray(self.profile(np.clip(s, 0.0, 1.0)), dtype=float)


# ==================== Harmonic components ====================

class ZonalHarmonic:
    """sum_k w_k P_j(a_k . theta): a degree-j harmonic on S^{N-1}."""

    def __init__(self, N: int, degree: int, axes: np.ndarray, weights: Optional[Sequence[float]] = None):
        axes = normalize_rows(np.atleast_2d(np.asarray(axes, dtype=float)))
        self.N = N
        self.degree = degree
        self.axes = axes
        self.weights = np.ones(axes.shape[0]) if weights is None else np.asarray(weights, dtype=float)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        t = np.clip(np.atleast_2d(points) @ self.axes.T, -1.0, 1.0)
        return gegenbauer_normalized(self.N, self.degree, t) @ self.weights

    def axial_profile(self) -> Optional[Tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]]]:
        if self.axes.shape[0] != 1 or self.degree % 2:
            return None
        w, j, N = float(self.weights[0]), self.degree, self.N
        return self.axes[0][:, None], lambda s: w * gegenbauer_normalized(N, j, s)


class AxialHarmonic:
    """phi_j(|F^T theta|): average of P_j(a . theta) over unit a in span(F).

    For a d-frame F_d(a) this is the G-zonal harmonic about a; it is invariant
    under O(k) x O(N-k) and harmonic of degree j (j even).
    """

    def __init__(self, N: int, degree: int, frame: np.ndarray, nodes: Optional[int] = None):
        if degree % 2:
            raise ValueError(f"axial harmonics exist only in even degree, got {degree}")
        frame = np.asarray(frame, dtype=float)
        if frame.ndim == 1:
            frame = frame[:, None]
        self.N = N
        self.degree = degree
        self.frame = frame
        k = frame.shape[1]
        if k >= 2:
            a = (k - 3) / 2.0
            self._t, self._w = gauss_jacobi(nodes or degree // 2 + 2, a, a)
        else:
            self._t, self._w = np.array([1.0]), np.array([1.0])

    def profile(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        vals = gegenbauer_normalized(self.N, self.degree, s[..., None] * self._t)
        return vals @ self._w

    def __call__(self, points: np.ndarray) -> np.ndarray:
        s = np.linalg.norm(np.atleast_2d(points) @ self.frame, axis=1)
        return self.profile(np.clip(s, 0.0, 1.0))

    def axial_profile(self) -> Tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]]:
        return self.frame, self.profile


@dataclass(frozen=True)
class HarmonicTerm:
    degree: int
    coefficient: float
    component: Callable[[np.ndarray], np.ndarray]


class HarmonicSum(SphericalFunction):
    """Finite sum of spherical harmonics; residual records a projection error estimate."""

    def __init__(self, N: int, terms: Sequence[HarmonicTerm], residual: float = 0.0):
        self.terms: Tuple[HarmonicTerm, ...] = tuple(terms)
        degrees = {t.degree % 2 for t in self.terms}
        parity = "even" if degrees <= {0} else ("odd" if degrees == {1} else "mixed")
        super().__init__(N, parity)
        self.residual = residual

    @classmethod
    def constant(cls, N: int, value: float = 1.0) -> "HarmonicSum":
        return cls(N, [HarmonicTerm(0, float(value), ZonalHarmonic(N, 0, np.eye(N)[:1]))])

    @classmethod
    def zonal(cls, N: int, degree: int, axis: Sequence[float], coefficient: float = 1.0) -> "HarmonicSum":
        return cls(N, [HarmonicTerm(degree, coefficient, ZonalHarmonic(N, degree, axis))])

    @classmethod
    def axial(cls, N: int, degree: int, frame: np.ndarray, coefficient: float = 1.0) -> "HarmonicSum":
        return cls(N, [HarmonicTerm(degree, coefficient, AxialHarmonic(N, degree, frame))])

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        total = np.zeros(points.shape[0])
        for term in self.terms:
            total = total + term.coefficient * term.component(points)
        return total

    @property
    def max_degree(self) -> int:
        return max((t.degree for t in self.terms), default=0)

    def degrees(self) -> List[int]:
        return sorted({t.degree for t in self.terms})

    def __add__(self, other: "HarmonicSum") -> "HarmonicSum":
        if other.N != self.N:
            raise ValueError(f"cannot add harmonic sums on S^{self.N - 1} and S^{other.N - 1}")
        return HarmonicSum(self.N, self.terms + other.terms, self.residual + other.residual)

    def scaled(self, factor: float) -> "HarmonicSum":
        return HarmonicSum(self.N, [HarmonicTerm(t.degree, factor * t.coefficient, t.component)
                                    for t in self.terms], abs(factor) * self.residual)

    def __neg__(self) -> "HarmonicSum":
        return self.scaled(-1.0)

    def __sub__(self, other: "HarmonicSum") -> "HarmonicSum":
        return self + (-other)

    def apply_multipliers(self, multiplier: Callable[[int], float], residual: float = 0.0) -> "HarmonicSum":
        """Multiply every degree-j term by multiplier(j)."""
        cache = {j: multiplier(j) for j in self.degrees()}
        terms = [HarmonicTerm(t.degree, cache[t.degree] * t.coefficient, t.component)
                 for t in self.terms if cache[t.degree] != 0.0]
        return HarmonicSum(self.N, terms, residual)

    def truncated(self, cap: int) -> "HarmonicSum":
        return HarmonicSum(self.N, [t for t in self.terms if t.degree <= cap], self.residual)

    def common_axial_frame(self) -> Optional[Tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]]]:
        """(frame, profile of s) when every term is axial about one shared frame."""
        frame = None
        profiles = []
        offset = 0.0
        for term in self.terms:
            if term.degree == 0:
                offset += term.coefficient * float(term.component(np.eye(self.N)[:1])[0])
                continue
            getter = getattr(term.component, "axial_profile", None)
            data = getter() if getter else None
            if data is None:
                return None
            f, prof = data
            if frame is None:
                frame = f
            elif f.shape != frame.shape or np.max(np.abs(f @ f.T - frame @ frame.T)) > 1e-12:
                return None
            profiles.append((term.coefficient, prof))
        if frame is None:
            return None

        def profile(s: np.ndarray) -> np.ndarray:
            s = np.asarray(s, dtype=float)
            return offset + sum(c * p(s) for c, p in profiles)

        return frame, profile


# ==================== Harmonic projection ====================

def expand_zonal(f: ZonalFunction, degree_cap: int = DEFAULT_DEGREE_CAP, nodes: int = 96) -> HarmonicSum:
    """Gegenbauer coefficients of a zonal function by Gauss-Jacobi quadrature."""
    N = f.N
    a = (N - 3) / 2.0
    t, w = gauss_jacobi(nodes, a, a)
    values = np.asarray(f.profile(t), dtype=float)
    terms = []
    fit = np.zeros_like(t)
    for j in _degrees(degree_cap, f.parity):
        p = gegenbauer_normalized(N, j, t)
        c = float(np.dot(w, values * p) / np.dot(w, p * p))
        if abs(c) < 1e-15:
            continue
        fit += c * p
        terms.append(HarmonicTerm(j, c, ZonalHarmonic(N, j, f.axis)))
    residual = float(np.max(np.abs(values - fit)))
    return HarmonicSum(N, terms, residual)


def expand_axial(f: AxialFunction, degree_cap: int = DEFAULT_DEGREE_CAP, nodes: int = 96) -> HarmonicSum:
    """Coefficients against the axial harmonics; s^2 is Beta(k/2, (N-k)/2) distributed."""
    N, k = f.N, f.k
    if k >= N:
        raise ValueError(f"axial frame of rank {k} must be smaller than N = {N}")
    y, w = gauss_jacobi(nodes, (N - k) / 2.0 - 1.0, k / 2.0 - 1.0)
    s = np.sqrt(0.5 * (1.0 + y))
    values = np.asarray(f.profile(s), dtype=float)
    terms = []
    fit = np.zeros_like(s)
    for j in _degrees(degree_cap, "even"):
        component = AxialHarmonic(N, j, f.frame)
        p = component.profile(s)
        c = float(np.dot(w, values * p) / np.dot(w, p * p))
        if abs(c) < 1e-15:
            continue
        fit += c * p
        terms.append(HarmonicTerm(j, c, component))
    residual = float(np.max(np.abs(values - fit)))
    return HarmonicSum(N, terms, residual)


def expand_dense(f: SphericalFunction, degree_cap: int = DEFAULT_DEGREE_CAP,
                 resolution: Optional[int] = None) -> HarmonicSum:
    """Projection onto harmonics of degree <= cap for N <= 4 by exact product quadrature.

    Each degree-j space is spanned by zonal polynomials about dim(H_j) fixed
    generic axes; coefficients solve the Gram system under the rule.
    """
    N = f.N
    if N > 4:
        raise ValueError(f"dense-grid harmonic projection needs N <= 4, got N = {N}")
    rule = sphere_quadrature(N, "deterministic", resolution or degree_cap + 4)
    values = np.asarray(f(rule.nodes), dtype=float)
    rng = np.random.default_rng(_DENSE_AXES_SEED + N)
    terms = []
    fit = np.zeros_like(values)
    for j in _degrees(degree_cap, f.parity):
        dim = harmonic_dimension(N, j)
        axes = normalize_rows(rng.standard_normal((dim, N)))
        basis = gegenbauer_normalized(N, j, np.clip(rule.nodes @ axes.T, -1.0, 1.0))
        weighted = basis * rule.weights[:, None]
        gram = basis.T @ weighted
        rhs = weighted.T @ values
        coeffs = np.linalg.lstsq(gram, rhs, rcond=1e-12)[0]
        part = basis @ coeffs
        if np.max(np.abs(part)) < 1e-14:
            continue
        fit += part
        terms.append(HarmonicTerm(j, 1.0, ZonalHarmonic(N, j, axes, coeffs)))
    residual = float(np.max(np.abs(values - fit)))
    return HarmonicSum(N, terms, residual)


def expand(f: SphericalFunction, degree_cap: int = DEFAULT_DEGREE_CAP) -> HarmonicSum:
    """Harmonic expansion by the cheapest exact route available for f."""
    if isinstance(f, HarmonicSum):
        return f.truncated(degree_cap)
    if isinstance(f, ZonalFunction):
        return expand_zonal(f, degree_cap)
    if isinstance(f, AxialFunction):
        return expand_axial(f, degree_cap)
    if f.N <= 4:
        return expand_dense(f, degree_cap)
    raise ValueError(
        f"harmonic projection of a black-box function needs N <= 4 or zonal/axial data "
        f"(got N = {f.N}); supply the function as a harmonic sum"
    )
