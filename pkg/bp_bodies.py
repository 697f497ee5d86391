#!/usr/bin/env python3
"""
Star and Convex Bodies

Origin-symmetric star bodies in R^N given by radial functions. A body carries
whichever exact data its construction provides:
- harmonic data: rho^q as a HarmonicSum (exact multiplier arithmetic)
- axial data: rho as a profile of s = |F^T theta| for an orthonormal frame F
  (zonal bodies have rank-1 frames); gives 1-D volumes and expansions in any N
- a symmetry tag (d, n, chirality) asserting invariance under the group G

Volumes use vol_N(K) = (sigma_{N-1}/N) * mean of rho^N over S^{N-1}.
Convexity is certified by sampling midpoints of boundary pairs.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from bp_algebra import VectorFieldSystem, frame_matrix, group_element, random_unit, vector_field_system
from bp_sphere import (
    AxialFunction,
    AxialHarmonic,
    EvaluatorFunction,
    HarmonicSum,
    HarmonicTerm,
    QuadratureRule,
    SphericalFunction,
    ZonalFunction,
    ZonalHarmonic,
    expand,
    gauss_jacobi,
    normalize_rows,
    sphere_area,
    sphere_quadrature,
    theta_grid,
)

VALIDATION_POINTS = 4096
VALIDATION_SEED = 7
CONVEXITY_TOLERANCE = 1e-9
EXACT_PROJECTION_RESIDUAL = 1e-12
AXIAL_NODES = 160


@dataclass(frozen=True)
class SymmetryTag:
    d: int
    n: int
    chirality: str = "left"

    @property
    def N(self) -> int:
        return self.d * self.n

    def system(self) -> VectorFieldSystem:
        return vector_field_system(self.d, self.chirality)


@dataclass
class BodyReport:
    volume: float
    volume_se: float
    convexity_witness: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]]
    min_radial: float
    max_radial: float

    def to_dict(self) -> dict:
        return {
            "volume": self.volume,
            "volume_se": self.volume_se,
            "convex": self.convexity_witness is None,
            "min_radial": self.min_radial,
            "max_radial": self.max_radial,
        }


class StarBody:
    """Origin-symmetric star body with radial function rho."""

    def __init__(self, N: int, rho: Callable[[np.ndarray], np.ndarray], representation: str = "closed-form",
                 symmetry: Optional[SymmetryTag] = None,
                 harmonic_power: Optional[Tuple[float, HarmonicSum]] = None,
                 axial: Optional[Tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]]] = None,
                 name: str = "body"):
        if representation not in ("closed-form", "zonal-profile", "finite-harmonic-sum"):
            raise ValueError(f"unknown representation {representation!r}")
        if symmetry is not None and symmetry.N != N:
            raise ValueError(f"symmetry tag (d={symmetry.d}, n={symmetry.n}) does not match N = {N}")
        self.N = N
        self._rho = rho
        self.representation = representation
        self.symmetry = symmetry
        self.harmonic_power = harmonic_power
        self.axial = axial
        self.name = name

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self._rho(np.atleast_2d(points)), dtype=float)

    def power(self, p: float) -> SphericalFunction:
        """rho^p in the most exact form available."""
        if self.harmonic_power is not None and p == self.harmonic_power[0]:
            return self.harmonic_power[1]
        if self.axial is not None:
            frame, profile = self.axial
            return AxialFunction(self.N, frame, lambda s, prof=profile: prof(s) ** p)
        return EvaluatorFunction(self.N, lambda x: self(x) ** p, parity="even")

    def harmonic_sum(self, p: float, degree_cap: int = 12) -> HarmonicSum:
        """rho^p as an even harmonic sum; stored exact data is never truncated, degree_cap bounds projections."""
        if self.harmonic_power is not None and p == self.harmonic_power[0]:
            return self.harmonic_power[1]
        return expand(self.power(p), degree_cap)

    def has_harmonic(self, p: float, exact: bool = False) -> bool:
        """Whether rho^p has a harmonic expansion; exact excludes dense-grid projection."""
        if (self.harmonic_power is not None and p == self.harmonic_power[0]) or self.axial is not None:
            return True
        return not exact and self.N <= 4


# ==================== Constructors ====================

def ball(N: int, radius: float = 1.0, symmetry: Optional[SymmetryTag] = None) -> StarBody:
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    frame = np.eye(N)[:, :1]
    return StarBody(
        N, lambda x: np.full(np.atleast_2d(x).shape[0], radius), "closed-form", symmetry,
        harmonic_power=(1.0, HarmonicSum.constant(N, radius)),
        axial=(frame, lambda s: np.full(np.shape(s), radius)),
        name=f"ball(r={radius:g})",
    )


def ball_block_lp(n: int, d: int, p: float, allow_nonconvex: bool = False) -> StarBody:
    """Unit ball of (sum_j |x_j|_2^p)^(1/p) over the n blocks x_j in R^d."""
    if p < 1 and not allow_nonconvex:
        raise ValueError(f"p must be >= 1 for a convex block-lp ball, got p = {p} "
                         f"(pass allow_nonconvex=True for star-body experiments)")
    if p <= 0:
        raise ValueError(f"p must be positive, got p = {p}")
    N = n * d

    def rho(x: np.ndarray) -> np.ndarray:
        blocks = np.linalg.norm(np.atleast_2d(x).reshape(-1, n, d), axis=2)
        return np.sum(blocks**p, axis=1) ** (-1.0 / p)

    axial = None
    if n == 2:
        # |x_1|^2 + |x_2|^2 = 1 on the sphere, so rho depends on s = |x_1| only
        axial = (np.eye(N)[:, :d], lambda s: (s**p + (1.0 - s**2) ** (p / 2.0)) ** (-1.0 / p))
    return StarBody(N, rho, "closed-form", SymmetryTag(d, n), axial=axial, name=f"block-l{p:g}(n={n},d={d})")


def g_zonal_harmonic(sys: VectorFieldSystem, n: int, axis: Sequence[float], degree: int):
    """G-invariant degree-j harmonic about axis: P_j(a.theta) averaged over the G-orbit of a."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    N = sys.d * n
    if sys.d == 1:
        return ZonalHarmonic(N, degree, axis)
    if sys.d == 8:
        blocks = np.linalg.norm(axis.reshape(n, 8), axis=1)
        if np.count_nonzero(blocks > 1e-12) != 1:
            raise ValueError("for d = 8 the axis must lie in a single block (its G-orbit then spans that block)")
    return AxialHarmonic(N, degree, frame_matrix(sys, n, axis))


def harmonic_body(N: int, q: float, rho_power: HarmonicSum, symmetry: Optional[SymmetryTag] = None,
                  name: str = "harmonic", extra_points: Optional[np.ndarray] = None) -> StarBody:
    """Body with rho^q = rho_power; positivity validated on a fixed grid."""
    if rho_power.N != N:
        raise ValueError(f"harmonic data lives on S^{rho_power.N - 1}, body needs S^{N - 1}")
    odd = [t.degree for t in rho_power.terms if t.degree % 2]
    if odd:
        raise ValueError(f"origin-symmetric bodies need even harmonic degrees, got {sorted(set(odd))}")
    points = theta_grid(N, VALIDATION_POINTS, VALIDATION_SEED)
    if extra_points is not None:
        points = np.vstack([points, extra_points])
    values = rho_power(points)
    worst = int(np.argmin(values))
    if values[worst] <= 0:
        raise ValueError(f"rho^{q:g} is not positive: value {values[worst]:.3e} at theta = {points[worst].tolist()}")

    axial = None
    common = rho_power.common_axial_frame()
    if common is not None:
        frame, profile = common
        axial = (frame, lambda s, prof=profile: np.maximum(prof(s), 0.0) ** (1.0 / q))

    def rho(x: np.ndarray) -> np.ndarray:
        return np.maximum(rho_power(x), 0.0) ** (1.0 / q)

    return StarBody(N, rho, "finite-harmonic-sum", symmetry, harmonic_power=(q, rho_power), axial=axial, name=name)


def harmonic_cigar(d: int, n: int, delta: float, degree: int = 2) -> StarBody:
    """rho^d = 1 + delta * Z_j with Z_j the G-zonal harmonic about the first block axis."""
    sys = vector_field_system(d)
    N = d * n
    component = g_zonal_harmonic(sys, n, np.eye(N)[0], degree)
    rho_d = HarmonicSum.constant(N) + HarmonicSum(N, [HarmonicTerm(degree, delta, component)])
    return harmonic_body(N, float(d), rho_d, SymmetryTag(d, n), name=f"cigar(d={d},n={n},delta={delta:g})")


def scaled(K: StarBody, s: float) -> StarBody:
    """Dilation sK."""
    if s <= 0:
        raise ValueError(f"scale must be positive, got {s}")
    harmonic = None
    if K.harmonic_power is not None:
        q, H = K.harmonic_power
        harmonic = (q, H.scaled(s**q))
    axial = None
    if K.axial is not None:
        frame, profile = K.axial
        axial = (frame, lambda t, prof=profile: s * prof(t))
    return StarBody(K.N, lambda x: s * K(x), K.representation, K.symmetry, harmonic, axial, name=f"{s:g}*{K.name}")


def perturbed_body(L: StarBody, eps: float, phi: SphericalFunction, d: int,
                   extra_points: Optional[np.ndarray] = None) -> StarBody:
    """K with rho_K^(N-d) = rho_L^(N-d) - eps * phi."""
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    if eps == 0:
        return L
    N = L.N
    p = float(N - d)
    symmetry = None
    if L.symmetry is not None and g_invariance_defect(phi, L.symmetry.system(), L.symmetry.n) < 1e-10:
        symmetry = L.symmetry

    name = f"{L.name}-perturbed(eps={eps:g})"
    if isinstance(phi, HarmonicSum) and L.has_harmonic(p, exact=True):
        # a 1-D projection of rho^p is only usable when it reproduces rho^p (polynomial profile)
        base = L.harmonic_sum(p)
        if base.residual <= EXACT_PROJECTION_RESIDUAL:
            return harmonic_body(N, p, base - phi.scaled(eps), symmetry, name=name, extra_points=extra_points)

    points = theta_grid(N, VALIDATION_POINTS, VALIDATION_SEED)
    if extra_points is not None:
        points = np.vstack([points, extra_points])
    values = L(points) ** p - eps * phi(points)
    worst = int(np.argmin(values))
    if values[worst] <= 0:
        raise ValueError(f"perturbation breaks positivity: rho^{p:g} = {values[worst]:.3e} "
                         f"at theta = {points[worst].tolist()}")

    def rho(x: np.ndarray) -> np.ndarray:
        return np.maximum(L(x) ** p - eps * phi(x), 0.0) ** (1.0 / p)

    axial = None
    phi_axial = phi.common_axial_frame() if isinstance(phi, HarmonicSum) else None
    if L.axial is not None and phi_axial is not None:
        frame, profile = L.axial
        phi_frame, phi_profile = phi_axial
        if phi_frame.shape == frame.shape and np.max(np.abs(phi_frame @ phi_frame.T - frame @ frame.T)) < 1e-12:
            axial = (frame, lambda s, a=profile, b=phi_profile: np.maximum(a(s) ** p - eps * b(s), 0.0) ** (1.0 / p))
    return StarBody(N, rho, "closed-form", symmetry, axial=axial, name=name)


# ==================== Gauge, volume, extent ====================

def gauge(K: StarBody, x: np.ndarray) -> np.ndarray:
    """Minkowski functional |x| / rho_K(x/|x|), 0 at the origin."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    r = np.linalg.norm(pts, axis=1)
    out = np.zeros_like(r)
    nz = r > 0
    out[nz] = r[nz] / K(pts[nz] / r[nz, None])
    return out[0] if single else out


def axial_mean(N: int, frame: np.ndarray, profile: Callable[[np.ndarray], np.ndarray],
               nodes: int = AXIAL_NODES) -> float:
    """Mean over S^{N-1} of profile(|F^T theta|); s^2 ~ Beta(k/2, (N-k)/2)."""
    k = frame.shape[1]
    y, w = gauss_jacobi(nodes, (N - k) / 2.0 - 1.0, k / 2.0 - 1.0)
    s = np.sqrt(0.5 * (1.0 + y))
    return float(np.dot(w, profile(s)))


def volume(K: StarBody, quad: Optional[QuadratureRule] = None) -> Tuple[float, float]:
    """(vol_N(K), standard error)."""
    factor = sphere_area(K.N - 1) / K.N
    if quad is None and K.axial is not None:
        frame, profile = K.axial
        return factor * axial_mean(K.N, frame, lambda s: profile(s) ** K.N), 0.0
    if quad is None:
        if K.N > 4:
            raise ValueError(f"volume in N = {K.N} needs a Monte Carlo quadrature rule")
        quad = sphere_quadrature(K.N, "deterministic", 32)
    mean, se = quad.integrate(K(quad.nodes) ** K.N)
    return factor * mean, factor * se


def volume_difference(K: StarBody, L: StarBody, quad: Optional[QuadratureRule] = None) -> Tuple[float, float]:
    """vol(K) - vol(L) with a paired standard error (common nodes)."""
    if K.N != L.N:
        raise ValueError(f"bodies live in different dimensions ({K.N} vs {L.N})")
    factor = sphere_area(K.N - 1) / K.N
    if quad is None and K.axial is not None and L.axial is not None:
        fk, pk = K.axial
        fl, pl = L.axial
        if fk.shape == fl.shape and np.max(np.abs(fk @ fk.T - fl @ fl.T)) < 1e-12:
            return factor * axial_mean(K.N, fk, lambda s: pk(s) ** K.N - pl(s) ** K.N), 0.0
    if quad is None:
        if K.N > 4:
            vk, sk = volume(K)
            vl, sl = volume(L)
            return vk - vl, float(np.hypot(sk, sl))
        quad = sphere_quadrature(K.N, "deterministic", 32)
    mean, se = quad.integrate(K(quad.nodes) ** K.N - L(quad.nodes) ** K.N)
    return factor * mean, factor * se


def radial_extent(K: StarBody, points: Optional[np.ndarray] = None) -> Tuple[float, float]:
    if points is None:
        points = theta_grid(K.N, VALIDATION_POINTS, VALIDATION_SEED)
    values = K(points)
    return float(np.min(values)), float(np.max(values))


def inscribed_radius(K: StarBody, points: Optional[np.ndarray] = None) -> float:
    """min rho over the grid minus 1%."""
    return 0.99 * radial_extent(K, points)[0]


# ==================== Symmetry ====================

def _group_samples(sys: VectorFieldSystem, resolution: int, samples: int, seed: int) -> List[np.ndarray]:
    d = sys.d
    if d == 1:
        return [np.array([1.0]), np.array([-1.0])]
    if d == 2:
        phi = 2.0 * np.pi * np.arange(resolution) / resolution
        return list(np.column_stack([np.cos(phi), np.sin(phi)]))
    if d == 4:
        return list(sphere_quadrature(4, "deterministic", max(resolution // 8, 4)).nodes)
    return list(sphere_quadrature(8, "monte-carlo", seed=seed, samples=samples).nodes)


def symmetrize(f: SphericalFunction, sys: VectorFieldSystem, n: int, resolution: int = 64,
               samples: int = 4096, seed: int = 0) -> SphericalFunction:
    """Average of f over G = {diag(g_lambda, ..., g_lambda)}.

    A zonal f about axis a becomes axial about F_d(a) (exact 1-D average over
    the orbit of a); any other f is averaged over lambda by quadrature.
    """
    N = sys.d * n
    if isinstance(f, ZonalFunction) and (sys.d < 8 or np.count_nonzero(
            np.linalg.norm(f.axis.reshape(n, sys.d), axis=1) > 1e-12) == 1):
        k = sys.d
        if k == 1:
            t, w = np.array([1.0, -1.0]), np.array([0.5, 0.5])
        else:
            a = (k - 3) / 2.0
            t, w = gauss_jacobi(64, a, a)
        profile = f.profile
        return AxialFunction(N, frame_matrix(sys, n, f.axis),
                             lambda s: np.asarray(profile(np.asarray(s)[..., None] * t)) @ w)

    matrices = [group_element(sys, n, lam).matrix for lam in _group_samples(sys, resolution, samples, seed)]

    def averaged(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        total = np.zeros(points.shape[0])
        for g in matrices:
            total += f(points @ g.T)
        return total / len(matrices)

    return EvaluatorFunction(N, averaged, parity=f.parity)


def g_invariance_defect(f: Callable[[np.ndarray], np.ndarray], sys: VectorFieldSystem, n: int,
                        orbits: int = 32, per_orbit: int = 8, seed: int = 0) -> float:
    """max |f(G_lambda theta) - f(theta)| over sampled orbits."""
    rng = np.random.default_rng(seed)
    N = sys.d * n
    thetas = normalize_rows(rng.standard_normal((orbits, N)))
    base = np.asarray(f(thetas))
    worst = 0.0
    for _ in range(per_orbit):
        g = group_element(sys, n, random_unit(rng, sys.d)).matrix
        worst = max(worst, float(np.max(np.abs(np.asarray(f(thetas @ g.T)) - base))))
    return worst


# ==================== Convexity ====================

def convexity_check(K: StarBody, trials: int = 100_000, seed: int = 0,
                    near_fraction: float = 0.5, chunk: int = 20_000
                    ) -> Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """First (x, y, midpoint) with gauge(midpoint) > 1 + 1e-9, or None.

    Half of the pairs are independent directions, the rest are nearby
    directions (angular offset up to ~0.3) that expose local concavity.
    """
    rng = np.random.default_rng(seed)
    N = K.N
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        u = normalize_rows(rng.standard_normal((m, N)))
        v = normalize_rows(rng.standard_normal((m, N)))
        near = rng.random(m) < near_fraction
        tau = rng.uniform(0.01, 0.3, size=m)
        v[near] = normalize_rows(u[near] + tau[near, None] * v[near])
        x = K(u)[:, None] * u
        y = K(v)[:, None] * v
        mid = 0.5 * (x + y)
        bad = np.nonzero(gauge(K, mid) > 1.0 + CONVEXITY_TOLERANCE)[0]
        if bad.size:
            i = int(bad[0])
            return x[i], y[i], mid[i]
        done += m
    return None


def body_report(K: StarBody, quad: Optional[QuadratureRule] = None, trials: int = 100_000,
                seed: int = 0) -> BodyReport:
    vol, se = volume(K, quad)
    lo, hi = radial_extent(K)
    return BodyReport(vol, se, convexity_check(K, trials, seed), lo, hi)


# ==================== Configuration ====================

def harmonic_from_terms(spec_terms: Sequence[dict], sys: VectorFieldSystem, n: int) -> HarmonicSum:
    N = sys.d * n
    total = HarmonicSum(N, [])
    for term in spec_terms:
        degree = int(term.get("degree", 0))
        if degree < 0 or degree % 2:
            raise ValueError(f"harmonic degree must be even and nonnegative, got {degree}")
        coefficient = float(term.get("coefficient", 1.0))
        if degree == 0:
            total = total + HarmonicSum.constant(N, coefficient)
            continue
        axis = np.asarray(term.get("axis", np.eye(N)[0]), dtype=float)
        if axis.shape != (N,):
            raise ValueError(f"harmonic axis must have N = {N} components, got {axis.shape}")
        total = total + HarmonicSum(N, [HarmonicTerm(degree, coefficient, g_zonal_harmonic(sys, n, axis, degree))])
    return total


def body_from_spec(spec: Dict, d: int, n: int) -> StarBody:
    """Build a body from its configuration record (see bp_config for the schema)."""
    kind = spec.get("kind")
    N = d * n
    sys = vector_field_system(d, spec.get("chirality", "left"))
    tag = SymmetryTag(d, n, sys.chirality)
    if kind == "ball":
        body = ball(N, float(spec.get("radius", 1.0)), tag)
    elif kind == "block_lp":
        body = ball_block_lp(n, d, float(spec.get("p", 4.0)), bool(spec.get("allow_nonconvex", False)))
    elif kind == "cigar":
        body = harmonic_cigar(d, n, float(spec.get("delta", 0.3)), int(spec.get("degree", 2)))
    elif kind == "harmonic":
        q = float(spec.get("power", N - d))
        body = harmonic_body(N, q, harmonic_from_terms(spec.get("terms", [{"degree": 0}]), sys, n), tag)
    else:
        raise ValueError(f"unknown body kind {kind!r} (expected ball, block_lp, cigar or harmonic)")

    for pert in spec.get("perturbations", []):
        phi = harmonic_from_terms([pert], sys, n)
        body = perturbed_body(body, float(pert.get("eps", 0.0)), phi, d)
    if "scale" in spec:
        body = scaled(body, float(spec["scale"]))
    return body
