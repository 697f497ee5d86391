#!/usr/bin/env python3
"""
Section Functions

Central K-hyperplane sections S_K(theta) = vol_{N-d}(K ∩ H_theta), the shifted
radial function, weighted section functions A_{i,beta}(t, xi) and numerical
checks of the identities that tie them to cosine transforms.

Two routes give S_K:
- direct: (sigma_{N-d-1}/(N-d)) * mean of rho^(N-d) over S^{N-1} ∩ H_theta
- transform: c * (M^{1-d} rho^(N-d))(theta), c = pi^(N/2-d) sigma_{d-1}/(N-d),
  with M^{1-d} carried by Funk-Hecke multipliers on harmonic data
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from bp_algebra import SectionFrame, _complete_basis, section_frame, vector_field_system
from bp_bodies import StarBody, gauge, inscribed_radius, radial_extent
from bp_sphere import QuadratureRule, gauss_jacobi, sphere_area
from bp_transforms import (
    check_radon_alpha,
    cosine_transform,
    generalized_radon,
    gamma_Ni,
    orthonormal_basis,
    subsphere_rule,
)

BISECTION_RTOL = 1e-12
SECOND_DERIVATIVE_STEPS = (0.02, 0.01)


@dataclass
class SectionRequest:
    body: StarBody
    frame: SectionFrame
    quad: Optional[QuadratureRule] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.frame.N != self.body.N:
            raise ValueError(f"section frame lives in R^{self.frame.N}, body in R^{self.body.N}")


@dataclass
class WeightedSectionRequest:
    body: StarBody
    xi: np.ndarray
    beta: float = 0.0
    t: float = 0.0
    u_quad: Optional[QuadratureRule] = None
    v_quad: Optional[QuadratureRule] = None
    seed: Optional[int] = None

    def __post_init__(self):
        self.xi = orthonormal_basis(self.xi)
        if self.xi.shape[0] != self.body.N:
            raise ValueError(f"subspace lives in R^{self.xi.shape[0]}, body in R^{self.body.N}")

    @property
    def i(self) -> int:
        return self.xi.shape[1]


@dataclass
class IdentityResidual:
    direct: float
    direct_se: float
    transform: float
    residual: float


@dataclass
class WeightedIdentityReport:
    case: str
    lhs: float
    lhs_se: float
    rhs: float
    residual: float
    constant: float
    reference_ratio: float
    t_route: Optional[float] = None
    route_gap: Optional[float] = None


@dataclass
class BrunnReport:
    beta: float
    t_grid: List[float]
    values: List[float]
    errors: List[float]
    violations: int
    worst_margin: float
    evenness_slope: float = 0.0


# ==================== Frames ====================

def body_block_size(body: StarBody, d: Optional[int] = None) -> int:
    if d is not None:
        return d
    return body.symmetry.d if body.symmetry is not None else 1


def body_section_frame(body: StarBody, theta: Sequence[float], d: Optional[int] = None) -> SectionFrame:
    """F_d(theta) from the body's symmetry tag (d = 1 gives the hyperplane theta^perp)."""
    d = body_block_size(body, d)
    if d == 1:
        return section_frame(vector_field_system(1), body.N, theta)
    if body.symmetry is None or body.symmetry.d != d:
        raise ValueError(f"K-hyperplane sections with d = {d} need a body tagged with block size {d}")
    return section_frame(body.symmetry.system(), body.symmetry.n, theta)


# ==================== Plain sections ====================

def section_transform_constant(N: int, d: int) -> float:
    """c in S_K = c * M^{1-d} rho^(N-d)."""
    return float(np.pi ** (N / 2.0 - d) * sphere_area(d - 1) / (N - d))


def section_estimate(req: SectionRequest) -> Tuple[float, float]:
    """(S_K(theta), standard error) by quadrature over S^{N-1} ∩ H_theta."""
    k = req.body.N - req.frame.d
    if k < 2:
        raise ValueError(f"direct section quadrature needs N-d >= 2 (got N-d = {k}); use the transform route")
    rule = subsphere_rule(k, req.quad, seed=req.seed)
    mean, se = rule.integrate(req.body(rule.mapped(req.frame.basisH)) ** k)
    factor = sphere_area(k - 1) / k
    return factor * mean, factor * se


def section_volume(req: SectionRequest) -> float:
    return section_estimate(req)[0]


def section_transform(body: StarBody, thetas: np.ndarray, d: Optional[int] = None,
                      degree_cap: int = 12) -> Tuple[np.ndarray, float]:
    """S_K on a grid by the transform route; returns values and the projection error band."""
    d = body_block_size(body, d)
    N = body.N
    H = body.harmonic_sum(N - d, degree_cap)
    transformed = cosine_transform(H, 1.0 - d)
    c = section_transform_constant(N, d)
    return c * transformed(np.atleast_2d(thetas)), c * transformed.residual


def section_function(body: StarBody, thetas: np.ndarray, d: Optional[int] = None, route: str = "auto",
                     quad: Optional[QuadratureRule] = None, seed: Optional[int] = None,
                     jobs: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """S_K on a grid of directions with per-point error estimates.

    route "auto" uses the transform route when rho^(N-d) has exact harmonic data
    (always when N-d = 1), else direct quadrature.
    """
    d = body_block_size(body, d)
    thetas = np.atleast_2d(thetas)
    if route == "auto":
        route = "transform" if (body.has_harmonic(body.N - d, exact=True) or body.N - d < 2) else "direct"
    if route == "transform":
        values, band = section_transform(body, thetas, d)
        return values, np.full(values.shape, band)
    if route != "direct":
        raise ValueError(f"unknown section route {route!r} (use auto, transform or direct)")

    def one(theta: np.ndarray) -> Tuple[float, float]:
        return section_estimate(SectionRequest(body, body_section_frame(body, theta, d), quad, seed))

    with ThreadPoolExecutor(max_workers=max(jobs, 1)) as pool:
        results = list(pool.map(one, thetas))
    return np.array([r[0] for r in results]), np.array([r[1] for r in results])


def section_identity_check(body: StarBody, theta: Sequence[float], quad: Optional[QuadratureRule] = None,
                           seed: Optional[int] = None, d: Optional[int] = None) -> IdentityResidual:
    """|direct S_K(theta) - c (M^{1-d} rho^(N-d))(theta)|"""
    d = body_block_size(body, d)
    if d >= 2 and not body.has_harmonic(body.N - d, exact=True):
        raise ValueError(f"for d = {d} the continued exponent 1-d needs rho^(N-d) as a harmonic sum")
    theta = np.asarray(theta, dtype=float)
    direct, se = section_estimate(SectionRequest(body, body_section_frame(body, theta, d), quad, seed))
    values, _ = section_transform(body, theta[None, :], d)
    return IdentityResidual(direct, se, float(values[0]), abs(direct - float(values[0])))


# ==================== Shifted radial function ====================

def shifted_radial_batch(body: StarBody, z: np.ndarray, v: np.ndarray, upper: Optional[float] = None) -> np.ndarray:
    """sup{lambda > 0 : z + lambda v in K} for rows of z (interior) and v (unit)."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    z, v = np.broadcast_arrays(z, v)
    if np.any(gauge(body, z) >= 1.0):
        raise ValueError("shifted radial function needs z strictly inside the body (gauge(z) < 1)")
    if upper is None:
        upper = 2.0 * radial_extent(body)[1]
    lo = np.zeros(z.shape[0])
    hi = np.full(z.shape[0], upper)
    while np.any(hi - lo > BISECTION_RTOL * hi):
        mid = 0.5 * (lo + hi)
        inside = gauge(body, z + mid[:, None] * v) <= 1.0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)

    # secant polish on gauge(z + lambda v) - 1, kept inside the bracket
    g_lo = gauge(body, z + lo[:, None] * v) - 1.0
    g_hi = gauge(body, z + hi[:, None] * v) - 1.0
    denom = g_hi - g_lo
    safe = np.abs(denom) > 0
    lam = 0.5 * (lo + hi)
    lam[safe] = lo[safe] - g_lo[safe] * (hi[safe] - lo[safe]) / denom[safe]
    return np.clip(lam, lo, hi)


def shifted_radial(body: StarBody, z: Sequence[float], v: Sequence[float]) -> float:
    return float(shifted_radial_batch(body, np.asarray(z)[None, :], np.asarray(v)[None, :])[0])


# ==================== Weighted sections ====================

def radial_integral(rho: np.ndarray, t: float, beta: float, i: int) -> np.ndarray:
    """int_0^rho r^(i-1) (r^2 + t^2)^(beta/2) dr in closed form."""
    rho = np.asarray(rho, dtype=float)
    if t == 0.0:
        return rho ** (i + beta) / (i + beta)
    return rho**i * abs(t) ** beta / i * special.hyp2f1(-beta / 2.0, i / 2.0, i / 2.0 + 1.0, -(rho / t) ** 2)


def _slice_row(body: StarBody, z: np.ndarray, v_pts: np.ndarray, t: float, beta: float, i: int,
               upper: float) -> np.ndarray:
    lam = shifted_radial_batch(body, z[None, :], v_pts, upper)
    return radial_integral(lam, t, beta, i)


def _check_weight(i: int, N: int, beta: float) -> None:
    if i >= N:
        raise ValueError(f"xi must be a proper subspace (i = {i}, N = {N})")
    if beta <= -i:
        raise ValueError(f"weight exponent must satisfy beta > -i = {-i}, got beta = {beta}")


def weighted_section(req: WeightedSectionRequest) -> Tuple[float, float]:
    """(A_{i,beta}(t, xi), standard error).

    Outer mean over u in S^{N-1} ∩ xi^perp, middle integral over v in
    S^{N-1} ∩ xi (surface measure), inner radial integral in closed form.
    """
    body, i, beta, t = req.body, req.i, req.beta, float(req.t)
    N = body.N
    _check_weight(i, N, beta)
    r_K = inscribed_radius(body)
    if abs(t) >= r_K:
        raise ValueError(f"offset |t| = {abs(t)} must stay below the inscribed radius {r_K:.6g}")

    perp = _complete_basis(req.xi)
    u_rule = subsphere_rule(N - i, req.u_quad, seed=req.seed)
    v_rule = subsphere_rule(i, req.v_quad, seed=None if req.seed is None else req.seed + 1)
    v_pts = v_rule.mapped(req.xi)
    factor = sphere_area(i - 1)

    if t == 0.0:
        mean, se = v_rule.integrate(radial_integral(body(v_pts), 0.0, beta, i))
        return factor * mean, factor * se

    u_pts = u_rule.mapped(perp)
    upper = 2.0 * radial_extent(body)[1]
    table = np.empty((u_pts.shape[0], v_pts.shape[0]))
    for k, u in enumerate(u_pts):
        table[k] = _slice_row(body, t * u, v_pts, t, beta, i, upper)

    if v_rule.kind == "monte-carlo":
        mean, se = v_rule.integrate(u_rule.weights @ table)
    else:
        mean, se = u_rule.integrate(table @ v_rule.weights)
    return factor * mean, factor * se


def offset_moment(req: WeightedSectionRequest, alpha: float, t_nodes: int = 32) -> Tuple[float, float]:
    """int_0^inf t^(alpha-1) A_{i,beta}(t, xi) dt by slices, req.t ignored.

    For each u in S^{N-1} ∩ xi^perp the offsets run over 0 < t < rho_K(u) on a
    Gauss-Jacobi rule carrying t^(alpha-1); the slice through t u is taken empty
    once t u leaves K. That holds when h_K(u) = rho_K(u) on xi^perp, e.g. balls
    and convex bodies of revolution whose axis spans xi^perp.
    """
    body, i, beta = req.body, req.i, req.beta
    N = body.N
    _check_weight(i, N, beta)
    if alpha <= 0:
        raise ValueError(f"offset moment needs alpha > 0, got {alpha}")

    perp = _complete_basis(req.xi)
    u_rule = subsphere_rule(N - i, req.u_quad, seed=req.seed)
    v_rule = subsphere_rule(i, req.v_quad, seed=None if req.seed is None else req.seed + 1)
    v_pts = v_rule.mapped(req.xi)
    u_pts = u_rule.mapped(perp)
    upper = 2.0 * radial_extent(body)[1]
    y, w = gauss_jacobi(t_nodes, 0.0, alpha - 1.0)

    reach = body(u_pts)
    table = np.zeros((u_pts.shape[0], v_pts.shape[0]))
    for k, u in enumerate(u_pts):
        for yk, wk in zip(y, w):
            t = 0.5 * reach[k] * (1.0 + yk)
            table[k] += wk * _slice_row(body, t * u, v_pts, t, beta, i, upper)
        # int_0^R t^(alpha-1) dt = R^alpha / alpha; the Gauss-Jacobi weights sum to 1
        table[k] *= reach[k] ** alpha / alpha

    if v_rule.kind == "monte-carlo":
        mean, se = v_rule.integrate(u_rule.weights @ table)
    else:
        mean, se = u_rule.integrate(table @ v_rule.weights)
    factor = sphere_area(i - 1)
    return factor * mean, factor * se


def brunn_check(body: StarBody, xi: np.ndarray, beta: float, t_grid: Sequence[float],
                seed: Optional[int] = None, h: float = 1e-3) -> BrunnReport:
    """A_{i,beta}(t, xi) <= A_{i,beta}(0, xi) on the grid within 3 standard errors.

    Also reports the central-difference slope |A(h) - A(-h)| / 2h, which vanishes for origin-symmetric bodies.
    """
    values, errors = [], []
    for t in [0.0] + list(t_grid):
        a, se = weighted_section(WeightedSectionRequest(body, xi, beta, t, seed=seed))
        values.append(a)
        errors.append(se)
    peak, peak_se = values[0], errors[0]
    margins = [peak - a + 3.0 * float(np.hypot(se, peak_se)) for a, se in zip(values[1:], errors[1:])]
    violations = sum(1 for m in margins if m < -1e-12)
    a_plus, _ = weighted_section(WeightedSectionRequest(body, xi, beta, h, seed=seed))
    a_minus, _ = weighted_section(WeightedSectionRequest(body, xi, beta, -h, seed=seed))
    slope = abs(a_plus - a_minus) / (2.0 * h)
    return BrunnReport(beta, list(t_grid), values[1:], errors[1:], violations, min(margins, default=0.0), slope)


# ==================== Weighted-section identities ====================

def _positive_alpha_constant(N: int, i: int, alpha: float, beta: float) -> float:
    return float(np.pi ** (i / 2.0) / (alpha + beta + i) * special.rgamma((N - i - alpha) / 2.0))


def _transform_side(body: StarBody, exponent: float, power: float, points: np.ndarray,
                    degree_cap: int = 12) -> np.ndarray:
    H = body.harmonic_sum(power, degree_cap)
    return cosine_transform(H, exponent)(np.atleast_2d(points))


def krya_identity_check(body: StarBody, theta: Sequence[float], alpha: Optional[float] = None,
                        beta: float = 0.0, case: str = "positive-alpha", xi: Optional[np.ndarray] = None,
                        seed: Optional[int] = None, d: Optional[int] = None,
                        t_nodes: int = 32) -> WeightedIdentityReport:
    """Weighted-section side versus cosine-transform side.

    case "positive-alpha": (1/Gamma(alpha/2)) int_0^inf t^(alpha-1) A_{i,beta}(t, xi) dt
        against pi^(i/2)/((alpha+beta+i) Gamma((N-i-alpha)/2)) (R_{N-i} M^{alpha+1+i-N} rho^(alpha+beta+i))(xi^perp).
        lhs rewrites the t-integral as the body integral of |P_{xi^perp} x|^(alpha+i-N) |x|^beta
        divided by sigma_{N-i-1}; xi defaults to H_theta. When N-i <= 4 and t_nodes > 0 the
        t-integral is also taken slice by slice (offset_moment) and reported as t_route with
        route_gap = |t_route - lhs|.
    case "alpha=N-d": (1/2) A_{N-d,beta}(0, H_theta)
        against pi^((N-d)/2)/((beta+N-d) Gamma(d/2)) (M^{1-d} rho^(beta+N-d))(theta).
    case "second-derivative": -(1/4) A''_{N-d,beta}(0, H_theta) (Richardson, h = 0.02, 0.01)
        against pi^((N-d)/2)/((beta+N-d-2) Gamma((d+2)/2)) (M^{-1-d} rho^(beta+N-d-2))(theta).
    """
    N = body.N
    d = body_block_size(body, d)
    theta = np.asarray(theta, dtype=float)
    frame = body_section_frame(body, theta, d)
    H_basis = frame.basisH

    if case == "positive-alpha":
        xi = H_basis if xi is None else orthonormal_basis(xi)
        i = xi.shape[1]
        if alpha is None or alpha <= 0:
            raise ValueError(f"case positive-alpha needs alpha > 0, got {alpha}")
        check_radon_alpha(N, i, alpha)
        p = alpha + beta + i
        if p <= 0:
            raise ValueError(f"alpha + beta + i must be positive, got {p}")
        # body integral in polar form: sigma_{N-1}/p * mean |P_{xi^perp} theta|^(alpha+i-N) rho^p
        weighted_mean = generalized_radon(body.power(p), xi, alpha, seed=seed) / gamma_Ni(N, i, alpha)
        lhs = (sphere_area(N - 1) / sphere_area(N - i - 1) * weighted_mean / p
               * float(special.rgamma(alpha / 2.0)))
        perp = _complete_basis(xi)
        constant = _positive_alpha_constant(N, i, alpha, beta)
        transformed = cosine_transform(body.harmonic_sum(p), alpha + 1.0 + i - N)
        rule = subsphere_rule(N - i, seed=seed)
        rhs = constant * rule.integrate(transformed(rule.mapped(perp)))[0]
        reference = sphere_area(N - i - 1) / sphere_area(N - 1)
        report = WeightedIdentityReport(case, lhs, 0.0, rhs, abs(lhs - rhs), constant, reference)
        if t_nodes and N - i <= 4:
            moment, _ = offset_moment(WeightedSectionRequest(body, xi, beta, seed=seed), alpha, t_nodes)
            report.t_route = moment * float(special.rgamma(alpha / 2.0))
            report.route_gap = abs(report.t_route - lhs)
        return report

    i = N - d
    if case == "alpha=N-d":
        a0, se = weighted_section(WeightedSectionRequest(body, H_basis, beta, 0.0, seed=seed))
        constant = float(np.pi ** (i / 2.0) / (beta + i) * special.rgamma(d / 2.0))
        rhs = constant * float(_transform_side(body, 1.0 - d, beta + i, theta)[0])
        lhs = 0.5 * a0
        return WeightedIdentityReport(case, lhs, 0.5 * se, rhs, abs(lhs - rhs), constant, 1.0 / constant)

    if case == "second-derivative":
        if abs(beta + i - 2) < 1e-12:
            raise ValueError("second-derivative identity needs beta + N - d - 2 != 0")
        a0, _ = weighted_section(WeightedSectionRequest(body, H_basis, beta, 0.0, seed=seed))
        h1, h2 = SECOND_DERIVATIVE_STEPS
        curvatures = []
        for h in (h1, h2):
            ah, _ = weighted_section(WeightedSectionRequest(body, H_basis, beta, h, seed=seed))
            curvatures.append(2.0 * (ah - a0) / h**2)
        ratio = (h1 / h2) ** 2
        second = (ratio * curvatures[1] - curvatures[0]) / (ratio - 1.0)
        lhs = -0.25 * second
        constant = float(np.pi ** (i / 2.0) / (beta + i - 2) * special.rgamma((d + 2) / 2.0))
        rhs = constant * float(_transform_side(body, -1.0 - d, beta + i - 2, theta)[0])
        return WeightedIdentityReport(case, lhs, 0.0, rhs, abs(lhs - rhs), constant, 1.0 / constant)

    raise ValueError(f"unknown case {case!r} (use positive-alpha, alpha=N-d or second-derivative)")


# ==================== Scans ====================

SCAN_FIELDS_TAIL = ["S_K", "S_K_se", "S_L", "S_L_se"]


def section_scan(K: StarBody, L: StarBody, thetas: np.ndarray, d: Optional[int] = None,
                 seed: Optional[int] = None, jobs: int = 1) -> List[Dict[str, float]]:
    """Rows (theta components, S_K, S_L and their errors) for CSV output."""
    if K.N != L.N:
        raise ValueError(f"bodies live in different dimensions ({K.N} vs {L.N})")
    sk, sk_se = section_function(K, thetas, d, seed=seed, jobs=jobs)
    sl, sl_se = section_function(L, thetas, d, seed=seed, jobs=jobs)
    rows = []
    for idx, theta in enumerate(np.atleast_2d(thetas)):
        row = {f"theta_{c + 1}": float(x) for c, x in enumerate(theta)}
        row.update({"S_K": float(sk[idx]), "S_K_se": float(sk_se[idx]),
                    "S_L": float(sl[idx]), "S_L_se": float(sl_se[idx])})
        rows.append(row)
    return rows


def save_section_scan(rows: List[Dict[str, float]], filename: str) -> None:
    if not rows:
        raise ValueError("no scan rows to write")
    with open(filename, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()), quoting=csv.QUOTE_MINIMAL)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(float(v)) if isinstance(v, float) else v for k, v in row.items()})
