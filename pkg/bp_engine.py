#!/usr/bin/env python3
"""
Busemann-Petty Experiment Engine

Volume-comparison verdicts, positivity certificates, counterexample
construction by harmonic perturbation, lambda-intersection-body sign tests,
the D_m comparison route and the case tables of the positive direction.

Verdicts never promote a margin below max(3 sigma, floor) to a claim:
deterministic routes carry error 0 and rely on a relative floor instead.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from bp_algebra import _complete_basis, vector_field_system
from bp_bodies import (
    StarBody,
    axial_mean,
    ball,
    ball_block_lp,
    convexity_check,
    g_zonal_harmonic,
    harmonic_body,
    perturbed_body,
    scaled,
    symmetrize,
    SymmetryTag,
    volume,
    volume_difference,
)
from bp_sections import body_block_size, section_function, section_transform_constant
from bp_sphere import (
    AxialFunction,
    HarmonicSum,
    HarmonicTerm,
    QuadratureRule,
    ZonalFunction,
    expand,
    sphere_quadrature,
    theta_grid,
)
from bp_transforms import check_dm_order, cosine_transform, riesz_Dm_harmonic

CONSISTENT = "consistent"
COUNTEREXAMPLE = "counterexample"
INCONCLUSIVE = "inconclusive"
MEMBER = "member"
NON_MEMBER = "non-member"

DEFAULT_TOLERANCES = {
    "sigma": 3.0,
    "relative_floor": 1e-12,
    "band_multiplier": 3.0,
    "volume_samples": 200_000,
}


def _tolerances(overrides: Optional[Dict] = None) -> Dict:
    tol = dict(DEFAULT_TOLERANCES)
    if overrides:
        tol.update(overrides)
    return tol


@dataclass
class ComparisonReport:
    grid_size: int
    violations: int
    worst_margin: float
    worst_margin_error: float
    worst_theta: List[float]
    vol_K: float
    vol_K_se: float
    vol_L: float
    vol_L_se: float
    vol_difference: float
    vol_difference_se: float
    verdict: str
    seed: Optional[int] = None
    margins: Optional[np.ndarray] = field(default=None, repr=False)
    margin_errors: Optional[np.ndarray] = field(default=None, repr=False)
    notes: Dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "grid_size": self.grid_size,
            "violations": self.violations,
            "worst_margin": self.worst_margin,
            "worst_margin_error": self.worst_margin_error,
            "worst_theta": self.worst_theta,
            "vol_K": self.vol_K,
            "vol_K_se": self.vol_K_se,
            "vol_L": self.vol_L,
            "vol_L_se": self.vol_L_se,
            "vol_difference": self.vol_difference,
            "vol_difference_se": self.vol_difference_se,
            "verdict": self.verdict,
            "seed": self.seed,
            "notes": self.notes,
        }


@dataclass
class PositivityCertificate:
    minimum: float
    argmin: np.ndarray
    alpha: float
    band: float
    grid_size: int

    @property
    def negative(self) -> bool:
        return self.minimum < -self.band


@dataclass
class IntersectionBodyReport:
    lam: float
    minimum: float
    argmin: List[float]
    band: float
    verdict: str
    degree_cap: int
    truncation: str = "projected"

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "minimum": self.minimum, "argmin": self.argmin, "band": self.band,
                "verdict": self.verdict, "degree_cap": self.degree_cap, "truncation": self.truncation}


# ==================== Comparison ====================

def render_verdict(margins: np.ndarray, margin_errors: np.ndarray, section_scale: float,
                   diff: float, diff_se: float, volume_scale: float, tolerances: Dict) -> Tuple[int, str]:
    """(violation count, verdict) from per-theta margins S_L - S_K and vol(K) - vol(L)."""
    sigma, floor = tolerances["sigma"], tolerances["relative_floor"]
    section_band = np.maximum(sigma * margin_errors, floor * section_scale)
    violations = int(np.sum(margins < -section_band))
    hypothesis_strict = bool(np.all(margins >= section_band))
    volume_band = max(sigma * diff_se, floor * volume_scale)
    if hypothesis_strict and diff > volume_band:
        return violations, COUNTEREXAMPLE
    if violations == 0 and diff > floor * volume_scale:
        return violations, INCONCLUSIVE
    return violations, CONSISTENT


def _volume_rule(K: StarBody, L: StarBody, quad: Optional[QuadratureRule], seed: Optional[int],
                 samples: int) -> Optional[QuadratureRule]:
    if quad is not None or K.N <= 4 or (K.axial is not None and L.axial is not None):
        return quad
    return sphere_quadrature(K.N, "monte-carlo", seed=0 if seed is None else seed, samples=samples)


def _check_pair(K: StarBody, L: StarBody) -> None:
    if K.N != L.N:
        raise ValueError(f"bodies live in different dimensions ({K.N} vs {L.N})")
    if K.symmetry is not None and L.symmetry is not None and \
            (K.symmetry.d, K.symmetry.n) != (L.symmetry.d, L.symmetry.n):
        raise ValueError(f"symmetry tags differ: (d={K.symmetry.d}, n={K.symmetry.n}) "
                         f"vs (d={L.symmetry.d}, n={L.symmetry.n})")


def compare_values(K: StarBody, L: StarBody, sK: np.ndarray, eK: np.ndarray, sL: np.ndarray, eL: np.ndarray,
                   thetas: np.ndarray, quad: Optional[QuadratureRule] = None, seed: Optional[int] = None,
                   tolerances: Optional[Dict] = None) -> ComparisonReport:
    """Report from precomputed section-type values; volumes are computed here."""
    tol = _tolerances(tolerances)
    rule = _volume_rule(K, L, quad, seed, int(tol["volume_samples"]))
    vol_K, vol_K_se = volume(K, rule)
    vol_L, vol_L_se = volume(L, rule)
    diff, diff_se = volume_difference(K, L, rule)

    margins = sL - sK
    errors = np.hypot(eK, eL)
    section_scale = float(max(np.max(np.abs(sK)), np.max(np.abs(sL)), 1e-300))
    violations, verdict = render_verdict(margins, errors, section_scale, diff, diff_se,
                                         max(abs(vol_K), abs(vol_L)), tol)
    worst = int(np.argmin(margins))
    return ComparisonReport(
        grid_size=int(thetas.shape[0]), violations=violations,
        worst_margin=float(margins[worst]), worst_margin_error=float(errors[worst]),
        worst_theta=[float(x) for x in thetas[worst]],
        vol_K=vol_K, vol_K_se=vol_K_se, vol_L=vol_L, vol_L_se=vol_L_se,
        vol_difference=diff, vol_difference_se=diff_se, verdict=verdict, seed=seed,
        margins=margins, margin_errors=errors,
    )


def bp_compare(K: StarBody, L: StarBody, thetas: Optional[np.ndarray] = None,
               quad: Optional[QuadratureRule] = None, d: Optional[int] = None, seed: Optional[int] = None,
               jobs: int = 1, tolerances: Optional[Dict] = None) -> ComparisonReport:
    """S_K <= S_L on the grid versus vol(K) <= vol(L), with explicit error bars."""
    _check_pair(K, L)
    d = body_block_size(K, d)
    if thetas is None:
        thetas = theta_grid(K.N, 4096, 0 if seed is None else seed)
    sK, eK = section_function(K, thetas, d, seed=seed, jobs=jobs)
    sL, eL = section_function(L, thetas, d, seed=seed, jobs=jobs)
    return compare_values(K, L, sK, eK, sL, eL, thetas, quad, seed, tolerances)


# ==================== Certificates ====================

def _grid_minimum(T: HarmonicSum, thetas: np.ndarray) -> Tuple[float, np.ndarray]:
    """Minimum over the grid, refined by a 1-D scan when T is axial."""
    values = T(thetas)
    k = int(np.argmin(values))
    minimum, argmin = float(values[k]), np.array(thetas[k], dtype=float)
    axial = T.common_axial_frame()
    if axial is not None:
        frame, profile = axial
        s = np.linspace(0.0, 1.0, 4001)
        prof = np.asarray(profile(s))
        j = int(np.argmin(prof))
        if prof[j] < minimum:
            direction = s[j] * frame[:, 0]
            if frame.shape[1] < T.N:
                direction = direction + np.sqrt(max(1.0 - s[j] ** 2, 0.0)) * _complete_basis(frame)[:, 0]
            minimum, argmin = float(prof[j]), direction / np.linalg.norm(direction)
    return minimum, argmin


def positivity_certificate(K: StarBody, alpha: Optional[float] = None, d: Optional[int] = None,
                           thetas: Optional[np.ndarray] = None, degree_cap: int = 12,
                           tolerances: Optional[Dict] = None) -> PositivityCertificate:
    """min over the grid of (M^{alpha+1-N} rho_K^d)."""
    d = body_block_size(K, d)
    alpha = float(d if alpha is None else alpha)
    tol = _tolerances(tolerances)
    if thetas is None:
        thetas = theta_grid(K.N, 4096, 0)
    T = cosine_transform(K.harmonic_sum(d, degree_cap), alpha + 1.0 - K.N)
    minimum, argmin = _grid_minimum(T, thetas)
    return PositivityCertificate(minimum, argmin, alpha, tol["band_multiplier"] * T.residual, int(thetas.shape[0]))


def intersection_body_test(K: StarBody, lam: float, degree_cap: int = 12, thetas: Optional[np.ndarray] = None,
                           tolerances: Optional[Dict] = None) -> IntersectionBodyReport:
    """Sign scan of M^{1+lambda-N} rho_K^lambda."""
    N = K.N
    if not 0 < lam < N:
        raise ValueError(f"lambda must lie in (0, N) = (0, {N}), got {lam}")
    tol = _tolerances(tolerances)
    if thetas is None:
        thetas = theta_grid(N, 4096, 0)
    T = cosine_transform(K.harmonic_sum(lam, degree_cap), 1.0 + lam - N)
    minimum, argmin = _grid_minimum(T, thetas)
    band = tol["band_multiplier"] * T.residual
    if minimum > band:
        verdict = MEMBER
    elif minimum < -band:
        verdict = NON_MEMBER
    else:
        verdict = INCONCLUSIVE
    # stored rho^lambda is never truncated, so degree_cap has no effect on it
    exact = K.harmonic_power is not None and K.harmonic_power[0] == lam
    return IntersectionBodyReport(lam, minimum, [float(x) for x in argmin], band, verdict, degree_cap,
                                  "exact" if exact else "projected")


# ==================== D_m route ====================

def dm_range(N: int, d: int) -> Tuple[int, int]:
    """Bounds of max(N-2d-2, 0) <= 2m < N-d as (lower, upper-exclusive) on 2m."""
    return max(N - 2 * d - 2, 0), N - d


def check_dm_range(N: int, d: int, m: float) -> None:
    lower, upper = dm_range(N, d)
    if not lower <= 2 * m < upper:
        raise ValueError(f"m = {m} out of range: need max(N-2d-2, 0) = {lower} <= 2m < N-d = {upper}")
    check_dm_order(N, d, m)


def allowed_dm_orders(d: int, n: int) -> List[float]:
    """Orders m for which D_m-ordering of sections implies volume ordering."""
    if d == 1:
        return [0.0] if n <= 4 else [(n - 4) / 2.0, (n - 3) / 2.0, (n - 2) / 2.0]
    if d == 2:
        return [0.0] if n <= 3 else [float(n - 3), float(n - 2)]
    if d == 4:
        return [0.0] if n == 2 else [float(2 * n - 5), float(2 * n - 4), float(2 * n - 3)]
    if d == 8:
        return [0.0] if n == 2 else [float(m) for m in range(4 * n - 9, 4 * n - 4)]
    raise ValueError(f"d must be one of {{1, 2, 4, 8}}, got {d}")


def dm_section_values(body: StarBody, m: float, thetas: np.ndarray, d: Optional[int] = None,
                      degree_cap: int = 12) -> Tuple[np.ndarray, np.ndarray, float]:
    """D_m S on the grid by c M^{1-d-2m} rho^(N-d); also the gap to the Riesz-derivative route."""
    d = body_block_size(body, d)
    N = body.N
    check_dm_range(N, d, m)
    c = section_transform_constant(N, d)
    H = body.harmonic_sum(N - d, degree_cap)
    direct = cosine_transform(H, 1.0 - d - 2.0 * m).scaled(c)
    sections = cosine_transform(H, 1.0 - d).scaled(c)
    via_riesz = riesz_Dm_harmonic(sections, d, m)
    thetas = np.atleast_2d(thetas)
    values = direct(thetas)
    gap = float(np.max(np.abs(values - via_riesz(thetas))))
    return values, np.full(values.shape, direct.residual), gap


def dm_comparison(K: StarBody, L: StarBody, m: float, thetas: Optional[np.ndarray] = None,
                  d: Optional[int] = None, quad: Optional[QuadratureRule] = None, seed: Optional[int] = None,
                  tolerances: Optional[Dict] = None) -> ComparisonReport:
    """Comparison of D_m S_K and D_m S_L on the grid plus the volume verdict."""
    _check_pair(K, L)
    d = body_block_size(K, d)
    if thetas is None:
        thetas = theta_grid(K.N, 4096, 0 if seed is None else seed)
    if m == 0:
        report = bp_compare(K, L, thetas, quad, d, seed, tolerances=tolerances)
        report.notes["m"] = 0.0
        return report
    for body in (K, L):
        if not body.has_harmonic(body.N - d, exact=True):
            raise ValueError("the D_m route needs rho^(N-d) as exact harmonic data")
    sK, eK, gap_K = dm_section_values(K, m, thetas, d)
    sL, eL, gap_L = dm_section_values(L, m, thetas, d)
    report = compare_values(K, L, sK, eK, sL, eL, thetas, quad, seed, tolerances)
    report.notes.update({"m": float(m), "route_gap": max(gap_K, gap_L)})
    return report


# ==================== Case tables ====================

def bp_threshold(d: int) -> int:
    """Largest n with n <= 2 + 2/d (affirmative answer)."""
    if d not in (1, 2, 4, 8):
        raise ValueError(f"d must be one of {{1, 2, 4, 8}}, got {d}")
    return int(np.floor(2.0 + 2.0 / d))


def bp_affirmative(d: int, n: int) -> bool:
    return n <= bp_threshold(d)


def threshold_table() -> List[Dict]:
    """Positive cases over R, C, H and the first negative n for each."""
    rows = []
    for d in (1, 2, 4):
        top = bp_threshold(d)
        for n in range(2, top + 2):
            rows.append({"d": d, "n": n, "N": d * n, "expected": "affirmative" if n <= top else "negative"})
    return rows


LOWER_DIMENSIONAL_CASES = [("a", 4, 2, 2), ("b", 6, 2, 4), ("c", 8, 4, 4), ("d", 10, 4, 6), ("e", 16, 8, 8)]


def lower_dimensional_cases() -> List[Dict]:
    return [{"label": f"({tag}) N={N} (d={d}): i={i}", "N": N, "d": d, "i": i} for tag, N, d, i in LOWER_DIMENSIONAL_CASES]


def lower_dimensional_smoke(seed: int = 0, samples: int = 100_000) -> List[Dict]:
    """Ball sections against kappa_i and l4-type volumes for the lower-dimensional positive cases.

    The l4 body is the block-l4 ball when d divides N, the plain l4 ball otherwise.
    """
    rows = []
    for case in lower_dimensional_cases():
        N, d, i = case["N"], case["d"], case["i"]
        section, _ = section_function(ball(N), np.eye(N)[:1], d, route="transform")
        kappa = float(np.pi ** (i / 2.0) / special.gamma(i / 2.0 + 1.0))
        body = ball_block_lp(N // d, d, 4.0) if N % d == 0 else ball_block_lp(N, 1, 4.0)
        rule = None if body.axial is not None else sphere_quadrature(N, "monte-carlo", seed=seed, samples=samples)
        vol, se = volume(body, rule)
        rows.append({**case, "ball_section": float(section[0]), "kappa_i": kappa,
                     "section_residual": abs(float(section[0]) - kappa), "block_l4_volume": vol,
                     "block_l4_volume_se": se})
    return rows


# ==================== Counterexample search ====================

class CounterexampleSearch:
    """Perturb L along M^{alpha+1-N} psi until a convex K with S_K <= S_L and vol(K) > vol(L) appears."""

    BUMP_DEGREES = (8, 16, 24, 32, 40, 48)

    def __init__(self, L: StarBody, d: Optional[int] = None, alpha: Optional[float] = None,
                 eps0: float = 0.2, eps_min: float = 1e-4, factor: float = 0.5, floor: float = 1e-6,
                 capture: float = 0.2, theta_points: int = 4096, convexity_trials: int = 100_000,
                 seed: int = 0, jobs: int = 1, tolerances: Optional[Dict] = None, verbose: bool = True):
        if not 0 < factor < 1 or eps_min <= 0 or eps0 < eps_min:
            raise ValueError(f"eps schedule must decrease geometrically: eps0={eps0}, eps_min={eps_min}, "
                             f"factor={factor}")
        self.L = L
        self.d = body_block_size(L, d)
        self.alpha = float(self.d if alpha is None else alpha)
        self.eps0 = eps0
        self.eps_min = eps_min
        self.factor = factor
        self.floor = floor
        self.capture = capture
        self.seed = seed
        self.jobs = jobs
        self.convexity_trials = convexity_trials
        self.tolerances = _tolerances(tolerances)
        self.verbose = verbose
        self.thetas = theta_grid(L.N, theta_points, seed)
        self.certificate_result: Optional[PositivityCertificate] = None
        self.psi_degree: Optional[int] = None
        self.eps: Optional[float] = None

    def log(self, message: str) -> None:
        if self.verbose:
            print(message)

    def schedule(self) -> List[float]:
        values = []
        eps = self.eps0
        while eps >= self.eps_min * (1 - 1e-12):
            values.append(eps)
            eps *= self.factor
        return values

    def certificate(self) -> PositivityCertificate:
        if self.certificate_result is None:
            self.certificate_result = positivity_certificate(self.L, self.alpha, self.d, self.thetas,
                                                             tolerances=self.tolerances)
        return self.certificate_result

    def _pairing(self, psi: AxialFunction, C: HarmonicSum) -> float:
        """mean(C psi) / mean(psi)"""
        axial = C.common_axial_frame()
        if axial is not None and np.max(np.abs(axial[0] @ axial[0].T - psi.frame @ psi.frame.T)) < 1e-12:
            profile = axial[1]
            return (axial_mean(C.N, psi.frame, lambda s: profile(s) * psi.profile(s))
                    / axial_mean(C.N, psi.frame, psi.profile))
        grid = theta_grid(C.N, 16384, self.seed + 1)
        values = psi(grid)
        return float(np.mean(C(grid) * values) / np.mean(values))

    def build_psi(self, axis: np.ndarray) -> HarmonicSum:
        """Nonnegative G-invariant power bump about axis with a positive floor."""
        N = self.L.N
        sys = self.L.symmetry.system() if self.L.symmetry is not None else vector_field_system(self.d)
        n = N // self.d
        C = cosine_transform(self.L.harmonic_sum(self.d), self.alpha + 1.0 - N)
        target = self.capture * self.certificate().minimum
        chosen = None
        for degree in self.BUMP_DEGREES:
            zonal = ZonalFunction(N, axis, lambda t, D=degree: t**D, parity="even")
            bump = symmetrize(zonal, sys, n)
            if not isinstance(bump, AxialFunction):
                raise ValueError("bump symmetrization did not produce axial data; use an axis inside one block")
            pairing = self._pairing(bump, C)
            self.log(f"   🔍 bump degree {degree}: pairing with certificate {pairing:+.4e}")
            chosen = (degree, bump)
            if pairing <= target:
                break
        degree, bump = chosen
        peak = float(bump.profile(np.array([1.0]))[0])
        normalized = AxialFunction(N, bump.frame, lambda s, b=bump.profile: b(s) / peak)
        psi = expand(normalized, degree)
        lowest = float(np.min(psi(self.thetas)))
        if lowest < -1e-10:
            clipped = AxialFunction(N, bump.frame, lambda s, p=psi.common_axial_frame()[1]: np.maximum(p(s), 0.0))
            psi = expand(clipped, degree)
            self.log(f"   ⚠️ bump dipped to {lowest:.2e}; clipped and re-projected")
        self.psi_degree = degree
        return psi + HarmonicSum.constant(N, self.floor)

    def _inconclusive(self, reason: str, extra: Dict) -> ComparisonReport:
        nan = float("nan")
        return ComparisonReport(
            grid_size=int(self.thetas.shape[0]), violations=0, worst_margin=nan, worst_margin_error=nan,
            worst_theta=[], vol_K=nan, vol_K_se=nan, vol_L=nan, vol_L_se=nan, vol_difference=nan,
            vol_difference_se=nan, verdict=INCONCLUSIVE, seed=self.seed, notes={"reason": reason, **extra},
        )

    def run(self) -> Tuple[Optional[StarBody], ComparisonReport]:
        L = self.L
        self.log(f"🚀 Counterexample search: {L.name}, N={L.N}, d={self.d}, alpha={self.alpha:g}")
        cert = self.certificate()
        self.log(f"   📊 positivity certificate min {cert.minimum:+.6e} (band {cert.band:.1e})")
        if not cert.negative:
            raise ValueError(f"positivity certificate is nonnegative (min {cert.minimum:.6e}); "
                             f"no counterexample from this recipe")

        phi = cosine_transform(self.build_psi(cert.argmin), self.alpha + 1.0 - L.N)
        notes = {"certificate_min": cert.minimum, "certificate_argmin": [float(x) for x in cert.argmin],
                 "psi_degree": self.psi_degree, "psi_floor": self.floor}
        for eps in self.schedule():
            try:
                K = perturbed_body(L, eps, phi, self.d, extra_points=self.thetas)
            except ValueError as e:
                self.log(f"   ⚠️ eps={eps:.3e}: {e}")
                continue
            witness = convexity_check(K, self.convexity_trials, self.seed)
            if witness is not None:
                self.log(f"   ⚠️ eps={eps:.3e}: convexity witness found")
                continue
            self.eps = eps
            self.log(f"   ✅ eps={eps:.3e}: K passed {self.convexity_trials} convexity trials")
            report = bp_compare(K, L, self.thetas, d=self.d, seed=self.seed, jobs=self.jobs,
                                tolerances=self.tolerances)
            report.notes.update({**notes, "eps": eps, "convexity_trials": self.convexity_trials})
            self.log(f"   📊 verdict {report.verdict}: worst section margin {report.worst_margin:+.3e}, "
                     f"vol(K)-vol(L) = {report.vol_difference:+.3e} ± {report.vol_difference_se:.1e}")
            return K, report

        self.log("   ❌ eps schedule exhausted without a convex K")
        return None, self._inconclusive("eps schedule exhausted without convexity", notes)


def counterexample_search(L: StarBody, alpha: Optional[float] = None, eps_schedule: Sequence[float] = (0.2, 1e-4, 0.5),
                          seed: int = 0, verbose: bool = False, **kwargs) -> Tuple[Optional[StarBody], ComparisonReport]:
    eps0, eps_min, factor = eps_schedule
    search = CounterexampleSearch(L, alpha=alpha, eps0=eps0, eps_min=eps_min, factor=factor, seed=seed,
                                  verbose=verbose, **kwargs)
    return search.run()


# ==================== Positive direction ====================

class PositiveDirectionSuite:
    """Randomized G-invariant convex pairs with S_K <= S_L (or D_m S_K <= D_m S_L) on the grid."""

    def __init__(self, d: int, n: int, trials: int = 100, theta_points: int = 1024, seed: int = 0,
                 m: float = 0.0, convexity_trials: int = 2000, dilation_gap: float = 1e-3, jobs: int = 1,
                 tolerances: Optional[Dict] = None, verbose: bool = True):
        self.d = d
        self.n = n
        self.N = d * n
        self.trials = trials
        self.m = float(m)
        if self.m:
            check_dm_range(self.N, d, self.m)
        self.seed = seed
        self.convexity_trials = convexity_trials
        self.dilation_gap = dilation_gap
        self.jobs = jobs
        self.tolerances = _tolerances(tolerances)
        self.verbose = verbose
        self.sys = vector_field_system(d)
        self.thetas = theta_grid(self.N, theta_points, seed)

    def log(self, message: str) -> None:
        if self.verbose:
            print(message)

    def random_body(self, rng: np.random.Generator) -> StarBody:
        N, d, n = self.N, self.d, self.n
        if n == 2 and self.m == 0 and rng.random() < 0.5:
            return ball_block_lp(n, d, float(rng.uniform(1.5, 6.0)))
        axis = self.random_axis(rng)
        coefficients = {2: float(rng.uniform(-0.08, 0.08)), 4: float(rng.uniform(-0.02, 0.02)),
                        6: float(rng.uniform(-0.01, 0.01))}
        components = {j: g_zonal_harmonic(self.sys, n, axis, j) for j in coefficients}
        for _ in range(5):
            terms = [HarmonicTerm(j, c, components[j]) for j, c in coefficients.items()]
            rho_power = HarmonicSum.constant(N) + HarmonicSum(N, terms)
            body = harmonic_body(N, float(N - d), rho_power, SymmetryTag(d, n), name="harmonic-ball")
            if convexity_check(body, self.convexity_trials, int(rng.integers(2**31))) is None:
                return body
            coefficients = {j: 0.5 * c for j, c in coefficients.items()}
        return ball(N, 1.0, SymmetryTag(d, n))

    def random_axis(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform unit vector; for d = 8 it is drawn inside one random block."""
        axis = rng.standard_normal(self.N)
        if self.d == 8:
            block = int(rng.integers(self.n))
            mask = np.zeros(self.N, dtype=bool)
            mask[8 * block:8 * block + 8] = True
            axis[~mask] = 0.0
        return axis / np.linalg.norm(axis)

    def _values(self, body: StarBody) -> np.ndarray:
        if self.m:
            return dm_section_values(body, self.m, self.thetas, self.d)[0]
        return section_function(body, self.thetas, self.d)[0]

    def run_trial(self, seq: np.random.SeedSequence) -> Dict:
        rng = np.random.default_rng(seq)
        K = self.random_body(rng)
        other = self.random_body(rng)
        tK, tO = self._values(K), self._values(other)
        if np.any(tO <= 0) or np.any(tK <= 0):
            return {"status": "skipped", "reason": "nonpositive transformed sections"}
        # D_m is linear, so D_m S_{sK} = s^(N-d) D_m S_K for every m
        exponent = self.N - self.d
        s = (1.0 + self.dilation_gap) * float(np.max(tK / tO)) ** (1.0 / exponent)
        L = scaled(other, s)
        if self.m:
            report = dm_comparison(K, L, self.m, self.thetas, self.d, tolerances=self.tolerances)
        else:
            report = bp_compare(K, L, self.thetas, d=self.d, tolerances=self.tolerances)
        band = max(self.tolerances["sigma"] * report.vol_difference_se,
                   self.tolerances["relative_floor"] * max(report.vol_K, report.vol_L))
        return {"status": "success", "violation": bool(report.vol_difference > band),
                "volume_margin": report.vol_difference, "report": report}

    def run(self) -> Dict:
        self.log(f"🚀 Positive-direction suite d={self.d}, n={self.n} (N={self.N}), m={self.m:g}, "
                 f"{self.trials} trials")
        seqs = np.random.SeedSequence(self.seed).spawn(self.trials)
        with ThreadPoolExecutor(max_workers=max(self.jobs, 1)) as pool:
            results = list(pool.map(self.run_trial, seqs))
        done = [r for r in results if r["status"] == "success"]
        violations = sum(1 for r in done if r["violation"])
        worst = max((r["volume_margin"] for r in done), default=float("nan"))
        verdict = CONSISTENT if violations == 0 and done else (COUNTEREXAMPLE if violations else INCONCLUSIVE)
        icon = "✅" if verdict == CONSISTENT else "❌"
        self.log(f"   {icon} {len(done)} pairs, {violations} volume-ordering violations, "
                 f"worst vol(K)-vol(L) = {worst:+.3e}")
        return {"d": self.d, "n": self.n, "N": self.N, "m": self.m, "trials": self.trials,
                "completed": len(done), "skipped": len(results) - len(done), "violations": violations,
                "worst_volume_margin": worst, "verdict": verdict, "seed": self.seed}
