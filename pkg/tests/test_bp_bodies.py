import numpy as np
import pytest
from scipy import special

from bp_algebra import vector_field_system
from bp_bodies import (
    StarBody,
    SymmetryTag,
    ball,
    ball_block_lp,
    body_from_spec,
    body_report,
    convexity_check,
    g_invariance_defect,
    g_zonal_harmonic,
    gauge,
    harmonic_body,
    harmonic_cigar,
    perturbed_body,
    scaled,
    symmetrize,
    volume,
    volume_difference,
)
from bp_sphere import EvaluatorFunction, HarmonicSum, ZonalFunction, sphere_quadrature, theta_grid


def test_ball_volumes():
    assert volume(ball(3))[0] == pytest.approx(4.0 * np.pi / 3.0, rel=1e-12)
    assert volume(ball(2))[0] == pytest.approx(np.pi, rel=1e-12)
    assert volume(ball(5, 2.0))[0] == pytest.approx(8.0 * np.pi**2 / 15.0 * 32.0, rel=1e-12)


def test_block_l4_disc_area():
    K = ball_block_lp(2, 1, 4.0)
    expected = 4.0 * special.gamma(1.25) ** 2 / special.gamma(1.5)
    assert expected == pytest.approx(3.7081, abs=1e-4)
    assert volume(K)[0] == pytest.approx(expected, rel=1e-8)
    assert K(np.array([[1.0, 0.0]]))[0] == pytest.approx(1.0)


def test_block_lp_axial_volume_matches_quadrature():
    K = ball_block_lp(2, 2, 4.0)
    axial, _ = volume(K)
    quad, se = volume(K, sphere_quadrature(4, "deterministic", 32))
    assert se == 0.0
    assert axial == pytest.approx(quad, rel=1e-6)


def test_block_lp_rejects_nonconvex_exponent():
    with pytest.raises(ValueError, match="allow_nonconvex"):
        ball_block_lp(2, 1, 0.5)
    with pytest.raises(ValueError, match="positive"):
        ball_block_lp(2, 1, 0.0, allow_nonconvex=True)


def test_cigar_volume_and_radii():
    delta = 0.3
    K = harmonic_cigar(1, 3, delta)
    assert K(np.eye(3)[:1])[0] == pytest.approx(1.0 + delta)
    assert K(np.eye(3)[1:2])[0] == pytest.approx(1.0 - delta / 2.0)
    # E[P_2] = 0, E[P_2^2] = 1/5, E[P_2^3] = 2/35 on S^2
    expected = 4.0 * np.pi / 3.0 * (1.0 + 3.0 * delta**2 / 5.0 + 2.0 * delta**3 / 35.0)
    assert volume(K)[0] == pytest.approx(expected, rel=1e-10)
    assert volume(K, sphere_quadrature(3, "deterministic", 16))[0] == pytest.approx(expected, rel=1e-10)


def test_complex_cigar_is_invariant():
    K = harmonic_cigar(2, 2, 0.5)
    assert K.symmetry == SymmetryTag(2, 2)
    assert g_invariance_defect(K, vector_field_system(2), 2) < 1e-12


def test_harmonic_body_rejects_non_positive_power():
    rho = HarmonicSum.constant(3) + HarmonicSum.zonal(3, 2, [1.0, 0.0, 0.0], 3.0)
    with pytest.raises(ValueError, match="not positive"):
        harmonic_body(3, 1.0, rho)


def test_octonion_zonal_axis_must_sit_in_one_block():
    sys8 = vector_field_system(8)
    axis = np.zeros(16)
    axis[0] = axis[8] = 1.0
    with pytest.raises(ValueError, match="single block"):
        g_zonal_harmonic(sys8, 2, axis, 2)


def test_perturbation():
    L = ball(3, symmetry=SymmetryTag(1, 3))
    phi = HarmonicSum.zonal(3, 2, [1.0, 0.0, 0.0])
    assert perturbed_body(L, 0.0, phi, 1) is L
    K = perturbed_body(L, 0.1, phi, 1)
    assert K.representation == "finite-harmonic-sum"
    assert K.symmetry == L.symmetry
    assert K(np.eye(3)[:1])[0] == pytest.approx(np.sqrt(0.9), rel=1e-10)
    assert K(np.eye(3)[1:2])[0] == pytest.approx(np.sqrt(1.05), rel=1e-10)
    with pytest.raises(ValueError, match="positive"):
        perturbed_body(L, 2.0, HarmonicSum.constant(3), 1)
    with pytest.raises(ValueError):
        perturbed_body(L, -0.1, phi, 1)


def test_gauge():
    K = ball(3, 2.0)
    assert gauge(K, np.array([2.0, 0.0, 0.0])) == pytest.approx(1.0)
    assert gauge(K, np.zeros(3)) == 0.0
    assert np.allclose(gauge(K, np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 4.0]])), [0.5, 2.0])


def test_scaling():
    K = harmonic_cigar(1, 3, 0.2)
    S = scaled(K, 1.5)
    assert volume(S)[0] == pytest.approx(1.5**3 * volume(K)[0], rel=1e-12)
    pts = theta_grid(3, 16, seed=0)
    assert np.allclose(S.harmonic_power[1](pts), 1.5 * K.harmonic_power[1](pts))
    with pytest.raises(ValueError):
        scaled(K, 0.0)


def test_volume_difference_of_dilates():
    diff, se = volume_difference(scaled(ball(3), 1.01), ball(3))
    assert se == 0.0
    assert diff == pytest.approx((1.01**3 - 1.0) * 4.0 * np.pi / 3.0, rel=1e-10)


def test_volume_without_exact_data_needs_monte_carlo():
    K = StarBody(5, lambda x: np.ones(len(x)))
    with pytest.raises(ValueError, match="Monte Carlo"):
        volume(K)
    vol, se = volume(K, sphere_quadrature(5, "monte-carlo", seed=3, samples=2000))
    assert vol == pytest.approx(8.0 * np.pi**2 / 15.0)
    assert se == pytest.approx(0.0, abs=1e-12)


def test_symmetrize_square_of_first_coordinate():
    sys2 = vector_field_system(2)
    N = 4
    zonal = ZonalFunction(N, np.eye(N)[0], lambda t: t**2, parity="even")
    averaged = symmetrize(zonal, sys2, 2)
    assert averaged(np.array([[0.6, 0.8, 0.0, 0.0]]))[0] == pytest.approx(0.5)
    assert averaged(np.eye(N)[2:3])[0] == pytest.approx(0.0, abs=1e-14)

    box = EvaluatorFunction(N, lambda x: x[:, 0] ** 2, parity="even")
    quad_averaged = symmetrize(box, sys2, 2)
    pts = theta_grid(N, 32, seed=9)
    assert np.allclose(quad_averaged(pts), averaged(pts), atol=1e-12)
    assert g_invariance_defect(quad_averaged, sys2, 2) < 1e-12
    assert g_invariance_defect(box, sys2, 2) > 1e-2


def test_convexity_check():
    assert convexity_check(ball(3), trials=2000, seed=1) is None
    assert convexity_check(ball_block_lp(2, 2, 4.0), trials=2000, seed=1) is None
    star = ball_block_lp(2, 1, 0.5, allow_nonconvex=True)
    witness = convexity_check(star, trials=2000, seed=1)
    assert witness is not None
    x, y, mid = witness
    assert np.allclose(mid, 0.5 * (x + y))
    assert gauge(star, mid) > 1.0


def test_body_report():
    report = body_report(harmonic_cigar(1, 3, 0.1), trials=1000).to_dict()
    assert report["convex"] is True
    assert report["min_radial"] >= 0.95 - 1e-9
    assert report["max_radial"] <= 1.1 + 1e-9


def test_body_from_spec():
    K = body_from_spec({"kind": "ball", "radius": 2.0}, 1, 3)
    assert K(np.eye(3)[:1])[0] == pytest.approx(2.0)
    assert K.symmetry == SymmetryTag(1, 3)

    L = body_from_spec({"kind": "cigar", "delta": 0.3}, 1, 5)
    assert L.N == 5

    P = body_from_spec({"kind": "ball", "perturbations": [{"eps": 0.1, "degree": 2}], "scale": 2.0}, 1, 3)
    assert P(np.eye(3)[:1])[0] == pytest.approx(2.0 * np.sqrt(0.9), rel=1e-10)

    H = body_from_spec({"kind": "harmonic", "power": 2.0,
                        "terms": [{"degree": 0}, {"degree": 2, "coefficient": 0.2}]}, 2, 2)
    assert H.harmonic_power[0] == 2.0

    with pytest.raises(ValueError, match="unknown body kind"):
        body_from_spec({"kind": "cube"}, 1, 3)


def test_tiny_perturbation_of_axial_only_body_stays_close():
    L = ball_block_lp(2, 2, 4.0)
    phi = HarmonicSum.zonal(4, 2, np.eye(4)[0])
    K = perturbed_body(L, 1e-9, phi, 2)
    pts = theta_grid(4, 2048, seed=0)
    assert np.max(np.abs(K(pts) ** 2 - L(pts) ** 2)) < 1e-8
    assert K.representation == "closed-form"


def test_perturbation_keeps_shared_axial_data():
    L = harmonic_cigar(1, 5, 0.3)
    phi = HarmonicSum.zonal(5, 2, np.eye(5)[0])
    K = perturbed_body(L, 0.01, phi, 1)
    assert K.representation == "finite-harmonic-sum"
    pts = theta_grid(5, 256, seed=2)
    assert np.allclose(K(pts) ** 4, L(pts) ** 4 - 0.01 * phi(pts), atol=1e-10)

    wide = perturbed_body(ball_block_lp(2, 2, 4.0), 0.01, HarmonicSum.axial(4, 2, np.eye(4)[:, :2]), 2)
    assert wide.axial is not None
    pts = np.array([[0.3, np.sqrt(0.91), 0.0, 0.0], [0.6, 0.0, 0.0, 0.8]])
    s = np.linalg.norm(pts[:, :2], axis=1)
    assert np.allclose(wide.axial[1](s), wide(pts), atol=1e-12)


@pytest.mark.parametrize("degree", [1, 3])
def test_odd_harmonic_degrees_are_rejected(degree):
    with pytest.raises(ValueError, match="even"):
        body_from_spec({"kind": "harmonic", "power": 2.0,
                        "terms": [{"degree": 0}, {"degree": degree, "coefficient": 0.1}]}, 1, 3)
    rho = HarmonicSum.constant(3) + HarmonicSum.zonal(3, degree, [1.0, 0.0, 0.0], 0.1)
    with pytest.raises(ValueError, match="even harmonic degrees"):
        harmonic_body(3, 1.0, rho)
