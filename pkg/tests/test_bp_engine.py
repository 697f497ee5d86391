import numpy as np
import pytest

from bp_bodies import SymmetryTag, ball, ball_block_lp, harmonic_cigar, scaled
from bp_engine import (
    CONSISTENT,
    COUNTEREXAMPLE,
    DEFAULT_TOLERANCES,
    INCONCLUSIVE,
    MEMBER,
    NON_MEMBER,
    CounterexampleSearch,
    PositiveDirectionSuite,
    allowed_dm_orders,
    bp_affirmative,
    bp_compare,
    bp_threshold,
    check_dm_range,
    compare_values,
    counterexample_search,
    dm_comparison,
    dm_section_values,
    intersection_body_test,
    lower_dimensional_cases,
    lower_dimensional_smoke,
    positivity_certificate,
    render_verdict,
    threshold_table,
)
from bp_sections import section_function
from bp_sphere import theta_grid


def verdict(margins, errors, diff, diff_se=0.0):
    return render_verdict(np.asarray(margins, dtype=float), np.asarray(errors, dtype=float), 1.0,
                          diff, diff_se, 1.0, DEFAULT_TOLERANCES)


# ==================== Verdicts ====================

def test_render_verdict():
    assert verdict([0.1, 0.2], [0.0, 0.0], 0.5) == (0, COUNTEREXAMPLE)
    assert verdict([0.1, 0.2], [0.0, 0.0], -0.5) == (0, CONSISTENT)
    assert verdict([-0.1, 0.2], [0.0, 0.0], 0.5) == (1, CONSISTENT)
    # margin inside the 3 sigma band: no violation, no strict hypothesis
    assert verdict([0.01, 0.2], [0.01, 0.0], 0.5) == (0, INCONCLUSIVE)
    assert verdict([-0.01, 0.2], [0.01, 0.0], 0.5) == (0, INCONCLUSIVE)
    # volume gap inside its band
    assert verdict([0.1, 0.2], [0.0, 0.0], 0.5, diff_se=0.2) == (0, INCONCLUSIVE)


def test_dilated_ball_is_consistent():
    K, L = ball(3), scaled(ball(3), 1.01)
    thetas = theta_grid(3, 32, seed=0)
    report = bp_compare(K, L, thetas)
    assert report.verdict == CONSISTENT
    assert report.violations == 0
    assert report.worst_margin == pytest.approx((1.01**2 - 1.0) * np.pi, rel=1e-10)
    assert report.vol_difference == pytest.approx((1.0 - 1.01**3) * 4.0 * np.pi / 3.0, rel=1e-10)

    swapped = bp_compare(L, K, thetas)
    assert swapped.violations == 32
    assert swapped.verdict == CONSISTENT
    assert swapped.vol_difference == pytest.approx(-report.vol_difference)
    assert swapped.to_dict()["grid_size"] == 32


def test_compare_values_flags_counterexample():
    K, L = scaled(ball(3), 1.01), ball(3)
    thetas = theta_grid(3, 4, seed=0)
    ones = np.ones(4)
    report = compare_values(K, L, ones, 0.0 * ones, 2.0 * ones, 0.0 * ones, thetas)
    assert report.verdict == COUNTEREXAMPLE


def test_compare_rejects_mismatched_bodies():
    with pytest.raises(ValueError, match="dimensions"):
        bp_compare(ball(3), ball(4))
    with pytest.raises(ValueError, match="symmetry"):
        bp_compare(ball(4, symmetry=SymmetryTag(2, 2)), ball(4, symmetry=SymmetryTag(1, 4)))


# ==================== Certificates ====================

def test_real_cigar_certificate_is_negative():
    # m_0(-3) + 0.3 m_2(-3) P_2(1) in N = 5
    cert = positivity_certificate(harmonic_cigar(1, 5, 0.3), thetas=theta_grid(5, 512, 0))
    expected = (1.0 - 0.3 * 4.0) / np.sqrt(np.pi)
    assert cert.minimum == pytest.approx(expected, abs=1e-6)
    assert cert.minimum == pytest.approx(-0.113, abs=1e-3)
    assert cert.negative
    assert np.allclose(np.abs(cert.argmin), np.eye(5)[0], atol=1e-12)


def test_complex_cigar_certificate_is_negative():
    # 2 - 6 * (3/7) in N = 8
    cert = positivity_certificate(harmonic_cigar(2, 4, 1.0), thetas=theta_grid(8, 512, 0))
    assert cert.minimum == pytest.approx(-4.0 / 7.0, abs=1e-6)
    assert cert.negative


def test_low_dimensional_certificate_is_positive():
    cert = positivity_certificate(harmonic_cigar(1, 3, 0.25), thetas=theta_grid(3, 512, 0))
    assert cert.minimum > 0
    assert not cert.negative
    assert positivity_certificate(ball(5), thetas=theta_grid(5, 64, 0)).minimum > 0


def test_intersection_body_sign_scan():
    report = intersection_body_test(ball(3), 1.0, thetas=theta_grid(3, 64, 0))
    assert report.verdict == MEMBER
    cigar = intersection_body_test(harmonic_cigar(1, 5, 0.3), 1.0, thetas=theta_grid(5, 256, 0))
    assert cigar.verdict == NON_MEMBER
    assert cigar.to_dict()["lambda"] == 1.0
    with pytest.raises(ValueError, match="lambda"):
        intersection_body_test(ball(3), 3.0)


def test_intersection_body_truncation_label():
    thetas = theta_grid(4, 64, 0)
    stored = intersection_body_test(harmonic_cigar(2, 2, 0.3), 2.0, 4, thetas)
    assert stored.truncation == "exact"
    assert stored.to_dict()["truncation"] == "exact"
    assert intersection_body_test(harmonic_cigar(2, 2, 0.3), 2.0, 12, thetas).minimum == stored.minimum
    projected = intersection_body_test(ball_block_lp(2, 2, 4.0), 2.0, 8, thetas)
    assert projected.truncation == "projected"


# ==================== Dilations ====================

def test_dilation_scaling_of_sections_certificate_and_dm():
    K = harmonic_cigar(1, 6, 0.2)
    s = 2.0
    sK = scaled(K, s)
    thetas = theta_grid(6, 64, seed=0)

    base, _ = section_function(K, thetas)
    dilated, _ = section_function(sK, thetas)
    assert np.allclose(dilated, s**5 * base, rtol=1e-10)

    cert = positivity_certificate(K, thetas=thetas)
    assert positivity_certificate(sK, thetas=thetas).minimum == pytest.approx(s * cert.minimum, rel=1e-10)

    values = dm_section_values(K, 1.0, thetas)[0]
    dilated_values = dm_section_values(sK, 1.0, thetas)[0]
    assert np.allclose(dilated_values, s**5 * values, rtol=1e-10)
    assert np.argmax(dilated_values) == np.argmax(values)


# ==================== Counterexample search ====================

def test_counterexample_schedule():
    search = CounterexampleSearch(harmonic_cigar(1, 5, 0.3), theta_points=64, verbose=False)
    schedule = search.schedule()
    assert schedule[0] == 0.2
    assert len(schedule) == 11
    assert schedule[-1] == pytest.approx(0.2 / 1024)
    with pytest.raises(ValueError, match="schedule"):
        CounterexampleSearch(harmonic_cigar(1, 5, 0.3), eps0=1e-5, eps_min=1e-4, verbose=False)


def test_counterexample_in_five_dimensions():
    search = CounterexampleSearch(harmonic_cigar(1, 5, 0.3), theta_points=256, convexity_trials=500,
                                  eps_min=1e-6, seed=0, verbose=False)
    K, report = search.run()
    assert report.notes["psi_degree"] == 40
    assert K is not None
    assert report.violations == 0
    assert report.worst_margin > 0
    assert report.vol_difference > 0
    assert report.verdict == COUNTEREXAMPLE


def test_counterexample_in_complex_dimension_eight():
    search = CounterexampleSearch(harmonic_cigar(2, 4, 1.0), theta_points=256, convexity_trials=500,
                                  eps_min=1e-6, seed=0, verbose=False)
    K, report = search.run()
    assert search.certificate().minimum == pytest.approx(-4.0 / 7.0, abs=1e-6)
    assert K is not None
    assert report.violations == 0
    assert report.vol_difference > 0
    assert report.verdict in (COUNTEREXAMPLE, INCONCLUSIVE)


def test_counterexample_search_is_reproducible():
    L = harmonic_cigar(1, 5, 0.3)
    first_K, first = counterexample_search(L, eps_schedule=(0.2, 1e-6, 0.5), seed=0, theta_points=256,
                                           convexity_trials=500)
    second_K, second = counterexample_search(L, eps_schedule=(0.2, 1e-6, 0.5), seed=0, theta_points=256,
                                             convexity_trials=500)
    assert first.to_dict() == second.to_dict()
    assert np.array_equal(first.margins, second.margins)
    pts = theta_grid(5, 64, seed=1)
    assert np.array_equal(first_K(pts), second_K(pts))

    certificates = [CounterexampleSearch(L, theta_points=256, seed=0, verbose=False).certificate() for _ in range(2)]
    assert certificates[0].minimum == certificates[1].minimum
    assert np.array_equal(certificates[0].argmin, certificates[1].argmin)


def test_no_counterexample_when_certificate_is_positive():
    search = CounterexampleSearch(harmonic_cigar(1, 3, 0.25), theta_points=64, verbose=False)
    with pytest.raises(ValueError, match="nonnegative"):
        search.run()
    with pytest.raises(ValueError, match="nonnegative"):
        counterexample_search(harmonic_cigar(1, 3, 0.25), eps_schedule=(0.1, 1e-3, 0.5), theta_points=64)


# ==================== Positive direction ====================

def test_positive_direction_suite_in_three_dimensions():
    suite = PositiveDirectionSuite(1, 3, trials=3, theta_points=256, seed=5, convexity_trials=200, verbose=False)
    result = suite.run()
    assert result["completed"] == 3
    assert result["violations"] == 0
    assert result["verdict"] == CONSISTENT


@pytest.mark.parametrize("d,n", [(1, 2), (1, 4), (2, 2), (2, 3), (4, 2)])
def test_positive_direction_suite_in_affirmative_cases(d, n):
    suite = PositiveDirectionSuite(d, n, trials=2, theta_points=128, seed=11, convexity_trials=200, verbose=False)
    result = suite.run()
    assert result["N"] == d * n
    assert result["completed"] == 2
    assert result["violations"] == 0
    assert result["verdict"] == CONSISTENT


def test_positive_direction_suite_with_dm_order():
    suite = PositiveDirectionSuite(1, 5, trials=2, theta_points=128, seed=3, m=0.5, convexity_trials=200,
                                   verbose=False)
    result = suite.run()
    assert result["m"] == 0.5
    assert result["completed"] == 2
    assert result["violations"] == 0
    assert result["verdict"] == CONSISTENT


def test_positive_direction_suite_is_reproducible():
    runs = [PositiveDirectionSuite(2, 2, trials=3, theta_points=64, seed=21, convexity_trials=100, jobs=2,
                                   verbose=False).run() for _ in range(2)]
    assert runs[0] == runs[1]


@pytest.mark.parametrize("d,n", [(2, 3), (8, 2)])
def test_random_bodies_use_varied_axes(d, n):
    suite = PositiveDirectionSuite(d, n, trials=1, theta_points=16, convexity_trials=50, verbose=False)
    rng = np.random.default_rng(4)
    axes = [suite.random_axis(rng) for _ in range(4)]
    for axis in axes:
        assert np.linalg.norm(axis) == pytest.approx(1.0)
    assert not np.allclose(axes[0], axes[1])
    if d == 8:
        for axis in axes:
            blocks = np.linalg.norm(axis.reshape(n, 8), axis=1)
            assert np.count_nonzero(blocks > 1e-12) == 1
    body = suite.random_body(np.random.default_rng(5))
    if body.harmonic_power is not None:
        assert 6 in body.harmonic_power[1].degrees()


def test_dm_comparison_of_dilated_balls():
    K = ball(5, symmetry=SymmetryTag(1, 5))
    L = scaled(K, 1.01)
    report = dm_comparison(K, L, 0.5, theta_grid(5, 32, seed=0))
    assert report.notes["m"] == 0.5
    assert report.notes["route_gap"] < 1e-8
    assert report.violations == 0
    assert report.verdict == CONSISTENT
    plain = dm_comparison(K, L, 0.0, theta_grid(5, 32, seed=0))
    assert plain.notes["m"] == 0.0


def test_dm_orders():
    assert allowed_dm_orders(1, 4) == [0.0]
    assert allowed_dm_orders(1, 5) == [0.5, 1.0, 1.5]
    assert allowed_dm_orders(2, 4) == [1.0, 2.0]
    assert allowed_dm_orders(4, 3) == [1.0, 2.0, 3.0]
    for d, n in [(1, 5), (1, 6), (2, 4), (4, 3)]:
        for m in allowed_dm_orders(d, n):
            check_dm_range(d * n, d, m)
    with pytest.raises(ValueError, match="out of range"):
        check_dm_range(5, 1, 2.0)
    with pytest.raises(ValueError, match="out of range"):
        check_dm_range(6, 1, 0.5)
    with pytest.raises(ValueError):
        allowed_dm_orders(3, 2)


# ==================== Case tables ====================

def test_thresholds():
    assert [bp_threshold(d) for d in (1, 2, 4, 8)] == [4, 3, 2, 2]
    assert bp_affirmative(1, 4) and not bp_affirmative(1, 5)
    assert bp_affirmative(2, 3) and not bp_affirmative(2, 4)
    assert not bp_affirmative(4, 3)
    with pytest.raises(ValueError):
        bp_threshold(3)


def test_threshold_table():
    rows = threshold_table()
    affirmative = [(r["d"], r["n"]) for r in rows if r["expected"] == "affirmative"]
    negative = [(r["d"], r["n"]) for r in rows if r["expected"] == "negative"]
    assert affirmative == [(1, 2), (1, 3), (1, 4), (2, 2), (2, 3), (4, 2)]
    assert negative == [(1, 5), (2, 4), (4, 3)]


def test_lower_dimensional_cases():
    cases = lower_dimensional_cases()
    assert [c["label"] for c in cases][0] == "(a) N=4 (d=2): i=2"
    assert [(c["N"], c["d"], c["i"]) for c in cases][-1] == (16, 8, 8)
    rows = lower_dimensional_smoke(seed=0, samples=2000)
    assert len(rows) == 5
    for row in rows:
        assert row["section_residual"] < 1e-10
        assert row["block_l4_volume"] > 0
