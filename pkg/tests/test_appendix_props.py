"""Inequality-audit checks: oracles, guards, and pinned-seed suite runs."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brwlab.appendix_props import (
    CascadeFamily,
    TrialSpec,
    check_cancellation,
    check_parallelogram_bound,
    check_tv_inequality,
    check_weighted_tail_bound,
    draw_centered,
    run_suite,
)

# capped so |z+w|^p cannot overflow for p <= 2
FINITE_COMPLEX = st.complex_numbers(allow_nan=False, allow_infinity=False,
                                    max_magnitude=1e150)


# ---------------------------------------------------------------------------
# increment laws


@pytest.mark.parametrize("kind", ["disk", "phase", "gaussian", "heavy", "skew"])
def test_increments_are_centered(kind):
    rng = np.random.default_rng(7)
    draws = draw_centered(kind, rng, 40_000)
    se = float(np.std(draws.real)) / math.sqrt(draws.size) \
        + float(np.std(draws.imag)) / math.sqrt(draws.size)
    assert abs(np.mean(draws)) < 4.0 * se


def test_increment_supports():
    rng = np.random.default_rng(8)
    assert np.max(np.abs(draw_centered("disk", rng, 5000))) <= 1.0
    assert np.allclose(np.abs(draw_centered("phase", rng, 5000)), 1.0)
    skew = draw_centered("skew", rng, 5000)
    assert np.all(skew.imag == 0.0)
    assert np.min(skew.real) >= -1.0
    with pytest.raises(ValueError, match="unknown increment kind"):
        draw_centered("cauchy", rng, 10)


# ---------------------------------------------------------------------------
# martingale moment bound


def test_trial_spec_guards():
    with pytest.raises(ValueError, match="p must lie"):
        TrialSpec(trials=1, martingale_length=1, p=2.5)
    with pytest.raises(ValueError, match="p must lie"):
        TrialSpec(trials=1, martingale_length=1, p=0.9)
    with pytest.raises(ValueError, match="unknown increment"):
        TrialSpec(trials=1, martingale_length=1, increment="levy")
    with pytest.raises(ValueError, match="inner"):
        TrialSpec(trials=1, martingale_length=1, inner=10)


def test_single_increment_ratio_is_exactly_one_quarter():
    # M_1 = D_1, so both sides are the same sample mean up to roundoff
    report = check_tv_inequality(
        TrialSpec(trials=20, martingale_length=1, p=1.3, seed=2)
    )
    assert report.violations == 0
    assert report.max_ratio == pytest.approx(0.25, rel=1e-9)


@settings(max_examples=12, deadline=None)
@given(st.floats(min_value=1.0, max_value=2.0))
def test_single_increment_ratio_for_any_exponent(p):
    report = check_tv_inequality(
        TrialSpec(trials=3, martingale_length=1, p=p, seed=4, inner=400)
    )
    assert report.max_ratio == pytest.approx(0.25, rel=1e-9)


def test_orthogonal_increments_use_exactly_a_quarter_of_the_bound():
    # p = 2: E|M_n|^2 = sum E|D_k|^2, so the ratio estimate sits at 1/4
    # plus only the cross-term noise
    report = check_tv_inequality(
        TrialSpec(trials=40, martingale_length=6, increment="gaussian",
                  p=2.0, seed=3)
    )
    assert report.violations == 0
    assert abs(report.max_ratio - 0.25) < 5.0 * report.max_ratio_se


@pytest.mark.parametrize("kind,p", [("disk", 1.5), ("heavy", 1.0),
                                    ("phase", 1.2), ("skew", 2.0)])
def test_randomized_trials_never_violate(kind, p):
    report = check_tv_inequality(
        TrialSpec(trials=300, martingale_length=8, increment=kind, p=p,
                  seed=11)
    )
    assert report.violations == 0
    assert report.max_ratio <= 1.0


def test_tv_check_is_deterministic():
    spec = TrialSpec(trials=25, martingale_length=5, p=1.5, seed=13)
    assert check_tv_inequality(spec) == check_tv_inequality(spec)


# ---------------------------------------------------------------------------
# pointwise parallelogram-type bound


def test_parallelogram_sweep_has_no_violations():
    assert check_parallelogram_bound(1_000_000, 1.5, seed=1) == 0


def test_parallelogram_identity_at_p_two():
    assert check_parallelogram_bound(200_000, 2.0, seed=2) == 0


def test_parallelogram_rejects_bad_exponent():
    with pytest.raises(ValueError, match="p must lie"):
        check_parallelogram_bound(10, 2.5)


def test_parallelogram_equality_when_one_argument_vanishes():
    z = np.array([0.3 + 1.1j, -2.0 + 0.5j, 4.0j])
    for p in (1.0, 1.4, 2.0):
        lhs = np.abs(z + 0) ** p + np.abs(z - 0) ** p
        assert np.allclose(lhs, 2.0 * np.abs(z) ** p, rtol=1e-15)


@settings(max_examples=300, deadline=None)
@given(FINITE_COMPLEX, FINITE_COMPLEX,
       st.floats(min_value=1.0, max_value=2.0))
def test_parallelogram_bound_pointwise(z, w, p):
    lhs = abs(z + w) ** p + abs(z - w) ** p
    rhs = 2.0 * (abs(z) ** p + abs(w) ** p)
    assert not lhs > rhs * (1.0 + 1e-12) + 1e-300


# ---------------------------------------------------------------------------
# weighted-sum tail bound


def test_tail_bound_single_weight_containment():
    report = check_weighted_tail_bound((1.0,), "disk", trials=20_000, seed=4)
    assert report.violations == 0
    # c = 1: bound = (8/eps^2) E|Y|^2 / 2 with E|Y|^2 = 1/2 on the disk
    assert report.bound(0.4) == pytest.approx(2.0 / 0.4**2, rel=0.02)


def test_tail_bound_equal_weights_scale_like_one_over_n():
    # |Y| = 1: the truncated moments are deterministic, bound = 1/(2n) * 8/eps^2
    small = check_weighted_tail_bound(np.full(4, 0.25), "phase",
                                      eps_grid=(0.5, 0.8), trials=5_000,
                                      seed=4)
    large = check_weighted_tail_bound(np.full(64, 1 / 64), "phase",
                                      eps_grid=(0.5, 0.8), trials=5_000,
                                      seed=4)
    assert small.bound(0.5) == pytest.approx(8.0 / 0.25 / 8.0, rel=1e-12)
    assert large.bound(0.5) == pytest.approx(small.bound(0.5) / 16.0,
                                             rel=1e-12)
    assert small.violations == 0 and large.violations == 0


def test_tail_bound_concentrated_sum_has_empty_tail():
    report = check_weighted_tail_bound(np.full(16, 1 / 16), "phase",
                                       trials=40_000, seed=4)
    eps, p_hat, _, bound = report.rows[-1]
    assert eps == 0.8
    assert p_hat == 0.0
    assert bound > 0.0
    assert report.violations == 0


def test_tail_bound_heavy_increments():
    w = 2.0 ** -np.arange(1.0, 9.0)
    report = check_weighted_tail_bound(w / w.sum(), "heavy",
                                       trials=30_000, seed=9)
    assert report.violations == 0


def test_tail_bound_input_guards():
    with pytest.raises(ValueError, match="sum"):
        check_weighted_tail_bound((0.5, 0.4), trials=100)
    with pytest.raises(ValueError, match="eps grid"):
        check_weighted_tail_bound((1.0,), eps_grid=(0.5, 1.5), trials=100)


# ---------------------------------------------------------------------------
# cascade cancellation


def test_phase_cascade_matches_the_orthogonality_recursion():
    # E Z_1 = 0 makes the second moment an exact n-fold product:
    # E|Z_n|^2 = (E sum |L|^2)^n = 2^-n on the binary tree
    report = check_cancellation(CascadeFamily("symmetric-phase"), 2.0,
                                trees=200, seed=6)
    assert report.passed
    assert report.a_abs == 0.0
    assert report.moment_mass == 0.5
    for n, moment, se in report.rows:
        assert abs(moment - 2.0 ** -n) < 4.0 * se
    assert report.slope == pytest.approx(-math.log(2.0), abs=0.05)
    assert report.r_squared > 0.99


def test_squared_gaussian_cascade_decays():
    family = CascadeFamily("squared-gaussian", lam=0.3 + 0.6j)
    report = check_cancellation(family, 2.0, n_grid=(4, 8, 12), trees=120,
                                seed=6)
    assert report.passed
    assert report.a_abs == pytest.approx(math.exp(-2 * 0.6**2), rel=1e-12)
    assert report.slope < 0.0
    assert report.r_squared > 0.9


def test_positive_real_weights_are_rejected():
    with pytest.raises(ValueError, match="cannot cancel"):
        check_cancellation(CascadeFamily("positive-real"), 2.0, trees=4)


def test_real_parameter_cascade_cannot_cancel_either():
    # eta = 0 leaves no rotation: E Z_1 = 1 and the guard fires
    with pytest.raises(ValueError, match="cannot cancel"):
        check_cancellation(CascadeFamily("squared-gaussian", lam=0.5 + 0.0j),
                           2.0, trees=4)


def test_heavy_mass_cascade_is_rejected():
    # theta large enough that E sum |L|^2 = exp(4 theta^2)/2 exceeds 1
    with pytest.raises(ValueError, match="E sum"):
        check_cancellation(CascadeFamily("squared-gaussian", lam=0.6 + 0.3j),
                           2.0, trees=4)


def test_cancellation_input_guards():
    with pytest.raises(ValueError, match="p > 1"):
        check_cancellation(CascadeFamily("symmetric-phase"), 1.0, trees=4)
    with pytest.raises(ValueError, match="n_grid"):
        check_cancellation(CascadeFamily("symmetric-phase"), 2.0,
                           n_grid=(8,), trees=4)
    with pytest.raises(ValueError, match="unknown cascade kind"):
        CascadeFamily("additive")
    with pytest.raises(ValueError, match="branches"):
        CascadeFamily("symmetric-phase", branches=1)


def test_cancellation_is_deterministic():
    family = CascadeFamily("symmetric-phase", branches=3)
    a = check_cancellation(family, 1.5, n_grid=(2, 4, 6), trees=40, seed=21)
    b = check_cancellation(family, 1.5, n_grid=(2, 4, 6), trees=40, seed=21)
    assert a == b
    assert a.q == 1.5
    assert a.moment_mass == pytest.approx(3.0 ** -0.5)


# ---------------------------------------------------------------------------
# the suite


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_suite_is_clean_at_pinned_seeds(seed):
    # reduced scale here; the acceptance run exercises full scale
    report = run_suite(seed=seed, scale=0.05)
    assert report.violations == 0
    assert report.lines()[-1] == "suite: pass"
    assert len(report.checks) == 13
