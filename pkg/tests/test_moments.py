import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zeta_transforms.errors import DomainError, SingularFit, Underdetermined
from zeta_transforms.mellin import A5_POLE
from zeta_transforms.moments import (A4_FOURTH_MOMENT, MomentPolynomial, MomentSample, default_polynomial,
                                     error_term, fit_main_coeffs, main_term, max_relative_error,
                                     mean_square_error_term, moment_grid, moment_integral, moment_samples,
                                     pinned_k1_polynomial)
from zeta_transforms.quadrature import integrate_adaptive
from zeta_transforms.zeta_core import EULER_GAMMA, LOG_2PI

# mpmath.quad of |zeta(1/2+it)|^2 and ^4 over [0, 100] on 200 subintervals at 20 digits
MPMATH_I1_100 = 295.63509905471913
MPMATH_I2_100 = 2393.6620611336035


def test_zero_height_gives_zero():
    assert moment_integral(1, 0.0).value == 0.0


def test_negative_height_and_bad_k():
    with pytest.raises(DomainError):
        moment_integral(1, -1.0)
    with pytest.raises(DomainError):
        moment_integral(5, 10.0)


def test_additivity():
    tol = 1e-8
    whole = moment_integral(1, 100.0, tol).value
    first = moment_integral(1, 50.0, tol).value
    from zeta_transforms.moments import ZetaPower, zeta_frequency
    second = integrate_adaptive(ZetaPower(1), 50.0, 100.0, tol, freq=zeta_frequency).value
    assert abs(whole - first - second) <= 2 * tol


def test_second_moment_to_100_against_mpmath():
    assert moment_integral(1, 100.0, 1e-9).value == pytest.approx(MPMATH_I1_100, abs=1e-8)


def test_fourth_moment_to_100_against_mpmath():
    assert moment_integral(2, 100.0, 1e-8).value == pytest.approx(MPMATH_I2_100, abs=1e-7)


def test_refined_rerun_agrees():
    a = moment_integral(1, 100.0, 1e-8)
    b = moment_integral(1, 100.0, 5e-9)
    assert abs(a.value - b.value) <= a.err_est + b.err_est + 1e-8


def test_pinned_k1_coefficients():
    p = pinned_k1_polynomial()
    assert p.coeffs == (2 * EULER_GAMMA - 1 - LOG_2PI, 1.0)
    assert p.provenance == ("pinned", "pinned")


def test_main_term_at_two_pi():
    p = pinned_k1_polynomial()
    assert main_term(p, 2 * math.pi) == pytest.approx(2 * math.pi * (LOG_2PI + p.coeffs[0]), rel=1e-15)


def test_main_term_rejects_nonpositive_height():
    with pytest.raises(DomainError):
        main_term(pinned_k1_polynomial(), 0.0)


def test_polynomial_invariants():
    with pytest.raises(ValueError):
        MomentPolynomial(1, (1.0,), ("pinned",))
    with pytest.raises(ValueError):
        MomentPolynomial(2, (0, 0, 0, 0, 0.05), ("fitted",) * 5)
    with pytest.raises(ValueError):
        MomentPolynomial(1, (0.0, 1.0), ("pinned", "guessed"))


def test_sample_rejects_negative_value():
    with pytest.raises(ValueError):
        MomentSample(10.0, -1.0, 0.0)


def test_fit_recovers_synthetic_linear_shape():
    Ts = [10.0, 100.0, 1000.0, 1e4]
    samples = [MomentSample(T, T * (math.log(T) + 3), 0.0) for T in Ts]
    fit = fit_main_coeffs(1, samples)
    assert fit.coeffs == pytest.approx((3.0, 1.0), abs=1e-10)
    assert fit.provenance == ("fitted", "fitted")


def test_fit_holds_pinned_coefficient():
    Ts = [10.0, 100.0, 1000.0]
    samples = [MomentSample(T, T * (math.log(T) + 3), 0.0) for T in Ts]
    fit = fit_main_coeffs(1, samples, {1: 1.0})
    assert fit.coeffs[1] == 1.0 and fit.provenance == ("fitted", "pinned")
    assert fit.coeffs[0] == pytest.approx(3.0, abs=1e-12)


def test_too_few_samples_for_k2():
    samples = [MomentSample(T, T, 0.0) for T in (10.0, 20.0)]
    with pytest.raises(Underdetermined):
        fit_main_coeffs(2, samples)


def test_repeated_heights_are_rejected():
    samples = [MomentSample(10.0, 10.0, 0.0)] * 4
    with pytest.raises(Underdetermined):
        fit_main_coeffs(1, samples)


def test_rank_deficient_design():
    # distinct heights whose logarithms coincide to rounding
    samples = [MomentSample(1e6 * (1 + j * 1e-15), 1.0, 0.0) for j in range(6)]
    with pytest.raises((SingularFit, Underdetermined)):
        fit_main_coeffs(2, samples)


def test_k2_leading_coefficient_always_pinned():
    Ts = np.geomspace(10, 1e4, 12)
    samples = [MomentSample(T, T * (1 + math.log(T) ** 4 / (2 * math.pi ** 2)), 0.0) for T in Ts]
    fit = fit_main_coeffs(2, samples)
    assert fit.coeffs[4] == A4_FOURTH_MOMENT and fit.provenance[4] == "pinned"
    assert fit.coeffs[0] == pytest.approx(1.0, abs=1e-8)


def test_constant_identity_between_pole_and_moment():
    assert abs(A5_POLE / math.factorial(4) - 1 / (2 * math.pi ** 2)) <= 1e-15


@pytest.mark.slow
def test_fitted_k1_constant_term_within_five_percent():
    samples = moment_samples(1, np.geomspace(1e3, 1e5, 120))
    fit = fit_main_coeffs(1, samples)
    target = 2 * EULER_GAMMA - 1 - LOG_2PI
    assert abs(fit.coeffs[0] / target - 1) < 0.05


def test_moment_is_nondecreasing():
    Ts = np.linspace(0, 500, 400)
    vals = [s.value for s in moment_samples(1, Ts)]
    assert np.all(np.diff(vals) >= 0)


@settings(max_examples=20, deadline=None)
@given(st.floats(2.0, 500.0))
def test_main_plus_error_is_moment(T):
    p = pinned_k1_polynomial()
    assert error_term(1, T, p) + main_term(p, T) == pytest.approx(moment_integral(1, T).value, abs=1e-9)


def test_error_at_thousand_within_square_root_bound():
    T = 1000.0
    assert abs(error_term(1, T, pinned_k1_polynomial())) <= 3 * math.sqrt(T) * math.log(T)


def test_windowed_relative_error_decreases():
    p = pinned_k1_polynomial()
    vals = [max_relative_error(1, T / 2, T, p) for T in (500.0, 1000.0, 2000.0, 4000.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_grid_error_nodes_match_error_term():
    p = pinned_k1_polynomial()
    g = moment_grid(1, 1000.0)
    x, _, E, _ = g.error_at_nodes(p)
    i, j = 200, 7
    assert E[i, j] == pytest.approx(error_term(1, float(x[i, j]), p), abs=1e-8)


def test_mean_square_k1_ratio_bounded():
    p = pinned_k1_polynomial()
    ratios = [mean_square_error_term(1, T, p) / T ** 1.5 for T in (500.0, 1000.0, 2000.0)]
    assert all(r > 0 for r in ratios)
    assert max(ratios) / min(ratios) <= 4


def test_mean_square_rejects_small_height():
    with pytest.raises(DomainError):
        mean_square_error_term(1, 5.0, pinned_k1_polynomial())


@pytest.mark.slow
def test_mean_square_k2_ratio_within_window():
    p = default_polynomial(2)
    ratios = [mean_square_error_term(2, T, p) / T ** 2 for T in (500.0, 1000.0, 2000.0)]
    assert all(r > 0 for r in ratios)
    assert max(ratios) / min(ratios) <= 4
