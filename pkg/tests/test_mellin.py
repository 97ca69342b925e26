import math

import numpy as np
import pytest

from zeta_transforms.errors import BadParams, DomainError, PoleError
from zeta_transforms.laplace import zeta_power_growth
from zeta_transforms.mellin import (A5_POLE, exp_smoothed_moment, leading_pole_identity, mellin_transform,
                                    pole_coefficients, principal_part_z1, recurrence_rhs,
                                    square_identity_general, square_identity_report, z1_continued,
                                    z2_continued)
from zeta_transforms.moments import ZetaPower, default_polynomial, pinned_k1_polynomial, zeta_frequency
from zeta_transforms.quadrature import ContourSpec, integrate_algebraic_tail
from zeta_transforms.records import IdentityReport, TransformValue
from zeta_transforms.zeta_core import EULER_GAMMA, LOG_2PI


def test_transform_value_rejects_negative_error():
    with pytest.raises(ValueError):
        TransformValue(1.0, -1e-3)


def test_report_pass_flag_matches_error():
    rep = IdentityReport.compare("x", 1.0, 1.0 + 1e-4, 1e-3)
    assert rep.passed and rep.abs_err == pytest.approx(1e-4)
    assert not IdentityReport.compare("x", 1.0, 1.1, 1e-3).passed


def test_direct_positive_and_decreasing():
    vals = [mellin_transform(1, s).value for s in np.linspace(2.5, 20, 8)]
    assert all(v > 0 for v in vals)
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_direct_k2_decreasing():
    vals = [mellin_transform(2, s).value for s in (3.0, 5.0, 10.0, 20.0)]
    assert all(a > b > 0 for a, b in zip(vals, vals[1:]))


def test_direct_conjugation():
    a = mellin_transform(1, 3 + 1j)
    b = mellin_transform(1, 3 - 1j)
    assert abs(a.value - np.conj(b.value)) <= a.err_est + b.err_est


def test_direct_domain():
    with pytest.raises(DomainError):
        mellin_transform(1, 1.1)
    with pytest.raises(DomainError):
        mellin_transform(3, 1.4)


def test_direct_doubled_truncation():
    a = mellin_transform(1, 3.0, 1e-8, x_cap=2.0 ** 12)
    b = mellin_transform(1, 3.0, 1e-8, x_cap=2.0 ** 13)
    assert abs(a.value - b.value) <= a.err_est + b.err_est


def test_derivative_consistency_at_three():
    h = 1e-3
    fd = (mellin_transform(1, 3 + h, 1e-10).value - mellin_transform(1, 3 - h, 1e-10).value) / (2 * h)
    C, _ = zeta_power_growth(1)
    zp = ZetaPower(1)
    # |zeta|^2 <= C x^(1/2) gives the tail of int log(x) |zeta|^2 x^-3
    d = integrate_algebraic_tail(lambda x: -np.log(x) * zp(x), 1.0, 3.0, 0.6, 1e-8, freq=zeta_frequency,
                                 tail_bound=lambda X: C * X ** -1.5 * (math.log(X) / 1.5 + 1 / 2.25),
                                 x_cap=2.0 ** 17)
    assert abs(fd - d.value) <= 1e-4


def test_continued_matches_direct_at_two():
    a = z1_continued(2.0)
    b = mellin_transform(1, 2.0)
    assert abs(a.value - b.value) <= a.err_est + b.err_est


def test_continued_k2_matches_direct():
    a = z2_continued(2.5)
    b = mellin_transform(2, 2.5)
    assert abs(a.value - b.value) <= a.err_est + b.err_est


def test_continued_conjugation():
    a = z1_continued(0.7 + 3j)
    b = z1_continued(0.7 - 3j)
    assert abs(a.value - np.conj(b.value)) <= a.err_est + b.err_est


def test_continued_domain_and_pole():
    with pytest.raises(DomainError):
        z1_continued(0.2)
    with pytest.raises(DomainError):
        z2_continued(0.4)
    with pytest.raises(PoleError):
        z1_continued(1.0)
    with pytest.raises(PoleError):
        z2_continued(1.01 + 0.005j)


def test_principal_part_form():
    s = 1.1
    assert principal_part_z1(s) == pytest.approx(100 + (2 * EULER_GAMMA - LOG_2PI) / 0.1, rel=1e-14)


def test_continued_approaches_double_pole():
    lead = [e * e * z1_continued(1 + e).value for e in (0.2, 0.1, 0.05)]
    assert all(abs(a - 1) > abs(b - 1) for a, b in zip(lead, lead[1:]))
    assert 0.9 <= lead[-1] <= 1.1


def test_leading_pole_coefficient_matches_moment_coefficient():
    A = pole_coefficients(default_polynomial(2))
    assert A[-1] == pytest.approx(A5_POLE, rel=1e-14)
    assert A5_POLE / math.factorial(4) == pytest.approx(1 / (2 * math.pi ** 2), abs=1e-15)
    assert leading_pole_identity().passed


def test_fifth_order_pole_trend():
    vals = [e ** 5 * z2_continued(1 + e).value for e in (0.3, 0.2, 0.1)]
    gaps = [abs(v - A5_POLE) for v in vals]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[-1] < 0.25 * A5_POLE


def test_k1_pole_coefficients_are_exact():
    A = pole_coefficients(pinned_k1_polynomial())
    assert A == pytest.approx([2 * EULER_GAMMA - LOG_2PI, 1.0], abs=1e-15)


def test_recurrence_parameter_checks():
    spec = ContourSpec(1.3, -80.0, 80.0)
    with pytest.raises(BadParams):
        recurrence_rhs(2, 2, 3.0, spec)
    with pytest.raises(BadParams):
        recurrence_rhs(2, 0, 3.0, spec)
    with pytest.raises(DomainError):
        recurrence_rhs(2, 1, 3.0, ContourSpec(0.9, -10.0, 10.0))
    with pytest.raises(DomainError):
        recurrence_rhs(2, 1, 1.2, spec)


def test_square_general_constant_weight():
    rep = square_identity_general(lambda x: np.ones_like(x), 1.0, 2.0, 3.0)
    assert rep.lhs == pytest.approx(9 / 64, abs=1e-12)
    assert rep.rhs == pytest.approx(9 / 64, abs=1e-12)
    assert rep.passed


def test_square_general_linear_weight():
    # (int_1^2 x * x^-4 dx)^2 = (3/8)^2
    rep = square_identity_general(lambda x: x, 1.0, 2.0, 4.0)
    assert rep.lhs == pytest.approx(9 / 64, abs=1e-12)
    assert rep.passed


def test_square_general_complex_exponent():
    s = 2.5 + 1.5j
    exact = ((1 - 2 ** (1 - s)) / (s - 1)) ** 2
    rep = square_identity_general(lambda x: np.ones_like(x), 1.0, 2.0, s)
    assert abs(rep.lhs - exact) < 1e-12 and rep.passed


def test_square_general_bad_interval():
    with pytest.raises(BadParams):
        square_identity_general(lambda x: x, 2.0, 1.0, 3.0)
    with pytest.raises(BadParams):
        square_identity_general(lambda x: x, 0.0, 1.0, 3.0)


def test_square_report_domain():
    with pytest.raises(DomainError):
        square_identity_report(1, 1.05)


def test_smoothed_moment_precondition():
    with pytest.raises(DomainError):
        exp_smoothed_moment(1, 1.0)


@pytest.mark.slow
def test_smoothed_moment_k1():
    rep = exp_smoothed_moment(1, 50.0, 1e-3)
    assert rep.passed
    # e^(-x/T) >= 1/e on [1, T]
    from zeta_transforms.moments import moment_integral
    assert moment_integral(1, 50.0).value <= math.e * rep.lhs.real + moment_integral(1, 1.0).value
