"""One test per acceptance criterion; each records a PASS/FAIL line shown in the terminal summary."""

import math

import numpy as np

from zeta_transforms.identities import (verify_bridge, verify_kober, verify_principal, verify_recurrence,
                                        verify_square, verify_square_general)
from zeta_transforms.laplace import fit_l2_polynomial, laplace_transform
from zeta_transforms.mellin import A5_POLE, mellin_transform, z1_continued, z2_continued
from zeta_transforms.moments import (A4_FOURTH_MOMENT, error_term, mean_square_error_term, moment_integral,
                                     pinned_k1_polynomial)
from zeta_transforms.spectral import (SpectralTable, big_r, i_tg_spectral, i_tg_terms, s_m_sum, s_m_terms,
                                      s_t_delta, s_t_delta_terms, spectral_l2_terms, spectral_sum_l2,
                                      synthetic_table)
from zeta_transforms.zeta_core import chi, zeta, zeta_half_line, zeta_half_line_array

from closed_form_suite import honest_fraction, run_suite


def test_01_functional_equation(criterion):
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for sr, si in zip(rng.uniform(0.01, 0.99, 100), rng.uniform(-100, 100, 100)):
        s = complex(sr, si)
        lhs, rhs = zeta(s), chi(s) * zeta(1 - s)
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    criterion(1, "functional equation on 100 random points of the strip", worst <= 1e-10,
              f"max relative residual {worst:.2e}")


def test_02_first_zero(criterion):
    m = abs(zeta_half_line(14.134725))
    criterion(2, "modulus at t = 14.134725 below 1e-4", m < 1e-4, f"{m:.3e}")


def test_03_evaluator_seam(criterion):
    t = np.linspace(35.0, 45.0, 50)
    gap = float(np.max(np.abs(zeta_half_line_array(t, method="em") - zeta_half_line_array(t, method="rs"))))
    criterion(3, "Euler-Maclaurin and Riemann-Siegel agree on [35, 45]", gap <= 1e-8, f"max gap {gap:.2e}")


def test_04_kober_residual(criterion):
    rep = verify_kober()
    criterion(4, "small-sigma residual of L_1 settles", rep.passed, "; ".join(rep.notes))


def test_05_principal_part(criterion):
    rep = verify_principal()
    criterion(5, "double pole of Z_1 and its residue", rep.passed,
              f"Richardson {rep.lhs:.5f} vs {rep.rhs:.5f}; {rep.notes[0]}")


def test_06_continuation_consistency(criterion):
    ims = [0.0, 1.0, -2.0, 3.0, 5.0, -5.0, 2.5, -1.0, 4.0, 0.5]
    bad, gaps = [], {1: 0.0, 2: 0.0}
    for k, lo, cont in ((1, 1.3, z1_continued), (2, 1.6, z2_continued)):
        for re, im in zip(np.linspace(lo, 3.0, 10), ims):
            s = complex(re, im)
            a, b = cont(s), mellin_transform(k, s)
            gaps[k] = max(gaps[k], abs(a.value - b.value))
            if abs(a.value - b.value) > a.err_est + b.err_est:
                bad.append(f"k={k} s={s}")
    detail = f"max |gap| {gaps[1]:.1e} (k = 1), {gaps[2]:.1e} (k = 2)"
    criterion(6, "continued and direct Z_k agree on 10 points for k = 1 and k = 2", not bad,
              detail if not bad else detail + "; outside: " + ", ".join(bad))


def test_07_square_identity(criterion):
    rep = verify_square(1, 4.0, 1e4, 1e-3)
    gen = verify_square_general(3.0)
    exact = abs(gen.lhs - 9 / 64) <= 1e-12 and abs(gen.rhs - 9 / 64) <= 1e-12
    criterion(7, "square identity for k = 1, s = 4 and the constant-weight case",
              rep.passed and gen.passed and exact, f"abs_err {rep.abs_err:.2e}; general {gen.abs_err:.1e}")


def test_08_recurrence(criterion):
    rep = verify_recurrence(2, 1, 3.0)
    rel = rep.abs_err / abs(rep.lhs)
    criterion(8, "contour recurrence for k = 2, r = 1, s = 3 (heuristic truncation)", rep.passed,
              f"relative gap {rel:.2e}; {', '.join(rep.notes)}")


def test_09_bridge(criterion):
    rep = verify_bridge(20.0)
    bounds = [moment_integral(1, T).value <= math.e * laplace_transform(1, 1 / T).value.real for T in (20.0, 50.0)]
    criterion(9, "L_1(1/T) against the Laplace integral of I_1 at T = 20, trivial bound at 20 and 50",
              rep.passed and all(bounds), f"abs_err {rep.abs_err:.1e}")


def test_10_l2_leading_constant(criterion):
    coef = fit_l2_polynomial()
    ratio = coef[4] / A4_FOURTH_MOMENT
    criterion(10, "degree-4 fit of sigma L_2(sigma) recovers 1/(2 pi^2)", abs(ratio - 1) <= 0.2,
              f"leading coefficient {coef[4]:.5f} = {ratio:.3f} x 1/(2 pi^2)")


def test_11_mean_square(criterion):
    p = pinned_k1_polynomial()
    Ts = (500.0, 1000.0, 2000.0)
    ratios = [mean_square_error_term(1, T, p) / T ** 1.5 for T in Ts]
    rel = [abs(error_term(1, T, p)) / T for T in Ts]
    ok = max(ratios) / min(ratios) <= 4 and rel[0] > rel[1] > rel[2]
    criterion(11, "mean square of E_1 against T^1.5 and decay of |E_1(T)|/T", ok,
              "ratios " + ", ".join(f"{r:.3g}" for r in ratios) + "; |E_1|/T " + ", ".join(f"{r:.3g}" for r in rel))


def test_12_spectral_algebra(criterion):
    ys = np.linspace(0.5, 150.0, 20)
    conj = float(np.max(np.abs(big_r(-ys) - np.conj(big_r(ys))) / np.abs(big_r(ys))))
    window = np.abs(big_r(np.array([5.0, 10.0, 20.0, 50.0, 100.0]))) * np.sqrt([5.0, 10.0, 20.0, 50.0, 100.0])
    med = np.median(window)
    t = synthetic_table()
    reals = [spectral_sum_l2(s, t) for s in (0.1, 0.5, 1.0)]
    real_ok = all(abs(v.imag) < 1e-10 * abs(v.real) + 1e-14 for v in reals)
    a, b = t.split(3)
    split_ok = all(np.array_equal(np.concatenate([f(a), f(b)]), f(t)) for f in (
        lambda tab: spectral_l2_terms(0.4 + 0.1j, tab), lambda tab: i_tg_terms(1000.0, 100.0, tab),
        lambda tab: s_m_terms(3, 10.0, 20.0, 500.0, tab), lambda tab: s_t_delta_terms(1e4, 200.0, tab)))
    one = SpectralTable.from_pairs([(9.5, 0.25)], 3)
    hand_itg = math.pi / math.sqrt(2000.0) * 0.25 * 9.5 ** -0.5 * math.sin(9.5 * math.log(9.5 / (4 * math.e * 1000))) \
        * math.exp(-0.25 * (100.0 * 9.5 / 1000) ** 2)
    hand_sm = 0.25 * math.cos(9.5 * math.log(4 * math.e * 500.0 / 9.5))
    hand_std = math.pi * math.sqrt(5000.0) * 0.25 * 9.5 ** -1.5 * math.cos(9.5 * math.log(9.5 / (4 * math.e * 1e4))) \
        * math.exp(-0.25 * (200.0 * 9.5 / 1e4) ** 2)
    hand_ok = (math.isclose(i_tg_spectral(1000.0, 100.0, one), hand_itg, rel_tol=1e-13)
               and math.isclose(s_m_sum(3, 9.0, 18.0, 500.0, one), hand_sm, rel_tol=1e-13)
               and math.isclose(s_t_delta(1e4, 200.0, one), hand_std, rel_tol=1e-13))
    ok = conj <= 1e-10 and np.all(window <= 3 * med) and np.all(window >= med / 3) and real_ok and split_ok and hand_ok
    criterion(12, "spectral kernel symmetry, decay window, reality, split linearity, hand checks", bool(ok),
              f"conjugation residual {conj:.1e}")


def test_13_constant_identity(criterion):
    gap = abs(A5_POLE / math.factorial(4) - 1 / (2 * math.pi ** 2))
    criterion(13, "(12/pi^2)/4! equals 1/(2 pi^2)", gap <= 1e-15, f"gap {gap:.1e}")


def test_14_quadrature_honesty(criterion):
    results = run_suite(1e-9)
    frac = honest_fraction(results)
    criterion(14, f"error estimates honest on the {len(results)}-integral closed-form suite",
              len(results) >= 20 and frac >= 0.95, f"{frac:.0%} within 3 x err_est")
