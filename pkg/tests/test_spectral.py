import math
import warnings

import mpmath as mp
import numpy as np
import pytest

from zeta_transforms.errors import BadParams, DomainError, ParseError, PoleError, ValidationError, WrongWeightPower
from zeta_transforms.spectral import (SpectralTable, big_r, i_tg_direct, i_tg_spectral, i_tg_terms,
                                      load_spectral_data, parse_spectral_text, partial_weight_sums, s_m_sum,
                                      s_m_terms, s_t_delta, s_t_delta_excluded, s_t_delta_terms,
                                      spectral_l2_terms, spectral_sum_l2, synthetic_table)

EMPTY = SpectralTable((), 3)


def single(kappa, weight, m=3):
    return SpectralTable.from_pairs([(kappa, weight)], m)


def mp_big_r(y):
    """The defining product at 40 digits."""
    with mp.workdps(40):
        y = mp.mpf(y)
        ratio = mp.power(2, -1j * y) * mp.gamma(0.25 - 0.5j * y) / mp.gamma(0.25 + 0.5j * y)
        return complex(mp.sqrt(mp.pi / 2) * ratio ** 3 * mp.gamma(2j * y) * mp.cosh(mp.pi * y))


# parsing

def test_parse_two_entries():
    t = parse_spectral_text("SPEC m=3\n9.5 0.25\n12.2 0.11\n")
    assert len(t) == 2 and t.m == 3
    assert list(t.kappa) == [9.5, 12.2] and list(t.weight) == [0.25, 0.11]


def test_parse_sorts_and_skips_comments():
    t = parse_spectral_text("# header comment\nSPEC m=2\n# c\n12.2 0.11\n\n9.5 0.25\n")
    assert list(t.kappa) == [9.5, 12.2] and t.m == 2


def test_empty_body_is_valid():
    assert len(parse_spectral_text("SPEC m=3\n")) == 0


@pytest.mark.parametrize("text", ["9.5 0.25\n", "SPEC m=4\n", "SPEC m=3\n9.5\n", "SPEC m=3\n9.5 abc\n", ""])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_spectral_text(text)


@pytest.mark.parametrize("line", ["-1.0 0.5", "0 0.5", "9.5 inf", "nan 1"])
def test_validation_errors(line):
    with pytest.raises(ValidationError):
        parse_spectral_text("SPEC m=3\n" + line + "\n")


def test_duplicate_kappa_rejected():
    with pytest.raises(ValidationError):
        parse_spectral_text("SPEC m=3\n9.5 0.25\n9.5 0.1\n")


def test_load_from_file(tmp_path):
    p = tmp_path / "t.spec"
    p.write_text("SPEC m=1\n9.5 0.25\n")
    assert load_spectral_data(p).m == 1


def test_synthetic_fixture():
    t = synthetic_table()
    assert t.m == 3 and len(t) == 7


# R(y)

@pytest.mark.parametrize("y", [0.5, 3.0, 10.0, 37.5, 100.0])
def test_big_r_against_direct_product(y):
    assert abs(big_r(y) / mp_big_r(y) - 1) < 1e-10


def test_big_r_conjugate_symmetry():
    ys = np.linspace(0.5, 150.0, 20)
    assert np.max(np.abs(big_r(-ys) - np.conj(big_r(ys))) / np.abs(big_r(ys))) < 1e-10


def test_big_r_decay_window():
    ys = np.array([5.0, 10.0, 20.0, 50.0, 100.0])
    v = np.abs(big_r(ys)) * np.sqrt(ys)
    med = np.median(v)
    assert np.all(v <= 3 * med) and np.all(v >= med / 3)


def test_big_r_pole():
    with pytest.raises(PoleError):
        big_r(0.0)


# L_2 spectral term

def test_l2_empty_table():
    assert spectral_sum_l2(0.5, EMPTY) == 0


def test_l2_single_entry_is_real_pair():
    k, w, s = 10.0, 1.0, 0.5
    val = spectral_sum_l2(s, single(k, w))
    g = complex(mp.gamma(0.5 + 1j * k))
    expected = 2 * (s ** (-1j * k) * mp_big_r(k) * g).real * s ** -0.5 * w
    assert abs(val.imag) < 1e-14
    assert val.real == pytest.approx(expected, rel=1e-9)


def test_l2_single_entry_by_factors():
    k, w, s = 12.2, 0.11, 0.3 + 0.4j
    with mp.workdps(30):
        ms = mp.mpc(s)
        plus = ms ** (-1j * k) * mp_big_r(k) * mp.gamma(0.5 + 1j * k)
        minus = ms ** (1j * k) * mp_big_r(-k) * mp.gamma(0.5 - 1j * k)
        expected = complex(ms ** -0.5 * w * (plus + minus))
    got = spectral_sum_l2(s, single(k, w))
    assert abs(got - expected) <= 1e-9 * abs(expected)


@pytest.mark.parametrize("s", [0.1, 0.5, 1.0])
def test_l2_real_for_real_argument(s):
    v = spectral_sum_l2(s, synthetic_table())
    assert abs(v.imag) < 1e-10 * abs(v.real) + 1e-14


def test_l2_domain_and_weight_power():
    t = synthetic_table()
    with pytest.raises(DomainError):
        spectral_sum_l2(1.5, t)
    with pytest.raises(DomainError):
        spectral_sum_l2(0.0, t)
    with pytest.raises(DomainError):
        spectral_sum_l2(-0.5, t)
    with pytest.raises(WrongWeightPower):
        spectral_sum_l2(0.5, single(9.5, 0.25, m=2))


# I(T, G)

def test_itg_direct_positive_and_refined():
    a = i_tg_direct(1000.0, 40.0, 1e-8)
    b = i_tg_direct(1000.0, 40.0, 1e-9)
    assert a.value > 0
    assert abs(a.value - b.value) <= a.err_est + b.err_est


def test_itg_direct_truncation_invariance():
    # a tighter tol moves the cut from G sqrt(log 1e6 + 4) to G sqrt(log 1e12 + 4)
    a = i_tg_direct(1000.0, 50.0, 1e-6)
    b = i_tg_direct(1000.0, 50.0, 1e-12)
    assert a.value > 0 and abs(a.value - b.value) < 1e-6


def test_itg_spectral_single_entry():
    k, w, T, G = 9.5, 0.25, 1000.0, 100.0
    expected = math.pi / math.sqrt(2 * T) * w * k ** -0.5 * math.sin(k * math.log(k / (4 * math.e * T))) \
        * math.exp(-0.25 * (G * k / T) ** 2)
    assert i_tg_spectral(T, G, single(k, w)) == pytest.approx(expected, rel=1e-14)


def test_itg_spectral_empty_and_window():
    assert i_tg_spectral(1000.0, 100.0, EMPTY) == 0
    with pytest.raises(DomainError):
        i_tg_spectral(1000.0, 1000.0, synthetic_table())
    with pytest.raises(DomainError):
        i_tg_spectral(1000.0, 1.0, synthetic_table())


# S_m

def test_sm_single_entry():
    k, w, t = 14.4, 0.05, 500.0
    got = s_m_sum(3, 10.0, 20.0, t, single(k, w))
    assert got == pytest.approx(w * math.cos(k * math.log(4 * math.e * t / k)), rel=1e-14)


def test_sm_excludes_outside_entries():
    assert s_m_sum(3, 10.0, 12.0, 500.0, single(14.4, 0.05)) == 0
    assert s_m_sum(3, 14.4, 20.0, 500.0, single(14.4, 0.05)) == 0


def test_sm_empty_and_bad_params():
    assert s_m_sum(3, 10.0, 20.0, 500.0, EMPTY) == 0
    with pytest.raises(BadParams):
        s_m_sum(3, 10.0, 30.0, 500.0, synthetic_table())
    with pytest.raises(BadParams):
        s_m_sum(3, 10.0, 10.0, 500.0, synthetic_table())
    with pytest.raises(WrongWeightPower):
        s_m_sum(2, 10.0, 20.0, 500.0, synthetic_table())


# S(T, Delta)

def test_std_single_entry():
    k, w, T, D = 9.5, 0.25, 1e4, 200.0
    expected = math.pi * math.sqrt(T / 2) * w * k ** -1.5 * math.cos(k * math.log(k / (4 * math.e * T))) \
        * math.exp(-0.25 * (D * k / T) ** 2)
    assert s_t_delta(T, D, single(k, w)) == pytest.approx(expected, rel=1e-14)


def test_std_cut_warns_and_reports():
    T, D = 1e4, 5000.0
    # the cut is (T/D) log T = 18.4, so kappa = 19.4 is excluded
    t = synthetic_table()
    assert s_t_delta_terms(T, D, t)[-1] == 0
    assert s_t_delta_excluded(T, D, t) > 0
    # the Gaussian damps the dropped term to about 6e-11
    with pytest.warns(RuntimeWarning):
        s_t_delta(T, D, t, tol=1e-12)


def test_std_no_warning_inside_cut():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        s_t_delta(1e4, 200.0, synthetic_table())


def test_std_empty_and_window():
    assert s_t_delta(1e4, 200.0, EMPTY) == 0
    with pytest.raises(DomainError):
        s_t_delta(1e4, 1e4, synthetic_table())
    with pytest.raises(DomainError):
        s_t_delta(1e4, 50.0, synthetic_table())


# linearity under splits

@pytest.mark.parametrize("index", [0, 3, 7])
def test_sums_split_linearly(index):
    t = synthetic_table()
    a, b = t.split(index)
    whole = spectral_l2_terms(0.4 + 0.1j, t)
    assert np.array_equal(np.concatenate([spectral_l2_terms(0.4 + 0.1j, a), spectral_l2_terms(0.4 + 0.1j, b)]),
                          whole)
    for terms, total in ((lambda tab: i_tg_terms(1000.0, 100.0, tab), lambda tab: i_tg_spectral(1000.0, 100.0, tab)),
                         (lambda tab: s_m_terms(3, 10.0, 20.0, 500.0, tab),
                          lambda tab: s_m_sum(3, 10.0, 20.0, 500.0, tab)),
                         (lambda tab: s_t_delta_terms(1e4, 200.0, tab),
                          lambda tab: s_t_delta(1e4, 200.0, tab))):
        joined = np.concatenate([terms(a), terms(b)])
        assert np.array_equal(joined, terms(t))
        assert math.fsum(joined) == total(t)


def test_partial_weight_sums():
    t = synthetic_table()
    got = partial_weight_sums(t, [10.0, 20.0])
    assert got[0] == pytest.approx(0.25 / 100)
    assert got[1] == pytest.approx(sum(t.weight) / 400)
