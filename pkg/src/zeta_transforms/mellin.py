"""Modified Mellin transforms ``Z_k(s) = int_1^inf |zeta(1/2 + i x)|^(2k) x^(-s) dx``.

Direct quadrature covers the half-plane of absolute convergence.  For k = 1, 2
the transform is continued to the left by splitting the moment
``I_k(x) = x P(log x) + E_k(x)``:

    Z_k(s) = R(s) - E_k(1) + s int_1^inf E_k(x) x^(-s-1) dx,

where ``R`` is the rational function produced by the main term.  The last
integral is evaluated on the panels of a moment grid and its tail beyond the
grid is bounded through the mean square of ``E_k`` by Cauchy-Schwarz on
dyadic blocks.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
from scipy import special

from .errors import BadParams, DomainError, PoleError
from .moments import (A4_FOURTH_MOMENT, MomentPolynomial, ZetaPower, default_polynomial,
                      mean_square_error_term, moment_grid, zeta_frequency)
from .quadrature import (GAUSS_WEIGHTS, KRONROD_WEIGHTS, ContourSpec, algebraic_tail_bound,
                         contour_line_integral, integrate_adaptive, integrate_algebraic_tail,
                         integrate_exp_tail)
from .records import IdentityReport, TransformValue
from .zeta_core import EULER_GAMMA, LOG_2PI

ArrayLike = Union[complex, np.ndarray]

# Abscissae of absolute convergence used for the direct transform.
CONVERGENCE_ABSCISSA = {1: 1.0, 2: 1.0, 3: 1.25, 4: 1.5}
DIRECT_MARGIN = 0.25
# Left edge of the continued region and the mean-square growth exponent of E_k.
CONTINUATION_EDGE = {1: 0.25, 2: 0.5}
MEAN_SQUARE_EXPONENT = {1: 1.5, 2: 2.0}
POLE_EXCLUSION = 0.02
A5_POLE = 12.0 / math.pi ** 2


def convergence_abscissa(k: int) -> float:
    """``c(k)``: 1, 1, 5/4, 3/2 for k = 1..4."""
    if k not in CONVERGENCE_ABSCISSA:
        raise DomainError("k must be 1, 2, 3 or 4")
    return CONVERGENCE_ABSCISSA[k]


# ---------------------------------------------------------------------------
# Direct transform
# ---------------------------------------------------------------------------

def _incomplete_log_moments(sigma: float, x: float, degree: int) -> np.ndarray:
    """``int_x^inf t^(-sigma) log(t)^j dt`` for ``j = 0..degree`` (``sigma > 1``)."""
    a = sigma - 1.0
    z = a * math.log(x)
    j = np.arange(degree + 1)
    return special.gammaincc(j + 1, z) * special.gamma(j + 1) / a ** (j + 1)


def direct_tail_bound(k: int, sigma: float, X: float, poly: Optional[MomentPolynomial] = None) -> float:
    """Bound on ``int_X^inf |zeta|^(2k) x^(-sigma) dx``.

    Integration by parts gives ``<= sigma int_X^inf I_k(x) x^(-sigma-1) dx``.
    For k = 1, 2 the moment is bounded by ``2 x Q(log x)``, ``Q`` the main-term
    polynomial with absolute coefficients, and the integral is closed form.
    For k = 3, 4 ``I_k(x) <= C x^(c+eps)`` with ``eps = (sigma - c)/2`` and ``C``
    twice the largest ratio over samples in ``[X/8, X]``.
    """
    c = convergence_abscissa(k)
    if k in (1, 2):
        poly = poly or default_polynomial(k)
        q = np.abs(np.asarray(poly.coeffs))
        return float(2.0 * sigma * (q @ _incomplete_log_moments(sigma, X, q.size - 1)))
    eps = 0.5 * (sigma - c)
    grid = moment_grid(k, X)
    xs = np.geomspace(X / 8, X, 8)
    vals, _ = grid.integral_to(xs)
    C = 2.0 * float(np.max(vals / xs ** (c + eps)))
    return sigma * C * X ** (c + eps - sigma) / (sigma - c - eps)


DIRECT_X_CAP = 2.0 ** 17


def mellin_transform(k: int, s: complex, tol: float = 1e-6, x_cap: float = DIRECT_X_CAP) -> TransformValue:
    """``Z_k(s)`` by direct quadrature for ``Re s > c(k) + 1/4``.

    Parameters
    ----------
    k : {1, 2, 3, 4}
    s : complex
    tol : float
        Absolute tolerance.  The range stops at ``x_cap`` at the latest;
        ``err_est`` always includes the bound on the discarded tail, which near
        the convergence abscissa can exceed ``tol``.
    x_cap : float
        Largest truncation point.

    Raises
    ------
    DomainError
        Inside the convergence margin.
    """
    s = complex(s)
    c = convergence_abscissa(k)
    if not s.real > c + DIRECT_MARGIN:
        raise DomainError(f"direct Z_{k} needs Re s > {c + DIRECT_MARGIN:g}")
    eps = 0.5 * (s.real - c)
    res = integrate_algebraic_tail(ZetaPower(k), 1.0, s, c - 1.0 + eps, tol,
                                   tail_bound=lambda X: direct_tail_bound(k, s.real, X),
                                   freq=zeta_frequency, x_cap=x_cap)
    value = res.value if s.imag != 0 else complex(res.value).real
    return TransformValue(value, res.err_est)


# ---------------------------------------------------------------------------
# Continuation
# ---------------------------------------------------------------------------

def main_part(s: ArrayLike, poly: MomentPolynomial) -> ArrayLike:
    """``R(s) = int_1^inf x^(-s) d(x P(log x))`` as a rational function of ``s - 1``."""
    u = np.asarray(s, dtype=complex) - 1.0
    out = np.zeros_like(u)
    for j, coef in enumerate(pole_coefficients(poly)):
        out = out + coef / u ** (j + 1)
    return out if out.ndim else complex(out)


def pole_coefficients(poly: MomentPolynomial) -> np.ndarray:
    """Coefficients ``A_{j+1}`` of ``(s - 1)^-(j+1)``, ``j = 0..k^2``, in the principal part at 1.

    ``A_{j+1} = j! (a_j + (j+1) a_{j+1})`` with ``a_{k^2+1} = 0``.
    """
    a = np.append(np.asarray(poly.coeffs, dtype=float), 0.0)
    j = np.arange(a.size - 1)
    fact = special.factorial(j)
    return fact * (a[:-1] + (j + 1) * a[1:])


def principal_part_z1(s: ArrayLike) -> ArrayLike:
    """``1/(s-1)^2 + (2 gamma - log 2 pi)/(s-1)``."""
    u = np.asarray(s, dtype=complex) - 1.0
    out = 1.0 / u ** 2 + (2 * EULER_GAMMA - LOG_2PI) / u
    return out if out.ndim else complex(out)


def principal_part_z2(s: ArrayLike, poly: Optional[MomentPolynomial] = None) -> ArrayLike:
    """Order-five principal part of ``Z_2`` at 1 from the main-term coefficients.

    The leading coefficient is ``4! a_4 = 12 / pi^2``.
    """
    return main_part(s, poly or default_polynomial(2))


class ContinuedKernel:
    """``s int_1^X E_k(x) x^(-s-1) dx`` on the nodes of a moment grid, vectorized in ``s``."""

    _CHUNK = 4_000_000

    def __init__(self, k: int, poly: MomentPolynomial, x_max: float, tau: float = 0.0):
        self.k = k
        self.poly = poly
        grid = moment_grid(k, x_max, tau=tau)
        self.grid = grid
        x, half, E, E_err = grid.error_at_nodes(poly, 1.0)
        self.x_max = float(grid.x_max)
        self.logx = np.log(x).reshape(-1)
        wk = (half[:, None] * KRONROD_WEIGHTS[None, :] * E).reshape(-1)
        wg = (half[:, None] * GAUSS_WEIGHTS[None, :] * E).reshape(-1)
        self.weights = np.stack([wk, wg], axis=1)
        self.e_err_max = float(E_err.max()) if E_err.size else 0.0
        i1, _ = grid.integral_to(1.0)
        self.e_at_1 = float(i1[0]) - float(poly(0.0))

    def __call__(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = np.asarray(s, dtype=complex).reshape(-1)
        acc = np.zeros((s.size, 2), dtype=complex)
        step = max(1, self._CHUNK // max(s.size, 1))
        for lo in range(0, self.logx.size, step):
            lx = self.logx[lo:lo + step]
            acc += np.exp(-np.outer(s + 1.0, lx)) @ self.weights[lo:lo + step]
        val = s * acc[:, 0]
        err = np.abs(s) * (np.abs(acc[:, 0] - acc[:, 1]) + self.e_err_max / s.real)
        return val, err


@lru_cache(maxsize=32)
def _kernel(k: int, poly: MomentPolynomial, x_max: float, tau: float) -> ContinuedKernel:
    return ContinuedKernel(k, poly, x_max, tau)


@lru_cache(maxsize=64)
def mean_square_constant(k: int, poly: MomentPolynomial, X: float) -> float:
    """Twice the largest ``int_1^T E_k^2 / T^beta`` over ``T`` in ``{X/8, X/4, X/2, X}``."""
    beta = MEAN_SQUARE_EXPONENT[k]
    Ts = [X, X / 2, X / 4, X / 8]
    return 2.0 * max(mean_square_error_term(k, T, poly) / T ** beta for T in Ts)


def continuation_tail_bound(k: int, s: ArrayLike, X: float, K: float) -> np.ndarray:
    """Bound on ``|s int_X^inf E_k(x) x^(-s-1) dx|`` given ``int_1^T E_k^2 <= K T^beta``.

    Cauchy-Schwarz on ``[2^m X, 2^(m+1) X]`` gives a geometric series with ratio
    ``2^(beta/2 - sigma - 1/2)``.
    """
    s = np.asarray(s, dtype=complex)
    beta = MEAN_SQUARE_EXPONENT[k]
    sig = s.real
    e = beta / 2 - sig - 0.5
    return np.abs(s) * np.sqrt(K * 2 ** beta / (2 * sig + 1)) * X ** e / (1 - 2.0 ** e)


def _check_continued(k: int, s: np.ndarray) -> None:
    edge = CONTINUATION_EDGE[k]
    if np.any(np.abs(s - 1.0) < POLE_EXCLUSION):
        if np.any(s == 1.0):
            raise PoleError(f"Z_{k} has a pole at s = 1")
        raise PoleError(f"|s - 1| < {POLE_EXCLUSION} is excluded around the pole")
    if np.any(s.real <= edge):
        raise DomainError(f"the continuation of Z_{k} needs Re s > {edge}")
    if k == 2 and np.any(np.abs(s.real - 0.5) < POLE_EXCLUSION):
        raise DomainError("too close to the line Re s = 1/2")


def _snap_tau(tau: float) -> float:
    return 0.0 if tau <= 1.0 else float(2.0 ** math.ceil(math.log2(tau)))


def z_continued_array(k: int, s: ArrayLike, poly: Optional[MomentPolynomial] = None,
                      tol: float = 1e-6, x_cap: float = 2.0 ** 17) -> tuple[np.ndarray, np.ndarray]:
    """Continued ``Z_k`` (k = 1, 2) at an array of points; returns ``(values, err_est)``.

    The grid length is the first power of two (from 2^10) at which the tail
    bound is below ``tol/2`` for every point, capped at ``x_cap``; the bound
    is carried in ``err_est`` either way.
    """
    if k not in CONTINUATION_EDGE:
        raise DomainError("continuation is implemented for k = 1 and 2")
    poly = poly or default_polynomial(k)
    if poly.k != k:
        raise ValueError("polynomial belongs to a different k")
    s_arr = np.asarray(s, dtype=complex)
    flat = s_arr.reshape(-1)
    _check_continued(k, flat)
    tau = _snap_tau(float(np.max(np.abs(flat.imag))) if flat.size else 0.0)
    X = 2.0 ** 10
    while True:
        K = mean_square_constant(k, poly, X)
        tail = continuation_tail_bound(k, flat, X, K)
        if np.max(tail) <= tol / 2 or X >= x_cap:
            break
        X *= 2.0
    kern = _kernel(k, poly, X, tau)
    val, err = kern(flat)
    total = main_part(flat, poly) - kern.e_at_1 + val
    return total.reshape(s_arr.shape), (err + tail).reshape(s_arr.shape)


def _continued(k: int, s: complex, poly, tol) -> TransformValue:
    s = complex(s)
    val, err = z_continued_array(k, np.array([s]), poly, tol)
    v = complex(val[0])
    return TransformValue(v if s.imag != 0 else v.real, float(err[0]))


def z1_continued(s: complex, poly: Optional[MomentPolynomial] = None, tol: float = 1e-6) -> TransformValue:
    """``Z_1(s)`` for ``Re s > 1/4`` through the error term ``E_1``.

    Raises
    ------
    PoleError
        Within 0.02 of ``s = 1``.
    DomainError
        For ``Re s <= 1/4``.
    """
    return _continued(1, s, poly, tol)


def z2_continued(s: complex, poly: Optional[MomentPolynomial] = None, tol: float = 1e-6) -> TransformValue:
    """``Z_2(s)`` for ``Re s > 1/2`` through the error term ``E_2``.

    Raises
    ------
    PoleError
        Within 0.02 of ``s = 1``.
    DomainError
        For ``Re s <= 1/2`` or within 0.02 of that line.
    """
    return _continued(2, s, poly, tol)


# ---------------------------------------------------------------------------
# Mellin convolution along a vertical line
# ---------------------------------------------------------------------------

def _z_on_points(k: int, w: np.ndarray, tol: float, x_cap: float) -> np.ndarray:
    if k in (1, 2):
        return z_continued_array(k, w, tol=tol, x_cap=x_cap)[0]
    flat = w.reshape(-1)
    out = np.array([mellin_transform(k, complex(v), tol).value for v in flat], dtype=complex)
    return out.reshape(w.shape)


def recurrence_rhs(k: int, r: int, s: complex, spec: ContourSpec, tol: float = 1e-6,
                   step: float = 20.0, max_extensions: int = 40,
                   factor_x_cap: float = 2.0 ** 13) -> TransformValue:
    """``(1/2 pi i) int_(c) Z_(k-r)(w) Z_r(1 + s - w) dw``, truncated on a self-extending window.

    Starting from ``[spec.t_min, spec.t_max]``, 20-unit strips are added on
    both sides until three successive extensions each change the value by
    less than ``tol/4``.  Factors with k = 1, 2 use the continued
    representation on a grid of length at most ``factor_x_cap``.  ``err_est``
    is the quadrature error only; the truncation is not bounded, which the
    notes record.

    Raises
    ------
    BadParams
        Unless ``2 <= k <= 4`` and ``1 <= r <= k - 1``.
    DomainError
        When a factor would leave its direct-convergence region on the contour.
    """
    s = complex(s)
    if not 2 <= k <= 4 or not 1 <= r <= k - 1:
        raise BadParams("need 2 <= k <= 4 and 1 <= r <= k - 1")
    c = spec.c
    if not c > convergence_abscissa(k - r):
        raise DomainError(f"Re w = {c} is outside the convergence region of Z_{k - r}")
    if not 1 + s.real - c > convergence_abscissa(r):
        raise DomainError(f"Re(1 + s - w) = {1 + s.real - c} is outside the convergence region of Z_{r}")
    factor_tol = 0.1 * tol

    def F(w):
        w = np.asarray(w, dtype=complex)
        return (_z_on_points(k - r, w, factor_tol, factor_x_cap)
                * _z_on_points(r, 1.0 + s - w, factor_tol, factor_x_cap))

    base = contour_line_integral(F, spec, tol / 4)
    value, err = base.value, base.err_est
    lo, hi = spec.t_min, spec.t_max
    quiet = 0
    settled = False
    for _ in range(max_extensions):
        right = contour_line_integral(F, ContourSpec(c, hi, hi + step, spec.max_step), tol / 16)
        left = contour_line_integral(F, ContourSpec(c, lo - step, lo, spec.max_step), tol / 16)
        hi, lo = hi + step, lo - step
        delta = right.value + left.value
        value += delta
        err += right.err_est + left.err_est
        quiet = quiet + 1 if abs(delta) < tol / 4 else 0
        if quiet >= 3:
            settled = True
            break
    notes = ("truncation heuristic: window tail not bounded",
             f"window [{lo:g}, {hi:g}]",
             "window settled" if settled else "window did not settle")
    return TransformValue(complex(value), float(err), notes)


# ---------------------------------------------------------------------------
# Square identities
# ---------------------------------------------------------------------------

def _combined_tol(tol: float, lhs: complex, err_lhs: float, err_rhs: float) -> float:
    return tol * max(1.0, abs(lhs)) + err_lhs + err_rhs


def _inner_convolution(f: Callable, x: np.ndarray, lo_fn, hi_fn, tol: float,
                       freq=None) -> tuple[np.ndarray, np.ndarray]:
    vals = np.empty(x.shape)
    errs = np.empty(x.shape)
    for idx, xv in np.ndenumerate(x):
        lo, hi = lo_fn(xv), hi_fn(xv)
        if hi <= lo:
            vals[idx] = errs[idx] = 0.0
            continue
        res = integrate_adaptive(lambda u: f(u) * f(xv / u) / u, lo, hi, tol, freq=freq)
        vals[idx], errs[idx] = res.value.real if np.isrealobj(res.value) else res.value, res.err_est
    return vals, errs


def square_identity_report(k: int, s: complex, x_max: float = 1e4, tol: float = 1e-3) -> IdentityReport:
    """``Z_k(s)^2`` against ``2 int_1^X x^(-s) int_sqrt(x)^x f(u) f(x/u) du/u dx``, ``f = |zeta|^(2k)``.

    The pass threshold is ``tol * max(1, |lhs|)`` plus both error estimates;
    the right side carries a sampled bound for ``x > x_max``.

    Raises
    ------
    DomainError
        Unless ``Re s > c(k) + 1/4 + 1``.
    """
    s = complex(s)
    c = convergence_abscissa(k)
    if not s.real > c + DIRECT_MARGIN + 1.0:
        raise DomainError(f"the square identity is checked for Re s > {c + DIRECT_MARGIN + 1:g}")
    direct = mellin_transform(k, s, tol * 1e-3)
    lhs = direct.value ** 2
    err_lhs = 2 * abs(direct.value) * direct.err_est
    f = ZetaPower(k)
    inner_tol = tol * 1e-4

    def outer(x):
        x = np.asarray(x, dtype=float)
        v, _ = _inner_convolution(f, x, np.sqrt, lambda t: t, inner_tol, freq=zeta_frequency)
        return 2.0 * v * np.exp(-s * np.log(x))

    res = integrate_adaptive(outer, 1.0, float(x_max), tol * 1e-2)
    xs = np.geomspace(x_max / 8, x_max, 8)
    inner_vals, _ = _inner_convolution(f, xs, np.sqrt, lambda t: t, inner_tol, freq=zeta_frequency)
    growth = 0.5
    C = 2.0 * float(np.max(2.0 * inner_vals / xs ** growth))
    tail = algebraic_tail_bound(C, growth, s.real, float(x_max))
    rhs = res.value if s.imag else complex(res.value).real
    err_rhs = res.err_est + tail
    eff = _combined_tol(tol, lhs, err_lhs, err_rhs)
    return IdentityReport.compare("square-identity", lhs, rhs, eff,
                                  (f"x_max = {x_max:g}", f"tail bound {tail:.3g}"))


def square_identity_general(f: Callable, a: float, b: float, s: complex, tol: float = 1e-12) -> IdentityReport:
    """``(int_a^b f x^(-s) dx)^2`` against ``2 int_(a^2)^(b^2) x^(-s) int_sqrt(x)^min(x/a, b) f(u) f(x/u) du/u dx``.

    ``f`` must accept numpy arrays.  The outer integral is split at ``x = ab``,
    where the inner upper limit switches branch.

    Raises
    ------
    BadParams
        Unless ``0 < a < b``.
    """
    if not 0 < a < b:
        raise BadParams("need 0 < a < b")
    s = complex(s)
    inner_tol = tol * 1e-2
    one = integrate_adaptive(lambda x: f(x) * np.exp(-s * np.log(x)), a, b, inner_tol)
    lhs = one.value ** 2
    err_lhs = 2 * abs(one.value) * one.err_est

    def outer(x):
        x = np.asarray(x, dtype=float)
        v, _ = _inner_convolution(f, x, np.sqrt, lambda t: min(t / a, b), inner_tol)
        return 2.0 * v * np.exp(-s * np.log(x))

    parts = [integrate_adaptive(outer, lo, hi, inner_tol) for lo, hi in ((a * a, a * b), (a * b, b * b))]
    rhs = sum(p.value for p in parts)
    err_rhs = sum(p.err_est for p in parts)
    if s.imag == 0:
        lhs, rhs = complex(lhs).real, complex(rhs).real
    return IdentityReport.compare("square-identity-general", lhs, rhs, tol + err_lhs + err_rhs)


# ---------------------------------------------------------------------------
# Exponentially smoothed moment
# ---------------------------------------------------------------------------

def exp_smoothed_moment(k: int, T: float, tol: float = 1e-3) -> IdentityReport:
    """``int_1^inf e^(-x/T) |zeta|^(2k) dx`` against ``(1/2 pi i) int_(c) Gamma(s) T^s Z_k(s) ds``.

    The contour sits on ``Re s = c(k) + 1/4``; its window is cut where the
    decay ``|Gamma(c + it)| ~ sqrt(2 pi) |t|^(c - 1/2) e^(-pi |t| / 2)`` makes
    the rest negligible.

    Raises
    ------
    DomainError
        Unless ``T >= 10`` and ``k`` is 1 or 2.
    """
    if k not in (1, 2):
        raise DomainError("k must be 1 or 2")
    if T < 10:
        raise DomainError("T must be at least 10")
    from .laplace import zeta_power_growth

    const, growth = zeta_power_growth(k)
    left = integrate_exp_tail(ZetaPower(k), 1.0, 1.0 / T, tol * 1e-2, growth=growth,
                              growth_const=const, freq=zeta_frequency)
    lhs = left.value
    c = convergence_abscissa(k) + DIRECT_MARGIN
    window = (2.0 / math.pi) * (c * math.log(T) + math.log(1.0 / tol) + 12.0)
    # |Gamma| integrates to O(1) along the line, so Z is needed to about tol * |lhs| / T^c
    z_tol = 0.1 * tol * max(1.0, abs(lhs)) / T ** c

    def F(w):
        w = np.asarray(w, dtype=complex)
        z, _ = z_continued_array(k, w, tol=z_tol, x_cap=2.0 ** 14)
        return np.exp(special.loggamma(w) + w * math.log(T)) * z

    right = contour_line_integral(F, ContourSpec(c, -window, window, 0.5), tol * 1e-2)
    rhs = right.value.real
    eff = _combined_tol(tol, lhs, left.err_est, right.err_est)
    return IdentityReport.compare("smoothed-moment", lhs, rhs, eff, (f"window +-{window:.1f}",))


def leading_pole_identity() -> IdentityReport:
    """``A_5 / 4! = 1 / (2 pi^2)``: the order-five pole coefficient matches the fourth-moment constant."""
    return IdentityReport.compare("pole5", A5_POLE / math.factorial(4), A4_FOURTH_MOMENT, 1e-15)
