"""Laplace transforms ``L_k(s) = int_0^inf |zeta(1/2 + i x)|^(2k) e^(-s x) dx``.

Besides direct quadrature this module evaluates the explicit parts of the
classical exponential-sum and Bessel-series representations of ``L_1`` and
``L_2``, the small-``sigma`` main terms, and the divisor tables and the
``K_0`` Bessel function they need.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy import special

from .errors import DomainError, SingularFit, TableTooSmall
from .moments import A4_FOURTH_MOMENT, ZetaPower, moment_grid, zeta_frequency
from .quadrature import QuadResult, integrate_exp_tail
from .records import TransformValue
from .zeta_core import EULER_GAMMA, LOG_2PI

ArrayLike = Union[complex, np.ndarray]


# ---------------------------------------------------------------------------
# zeta'(s) by Euler-Maclaurin, and the small-sigma constants
# ---------------------------------------------------------------------------

_BERN = special.bernoulli(20)


def zeta_derivative(s: complex, n_terms: int = 60) -> complex:
    """``zeta'(s)`` from the term-by-term derivative of Euler-Maclaurin summation."""
    s = complex(s)
    if abs(s - 1) < 1e-8:
        raise DomainError("zeta' has a double pole at s = 1")
    n = max(n_terms, int(abs(s)) + 20)
    k = np.arange(2, n, dtype=float)
    logk = np.log(k)
    head = -np.sum(logk * np.exp(-s * logk))
    big, lg = float(n), math.log(n)
    npow = complex(np.exp(-s * lg))
    val = head - big * npow * (lg / (s - 1) + 1 / (s - 1) ** 2) - 0.5 * lg * npow
    poch, dpoch = s, 1.0 + 0j
    for j in range(1, 11):
        if j > 1:
            a, b = s + 2 * j - 3, s + 2 * j - 2
            dpoch = dpoch * a * b + poch * (a + b)
            poch = poch * a * b
        power = npow * big ** (1 - 2 * j)
        val += _BERN[2 * j] / math.factorial(2 * j) * power * (dpoch - lg * poch)
    return complex(val)


@lru_cache(maxsize=1)
def zeta_prime_2() -> float:
    """``zeta'(2)`` from the Euler-Maclaurin derivative series."""
    return zeta_derivative(2.0).real


@dataclass(frozen=True)
class L2AsympConstants:
    """Coefficients of ``sigma L_2(sigma) ~ A y^4 + B y^3 + C y^2 + D y + E``, ``y = log(1/sigma)``.

    ``A`` and ``B`` are closed forms; ``C``, ``D``, ``E`` are fitted (or zero).
    """

    A: float
    B: float
    C: float = 0.0
    D: float = 0.0
    E: float = 0.0
    provenance: tuple = ("pinned", "pinned", "unset", "unset", "unset")

    def __post_init__(self) -> None:
        if abs(self.A - A4_FOURTH_MOMENT) > 1e-15:
            raise ValueError("A is fixed at 1/(2 pi^2)")


def l2_leading_constants() -> L2AsympConstants:
    """``A = 1/(2 pi^2)`` and ``B = (2 log 2 pi - 6 gamma + 24 zeta'(2)/pi^2) / pi^2``."""
    pi2 = math.pi ** 2
    b = (2 * LOG_2PI - 6 * EULER_GAMMA + 24 * zeta_prime_2() / pi2) / pi2
    return L2AsympConstants(A4_FOURTH_MOMENT, b)


def l2_asymptotic(sigma: float, consts: L2AsympConstants) -> float:
    """Main term ``(A y^4 + B y^3 + C y^2 + D y + E) / sigma`` with ``y = log(1/sigma)``."""
    if not 0 < sigma < 1:
        raise DomainError("sigma must lie in (0, 1)")
    y = math.log(1 / sigma)
    return (consts.A * y ** 4 + consts.B * y ** 3 + consts.C * y ** 2 + consts.D * y + consts.E) / sigma


def kober_main(sigma_prime: float) -> float:
    """Small-argument main term ``(gamma - log(2 pi s)) / (2 sin(s/2))`` of ``L_1(s)``."""
    if not 0 < sigma_prime < 1:
        raise DomainError("sigma_prime must lie in (0, 1)")
    return (EULER_GAMMA - math.log(2 * math.pi * sigma_prime)) / (2 * math.sin(sigma_prime / 2))


# ---------------------------------------------------------------------------
# Direct quadrature
# ---------------------------------------------------------------------------

def zeta_power_growth(k: int) -> tuple[float, float]:
    """``(C, g)`` with ``|zeta(1/2 + i t)|^(2k) <= C t^g`` for ``t >= 2 pi``.

    From the Riemann-Siegel formula, ``|zeta(1/2+it)| <= 2 sum_{n<=N} n^(-1/2) + 1
    <= 4 (t / 2 pi)^(1/4)``.
    """
    return (4.0 * (2 * math.pi) ** -0.25) ** (2 * k), k / 2.0


def laplace_transform(k: int, s: complex, tol: float = 1e-8) -> TransformValue:
    """``L_k(s)`` by damped quadrature with a Riemann-Siegel growth bound for the tail.

    Parameters
    ----------
    k : {1, 2, 3}
    s : complex
        ``Re s > 0``.
    tol : float
        Absolute tolerance.

    Raises
    ------
    DomainError
        For ``Re s <= 0`` or ``k`` outside 1..3.
    """
    s = complex(s)
    if k not in (1, 2, 3):
        raise DomainError("k must be 1, 2 or 3")
    if not s.real > 0:
        raise DomainError("the Laplace transform needs Re s > 0")
    const, growth = zeta_power_growth(k)
    res = integrate_exp_tail(ZetaPower(k), 0.0, s, tol, growth=growth, growth_const=const,
                             freq=zeta_frequency)
    value = res.value if s.imag != 0 else complex(res.value).real
    return TransformValue(value, res.err_est)


def laplace_bridge_rhs(T: float, tol: float = 1e-8) -> QuadResult:
    """``(1/T) int_0^inf I_1(t) e^(-t/T) dt`` with ``I_1`` read off a moment grid.

    Integration by parts turns this into ``L_1(1/T)``; here the integrand is
    the running moment itself, on a different set of nodes.
    """
    if T <= 0:
        raise DomainError("T must be positive")
    sigma = 1.0 / T
    # I_1(t) <= 2 t log(t + e) <= 4 t^1.25 on t >= 1: growth exponent 1.25
    probe = 64.0 * T
    grid = moment_grid(1, probe)

    def running(t):
        t = np.asarray(t, dtype=float)
        if t.max() > grid.x_max:
            g2 = moment_grid(1, float(t.max()))
            v, _ = g2.integral_to(t.reshape(-1))
        else:
            v, _ = grid.integral_to(t.reshape(-1))
        return v.reshape(t.shape)

    res = integrate_exp_tail(running, 0.0, sigma, tol * T, growth=1.25, growth_const=4.0, max_step=T / 4)
    return QuadResult(res.value / T, res.err_est / T, res.panels_used, res.tail_bound / T, res.truncation)


# ---------------------------------------------------------------------------
# Divisor tables
# ---------------------------------------------------------------------------

_DIV_MAGIC = b"DIV1"


@dataclass(frozen=True)
class DivisorTable:
    """``d(n)`` and ``d_4(n)`` for ``1 <= n <= n_max`` (index 0 unused, stored as 0)."""

    n_max: int
    d: np.ndarray
    d4: np.ndarray

    def __post_init__(self) -> None:
        if self.d.shape != (self.n_max + 1,) or self.d4.shape != (self.n_max + 1,):
            raise ValueError("tables must have n_max + 1 entries")


def sieve_divisors(n_max: int) -> DivisorTable:
    """Sieve ``d`` and ``d_4`` by prime powers using multiplicativity.

    For ``p^a || n`` the local factors are ``a + 1`` and ``C(a + 3, 3)``.
    """
    if n_max < 1:
        raise ValueError("n_max must be positive")
    d = np.ones(n_max + 1, dtype=np.int64)
    d4 = np.ones(n_max + 1, dtype=np.int64)
    d[0] = d4[0] = 0
    is_p = np.ones(n_max + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, int(math.isqrt(n_max)) + 1):
        if is_p[p]:
            is_p[p * p::p] = False
    for p in np.nonzero(is_p)[0].tolist():
        pk, a = p, 1
        while pk <= n_max:
            sl = slice(pk, n_max + 1, pk)
            d[sl] = d[sl] // a * (a + 1)
            d4[sl] = d4[sl] // math.comb(a + 2, 3) * math.comb(a + 3, 3)
            pk *= p
            a += 1
    return DivisorTable(n_max, d, d4)


def write_divisor_table(table: DivisorTable, path: Union[str, Path]) -> None:
    """Persist in the ``DIV1`` format, atomically (write then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".div-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(_DIV_MAGIC)
            fh.write(struct.pack("<Q", table.n_max))
            fh.write(table.d[1:].astype("<i8").tobytes())
            fh.write(table.d4[1:].astype("<i8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_divisor_table(path: Union[str, Path]) -> DivisorTable:
    """Load a ``DIV1`` file; raises ``ValueError`` on a malformed file."""
    raw = Path(path).read_bytes()
    if raw[:4] != _DIV_MAGIC or len(raw) < 12:
        raise ValueError(f"{path} is not a divisor table")
    (n_max,) = struct.unpack("<Q", raw[4:12])
    if len(raw) != 12 + 16 * n_max:
        raise ValueError(f"{path} has the wrong length for n_max = {n_max}")
    body = np.frombuffer(raw, dtype="<i8", offset=12).astype(np.int64)
    zero = np.zeros(1, dtype=np.int64)
    return DivisorTable(int(n_max), np.concatenate([zero, body[:n_max]]), np.concatenate([zero, body[n_max:]]))


_TABLES: dict[int, DivisorTable] = {}


def divisor_table(n_max: int = 10 ** 6, cache_dir: Optional[Union[str, Path]] = None) -> DivisorTable:
    """Divisor table of at least ``n_max`` entries, from memory, disk cache or sieve."""
    for size, tab in _TABLES.items():
        if size >= n_max:
            return tab
    tab = None
    path = Path(cache_dir) / f"divisors-{n_max}.div1" if cache_dir is not None else None
    if path is not None and path.exists():
        try:
            tab = read_divisor_table(path)
        except ValueError:
            tab = None
    if tab is None:
        tab = sieve_divisors(n_max)
        if path is not None:
            write_divisor_table(tab, path)
    _TABLES[tab.n_max] = tab
    return tab


# ---------------------------------------------------------------------------
# Exponential-sum representation of L_1
# ---------------------------------------------------------------------------

def atkinson_l1(s: complex, n_max: int, table: DivisorTable) -> TransformValue:
    """Explicit part of the exponential-sum formula for ``L_1`` in ``0 < Re s < pi``.

    ``-i e^(is/2) (log 2 pi - gamma + (pi/2 - s) i) + 2 pi e^(-is/2) sum d(n) exp(-2 pi i n e^(-is))``,
    the sum cut at ``n_max``.  ``err_est`` bounds the discarded terms using
    ``d(n) <= 2 sqrt(n) <= 2 n``.
    """
    s = complex(s)
    if not 0 < s.real < math.pi:
        raise DomainError("the formula holds for 0 < Re s < pi")
    if n_max > table.n_max:
        raise TableTooSmall(f"table holds {table.n_max} entries, {n_max} requested")
    rot = np.exp(-1j * s)
    n = np.arange(1, n_max + 1)
    terms = table.d[1:n_max + 1] * np.exp(-2j * math.pi * n * rot)
    pre = 2 * math.pi * np.exp(-0.5j * s)
    value = (-1j * np.exp(0.5j * s) * (LOG_2PI - EULER_GAMMA + (math.pi / 2 - s) * 1j)
             + pre * terms[::-1].sum())
    r = math.exp(2 * math.pi * rot.imag)
    tail = abs(pre) * 2 * r ** (n_max + 1) * ((n_max + 1) - n_max * r) / (1 - r) ** 2
    return TransformValue(complex(value), float(tail))


# ---------------------------------------------------------------------------
# K_0
# ---------------------------------------------------------------------------

K0_SWITCH = 8.0


def k0_series(z: ArrayLike) -> np.ndarray:
    """Convergent series ``-(log(z/2) + gamma) I_0(z) + sum H_k (z^2/4)^k / (k!)^2``."""
    z = np.asarray(z, dtype=complex)
    q = z * z / 4
    term = np.ones_like(z)
    i0 = np.ones_like(z)
    hsum = np.zeros_like(z)
    harmonic = 0.0
    for k in range(1, 400):
        term = term * q / (k * k)
        harmonic += 1.0 / k
        i0 = i0 + term
        hsum = hsum + term * harmonic
        if np.all(np.abs(term) * harmonic <= 1e-18 * np.maximum(np.abs(hsum), 1e-300)):
            break
    return -(np.log(z / 2) + EULER_GAMMA) * i0 + hsum


def k0_asymptotic(z: ArrayLike) -> np.ndarray:
    """Optimally truncated ``sqrt(pi/2z) e^(-z) sum_k (-1)^k ((2k-1)!!)^2 / (k! 8^k z^k)``."""
    z = np.asarray(z, dtype=complex)
    total = np.ones_like(z)
    term = np.ones_like(z)
    live = np.ones(z.shape, dtype=bool)
    for k in range(1, 200):
        nxt = term * (-(2 * k - 1) ** 2 / (8.0 * k * z))
        live &= np.abs(nxt) < np.abs(term)
        if not np.any(live):
            break
        term = np.where(live, nxt, term)
        total = np.where(live, total + nxt, total)
    return np.sqrt(np.pi / (2 * z)) * np.exp(-z) * total


def _k0_integral(z: np.ndarray) -> np.ndarray:
    # K_0(z) = int_0^inf exp(-z cosh u) du, trapezoid rule (exponentially convergent)
    h = 0.04
    upper = np.arccosh((np.abs(z) + 60.0) / z.real)
    n = int(np.ceil(np.max(upper) / h)) + 1
    u = h * np.arange(n)
    vals = np.exp(-np.outer(z, np.cosh(u)))
    vals[:, 0] *= 0.5
    return h * vals.sum(axis=1)


def bessel_k0(z: ArrayLike) -> ArrayLike:
    """Modified Bessel function ``K_0`` for complex ``z`` (principal branch).

    The series is used for ``|z| <= 8`` and the asymptotic expansion beyond.
    Where neither reaches 1e-10 relative accuracy (from about |z| = 5, where the
    series starts losing digits to cancellation, up to |z| = 13, below which
    the best asymptotic truncation error ``~ e^(-2|z|)`` is too large) and
    ``|arg z| <= pi/3``, the trapezoid rule on ``int_0^inf exp(-z cosh u) du``
    is used instead.

    Raises
    ------
    DomainError
        At ``z = 0``.
    """
    z_arr = np.asarray(z, dtype=complex)
    flat = z_arr.reshape(-1)
    if np.any(flat == 0):
        raise DomainError("K_0 has a logarithmic singularity at 0")
    az = np.abs(flat)
    out = np.empty_like(flat)
    small = az <= K0_SWITCH
    out[small] = k0_series(flat[small])
    out[~small] = k0_asymptotic(flat[~small])
    band = (az >= 5.0) & (az <= 13.0) & (np.abs(np.angle(flat)) <= np.pi / 3)
    if np.any(band):
        out[band] = _k0_integral(flat[band])
    return complex(out[0]) if z_arr.ndim == 0 else out.reshape(z_arr.shape)


# ---------------------------------------------------------------------------
# Bessel-series representation of L_2
# ---------------------------------------------------------------------------

def _l2_series_args(s: complex, n: np.ndarray) -> np.ndarray:
    return 4j * math.pi * np.sqrt(n) * np.exp(-0.5j * s)


def atkinson_l2_series(s: complex, n_max: int, table: DivisorTable) -> TransformValue:
    """Truncated series ``4 pi e^(-is/2) sum_{n<=n_max} d_4(n) K_0(4 pi i sqrt(n) e^(-is/2))``.

    ``err_est`` bounds the discarded terms through ``d_4(n) <= d(n)^3 <= 8 n^1.5``
    and ``|K_0(z)| <= 1.1 sqrt(pi / 2|z|) e^(-Re z)`` for ``|z| >= 8``.

    Raises
    ------
    DomainError
        Unless ``Re s > 0`` and ``|s| < pi``.
    TableTooSmall
        When ``n_max`` exceeds the table.
    """
    s = complex(s)
    if not (s.real > 0 and abs(s) < math.pi):
        raise DomainError("the series is used for Re s > 0, |s| < pi")
    if n_max > table.n_max:
        raise TableTooSmall(f"table holds {table.n_max} entries, {n_max} requested")
    n = np.arange(1, n_max + 1, dtype=float)
    z = _l2_series_args(s, n)
    terms = table.d4[1:n_max + 1] * bessel_k0(z)
    pre = 4 * math.pi * np.exp(-0.5j * s)
    value = pre * terms[::-1].sum()
    rate = (4 * math.pi * np.exp(-0.5j * s) * 1j).real
    if rate <= 0:
        return TransformValue(complex(value), math.inf)
    tail = 0.0
    lo = n_max + 1
    while True:
        m = np.arange(lo, lo + 100_000, dtype=float)
        b = 8 * m ** 1.5 * 1.1 * np.sqrt(np.pi / (2 * 4 * math.pi * np.sqrt(m))) * np.exp(-rate * np.sqrt(m))
        tail += float(b.sum())
        if b[-1] < 1e-30 * max(tail, 1e-300) or b[-1] == 0:
            break
        lo += 100_000
    return TransformValue(complex(value), float(abs(pre) * tail))


# ---------------------------------------------------------------------------
# Fitting the small-sigma expansion
# ---------------------------------------------------------------------------

L2_FIT_RANGE = (2e-3, 5e-2)


def l2_samples(sigmas: Sequence[float], rel_tol: float = 1e-9) -> np.ndarray:
    """``L_2(sigma)`` on a set of real ``sigma`` (relative tolerance per point)."""
    out = []
    for sg in sigmas:
        scale = A4_FOURTH_MOMENT * math.log(1 / sg) ** 4 / sg + 1.0
        out.append(laplace_transform(2, sg, rel_tol * scale).value.real)
    return np.array(out)


def fit_l2_polynomial(sigmas: Optional[Sequence[float]] = None, degree: int = 4) -> np.ndarray:
    """Unconstrained least-squares coefficients (lowest degree first) of
    ``sigma L_2(sigma)`` as a polynomial in ``log(1/sigma)``."""
    if sigmas is None:
        sigmas = np.geomspace(*L2_FIT_RANGE, 25)
    sigmas = np.asarray(sigmas, dtype=float)
    y = np.log(1 / sigmas)
    vals = sigmas * l2_samples(sigmas)
    design = np.vander(y, degree + 1, increasing=True)
    if np.linalg.matrix_rank(design) < degree + 1:
        raise SingularFit("design matrix is rank deficient")
    coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
    return coef


def fit_l2_constants(sigmas: Optional[Sequence[float]] = None) -> L2AsympConstants:
    """Closed-form ``A``, ``B`` with ``C``, ``D``, ``E`` fitted over ``L2_FIT_RANGE``."""
    base = l2_leading_constants()
    if sigmas is None:
        sigmas = np.geomspace(*L2_FIT_RANGE, 25)
    sigmas = np.asarray(sigmas, dtype=float)
    y = np.log(1 / sigmas)
    resid = sigmas * l2_samples(sigmas) - base.A * y ** 4 - base.B * y ** 3
    design = np.vander(y, 3, increasing=True)
    e, d, c = np.linalg.lstsq(design, resid, rcond=None)[0]
    return L2AsympConstants(base.A, base.B, float(c), float(d), float(e),
                            ("pinned", "pinned", "fitted", "fitted", "fitted"))
