"""Power moments ``I_k(T)`` of zeta on the critical line, main terms and error terms.

All moment computations run on a :class:`MomentGrid`: an adaptive panel set
over ``[0, X]`` holding ``|zeta(1/2 + i x)|^(2k)`` at every quadrature node,
with cumulative panel integrals.  Error terms at arbitrary nodes come from
the panel antiderivative matrix, so ``E_k`` can be integrated against any
smooth weight without further zeta evaluations.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DomainError, SingularFit, Underdetermined
from .quadrature import (GAUSS_WEIGHTS, KRONROD_WEIGHTS, NODE_ANTIDERIVATIVE, NODES,
                         PanelSet, adaptive_panels, integrate_adaptive,
                         lattice_point_at_or_above)
from .zeta_core import EULER_GAMMA, LOG_2PI, CriticalLineSampler, default_sampler

A4_FOURTH_MOMENT = 1.0 / (2.0 * math.pi ** 2)
"""Leading coefficient of the fourth-moment polynomial."""

FIT_RANGE_K2 = (1e3, 1e5)
DEFAULT_T_CEILING = 1e5


def zeta_frequency(t: np.ndarray) -> np.ndarray:
    """Frequency hint for powers of ``|zeta(1/2 + i t)|``.

    ``log(t / 2 pi)`` is twice the derivative of the Riemann-Siegel phase, the
    top frequency of ``|zeta|^2``; panels of length ``pi / omega`` then cover
    half a period of it.  The same hint serves every k so that all powers
    share one set of nodes.
    """
    return np.maximum(1.0, np.log(np.maximum(np.abs(t), 1.0) / (2 * math.pi)))


def _with_twist(tau: float):
    if tau <= 0:
        return zeta_frequency
    return lambda t: np.maximum(zeta_frequency(t), tau / np.maximum(np.abs(t), 1.0))


@dataclass(frozen=True)
class MomentPolynomial:
    """Coefficients ``a_0 ... a_{k^2}`` of the main-term polynomial ``P_{k^2}``.

    The main term of ``I_k(T)`` is ``T * P(log T)``.  ``provenance`` tags each
    coefficient as ``"pinned"`` (exact) or ``"fitted"`` (least squares).
    """

    k: int
    coeffs: tuple
    provenance: tuple

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be positive")
        n = self.k ** 2 + 1
        if len(self.coeffs) != n or len(self.provenance) != n:
            raise ValueError(f"need {n} coefficients for k = {self.k}")
        if any(p not in ("pinned", "fitted") for p in self.provenance):
            raise ValueError("provenance must be 'pinned' or 'fitted'")
        if self.k == 2:
            if self.provenance[4] != "pinned" or abs(self.coeffs[4] - A4_FOURTH_MOMENT) > 1e-15:
                raise ValueError("the leading k = 2 coefficient is pinned to 1/(2 pi^2)")

    def __call__(self, y):
        return np.polynomial.polynomial.polyval(y, np.asarray(self.coeffs, dtype=float))

    def derivative(self, y):
        return np.polynomial.polynomial.polyval(
            y, np.polynomial.polynomial.polyder(np.asarray(self.coeffs, dtype=float)))


@dataclass(frozen=True)
class MomentSample:
    """One value of ``I_k(T)`` with its error estimate."""

    T: float
    value: float
    err_est: float

    def __post_init__(self) -> None:
        if not self.T >= 0:
            raise ValueError("T must be non-negative")
        if self.value < 0:
            raise ValueError("a moment of a modulus is non-negative")


def pinned_k1_polynomial() -> MomentPolynomial:
    """Exact second-moment polynomial ``y + 2 gamma - 1 - log 2 pi``.

    Both coefficients follow from matching the Laurent expansion of the
    continued Mellin transform at s = 1 (a double pole with leading
    coefficient 1 and residue ``2 gamma - log 2 pi``).
    """
    return MomentPolynomial(1, (2 * EULER_GAMMA - 1 - LOG_2PI, 1.0), ("pinned", "pinned"))


def _check_k(k: int) -> None:
    if k not in (1, 2, 3, 4):
        raise DomainError("k must be 1, 2, 3 or 4")


class ZetaPower:
    """Integrand ``|zeta(1/2 + i x)|^(2k)`` backed by a memoizing sampler."""

    def __init__(self, k: int, sampler: Optional[CriticalLineSampler] = None):
        _check_k(k)
        self.k = k
        self.sampler = sampler or default_sampler()

    def __call__(self, x):
        return self.sampler(x) ** self.k


class MomentGrid:
    """Adaptive panels for ``|zeta|^(2k)`` on ``[0, x_max]`` with running integrals.

    Parameters
    ----------
    k : int
    x_max : float
    tol : float
        Absolute tolerance for the whole-range integral (hence for every
        cumulative value).
    tau : float
        Extra oscillation ``tau / x`` to resolve, for weights ``x^{-i tau}``.
    """

    def __init__(self, k: int, x_max: float, tol: float, tau: float = 0.0,
                 sampler: Optional[CriticalLineSampler] = None):
        _check_k(k)
        self.k = k
        self.x_max = float(x_max)
        self.tol = float(tol)
        self.tau = float(tau)
        self.integrand = ZetaPower(k, sampler)
        ps = adaptive_panels(self.integrand, 0.0, self.x_max, tol, freq=_with_twist(tau), keep_values=True)
        self.panels: PanelSet = ps
        self.cum_left = np.concatenate([[0.0], np.cumsum(ps.value)[:-1]])
        self.cum_err_left = np.concatenate([[0.0], np.cumsum(ps.err)[:-1]])
        self.total = float(ps.value.sum())

    @property
    def err_total(self) -> float:
        return float(self.panels.err.sum())

    def integral_to(self, T) -> tuple[np.ndarray, np.ndarray]:
        """``I_k(T)`` and error estimates for ``0 <= T <= x_max`` (array)."""
        T = np.atleast_1d(np.asarray(T, dtype=float))
        if np.any(T < 0) or np.any(T > self.x_max):
            raise DomainError("T outside the grid range")
        ps = self.panels
        idx = np.clip(np.searchsorted(ps.left, T, side="right") - 1, 0, ps.left.size - 1)
        lo = ps.left[idx]
        part = np.zeros_like(T)
        perr = np.zeros_like(T)
        inside = T > lo
        if np.any(inside):
            a, b = lo[inside], T[inside]
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            x = mid[:, None] + half[:, None] * NODES[None, :]
            fx = self.integrand(x)
            kron = (fx @ KRONROD_WEIGHTS) * half
            gauss = (fx @ GAUSS_WEIGHTS) * half
            part[inside] = kron
            perr[inside] = np.abs(kron - gauss) + 1e-15 * np.abs(kron)
        return self.cum_left[idx] + part, self.cum_err_left[idx] + perr

    def error_at_nodes(self, poly: MomentPolynomial, lower: float = 1.0):
        """``E_k`` at the nodes of every panel with left edge >= ``lower``.

        Returns ``(nodes, half, E, E_err)`` with ``E`` of shape (panels, 15).
        Inside a panel ``E(x) = E(left) + int_left^x (|zeta|^{2k} - P(log u) - P'(log u)) du``
        is reconstructed from the node values with the antiderivative matrix.
        """
        if poly.k != self.k:
            raise ValueError("polynomial belongs to a different k")
        ps = self.panels
        sel = ps.left >= lower - 1e-12
        left = ps.left[sel]
        half = ps.half[sel]
        x = ps.nodes[sel]
        logx = np.log(x)
        g = ps.fx[sel] - poly(logx) - poly.derivative(logx)
        e_left = self.cum_left[sel] - left * poly(np.log(left))
        E = e_left[:, None] + half[:, None] * (g @ NODE_ANTIDERIVATIVE.T)
        E_err = self.cum_err_left[sel]
        return x, half, E, E_err


_GRID_LOCK = threading.Lock()
_GRIDS: dict = {}


def moment_grid(k: int, x_max: float, tol: Optional[float] = None, tau: float = 0.0) -> MomentGrid:
    """Shared grid reaching at least ``x_max`` (memoized per process).

    An existing grid is reused when it extends at least as far, is at least as
    accurate and resolves at least the requested twist ``tau``.  ``tol``
    defaults to a relative 1e-11 of a crude size estimate of the moment.
    """
    _check_k(k)
    x_max = lattice_point_at_or_above(x_max)
    if tol is None:
        tol = 1e-11 * max(1.0, x_max) * max(1.0, math.log(max(x_max, 3.0))) ** (k * k)
    with _GRID_LOCK:
        for (kk, xm, tl, tu), grid in _GRIDS.items():
            if kk == k and xm >= x_max and tl <= tol and tu >= tau:
                return grid
    grid = MomentGrid(k, x_max, tol, tau)
    with _GRID_LOCK:
        _GRIDS[(k, grid.x_max, tol, tau)] = grid
    return grid


def moment_integral(k: int, T: float, tol: float = 1e-8) -> MomentSample:
    """``I_k(T) = int_0^T |zeta(1/2 + i t)|^(2k) dt``.

    Served from a shared grid when one covers ``T`` at the requested
    accuracy; otherwise integrated directly on the same panel lattice.
    """
    _check_k(k)
    if T < 0:
        raise DomainError("T must be non-negative")
    if T == 0:
        return MomentSample(0.0, 0.0, 0.0)
    with _GRID_LOCK:
        grids = [g for (kk, xm, tl, _), g in _GRIDS.items() if kk == k and xm >= T and tl <= tol]
    if grids:
        val, err = grids[0].integral_to(T)
        return MomentSample(float(T), max(float(val[0]), 0.0), float(err[0]))
    res = integrate_adaptive(ZetaPower(k), 0.0, float(T), tol, freq=zeta_frequency)
    return MomentSample(float(T), max(res.value, 0.0), res.err_est)


def moment_samples(k: int, Ts: Sequence[float], tol: Optional[float] = None) -> list[MomentSample]:
    """``I_k`` at many heights from one shared grid."""
    Ts = np.asarray(Ts, dtype=float)
    grid = moment_grid(k, float(Ts.max()), tol)
    vals, errs = grid.integral_to(Ts)
    return [MomentSample(float(t), max(float(v), 0.0), float(e)) for t, v, e in zip(Ts, vals, errs)]


def main_term(poly: MomentPolynomial, T):
    """``T * P(log T)``."""
    T_arr = np.asarray(T, dtype=float)
    if np.any(T_arr <= 0):
        raise DomainError("T must be positive")
    out = T_arr * poly(np.log(T_arr))
    return float(out) if out.ndim == 0 else out


def error_term(k: int, T: float, poly: MomentPolynomial, tol: float = 1e-8) -> float:
    """``E_k(T) = I_k(T) - T P(log T)``."""
    if T <= 0:
        raise DomainError("T must be positive")
    if poly.k != k:
        raise ValueError("polynomial belongs to a different k")
    return moment_integral(k, T, tol).value - main_term(poly, T)


def fit_main_coeffs(k: int, samples: Sequence[MomentSample],
                    pinned: Optional[Mapping[int, float]] = None) -> MomentPolynomial:
    """Least-squares fit of ``I_k(T) / T`` by a polynomial in ``log T``.

    Coefficients listed in ``pinned`` (degree -> value) are held fixed; for
    k = 2 the leading coefficient is always pinned to ``1/(2 pi^2)``.

    Raises
    ------
    Underdetermined
        Fewer than (free coefficients + 2) samples, or repeated heights.
    SingularFit
        Rank-deficient design matrix.

    Examples
    --------
    >>> Ts = [10.0, 100.0, 1000.0, 1e4]
    >>> s = [MomentSample(T, T * (math.log(T) + 3), 0.0) for T in Ts]
    >>> [round(c, 10) for c in fit_main_coeffs(1, s).coeffs]
    [3.0, 1.0]
    """
    pinned = dict(pinned or {})
    if k == 2:
        pinned.setdefault(4, A4_FOURTH_MOMENT)
    degree = k * k
    free = [j for j in range(degree + 1) if j not in pinned]
    Ts = np.array([s.T for s in samples], dtype=float)
    if len(samples) < len(free) + 2:
        raise Underdetermined(f"{len(samples)} samples for {len(free)} free coefficients")
    if np.unique(Ts).size != Ts.size:
        raise Underdetermined("sample heights must be distinct")
    if np.any(Ts <= 0):
        raise DomainError("sample heights must be positive")
    y = np.log(Ts)
    rhs = np.array([s.value for s in samples]) / Ts
    for j, a in pinned.items():
        rhs = rhs - a * y ** j
    coeffs = np.zeros(degree + 1)
    for j, a in pinned.items():
        coeffs[j] = a
    if free:
        design = np.vander(y, degree + 1, increasing=True)[:, free]
        scale = np.linalg.norm(design, axis=0)
        scaled = design / scale
        if np.linalg.matrix_rank(scaled, tol=1e-12 * math.sqrt(len(samples))) < len(free):
            raise SingularFit("design matrix is rank deficient")
        sol, *_ = np.linalg.lstsq(scaled, rhs, rcond=None)
        coeffs[free] = sol / scale
    prov = tuple("pinned" if j in pinned else "fitted" for j in range(degree + 1))
    return MomentPolynomial(k, tuple(float(c) for c in coeffs), prov)


@lru_cache(maxsize=None)
def default_polynomial(k: int, n_samples: int = 240) -> MomentPolynomial:
    """Pinned polynomial for k = 1, fitted (leading coefficient pinned) for k = 2.

    The k = 2 fit uses ``n_samples`` log-spaced heights over ``FIT_RANGE_K2``.
    """
    if k == 1:
        return pinned_k1_polynomial()
    if k != 2:
        raise DomainError("default main-term polynomials exist for k = 1 and 2 only")
    Ts = np.geomspace(*FIT_RANGE_K2, n_samples)
    return fit_main_coeffs(2, moment_samples(2, Ts), {4: A4_FOURTH_MOMENT})


def mean_square_error_term(k: int, T: float, poly: MomentPolynomial, tol: Optional[float] = None) -> float:
    """``int_1^T E_k(t)^2 dt`` by Gauss-Kronrod over the panels of a moment grid."""
    if k not in (1, 2):
        raise DomainError("mean-square probes are defined for k = 1 and 2")
    if T < 10:
        raise DomainError("T must be at least 10")
    grid = moment_grid(k, T, tol)
    x, half, E, _ = grid.error_at_nodes(poly, 1.0)
    lefts = grid.panels.left[grid.panels.left >= 1.0 - 1e-12]
    rights = grid.panels.right[grid.panels.left >= 1.0 - 1e-12]
    full = rights <= T
    total = float(((E[full] ** 2) @ KRONROD_WEIGHTS * half[full]).sum())
    if np.any(~full):
        i = int(np.nonzero(~full)[0][0])
        a = lefts[i]
        if T > a:
            h = 0.5 * (T - a)
            xs = 0.5 * (a + T) + h * NODES
            g = grid.integrand(xs[None, :])[0] - poly(np.log(xs)) - poly.derivative(np.log(xs))
            e0 = grid.cum_left[grid.panels.left >= 1.0 - 1e-12][i] - a * poly(math.log(a))
            e_nodes = e0 + h * (NODE_ANTIDERIVATIVE @ g)
            total += float((e_nodes ** 2) @ KRONROD_WEIGHTS * h)
    return max(total, 0.0)


def max_relative_error(k: int, t_lo: float, t_hi: float, poly: MomentPolynomial,
                       tol: Optional[float] = None) -> float:
    """``max |E_k(t)| / t`` over the grid nodes in ``[t_lo, t_hi]``.

    A single value ``E_k(T)/T`` oscillates in sign; the windowed maximum is
    the quantity whose decay tracks ``E_k(T) = o(T)``.
    """
    if not 1.0 <= t_lo < t_hi:
        raise DomainError("need 1 <= t_lo < t_hi")
    grid = moment_grid(k, t_hi, tol)
    x, _, E, _ = grid.error_at_nodes(poly, 1.0)
    m = (x >= t_lo) & (x <= t_hi)
    return float(np.max(np.abs(E[m]) / x[m]))
