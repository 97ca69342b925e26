"""Spectral sums over user-supplied Maass-form data.

Tables hold pairs ``(kappa_j, w_j)`` with ``w_j = alpha_j H_j(1/2)^m``
pre-multiplied, tagged by the power ``m``.  The data format is plain text::

    SPEC m=3
    # comment
    9.5 0.25
    12.2 0.11

Every sum is the correctly rounded (``math.fsum``) total of per-entry terms,
and the terms are exposed, so splitting a table splits the terms exactly.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
from scipy import special

from .errors import BadParams, DomainError, ParseError, PoleError, ValidationError, WrongWeightPower
from .moments import ZetaPower, zeta_frequency
from .quadrature import integrate_adaptive
from .records import TransformValue

_HEADER = re.compile(r"^SPEC\s+m\s*=\s*([0-9]+)\s*$")


@dataclass(frozen=True)
class SpectralEntry:
    kappa: float
    weight: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ValidationError(f"kappa must be positive and finite, got {self.kappa}")
        if not math.isfinite(self.weight):
            raise ValidationError(f"weight must be finite, got {self.weight}")


@dataclass(frozen=True)
class SpectralTable:
    """Entries sorted by strictly increasing ``kappa``; ``m`` is the power of ``H_j(1/2)`` in the weights."""

    entries: tuple
    m: int

    def __post_init__(self) -> None:
        if self.m not in (1, 2, 3):
            raise ValidationError("m must be 1, 2 or 3")
        ks = [e.kappa for e in self.entries]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValidationError("kappa values must be strictly increasing")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]], m: int) -> "SpectralTable":
        entries = sorted((SpectralEntry(float(k), float(w)) for k, w in pairs), key=lambda e: e.kappa)
        return cls(tuple(entries), m)

    @property
    def kappa(self) -> np.ndarray:
        return np.array([e.kappa for e in self.entries], dtype=float)

    @property
    def weight(self) -> np.ndarray:
        return np.array([e.weight for e in self.entries], dtype=float)

    def __len__(self) -> int:
        return len(self.entries)

    def split(self, index: int) -> tuple["SpectralTable", "SpectralTable"]:
        """The entries before and from ``index``, as two tables."""
        return SpectralTable(self.entries[:index], self.m), SpectralTable(self.entries[index:], self.m)


def parse_spectral_text(text: str) -> SpectralTable:
    """Parse the text format described in the module docstring.

    Raises
    ------
    ParseError
        Missing or malformed header, or a line that is not two decimals.
    ValidationError
        Non-positive ``kappa``, non-finite weight or repeated ``kappa``.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    body = [(i + 1, ln) for i, ln in enumerate(lines) if ln and not ln.startswith("#")]
    if not body:
        raise ParseError("missing 'SPEC m=<1|2|3>' header")
    lineno, header = body[0]
    match = _HEADER.match(header)
    if not match:
        raise ParseError(f"line {lineno}: expected 'SPEC m=<1|2|3>', got {header!r}")
    m = int(match.group(1))
    if m not in (1, 2, 3):
        raise ParseError(f"line {lineno}: m must be 1, 2 or 3")
    pairs = []
    for lineno, ln in body[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected '<kappa> <weight>', got {ln!r}")
        try:
            kappa, weight = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        pairs.append((kappa, weight))
    return SpectralTable.from_pairs(pairs, m)


def load_spectral_data(path: Union[str, Path]) -> SpectralTable:
    """Read a spectral table from a file."""
    return parse_spectral_text(Path(path).read_text())


def synthetic_table() -> SpectralTable:
    """The bundled synthetic fixture (placeholder values, m = 3)."""
    text = resources.files("zeta_transforms").joinpath("data/synthetic_m3.spec").read_text()
    return parse_spectral_text(text)


def _require_m(table: SpectralTable, m: int) -> None:
    if table.m != m:
        raise WrongWeightPower(f"table weights carry H_j^{table.m}, this sum needs H_j^{m}")


# ---------------------------------------------------------------------------
# Gamma-factor kernel
# ---------------------------------------------------------------------------

def log_big_r(y):
    """``log R(y)`` for ``R(y) = sqrt(pi/2) (2^(-iy) G(1/4 - iy/2) / G(1/4 + iy/2))^3 G(2iy) cosh(pi y)``.

    The imaginary part is a branch of the argument, adequate for exponentiation.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y == 0):
        raise PoleError("R has a pole at y = 0 (from Gamma(2iy))")
    ay = np.abs(y)
    ratio = -1j * y * math.log(2) + special.loggamma(0.25 - 0.5j * y) - special.loggamma(0.25 + 0.5j * y)
    log_cosh = math.pi * ay + np.log1p(np.exp(-2 * math.pi * ay)) - math.log(2)
    out = 0.5 * math.log(math.pi / 2) + 3 * ratio + special.loggamma(2j * y) + log_cosh
    return out if out.ndim else complex(out)


def big_r(y):
    """``R(y)``, combined in log space (``cosh(pi y)`` and ``Gamma(2iy)`` cancel exponentially)."""
    out = np.exp(log_big_r(y))
    return out if np.ndim(out) else complex(out)


# ---------------------------------------------------------------------------
# Sums
# ---------------------------------------------------------------------------

def spectral_l2_terms(s: complex, table: SpectralTable) -> np.ndarray:
    """Per-entry terms ``s^(-1/2) w (s^(-ik) R(k) G(1/2+ik) + s^(ik) R(-k) G(1/2-ik))``."""
    s = complex(s)
    if s == 0 or abs(s) > 1:
        raise DomainError("need 0 < |s| <= 1")
    if abs(math.atan2(s.imag, s.real)) >= math.pi / 2:
        raise DomainError("need |arg s| < pi/2")
    _require_m(table, 3)
    if not len(table):
        return np.zeros(0, dtype=complex)
    k, w = table.kappa, table.weight
    log_s = np.log(s)
    plus = np.exp(-1j * k * log_s + log_big_r(k) + special.loggamma(0.5 + 1j * k))
    minus = np.exp(1j * k * log_s + log_big_r(-k) + special.loggamma(0.5 - 1j * k))
    return s ** -0.5 * w * (plus + minus)


def _fsum_complex(terms: np.ndarray) -> complex:
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def spectral_sum_l2(s: complex, table: SpectralTable) -> complex:
    """Spectral term of the Laplace transform ``L_2`` truncated to the table.

    Raises
    ------
    DomainError
        Unless ``0 < |s| <= 1`` and ``|arg s| < pi/2``.
    WrongWeightPower
        Unless ``table.m == 3``.
    """
    return _fsum_complex(spectral_l2_terms(s, table))


def i_tg_direct(T: float, G: float, tol: float = 1e-8) -> TransformValue:
    """``(1/(sqrt(pi) G)) int |zeta(1/2 + iT + iu)|^4 e^(-(u/G)^2) du``.

    Cut at ``|u| = G sqrt(log(1/tol) + 4)``; the Gaussian tail beyond is
    bounded with ``|zeta(1/2+it)|^4 <= 41 |t|`` and added to ``err_est``.
    """
    if T <= 0 or G <= 0:
        raise DomainError("T and G must be positive")
    U = G * math.sqrt(math.log(1.0 / tol) + 4.0)
    f4 = ZetaPower(2)
    norm = 1.0 / (math.sqrt(math.pi) * G)

    def g(u):
        t = T + np.asarray(u)
        return f4(t) * np.exp(-(np.asarray(u) / G) ** 2) * norm

    res = integrate_adaptive(g, -U, U, tol, freq=lambda u: zeta_frequency(np.abs(T + np.asarray(u))))
    # 41 |t| >= |zeta|^4 for |t| >= 2 pi, and 41 (T + |u|) <= 41 (T + 1) (1 + |u|) for the tail
    tail = 41.0 * (T + 1.0) * norm * (G * math.sqrt(math.pi) * special.erfc(U / G) + G * G * math.exp(-(U / G) ** 2))
    return TransformValue(res.value, res.err_est + tail)


def _check_tg_window(T: float, G: float, D: float) -> None:
    if T <= math.e:
        raise DomainError("T must exceed e")
    lo, hi = math.sqrt(T) * math.log(T) ** -D, T / math.log(T)
    if not lo <= G <= hi:
        raise DomainError(f"G = {G:g} outside the validity window [{lo:.4g}, {hi:.4g}]")


def i_tg_terms(T: float, G: float, table: SpectralTable, D: float = 1.0) -> np.ndarray:
    """Per-entry terms ``(pi / sqrt(2T)) w k^(-1/2) sin(k log(k/(4eT))) exp(-(G k / T)^2 / 4)``."""
    _check_tg_window(T, G, D)
    _require_m(table, 3)
    k, w = table.kappa, table.weight
    return (math.pi / math.sqrt(2 * T)) * w * k ** -0.5 * np.sin(k * np.log(k / (4 * math.e * T))) \
        * np.exp(-0.25 * (G * k / T) ** 2)


def i_tg_spectral(T: float, G: float, table: SpectralTable, D: float = 1.0) -> float:
    """Spectral main term of the Gaussian-smoothed fourth moment ``I(T, G)``.

    Valid for ``sqrt(T) log(T)^-D <= G <= T / log T``; the remainder term is
    not computed.
    """
    return math.fsum(i_tg_terms(T, G, table, D))


def s_m_terms(m: int, K: float, K_prime: float, t: float, table: SpectralTable) -> np.ndarray:
    """Per-entry terms ``w cos(k log(4et/k))`` over ``K < k <= K'`` (zeros outside)."""
    if m not in (1, 2, 3):
        raise BadParams("m must be 1, 2 or 3")
    if not (1 <= K < K_prime <= 2 * K):
        raise BadParams("need 1 <= K < K' <= 2K")
    if t <= 0:
        raise DomainError("t must be positive")
    _require_m(table, m)
    k, w = table.kappa, table.weight
    inside = (k > K) & (k <= K_prime)
    out = np.zeros(k.size)
    out[inside] = w[inside] * np.cos(k[inside] * np.log(4 * math.e * t / k[inside]))
    return out


def s_m_sum(m: int, K: float, K_prime: float, t: float, table: SpectralTable) -> float:
    """``S_m(K; K', t) = sum_{K < k_j <= K'} w_j cos(k_j log(4et/k_j))``."""
    return math.fsum(s_m_terms(m, K, K_prime, t, table))


def _s_t_delta_all(T: float, Delta: float, table: SpectralTable) -> tuple[np.ndarray, np.ndarray]:
    if T <= 1:
        raise DomainError("T must exceed 1")
    if not math.sqrt(T) <= Delta <= T ** 0.99:
        raise DomainError(f"Delta must lie in [T^(1/2), T^0.99] = [{math.sqrt(T):.4g}, {T ** 0.99:.4g}]")
    _require_m(table, 3)
    k, w = table.kappa, table.weight
    terms = math.pi * math.sqrt(0.5 * T) * w * k ** -1.5 * np.cos(k * np.log(k / (4 * math.e * T))) \
        * np.exp(-0.25 * (Delta * k / T) ** 2)
    keep = k <= (T / Delta) * math.log(T)
    return terms, keep


def s_t_delta_terms(T: float, Delta: float, table: SpectralTable) -> np.ndarray:
    """Per-entry terms of ``S(T, Delta)``; entries beyond the cut ``k > (T/Delta) log T`` give 0."""
    terms, keep = _s_t_delta_all(T, Delta, table)
    return np.where(keep, terms, 0.0)


def s_t_delta_excluded(T: float, Delta: float, table: SpectralTable) -> float:
    """Sum of absolute values of the terms dropped by the cut (a bound on their contribution)."""
    terms, keep = _s_t_delta_all(T, Delta, table)
    return math.fsum(np.abs(terms[~keep]))


def s_t_delta(T: float, Delta: float, table: SpectralTable, tol: float = 1e-8) -> float:
    """``S(T, Delta)`` truncated at ``k <= (T/Delta) log T``.

    A ``RuntimeWarning`` is issued when the excluded table entries could
    contribute more than ``tol``; :func:`s_t_delta_excluded` gives the amount.

    Raises
    ------
    DomainError
        Unless ``sqrt(T) <= Delta <= T^0.99``.
    """
    value = math.fsum(s_t_delta_terms(T, Delta, table))
    excluded = s_t_delta_excluded(T, Delta, table)
    if excluded > tol:
        warnings.warn(f"entries beyond the cut contribute up to {excluded:.3g}", RuntimeWarning, stacklevel=2)
    return value


def partial_weight_sums(table: SpectralTable, Ks: Sequence[float]) -> np.ndarray:
    """``sum_{k_j <= K} w_j / K^2`` for each ``K``."""
    k, w = table.kappa, table.weight
    return np.array([math.fsum(w[k <= K]) / K ** 2 for K in Ks])
