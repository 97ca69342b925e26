"""Vectorized adaptive Gauss-Kronrod quadrature with honest error estimates.

Integrands are called with 2-D node arrays (one row per panel) and must be
elementwise.  Panel edges are drawn from a deterministic global lattice so
that repeated integrals over overlapping ranges evaluate the integrand at
bitwise identical nodes, which lets memoizing integrands share work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BadGrowthBound, DivergentTail, NoConvergence

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1::2] = np.concatenate([_WG[:-1], _WG[::-1]])

_EPS = np.finfo(float).eps
DEFAULT_MAX_PANELS = 1_000_000


@dataclass(frozen=True)
class QuadResult:
    """Integral estimate.

    Attributes
    ----------
    value : float or complex
    err_est : float
        Estimated absolute error, including any truncation bound.
    panels_used : int
    tail_bound : float
        Part of ``err_est`` that bounds a discarded tail (0 for finite ranges).
    truncation : float or None
        Point where an improper integral was cut off.
    """

    value: complex
    err_est: float
    panels_used: int
    tail_bound: float = 0.0
    truncation: Optional[float] = None


@dataclass(frozen=True)
class ContourSpec:
    """Vertical segment ``Re w = c``, ``t_min <= Im w <= t_max``."""

    c: float
    t_min: float
    t_max: float
    max_step: float = 1.0

    def __post_init__(self) -> None:
        if not self.t_min < self.t_max:
            raise ValueError("t_min must be below t_max")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")


FreqHint = Callable[[np.ndarray], np.ndarray]


def panel_nodes(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Node matrix (one row per panel) and half-widths for consecutive edges."""
    left, right = edges[:-1], edges[1:]
    mid = 0.5 * (left + right)
    half = 0.5 * (right - left)
    return mid[:, None] + half[:, None] * NODES[None, :], half


def _block_bounds(a: float, b: float) -> list[tuple[float, float]]:
    # dyadic blocks ..., [-2,-1], [-1,0], [0,1], [1,2], [2,4], ... clipped to [a, b]
    cuts = {0.0}
    top = max(abs(a), abs(b))
    p = 1.0
    while p < top:
        cuts.add(p)
        cuts.add(-p)
        p *= 2.0
    cuts = sorted(c for c in cuts if a < c < b)
    pts = [a] + cuts + [b]
    return list(zip(pts[:-1], pts[1:]))


def lattice_edges(a: float, b: float, freq: Optional[FreqHint] = None,
                  max_step: Optional[float] = None) -> np.ndarray:
    """Deterministic initial panel edges on ``[a, b]``.

    Each dyadic block is split uniformly with spacing at most
    ``min(max_step, pi / omega)``, where ``omega`` is the larger of the
    frequency hint at the two block ends.  Edges depend only on the block,
    not on ``a`` or ``b``, except for the clipped end blocks.
    """
    if freq is None and max_step is None:
        return np.array([a, b], dtype=float)
    out = [np.array([a])]
    for lo, hi in _block_bounds(a, b):
        full_lo, full_hi = _full_block(lo, hi)
        h = math.inf if max_step is None else max_step
        if freq is not None:
            w = float(np.max(freq(np.array([full_lo, full_hi]))))
            if w > 0:
                h = min(h, math.pi / w)
        n = max(1, int(math.ceil((full_hi - full_lo) / h - 1e-9)))
        grid = full_lo + (full_hi - full_lo) * np.arange(1, n + 1) / n
        grid[-1] = full_hi
        inner = grid[(grid > lo) & (grid < hi)]
        out.append(inner)
        out.append(np.array([hi]))
    edges = np.concatenate(out)
    return edges


def _full_block(lo: float, hi: float) -> tuple[float, float]:
    """The unclipped dyadic block containing ``[lo, hi]``."""
    if lo >= 0:
        if hi <= 1.0:
            return 0.0, 1.0
        top = 2.0 ** math.ceil(math.log2(hi) - 1e-15)
        return top / 2.0, top
    flo, fhi = _full_block(-hi, -lo)
    return -fhi, -flo


def lattice_point_at_or_above(x: float) -> float:
    """Smallest power of two (or 1) that is >= x, for x > 0."""
    if x <= 1.0:
        return 1.0
    return 2.0 ** math.ceil(math.log2(x) - 1e-15)


@dataclass(frozen=True)
class PanelSet:
    """Accepted panels of an adaptive integration, sorted by left edge.

    ``fx`` holds the integrand at the 15 nodes of each panel when requested.
    """

    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    err: np.ndarray
    fx: Optional[np.ndarray] = None

    @property
    def half(self) -> np.ndarray:
        return 0.5 * (self.right - self.left)

    @property
    def nodes(self) -> np.ndarray:
        mid = 0.5 * (self.left + self.right)
        return mid[:, None] + self.half[:, None] * NODES[None, :]


def _grading_depth(x: float, width: float) -> int:
    # halvings of width that keep every Kronrod node of the end panel distinct from x
    floor = 4096.0 * _EPS * abs(x) if x != 0 else 1e-300
    return int(min(1000, max(1, math.floor(math.log2(width / floor)))))


def adaptive_panels(f: Callable, a: float, b: float, tol: float, *,
                    freq: Optional[FreqHint] = None, max_step: Optional[float] = None,
                    singular: Sequence[str] = (), max_panels: int = DEFAULT_MAX_PANELS,
                    edges: Optional[np.ndarray] = None, keep_values: bool = False) -> PanelSet:
    """Panel-level output of :func:`integrate_adaptive` (same arguments)."""
    if not a < b:
        raise ValueError("integration requires a < b")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if edges is None:
        edges = lattice_edges(a, b, freq, max_step)
    edges = np.asarray(edges, dtype=float)
    if "left" in singular:
        n = _grading_depth(a, edges[1] - a)
        geo = a + (edges[1] - a) * 2.0 ** -np.arange(n, 0, -1)
        edges = np.concatenate([[a], geo, edges[1:]])
    if "right" in singular:
        n = _grading_depth(b, b - edges[-2])
        geo = b - (b - edges[-2]) * 2.0 ** -np.arange(1, n + 1)
        edges = np.concatenate([edges[:-1], geo, [b]])
    length = b - a
    parts: list[tuple] = []
    left = edges[:-1]
    right = edges[1:]
    used = left.size
    settled = 0.0
    while left.size:
        if used > max_panels:
            raise NoConvergence(f"panel budget of {max_panels} exhausted")
        kron, err, limited, fx = _eval_pairs(f, left, right)
        share = tol * (right - left) / length
        tiny = (right - left) <= 1e-13 * max(abs(a), abs(b), length)
        ok = (err <= share) | limited | tiny
        settled += float(err[ok].sum())
        if settled + float(err[~ok].sum()) <= tol:
            ok[:] = True
        parts.append((left[ok], right[ok], kron[ok], err[ok], fx[ok] if keep_values else None))
        bad = ~ok
        if not np.any(bad):
            break
        lb, rb = left[bad], right[bad]
        mid = 0.5 * (lb + rb)
        left = np.concatenate([lb, mid])
        right = np.concatenate([mid, rb])
        used += int(bad.sum())
    lefts = np.concatenate([p[0] for p in parts])
    order = np.argsort(lefts, kind="stable")
    fx_all = np.concatenate([p[4] for p in parts])[order] if keep_values else None
    return PanelSet(lefts[order], np.concatenate([p[1] for p in parts])[order],
                    np.concatenate([p[2] for p in parts])[order],
                    np.concatenate([p[3] for p in parts])[order], fx_all)


def integrate_adaptive(f: Callable, a: float, b: float, tol: float, *,
                       freq: Optional[FreqHint] = None, max_step: Optional[float] = None,
                       singular: Sequence[str] = (), max_panels: int = DEFAULT_MAX_PANELS,
                       edges: Optional[np.ndarray] = None) -> QuadResult:
    """Adaptive 15/7-point Gauss-Kronrod integration of ``f`` over ``[a, b]``.

    Panels whose error estimate exceeds their length share of ``tol`` are
    bisected until the summed estimate is below ``tol``.  The estimate is the Kronrod-Gauss
    difference rescaled as in QUADPACK, floored at the roundoff level.
    Panel values are summed in left-to-right order, so the result does not
    depend on evaluation batching.

    Parameters
    ----------
    f : callable
        Elementwise function of an ndarray.
    freq : callable, optional
        Local angular frequency hint; initial panels are no longer than
        ``pi / freq``.
    max_step : float, optional
        Hard cap on initial panel length.
    singular : sequence of {"left", "right"}
        Endpoints with integrable singularities; the adjacent panel is split
        geometrically towards the endpoint.
    edges : ndarray, optional
        Explicit initial edges (overrides the lattice).

    Raises
    ------
    NoConvergence
        When more than ``max_panels`` panels would be needed.

    Examples
    --------
    >>> round(integrate_adaptive(np.sin, 0.0, math.pi, 1e-12).value, 12)
    2.0
    """
    ps = adaptive_panels(f, a, b, tol, freq=freq, max_step=max_step, singular=singular,
                         max_panels=max_panels, edges=edges)
    value = ps.value.sum()
    value = complex(value) if np.iscomplexobj(value) else float(value)
    return QuadResult(value, float(ps.err.sum()), int(ps.left.size))


def _eval_pairs(f, left: np.ndarray, right: np.ndarray):
    mid = 0.5 * (left + right)
    half = 0.5 * (right - left)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    fx = np.asarray(f(x))
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    if not np.all(np.isfinite(fx)):
        raise NoConvergence("integrand returned a non-finite value")
    kron = (fx @ KRONROD_WEIGHTS) * half
    gauss = (fx @ GAUSS_WEIGHTS) * half
    resabs = (np.abs(fx) @ KRONROD_WEIGHTS) * half
    mean = (fx @ KRONROD_WEIGHTS) * 0.5
    resasc = (np.abs(fx - mean[:, None]) @ KRONROD_WEIGHTS) * half
    err = np.abs(kron - gauss)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc > 0) & (err > 0), scaled, err)
    floor = 50.0 * _EPS * resabs
    limited = floor >= err
    return kron, np.maximum(err, floor), limited, fx


def _antiderivative_matrix() -> np.ndarray:
    # S[j, m] = int_{-1}^{xi_j} l_m, with l_m the Lagrange basis on the 15 nodes
    from numpy.polynomial import legendre as leg

    n = NODES.size
    vander = leg.legvander(NODES, n - 1)
    anti = np.empty((n, n))
    for deg in range(n):
        c = np.zeros(n)
        c[deg] = 1.0
        ic = leg.legint(c, lbnd=-1.0)
        anti[:, deg] = leg.legval(NODES, ic)
    return anti @ np.linalg.inv(vander)


NODE_ANTIDERIVATIVE = _antiderivative_matrix()
"""Maps integrand values at the nodes of a panel to its running integral from
the left edge, in units of the half-width."""


def _sample_constant(f: Callable, lo: float, hi: float, growth: float) -> float:
    """Twice the largest ``|f(x)| / x^growth`` over 8 log-spaced points in [lo, hi]."""
    xs = np.geomspace(max(lo, 1e-300), hi, 8)
    vals = np.abs(np.asarray(f(xs[None, :]), dtype=complex)).reshape(-1) / xs ** growth
    return 2.0 * float(np.max(vals))


def exp_tail_bound(const: float, growth: float, sigma: float, x: float) -> float:
    """Bound on ``int_x^inf const * t^growth * exp(-sigma t) dt``.

    Uses ``t^g e^{-sigma t} <= x^g e^{-sigma x} e^{-(sigma - g/x)(t - x)}`` for
    ``t >= x > g / sigma``; returns ``inf`` when ``x`` is too small for that.
    """
    rate = sigma - max(growth, 0.0) / x
    if rate <= 0:
        return math.inf
    log_b = math.log(const) + growth * math.log(x) - sigma * x - math.log(rate) if const > 0 else -math.inf
    return math.exp(log_b) if log_b < 700 else math.inf


def integrate_exp_tail(f: Callable, a: float, sigma: complex, tol: float, *, growth: float = 0.0,
                       growth_const: Optional[float] = None, freq: Optional[FreqHint] = None,
                       max_step: Optional[float] = None, x_cap: float = 1e8,
                       max_panels: int = DEFAULT_MAX_PANELS) -> QuadResult:
    """``int_a^inf f(x) exp(-sigma x) dx`` for ``Re sigma > 0``.

    The range is cut at the first lattice point ``X`` where the tail bound
    ``C X^g e^{-Re(sigma) X} / (Re(sigma) - g/X)`` falls below ``tol/2``, and
    ``[a, X]`` is integrated adaptively to ``tol/2``.  ``C`` is
    ``growth_const`` when given, else estimated by sampling ``|f|/x^g``.

    Raises
    ------
    BadGrowthBound
        If ``Re sigma <= 0`` or no admissible cut-off exists below ``x_cap``.
    """
    sigma = complex(sigma)
    sr = sigma.real
    if not sr > 0:
        raise BadGrowthBound("exponential damping needs Re sigma > 0")
    if not math.isfinite(growth):
        raise BadGrowthBound("growth exponent must be finite")
    x = lattice_point_at_or_above(max(a + 1.0, 1.0, 2.0 * max(growth, 0.0) / sr))
    while True:
        c_here = growth_const if growth_const is not None else _sample_constant(f, max(a, 1.0), x, growth)
        bound = exp_tail_bound(c_here, growth, sr, x)
        if bound <= tol / 2:
            break
        if x >= x_cap:
            raise BadGrowthBound(f"tail bound {bound:.3g} still above tol/2 at the cap {x_cap:g}")
        x *= 2.0
    if sigma.imag == 0:
        g = lambda t: f(t) * np.exp(-sr * t)
        w_hint = freq
    else:
        g = lambda t: f(t) * np.exp(-sigma * t)
        osc = abs(sigma.imag)
        w_hint = (lambda t: np.maximum(freq(t), osc)) if freq is not None else (lambda t: np.full(np.shape(t), osc))
    res = integrate_adaptive(g, a, x, tol / 2, freq=w_hint, max_step=max_step, max_panels=max_panels)
    return QuadResult(res.value, res.err_est + bound, res.panels_used, bound, x)


def algebraic_tail_bound(const: float, growth: float, sigma: float, x: float) -> float:
    """Bound on ``int_x^inf const * t^(growth - sigma) dt`` (needs sigma - growth > 1)."""
    return const * x ** (growth + 1.0 - sigma) / (sigma - growth - 1.0)


def integrate_algebraic_tail(f: Callable, a: float, sigma: complex, growth: float, tol: float, *,
                             tail_bound: Optional[Callable[[float], float]] = None,
                             freq: Optional[FreqHint] = None, max_step: Optional[float] = None,
                             x_cap: float = 1e6, max_panels: int = DEFAULT_MAX_PANELS) -> QuadResult:
    """``int_a^inf f(x) x^(-sigma) dx`` for ``a >= 1`` and ``Re sigma - growth > 1``.

    The cut-off ``X`` is the first lattice point where the tail bound drops
    below ``tol/2``; if that never happens below ``x_cap`` the integral stops
    at ``x_cap`` and the (large) bound is carried in ``err_est``.  By default
    the bound is ``C X^(growth+1-sigma) / (sigma-growth-1)`` with ``C`` twice
    the largest ``|f(x)|/x^growth`` over 8 log-spaced samples in ``[X, 8X]``;
    ``tail_bound`` replaces it with a caller-supplied function of ``X``.

    Raises
    ------
    DivergentTail
        When ``Re sigma - growth <= 1``.
    """
    sigma = complex(sigma)
    sr = sigma.real
    if a < 1:
        raise ValueError("integrate_algebraic_tail requires a >= 1")
    if not sr - growth > 1:
        raise DivergentTail(f"Re sigma - growth = {sr - growth:g} <= 1: the tail diverges")
    x = lattice_point_at_or_above(2.0 * a)
    while True:
        if tail_bound is not None:
            bound = float(tail_bound(x))
        else:
            bound = algebraic_tail_bound(_sample_constant(f, x, 8.0 * x, growth), growth, sr, x)
        if bound <= tol / 2 or x >= x_cap:
            break
        x *= 2.0
    if sigma.imag == 0:
        g = lambda t: f(t) * t ** (-sr)
        w_hint = freq
    else:
        g = lambda t: f(t) * np.exp(-sigma * np.log(t))
        tau = abs(sigma.imag)
        base = freq if freq is not None else (lambda t: np.zeros(np.shape(t)))
        w_hint = lambda t: np.maximum(base(t), tau / np.asarray(t))
    res = integrate_adaptive(g, a, x, tol / 2, freq=w_hint, max_step=max_step, max_panels=max_panels)
    return QuadResult(res.value, res.err_est + bound, res.panels_used, bound, x)


def contour_line_integral(F: Callable, spec: ContourSpec, tol: float, *,
                          max_panels: int = DEFAULT_MAX_PANELS) -> QuadResult:
    """``(1 / 2 pi i) int F(w) dw`` along ``w = c + i t``, ``t_min <= t <= t_max``.

    Equivalent to ``(1 / 2 pi) int F(c + i t) dt``.  Only the quadrature
    error is estimated; tails outside the window are the caller's concern.

    Examples
    --------
    >>> from scipy.special import gamma
    >>> r = contour_line_integral(lambda w: gamma(w), ContourSpec(2.0, -40.0, 40.0), 1e-10)
    >>> abs(r.value - math.exp(-1)) < 1e-8
    True
    """
    g = lambda t: F(spec.c + 1j * t)
    res = integrate_adaptive(g, spec.t_min, spec.t_max, 2.0 * math.pi * tol,
                             max_step=spec.max_step, max_panels=max_panels)
    return QuadResult(res.value / (2.0 * math.pi), res.err_est / (2.0 * math.pi), res.panels_used)
