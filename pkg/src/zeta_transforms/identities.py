"""Named numerical checks, each returning an :class:`IdentityReport`.

The registry maps a stable name to a builder taking keyword overrides; the
command line and the acceptance suite both go through it.
"""

from __future__ import annotations

import math
from typing import Callable, Dict

import numpy as np

from .laplace import atkinson_l1, divisor_table, kober_main, laplace_bridge_rhs, laplace_transform
from .mellin import (A5_POLE, leading_pole_identity, exp_smoothed_moment, mellin_transform,
                     recurrence_rhs, square_identity_general, square_identity_report, z1_continued)
from .moments import A4_FOURTH_MOMENT
from .quadrature import ContourSpec
from .records import IdentityReport
from .zeta_core import EULER_GAMMA, LOG_2PI

KOBER_SIGMAS = (0.1, 0.05, 0.02, 0.01)
LAMBDA1_CONSTANT = 5.0


def kober_residuals(sigmas=KOBER_SIGMAS, tol: float = 1e-7) -> np.ndarray:
    """``L_1(s) - kober_main(s)`` for each ``s``."""
    out = []
    for sg in sigmas:
        lv = laplace_transform(1, sg, tol * max(1.0, 1.0 / sg))
        out.append(lv.value - kober_main(sg))
    return np.array(out)


def verify_kober(sigmas=KOBER_SIGMAS, limit: float = 0.05) -> IdentityReport:
    """Residuals settle: the last two residuals differ by less than ``limit``.

    Notes record the successive differences and whether they shrink.
    """
    res = kober_residuals(sigmas)
    diffs = np.abs(np.diff(res))
    shrinking = bool(np.all(np.diff(diffs) < 0))
    notes = ("residuals " + ", ".join(f"{r:.6g}" for r in res),
             "differences " + ", ".join(f"{d:.3g}" for d in diffs),
             "differences shrink" if shrinking else "differences do not shrink")
    rep = IdentityReport.compare("kober", float(res[-1]), float(res[-2]), limit, notes)
    if not shrinking and rep.passed:
        rep = IdentityReport(rep.name, rep.lhs, rep.rhs, rep.abs_err, rep.tol, False, rep.notes)
    return rep


def verify_atkinson_l1(s: complex = 0.5 + 0.2j, n_max: int = 10_000) -> IdentityReport:
    """Quadrature ``L_1(s)`` against the explicit exponential-sum part; tolerance ``5 / (|s| + 1)``."""
    s = complex(s)
    table = divisor_table(max(n_max, 10_000))
    lhs = laplace_transform(1, s, 1e-9)
    rhs = atkinson_l1(s, n_max, table)
    return IdentityReport.compare("atkinson-l1", lhs.value, rhs.value, LAMBDA1_CONSTANT / (abs(s) + 1),
                                  ("residual bounded by C / (|s| + 1), C = 5",))


def verify_bridge(T: float = 20.0, tol: float = 1e-8) -> IdentityReport:
    """``L_1(1/T)`` against ``(1/T) int I_1(t) e^(-t/T) dt``; the trivial bound ``I_1(T) <= e L_1(1/T)`` is noted."""
    from .moments import moment_integral

    lhs = laplace_transform(1, 1.0 / T, tol)
    rhs = laplace_bridge_rhs(T, tol)
    moment = moment_integral(1, T).value
    bound_ok = moment <= math.e * lhs.value
    rep = IdentityReport.compare("bridge", lhs.value, rhs.value, lhs.err_est + rhs.err_est + 1e-12,
                                 (f"I_1(T) = {moment:.9g}, e L_1(1/T) = {math.e * lhs.value:.9g}",
                                  "trivial bound holds" if bound_ok else "trivial bound violated"))
    if not bound_ok:
        rep = IdentityReport(rep.name, rep.lhs, rep.rhs, rep.abs_err, rep.tol, False, rep.notes)
    return rep


def verify_recurrence(k: int = 2, r: int = 1, s: complex = 3.0, c: float = 1.3, half_window: float = 80.0,
                      rel_tol: float = 1e-2) -> IdentityReport:
    """Direct ``Z_k(s)`` against the contour convolution of ``Z_(k-r)`` and ``Z_r``; relative tolerance."""
    s = complex(s)
    lhs = mellin_transform(k, s, 1e-7)
    rhs = recurrence_rhs(k, r, s, ContourSpec(c, -half_window, half_window, 1.0), 1e-4)
    tol = rel_tol * abs(lhs.value)
    return IdentityReport.compare("recurrence", lhs.value, rhs.value, tol, rhs.notes)


def verify_square(k: int = 1, s: complex = 4.0, x_max: float = 1e4, tol: float = 1e-3) -> IdentityReport:
    rep = square_identity_report(k, s, x_max, tol)
    return IdentityReport("square-identity", rep.lhs, rep.rhs, rep.abs_err, rep.tol, rep.passed, rep.notes)


def verify_square_general(s: complex = 3.0) -> IdentityReport:
    """The constant-weight case on ``[1, 2]``; both sides equal ``(3/8)^2 = 9/64`` at ``s = 3``."""
    return square_identity_general(lambda x: np.ones_like(x), 1.0, 2.0, s, 1e-12)


def principal_part_probe(eps=(0.2, 0.1, 0.05)) -> tuple[np.ndarray, np.ndarray, float]:
    """``eps^2 Z_1(1 + eps)``, the first-order quotients, and their Richardson limit.

    The quotient ``(eps^2 Z_1(1+eps) - 1)/eps`` is ``b + O(eps)``; linear
    extrapolation from the two smallest steps removes the ``O(eps)`` term.
    """
    eps = np.asarray(eps, dtype=float)
    lead = np.array([e * e * z1_continued(1 + e, tol=1e-6).value for e in eps])
    first = (lead - 1.0) / eps
    e1, e2 = eps[-2], eps[-1]
    rich = (e1 * first[-1] - e2 * first[-2]) / (e1 - e2)
    return lead, first, float(rich)


def verify_principal(eps=(0.2, 0.1, 0.05), rel: float = 0.25) -> IdentityReport:
    """Richardson-extrapolated first-order coefficient against ``2 gamma - log 2 pi``."""
    lead, first, rich = principal_part_probe(eps)
    target = 2 * EULER_GAMMA - LOG_2PI
    in_band = 0.9 <= lead[-1] <= 1.1
    notes = (f"eps^2 Z_1(1+eps) = " + ", ".join(f"{v:.6f}" for v in lead),
             "leading coefficient in [0.9, 1.1]" if in_band else "leading coefficient outside [0.9, 1.1]")
    rep = IdentityReport.compare("principal-part", rich, target, rel * abs(target), notes)
    if not in_band:
        rep = IdentityReport(rep.name, rep.lhs, rep.rhs, rep.abs_err, rep.tol, False, rep.notes)
    return rep


def verify_pole5() -> IdentityReport:
    rep = leading_pole_identity()
    return IdentityReport("pole-five", rep.lhs, rep.rhs, rep.abs_err, rep.tol, rep.passed,
                          (f"A_5 = {A5_POLE!r}, 1/(2 pi^2) = {A4_FOURTH_MOMENT!r}",))


def verify_smoothed(k: int = 1, T: float = 50.0, tol: float = 1e-3) -> IdentityReport:
    rep = exp_smoothed_moment(k, T, tol)
    return IdentityReport("smoothed-moment", rep.lhs, rep.rhs, rep.abs_err, rep.tol, rep.passed, rep.notes)


REGISTRY: Dict[str, Callable[..., IdentityReport]] = {
    "kober": verify_kober,
    "atkinson-l1": verify_atkinson_l1,
    "bridge": verify_bridge,
    "recurrence": verify_recurrence,
    "square-identity": verify_square,
    "square-general": verify_square_general,
    "principal-part": verify_principal,
    "pole-five": verify_pole5,
    "smoothed-moment": verify_smoothed,
}
