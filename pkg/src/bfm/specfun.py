"""Scalar special-function and quadrature kernels.

Everything here is model-agnostic numerics used by the distribution,
residual-life and risk layers: a log-gamma wrapper, semi-infinite adaptive
quadrature, the generalized integro-exponential integral that drives the
mean-residual-life and risk series, and a guarded accumulator for the
alternating series those expansions produce (they are asymptotic for part of
the parameter space, so naive summation can diverge).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature cannot meet its tolerance.

    The partial estimate and its error estimate are attached so callers can
    decide whether to degrade gracefully.
    """

    def __init__(self, message: str, value: float, error: float):
        super().__init__(message)
        self.value = value
        self.error = error


@dataclass(frozen=True)
class QuadratureResult:
    """Outcome of an adaptive quadrature call."""

    value: float
    error: float
    evaluations: int


@dataclass(frozen=True)
class SeriesResult:
    """Outcome of a guarded series accumulation.

    ``converged`` is False when the accumulator hit its term budget or
    detected sustained term growth (asymptotic divergence); in that case
    ``value`` is the optimally truncated partial sum (through the smallest
    term seen) and should be treated as advisory.
    """

    value: float
    terms_used: int
    converged: bool
    last_term_magnitude: float


def log_gamma(z: float) -> float:
    """Natural log of the gamma function for ``z > 0``.

    Parameters
    ----------
    z : float
        Strictly positive argument.

    Returns
    -------
    float
    """
    if not z > 0.0:
        raise ValueError(f"log_gamma requires z > 0, got {z!r}")
    return math.lgamma(z)


def integrate_semiinf(
    f: Callable[[float], float],
    a: float,
    tol: float = 1e-10,
    limit: int = 200,
) -> QuadratureResult:
    """Integrate ``f`` over ``[a, infinity)`` by adaptive quadrature.

    The semi-infinite range is handled by mapping onto a finite interval and
    adaptively subdividing a high-order Gauss-Kronrod rule (QUADPACK QAGI).

    Parameters
    ----------
    f : callable
        Integrand, evaluated at scalar points in ``(a, inf)``.
    a : float
        Finite lower limit.
    tol : float, optional
        Absolute and relative tolerance target.
    limit : int, optional
        Subdivision budget.

    Returns
    -------
    QuadratureResult

    Raises
    ------
    QuadratureError
        If the error estimate cannot be brought under the tolerance within
        the subdivision budget; the partial value is attached.
    """
    if not math.isfinite(a):
        raise ValueError("lower limit must be finite")
    value, abserr, info = integrate.quad(
        f, a, np.inf, epsabs=tol, epsrel=tol, limit=limit, full_output=True
    )[:3]
    neval = int(info["neval"])
    if not math.isfinite(value) or abserr > 100.0 * max(tol, tol * abs(value)):
        raise QuadratureError(
            f"semi-infinite quadrature did not converge (error {abserr:.3e})",
            value,
            abserr,
        )
    return QuadratureResult(value=float(value), error=float(abserr), evaluations=neval)


def gen_integro_exponential(j: float, lower: float, tol: float = 1e-10) -> float:
    """Generalized integro-exponential integral with a free lower limit.

    Computes ``J(j, lower) = \\int_lower^inf (ln y)^j y^{-1} e^{-y} dy`` for
    ``j > -1`` and ``lower >= 1``.  At ``lower = 1`` this equals
    ``Gamma(j+1) * E1^j(1)`` where ``E1^j`` is Milgram's generalized
    integro-exponential function; general lower limits arise in the
    mean-residual-life expansion.

    Parameters
    ----------
    j : float
        Power of ``ln y``; must exceed -1 for integrability at ``y = 1``.
    lower : float
        Lower integration limit, at least 1 (where ``ln y`` is nonnegative).
    tol : float, optional
        Quadrature tolerance.

    Returns
    -------
    float
    """
    if j <= -1.0:
        raise ValueError(f"need j > -1 for an integrable endpoint, got {j!r}")
    if lower < 1.0:
        raise ValueError(f"need lower >= 1, got {lower!r}")

    if j < 0.0:
        # (ln y)^j blows up (integrably) as y -> 1+, which defeats the
        # adaptive rule when lower is at or near 1.  Substituting v = ln y
        # and then s = v^(j+1) absorbs the singularity into the measure:
        #   J = 1/(j+1) * int_{s0}^inf exp(-exp(s^(1/(j+1)))) ds,
        # whose integrand is bounded by exp(-1) and double-exponentially
        # decaying.
        q = j + 1.0
        s0 = math.log(lower) ** q

        def integrand_reg(s: float) -> float:
            if s <= 0.0:
                return math.exp(-1.0)
            v = s ** (1.0 / q)
            ev = math.exp(v) if v < 709.0 else math.inf
            return math.exp(-ev) if ev < 745.0 else 0.0

        return integrate_semiinf(integrand_reg, s0, tol=tol).value / q

    def integrand(y: float) -> float:
        ly = math.log(y)
        if ly <= 0.0:
            # y == 1 is only touched when j == 0 matters; the open
            # Gauss-Kronrod rule never samples the endpoint itself.
            return 1.0 / math.e if j == 0.0 else 0.0
        arg = j * math.log(ly) - math.log(y) - y
        return math.exp(arg) if arg > -745.0 else 0.0

    return integrate_semiinf(integrand, lower, tol=tol).value


def guarded_alternating_sum(
    term: Callable[[int], float],
    tol: float = 1e-10,
    budget: int = 200,
) -> SeriesResult:
    """Accumulate ``sum_{l>=0} term(l)`` with divergence protection.

    Terms are added in order until the running term magnitude drops below
    ``tol * max(1, |sum|)`` (converged) or the accumulator gives up: either
    the budget is exhausted or the magnitudes have grown for three
    consecutive indices, the signature of an asymptotic series passing its
    optimal truncation point.  On giving up, the partial sum is rolled back
    to the smallest-magnitude term seen (optimal truncation), which is the
    best available estimate from a divergent tail.

    Parameters
    ----------
    term : callable
        Maps the index ``l`` to the signed term value.
    tol : float, optional
        Relative stopping tolerance.
    budget : int, optional
        Maximum number of terms.

    Returns
    -------
    SeriesResult
    """
    total = 0.0
    best_total = 0.0
    best_mag = math.inf
    prev_mag = math.inf
    growth_streak = 0
    used = 0
    for ell in range(budget):
        t = term(ell)
        used = ell + 1
        if not math.isfinite(t):
            # An overflowing term is the hard form of divergence.
            return SeriesResult(best_total, used, False, best_mag)
        total += t
        mag = abs(t)
        if mag <= best_mag:
            best_mag = mag
            best_total = total
        if mag <= tol * max(1.0, abs(total)):
            return SeriesResult(total, used, True, mag)
        growth_streak = growth_streak + 1 if mag > prev_mag else 0
        if growth_streak >= 3:
            return SeriesResult(best_total, used, False, best_mag)
        prev_mag = mag
    return SeriesResult(best_total, used, False, best_mag)
