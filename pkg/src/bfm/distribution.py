"""Core bi-failure-modes (BFM) lifetime distribution.

The BFM lifetime is the minimum of two independent latent failure times: a
Dhillon lifetime (decreasing-then-flat hazard; an early/defect mode) with
shape ``theta`` and scale-like coefficient ``nu``, and an exponential-power
lifetime (J-shaped hazard; a wear-out mode) with shape ``tau`` and rate
``zeta``.  Because the modes compete, the BFM survival function is the
product of the component survival functions and the failure-rate function
(FRF) is the sum of the component hazards, which is what produces bathtub
and roller-coaster shapes from only four parameters.

All parameters are strictly positive and are carried in the canonical order
``(nu, theta, tau, zeta)`` throughout the package.

Component reference forms, for ``x >= 0``:

* Dhillon:        ``sf1(x) = 1 / (nu x^theta + 1)``,
                  ``r1(x) = nu theta x^(theta-1) / (nu x^theta + 1)``.
* exp-power:      ``sf2(x) = exp(1 - exp((zeta x)^tau))``,
                  ``r2(x) = tau zeta (zeta x)^(tau-1) exp((zeta x)^tau)``.
* BFM:            ``sf = sf1 * sf2``, ``frf = r1 + r2``,
                  ``chf(x) = exp((zeta x)^tau) - 1 + ln(nu x^theta + 1)``,
                  ``pdf = frf * sf``.

Implementations work on the log scale wherever the direct form can overflow
(``exp((zeta x)^tau)`` grows doubly exponentially), so survival values
underflow cleanly to 0 and hazards overflow to ``inf`` instead of producing
NaNs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "BfmParams",
    "CauseLabel",
    "LifetimeDraw",
    "dhillon_sf",
    "dhillon_frf",
    "dhillon_pdf",
    "dhillon_quantile",
    "exppower_sf",
    "exppower_frf",
    "exppower_pdf",
    "exppower_quantile",
    "bfm_sf",
    "bfm_cdf",
    "bfm_pdf",
    "bfm_log_pdf",
    "bfm_frf",
    "bfm_log_frf",
    "bfm_chf",
    "bfm_quantile",
    "bfm_sample",
]


@dataclass(frozen=True)
class BfmParams:
    """Parameter vector of the BFM model, canonical order (nu, theta, tau, zeta).

    Attributes
    ----------
    nu, theta : float
        Dhillon component coefficient and shape.
    tau, zeta : float
        Exponential-power component shape and rate.
    """

    nu: float
    theta: float
    tau: float
    zeta: float

    def __post_init__(self):
        vals = (self.nu, self.theta, self.tau, self.zeta)
        if not all(np.isfinite(v) and v > 0.0 for v in vals):
            raise ValueError(f"BFM parameters must be finite and > 0, got {vals}")

    def as_array(self) -> np.ndarray:
        return np.array([self.nu, self.theta, self.tau, self.zeta], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "BfmParams":
        nu, theta, tau, zeta = np.asarray(arr, dtype=float)
        return cls(float(nu), float(theta), float(tau), float(zeta))


class CauseLabel(enum.IntEnum):
    """Latent failure cause: which component produced the minimum."""

    DHILLON = 1
    EXP_POWER = 2


@dataclass(frozen=True)
class LifetimeDraw:
    """Sampled lifetimes with their latent causes.

    Attributes
    ----------
    time : ndarray
        Simulated failure times.
    cause : ndarray of int
        1 where the Dhillon component failed first, 2 otherwise.
    """

    time: np.ndarray
    cause: np.ndarray


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(~np.isfinite(x)):
        raise ValueError("lifetimes must be finite and >= 0")
    return x


def _check_u(u):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0.0) or np.any(u >= 1.0):
        raise ValueError("probability levels must lie in [0, 1)")
    return u


def _log1p_nu_x_theta(x, p: BfmParams):
    """ln(1 + nu * x^theta), overflow-safe via logaddexp."""
    out = np.zeros_like(x)
    pos = x > 0.0
    with np.errstate(divide="ignore"):
        out[pos] = np.logaddexp(0.0, np.log(p.nu) + p.theta * np.log(x[pos]))
    return out


def _zeta_x_pow_tau(x, p: BfmParams):
    """(zeta * x)^tau, computed as exp(tau * ln(zeta x)); inf on overflow."""
    out = np.zeros_like(x)
    pos = x > 0.0
    with np.errstate(divide="ignore", over="ignore"):
        out[pos] = np.exp(p.tau * (np.log(p.zeta) + np.log(x[pos])))
    return out


# ---------------------------------------------------------------------------
# Dhillon component
# ---------------------------------------------------------------------------


def dhillon_sf(x, nu: float, theta: float):
    """Dhillon survival function ``1 / (nu x^theta + 1)``."""
    p = BfmParams(nu, theta, 1.0, 1.0)
    x = _check_x(x)
    return np.exp(-_log1p_nu_x_theta(x, p))


def dhillon_frf(x, nu: float, theta: float):
    """Dhillon hazard ``nu theta x^(theta-1) / (nu x^theta + 1)``.

    Decreasing for ``theta <= 1`` (infinite at 0 when ``theta < 1``),
    unimodal then decaying like ``theta/x`` for ``theta > 1``.
    """
    BfmParams(nu, theta, 1.0, 1.0)
    x = _check_x(x)
    with np.errstate(divide="ignore", over="ignore"):
        num = nu * theta * x ** (theta - 1.0)
        return num / (nu * x**theta + 1.0)


def dhillon_pdf(x, nu: float, theta: float):
    """Dhillon density ``nu theta x^(theta-1) / (nu x^theta + 1)^2``."""
    return dhillon_frf(x, nu, theta) * dhillon_sf(x, nu, theta)


def dhillon_quantile(u, nu: float, theta: float):
    """Dhillon quantile ``(u / ((1-u) nu))^(1/theta)`` for ``u in [0, 1)``."""
    BfmParams(nu, theta, 1.0, 1.0)
    u = _check_u(u)
    out = np.zeros_like(u)
    pos = u > 0.0
    with np.errstate(divide="ignore"):
        log_q = (np.log(u[pos]) - np.log1p(-u[pos]) - np.log(nu)) / theta
    out[pos] = np.exp(log_q)
    return out


# ---------------------------------------------------------------------------
# Exponential-power component
# ---------------------------------------------------------------------------


def exppower_sf(x, tau: float, zeta: float):
    """Exponential-power survival ``exp(1 - exp((zeta x)^tau))``."""
    p = BfmParams(1.0, 1.0, tau, zeta)
    x = _check_x(x)
    a = _zeta_x_pow_tau(x, p)
    with np.errstate(over="ignore"):
        return np.exp(-np.expm1(a))


def exppower_frf(x, tau: float, zeta: float):
    """Exponential-power hazard ``tau zeta (zeta x)^(tau-1) exp((zeta x)^tau)``.

    J-shaped: strictly increasing for ``tau >= 1``, bathtub-ended (infinite
    at 0, eventually increasing) for ``tau < 1``.
    """
    p = BfmParams(1.0, 1.0, tau, zeta)
    x = _check_x(x)
    a = _zeta_x_pow_tau(x, p)
    with np.errstate(divide="ignore", over="ignore"):
        return tau * zeta * (zeta * x) ** (tau - 1.0) * np.exp(a)


def exppower_pdf(x, tau: float, zeta: float):
    """Exponential-power density, hazard times survival."""
    return exppower_frf(x, tau, zeta) * exppower_sf(x, tau, zeta)


def exppower_quantile(u, tau: float, zeta: float):
    """Exponential-power quantile ``(ln(1 - ln(1-u)))^(1/tau) / zeta``."""
    BfmParams(1.0, 1.0, tau, zeta)
    u = _check_u(u)
    inner = np.log1p(-np.log1p(-u))
    return inner ** (1.0 / tau) / zeta


# ---------------------------------------------------------------------------
# BFM (competing minimum of the two components)
# ---------------------------------------------------------------------------


def bfm_chf(x, p: BfmParams):
    """Cumulative hazard ``exp((zeta x)^tau) - 1 + ln(nu x^theta + 1)``."""
    x = _check_x(x)
    a = _zeta_x_pow_tau(x, p)
    with np.errstate(over="ignore"):
        return np.expm1(a) + _log1p_nu_x_theta(x, p)


def bfm_sf(x, p: BfmParams):
    """Survival function of the BFM lifetime (product of component SFs)."""
    return np.exp(-bfm_chf(x, p))


def bfm_cdf(x, p: BfmParams):
    """Distribution function ``1 - sf``."""
    x = _check_x(x)
    return -np.expm1(-bfm_chf(x, p))


def bfm_log_frf(x, p: BfmParams):
    """Log failure-rate function, overflow-safe.

    The FRF is the sum of the component hazards; both are assembled on the
    log scale and combined with ``logaddexp`` so that extreme ``x`` degrade
    to ``inf`` rather than NaN.
    """
    x = _check_x(x)
    with np.errstate(divide="ignore", over="ignore"):
        log_x = np.log(x)
        log_r1 = (
            np.log(p.nu)
            + np.log(p.theta)
            + (p.theta - 1.0) * log_x
            - _log1p_nu_x_theta(x, p)
        )
        log_zx = np.log(p.zeta) + log_x
        a = np.exp(p.tau * log_zx)
        log_r2 = np.log(p.tau) + np.log(p.zeta) + (p.tau - 1.0) * log_zx + a
        return np.logaddexp(log_r1, log_r2)


def bfm_frf(x, p: BfmParams):
    """Failure-rate (hazard) function ``r1 + r2``."""
    with np.errstate(over="ignore"):
        return np.exp(bfm_log_frf(x, p))


def bfm_log_pdf(x, p: BfmParams):
    """Log density ``log frf - chf``."""
    x = _check_x(x)
    return bfm_log_frf(x, p) - bfm_chf(x, p)


def bfm_pdf(x, p: BfmParams):
    """Density ``frf(x) * sf(x)``."""
    with np.errstate(over="ignore"):
        return np.exp(bfm_log_pdf(x, p))


def _bfm_quantile_scalar(u: float, p: BfmParams) -> float:
    if u == 0.0:
        return 0.0
    target = -np.log1p(-u)

    def g(x):
        return float(bfm_chf(np.asarray(x), p)) - target

    hi = 1.0
    while g(hi) < 0.0:
        hi *= 2.0
        if hi > 1e300:
            raise RuntimeError("quantile bracket expansion failed")
    lo = hi / 2.0 if hi > 1.0 else hi
    while g(lo) > 0.0:
        lo /= 2.0
        if lo < 1e-300:
            return 0.0
    # Safeguarded bisection/secant refinement of chf(x) = -ln(1-u); the
    # final |cdf(x) - u| is far below 1e-10 at this bracket tolerance.
    return float(brentq(g, lo, hi, xtol=1e-300, rtol=8.9e-16))


def bfm_quantile(u, p: BfmParams):
    """Quantile function of the BFM lifetime.

    Solves ``chf(x) = -ln(1-u)`` by doubling/halving bracket expansion from
    ``x = 1`` followed by safeguarded root refinement.  Accepts scalars or
    arrays of levels in ``[0, 1)``.
    """
    u_arr = _check_u(u)
    out = np.array([_bfm_quantile_scalar(float(v), p) for v in np.ravel(u_arr)])
    out = out.reshape(u_arr.shape)
    return float(out) if np.isscalar(u) or u_arr.shape == () else out


def bfm_sample(n: int, p: BfmParams, seed=None) -> LifetimeDraw:
    """Draw ``n`` BFM lifetimes with their latent causes.

    Sampling goes through the latent minimum: one uniform is pushed through
    each component quantile and the smaller latent time wins, which yields
    both the BFM lifetime and the cause label in a single pass.

    Parameters
    ----------
    n : int
        Number of draws.
    p : BfmParams
        Model parameters.
    seed : int, numpy.random.Generator, or None
        Seed or generator (PCG64 stream when an int is given).

    Returns
    -------
    LifetimeDraw
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x1 = dhillon_quantile(rng.random(n), p.nu, p.theta)
    x2 = exppower_quantile(rng.random(n), p.tau, p.zeta)
    cause = np.where(x1 <= x2, int(CauseLabel.DHILLON), int(CauseLabel.EXP_POWER))
    return LifetimeDraw(time=np.minimum(x1, x2), cause=cause)
