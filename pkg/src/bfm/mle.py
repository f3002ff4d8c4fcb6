"""Censored maximum-likelihood inference.

The likelihood treats every unit as contributing its cumulative hazard and
every failure (cause-labeled or not) as additionally contributing its log
failure rate::

    nll = sum_i chf(x_i) - sum_{failures} ln frf(x_i)

which covers right-censored units (hazard contribution only) and failures of
unknown cause (a failure is a failure; the cause label never enters the
likelihood, only the risk summaries).

Optimization runs in log-parameter space (positivity for free, and the
surface is much better conditioned there): a derivative-free simplex search
from multiple data-aware starts, then a gradient polish with the analytic
score when the model provides one.  Standard errors come from the observed
information (numerical central-difference Hessian at the optimum in natural
parameter space).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from .dataio import CensoredObservation, Dataset  # noqa: F401  (re-exported API)
from .distribution import BfmParams, bfm_chf, bfm_log_frf

__all__ = [
    "CensoredObservation",
    "Dataset",
    "MleFit",
    "ObservedInfo",
    "SingularInformation",
    "bfm_nll",
    "bfm_nll_grad",
    "fit_mle",
    "observed_information",
    "wald_intervals",
]

_Z95 = 1.96  # two-sided 95% normal quantile used for the asymptotic CIs


class SingularInformation(RuntimeError):
    """Observed information matrix is numerically singular."""

    def __init__(self, message: str, condition_number: float):
        super().__init__(f"{message} (condition number {condition_number:.3e})")
        self.condition_number = condition_number


def _as_params(params) -> Optional[BfmParams]:
    if isinstance(params, BfmParams):
        return params
    try:
        return BfmParams.from_array(params)
    except (ValueError, TypeError):
        return None


def bfm_nll(params, data: Dataset) -> float:
    """Negative log-likelihood of the BFM model on a censored sample.

    Returns ``+inf`` for invalid parameters or on numeric overflow, so
    optimizers can treat the sentinel as an ordinary bad objective value.
    """
    p = _as_params(params)
    if p is None:
        return np.inf
    x = data.times
    with np.errstate(all="ignore"):
        val = np.sum(bfm_chf(x, p)) - np.sum(bfm_log_frf(x[data.is_failure], p))
    return float(val) if np.isfinite(val) else np.inf


def bfm_nll_grad(params, data: Dataset) -> np.ndarray:
    """Analytic gradient of :func:`bfm_nll` in natural parameter space.

    Derived from the censored log-likelihood: with ``A = (zeta x)^tau``,
    ``D = nu x^theta + 1`` and cause weights ``w_k = r_k / (r_1 + r_2)``
    evaluated at the failures,

    * d/d nu    = sum_all (1 - 1/D)/nu            - sum_fail w1 / (nu D)
    * d/d theta = sum_all (1 - 1/D) ln x          - sum_fail w1 (D + theta ln x)/(theta D)
    * d/d tau   = sum_all e^A A ln(zeta x)        - sum_fail w2 (1/tau + (1+A) ln(zeta x))
    * d/d zeta  = sum_all e^A tau A / zeta        - sum_fail w2 tau (1+A) / zeta

    Returns an all-NaN vector when the evaluation overflows; callers treat
    that like an infinite objective.
    """
    p = _as_params(params)
    if p is None:
        return np.full(4, np.nan)
    x = data.times
    fail = data.is_failure
    with np.errstate(all="ignore"):
        log_x = np.log(x)
        log_d = np.logaddexp(0.0, np.log(p.nu) + p.theta * log_x)
        one_m_invd = -np.expm1(-log_d)  # 1 - 1/D  ==  nu x^theta / D
        log_zx = np.log(p.zeta) + log_x
        a = np.exp(p.tau * log_zx)
        ea = np.exp(a)

        # survival (cumulative-hazard) parts, all units
        g_nu = np.sum(one_m_invd) / p.nu
        g_theta = np.sum(one_m_invd * log_x)
        g_tau = np.sum(ea * a * log_zx)
        g_zeta = np.sum(ea * a) * p.tau / p.zeta

        # failure-rate parts, failed units only
        xf = x[fail]
        lxf = log_x[fail]
        ldf = log_d[fail]
        af = a[fail]
        lzxf = log_zx[fail]
        log_r1 = np.log(p.nu) + np.log(p.theta) + (p.theta - 1.0) * lxf - ldf
        log_r2 = np.log(p.tau) + np.log(p.zeta) + (p.tau - 1.0) * lzxf + af
        log_r = np.logaddexp(log_r1, log_r2)
        w1 = np.exp(log_r1 - log_r)
        w2 = np.exp(log_r2 - log_r)
        d = np.exp(ldf)

        g_nu -= np.sum(w1 / d) / p.nu
        g_theta -= np.sum(w1 * (d + p.theta * lxf) / (p.theta * d))
        g_tau -= np.sum(w2 * (1.0 / p.tau + (1.0 + af) * lzxf))
        g_zeta -= np.sum(w2 * (1.0 + af)) * p.tau / p.zeta

        grad = np.array([g_nu, g_theta, g_tau, g_zeta])
    if not np.all(np.isfinite(grad)):
        return np.full(4, np.nan)
    return grad


@dataclass
class MleFit:
    """Result of a maximum-likelihood fit.

    Attributes
    ----------
    model_name : str
    param_names : tuple of str
    params : ndarray
        Estimates in natural space.
    nll : float
        Negative log-likelihood at the optimum.
    std_devs : ndarray
        Asymptotic standard deviations (NaN when the observed information
        was singular).
    aci : ndarray, shape (k, 2)
        95% asymptotic confidence intervals, lower bounds clamped at 0.
    converged : bool
    iterations : int
        Total objective evaluations across all stages.
    """

    model_name: str
    param_names: tuple
    params: np.ndarray
    nll: float
    std_devs: np.ndarray
    aci: np.ndarray
    converged: bool
    iterations: int


@dataclass
class ObservedInfo:
    """Observed information at an optimum and the quantities derived from it.

    Attributes
    ----------
    matrix : ndarray
        The numerical Hessian of the negative log-likelihood.
    cov : ndarray
        Its inverse, the asymptotic covariance of the estimates.
    std_devs : ndarray
        Square roots of the covariance diagonal.
    aci : ndarray, shape (k, 2)
        95% asymptotic intervals, lower bounds clamped at 0.
    condition_number : float
    """

    matrix: np.ndarray
    cov: np.ndarray
    std_devs: np.ndarray
    aci: np.ndarray
    condition_number: float


def observed_information(model, p_hat, data: Dataset, rel_step: float = 1e-4) -> ObservedInfo:
    """Observed information: numerical Hessian of ``model.nll`` at ``p_hat``.

    Central differences with per-coordinate steps
    ``h_i = rel_step * max(|p_i|, 1e-8)``; ``model`` only needs an
    ``nll(params, data)`` method.

    Raises
    ------
    SingularInformation
        If the Hessian has non-finite entries, condition number above 1e14,
        or an inverse with nonpositive diagonal.
    """
    p = np.asarray(p_hat, dtype=float)
    k = p.size
    h = rel_step * np.maximum(np.abs(p), 1e-8)
    info = np.empty((k, k))

    def f(q):
        return model.nll(q, data)

    f0 = f(p)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        info[i, i] = (f(p + ei) - 2.0 * f0 + f(p - ei)) / h[i] ** 2
        for jj in range(i + 1, k):
            ej = np.zeros(k)
            ej[jj] = h[jj]
            info[i, jj] = info[jj, i] = (
                f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)
            ) / (4.0 * h[i] * h[jj])

    if not np.all(np.isfinite(info)):
        raise SingularInformation("non-finite Hessian entries", np.inf)
    cond = float(np.linalg.cond(info))
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularInformation("ill-conditioned observed information", cond)
    cov = np.linalg.inv(info)
    diag = np.diag(cov)
    if np.any(diag <= 0.0):
        raise SingularInformation("inverse information has nonpositive variance", cond)
    sd = np.sqrt(diag)
    return ObservedInfo(
        matrix=info,
        cov=cov,
        std_devs=sd,
        aci=wald_intervals(p, sd),
        condition_number=cond,
    )


def wald_intervals(params, std_devs, z: float = _Z95) -> np.ndarray:
    """95% asymptotic intervals ``est +- z * sd`` with lower bound clamped at 0."""
    p = np.asarray(params, dtype=float)
    sd = np.asarray(std_devs, dtype=float)
    lo = np.maximum(p - z * sd, 0.0)
    hi = p + z * sd
    return np.column_stack([lo, hi])


def fit_mle(
    model,
    data: Dataset,
    starts=None,
    n_starts: int = 8,
    seed: int = 0,
    polish: bool = True,
) -> MleFit:
    """Fit any hazard model to a censored sample by maximum likelihood.

    ``model`` must expose ``name``, ``param_names``, ``nll(params, data)``
    and ``start_points(data, rng, n)``; an optional ``nll_grad`` enables the
    gradient polish stage.  The search works on log parameters: every start
    is refined by Nelder-Mead simplex, the best survivor gets a second
    tighter simplex pass, and finally a gradient polish (analytic score if
    available, else finite differences) locks in the optimum.

    When the model declares fit bounds (see ``HazardModel.fit_bounds``) the
    search is confined to that box; the box exists to keep the optimizer off
    degenerate likelihood ridges, not to express prior knowledge.

    Parameters
    ----------
    model : hazard model
    data : Dataset
    starts : array-like, optional
        Explicit starting points in natural parameter space, shape
        ``(m, k)``.  Default: ``n_starts`` data-aware points generated by
        the model.
    n_starts : int, optional
        Number of generated starts when ``starts`` is not given.
    seed : int, optional
        Seed for the start generator.
    polish : bool, optional
        Disable to stop after the simplex stages (used by bootstrap refits).

    Returns
    -------
    MleFit
    """
    if starts is None:
        rng = np.random.default_rng(seed)
        starts = model.start_points(data, rng, n_starts)
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    if starts.size == 0:
        raise ValueError("need at least one starting point")
    k = starts.shape[1]
    nfev = 0

    log_bounds = None
    box = getattr(model, "fit_bounds", None)
    box = box(data) if callable(box) else None
    if box is not None:
        lo, hi = (np.asarray(b, dtype=float) for b in box)
        starts = np.clip(starts, lo * (1.0 + 1e-9), hi * (1.0 - 1e-9))
        log_bounds = optimize.Bounds(np.log(lo), np.log(hi))

    def obj(y):
        return model.nll(np.exp(y), data)

    best_y, best_val = None, np.inf
    for y0 in np.log(starts):
        # diverging simplex vertices hold inf; keep numpy quiet about inf-inf
        with np.errstate(invalid="ignore"):
            res = optimize.minimize(
                obj,
                y0,
                method="Nelder-Mead",
                bounds=log_bounds,
                options={"maxiter": 300 * k, "xatol": 1e-6, "fatol": 1e-9},
            )
        nfev += res.nfev
        if res.fun < best_val:
            best_val, best_y = float(res.fun), res.x
    if best_y is None or not np.isfinite(best_val):
        raise RuntimeError(f"all {model.name} fits diverged")

    with np.errstate(invalid="ignore"):
        res = optimize.minimize(
            obj,
            best_y,
            method="Nelder-Mead",
            bounds=log_bounds,
            options={"maxiter": 400 * k, "xatol": 1e-10, "fatol": 1e-12},
        )
    nfev += res.nfev
    if res.fun < best_val:
        best_val, best_y = float(res.fun), res.x
    converged = bool(np.isfinite(best_val))

    if polish:
        grad_nat = getattr(model, "nll_grad", None)
        if grad_nat is not None:

            def obj_grad(y):
                py = np.exp(y)
                g = grad_nat(py, data)
                if not np.all(np.isfinite(g)):
                    return np.full(k, 0.0)
                return g * py

            with np.errstate(invalid="ignore"):
                res = optimize.minimize(
                    obj, best_y, method="L-BFGS-B", jac=obj_grad,
                    bounds=log_bounds, options={"maxiter": 200},
                )
        else:
            with np.errstate(invalid="ignore"):
                res = optimize.minimize(
                    obj, best_y, method="L-BFGS-B",
                    bounds=log_bounds, options={"maxiter": 200},
                )
        nfev += res.nfev
        if np.isfinite(res.fun) and res.fun <= best_val:
            best_val, best_y = float(res.fun), res.x

    p_hat = np.exp(best_y)
    try:
        sd = observed_information(model, p_hat, data).std_devs
    except SingularInformation:
        sd = np.full(k, np.nan)
    aci = wald_intervals(p_hat, sd)
    return MleFit(
        model_name=model.name,
        param_names=tuple(model.param_names),
        params=p_hat,
        nll=best_val,
        std_devs=sd,
        aci=aci,
        converged=converged,
        iterations=nfev,
    )
