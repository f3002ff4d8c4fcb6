"""Hazard-model zoo and model-evaluation machinery.

The BFM model is compared against five published additive / exponentiated
lifetime families on the same censored-likelihood footing.  Every entry is a
:class:`HazardModel`: a name, parameter names, vectorized ``frf`` and
``chf`` callables, data-aware starting points for the optimizer, and (for
the additive families) the two cause components needed for risk splits.

Evaluation utilities: information criteria (AIC, BIC, and a
sample-size-corrected bridge criterion), PIT-based goodness-of-fit
statistics with parametric-bootstrap p-values, and rank tables with
mean-rank tie handling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize, special, stats

from .dataio import Dataset
from .distribution import (
    BfmParams,
    bfm_chf,
    bfm_frf,
    bfm_log_frf,
    dhillon_frf,
    exppower_frf,
)
from .mle import MleFit, bfm_nll, bfm_nll_grad, fit_mle
from .specfun import integrate_semiinf

__all__ = [
    "HazardModel",
    "EvalReport",
    "bfm_model",
    "competitor",
    "competitor_names",
    "all_model_names",
    "info_criteria",
    "gof_statistics",
    "gof_pvalues",
    "rank_models",
    "competitor_risks",
    "sample_from_model",
    "compare_models",
]


@dataclass(frozen=True)
class HazardModel:
    """A lifetime model described by its hazard and cumulative hazard.

    ``frf_fn(x, params)`` and ``chf_fn(x, params)`` are vectorized over
    ``x``; ``log_frf_fn`` may be supplied when the plain hazard overflows.
    ``components`` holds per-cause hazard callables for additive families.
    """

    name: str
    param_names: tuple
    frf_fn: Callable
    chf_fn: Callable
    start_fn: Callable
    log_frf_fn: Optional[Callable] = None
    nll_fn: Optional[Callable] = None
    nll_grad_fn: Optional[Callable] = None
    components: Optional[tuple] = None
    fit_bounds_fn: Optional[Callable] = None

    @property
    def param_count(self) -> int:
        return len(self.param_names)

    # -- basic functions -------------------------------------------------
    def frf(self, x, params):
        return self.frf_fn(np.asarray(x, dtype=float), np.asarray(params, dtype=float))

    def chf(self, x, params):
        return self.chf_fn(np.asarray(x, dtype=float), np.asarray(params, dtype=float))

    def log_frf(self, x, params):
        x = np.asarray(x, dtype=float)
        params = np.asarray(params, dtype=float)
        if self.log_frf_fn is not None:
            return self.log_frf_fn(x, params)
        with np.errstate(all="ignore"):
            return np.log(self.frf_fn(x, params))

    def sf(self, x, params):
        with np.errstate(all="ignore"):
            return np.exp(-self.chf(x, params))

    def cdf(self, x, params):
        with np.errstate(all="ignore"):
            return -np.expm1(-self.chf(x, params))

    # -- likelihood ------------------------------------------------------
    def nll(self, params, data: Dataset) -> float:
        """Censored negative log-likelihood with a +inf overflow sentinel."""
        params = np.asarray(params, dtype=float)
        if params.shape != (self.param_count,) or not np.all(
            np.isfinite(params) & (params > 0.0)
        ):
            return np.inf
        if self.nll_fn is not None:
            return self.nll_fn(params, data)
        with np.errstate(all="ignore"):
            val = np.sum(self.chf(data.times, params)) - np.sum(
                self.log_frf(data.failure_times, params)
            )
        return float(val) if np.isfinite(val) else np.inf

    @property
    def nll_grad(self):
        return self.nll_grad_fn

    def start_points(self, data: Dataset, rng, n: int) -> np.ndarray:
        pts = np.asarray(self.start_fn(data, rng, n), dtype=float)
        return np.clip(pts, 1e-12, None)

    def fit_bounds(self, data: Dataset):
        """Optimization box for the fitter, or None when unconstrained.

        Every additive family here can push one component toward a hazard
        spike at the largest observation (component rate going to infinity
        while the matching scale collapses), which sends the censored
        likelihood to infinity along a degenerate ridge of ever-narrower
        spikes.  The box caps each component's rise so it must span a
        resolvable fraction of the observed time range; the likelihood
        itself is left untouched, so evaluating it at any parameter point
        remains valid.
        """
        if self.fit_bounds_fn is None:
            return None
        lo, hi = self.fit_bounds_fn(data)
        return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)


# ---------------------------------------------------------------------------
# BFM as a HazardModel
# ---------------------------------------------------------------------------


def _bfm_frf(x, q):
    return bfm_frf(x, BfmParams.from_array(q))


def _bfm_chf(x, q):
    return bfm_chf(x, BfmParams.from_array(q))


def _bfm_log_frf(x, q):
    return bfm_log_frf(x, BfmParams.from_array(q))


# Fitter boxes.  Rate-like parameters of components whose hazard can rear up
# exponentially are capped so the component's rise spans at least ~1/200 of
# the observed range: beyond that the "fit" is a numerical spike parked on
# the largest observation, a degenerate ridge along which the censored
# likelihood increases without bound while every descriptive quantity
# (moments, quantiles, risks) collapses.  Scale-like parameters get wide
# generic boxes that assume times are recorded in O(1)-O(1e3) units.
_TINY, _HUGE = 1e-30, 1e30


def _gompertz_caps(x_max):
    # rate <= 200/x_max and shift <= 400 keep exp(rate*x - shift) resolvable
    return (1e-8 / x_max, 1e-12), (200.0 / x_max, 400.0)


def _chen_shape_cap(x_max):
    # gamma * x_max**gamma <= 200 (rise-length floor for exp(x**gamma));
    # solved by Lambert W, never below 1 so mild growth stays expressible
    if x_max <= 1.0:
        return 50.0
    lw = float(np.real(special.lambertw(200.0 * np.log(x_max))))
    return max(1.0, lw / np.log(x_max))


def _bfm_bounds(data: Dataset):
    return ([_TINY, 1e-3, 1e-3, _TINY], [_HUGE, 100.0, 100.0, _HUGE])


def _apd_bounds(data: Dataset):
    x_max = float(np.max(data.times))
    return ([1e-12, 1e-8 / x_max, 1e-12, 1e-8 / x_max],
            [1e12, 200.0 / x_max, 1e12, 200.0 / x_max])


def _facg_bounds(data: Dataset):
    x_max = float(np.max(data.times))
    (g_rlo, g_slo), (g_rhi, g_shi) = _gompertz_caps(x_max)
    return ([1e-3, _TINY, g_rlo, g_slo],
            [_chen_shape_cap(x_max), 1e12, g_rhi, g_shi])


def _faepg_bounds(data: Dataset):
    x_max = float(np.max(data.times))
    (g_rlo, g_slo), (g_rhi, g_shi) = _gompertz_caps(x_max)
    return ([1e-3, _TINY, g_rlo, g_slo], [50.0, _HUGE, g_rhi, g_shi])


def _eaddw_bounds(data: Dataset):
    return ([_TINY, 1e-3, _TINY, 1e-3, 1e-3], [_HUGE, 50.0, _HUGE, 50.0, 1e3])


def _gextew_bounds(data: Dataset):
    # With the outer power c small, the inner scales only act through
    # c*ln(beta) and c*ln(lambda): a flat ridge of numerically
    # indistinguishable fits with runaway scale values.  Flooring c and
    # boxing the scales keeps the family inside its identifiable regime.
    return ([1e-6, _TINY, 1e-3, _TINY, 0.3], [1e4, 1e6, 50.0, 1e6, 60.0])


def _bfm_starts(data: Dataset, rng, n: int) -> np.ndarray:
    # Scale-aware: zeta is a rate (~1/median), nu pairs with the drawn
    # theta so that nu * median^theta stays O(1).
    m = float(np.median(data.times))
    pts = [np.array([0.3 / m, 1.0, 1.0, 1.0 / m])]
    while len(pts) < n:
        theta = np.exp(rng.uniform(np.log(0.15), np.log(6.0)))
        tau = np.exp(rng.uniform(np.log(0.15), np.log(6.0)))
        w = np.exp(rng.uniform(np.log(0.02), np.log(5.0)))
        v = np.exp(rng.uniform(np.log(0.05), np.log(5.0)))
        pts.append(np.array([w * m**-theta, theta, tau, v / m]))
    return np.array(pts)


def bfm_model() -> HazardModel:
    """The BFM model wrapped in the common hazard-model interface."""
    return HazardModel(
        name="bfm",
        param_names=("nu", "theta", "tau", "zeta"),
        frf_fn=_bfm_frf,
        chf_fn=_bfm_chf,
        log_frf_fn=_bfm_log_frf,
        nll_fn=lambda q, d: bfm_nll(q, d),
        nll_grad_fn=lambda q, d: bfm_nll_grad(q, d),
        start_fn=_bfm_starts,
        fit_bounds_fn=_bfm_bounds,
        components=(
            lambda x, q: dhillon_frf(x, q[0], q[1]),
            lambda x, q: exppower_frf(x, q[2], q[3]),
        ),
    )


# ---------------------------------------------------------------------------
# Competitors
# ---------------------------------------------------------------------------


def _perks_frf(x, c, k):
    # c k e^{kx} / (1 + c e^{kx})  ==  k * expit(ln c + k x)
    with np.errstate(all="ignore"):
        return k * _expit(np.log(c) + k * x)


def _expit(t):
    with np.errstate(over="ignore"):
        return np.where(t >= 0.0, 1.0 / (1.0 + np.exp(-t)), np.exp(t) / (1.0 + np.exp(t)))


def _perks_chf(x, c, k):
    # ln((1 + c e^{kx}) / (1 + c))
    with np.errstate(all="ignore"):
        return np.logaddexp(0.0, np.log(c) + k * x) - np.log1p(c)


def _apd_frf(x, q):
    c1, k1, c2, k2 = q
    return _perks_frf(x, c1, k1) + _perks_frf(x, c2, k2)


def _apd_chf(x, q):
    c1, k1, c2, k2 = q
    return _perks_chf(x, c1, k1) + _perks_chf(x, c2, k2)


def _apd_starts(data, rng, n):
    x_max = float(np.max(data.times))
    pts = []
    for _ in range(n):
        c1 = np.exp(rng.uniform(np.log(1e-4), np.log(0.9)))
        c2 = np.exp(rng.uniform(np.log(1e-4), np.log(0.9)))
        k1 = np.log(1.0 / c1) / (x_max * rng.uniform(0.5, 1.1))
        k2 = np.log(1.0 / c2) / (x_max * rng.uniform(0.15, 0.6))
        pts.append([c1, k1, c2, k2])
    return pts


def _gompertz_frf(x, lam, shift):
    with np.errstate(all="ignore"):
        return np.exp(np.log(lam) + lam * x - shift)


def _gompertz_chf(x, lam, shift):
    # e^{-shift} (e^{lam x} - 1), assembled as exp(lam x - shift)(1 - e^{-lam x})
    with np.errstate(all="ignore"):
        return np.exp(lam * x - shift) * -np.expm1(-lam * x)


def _gompertz_start(rng, x_max):
    lam = np.exp(rng.uniform(np.log(1.0), np.log(1000.0))) / x_max
    shift = lam * x_max * rng.uniform(0.8, 1.15)
    return lam, shift


def _chen_frf(x, gamma, alpha):
    with np.errstate(all="ignore"):
        xg = x**gamma
        return alpha * gamma * x ** (gamma - 1.0) * np.exp(xg)


def _chen_chf(x, gamma, alpha):
    with np.errstate(all="ignore"):
        return alpha * np.expm1(x**gamma)


def _facg_frf(x, q):
    gamma, alpha, lam, shift = q
    return _chen_frf(x, gamma, alpha) + _gompertz_frf(x, lam, shift)


def _facg_chf(x, q):
    gamma, alpha, lam, shift = q
    return _chen_chf(x, gamma, alpha) + _gompertz_chf(x, lam, shift)


def _facg_starts(data, rng, n):
    x_max = float(np.max(data.times))
    x_ref = float(np.quantile(data.times, 0.7))
    g_hi = min(1.5, np.log(30.0) / np.log(max(x_ref, np.e)))
    pts = []
    for _ in range(n):
        gamma = np.exp(rng.uniform(np.log(0.1), np.log(g_hi)))
        alpha = rng.uniform(0.2, 5.0) / max(np.expm1(x_ref**gamma), 1e-3)
        lam, shift = _gompertz_start(rng, x_max)
        pts.append([gamma, alpha, lam, shift])
    return pts


def _ep_frf(x, shape, rate):
    return exppower_frf(x, shape, rate)


def _ep_chf(x, shape, rate):
    with np.errstate(all="ignore"):
        return np.expm1(np.exp(shape * (np.log(rate) + np.log(x))))


def _faepg_frf(x, q):
    ep_shape, ep_rate, lam, shift = q
    return _ep_frf(x, ep_shape, ep_rate) + _gompertz_frf(x, lam, shift)


def _faepg_chf(x, q):
    ep_shape, ep_rate, lam, shift = q
    return _ep_chf(x, ep_shape, ep_rate) + _gompertz_chf(x, lam, shift)


def _faepg_starts(data, rng, n):
    x_max = float(np.max(data.times))
    pts = []
    for _ in range(n):
        ep_shape = np.exp(rng.uniform(np.log(0.2), np.log(5.0)))
        ep_rate = np.exp(rng.uniform(np.log(0.3), np.log(30.0))) / x_max
        lam, shift = _gompertz_start(rng, x_max)
        pts.append([ep_shape, ep_rate, lam, shift])
    return pts


def _eaddw_pieces(x, q):
    alpha, beta, gamma, lam, theta = q
    with np.errstate(all="ignore"):
        h = alpha * x**beta + gamma * x**lam
        hp = alpha * beta * x ** (beta - 1.0) + gamma * lam * x ** (lam - 1.0)
        log_g = np.log1p(-np.exp(-h))
        sf = -np.expm1(theta * log_g)
    return h, hp, log_g, sf


def _eaddw_log_frf(x, q):
    theta = q[4]
    with np.errstate(all="ignore"):
        h, hp, log_g, sf = _eaddw_pieces(x, q)
        return np.log(theta) - h + np.log(hp) + (theta - 1.0) * log_g - np.log(sf)


def _eaddw_frf(x, q):
    with np.errstate(all="ignore"):
        return np.exp(_eaddw_log_frf(x, q))


def _eaddw_chf(x, q):
    with np.errstate(all="ignore"):
        _, _, log_g, sf = _eaddw_pieces(x, q)
        return -np.log(sf)


def _eaddw_starts(data, rng, n):
    x_ref = float(np.quantile(data.times, 0.7))
    pts = []
    for _ in range(n):
        beta = np.exp(rng.uniform(np.log(0.08), np.log(1.2)))
        lam = np.exp(rng.uniform(np.log(1.0), np.log(5.0)))
        alpha = rng.uniform(0.2, 5.0) / x_ref**beta
        gamma = rng.uniform(0.2, 5.0) / x_ref**lam
        theta = np.exp(rng.uniform(np.log(0.3), np.log(20.0)))
        pts.append([alpha, beta, gamma, lam, theta])
    return pts


def _gextew_pieces(x, q):
    alpha, beta, gamma, lam, c = q
    with np.errstate(all="ignore"):
        h = beta * x**gamma + lam * x
        hp = beta * gamma * x ** (gamma - 1.0) + lam
        z = np.exp(c * np.log(h))
        log_g = np.log1p(-np.exp(-z))
        sf = -np.expm1(alpha * log_g)
    return h, hp, z, log_g, sf


def _gextew_log_frf(x, q):
    alpha, _, _, _, c = q
    with np.errstate(all="ignore"):
        h, hp, z, log_g, sf = _gextew_pieces(x, q)
        return (
            np.log(c)
            + np.log(alpha)
            + np.log(hp)
            + (c - 1.0) * np.log(h)
            - z
            + (alpha - 1.0) * log_g
            - np.log(sf)
        )


def _gextew_frf(x, q):
    with np.errstate(all="ignore"):
        return np.exp(_gextew_log_frf(x, q))


def _gextew_chf(x, q):
    with np.errstate(all="ignore"):
        _, _, _, _, sf = _gextew_pieces(x, q)
        return -np.log(sf)


def _gextew_starts(data, rng, n):
    x_max = float(np.max(data.times))
    x_ref = float(np.quantile(data.times, 0.7))
    pts = []
    for _ in range(n):
        c = np.exp(rng.uniform(np.log(2.0), np.log(40.0)))
        gamma = np.exp(rng.uniform(np.log(0.02), np.log(1.2)))
        beta = rng.uniform(0.3, 3.0) / x_ref**gamma
        lam = np.exp(rng.uniform(np.log(0.02), np.log(2.0))) / x_max
        alpha = np.exp(rng.uniform(np.log(0.05), np.log(100.0)))
        pts.append([alpha, beta, gamma, lam, c])
    return pts


_COMPETITORS = {
    "apd": HazardModel(
        name="apd",
        param_names=("c1", "k1", "c2", "k2"),
        frf_fn=_apd_frf,
        chf_fn=_apd_chf,
        start_fn=_apd_starts,
        fit_bounds_fn=_apd_bounds,
        components=(
            lambda x, q: _perks_frf(x, q[0], q[1]),
            lambda x, q: _perks_frf(x, q[2], q[3]),
        ),
    ),
    "facg": HazardModel(
        name="facg",
        param_names=("chen_shape", "chen_scale", "gomp_rate", "gomp_shift"),
        frf_fn=_facg_frf,
        chf_fn=_facg_chf,
        start_fn=_facg_starts,
        fit_bounds_fn=_facg_bounds,
        components=(
            lambda x, q: _chen_frf(x, q[0], q[1]),
            lambda x, q: _gompertz_frf(x, q[2], q[3]),
        ),
    ),
    "faepg": HazardModel(
        name="faepg",
        param_names=("ep_shape", "ep_rate", "gomp_rate", "gomp_shift"),
        frf_fn=_faepg_frf,
        chf_fn=_faepg_chf,
        start_fn=_faepg_starts,
        fit_bounds_fn=_faepg_bounds,
        components=(
            lambda x, q: _ep_frf(x, q[0], q[1]),
            lambda x, q: _gompertz_frf(x, q[2], q[3]),
        ),
    ),
    "eaddw": HazardModel(
        name="eaddw",
        param_names=("alpha", "beta", "gamma", "lambda", "theta"),
        frf_fn=_eaddw_frf,
        chf_fn=_eaddw_chf,
        log_frf_fn=_eaddw_log_frf,
        start_fn=_eaddw_starts,
        fit_bounds_fn=_eaddw_bounds,
    ),
    "gextew": HazardModel(
        name="gextew",
        param_names=("alpha", "beta", "gamma", "lambda", "c"),
        frf_fn=_gextew_frf,
        chf_fn=_gextew_chf,
        log_frf_fn=_gextew_log_frf,
        start_fn=_gextew_starts,
        fit_bounds_fn=_gextew_bounds,
    ),
}


def competitor_names() -> tuple:
    return tuple(_COMPETITORS)


def all_model_names() -> tuple:
    return ("bfm",) + competitor_names()


def competitor(name: str) -> HazardModel:
    """Look up a competitor model (or the BFM itself) by name."""
    if name == "bfm":
        return bfm_model()
    try:
        return _COMPETITORS[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; have {all_model_names()}") from None


# ---------------------------------------------------------------------------
# Information criteria / goodness of fit
# ---------------------------------------------------------------------------


def info_criteria(nll: float, n_params: int, n_obs: int) -> dict:
    """AIC, BIC, and the sample-size-corrected bridge criterion.

    ``bc = 2 nll + n^(2/3) * (1 + 1/2 + ... + 1/k)`` grows slower than BIC's
    ``k ln n`` in the parameter count but faster in the harmonic tail, which
    penalizes the five-parameter families visibly on small samples.
    """
    if n_params < 1 or n_obs < 1:
        raise ValueError("need n_params >= 1 and n_obs >= 1")
    harmonic = float(np.sum(1.0 / np.arange(1, n_params + 1)))
    return {
        "nll": float(nll),
        "aic": 2.0 * nll + 2.0 * n_params,
        "bic": 2.0 * nll + n_params * float(np.log(n_obs)),
        "bc": 2.0 * nll + n_obs ** (2.0 / 3.0) * harmonic,
    }


def gof_statistics(model: HazardModel, params, data: Dataset) -> dict:
    """KS / AD / CvM distances of the uncensored times after the PIT.

    The uncensored observations are pushed through the fitted CDF and the
    classical one-sample statistics are evaluated against uniformity.
    Censored units do not enter (their transforms are interval-valued); the
    companion bootstrap calibrates the statistics under the same convention.
    """
    t = np.sort(data.failure_times)
    n = t.size
    if n == 0:
        raise ValueError("no failures to test")
    u = np.clip(model.cdf(t, np.asarray(params, dtype=float)), 1e-12, 1.0 - 1e-12)
    i = np.arange(1, n + 1)
    ks = float(np.max(np.maximum(i / n - u, u - (i - 1) / n)))
    cvm = float(np.sum((u - (2 * i - 1) / (2 * n)) ** 2) + 1.0 / (12 * n))
    ad = float(-n - np.mean((2 * i - 1) * (np.log(u) + np.log1p(-u[::-1]))))
    return {"ks": ks, "ad": ad, "cvm": cvm}


def sample_from_model(model: HazardModel, params, n: int, rng) -> np.ndarray:
    """Draw lifetimes from any hazard model by inverting its CHF.

    A log-spaced grid of the monotone CHF brackets the needed quantile
    range; draws are placed by interpolation and tightened with two Newton
    corrections, which is plenty below the bootstrap's resolution.
    """
    params = np.asarray(params, dtype=float)
    u = rng.random(n)
    targets = -np.log1p(-u)
    t_max = max(float(np.max(targets)), 1e-8)

    hi = 1.0
    while float(model.chf(np.array([hi]), params)[0]) < t_max:
        hi *= 2.0
        if hi > 1e100:
            raise RuntimeError(f"{model.name}: CHF never reaches {t_max}")
    lo = hi
    t_min = max(float(np.min(targets)), 1e-10)
    while float(model.chf(np.array([lo]), params)[0]) > t_min and lo > 1e-200:
        lo /= 2.0
    grid = np.geomspace(max(lo, 1e-200) / 2.0, hi * 2.0, 2048)
    cg = model.chf(grid, params)
    ok = np.isfinite(cg)
    grid, cg = grid[ok], cg[ok]
    cg, keep = np.unique(cg, return_index=True)
    grid = grid[keep]
    x = np.interp(targets, cg, grid)
    for _ in range(2):
        with np.errstate(all="ignore"):
            step = (model.chf(x, params) - targets) / model.frf(x, params)
            step = np.where(np.isfinite(step), step, 0.0)
            x = np.clip(x - step, grid[0], grid[-1])
    return x


def _refit_warm(model: HazardModel, data: Dataset, p0) -> np.ndarray:
    """Cheap single-start refit used inside the bootstrap loop."""
    p0 = np.asarray(p0, dtype=float)
    k = p0.size
    box = model.fit_bounds(data)
    bounds = None
    if box is not None:
        lo, hi = box
        p0 = np.clip(p0, lo * (1.0 + 1e-9), hi * (1.0 - 1e-9))
        bounds = optimize.Bounds(np.log(lo), np.log(hi))
    with np.errstate(invalid="ignore"):
        res = optimize.minimize(
            lambda y: model.nll(np.exp(y), data),
            np.log(p0),
            method="Nelder-Mead",
            bounds=bounds,
            options={"maxiter": 120 * k, "xatol": 1e-5, "fatol": 1e-7},
        )
    return np.exp(res.x)


def gof_pvalues(
    model: HazardModel,
    params,
    data: Dataset,
    bootstrap_reps: int = 199,
    seed: int = 0,
) -> dict:
    """Parametric-bootstrap p-values for the KS/AD/CvM statistics.

    Each replicate simulates every unit from the fitted model, keeps the
    original right-censoring limits (a simulated lifetime beyond a unit's
    recorded censoring time stays censored there), refits from a warm start,
    and recomputes the statistics.  ``p = (1 + #{replicate >= observed}) /
    (kept + 1)``.  Replicates whose refit or statistics fail are dropped and
    counted in the returned ``"dropped"`` entry.
    """
    if bootstrap_reps < 1:
        raise ValueError("bootstrap_reps must be positive")
    params = np.asarray(params, dtype=float)
    observed = gof_statistics(model, params, data)
    was_censored = ~data.is_failure
    exceed = {k: 0 for k in observed}
    dropped = 0
    for b in range(bootstrap_reps):
        rng = np.random.default_rng((seed, b))
        try:
            t_sim = sample_from_model(model, params, data.n, rng)
            censor_here = was_censored & (t_sim >= data.times)
            times_b = np.where(censor_here, data.times, t_sim)
            status_b = np.where(censor_here, "cen", "cu").astype(object)
            data_b = Dataset(times=times_b, status=status_b)
            p_b = _refit_warm(model, data_b, params)
            stats_b = gof_statistics(model, p_b, data_b)
        except (RuntimeError, ValueError, FloatingPointError):
            dropped += 1
            continue
        if not all(np.isfinite(v) for v in stats_b.values()):
            dropped += 1
            continue
        for k in observed:
            if stats_b[k] >= observed[k]:
                exceed[k] += 1
    kept = bootstrap_reps - dropped
    out = {k: (1.0 + exceed[k]) / (kept + 1.0) for k in observed}
    out["dropped"] = dropped
    return out


def rank_models(metric_table: dict) -> dict:
    """Rank models per metric (smaller is better), ties get the mean rank.

    Parameters
    ----------
    metric_table : dict
        ``{model_name: {metric: value}}`` with a common metric set.

    Returns
    -------
    dict
        ``{"per_metric": {metric: {model: rank}}, "mean": {model: mean},
        "order": [models best-first]}``
    """
    names = list(metric_table)
    metrics = list(next(iter(metric_table.values())))
    per_metric = {}
    for m in metrics:
        vals = np.array([metric_table[name][m] for name in names])
        ranks = stats.rankdata(vals, method="average")
        per_metric[m] = dict(zip(names, ranks))
    mean_rank = {
        name: float(np.mean([per_metric[m][name] for m in metrics])) for name in names
    }
    order = sorted(names, key=lambda nm: (mean_rank[nm], nm))
    return {"per_metric": per_metric, "mean": mean_rank, "order": order}


def competitor_risks(model: HazardModel, params, tol: float = 1e-9) -> tuple:
    """Lifetime cause shares for a two-component additive hazard model.

    ``F_k = integral over t of r_k(t) sf(t) dt`` for each declared
    component; the shares of a proper model sum to 1.
    """
    if model.components is None:
        raise ValueError(f"model {model.name!r} has no cause components")
    params = np.asarray(params, dtype=float)

    shares = []
    for comp in model.components:

        def integrand(t, _c=comp):
            arr = np.array([t])
            val = _c(arr, params)[0] * np.exp(-model.chf(arr, params)[0])
            return float(val) if np.isfinite(val) else 0.0

        shares.append(integrate_semiinf(integrand, 0.0, tol=tol).value)
    return tuple(shares)


# ---------------------------------------------------------------------------
# Full comparison pipeline
# ---------------------------------------------------------------------------


@dataclass
class EvalReport:
    """Everything the model-comparison pipeline produces for one dataset."""

    dataset_name: str
    n_obs: int
    fits: dict = field(default_factory=dict)          # name -> MleFit
    criteria: dict = field(default_factory=dict)      # name -> dict
    gof: dict = field(default_factory=dict)           # name -> dict
    pvalues: dict = field(default_factory=dict)       # name -> dict
    failures: dict = field(default_factory=dict)      # name -> error message
    ranks: dict = field(default_factory=dict)
    verdict: list = field(default_factory=list)       # best-first model names

    def metric_table(self) -> dict:
        table = {}
        for name in self.fits:
            table[name] = dict(self.criteria[name])
            table[name].update(self.gof[name])
        return table


def compare_models(
    data: Dataset,
    model_names=None,
    n_boot: int = 199,
    n_starts: int = 12,
    seed: int = 0,
) -> EvalReport:
    """Fit and rank a set of models on one censored dataset.

    Fits each model by :func:`bfm.mle.fit_mle`, assembles information
    criteria and GOF statistics (with bootstrap p-values when ``n_boot`` is
    positive), and ranks on the seven metrics nll/aic/bic/bc/ks/ad/cvm.
    A model whose fit blows up is recorded in ``failures`` and the
    comparison proceeds with the survivors.
    """
    names = list(model_names) if model_names is not None else list(all_model_names())
    report = EvalReport(dataset_name=data.name or "dataset", n_obs=data.n)
    for offset, name in enumerate(names):
        model = competitor(name)
        try:
            fit = fit_mle(model, data, n_starts=n_starts, seed=seed + 17 * offset)
            criteria = info_criteria(fit.nll, model.param_count, data.n)
            gof = gof_statistics(model, fit.params, data)
        except (RuntimeError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            report.failures[name] = str(exc) or type(exc).__name__
            continue
        report.fits[name] = fit
        report.criteria[name] = criteria
        report.gof[name] = gof
        if n_boot > 0:
            report.pvalues[name] = gof_pvalues(
                model, fit.params, data,
                bootstrap_reps=n_boot, seed=seed + 1000 + offset,
            )
    if not report.fits:
        raise RuntimeError(
            "every model fit failed: "
            + "; ".join(f"{k}: {v}" for k, v in report.failures.items())
        )
    report.ranks = rank_models(report.metric_table())
    report.verdict = report.ranks["order"]
    return report
