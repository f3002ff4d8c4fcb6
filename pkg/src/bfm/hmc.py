"""Hamiltonian Monte Carlo sampler for the BFM posterior.

Sampling happens in log-parameter space: with independent Gamma priors on
the natural parameters and the reparameterization ``p = exp(q)``, the target
density picks up a ``sum(q)`` log-Jacobian and becomes unconstrained, which
is what the leapfrog integrator needs.  The engine itself
(:func:`sample_chain`) is target-agnostic — it takes log-density and
gradient callables — so its mechanics are testable on closed-form targets
(standard normal, harmonic oscillator) independent of the lifetime model.

Momenta are Gaussian with a diagonal mass matrix.  During warm-up the step
size is nudged toward a 0.6–0.9 acceptance window and then frozen; warm-up
draws never reach summaries.  Non-finite trajectories (divergences) are
rejected in place and counted per chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .dataio import Dataset
from .distribution import bfm_sample
from .mle import bfm_nll, bfm_nll_grad

__all__ = [
    "GammaPrior",
    "HmcConfig",
    "PosteriorChains",
    "PosteriorSummary",
    "default_priors",
    "log_posterior",
    "log_posterior_grad",
    "leapfrog",
    "sample_chain",
    "hmc_run",
    "summarize",
    "posterior_predictive_sets",
]

# A proposal whose energy error exceeds this is treated as divergent even if
# the arithmetic stayed finite; such trajectories carry no usable
# information and poison acceptance statistics.
_DIVERGENCE_ENERGY = 1000.0

_ADAPT_WINDOW = 50
_ADAPT_LO, _ADAPT_HI = 0.6, 0.9


@dataclass(frozen=True)
class GammaPrior:
    """Gamma(shape ``a``, rate ``b``) prior for one positive parameter."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0.0 and self.b > 0.0):
            raise ValueError(f"Gamma prior needs a, b > 0, got {self!r}")

    def log_density(self, x: float) -> float:
        if x <= 0.0:
            return -math.inf
        return (
            self.a * math.log(self.b)
            - math.lgamma(self.a)
            + (self.a - 1.0) * math.log(x)
            - self.b * x
        )


def default_priors(omps: Sequence[float]) -> Tuple[GammaPrior, ...]:
    """OMP-centered priors: rate 2, shape chosen so the prior mean is the OMP."""
    return tuple(GammaPrior(a=2.0 * float(v), b=2.0) for v in omps)


@dataclass(frozen=True)
class HmcConfig:
    """Sampler settings.

    ``iterations`` counts total transitions per chain; the first ``warmup``
    of them tune the step size and are discarded.  ``mass_diag`` is the
    diagonal of the momentum covariance (identity when omitted).
    """

    epsilon: float = 0.02
    leapfrog_steps: int = 25
    mass_diag: Optional[Tuple[float, ...]] = None
    iterations: int = 2000
    warmup: int = 1000
    chains: int = 4
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError(f"step size must be positive, got {self.epsilon!r}")
        if self.leapfrog_steps < 1:
            raise ValueError("need at least one leapfrog step")
        if not 0 <= self.warmup < self.iterations:
            raise ValueError(
                f"warmup must satisfy 0 <= warmup < iterations, got "
                f"{self.warmup}/{self.iterations}"
            )
        if self.chains < 1:
            raise ValueError("need at least one chain")
        if self.mass_diag is not None:
            m = np.asarray(self.mass_diag, dtype=float)
            if np.any(~np.isfinite(m)) or np.any(m <= 0.0):
                raise ValueError("mass_diag entries must be positive and finite")


@dataclass(frozen=True)
class PosteriorChains:
    """Kept draws from every chain, in both parameterizations.

    ``draws`` has shape (chains, kept, dim) in natural parameter space;
    ``log_draws`` is the same in the sampled log space.  ``unhealthy`` marks
    chains whose acceptance rate left [0.1, 0.99] or whose divergence share
    exceeded 10%.
    """

    draws: np.ndarray
    log_draws: np.ndarray
    accept_rate: Tuple[float, ...]
    divergences: Tuple[int, ...]
    unhealthy: Tuple[bool, ...]
    epsilon_used: Tuple[float, ...]


@dataclass(frozen=True)
class PosteriorSummary:
    """Pooled posterior moments, credible intervals, and mixing diagnostic."""

    mean: np.ndarray
    sd: np.ndarray
    hpd95: np.ndarray
    rhat: np.ndarray


def log_posterior(
    log_p: np.ndarray, data: Optional[Dataset], priors: Sequence[GammaPrior]
) -> float:
    """Log of the transformed posterior density at ``log_p``.

    The value is the censored log-likelihood plus Gamma log-priors on the
    natural parameters plus the ``sum(log_p)`` Jacobian of ``p = exp(q)``.
    ``data=None`` (or an empty dataset) drops the likelihood term, leaving
    the transformed prior.  Any overflow yields ``-inf`` so the transition
    is rejectable rather than fatal.
    """
    q = np.asarray(log_p, dtype=float)
    p = np.exp(q)
    if np.any(~np.isfinite(p)):
        return -math.inf
    total = 0.0
    if data is not None and data.n > 0:
        nll = bfm_nll(p, data)
        if not math.isfinite(nll):
            return -math.inf
        total -= nll
    for value, prior in zip(p, priors):
        total += prior.log_density(float(value))
    total += float(np.sum(q))
    return total if math.isfinite(total) else -math.inf


def log_posterior_grad(
    log_p: np.ndarray, data: Optional[Dataset], priors: Sequence[GammaPrior]
) -> np.ndarray:
    """Gradient of :func:`log_posterior` with respect to ``log_p``.

    Chain rule: natural-space gradient times ``p`` per coordinate, plus the
    prior terms ``(a - 1) - b p`` and ``+1`` from the Jacobian.
    """
    q = np.asarray(log_p, dtype=float)
    p = np.exp(q)
    if data is not None and data.n > 0:
        g_nat = -bfm_nll_grad(p, data)
    else:
        g_nat = np.zeros_like(p)
    a = np.array([pr.a for pr in priors])
    b = np.array([pr.b for pr in priors])
    return p * g_nat + (a - 1.0) - b * p + 1.0


def leapfrog(
    state: Tuple[np.ndarray, np.ndarray],
    epsilon: float,
    steps: int,
    mass_diag: np.ndarray,
    grad_fn: Callable[[np.ndarray], np.ndarray],
) -> Tuple[np.ndarray, np.ndarray]:
    """Half-kick / drift / half-kick integration of Hamiltonian dynamics.

    ``grad_fn`` is the gradient of the log target density (the negative
    potential gradient).  The map is symplectic: running it, negating the
    momentum, and running it again returns the initial state to floating
    point accuracy.

    Parameters
    ----------
    state : (position, momentum)
        Arrays of matching shape.
    epsilon : float
        Step size, > 0.
    steps : int
        Number of full leapfrog steps, >= 1.
    mass_diag : ndarray
        Diagonal of the momentum covariance.
    grad_fn : callable

    Returns
    -------
    (position, momentum)
        May contain non-finite entries; callers treat that as a divergent
        transition.
    """
    if not epsilon > 0.0:
        raise ValueError(f"step size must be positive, got {epsilon!r}")
    if steps < 1:
        raise ValueError("need at least one leapfrog step")
    q = np.array(state[0], dtype=float)
    kappa = np.array(state[1], dtype=float)
    with np.errstate(all="ignore"):
        kappa = kappa + 0.5 * epsilon * grad_fn(q)
        for step in range(steps):
            q = q + epsilon * kappa / mass_diag
            g = grad_fn(q)
            if step < steps - 1:
                kappa = kappa + epsilon * g
            else:
                kappa = kappa + 0.5 * epsilon * g
    return q, kappa


def sample_chain(
    log_prob: Callable[[np.ndarray], float],
    grad_fn: Callable[[np.ndarray], np.ndarray],
    init: np.ndarray,
    config: HmcConfig,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, float, int, float]:
    """Run one HMC chain on an arbitrary unconstrained target.

    Returns ``(kept_states, accept_rate, divergences, epsilon_used)`` where
    ``kept_states`` excludes the warm-up transitions.  Step size adaptation
    runs only during warm-up: every 50 transitions the recent acceptance
    fraction is compared with the 0.6–0.9 window and ``epsilon`` is scaled
    down (x0.8) or up (x1.25) accordingly, then frozen for sampling.
    """
    dim = np.asarray(init, dtype=float).size
    mass = (
        np.ones(dim)
        if config.mass_diag is None
        else np.asarray(config.mass_diag, dtype=float)
    )
    epsilon = config.epsilon
    q = np.array(init, dtype=float)
    lp = log_prob(q)
    if not math.isfinite(lp):
        raise ValueError("initial state has zero posterior density")
    kept = config.iterations - config.warmup
    out = np.empty((kept, dim))
    accepted = 0
    divergences = 0
    window_accepted = 0
    for it in range(config.iterations):
        kappa = rng.normal(size=dim) * np.sqrt(mass)
        h0 = -lp + 0.5 * float(np.sum(kappa * kappa / mass))
        q_new, kappa_new = leapfrog((q, kappa), epsilon, config.leapfrog_steps, mass, grad_fn)
        divergent = bool(np.any(~np.isfinite(q_new)) or np.any(~np.isfinite(kappa_new)))
        if not divergent:
            lp_new = log_prob(q_new)
            h1 = -lp_new + 0.5 * float(np.sum(kappa_new * kappa_new / mass))
            if not math.isfinite(h1) or (h1 - h0) > _DIVERGENCE_ENERGY:
                divergent = True
        if divergent:
            divergences += 1
        else:
            # Metropolis correction: accept with probability min(1, e^(H0 - H1)).
            if math.log(rng.uniform()) < (h0 - h1):
                q, lp = q_new, lp_new
                accepted += 1
                window_accepted += 1
        if it < config.warmup:
            if (it + 1) % _ADAPT_WINDOW == 0:
                rate = window_accepted / _ADAPT_WINDOW
                if rate < _ADAPT_LO:
                    epsilon *= 0.8
                elif rate > _ADAPT_HI:
                    epsilon *= 1.25
                window_accepted = 0
        else:
            out[it - config.warmup] = q
    return out, accepted / config.iterations, divergences, epsilon


def hmc_run(
    data: Optional[Dataset],
    priors: Sequence[GammaPrior],
    config: HmcConfig,
    init: Sequence[float],
) -> PosteriorChains:
    """Sample the BFM posterior with several independent chains.

    ``init`` is a strictly positive natural-space parameter vector (the
    OMPs are the sensible default) shared by all chains; chain ``i`` owns
    the RNG stream seeded with ``config.seed + i``, so runs are fully
    reproducible and chains are independent.

    Chains whose acceptance rate falls outside [0.1, 0.99] or whose
    divergence share exceeds 10% are flagged unhealthy but still returned:
    discarding them silently would bias the summary, and the caller decides
    what to do.
    """
    init_arr = np.asarray(init, dtype=float)
    if init_arr.ndim != 1 or init_arr.size != len(priors):
        raise ValueError("init length must match the prior count")
    if np.any(~np.isfinite(init_arr)) or np.any(init_arr <= 0.0):
        raise ValueError("init must be strictly positive and finite")

    def lp_fn(q: np.ndarray) -> float:
        return log_posterior(q, data, priors)

    def grad_fn(q: np.ndarray) -> np.ndarray:
        return log_posterior_grad(q, data, priors)

    q0 = np.log(init_arr)
    all_draws, rates, divs, eps_used, unhealthy = [], [], [], [], []
    for i in range(config.chains):
        rng = np.random.default_rng(config.seed + i)
        states, rate, ndiv, eps = sample_chain(lp_fn, grad_fn, q0, config, rng)
        all_draws.append(states)
        rates.append(rate)
        divs.append(ndiv)
        eps_used.append(eps)
        unhealthy.append(
            rate < 0.1 or rate > 0.99 or ndiv > 0.1 * config.iterations
        )
    log_draws = np.stack(all_draws)
    return PosteriorChains(
        draws=np.exp(log_draws),
        log_draws=log_draws,
        accept_rate=tuple(rates),
        divergences=tuple(divs),
        unhealthy=tuple(unhealthy),
        epsilon_used=tuple(eps_used),
    )


def _shortest_interval(sorted_pool: np.ndarray, level: float = 0.95) -> Tuple[float, float]:
    n = sorted_pool.size
    k = max(1, int(math.ceil(level * n)))
    if k >= n:
        return float(sorted_pool[0]), float(sorted_pool[-1])
    widths = sorted_pool[k:] - sorted_pool[: n - k]
    j = int(np.argmin(widths))
    return float(sorted_pool[j]), float(sorted_pool[j + k])


def summarize(chains: PosteriorChains) -> PosteriorSummary:
    """Pooled mean/sd, shortest 95% credible intervals, and per-coordinate R-hat.

    R-hat is the classic between/within potential scale reduction factor
    ``sqrt(((n-1)/n * W + B/n) / W)`` on the natural-space draws.  A chain
    with zero variance while the chains disagree is an error (the PSRF is
    meaningless there); if every chain is a constant at the same value the
    draws are degenerate-but-consistent and R-hat is reported as 1.
    """
    draws = chains.draws
    n_chains, kept, dim = draws.shape
    if n_chains < 2:
        raise ValueError("need at least two chains to summarize")
    if kept < 10:
        raise ValueError("need at least ten kept draws per chain")
    mean = draws.reshape(-1, dim).mean(axis=0)
    sd = draws.reshape(-1, dim).std(axis=0, ddof=1)
    rhat = np.empty(dim)
    hpd = np.empty((dim, 2))
    for h in range(dim):
        x = draws[:, :, h]
        chain_means = x.mean(axis=1)
        chain_vars = x.var(axis=1, ddof=1)
        w = float(np.mean(chain_vars))
        b = kept * float(np.var(chain_means, ddof=1))
        if np.any(chain_vars == 0.0) and not np.allclose(chain_means, chain_means[0]):
            raise RuntimeError(
                f"coordinate {h}: a chain is constant while chains disagree; "
                "R-hat is undefined"
            )
        if w == 0.0:
            rhat[h] = 1.0
        else:
            rhat[h] = math.sqrt(((kept - 1) / kept * w + b / kept) / w)
        hpd[h] = _shortest_interval(np.sort(x.reshape(-1)))
    return PosteriorSummary(mean=mean, sd=sd, hpd95=hpd, rhat=rhat)


def posterior_predictive_sets(
    chains: PosteriorChains, n_obs: int, count: int, seed: int = 0
) -> List[Dataset]:
    """Simulate datasets from the posterior-mean parameter vector.

    Each of the ``count`` sets holds ``n_obs`` complete lifetimes drawn
    from the BFM at the Bayes estimate (posterior mean), with the latent
    cause recorded as the status code.  Set ``k`` uses seed ``seed + k``.
    """
    if count < 1:
        raise ValueError("need at least one predictive set")
    from .distribution import BfmParams  # local import to avoid cycle noise

    mean = chains.draws.reshape(-1, chains.draws.shape[-1]).mean(axis=0)
    p = BfmParams.from_array(mean)
    sets = []
    for k in range(count):
        draw = bfm_sample(n_obs, p, seed=seed + k)
        status = np.where(np.asarray(draw.cause) == 1, "c1", "c2").astype(object)
        sets.append(
            Dataset(
                times=np.asarray(draw.time, dtype=float),
                status=status,
                name=f"predictive-{k}",
            )
        )
    return sets
