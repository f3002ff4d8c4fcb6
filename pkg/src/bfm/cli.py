"""Command-line surface: fit, evaluate, analyze risks, and export plot data.

Every subcommand writes its artifacts into one output directory (flag
``--out-dir``, config key ``out-dir``, or the ``BFM_OUT_DIR`` environment
variable, in that order of precedence) and finishes by writing a
``manifest.json`` echoing the fully resolved configuration, so any run can
be reproduced exactly.  Outputs contain no timestamps: a command rerun with
the same flags and ``--seed`` produces byte-identical files.

Options may also come from a plain-text config file (``--config``) holding
``key = value`` lines whose keys mirror the long flag names one-to-one
(e.g. ``chains = 8`` for ``--chains 8``).  Explicit flags win over the
config file, which wins over built-in defaults.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .dataio import (
    DataFormatError,
    Dataset,
    PlotSeries,
    bundled_names,
    emit_series,
    empirical_risks,
    load_bundled,
    parse_dataset,
)
from .distribution import BfmParams, bfm_frf, bfm_quantile, bfm_sf
from .hmc import (
    GammaPrior,
    HmcConfig,
    default_priors,
    hmc_run,
    posterior_predictive_sets,
    summarize,
)
from .mle import SingularInformation, fit_mle
from .models import (
    all_model_names,
    compare_models,
    competitor,
    info_criteria,
)
from .reliability import find_change_points, scaled_ttt
from .risks import risk_mc, risk_p1, risk_p2, risk_p3
from .specfun import QuadratureError

__all__ = ["main"]


class UsageError(Exception):
    """Bad flag combination detected after argparse (exit code 2)."""


# ---------------------------------------------------------------------------
# Config-file / defaults plumbing
# ---------------------------------------------------------------------------

# Built-in defaults per subcommand, keyed by flag name (not dest).  The
# resolution order is: explicit flag > config file > this table.
_DEFAULTS = {
    "fit-mle": {"model": "bfm", "n-starts": 12},
    "fit-bayes": {
        "chains": 4, "iterations": 2000, "warmup": 1000,
        "epsilon": 0.02, "leapfrog-steps": 25, "n-starts": 12,
        "dump-draws": False, "prior": None,
    },
    "risks": {"params": None, "mc-draws": 1_000_000, "curve-points": 64},
    "compare": {"models": ",".join(all_model_names()), "bootstrap": 0, "n-starts": 12},
    "compat": {
        "sets": 5, "chains": 4, "iterations": 2000, "warmup": 1000,
        "epsilon": 0.02, "leapfrog-steps": 25, "n-starts": 12, "prior": None,
    },
    "ttt": {"strata": "c1,c2,combined", "smoothing": None},
}
_COMMON_DEFAULTS = {"seed": 0, "out-dir": None, "config": None,
                    "data": None, "dataset": None}


def _parse_config_file(path) -> dict:
    """Read ``key = value`` lines; '#' starts a comment, blanks ignored."""
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _coerce(value, like):
    """Coerce a config-file string to the type of the built-in default."""
    if not isinstance(value, str):
        return value
    if isinstance(like, bool):
        lowered = value.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"expected a boolean, got {value!r}")
    if isinstance(like, int) and not isinstance(like, bool):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def _resolve(args, command: str) -> dict:
    """Merge explicit flags, config file, and defaults into one options dict."""
    defaults = dict(_COMMON_DEFAULTS)
    defaults.update(_DEFAULTS[command])
    config = _parse_config_file(args.config) if args.config else {}
    for key in config:
        if key not in defaults:
            raise UsageError(
                f"unknown config key {key!r} for {command} "
                f"(valid: {', '.join(sorted(defaults))})"
            )
    resolved = {}
    for key, default in defaults.items():
        dest = key.replace("-", "_")
        explicit = getattr(args, dest, None)
        if explicit is not None:
            resolved[key] = explicit
        elif key in config:
            resolved[key] = _coerce(config[key], default if default is not None else "")
        else:
            resolved[key] = default
    resolved["config"] = args.config
    if resolved["out-dir"] is None:
        resolved["out-dir"] = os.environ.get("BFM_OUT_DIR", ".")
    return resolved


def _load_data(opts) -> Dataset:
    if opts["data"] and opts["dataset"]:
        raise UsageError("give either --data or --dataset, not both")
    if opts["data"]:
        return parse_dataset(opts["data"])
    if opts["dataset"]:
        if opts["dataset"] not in bundled_names():
            raise UsageError(
                f"unknown bundled dataset {opts['dataset']!r}; have {bundled_names()}"
            )
        return load_bundled(opts["dataset"])
    raise UsageError("a dataset is required (--data FILE or --dataset NAME)")


class _Run:
    """Collects output files for one command and writes the manifest."""

    def __init__(self, command: str, opts: dict):
        self.command = command
        self.opts = opts
        self.out_dir = opts["out-dir"]
        os.makedirs(self.out_dir, exist_ok=True)
        self.outputs = []

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def write_text(self, name: str, text: str):
        from .dataio import _atomic_write

        _atomic_write(self.path(name), text)
        self.outputs.append(name)

    def write_json(self, name: str, obj):
        self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def write_series(self, name: str, series, format="csv"):
        emit_series(series, self.path(name), format=format)
        self.outputs.append(name)

    def finish(self):
        manifest = {
            "command": self.command,
            "options": {k: v for k, v in sorted(self.opts.items())},
            "outputs": sorted(self.outputs),
            "package": "bfm-reliability",
            "version": __version__,
        }
        self.write_json("manifest.json", manifest)


def _dataset_block(data: Dataset) -> dict:
    counts = data.status_counts()
    return {
        "name": data.name,
        "time_unit": data.time_unit,
        "n": data.n,
        "failures": data.n_failures,
        "status_counts": counts,
        "checksum": data.checksum(),
    }


# ---------------------------------------------------------------------------
# fit-mle
# ---------------------------------------------------------------------------

def _cmd_fit_mle(args) -> int:
    opts = _resolve(args, "fit-mle")
    data = _load_data(opts)
    try:
        model = competitor(opts["model"])
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    run = _Run("fit-mle", opts)
    fit = fit_mle(model, data, n_starts=opts["n-starts"], seed=opts["seed"])
    if not fit.converged:
        raise RuntimeError(f"{model.name} fit did not converge on {data.name or 'dataset'}")
    criteria = info_criteria(fit.nll, model.param_count, data.n)
    report = {
        "model": model.name,
        "dataset": _dataset_block(data),
        "estimates": dict(zip(fit.param_names, map(float, fit.params))),
        "std_devs": dict(zip(fit.param_names, map(float, fit.std_devs))),
        "aci": {nm: [float(lo), float(hi)]
                for nm, (lo, hi) in zip(fit.param_names, fit.aci)},
        "nll": float(fit.nll),
        "criteria": criteria,
        "converged": fit.converged,
        "evaluations": fit.iterations,
        "seed": opts["seed"],
    }
    run.write_json("fit_report.json", report)

    lines = [
        f"model: {model.name}    dataset: {data.name or '(unnamed)'} "
        f"(n={data.n}, failures={data.n_failures})",
        f"nll: {fit.nll:.6f}",
        "criteria: " + "  ".join(f"{k}={v:.4f}" for k, v in criteria.items()),
        "",
        f"{'param':<10s}{'estimate':>14s}{'std-dev':>14s}      95% ACI",
    ]
    for nm, est, sd, (lo, hi) in zip(fit.param_names, fit.params, fit.std_devs, fit.aci):
        lines.append(f"{nm:<10s}{est:>14.6g}{sd:>14.6g}      [{lo:.6g}, {hi:.6g}]")
    run.write_text("fit_report.txt", "\n".join(lines) + "\n")
    run.finish()
    print(f"fit-mle: {model.name} on n={data.n}, nll={fit.nll:.4f} -> {run.out_dir}")
    return 0


# ---------------------------------------------------------------------------
# fit-bayes
# ---------------------------------------------------------------------------

def _parse_prior_overrides(pairs, param_names) -> dict:
    out = {}
    if isinstance(pairs, str):
        pairs = [pairs]
    for chunk in pairs or []:
        for item in str(chunk).split(";"):
            item = item.strip()
            if not item:
                continue
            if "=" not in item:
                raise UsageError(f"--prior expects name=a,b, got {item!r}")
            name, ab = item.split("=", 1)
            name = name.strip()
            if name not in param_names:
                raise UsageError(f"unknown parameter {name!r} in --prior")
            try:
                a, b = (float(v) for v in ab.split(","))
            except ValueError as exc:
                raise UsageError(f"--prior {item!r}: expected two numbers") from exc
            out[name] = GammaPrior(a, b)
    return out


def _hmc_pipeline(data: Dataset, opts) -> tuple:
    """Shared by fit-bayes and compat: OMPs, priors, posterior chains."""
    model = competitor("bfm")
    fit = fit_mle(model, data, n_starts=opts["n-starts"], seed=opts["seed"])
    priors = list(default_priors(fit.params))
    overrides = _parse_prior_overrides(opts.get("prior"), model.param_names)
    for i, nm in enumerate(model.param_names):
        if nm in overrides:
            priors[i] = overrides[nm]
    config = HmcConfig(
        epsilon=opts["epsilon"],
        leapfrog_steps=opts["leapfrog-steps"],
        iterations=opts["iterations"],
        warmup=opts["warmup"],
        chains=opts["chains"],
        seed=opts["seed"],
    )
    chains = hmc_run(data, tuple(priors), config, fit.params)
    return model, fit, priors, chains


def _single_chain_summary(draws: np.ndarray) -> dict:
    """Moments and HPD for one chain; R-hat needs >= 2 chains."""
    from .hmc import _shortest_interval

    flat = draws.reshape(-1, draws.shape[-1])
    hpd = np.array([_shortest_interval(flat[:, j]) for j in range(flat.shape[1])])
    return {
        "mean": flat.mean(axis=0),
        "sd": flat.std(axis=0, ddof=1),
        "hpd95": hpd,
        "rhat": None,
    }


def _cmd_fit_bayes(args) -> int:
    opts = _resolve(args, "fit-bayes")
    data = _load_data(opts)
    run = _Run("fit-bayes", opts)
    model, fit, priors, chains = _hmc_pipeline(data, opts)

    for i, bad in enumerate(chains.unhealthy):
        if bad:
            print(
                f"warning: chain {i} unhealthy (acceptance "
                f"{chains.accept_rate[i]:.3f}, divergences {chains.divergences[i]})",
                file=sys.stderr,
            )
    if chains.draws.shape[0] >= 2:
        summ = summarize(chains)
        mean, sd, hpd, rhat = summ.mean, summ.sd, summ.hpd95, list(map(float, summ.rhat))
    else:
        single = _single_chain_summary(chains.draws)
        mean, sd, hpd, rhat = single["mean"], single["sd"], single["hpd95"], None

    names = model.param_names
    report = {
        "dataset": _dataset_block(data),
        "omps": dict(zip(names, map(float, fit.params))),
        "priors": {nm: {"a": pr.a, "b": pr.b} for nm, pr in zip(names, priors)},
        "chains": chains.draws.shape[0],
        "kept_per_chain": chains.draws.shape[1],
        "accept_rate": list(map(float, chains.accept_rate)),
        "divergences": list(map(int, chains.divergences)),
        "unhealthy": list(map(bool, chains.unhealthy)),
        "epsilon_used": list(map(float, chains.epsilon_used)),
        "posterior_mean": dict(zip(names, map(float, mean))),
        "posterior_sd": dict(zip(names, map(float, sd))),
        "hpd95": {nm: [float(lo), float(hi)] for nm, (lo, hi) in zip(names, hpd)},
        "rhat": dict(zip(names, rhat)) if rhat is not None else None,
        "seed": opts["seed"],
    }
    run.write_json("posterior.json", report)

    lines = [
        f"dataset: {data.name or '(unnamed)'} (n={data.n})    "
        f"chains: {chains.draws.shape[0]}    kept/chain: {chains.draws.shape[1]}",
        "acceptance: " + " ".join(f"{a:.3f}" for a in chains.accept_rate),
        "divergences: " + " ".join(str(d) for d in chains.divergences),
        "",
        f"{'param':<10s}{'mean':>12s}{'sd':>12s}        95% HPD{'':10s}{'R-hat':>8s}",
    ]
    for j, nm in enumerate(names):
        rh = f"{rhat[j]:8.4f}" if rhat is not None else "     n/a"
        lines.append(
            f"{nm:<10s}{mean[j]:>12.6g}{sd[j]:>12.6g}   "
            f"[{hpd[j][0]:.6g}, {hpd[j][1]:.6g}]   {rh}"
        )
    if rhat is None:
        lines.append("")
        lines.append("R-hat unavailable: between-chain variance needs at least two chains.")
    run.write_text("posterior.txt", "\n".join(lines) + "\n")

    if opts["dump-draws"]:
        rows = ["chain,draw," + ",".join(names)]
        n_chains, kept, _ = chains.draws.shape
        for c in range(n_chains):
            for k in range(kept):
                vals = ",".join(repr(float(v)) for v in chains.draws[c, k])
                rows.append(f"{c},{k},{vals}")
        run.write_text("draws.csv", "\n".join(rows) + "\n")
    run.finish()
    print(
        f"fit-bayes: {chains.draws.shape[0]} chains x {chains.draws.shape[1]} kept -> {run.out_dir}"
    )
    return 0


# ---------------------------------------------------------------------------
# risks
# ---------------------------------------------------------------------------

def _parse_params(text) -> BfmParams:
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError as exc:
        raise UsageError(f"--params expects four numbers, got {text!r}") from exc
    if len(vals) != 4:
        raise UsageError("--params expects nu,theta,tau,zeta")
    return BfmParams.from_array(vals)


def _cmd_risks(args) -> int:
    opts = _resolve(args, "risks")
    if not opts["params"] and not (opts["data"] or opts["dataset"]):
        raise UsageError("risks needs --params nu,theta,tau,zeta or a dataset to fit")
    data = None
    if opts["data"] or opts["dataset"]:
        data = _load_data(opts)
    run = _Run("risks", opts)
    if opts["params"]:
        p = _parse_params(opts["params"])
    else:
        fit = fit_mle(competitor("bfm"), data, n_starts=12, seed=opts["seed"])
        p = BfmParams.from_array(fit.params)

    p1 = risk_p1(p)
    p3 = risk_p3(p)
    mc = risk_mc(p, draws=opts["mc-draws"], seed=opts["seed"])

    if data is not None:
        lo_x = float(np.min(data.times))
        hi_x = float(np.max(data.times))
    else:
        lo_x = bfm_quantile(0.001, p)
        hi_x = bfm_quantile(0.999, p)
    xs = np.geomspace(lo_x, hi_x, opts["curve-points"])
    curve = [risk_p2(float(x), p) for x in xs]
    rows = ["x,f1,f2"]
    for x, est in zip(xs, curve):
        rows.append(f"{float(x)!r},{est.f1!r},{est.f2!r}")
    run.write_text("p2_curve.csv", "\n".join(rows) + "\n")

    emp = None
    if data is not None:
        counts = data.status_counts()
        if counts["c1"] + counts["c2"] > 0:
            emp = empirical_risks(data)

    report = {
        "params": {nm: getattr(p, nm) for nm in ("nu", "theta", "tau", "zeta")},
        "incidence_quadrature": {"f1": p1.f1, "f2": p1.f2},
        "incidence_series": {
            "f1": p3.f1,
            "f2": p3.f2,
            "converged": bool(p3.series_f1.converged and p3.series_f2.converged),
            "terms": [p3.series_f1.terms_used, p3.series_f2.terms_used],
        },
        "monte_carlo": {
            "f1": mc.f1, "f2": mc.f2,
            "stderr": mc.stderr, "draws": opts["mc-draws"],
        },
        "proportion_curve": "p2_curve.csv",
        "empirical": {"f1": emp[0], "f2": emp[1]} if emp else None,
        "seed": opts["seed"],
    }
    run.write_json("risks.json", report)

    flag = "yes" if report["incidence_series"]["converged"] else "NO (region-limited)"
    lines = [
        "params: " + "  ".join(
            f"{nm}={getattr(p, nm):.6g}" for nm in ("nu", "theta", "tau", "zeta")
        ),
        "",
        f"{'method':<22s}{'f1':>12s}{'f2':>12s}   note",
        f"{'incidence (quad)':<22s}{p1.f1:>12.6f}{p1.f2:>12.6f}   sum={p1.f1 + p1.f2:.6f}",
        f"{'incidence (series)':<22s}{p3.f1:>12.6f}{p3.f2:>12.6f}   converged: {flag}",
        f"{'monte-carlo':<22s}{mc.f1:>12.6f}{mc.f2:>12.6f}   "
        f"stderr={mc.stderr:.2g}, draws={opts['mc-draws']}",
    ]
    if emp:
        lines.append(f"{'empirical':<22s}{emp[0]:>12.6f}{emp[1]:>12.6f}   labeled failures only")
    lines.append("")
    lines.append("hazard-share curve f_k(x) = r_k(x)/r(x): p2_curve.csv")
    run.write_text("risks.txt", "\n".join(lines) + "\n")
    run.finish()
    print(f"risks: f1={p1.f1:.4f} f2={p1.f2:.4f} -> {run.out_dir}")
    return 0


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def _kaplan_meier(data: Dataset) -> tuple:
    """Product-limit reliability estimate at the distinct failure times."""
    order = np.argsort(data.times, kind="stable")
    times = data.times[order]
    failed = data.is_failure[order]
    at_risk = data.n
    sf = 1.0
    xs, ys = [], []
    i = 0
    while i < times.size:
        t = times[i]
        d = 0
        c = 0
        while i < times.size and times[i] == t:
            if failed[i]:
                d += 1
            else:
                c += 1
            i += 1
        if d > 0:
            sf *= 1.0 - d / at_risk
            xs.append(t)
            ys.append(sf)
        at_risk -= d + c
    return np.array(xs), np.array(ys)


def _km_mrl(km_x: np.ndarray, km_sf: np.ndarray) -> np.ndarray:
    """Mean residual life of the KM curve, truncated at the last event."""
    sf_left = np.concatenate(([1.0], km_sf[:-1]))
    seg = np.diff(np.concatenate(([0.0], km_x))) * sf_left
    tail = np.concatenate((np.cumsum(seg[::-1])[::-1][1:], [0.0]))
    return tail / np.where(km_sf > 0.0, km_sf, np.nan)


def _model_curves(model, params, xs) -> tuple:
    sf = np.asarray(model.sf(xs, params), dtype=float)
    frf = np.asarray(model.frf(xs, params), dtype=float)
    # plot-quality mean residual life: trapezoid over a dense grid extended
    # until the survival mass is exhausted
    hi = float(xs[-1])
    for _ in range(60):
        if float(model.sf(hi, params)) < 1e-9:
            break
        hi *= 2.0
    dense = np.linspace(0.0, hi, 8192)
    sf_d = np.asarray(model.sf(dense, params), dtype=float)
    cum = np.concatenate(([0.0], np.cumsum((sf_d[1:] + sf_d[:-1]) * 0.5 * np.diff(dense))))
    total = cum[-1]
    tail_at = np.interp(xs, dense, cum)
    sf_at = np.clip(sf, 1e-300, None)
    mrl = (total - tail_at) / sf_at
    return sf, frf, mrl


def _cmd_compare(args) -> int:
    opts = _resolve(args, "compare")
    names = [nm.strip() for nm in str(opts["models"]).split(",") if nm.strip()]
    if len(names) < 2:
        raise UsageError("compare needs at least two models")
    for nm in names:
        if nm not in all_model_names():
            raise UsageError(f"unknown model {nm!r}; have {all_model_names()}")
    data = _load_data(opts)
    run = _Run("compare", opts)
    report = compare_models(
        data, model_names=names, n_boot=opts["bootstrap"],
        n_starts=opts["n-starts"], seed=opts["seed"],
    )
    for nm, msg in report.failures.items():
        print(f"warning: {nm} fit failed ({msg}); ranked without it", file=sys.stderr)

    machine = {
        "dataset": _dataset_block(data),
        "models": {
            nm: {
                "params": dict(zip(fit.param_names, map(float, fit.params))),
                "std_devs": dict(zip(fit.param_names, map(float, fit.std_devs))),
                "nll": float(fit.nll),
                "criteria": report.criteria[nm],
                "gof": report.gof[nm],
                "pvalues": report.pvalues.get(nm),
            }
            for nm, fit in report.fits.items()
        },
        "failures": report.failures,
        "ranks": report.ranks,
        "verdict": report.verdict,
        "seed": opts["seed"],
    }
    run.write_json("comparison.json", machine)

    metrics = ("nll", "aic", "bic", "bc", "ks", "ad", "cvm")
    table = report.metric_table()
    header = f"{'model':<10s}" + "".join(f"{m:>12s}" for m in metrics) + f"{'avg rank':>12s}"
    lines = [
        f"dataset: {data.name or '(unnamed)'} (n={data.n}, failures={data.n_failures})",
        "",
        header,
    ]
    for nm in report.verdict:
        row = f"{nm:<10s}" + "".join(f"{table[nm][m]:>12.4f}" for m in metrics)
        row += f"{report.ranks['mean'][nm]:>12.2f}"
        lines.append(row)
    for nm, msg in report.failures.items():
        lines.append(f"{nm:<10s}  fit failed: {msg}")
    lines.append("")
    lines.append("best model per average rank: " + report.verdict[0])
    run.write_text("comparison.txt", "\n".join(lines) + "\n")

    # fitted curves overlaid with the empirical ones
    km_x, km_sf = _kaplan_meier(data)
    fail_t = np.sort(data.failure_times)
    xs = np.geomspace(fail_t[0], float(np.max(data.times)), 96)
    rf_series = [PlotSeries("empirical (KM)", "rf", km_x, km_sf)]
    frf_series = []
    mrl_series = [
        PlotSeries("empirical (KM)", "mrl", km_x, _km_mrl(km_x, km_sf))
    ]
    uniq, counts = np.unique(fail_t, return_counts=True)
    if uniq.size > 1:
        # crude empirical hazard: event share per unit time between failures
        at_risk = np.array(
            [np.count_nonzero(data.times >= t) for t in uniq], dtype=float
        )
        gaps = np.diff(np.concatenate(([0.0], uniq)))
        frf_series.append(
            PlotSeries("empirical (NA)", "frf", uniq, counts / (at_risk * gaps))
        )
    for nm, fit in report.fits.items():
        model = competitor(nm)
        sf, frf, mrl = _model_curves(model, fit.params, xs)
        rf_series.append(PlotSeries(f"{nm} fitted", "rf", xs, sf))
        frf_series.append(PlotSeries(f"{nm} fitted", "frf", xs, frf))
        mrl_series.append(PlotSeries(f"{nm} fitted", "mrl", xs, mrl))
    run.write_series("series.csv", rf_series + frf_series + mrl_series)
    run.write_series("rf.svg", rf_series, format="svg")
    run.write_series("frf.svg", frf_series, format="svg")
    run.write_series("mrl.svg", mrl_series, format="svg")
    run.finish()
    print(
        f"compare: best={report.verdict[0]} on {data.name or 'dataset'} -> {run.out_dir}"
    )
    return 0


# ---------------------------------------------------------------------------
# compat (posterior-predictive compatibility check)
# ---------------------------------------------------------------------------

def _cmd_compat(args) -> int:
    opts = _resolve(args, "compat")
    if opts["sets"] < 1:
        raise UsageError("--sets must be at least 1")
    data = _load_data(opts)
    run = _Run("compat", opts)
    model, fit, priors, chains = _hmc_pipeline(data, opts)
    mean = chains.draws.reshape(-1, 4).mean(axis=0)
    p_mean = BfmParams.from_array(mean)

    sets = posterior_predictive_sets(
        chains, n_obs=data.n, count=opts["sets"], seed=opts["seed"]
    )
    km_x, km_sf = _kaplan_meier(data)
    xs = np.geomspace(float(np.min(data.times)), float(np.max(data.times)), 96)
    rf_series = [
        PlotSeries("observed (KM)", "rf", km_x, km_sf),
        PlotSeries("posterior-mean fit", "rf", xs, bfm_sf(xs, p_mean)),
    ]
    frf_series = [PlotSeries("posterior-mean fit", "frf", xs, bfm_frf(xs, p_mean))]
    env = []
    from .models import _refit_warm

    for k, sim in enumerate(sets):
        p_k = _refit_warm(competitor("bfm"), sim, mean)
        pk = BfmParams.from_array(p_k)
        sf_k = bfm_sf(xs, pk)
        env.append(np.interp(km_x, xs, sf_k))
        rf_series.append(PlotSeries(f"predictive set {k + 1}", "rf", xs, sf_k))
        frf_series.append(PlotSeries(f"predictive set {k + 1}", "frf", xs, bfm_frf(xs, pk)))
    env = np.array(env)
    inside = (km_sf >= env.min(axis=0)) & (km_sf <= env.max(axis=0))
    coverage = float(np.mean(inside))

    run.write_series("rf_series.csv", rf_series)
    run.write_series("frf_series.csv", frf_series)
    run.write_series("rf.svg", rf_series, format="svg")
    run.write_series("frf.svg", frf_series, format="svg")
    report = {
        "dataset": _dataset_block(data),
        "posterior_mean": dict(zip(model.param_names, map(float, mean))),
        "sets": opts["sets"],
        "coverage": coverage,
        "coverage_note": (
            "share of Kaplan-Meier reliability points inside the min/max "
            "envelope of the predictive-set reliability curves"
        ),
        "seed": opts["seed"],
    }
    run.write_json("compat.json", report)
    run.finish()
    print(f"compat: coverage={coverage:.3f} over {opts['sets']} sets -> {run.out_dir}")
    return 0


# ---------------------------------------------------------------------------
# ttt
# ---------------------------------------------------------------------------

def _ttt_shape(u: np.ndarray, phi: np.ndarray, smoothing) -> tuple:
    """Hazard-direction classification from the scaled TTT curve.

    The large-sample TTT slope satisfies phi'(u) = 1 / (mu * r(F^-1(u))),
    so 1/phi' tracks the failure rate's direction.  The curve is smoothed
    by a spline before differentiating; that is what makes the sign scan
    usable on stairstep empirical data.
    """
    if u.size < 8:
        return (), "other"
    from scipy.interpolate import UnivariateSpline

    s = smoothing if smoothing is not None else u.size * 2e-4
    spl = UnivariateSpline(u, phi, k=4, s=s)
    dspl = spl.derivative(1)

    def proxy(v):
        slope = float(dspl(v))
        return 1.0 / max(slope, 1e-9)

    cp = find_change_points(proxy, (float(u[0]), float(u[-2])), grid_size=128)
    return cp.locations, cp.shape_label


def _cmd_ttt(args) -> int:
    opts = _resolve(args, "ttt")
    data = _load_data(opts)
    run = _Run("ttt", opts)
    strata = [s.strip() for s in str(opts["strata"]).split(",") if s.strip()]
    valid = ("c1", "c2", "cu", "combined")
    for s in strata:
        if s not in valid:
            raise UsageError(f"unknown stratum {s!r}; have {valid}")
    series = []
    shapes = {}
    for stratum in strata:
        if stratum == "combined":
            times = data.failure_times
        else:
            times = data.times[data.status == stratum]
        if times.size == 0:
            raise DataFormatError(f"stratum {stratum!r} has no failures")
        curve = scaled_ttt(times)
        pts = np.array(curve.points)
        series.append(PlotSeries(f"{stratum}", "ttt", pts[:, 0], pts[:, 1]))
        locs, label = _ttt_shape(pts[:, 0], pts[:, 1], opts["smoothing"])
        shapes[stratum] = {"shape": label, "change_points": [float(v) for v in locs]}
    run.write_series("ttt_series.csv", series)
    run.write_series("ttt.svg", series, format="svg")
    report = {
        "dataset": _dataset_block(data),
        "strata": shapes,
    }
    run.write_json("ttt.json", report)
    run.finish()
    labels = ", ".join(f"{k}:{v['shape']}" for k, v in shapes.items())
    print(f"ttt: {labels} -> {run.out_dir}")
    return 0


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--data", help="dataset file path")
    sub.add_argument("--dataset", help=f"bundled dataset name {bundled_names()}")
    sub.add_argument("--out-dir", help="output directory (default $BFM_OUT_DIR or .)")
    sub.add_argument("--seed", type=int, help="RNG seed (default 0)")
    sub.add_argument("--config", help="key=value config file mirroring the flags")


def _add_hmc_flags(sub):
    sub.add_argument("--chains", type=int, help="number of chains (default 4)")
    sub.add_argument("--iterations", type=int, help="HMC iterations per chain (default 2000)")
    sub.add_argument("--warmup", type=int, help="discarded warmup iterations (default 1000)")
    sub.add_argument("--epsilon", type=float, help="leapfrog step size (default 0.02)")
    sub.add_argument("--leapfrog-steps", type=int, help="leapfrog steps per proposal (default 25)")
    sub.add_argument("--n-starts", type=int, help="MLE starts for the OMP stage (default 12)")
    sub.add_argument(
        "--prior", action="append",
        help="gamma prior override, name=a,b (repeatable; default centers on the OMPs)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bfm",
        description="Competing-risks reliability toolkit for the bi-failure-modes lifetime model",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("fit-mle", help="maximum-likelihood fit with St-Devs, ACIs, criteria")
    _add_common(sub)
    sub.add_argument("--model", help=f"model name (default bfm; have {all_model_names()})")
    sub.add_argument("--n-starts", type=int, help="multi-start count (default 12)")
    sub.set_defaults(func=_cmd_fit_mle)

    sub = subs.add_parser("fit-bayes", help="HMC posterior with summaries and diagnostics")
    _add_common(sub)
    _add_hmc_flags(sub)
    sub.add_argument(
        "--dump-draws", action="store_const", const=True,
        help="also write every kept draw to draws.csv",
    )
    sub.set_defaults(func=_cmd_fit_bayes)

    sub = subs.add_parser("risks", help="cause-specific failure probabilities (four routes)")
    _add_common(sub)
    sub.add_argument("--params", help="explicit nu,theta,tau,zeta (skips the fit)")
    sub.add_argument("--mc-draws", type=int, help="Monte Carlo draws (default 1000000)")
    sub.add_argument("--curve-points", type=int, help="points on the hazard-share curve (default 64)")
    sub.set_defaults(func=_cmd_risks)

    sub = subs.add_parser("compare", help="fit and rank models on the seven metrics")
    _add_common(sub)
    sub.add_argument("--models", help="comma-separated model names (default: all six)")
    sub.add_argument("--bootstrap", type=int, help="bootstrap replicates for GOF p-values (default 0)")
    sub.add_argument("--n-starts", type=int, help="multi-start count per model (default 12)")
    sub.set_defaults(func=_cmd_compare)

    sub = subs.add_parser("compat", help="posterior-predictive compatibility curves")
    _add_common(sub)
    _add_hmc_flags(sub)
    sub.add_argument("--sets", type=int, help="number of predictive sets (default 5)")
    sub.set_defaults(func=_cmd_compat)

    sub = subs.add_parser("ttt", help="scaled TTT curves per cause and combined")
    _add_common(sub)
    sub.add_argument("--strata", help="comma list from c1,c2,cu,combined (default c1,c2,combined)")
    sub.add_argument("--smoothing", type=float, help="spline smoothing for shape classification")
    sub.set_defaults(func=_cmd_ttt)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (
        RuntimeError,
        ArithmeticError,
        SingularInformation,
        QuadratureError,
        np.linalg.LinAlgError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
