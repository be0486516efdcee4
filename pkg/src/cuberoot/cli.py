"""Command line front end.

Every subcommand writes one JSON document (``schema_version`` "v1") that
embeds the fully resolved configuration. Bulk tables go to CSV files next to
the JSON output. Exit codes: 0 success, 2 configuration error, 3 data error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .core import BandwidthRule, Kernel, TimeSeriesSample
from .dgp import DgpSpec, generate
from .errors import ConfigError, CubeRootError, InvalidSpec
from .estimators import ESTIMATORS, EstimatorConfig, IntervalEstimate, SetEstimate, fit
from .inference import criterion_confidence_set, subsample_ci
from .limitlaw import (
    LimitLawSpec,
    abs_projection,
    abs_weighted_second_moment,
    build_kernel_hough,
    density_derivatives,
    lms_location_limit,
    normal_pdf,
    plugin_draws,
    simulate_argmax_law,
)
from .montecarlo import (
    ci_covers,
    confset_covers,
    coverage_experiment,
    limit_comparison,
    rate_experiment,
    set_contains_identified,
)

SCHEMA_VERSION = "v1"
STOCHASTIC = {"mc-rate", "mc-coverage", "mc-limit", "limit-sim", "gen"}
SUBCOMMANDS = (
    "estimate",
    "set-estimate",
    "subsample",
    "confset",
    "mc-rate",
    "mc-coverage",
    "mc-limit",
    "limit-sim",
    "gen",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidSpec(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with default values for any flag (keys use underscores)")
    p.add_argument("--estimator")
    p.add_argument("--input", help="CSV file with a header row")
    p.add_argument("--dgp", help="model id, inline JSON or path to a JSON DGP spec")
    p.add_argument("--n", help="sample size (comma list for mc-rate)")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--bandwidth-c", type=float)
    p.add_argument("--bandwidth-a", type=float)
    p.add_argument("--kernel")
    p.add_argument("--cutoff", type=float)
    p.add_argument("--block-len", type=int)
    p.add_argument("--grid", help="axes as lo:hi:m, separated by ';'")
    p.add_argument("--workers", type=int)
    p.add_argument("--output", help="JSON result path (stdout if omitted)")
    p.add_argument("--dump-blocks", action="store_true", default=None)
    p.add_argument("--at", type=float, help="evaluation point (grenander)")
    p.add_argument("--draws", type=int, help="argmax draws M (limit-sim, mc-limit)")
    p.add_argument("--grid-points", type=int, help="limit grid points per axis")
    p.add_argument("--radius", type=float, help="limit grid radius K")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cuberoot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in SUBCOMMANDS:
        _add_common(sub.add_parser(name))
    return parser


# --------------------------------------------------------------------------
# config resolution


def _load_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if args.config:
        try:
            extra = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        for k, v in extra.items():
            k = k.replace("-", "_")
            if k not in cfg:
                raise ConfigError(f"unknown config key {k!r}")
            if cfg[k] is None:
                cfg[k] = v
    return cfg


def _parse_dgp(text: str) -> dict[str, Any]:
    text = str(text).strip()
    if text.startswith("{"):
        d = json.loads(text)
    elif os.path.exists(text):
        d = json.loads(Path(text).read_text())
    else:
        d = {"model": text}
    if not isinstance(d, dict) or "model" not in d:
        raise ConfigError("DGP spec needs a 'model' field")
    return d


def _dgp_spec(cfg, n: int | None = None, seed: int | None = None) -> DgpSpec:
    d = _parse_dgp(cfg["dgp"])
    n = n if n is not None else int(d.get("n", _ns(cfg)[0] if cfg.get("n") else 0))
    if n <= 0:
        raise ConfigError("sample size --n is required with --dgp")
    return DgpSpec(d["model"], n, int(seed if seed is not None else d.get("seed", cfg.get("seed") or 0)), d.get("params", {}))


def _ns(cfg) -> list[int]:
    raw = cfg.get("n")
    if raw is None:
        raise ConfigError("--n is required")
    vals = raw if isinstance(raw, list) else str(raw).split(",")
    try:
        return [int(v) for v in vals]
    except ValueError as exc:
        raise ConfigError(f"bad --n {raw!r}") from exc


def _parse_grid(text) -> tuple[tuple[float, ...], ...]:
    if isinstance(text, list):
        return tuple(tuple(float(v) for v in ax) for ax in text)
    axes = []
    for part in str(text).split(";"):
        try:
            lo, hi, m = part.split(":")
            axes.append(tuple(np.linspace(float(lo), float(hi), int(m)).tolist()))
        except ValueError as exc:
            raise ConfigError(f"bad grid axis {part!r}; expected lo:hi:m") from exc
    return tuple(axes)


def _estimator_config(cfg) -> EstimatorConfig:
    name = cfg.get("estimator")
    if not name:
        raise ConfigError("--estimator is required")
    if name not in ESTIMATORS:
        raise ConfigError(f"unknown estimator {name!r}; choose from {sorted(ESTIMATORS)}")
    bw = None
    if cfg.get("bandwidth_c") is not None or cfg.get("bandwidth_a") is not None:
        base = ESTIMATORS[name].default_bandwidth
        bw = BandwidthRule(
            cfg["bandwidth_c"] if cfg.get("bandwidth_c") is not None else base.c,
            cfg["bandwidth_a"] if cfg.get("bandwidth_a") is not None else base.a,
        )
    kw: dict[str, Any] = {}
    if cfg.get("kernel"):
        kw["kernel"] = Kernel(cfg["kernel"])
    if cfg.get("grid") is not None and ESTIMATORS[name].kind == "set":
        kw["grid"] = _parse_grid(cfg["grid"])
    return EstimatorConfig(name, bandwidth=bw, cutoff=cfg.get("cutoff"), at=cfg.get("at"), **kw)


def _sample(cfg) -> tuple[TimeSeriesSample, dict[str, Any]]:
    has_in, has_dgp = cfg.get("input") is not None, cfg.get("dgp") is not None
    if has_in == has_dgp:
        raise ConfigError("give exactly one of --input and --dgp")
    if has_in:
        return TimeSeriesSample.from_csv(cfg["input"]), {"input": str(cfg["input"])}
    if cfg.get("seed") is None:
        raise ConfigError("--seed is required with --dgp")
    spec = _dgp_spec(cfg)
    return generate(spec), {"dgp": spec.to_dict()}


def _require_seed(command: str, cfg) -> None:
    if command in STOCHASTIC and cfg.get("seed") is None:
        raise ConfigError(f"{command} needs --seed")


def _workers(cfg) -> int:
    w = cfg.get("workers")
    return int(w) if w else (os.cpu_count() or 1)


# --------------------------------------------------------------------------
# result encoding


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


def _scalar_or_list(a) -> Any:
    a = np.asarray(a, dtype=float).reshape(-1)
    return float(a[0]) if a.size == 1 else a.tolist()


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def _table_path(cfg, suffix: str) -> Path | None:
    if not cfg.get("output"):
        return None
    out = Path(cfg["output"])
    return out.with_name(out.stem + suffix + ".csv")


# --------------------------------------------------------------------------
# subcommands


def _cmd_estimate(cfg):
    sample, src = _sample(cfg)
    ecfg = _estimator_config(cfg)
    if ecfg.spec.kind == "set":
        raise ConfigError("use set-estimate for set estimators")
    est = fit(sample, ecfg)
    if isinstance(est, IntervalEstimate):
        res = {
            "estimate": est.theta_hat,
            "nu_hat": est.nu_hat,
            "region": [est.theta_hat - est.nu_hat, est.theta_hat + est.nu_hat],
            "coverage": est.coverage,
        }
    else:
        res = {"estimate": _scalar_or_list(est.theta_hat), "value": est.value}
        if est.report is not None:
            res["method"] = est.report.method
            res["approximate"] = est.report.approximate
    res.update(effective_size=est.effective_size, bandwidth=est.bandwidth, n=sample.n)
    return res, src, ecfg


def _cmd_set_estimate(cfg):
    sample, src = _sample(cfg)
    if cfg.get("grid") is None:
        raise ConfigError("set-estimate needs --grid")
    ecfg = _estimator_config(cfg)
    if ecfg.spec.kind != "set":
        raise ConfigError(f"{ecfg.estimator} is not a set estimator")
    est: SetEstimate = fit(sample, ecfg)
    pts = est.grid.points()
    res = {
        "cutoff": est.cutoff,
        "threshold": est.threshold,
        "criterion_max": est.criterion_max,
        "n_selected": int(pts.shape[0]),
        "bounds": [pts.min(axis=0).tolist(), pts.max(axis=0).tolist()] if pts.size else None,
        "mask": est.grid.mask.reshape(-1).astype(int).tolist(),
        "n": sample.n,
    }
    return res, src, ecfg


def _cmd_subsample(cfg):
    sample, src = _sample(cfg)
    ecfg = _estimator_config(cfg)
    alpha = cfg.get("alpha") if cfg.get("alpha") is not None else 0.1
    ci = subsample_ci(sample, ecfg, cfg.get("block_len"), alpha, keep_stats=bool(cfg.get("dump_blocks")))
    res = {
        "theta_hat": ci.theta_hat,
        "lower": ci.lower,
        "upper": ci.upper,
        "block_len": ci.s,
        "alpha": ci.alpha,
        "n_blocks": ci.n_blocks,
        "rate_exponent": ci.rate_exponent,
        "rate_correction": ci.rate_correction,
        "chart": "angle" if ecfg.spec.sphere else "coordinates",
    }
    if cfg.get("dump_blocks") and ci.stats is not None:
        res["blocks"] = {"starts": ci.starts, "stats": ci.stats}
    return res, src, ecfg


def _cmd_confset(cfg):
    sample, src = _sample(cfg)
    if cfg.get("grid") is None:
        raise ConfigError("confset needs --grid")
    ecfg = _estimator_config(cfg)
    alpha = cfg.get("alpha") if cfg.get("alpha") is not None else 0.1
    cs = criterion_confidence_set(
        sample, ecfg, _parse_grid(cfg["grid"]), cfg.get("block_len"), alpha, keep_blocks=bool(cfg.get("dump_blocks"))
    )
    res = {
        "mask": cs.grid.mask.reshape(-1).astype(int).tolist(),
        "n_selected": int(cs.grid.mask.sum()),
        "Q": cs.Q,
        "q": cs.q,
        "block_len": cs.s,
        "alpha": cs.alpha,
        "n_blocks": cs.n_blocks,
        "note": cs.note,
    }
    if cfg.get("dump_blocks") and cs.block_Q is not None:
        res["blocks"] = {"Q": cs.block_Q}
    return res, src, ecfg


def _cmd_mc_rate(cfg):
    ecfg = _estimator_config(cfg)
    if cfg.get("dgp") is None:
        raise ConfigError("mc-rate needs --dgp")
    ns = _ns(cfg)
    tpl = _dgp_spec(cfg, n=ns[0])
    rep = rate_experiment(tpl, ecfg, ns, int(cfg.get("reps") or 200), int(cfg["seed"]), _workers(cfg))
    path = _table_path(cfg, "_rates")
    if path is not None:
        _write_csv(path, ["n", "h", "effective_size", "rmse", "reps", "failures"], rep.csv_rows())
    return rep.to_dict(), {"dgp": tpl.to_dict(), "n": ns}, ecfg


def _cmd_mc_coverage(cfg):
    ecfg = _estimator_config(cfg)
    if cfg.get("dgp") is None:
        raise ConfigError("mc-coverage needs --dgp")
    tpl = _dgp_spec(cfg, n=_ns(cfg)[0])
    alpha = cfg.get("alpha") if cfg.get("alpha") is not None else 0.1
    if ecfg.spec.kind == "set":
        if ecfg.grid is None:
            raise ConfigError("set coverage needs --grid")
        covers, kind = set_contains_identified(ecfg), "identified_set_containment"
    elif cfg.get("grid") is not None:
        covers = confset_covers(ecfg, _parse_grid(cfg["grid"]), cfg.get("block_len"), alpha)
        kind = "confidence_set"
    else:
        covers, kind = ci_covers(ecfg, cfg.get("block_len"), alpha), "subsample_ci"
    rep = coverage_experiment(tpl, covers, int(cfg.get("reps") or 200), int(cfg["seed"]), _workers(cfg))
    return {**rep.to_dict(), "kind": kind}, {"dgp": tpl.to_dict()}, ecfg


def _limit_spec(ecfg: EstimatorConfig, tpl: DgpSpec, cfg) -> LimitLawSpec:
    K = float(cfg.get("radius") or 3.0)
    p = tpl.params
    if ecfg.estimator == "lms_location" and tpl.model == "lms" and p["mode"] == "location":
        return lms_location_limit(float(p["scale"]), K, int(cfg.get("grid_points") or 401))
    if ecfg.estimator == "hough" and tpl.model == "hough_line":
        trunc = float(p["trunc"])
        g0, _, g2 = density_derivatives(lambda t: normal_pdf(t, 1.0, trunc), 0.0)
        x = plugin_draws(lambda rng, k: np.column_stack([np.ones(k), rng.standard_normal(k)]))
        return build_kernel_hough(
            g0, g2, abs_weighted_second_moment(x), abs_projection(x), K, int(cfg.get("grid_points") or 41)
        )
    raise ConfigError(
        "limit laws are available for lms_location with the lms location model "
        "and for hough with the hough_line model"
    )


def _cmd_mc_limit(cfg):
    ecfg = _estimator_config(cfg)
    if cfg.get("dgp") is None:
        raise ConfigError("mc-limit needs --dgp")
    n = _ns(cfg)[0]
    tpl = _dgp_spec(cfg, n=n)
    spec = _limit_spec(ecfg, tpl, cfg)
    rep = limit_comparison(
        tpl, ecfg, n, int(cfg.get("reps") or 1000), spec, int(cfg.get("draws") or 5000), int(cfg["seed"]), _workers(cfg)
    )
    path = _table_path(cfg, "_samples")
    if path is not None:
        m = max(rep.estimator_sample.size, rep.limit_sample.size)
        col = lambda a, i: repr(float(a[i])) if i < a.size else ""
        _write_csv(path, ["estimator", "limit"], ([col(rep.estimator_sample, i), col(rep.limit_sample, i)] for i in range(m)))
    return rep.to_dict(), {"dgp": tpl.to_dict(), "n": n}, ecfg


def _cmd_limit_sim(cfg):
    ecfg = _estimator_config(cfg)
    if cfg.get("dgp") is None:
        raise ConfigError("limit-sim needs --dgp to fix the model law")
    tpl = DgpSpec(_parse_dgp(cfg["dgp"])["model"], 1, 0, _parse_dgp(cfg["dgp"]).get("params", {}))
    spec = _limit_spec(ecfg, tpl, cfg)
    sim = simulate_argmax_law(spec, int(cfg.get("draws") or 5000), int(cfg["seed"]))
    path = _table_path(cfg, "_argmax")
    if path is not None:
        _write_csv(path, [f"s{j + 1}" for j in range(spec.d)], sim.points.tolist())
    res = {
        "quantiles": {str(p): q for p, q in zip((0.05, 0.25, 0.5, 0.75, 0.95), sim.quantiles().tolist())},
        "boundary_mass": sim.boundary_mass,
        "jitter": sim.jitter,
        "K": sim.K,
        "m": sim.m,
        "d": spec.d,
        "draws": int(sim.points.shape[0]),
    }
    return res, {"dgp": tpl.to_dict()}, ecfg


def _cmd_gen(cfg):
    if cfg.get("dgp") is None:
        raise ConfigError("gen needs --dgp")
    spec = _dgp_spec(cfg, seed=cfg["seed"])
    sample = generate(spec)
    path = _table_path(cfg, "_data")
    if path is not None:
        sample.to_csv(path)
    res = {
        "n": sample.n,
        "schema": list(sample.schema),
        "means": {k: float(np.mean(sample[k])) for k in sample.schema},
        "data_csv": str(path) if path is not None else None,
    }
    return res, {"dgp": spec.to_dict()}, None


COMMANDS = {
    "estimate": _cmd_estimate,
    "set-estimate": _cmd_set_estimate,
    "subsample": _cmd_subsample,
    "confset": _cmd_confset,
    "mc-rate": _cmd_mc_rate,
    "mc-coverage": _cmd_mc_coverage,
    "mc-limit": _cmd_mc_limit,
    "limit-sim": _cmd_limit_sim,
    "gen": _cmd_gen,
}


def run(argv: Sequence[str] | None = None, stdout=None) -> int:
    """Execute one subcommand; returns the process exit code."""
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(list(argv) if argv is not None else None)
        if args.command is None:
            raise InvalidSpec(f"missing subcommand; choose from {', '.join(SUBCOMMANDS)}")
        cfg = _load_config(args)
        _require_seed(args.command, cfg)
        result, source, ecfg = COMMANDS[args.command](cfg)
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": args.command,
            "config": {
                "flags": cfg,
                "source": source,
                "estimator": ecfg.to_dict() if ecfg is not None else None,
            },
            "result": result,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
        if cfg.get("output"):
            Path(cfg["output"]).write_text(text, encoding="utf-8")
        else:
            stdout.write(text)
        return 0
    except CubeRootError as exc:
        print(f"error: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return 3
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
