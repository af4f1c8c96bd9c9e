"""Command-line entry point: ``latorbit <subcommand> --config cfg.json``."""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
import time

import numpy as np

from latorbit import __version__
from latorbit.config import (
    ConfigError,
    canonical_json,
    config_hash,
    direction_sets,
    load,
    resolve_threads,
    weight_pair,
)

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

HEADERS = {
    "count": "theta_id,T,count,predicted,ratio",
    "sandwich": "instance_id,T,lower,middle,upper,holds",
    "alpha": "lattice_id,alpha,rank,exact",
    "siegel": "function_id,analytic,mc_mean,mc_std_error",
    "volume": "region,method,value,std_error",
    "dyadic": "s,k,cover_size",
    "rate": "T,median_abs_error,normalized_error",
    "double-equi": "t,w,estimate,std_error,deviation",
}


def fmt(v) -> str:
    """Locale-free CSV field: shortest round-trip floats, ``4.0`` written as ``4``."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        s = repr(x)
        if s.endswith(".0"):
            s = s[:-2]
        return "0" if s == "-0" else s
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        x = float(v)
        return x if math.isfinite(x) else str(x)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    return v


# ---------------------------------------------------------------------------
# subcommands: each returns (rows, summary, exit_code)


def _need_grid(cfg):
    if not cfg["T_grid"]:
        raise ConfigError("T_grid must not be empty")
    return np.array(cfg["T_grid"], dtype=float)


def cmd_count(cfg, threads):
    from latorbit.counting import REGION_KINDS, schmidt_experiment

    wp = weight_pair(cfg)
    T = _need_grid(cfg)
    kind = cfg["region_kind"]
    if kind not in REGION_KINDS:
        raise ConfigError(f"region_kind must be one of {', '.join(REGION_KINDS)}")
    A, B = direction_sets(cfg, wp)
    if kind == "E_directional" and (A is None or B is None):
        raise ConfigError("E_directional needs both A and B")
    rep = schmidt_experiment(cfg["samples"], cfg["seed"], wp, cfg["c"], T, kind, A, B, threads=threads)
    q = rep.quantiles()
    summary = {
        "region_kind": kind,
        "extended_case": rep.extended_case,
        "per_T": [
            {"T": float(t), "predicted": float(p), "median_ratio": float(q[1, i]), "q05": float(q[0, i]), "q95": float(q[2, i])}
            for i, (t, p) in enumerate(zip(T, rep.predicted))
        ],
    }
    return list(rep.rows()), summary, EXIT_OK


def cmd_sandwich(cfg, threads):
    from concurrent.futures import ThreadPoolExecutor

    from latorbit.counting import SandwichResult, sample_theta, sandwich_check
    from latorbit.lattice import unipotent_lattice

    wp = weight_pair(cfg)
    T = _need_grid(cfg)
    r, c = cfg["r"], cfg["c"]
    if np.any(T <= r):
        raise ConfigError("every T must exceed r")
    A, B = direction_sets(cfg, wp)
    offset = float(cfg.get("sandwich", {}).get("fault_middle_offset", 0.0))

    def one(i):
        lat = unipotent_lattice(sample_theta(cfg["seed"], i, wp))
        return [sandwich_check(lat, A, B, r, c, float(t)) for t in T]

    if threads <= 1:
        res = [one(i) for i in range(cfg["samples"])]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            res = list(pool.map(one, range(cfg["samples"])))
    rows, fails = [], 0
    for i, per in enumerate(res):
        for t, s in zip(T, per):
            middle = s.middle + offset
            ok = SandwichResult.judge(s.lower, middle, s.upper)
            fails += not ok
            rows.append((i, float(t), s.lower, middle, s.upper, ok))
    summary = {"instances": len(rows), "failures": fails, "all_hold": fails == 0}
    return rows, summary, EXIT_OK if fails == 0 else EXIT_VIOLATION


def _lattices_from(cfg, wp):
    from latorbit._rng import rng_for
    from latorbit.geometry import WeightPair
    from latorbit.lattice import LatticeBasis, apply_flow, random_unimodular

    specs = cfg.get("alpha", {}).get("lattices", [{"identity": wp.d}])
    out = []
    for n, spec in enumerate(specs):
        if not isinstance(spec, dict) or len(spec) == 0:
            raise ConfigError("each lattice entry must be an object")
        if "basis" in spec:
            out.append(LatticeBasis(np.array(spec["basis"], dtype=float)))
        elif "identity" in spec:
            out.append(LatticeBasis.identity(int(spec["identity"])))
        elif "flow" in spec:
            d = int(spec.get("d", 2))
            w = wp if wp.d == d else WeightPair.equal(d - 1, 1)
            out.append(apply_flow(LatticeBasis(np.eye(d), wp=w), w, float(spec["flow"])))
        elif "random" in spec:
            d = int(spec.get("d", wp.d))
            for k in range(int(spec["random"])):
                out.append(random_unimodular(d, rng_for(cfg["seed"], n * 1_000_003 + k, 5)))
        else:
            raise ConfigError(f"unknown lattice entry {sorted(spec)}")
    return out


def cmd_alpha(cfg, threads):
    from latorbit.lattice import alpha

    wp = weight_pair(cfg)
    try:
        lats = _lattices_from(cfg, wp)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"alpha.lattices: {exc}") from None
    rows = []
    for i, L in enumerate(lats):
        a = alpha(L)
        rows.append((i, a.value, a.best_rank, a.exact))
    return rows, {"lattices": len(rows)}, EXIT_OK


def cmd_siegel(cfg, threads):
    from latorbit.counting import sample_theta
    from latorbit.geometry import region_from_dict
    from latorbit.siegel import RiemannFunction, siegel_transform_theta_batch, theta_average_identity

    wp = weight_pair(cfg)
    sec = cfg.get("siegel", {})
    n_mc = int(sec.get("mc_samples", cfg["samples"]))
    rows = []
    try:
        funcs = [
            RiemannFunction([(float(t["coef"]), region_from_dict(t["region"], wp)) for t in terms])
            for terms in sec.get("functions", [])
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"siegel.functions: {exc}") from None
    thetas = np.array([sample_theta(cfg["seed"], i, wp).entries for i in range(n_mc)])
    for i, f in enumerate(funcs):
        analytic, _ = theta_average_identity(f, wp)
        vals = siegel_transform_theta_batch(f, thetas, wp)
        se = float(vals.std(ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else 0.0
        rows.append((i, analytic, float(vals.mean()), se))
    return rows, {"functions": len(rows), "mc_samples": n_mc}, EXIT_OK


def cmd_volume(cfg, threads):
    from latorbit.geometry import region_from_dict, region_volume

    wp = weight_pair(cfg)
    sec = cfg.get("volume", {})
    method = sec.get("method", "closed_form")
    if method not in ("closed_form", "monte_carlo"):
        raise ConfigError("volume.method must be closed_form or monte_carlo")
    regions = sec.get("regions")
    if not regions:
        raise ConfigError("volume.regions must list at least one region")
    rows = []
    for spec in regions:
        try:
            reg = region_from_dict(spec, wp)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"volume.regions: {exc}") from None
        v, se = region_volume(reg, method, samples=int(sec.get("mc_samples", 1_000_000)), seed=cfg["seed"])
        rows.append((spec["kind"], method, v, se))
    return rows, {"regions": len(rows)}, EXIT_OK


def cmd_dyadic(cfg, threads):
    from latorbit.ergodic import dyadic_cover

    sec = cfg.get("dyadic", {})
    if "s" not in sec:
        raise ConfigError("dyadic.s is required")
    s = sec["s"]
    ks = sec.get("k") or list(range(1, 2**s))
    rows = []
    try:
        for k in ks:
            rows.append((s, k, len(dyadic_cover(int(k), s))))
    except ValueError as exc:
        raise ConfigError(f"dyadic: {exc}") from None
    return rows, {"s": s, "max_cover": max(r[2] for r in rows)}, EXIT_OK


def _ensemble(sec):
    from latorbit.ergodic import DynamicalEnsemble, IIDBlockEnsemble, MarkovBlockEnsemble

    name = sec.get("ensemble", "iid_block")
    if name == "iid_block":
        return IIDBlockEnsemble()
    if name == "markov":
        return MarkovBlockEnsemble(float(sec.get("rho", 0.5)))
    if name == "dynamical":
        return DynamicalEnsemble(float(sec.get("rho", 0.5)))
    raise ConfigError("rate.ensemble must be iid_block, markov or dynamical")


def cmd_rate(cfg, threads):
    from latorbit.ergodic import pointwise_rate_check

    sec = cfg.get("rate", {})
    ens = _ensemble(sec)
    T = _need_grid(cfg)
    if T[0] <= 1:
        raise ConfigError("rate needs every T above 1")
    rep = pointwise_rate_check(
        ens,
        T,
        int(sec.get("trials", cfg["samples"])),
        cfg["seed"],
        step=sec.get("step"),
        epsilon=float(sec.get("epsilon", 0.25)),
        threads=threads,
    )
    return list(rep.rows()), {"ensemble": ens.describe(), "slope": rep.slope}, EXIT_OK


def cmd_double_equi(cfg, threads):
    from latorbit.ergodic import box_density, double_equi_grid
    from latorbit.siegel import exp_ball_haar_mean, exp_ball_observable

    wp = weight_pair(cfg)
    if wp.d != 2:
        raise ConfigError("double-equi supports d = 2 only")
    sec = cfg.get("double_equi", {})
    rho = float(sec.get("rho", 0.5))
    if not 0 < rho <= 1:
        raise ConfigError("double_equi.rho must lie in (0, 1]")
    box = sec.get("box", {"lower": [0.0], "upper": [1.0]})
    try:
        f = box_density(box["lower"], box["upper"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"double_equi.box: {exc}") from None
    grid = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
    phi = exp_ball_observable(rho, wp)
    mu = exp_ball_haar_mean(rho)
    rep = double_equi_grid(
        wp,
        f,
        phi,
        phi,
        sec.get("t_grid", grid),
        sec.get("w_grid", grid),
        int(sec.get("mc_samples", 20000)),
        cfg["seed"],
        mu,
        mu,
    )
    return rep.rows, {"spearman": rep.spearman, "spearman_pvalue": rep.spearman_pvalue, "haar_mean": mu}, EXIT_OK


COMMANDS = {
    "count": cmd_count,
    "sandwich": cmd_sandwich,
    "alpha": cmd_alpha,
    "siegel": cmd_siegel,
    "volume": cmd_volume,
    "dyadic": cmd_dyadic,
    "rate": cmd_rate,
    "double-equi": cmd_double_equi,
}


# ---------------------------------------------------------------------------
# output


def render(command: str, rows, summary, fmt_name: str) -> str:
    if fmt_name == "json":
        cols = HEADERS[command].split(",")
        doc = {"command": command, "rows": [dict(zip(cols, _jsonable(list(r)))) for r in rows], "summary": _jsonable(summary)}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(HEADERS[command] + "\n")
    for r in rows:
        buf.write(",".join(fmt(v) for v in r) + "\n")
    return buf.getvalue()


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latorbit", description="Lattice-orbit counting and equidistribution experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON experiment config")
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--threads", type=int, help="worker threads (0 = one per CPU)")
        s.add_argument("--out", help="output file (default: config output.path, else stdout)")
        s.add_argument("--format", choices=("csv", "json"), help="output format")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = load(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            cfg["seed"] = args.seed
        threads = resolve_threads(args.threads, cfg)
        out_cfg = cfg.get("output", {})
        fmt_name = args.format or out_cfg.get("format", "csv")
        out = args.out or out_cfg.get("path")
        rows, summary, code = COMMANDS[args.command](cfg, threads)
    except ConfigError as exc:
        print(f"latorbit: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"latorbit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"latorbit: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = render(args.command, rows, summary, fmt_name)
    try:
        if out is None:
            sys.stdout.write(text)
        else:
            _write(out, text)
            if fmt_name == "csv":
                _write(out + ".summary.json", json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
            manifest = {
                "tool": "latorbit",
                "version": __version__,
                "command": args.command,
                "config": cfg,
                "config_hash": config_hash(cfg),
                "config_canonical": canonical_json({k: v for k, v in cfg.items() if k not in ("threads", "output")}),
                "seed": cfg["seed"],
                "threads": threads,
                "wall_time_s": round(time.perf_counter() - t0, 6),
                "summary": _jsonable(summary),
                "exit_code": code,
            }
            _write(out + ".manifest.json", json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        print(f"latorbit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if code == EXIT_VIOLATION:
        print("latorbit: sandwich inequality violated", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
