"""Command-line front end: ``treecluster <subcommand> ...``.

JSON goes to stdout (and to ``--out`` when given); tables go to CSV files.
Exit codes: 0 success, 1 verification failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import gate_physics as gp
from . import loss_analysis as la
from . import noisy_sim as ns
from . import optimizer as opt
from . import protocol as pr

DEFAULT_SEED = 7
OUT_ENV = "TREECLUSTER_OUT"
SCHEMA_PATH = Path(__file__).with_name("output.schema.json")
NAMED_SHAPES = ("2,2,2", "3,5,3", "6,10,9,1")
FIDELITY_SHAPES = ("2,2", "3,1", "2,3", "3,2")
FIG3A_EDGES = (2, 3, 5, 7, 10, 15, 20, 30, 50, 70, 100, 150, 200, 300, 500, 700,
               1000, 1500, 2000, 3000, 5000, 7000, 10000)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    workers: int = 1
    out: str | None = None
    fmt: str = "json"


def _float(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    t = str(text).strip().lower()
    if t in ("inf", "infinity", "+inf"):
        return math.inf
    return float(t)


def _int(text) -> int:
    return int(_float(text))


def _shape(text) -> pr.TreeShape:
    if isinstance(text, pr.TreeShape):
        return text
    if isinstance(text, (list, tuple)):
        return pr.TreeShape(tuple(int(b) for b in text))
    return pr.TreeShape.parse(str(text))


def out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "out"))


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(_clean(payload), indent=2, sort_keys=True, default=_json_default)
    print(text)
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")


def _flatten(payload: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in payload.items():
        if isinstance(v, dict):
            flat.update(_flatten(v, f"{prefix}{k}."))
        elif isinstance(v, (list, tuple)):
            flat[prefix + k] = ";".join(map(str, v))
        else:
            flat[prefix + k] = v
    return flat


def emit(cfg: "RunConfig", payload: dict) -> None:
    """Write a single result as JSON (default) or as a one-row CSV."""
    if cfg.fmt == "json":
        _emit_json(payload, cfg.out)
        return
    row = _clean(_flatten(payload))
    if cfg.out:
        write_csv(Path(cfg.out), list(row), [row])
    w = csv.DictWriter(sys.stdout, fieldnames=list(row), lineterminator="\n")
    w.writeheader()
    w.writerow(row)


def _json_default(o):
    if isinstance(o, float) and math.isinf(o):
        return "inf"
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"not serialisable: {type(o)}")


def _clean(obj):
    """Replace non-finite floats by strings so the output is strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_csv(path: Path, columns, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns))
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in columns})
    return path


# ---------------------------------------------------------------------------
# subcommands

def cmd_verify(cfg: RunConfig) -> int:
    o = cfg.options
    if o.get("rgs"):
        n = _int(o["rgs"])
        branches = pr.run_rgs(n)
        target = pr.rgs_graph(n)
        ok = all(b.graph == target for b in branches.values())
        report = (f"{'PASS' if ok else 'FAIL'} RGS N={n}: {2 * n} photons, "
                  f"{'both branches match' if ok else 'branch mismatch'} complete core graph")
        payload = {"command": "verify", "target": f"rgs{n}", "ok": ok, "report": report,
                   "n_photons": 2 * n}
    else:
        v = pr.verify_tree(_shape(o["shape"]))
        ok = v.ok
        report = v.report()
        payload = {"command": "verify", "target": str(v.shape), "ok": ok, "report": report,
                   "n_photons": v.shape.n_photons, "n_e": v.n_e, "n_cz": v.n_cz}
    print(report, file=sys.stderr)
    emit(cfg, payload)
    return 0 if ok else 1


def cmd_fidelity(cfg: RunConfig) -> int:
    o = cfg.options
    shape = _shape(o["shape"])
    pulse_map = ns.PulseMap(cz_3pi_events=_int(o.get("cz_3pi_events", 1)))
    if o.get("grid_lambda") or o.get("grid_tcoh"):
        lams = opt.parse_grid(o["grid_lambda"], log=False) if o.get("grid_lambda") else [0.0]
        tcohs = [_float(t) for t in o["grid_tcoh"].split(",")] if o.get("grid_tcoh") else [math.inf]
        config = o.get("pulse_config", "all")
        rows = ns.fidelity_grid(shape, [config], lams, tcohs, pulse_map, cfg.workers)
        path = Path(cfg.out) if cfg.out else out_dir() / f"fidelity_{'_'.join(map(str, shape.branches))}.csv"
        write_csv(path, ("lambda", "tcoh", "fidelity"), rows)
        print(json.dumps({"command": "fidelity", "shape": str(shape), "csv": str(path), "rows": len(rows)}))
        return 0
    params = ns.NoiseParams(_float(o.get("lambda1", 0)), _float(o.get("lambda2", 0)),
                            _float(o.get("lambda3", 0)), _float(o.get("tcoh", "inf")))
    f = ns.tree_fidelity(shape, params, pulse_map)
    payload = {"command": "fidelity", "shape": str(shape),
               "params": _clean({"lambda1": params.lambda1, "lambda2": params.lambda2,
                                 "lambda3": params.lambda3, "tcoh": params.t_coh,
                                 "cz_3pi_events": pulse_map.cz_3pi_events}),
               "fidelity": f}
    emit(cfg, payload)
    return 0


def cmd_analyze(cfg: RunConfig) -> int:
    o = cfg.options
    shape = _shape(o["shape"])
    tc = _float(o.get("tcoh_over_tph", "inf"))
    budget = la.eps_eff(shape, _float(o["eps"]), 1.0, tc)
    if o.get("logic_eps") is not None:
        budget.eps_logic = la.mc_logic_error(shape, _float(o["logic_eps"]), _int(o.get("trials", 100000)),
                                             seed=cfg.seed, workers=cfg.workers)
    payload = {"command": "analyze", "tcoh_over_tph": tc, **budget.to_dict()}
    emit(cfg, payload)
    return 0


def cmd_mc(cfg: RunConfig) -> int:
    o = cfg.options
    shape = _shape(o["shape"])
    trials = _int(o.get("trials", 1e6))
    eps = _float(o["eps"])
    if o.get("kind", "loss") == "logic":
        res = la.mc_logic_error(shape, eps, trials, seed=cfg.seed, workers=cfg.workers)
        payload = {"command": "mc", "kind": "logic", "shape": str(shape), "eps": eps, "trials": trials,
                   "seed": cfg.seed, "estimate": res["worst"]["estimate"], "stderr": res["worst"]["stderr"],
                   "basis": res["worst"]["basis"], "per_basis": {k: res[k] for k in ("X", "Z")}}
    else:
        est, se = la.mc_loss_oracle(shape, eps, trials, seed=cfg.seed, workers=cfg.workers)
        analytic = la.eps_loss(shape, eps)
        payload = {"command": "mc", "kind": "loss", "shape": str(shape), "eps": eps, "trials": trials,
                   "seed": cfg.seed, "estimate": est, "stderr": se, "analytic": analytic,
                   "z_score": (est - analytic) / se if se > 0 else 0.0}
    emit(cfg, payload)
    return 0


def cmd_physics(cfg: RunConfig) -> int:
    o = cfg.options
    ratio = _float(o.get("ratio", 0.0014))
    gbtph = _float(o.get("gbtph", 6.2))
    pint = _float(o.get("pint", 0.01))
    model = gp.CooperativityModel(a=_float(o.get("coop_a", 5.0)))
    payload = {"command": "physics", "ratio": ratio, "gbtph": gbtph, "pint": pint,
               "eps_cz_numeric": gp.eps_cz_numeric(ratio), "eps_cz_closed": gp.eps_cz_closed(ratio),
               "eps_ol": gp.eps_overlap(gbtph), "coop_threshold": gp.cooperativity_threshold(pint, model),
               "model": model.label}
    emit(cfg, payload)
    return 0


def _search_config(o: dict) -> opt.SearchConfig:
    return opt.SearchConfig(max_depth=_int(o.get("max_depth", 5)), max_branch=_int(o.get("max_branch", 16)),
                            max_photons=_int(o.get("max_photons", 1e7)),
                            ratio=_float(o.get("ratio", 0.0014)), gbtph=_float(o.get("gbtph", 6.2)))


def cmd_optimize(cfg: RunConfig) -> int:
    o = cfg.options
    search = opt.Optimizer(_search_config(o))
    eps, cohbw = _float(o["eps"]), _float(o["cohbw"])
    c = search.best_cohbw(eps, cohbw)
    payload = {"command": "optimize", "eps": eps, "cohbw": cohbw,
               "tcoh_over_tph": search.config.tcoh_over_tph(cohbw), "best_shape": c.label,
               "n_photons": c.n_photons, "eps_loss": c.eps_loss, "eps_coh": c.eps_coh, "eps_eff": c.eps_eff}
    emit(cfg, payload)
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    o = cfg.options
    eps_grid = opt.parse_grid(o.get("eps_grid", "0.01:0.2:40"))
    cohbw_grid = opt.parse_grid(o.get("cohbw_grid", "1e6:1e12:60"))
    res = opt.sweep(eps_grid, cohbw_grid, _search_config(o), workers=cfg.workers)
    path = Path(cfg.out) if cfg.out else out_dir() / "sweep.csv"
    write_csv(path, opt.CSV_COLUMNS, res.rows())
    contour = path.with_name(path.stem + "_contour.csv")
    write_csv(contour, ("eps", "min_cohbw"), res.contour)
    print(json.dumps({"command": "sweep", "csv": str(path), "contour_csv": str(contour),
                      "cells": len(res.cells)}))
    return 0


# ---------------------------------------------------------------------------
# figure recipes

def recipe_fig3a(cfg: RunConfig, dest: Path) -> Path:
    search = opt.Optimizer(_search_config(cfg.options))
    eps = _float(cfg.options.get("eps", 0.1))
    tc = _float(cfg.options.get("tcoh_over_tph", 1e4))
    inf_curve = search.size_curve(eps, math.inf, list(FIG3A_EDGES))
    fin_curve = search.size_curve(eps, tc, list(FIG3A_EDGES))
    rows = []
    for size, a, b in zip(FIG3A_EDGES, inf_curve, fin_curve):
        if a is None:
            continue
        rows.append({"size": size, "eps_eff_infinite_tcoh": a.eps_eff, "eps_eff_finite_tcoh": b.eps_eff,
                     "shape_infinite_tcoh": a.label, "shape_finite_tcoh": b.label})
    return write_csv(dest / "fig3a.csv", ("size", "eps_eff_infinite_tcoh", "eps_eff_finite_tcoh",
                                          "shape_infinite_tcoh", "shape_finite_tcoh"), rows)


def recipe_fig3b(cfg: RunConfig, dest: Path) -> Path:
    o = cfg.options
    res = opt.sweep(opt.parse_grid(o.get("eps_grid", "0.01:0.2:40")),
                    opt.parse_grid(o.get("cohbw_grid", "1e6:1e12:60")), _search_config(o),
                    workers=cfg.workers)
    write_csv(dest / "fig3b_contour.csv", ("eps", "min_cohbw"), res.contour)
    return write_csv(dest / "fig3b.csv", opt.CSV_COLUMNS, res.rows())


def recipe_figS2(cfg: RunConfig, dest: Path) -> Path:
    model = gp.CooperativityModel(a=_float(cfg.options.get("coop_a", 5.0)))
    rows = [{"p_int": p, "coop_threshold": gp.cooperativity_threshold(p, model), "model": model.label}
            for p in opt.parse_grid("0.001:0.1:50")]
    return write_csv(dest / "figS2.csv", ("p_int", "coop_threshold", "model"), rows)


def recipe_figS4b(cfg: RunConfig, dest: Path) -> Path:
    trials = _int(cfg.options.get("trials", 100000))
    rows = []
    for s in NAMED_SHAPES:
        shape = _shape(s)
        for e in opt.parse_grid("1e-4:1e-2:9"):
            r = la.mc_logic_error(shape, e, trials, seed=cfg.seed, workers=cfg.workers)
            rows.append({"shape": str(shape), "epsilon_flip": e, "eps_logic": r["worst"]["estimate"],
                         "stderr": r["worst"]["stderr"], "basis": r["worst"]["basis"]})
    return write_csv(dest / "figS4b.csv", ("shape", "epsilon_flip", "eps_logic", "stderr", "basis"), rows)


def recipe_figS5(cfg: RunConfig, dest: Path) -> Path:
    rows = []
    lams = opt.parse_grid("0:0.02:11", log=False)
    tcohs = [10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0]
    for s in FIDELITY_SHAPES:
        shape = _shape(s)
        for r in ns.fidelity_grid(shape, ["omega1", "omega2", "omega3"], lams, [math.inf],
                                  workers=cfg.workers):
            rows.append({"shape": str(shape), "sweep": "lambda", **r})
        for r in ns.fidelity_grid(shape, ["omega1"], [0.0], tcohs, workers=cfg.workers):
            rows.append({"shape": str(shape), "sweep": "tcoh", **{**r, "config": "none"}})
    return write_csv(dest / "figS5.csv", ("shape", "sweep", "config", "lambda", "tcoh", "fidelity"), rows)


RECIPES = {"fig3a": recipe_fig3a, "fig3b": recipe_fig3b, "figS2": recipe_figS2,
           "figS4b": recipe_figS4b, "figS5": recipe_figS5}


def figure_recipes() -> dict:
    return dict(RECIPES)


def cmd_recipe(cfg: RunConfig) -> int:
    name = cfg.options["name"]
    dest = Path(cfg.out) if cfg.out else out_dir()
    names = list(RECIPES) if name == "all" else [name]
    paths = [str(RECIPES[n](cfg, dest)) for n in names]
    print(json.dumps({"command": "recipe", "recipes": names, "csv": paths}))
    return 0


COMMANDS = {"verify": cmd_verify, "fidelity": cmd_fidelity, "analyze": cmd_analyze, "mc": cmd_mc,
            "physics": cmd_physics, "optimize": cmd_optimize, "sweep": cmd_sweep, "recipe": cmd_recipe}


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys override command-line flags")
    common.add_argument("--seed", type=int, default=None, help=f"RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--workers", type=int, default=None, help="worker threads (default 1)")
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("--format", dest="fmt", choices=("json", "csv"), default=None,
                        help="format of single-result output (default json)")

    p = argparse.ArgumentParser(prog="treecluster", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("verify", parents=[common], help="check a generated tree or repeater state")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--shape")
    g.add_argument("--rgs", type=int, help="number of core photons of a repeater graph state")

    s = sub.add_parser("fidelity", parents=[common], help="density-matrix fidelity under pulse errors")
    s.add_argument("--shape", required=True)
    s.add_argument("--lambda1", default="0")
    s.add_argument("--lambda2", default="0")
    s.add_argument("--lambda3", default="0")
    s.add_argument("--tcoh", default="inf", help="emitter coherence time in units of t_ph")
    s.add_argument("--cz-3pi-events", default="1")
    s.add_argument("--grid-lambda", help="start:stop:count for a CSV sweep of lambda")
    s.add_argument("--grid-tcoh", help="comma list of coherence times for a CSV sweep")
    s.add_argument("--pulse-config", default="all", choices=sorted(ns.SWEEP_CONFIGS))

    s = sub.add_parser("analyze", parents=[common], help="closed-form error budget")
    s.add_argument("--shape", required=True)
    s.add_argument("--eps", required=True)
    s.add_argument("--tcoh-over-tph", "--tcoh", dest="tcoh_over_tph", default="inf")
    s.add_argument("--logic-eps", default=None, help="also sample the logic error at this flip rate")
    s.add_argument("--trials", default="1e5")

    s = sub.add_parser("mc", parents=[common], help="Monte-Carlo check against the closed form")
    s.add_argument("--shape", required=True)
    s.add_argument("--eps", required=True)
    s.add_argument("--trials", default="1e6")
    s.add_argument("--kind", choices=("loss", "logic"), default="loss")

    s = sub.add_parser("physics", parents=[common], help="gate errors and cooperativity threshold")
    s.add_argument("--ratio", default="0.0014")
    s.add_argument("--gbtph", default="6.2")
    s.add_argument("--pint", default="0.01")
    s.add_argument("--coop-a", default="5")

    for name, helptext in (("optimize", "best shape at one operating point"),
                           ("sweep", "best shape over a grid, CSV output")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        if name == "optimize":
            s.add_argument("--eps", required=True)
            s.add_argument("--cohbw", required=True, help="t_coh * gamma_R")
        else:
            s.add_argument("--eps-grid", default="0.01:0.2:40")
            s.add_argument("--cohbw-grid", default="1e6:1e12:60")
        s.add_argument("--max-depth", default="5")
        s.add_argument("--max-branch", default="16")
        s.add_argument("--max-photons", default="1e7")
        s.add_argument("--ratio", default="0.0014")
        s.add_argument("--gbtph", default="6.2")

    s = sub.add_parser("recipe", parents=[common], help="write plot-ready CSV for a figure")
    s.add_argument("name", choices=sorted(RECIPES) + ["all"])
    s.add_argument("--trials", default="1e5")
    s.add_argument("--max-depth", default="5")
    s.add_argument("--max-branch", default="16")
    s.add_argument("--max-photons", default="1e7")
    return p


def to_config(ns_args: argparse.Namespace) -> RunConfig:
    opts = {k: v for k, v in vars(ns_args).items() if k not in ("command", "config", "seed", "workers", "out", "fmt")}
    seed, workers, out, fmt = ns_args.seed, ns_args.workers, ns_args.out, ns_args.fmt
    if ns_args.config:
        try:
            overrides = json.loads(Path(ns_args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns_args.config}: {exc}") from exc
        if not isinstance(overrides, dict):
            raise UsageError("config file must hold one JSON object")
        overrides = {k.replace("-", "_"): v for k, v in overrides.items()}
        if overrides.pop("command", ns_args.command) != ns_args.command:
            raise UsageError("config file names a different subcommand")
        seed = overrides.pop("seed", seed)
        workers = overrides.pop("workers", workers)
        out = overrides.pop("out", out)
        fmt = overrides.pop("fmt", overrides.pop("format", fmt))
        opts.update(overrides)
    fmt = fmt or "json"
    if fmt not in ("json", "csv"):
        raise UsageError(f"unknown output format {fmt!r}")
    return RunConfig(ns_args.command, opts, DEFAULT_SEED if seed is None else int(seed),
                     1 if workers is None else max(1, int(workers)), out, fmt)


def dispatch(cfg: RunConfig) -> int:
    return COMMANDS[cfg.command](cfg)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return dispatch(to_config(args))
    except (UsageError, ValueError, KeyError) as exc:
        print(f"treecluster {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
