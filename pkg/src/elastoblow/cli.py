"""Command-line entry point: ``elastoblow run|check-data|convergence|plot <config>``.

Exit codes: 0 completed or passed, 1 usage or configuration error,
2 breakdown, 3 hypothesis or convergence failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

from .config import Config, ConfigError, load_config
from .core import ElastoblowError, InvalidInitialData, NonPositiveDensity
from .diagnostics import CSV_COLUMNS
from .initdata import check_compatibility, check_hypotheses, check_viscosity
from .serialize import write_checkpoint, write_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BREAKDOWN = 2
EXIT_FAILED = 3

log = logging.getLogger("elastoblow")


def _out_dir(cfg: Config, override: Optional[str]) -> Path:
    if override:
        d = Path(override)
    elif cfg.output_dir is not None:
        d = cfg.output_dir
    else:
        d = Path("elastoblow_out") / (cfg.source.stem if cfg.source else "run")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _num(v):
    """JSON-safe float (inf and nan become strings)."""
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else repr(v)


def cmd_run(cfg: Config, out: Path) -> int:
    from .runner import build_initial, execute

    s0 = build_initial(cfg)
    res = execute(cfg, s0)
    write_csv(res.series, out / "series.csv")
    write_checkpoint(res.final, cfg.grid, cfg.physics, out / "final.ckpt")
    hyp = res.hypotheses
    summary = {
        "status": res.status,
        "reason": res.reason,
        "t_breakdown": _num(res.t_breakdown),
        "t_final": _num(res.final.t),
        "steps": res.steps,
        "rows": len(res.series),
        "hypotheses": {
            "cond_FF1": hyp.cond_FF1,
            "cond_FF": hyp.cond_FF,
            "cond_a2": hyp.cond_a2,
            "T_upper": _num(hyp.T_upper),
        },
        "final_row": {k: _num(v) for k, v in zip(CSV_COLUMNS, res.series[-1].values())},
    }
    if cfg.viscous:
        summary["dissipation_integral"] = _num(res.dissipation[-1])
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if res.completed:
        print(f"completed: t={res.final.t:.17g} steps={res.steps}")
        return EXIT_OK
    print(f"breakdown: reason={res.reason} t={res.t_breakdown:.17g} steps={res.steps}")
    return EXIT_BREAKDOWN


def check_data_report(cfg: Config) -> tuple:
    """Returns (text, machine-readable dict, all_ok)."""
    from .runner import build_initial

    s0 = build_initial(cfg)
    rep = check_hypotheses(s0, cfg.physics, cfg.grid, cfg.scheme)
    m = rep.margins()
    ok = rep.all_hold
    lines = [
        f"m0            = {rep.m0:.17g}",
        f"F0            = {rep.F0_functional:.17g}",
        f"E0            = {rep.E0:.17g}",
        f"trace0        = {rep.trace0:.17g}",
        f"threshold     = {rep.threshold:.17g}",
        f"rho0_max      = {rep.rho0_max:.17g}",
        f"div_residual0 = {rep.div_residual0:.17g}",
        f"FF1  m0 >= 0               margin {m['FF1']:.17g}  {'PASS' if rep.cond_FF1 else 'FAIL'}",
        f"FF   F0 > threshold        margin {m['FF']:.17g}  {'PASS' if rep.cond_FF else 'FAIL'}",
        f"a2   trace0 >= 2 E0        margin {m['a2']:.17g}  {'PASS' if rep.cond_a2 else 'FAIL'}",
        f"T_upper       = {'none' if rep.T_upper is None else format(rep.T_upper, '.17g')}",
    ]
    data = {
        "m0": rep.m0, "F0": rep.F0_functional, "E0": rep.E0, "trace0": rep.trace0,
        "threshold": rep.threshold, "rho0_max": rep.rho0_max, "div_residual0": rep.div_residual0,
        "cond_FF1": rep.cond_FF1, "cond_FF": rep.cond_FF, "cond_a2": rep.cond_a2,
        "margins": m, "T_upper": rep.T_upper,
    }
    if cfg.viscous:
        p = cfg.physics
        vok = check_viscosity(p)
        comp = check_compatibility(s0, p, cfg.grid, cfg.scheme)
        lines += [
            f"viscosity  mu >= 0, 3 lambda + 2 mu >= 0, 7 mu > lambda   margin {7 * p.mu - p.lam:.17g}  "
            f"{'PASS' if vok else 'FAIL'}",
            f"compatibility  |g|_L2 {comp.g_L2:.17g}  |grad g|_L2 {comp.g_H1_semi:.17g}  "
            f"|sqrt(rho) g|_L2 {comp.sqrt_rho_g_L2:.17g}  flagged {comp.flagged_cells}  "
            f"{'PASS' if comp.ok else 'FAIL'}",
        ]
        data["viscosity_ok"] = vok
        data["compatibility"] = {
            "g_L2": comp.g_L2, "g_H1_semi": comp.g_H1_semi, "sqrt_rho_g_L2": comp.sqrt_rho_g_L2,
            "flagged_cells": comp.flagged_cells, "ok": comp.ok,
        }
        ok = ok and vok and comp.ok
    lines.append(f"result: {'PASS' if ok else 'FAIL'}")
    return "\n".join(lines) + "\n", data, ok


def cmd_check_data(cfg: Config, out: Path) -> int:
    text, data, ok = check_data_report(cfg)
    sys.stdout.write(text)
    (out / "check_data.json").write_text(json.dumps({k: _jsonable(v) for k, v in data.items()}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if ok else EXIT_FAILED


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, float):
        return _num(v)
    return v


def cmd_convergence(cfg: Config, out: Path) -> int:
    from .convergence import run_convergence
    from .runner import workers

    try:
        table = run_convergence(cfg, workers=workers())
    except RuntimeError as exc:
        print(f"convergence: {exc}")
        return EXIT_BREAKDOWN
    text = table.format()
    print(text)
    (out / "convergence.txt").write_text(text + "\n")
    return EXIT_OK if table.passed else EXIT_FAILED


_PLOT = """\
# gnuplot script; data columns follow the series.csv header
set datafile separator ","
set key autotitle columnhead
set terminal pngcairo size 1200,900
set output "{png}"
set multiplot layout 2,2
set xlabel "t"
plot "{csv}" using 1:3 with lines title "F(t)", "{csv}" using 1:12 with lines title "Riccati bound"
plot "{csv}" using 1:4 with lines title "energy"
plot "{csv}" using 1:7 with lines title "front", "{csv}" using 1:8 with lines title "front bound"
set logscale y
plot "{csv}" using 1:10 with lines title "max |grad u|", "{csv}" using 1:6 with lines title "div residual"
unset multiplot
"""


def cmd_plot(cfg: Config, out: Path) -> int:
    script = out / "plot.gp"
    script.write_text(_PLOT.format(csv="series.csv", png="series.png"))
    print(f"wrote {script}; run 'gnuplot plot.gp' inside {out}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "check-data": cmd_check_data,
    "convergence": cmd_convergence,
    "plot": cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="elastoblow", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config")
        sp.add_argument("--out", help="output directory (default: [output] dir, else ./elastoblow_out/<config name>)")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        out = _out_dir(cfg, args.out)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonPositiveDensity, InvalidInitialData) as exc:
        print(f"invalid initial data: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ElastoblowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
