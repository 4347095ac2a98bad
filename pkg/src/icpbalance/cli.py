"""Command-line entry point: ``icpbalance sweep`` and ``icpbalance run``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from .config import ConfigError, Scenario, load_scenario, scenario_from_dict
from .sim import MECHANISM_SETS, Disturbance, step_simulation, sweep_recoverable

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

log = logging.getLogger("icpbalance")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="icpbalance", description="ICP push-recovery simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="scenario YAML file (defaults when omitted)")
        sp.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
        sp.add_argument("--mechanisms", metavar="NAME", help="mechanism set name, or comma-separated names")
        sp.add_argument("--phase", type=float, metavar="F", help="push phase as a fraction of swing")
        sp.add_argument("--seed", type=int, metavar="N", help="seed recorded in the manifest")
        sp.add_argument("-v", "--verbose", action="store_true")

    sw = sub.add_parser("sweep", help="maximum recoverable push per direction and mechanism set")
    common(sw)
    sw.add_argument("--directions", type=int, metavar="N", help="number of evenly spaced push directions")

    rn = sub.add_parser("run", help="single pushed run with a per-tick trajectory log")
    common(rn)
    rn.add_argument("--direction", type=float, metavar="DEG", help="push direction in degrees (90 = +y)")
    rn.add_argument("--delta-v", type=float, metavar="MPS", help="push magnitude in m/s")
    return p


def _apply_overrides(sc: Scenario, args) -> Scenario:
    data = sc.to_dict()
    if args.out is not None:
        data["output"]["dir"] = args.out
    if args.mechanisms is not None:
        data["mechanisms"] = [m.strip() for m in args.mechanisms.split(",") if m.strip()]
    if args.phase is not None:
        data["sweep"]["phase"] = args.phase
    if args.seed is not None:
        data["seed"] = args.seed
    if getattr(args, "directions", None) is not None:
        data["sweep"]["directions"] = args.directions
    if getattr(args, "direction", None) is not None:
        data["run"]["direction_deg"] = args.direction
    if getattr(args, "delta_v", None) is not None:
        data["run"]["delta_v"] = args.delta_v
    try:
        return scenario_from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"command-line override: {exc.message}") from None


def _write_manifest(path: Path, sc: Scenario, command: str, started: float, extra: dict) -> None:
    manifest = {
        "tool": "icpbalance",
        "version": __version__,
        "command": command,
        "wall_time_s": round(time.time() - started, 3),
        "config": sc.to_dict(),
    }
    manifest.update(extra)
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def format_rows(results) -> List[List[str]]:
    """CSV rows ``[mechanism_set, direction_deg, max_delta_v_mps]`` with 4 decimals."""
    rows = []
    for name, pts in results.items():
        for theta, dv in pts:
            rows.append([name, f"{math.degrees(theta):.4f}", f"{dv:.4f}"])
    return rows


def run_sweep(sc: Scenario, started: float) -> int:
    out = Path(sc.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    dirs = sc.sweep.direction_list()
    results = {}
    for name in sc.mechanisms:
        log.info("sweeping %s over %d directions", name, len(dirs))
        results[name] = sweep_recoverable(
            sc.sim, MECHANISM_SETS[name], dirs, sc.sweep.phase, sc.sweep.delta_v_min, sc.sweep.delta_v_max, sc.sweep.resolution
        )
    with open(out / sc.output.csv, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mechanism_set", "direction_deg", "max_delta_v_mps"])
        w.writerows(format_rows(results))
    from .plotting import polar_boundary_plot

    polar_boundary_plot(results, out / sc.output.plot, "Maximum recoverable push [m/s]")
    _write_manifest(
        out / sc.output.manifest,
        sc,
        "sweep",
        started,
        {"outputs": [sc.output.csv, sc.output.plot], "rows": sum(len(v) for v in results.values())},
    )
    for name, pts in results.items():
        print(f"{name}: " + " ".join(f"{math.degrees(t):.1f}:{v:.2f}" for t, v in pts))
    return EXIT_OK


def run_single(sc: Scenario, started: float) -> int:
    out = Path(sc.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    name = sc.mechanisms[-1]
    dist = Disturbance(math.radians(sc.run.direction_deg), sc.run.delta_v, sc.sweep.phase)
    res = step_simulation(sc.sim, MECHANISM_SETS[name], dist, record=True)
    by_time = {f["t"]: f for f in res.footholds}
    with open(out / sc.output.log, "w", encoding="utf-8") as fh:
        n = len(res.log)
        for i, rec in enumerate(res.log):
            rec = dict(rec)
            step = by_time.get(round(rec["t"] + sc.sim.gait.dt, 6))
            if step is not None and "capture_regions" in step:
                rec["capture_regions"] = step["capture_regions"]
                rec["foothold"] = step["position"]
            if i == n - 1:
                rec["recovered"] = res.recovered
                rec["fell"] = res.fell
            fh.write(json.dumps(rec) + "\n")
    from .plotting import trajectory_plot

    trajectory_plot(res.log, res.footholds, out / sc.output.trajectory_plot, f"{name}, {sc.run.delta_v:.2f} m/s at {sc.run.direction_deg:.0f} deg")
    _write_manifest(
        out / sc.output.manifest,
        sc,
        "run",
        started,
        {
            "mechanism_set": name,
            "recovered": res.recovered,
            "fell": res.fell,
            "steps": res.steps_to_recover,
            "crossover_steps": res.crossover_steps,
            "rule3_activations": res.rule3_activations,
            "violations": res.violations,
            "outputs": [sc.output.log, sc.output.trajectory_plot],
        },
    )
    print(f"{name}: recovered={res.recovered} fell={res.fell} steps={res.steps_to_recover} crossover_steps={res.crossover_steps}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    started = time.time()
    try:
        sc = load_scenario(args.config) if args.config else Scenario()
        sc = _apply_overrides(sc, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if args.command == "sweep":
            return run_sweep(sc, started)
        return run_single(sc, started)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
