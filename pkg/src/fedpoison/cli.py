"""Command-line entry point: ``fedpoison [--config F] [--seed S] [--out D] <command>``.

Commands
  table   Monte Carlo accuracy table U[k|i]          -> table_n<N>.csv
  bounds  best/worst defense utility per n            -> bounds.csv
  game2   two-client mixed equilibria (+ cost sweep)  -> game2.json, game2_sweep.csv
  gamen   n-client pure equilibria per table          -> gamen.json, gamen_sweep.csv

Exit codes: 0 success, 1 invalid input or configuration, 2 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import equilibrium as eqm
from . import fl, game
from .config import ConfigError
from .fl import TableFormatError
from .game import GameCosts

log = logging.getLogger("fedpoison")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(ValueError):
    pass


def _clean(x):
    """JSON-safe floats (NaN/inf become null)."""
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.generic):
        return _clean(x.item())
    return x


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _num(x: float) -> str:
    return repr(float(x))


def collect_tables(paths) -> list[fl.AccuracyTable]:
    """Load table CSVs; directories contribute every ``table_n*.csv`` inside."""
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            found = sorted(p.glob("table_n*.csv"))
            if not found:
                raise UsageError(f"{p}: no table_n*.csv files")
            files.extend(found)
        else:
            files.append(p)
    tables = {}
    for f in files:
        t = fl.load_table_csv(f)
        if t.n in tables:
            raise UsageError(f"{f}: duplicate table for n={t.n}")
        tables[t.n] = t
    return [tables[n] for n in sorted(tables)]


def _costs(cfg, args) -> GameCosts:
    c_A = cfg.costs.c_A if getattr(args, "c_a", None) is None else args.c_a
    c_D = cfg.costs.c_D if getattr(args, "c_d", None) is None else args.c_d
    try:
        return GameCosts(c_A, c_D)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_table(cfg, args) -> Path:
    n = args.n if args.n is not None else cfg.n
    trials = args.trials if args.trials is not None else cfg.trials
    workers = args.workers if args.workers is not None else cfg.workers
    if n < 1 or trials < 1 or workers < 1:
        raise UsageError("n, trials and workers must be >= 1")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    log.info("estimating U[k|i] for n=%d, %d trials, profile %s", n, trials, cfg.profile)
    table = fl.estimate_table(n, trials, cfg.fl, cfg.channel, workers=workers)
    path = cfg.output_dir / f"table_n{n}.csv"
    fl.save_table_csv(table, path)
    return path


def cmd_bounds(cfg, args) -> Path:
    costs = _costs(cfg, args)
    tables = collect_tables(args.tables)
    rows = []
    for t in tables:
        best = game.defense_bound_utility(t, costs.c_D, game.BEST, args.orientation)
        worst = game.defense_bound_utility(t, costs.c_D, game.WORST, args.orientation)
        rows.append([t.n, _num(best.value), _num(worst.value), best.i, worst.i])
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.output_dir / "bounds.csv"
    _write_csv(path, ["n", "best_utility", "worst_utility", "best_i", "worst_i"], rows)
    return path


def parse_sweep(text: str):
    try:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError:
        raise UsageError(f"sweep must look like START:STOP:COUNT, got {text!r}") from None
    if count < 1 or start < 0 or stop < 0:
        raise UsageError("sweep needs COUNT >= 1 and non-negative costs")
    return np.linspace(start, stop, count)


def pick_mixed(eqs):
    """First verified equilibrium in solver order (interior before boundary)."""
    return next((e for e in eqs if e.verified), None)


def cmd_game2(cfg, args) -> list[Path]:
    tables = collect_tables([args.table])
    table = tables[0]
    if table.n != 2:
        raise UsageError("two-client table required")
    costs = _costs(cfg, args)
    eqs = eqm.solve_two_client(table, costs)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.output_dir / "game2.json"
    write_json(out, {"c_A": costs.c_A, "c_D": costs.c_D, "equilibria": [e.to_dict() for e in eqs]})
    paths = [out]
    if args.sweep:
        rows = []
        for c in parse_sweep(args.sweep):
            e = pick_mixed(eqm.solve_two_client(table, GameCosts(float(c), float(c))))
            if e is None:
                rows.append([_num(c), "nan", "nan", "nan", "nan"])
            else:
                rows.append([_num(c), _num(e.p), _num(e.q), _num(e.u_attacker), _num(e.u_defender)])
        sweep = cfg.output_dir / "game2_sweep.csv"
        _write_csv(sweep, ["cost", "p", "q", "u_attacker", "u_defender"], rows)
        paths.append(sweep)
    return paths


def gamen_records(tables, costs: GameCosts):
    records = []
    for point in eqm.equilibrium_sweep(tables, costs):
        table = next(t for t in tables if t.n == point.n)
        eqs = eqm.find_pure_nash(table, costs)
        rec = {"n": point.n, "equilibria": [e.to_dict() for e in eqs]}
        if point.equilibrium is None:
            rec["no_pure_equilibrium"] = True
            rec["best_responses"] = point.responses.to_dict()
            rec["cycle"] = [list(s) for s in eqm.best_response_cycle(point.responses)]
        else:
            rec["selected"] = point.equilibrium.to_dict()
        records.append(rec)
    return records


def cmd_gamen(cfg, args) -> list[Path]:
    costs = _costs(cfg, args)
    tables = collect_tables(args.tables)
    records = gamen_records(tables, costs)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.output_dir / "gamen.json"
    write_json(out, {"c_A": costs.c_A, "c_D": costs.c_D, "results": records})
    rows = []
    for rec in records:
        sel = rec.get("selected")
        if sel is None:
            rows.append([rec["n"], "", "", "nan", "nan"])
        else:
            rows.append([rec["n"], sel["i_star"], sel["m_star"], _num(sel["u_defender"]), _num(sel["u_attacker"])])
    sweep = cfg.output_dir / "gamen_sweep.csv"
    _write_csv(sweep, ["n", "i_star", "m_star", "u_defender", "u_attacker"], rows)
    return [out, sweep]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fedpoison", description="Poisoning attack/defense games for federated signal classification.")
    ap.add_argument("--config", help="key = value experiment file")
    ap.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("table", help="estimate the accuracy table")
    t.add_argument("--n", type=int)
    t.add_argument("--trials", type=int)
    t.add_argument("--workers", type=int)

    def cost_flags(p):
        p.add_argument("--c-a", type=float, dest="c_a")
        p.add_argument("--c-d", type=float, dest="c_d")

    b = sub.add_parser("bounds", help="best/worst defense utility")
    b.add_argument("tables", nargs="+", help="table CSV files or directories")
    b.add_argument("--orientation", choices=["bracket", "maxmin"], default="bracket")
    cost_flags(b)

    g2 = sub.add_parser("game2", help="two-client mixed equilibria")
    g2.add_argument("table")
    g2.add_argument("--sweep", help="equal-cost sweep START:STOP:COUNT")
    cost_flags(g2)

    gn = sub.add_parser("gamen", help="n-client pure equilibria")
    gn.add_argument("tables", nargs="+", help="table CSV files or directories")
    cost_flags(gn)
    return ap


COMMANDS = {"table": cmd_table, "bounds": cmd_bounds, "game2": cmd_game2, "gamen": cmd_gamen}


def load_experiment(args) -> config_mod.ExperimentConfig:
    values = config_mod.load_config_file(args.config) if args.config else {}
    cfg = config_mod.build_config(values)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        cfg = config_mod.with_seed(cfg, args.seed)
    if args.out is not None:
        cfg = replace(cfg, output_dir=Path(args.out))
    return cfg


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; here 2 is reserved for I/O
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_experiment(args)
        result = COMMANDS[args.command](cfg, args)
    except (ConfigError, TableFormatError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in result if isinstance(result, list) else [result]:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
