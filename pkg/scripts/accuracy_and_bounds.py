"""Accuracy tables for n = 1..N and the best/worst defense-utility curves.

    python scripts/accuracy_and_bounds.py --n-max 5 --trials 5 --workers 8 --out runs/fast
"""
import argparse
import logging
from pathlib import Path

from fedpoison import config, fl, game

log = logging.getLogger("accuracy_and_bounds")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="key = value experiment file")
    ap.add_argument("--n-max", type=int, default=5)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--c-d", type=float, default=0.0, dest="c_d")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", default="runs/accuracy")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = config.build_config(config.load_config_file(args.config) if args.config else {})
    if args.seed is not None:
        cfg = config.with_seed(cfg, args.seed)
    trials = args.trials or cfg.trials
    workers = args.workers or cfg.workers
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for n in range(1, args.n_max + 1):
        path = out / f"table_n{n}.csv"
        if path.exists():
            table = fl.load_table_csv(path)
            log.info("n=%d: reusing %s", n, path)
        else:
            table = fl.estimate_table(n, trials, cfg.fl, cfg.channel, workers=workers)
            fl.save_table_csv(table, path)
            log.info("n=%d: wrote %s", n, path)
        best = game.defense_bound_utility(table, args.c_d, game.BEST)
        worst = game.defense_bound_utility(table, args.c_d, game.WORST)
        rows.append((n, best.value, worst.value, best.i, worst.i))

    with (out / "bounds.csv").open("w") as fh:
        fh.write("n,best_utility,worst_utility,best_i,worst_i\n")
        for n, b, w, bi, wi in rows:
            fh.write(f"{n},{b!r},{w!r},{bi},{wi}\n")
    print(f"{'n':>3} {'best':>8} {'worst':>8}")
    for n, b, w, _, _ in rows:
        print(f"{n:>3} {b:8.4f} {w:8.4f}")


if __name__ == "__main__":
    main()
