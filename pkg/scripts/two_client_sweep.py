"""Two-client mixed equilibria across equal costs c_A = c_D = c.

Uses a saved n=2 table, or the built-in toy table when none is given.

    python scripts/two_client_sweep.py runs/fast/table_n2.csv --stop 0.4 --count 41
"""
import argparse

import numpy as np

from fedpoison import equilibrium as eqm
from fedpoison import fl
from fedpoison.game import GameCosts

TOY = {(0, 0): 0.5, (1, 0): 0.8, (1, 1): 0.2, (2, 0): 0.9, (2, 1): 0.5, (2, 2): 0.1}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("table", nargs="?")
    ap.add_argument("--start", type=float, default=0.0)
    ap.add_argument("--stop", type=float, default=0.4)
    ap.add_argument("--count", type=int, default=41)
    args = ap.parse_args()

    table = fl.load_table_csv(args.table) if args.table else fl.AccuracyTable(2, TOY)
    print(f"{'cost':>6} {'p':>7} {'q':>7} {'U_A':>8} {'U_D':>8}  kind")
    for c in np.linspace(args.start, args.stop, args.count):
        eqs = [e for e in eqm.solve_two_client(table, GameCosts(c, c)) if e.verified]
        if not eqs:
            print(f"{c:6.3f}  (no verified symmetric equilibrium)")
            continue
        e = eqs[0]
        print(f"{c:6.3f} {e.p:7.4f} {e.q:7.4f} {e.u_attacker:8.4f} {e.u_defender:8.4f}  {e.kind}")


if __name__ == "__main__":
    main()
