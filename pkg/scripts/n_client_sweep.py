"""Pure equilibria of the n-client game as n grows.

Reads every table_n*.csv in a directory, or uses the analytic family
U[k|i] = clamp(0.5 + 0.4 (i - 2k) / n) for n = 2..10 when no directory is given.

    python scripts/n_client_sweep.py runs/fast --c-a 0.5 --c-d 0.02
"""
import argparse

from fedpoison import equilibrium as eqm
from fedpoison.cli import collect_tables
from fedpoison.game import GameCosts


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("tables", nargs="?")
    ap.add_argument("--c-a", type=float, default=0.5, dest="c_a")
    ap.add_argument("--c-d", type=float, default=0.02, dest="c_d")
    args = ap.parse_args()

    tables = collect_tables([args.tables]) if args.tables else [eqm.analytic_table(n) for n in range(2, 11)]
    costs = GameCosts(args.c_a, args.c_d)
    print(f"{'n':>3} {'i*':>3} {'m*':>3} {'U_D':>8} {'U_A':>8}")
    for point in eqm.equilibrium_sweep(tables, costs):
        if point.equilibrium is None:
            cycle = eqm.best_response_cycle(point.responses)
            print(f"{point.n:>3}  no pure equilibrium, best responses cycle through {cycle}")
            continue
        e = point.equilibrium
        print(f"{point.n:>3} {e.i_star:>3} {e.m_star:>3} {e.u_defender:8.4f} {e.u_attacker:8.4f}")


if __name__ == "__main__":
    main()
