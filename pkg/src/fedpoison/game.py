"""Attacker and defender utilities built on an accuracy table.

Accuracy is the reward: the defender (server or clients) earns it and pays
``c_D`` per admitted client; the attacker earns its negative and pays
``c_A`` per poisoned client.

Two-client functions accept scalars or numpy arrays (broadcast), which the
equilibrium checks use to evaluate whole deviation grids at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fl import AccuracyTable

BEST, WORST = "best", "worst"


@dataclass(frozen=True)
class GameCosts:
    c_A: float = 0.0
    c_D: float = 0.0

    def __post_init__(self):
        for name in ("c_A", "c_D"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative")


def _check_prob(**probs):
    for name, v in probs.items():
        a = np.asarray(v, dtype=float)
        if not np.all((a >= 0.0) & (a <= 1.0)):
            raise ValueError(f"{name} must lie in [0, 1]")


def _need_two(table: AccuracyTable):
    if table.n != 2:
        raise ValueError("two-client table required")


# -- admission bounds ------------------------------------------------------

def bound_k(n: int, m: int, i: int, mode: str) -> int:
    """Poisoned clients among the admitted ones under the best/worst admission."""
    if not (0 <= m <= n and 0 <= i <= n):
        raise ValueError("need 0 <= m <= n and 0 <= i <= n")
    if mode == BEST:
        return max(m - (n - i), 0)
    if mode == WORST:
        return min(m, i)
    raise ValueError(f"mode must be {BEST!r} or {WORST!r}")


@dataclass(frozen=True)
class BoundPoint:
    n: int
    mode: str
    value: float
    i: int
    m: int


def defense_bound_utility(table: AccuracyTable, c_D: float, mode: str,
                          orientation: str = "bracket") -> BoundPoint:
    """Upper/lower limit of the defense utility U[k|i] - i*c_D for the table's n.

    ``orientation="bracket"`` (default): the best curve maximizes over both the
    admitted count i and the poisoned count m (favourable attack, best
    admission); the worst curve lets the attacker pick m adversarially
    (max over i of min over m) under the worst admission.

    ``orientation="maxmin"``: both curves are max over i of min over m.

    Ties resolve to the smallest (i, m).
    """
    if orientation not in ("bracket", "maxmin"):
        raise ValueError("orientation must be 'bracket' or 'maxmin'")
    n = table.n
    adversarial = mode == WORST or orientation == "maxmin"
    best = None
    for i in range(n + 1):
        vals = [(table.u(bound_k(n, m, i, mode), i) - i * c_D, m) for m in range(n + 1)]
        if adversarial:
            v, m = min(vals, key=lambda t: (t[0], t[1]))
        else:
            v, m = max(vals, key=lambda t: (t[0], -t[1]))
        if best is None or v > best.value:
            best = BoundPoint(n, mode, v, i, m)
    return best


# -- two-client game -------------------------------------------------------

def client_utility_participate(q_other, p_self, p_other, table: AccuracyTable, c_D: float):
    """Expected reward of a participating client, net of the admission cost."""
    _need_two(table)
    _check_prob(q_other=q_other, p_self=p_self, p_other=p_other)
    u = table.u
    both = (p_self * p_other * (u(2, 2) - c_D)
            + p_self * (1 - p_other) * (u(1, 2) - c_D)
            + (1 - p_self) * p_other * (u(1, 2) - c_D)
            + (1 - p_self) * (1 - p_other) * (u(0, 2) - c_D))
    alone = p_self * (u(1, 1) - c_D) + (1 - p_self) * (u(0, 1) - c_D)
    return q_other * both + (1 - q_other) * alone


def client_utility_decline(q_other, p_other, table: AccuracyTable):
    _need_two(table)
    _check_prob(q_other=q_other, p_other=p_other)
    u = table.u
    return q_other * (p_other * u(1, 1) + (1 - p_other) * u(0, 1)) + (1 - q_other) * u(0, 0)


def client_avg_utility(q_self, q_other, p_self, p_other, table: AccuracyTable, c_D: float):
    _check_prob(q_self=q_self)
    return (q_self * client_utility_participate(q_other, p_self, p_other, table, c_D)
            + (1 - q_self) * client_utility_decline(q_other, p_other, table))


def attacker_case_utilities(q1, q2, table: AccuracyTable, c_A: float):
    """Attacker utility when attacking (both, only client 1, only client 2, none).

    The attack cost is charged whether or not the attacked client is admitted.
    """
    _need_two(table)
    _check_prob(q1=q1, q2=q2)
    u = table.u
    w11, w10, w01, w00 = q1 * q2, q1 * (1 - q2), (1 - q1) * q2, (1 - q1) * (1 - q2)
    both = (w11 * (-u(2, 2) - 2 * c_A) + w10 * (-u(1, 1) - 2 * c_A)
            + w01 * (-u(1, 1) - 2 * c_A) + w00 * (-u(0, 0) - 2 * c_A))
    only1 = (w11 * (-u(1, 2) - c_A) + w10 * (-u(1, 1) - c_A)
             + w01 * (-u(0, 1) - c_A) + w00 * (-u(0, 0) - c_A))
    only2 = (w11 * (-u(1, 2) - c_A) + w10 * (-u(0, 1) - c_A)
             + w01 * (-u(1, 1) - c_A) + w00 * (-u(0, 0) - c_A))
    none = w11 * -u(0, 2) + w10 * -u(0, 1) + w01 * -u(0, 1) + w00 * -u(0, 0)
    return both, only1, only2, none


def attacker_avg_utility(p1, p2, q1, q2, table: AccuracyTable, c_A: float):
    _check_prob(p1=p1, p2=p2)
    both, only1, only2, none = attacker_case_utilities(q1, q2, table, c_A)
    return p1 * p2 * both + p1 * (1 - p2) * only1 + (1 - p1) * p2 * only2 + (1 - p1) * (1 - p2) * none


# -- n-client game ---------------------------------------------------------

EXACT_BINOMIAL_LIMIT = 64


def _log_comb(a, b):
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def hypergeom_weight(n: int, m: int, i: int, k: int) -> float:
    """P(exactly k of m uniformly poisoned clients are among the i admitted).

    Impossible combinations have weight 0.
    """
    if not (0 <= m <= n and 0 <= i <= n and 0 <= k <= min(i, m) and m - k <= n - i):
        return 0.0
    if n <= EXACT_BINOMIAL_LIMIT:
        return math.comb(i, k) * math.comb(n - i, m - k) / math.comb(n, m)
    return math.exp(_log_comb(i, k) + _log_comb(n - i, m - k) - _log_comb(n, m))


def expected_reward(i: int, m: int, table: AccuracyTable) -> float:
    n = table.n
    if not (0 <= i <= n and 0 <= m <= n):
        raise ValueError("need 0 <= i, m <= n")
    return sum(hypergeom_weight(n, m, i, k) * table.u(k, i) for k in range(min(m, i) + 1))


def attack_utility_nm(i: int, m: int, table: AccuracyTable, c_A: float) -> float:
    return -expected_reward(i, m, table) - m * c_A


def defense_utility_nm(i: int, m: int, table: AccuracyTable, c_D: float) -> float:
    return expected_reward(i, m, table) - i * c_D


def utility_matrices(table: AccuracyTable, costs: GameCosts):
    """(U_D, U_A) as (n+1, n+1) arrays indexed [i, m]."""
    n = table.n
    reward = np.array([[expected_reward(i, m, table) for m in range(n + 1)] for i in range(n + 1)])
    idx = np.arange(n + 1)
    return reward - idx[:, None] * costs.c_D, -reward - idx[None, :] * costs.c_A
