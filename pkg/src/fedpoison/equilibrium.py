"""Nash equilibria of the admission/poisoning games.

Two clients: symmetric mixed profiles (p, q) where p is the per-client attack
probability and q the per-client admission probability. Interior solutions
come from the two indifference (stationarity) conditions; boundary profiles
are enumerated and kept when no unilateral grid deviation pays.

n clients: pure profiles (i, m) found by exhaustive best-response
intersection.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import game
from .fl import AccuracyTable
from .game import GameCosts

TIE_TOL = 1e-12


# -- two-client mixed equilibrium ------------------------------------------

def _client_coeffs(p, table: AccuracyTable, c_D: float):
    """(A, B) with client residual = q*A + (1-q)*B."""
    u = table.u
    A = (p * p * (u(2, 2) - 2 * u(1, 2) + u(0, 2))
         + p * (2 * u(1, 2) - 2 * u(0, 2) - u(1, 1) + u(0, 1))
         + u(0, 2) - c_D - u(0, 1))
    B = p * (u(1, 1) - u(0, 1)) + u(0, 1) - c_D - u(0, 0)
    return A, B


def client_indifference_residual(p, q, table: AccuracyTable, c_D: float):
    """Gain of participating over declining for one client, other client at (p, q)."""
    game._need_two(table)
    game._check_prob(p=p, q=q)
    A, B = _client_coeffs(p, table, c_D)
    return q * A + (1 - q) * B


def attacker_indifference_residual(p, q, table: AccuracyTable, c_A: float):
    """Marginal attacker utility of attacking one client more, at the symmetric point."""
    game._need_two(table)
    game._check_prob(p=p, q=q)
    U22, U12, U02 = table.u(2, 2), table.u(1, 2), table.u(0, 2)
    U11, U01, U00 = table.u(1, 1), table.u(0, 1), table.u(0, 0)
    q2 = q * q
    return (-p * q2 * U22 - q2 * U12 - q * U11 + q2 * U11 - q * U01
            + q2 * U01 - c_A - q2 * U00 + 2 * p * q2 * U12
            + q2 * U02 + 2 * q * U01
            - 2 * q2 * U01 + q2 * U00 - p * q2 * U02)


@dataclass
class MixedEquilibrium:
    p: float
    q: float
    kind: str
    client_residual: float
    attacker_residual: float
    client_gain: float
    attacker_gain: float
    attacker_joint_gain: float
    verified: bool
    u_defender: float
    u_attacker: float

    def to_dict(self):
        return {
            "kind": self.kind,
            "p": self.p,
            "q": self.q,
            "u_defender": self.u_defender,
            "u_attacker": self.u_attacker,
            "residuals": {"client": self.client_residual, "attacker": self.attacker_residual},
            "deviation_gain": {"client": self.client_gain, "attacker": self.attacker_gain,
                               "attacker_joint": self.attacker_joint_gain},
            "verified": self.verified,
        }


def deviation_gains(p: float, q: float, table: AccuracyTable, costs: GameCosts, grid_points: int = 1001,
                    joint: bool = True):
    """Best unilateral improvement on a uniform grid, at the symmetric profile (p, q).

    Returns (client, attacker, attacker_joint): a client moving its own q; the
    attacker moving its attack probability on one client; the attacker moving
    both attack probabilities at once (NaN when ``joint`` is False). The joint
    utility is bilinear, so its maximum sits on a corner of the unit square.
    """
    g = np.linspace(0.0, 1.0, grid_points)
    here_c = game.client_avg_utility(q, q, p, p, table, costs.c_D)
    client = float(np.max(game.client_avg_utility(g, q, p, p, table, costs.c_D)) - here_c)
    here_a = game.attacker_avg_utility(p, p, q, q, table, costs.c_A)
    attacker = float(np.max(game.attacker_avg_utility(g, p, q, q, table, costs.c_A)) - here_a)
    joint_gain = float("nan")
    if joint:
        corners = np.array([0.0, 1.0])
        both = game.attacker_avg_utility(corners[:, None], corners[None, :], q, q, table, costs.c_A)
        joint_gain = float(np.max(both) - here_a)
    return max(client, 0.0), max(attacker, 0.0), max(joint_gain, 0.0) if joint else joint_gain


def _q_star(p, table, c_D):
    """q making the client indifferent at this p, or None."""
    A, B = _client_coeffs(p, table, c_D)
    if A == B:
        return None
    return B / (B - A)


def _attacker_along_curve(p, table, costs):
    q = _q_star(p, table, costs.c_D)
    if q is None or not 0.0 <= q <= 1.0:
        return None, None
    return q, attacker_indifference_residual(p, q, table, costs.c_A)


def _bisect(lo, hi, glo, table, costs, tol, max_iter=200):
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        q, g = _attacker_along_curve(mid, table, costs)
        if q is None:
            return None
        if abs(g) < tol or hi - lo < 1e-16:
            return mid, q, g
        if (g < 0) == (glo < 0):
            lo, glo = mid, g
        else:
            hi = mid
    return None


def _interior_candidates(table, costs, grid_points, tol):
    found = []
    ps = np.linspace(0.0, 1.0, grid_points)
    prev = None
    for p in ps:
        q, g = _attacker_along_curve(float(p), table, costs)
        if q is None:
            prev = None
            continue
        if abs(g) < tol:
            found.append((float(p), q))
        elif prev is not None and (prev[2] < 0) != (g < 0) and abs(prev[2]) >= tol:
            root = _bisect(prev[0], float(p), prev[2], table, costs, tol)
            if root is not None and abs(root[2]) < tol:
                found.append((root[0], root[1]))
        prev = (float(p), q, g)
    return found


def _boundary_candidates(table, costs, tol):
    cands = [(p, q) for p in (0.0, 1.0) for q in (0.0, 1.0)]
    for p in (0.0, 1.0):
        A, B = _client_coeffs(p, table, costs.c_D)
        if abs(A - B) <= tol:
            continue
        q = B / (B - A)
        if 0.0 <= q <= 1.0:
            cands.append((p, q))
    for q in (0.0, 1.0):
        # attacker residual is affine in p at fixed q
        g0 = attacker_indifference_residual(0.0, q, table, costs.c_A)
        g1 = attacker_indifference_residual(1.0, q, table, costs.c_A) - g0
        if abs(g1) <= tol:
            continue
        p = -g0 / g1
        if 0.0 <= p <= 1.0:
            cands.append((p, q))
    return cands


def _make(p, q, table, costs, dev_grid, dev_tol):
    cr = float(client_indifference_residual(p, q, table, costs.c_D))
    ar = float(attacker_indifference_residual(p, q, table, costs.c_A))
    cg, ag, jg = deviation_gains(p, q, table, costs, dev_grid)
    interior = 0.0 < p < 1.0 and 0.0 < q < 1.0
    return MixedEquilibrium(
        p=float(p), q=float(q), kind="interior" if interior else "boundary",
        client_residual=cr, attacker_residual=ar,
        client_gain=cg, attacker_gain=ag, attacker_joint_gain=jg,
        verified=cg <= dev_tol and ag <= dev_tol,
        u_defender=float(game.client_avg_utility(q, q, p, p, table, costs.c_D)),
        u_attacker=float(game.attacker_avg_utility(p, p, q, q, table, costs.c_A)),
    )


def solve_two_client(table: AccuracyTable, costs: GameCosts, grid_points: int = 2001, tol: float = 1e-9,
                     dev_grid: int = 1001, dev_tol: float = 1e-6) -> list[MixedEquilibrium]:
    """All symmetric equilibria found by the interior curve scan and boundary enumeration.

    Interior roots are always returned, flagged by the deviation check;
    boundary candidates are returned only when the check passes. The attacker
    is checked per target (one attack probability moved, the other held); the
    joint two-coordinate gain is reported separately.
    """
    game._need_two(table)
    if grid_points < 101:
        raise ValueError("grid_points must be >= 101")
    if tol <= 0:
        raise ValueError("tol must be positive")
    out = {}
    for p, q in _interior_candidates(table, costs, grid_points, tol):
        eq = _make(p, q, table, costs, dev_grid, dev_tol)
        out.setdefault((round(p, 9), round(q, 9)), eq)
    for p, q in _boundary_candidates(table, costs, tol):
        eq = _make(p, q, table, costs, dev_grid, dev_tol)
        if eq.verified:
            out.setdefault((round(p, 9), round(q, 9)), eq)
    return sorted(out.values(), key=lambda e: (e.kind != "interior", e.p, e.q))


# -- n-client pure equilibrium ---------------------------------------------

def _argmax_set(values) -> frozenset:
    best = max(values)
    return frozenset(j for j, v in enumerate(values) if v >= best - TIE_TOL)


def best_response_attacker(i: int, table: AccuracyTable, c_A: float) -> frozenset:
    return _argmax_set([game.attack_utility_nm(i, m, table, c_A) for m in range(table.n + 1)])


def best_response_defender(m: int, table: AccuracyTable, c_D: float) -> frozenset:
    return _argmax_set([game.defense_utility_nm(i, m, table, c_D) for i in range(table.n + 1)])


@dataclass
class BestResponseMap:
    attacker: dict
    defender: dict

    def to_dict(self):
        return {"attacker": {str(i): sorted(ms) for i, ms in self.attacker.items()},
                "defender": {str(m): sorted(is_) for m, is_ in self.defender.items()}}


def best_response_map(table: AccuracyTable, costs: GameCosts) -> BestResponseMap:
    n = table.n
    return BestResponseMap(
        attacker={i: best_response_attacker(i, table, costs.c_A) for i in range(n + 1)},
        defender={m: best_response_defender(m, table, costs.c_D) for m in range(n + 1)},
    )


@dataclass(frozen=True)
class PureEquilibrium:
    i_star: int
    m_star: int
    u_defender: float
    u_attacker: float

    def to_dict(self):
        return {"kind": "pure", "i_star": self.i_star, "m_star": self.m_star,
                "u_defender": self.u_defender, "u_attacker": self.u_attacker}


def find_pure_nash(table: AccuracyTable, costs: GameCosts, responses: BestResponseMap | None = None
                   ) -> list[PureEquilibrium]:
    """Every (i, m) with i in B_D(m) and m in B_A(i), sorted by (i, m)."""
    br = responses or best_response_map(table, costs)
    out = []
    for m, admits in sorted(br.defender.items()):
        for i in sorted(admits):
            if m in br.attacker[i]:
                out.append(PureEquilibrium(i, m, game.defense_utility_nm(i, m, table, costs.c_D),
                                           game.attack_utility_nm(i, m, table, costs.c_A)))
    return sorted(out, key=lambda e: (e.i_star, e.m_star))


def best_response_cycle(br: BestResponseMap, start: int = 0) -> list[tuple[int, int]]:
    """Alternating best-response path from attacker strategy ``start``.

    Follows the smallest member of each response set and returns the profiles
    (i, m) of the cycle it falls into.
    """
    m = start
    seen, path = {}, []
    while True:
        i = min(br.defender[m])
        m_next = min(br.attacker[i])
        state = (i, m)
        if state in seen:
            return path[seen[state]:]
        seen[state] = len(path)
        path.append(state)
        m = m_next


@dataclass
class SweepPoint:
    n: int
    equilibrium: PureEquilibrium | None
    count: int
    responses: BestResponseMap | None = field(default=None, repr=False)

    @property
    def u_defender(self):
        return self.equilibrium.u_defender if self.equilibrium else float("nan")

    @property
    def u_attacker(self):
        return self.equilibrium.u_attacker if self.equilibrium else float("nan")


def select_equilibrium(eqs: list[PureEquilibrium]) -> PureEquilibrium | None:
    """Highest defender utility; remaining ties go to the smallest (i, m)."""
    if not eqs:
        return None
    return min(eqs, key=lambda e: (-e.u_defender, e.i_star, e.m_star))


def equilibrium_sweep(tables, costs: GameCosts) -> list[SweepPoint]:
    """One point per table in ascending n; gaps where no pure equilibrium exists."""
    if isinstance(tables, dict):
        tables = tables.values()
    points = []
    for table in sorted(tables, key=lambda t: t.n):
        br = best_response_map(table, costs)
        eqs = find_pure_nash(table, costs, br)
        points.append(SweepPoint(table.n, select_equilibrium(eqs), len(eqs), None if eqs else br))
    return points


def analytic_table(n: int, slope: float = 0.4) -> AccuracyTable:
    """U[k|i] = clamp(0.5 + slope*(i - 2k)/n, 0, 1)."""
    return AccuracyTable.from_function(n, lambda k, i: min(1.0, max(0.0, 0.5 + slope * (i - 2 * k) / n)))
