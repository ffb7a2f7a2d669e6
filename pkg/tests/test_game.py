import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedpoison import game
from fedpoison.fl import AccuracyTable
from fedpoison.game import BEST, WORST


def random_table(rng, n):
    return AccuracyTable.from_function(n, lambda k, i: float(rng.random()))


# -- brute-force oracles ----------------------------------------------------

def outcome_value(table, admitted, attacked):
    """Reward of one realized two-client outcome (admitted/attacked are bool pairs)."""
    i = sum(admitted)
    k = sum(a and b for a, b in zip(admitted, attacked))
    return table.u(k, i)


def prob(x, flag):
    return x if flag else 1 - x


def brute_participate(q_other, p_self, p_other, table, c_D):
    total = 0.0
    for a_self, a_other, in_other in itertools.product([True, False], repeat=3):
        w = prob(p_self, a_self) * prob(p_other, a_other) * prob(q_other, in_other)
        total += w * (outcome_value(table, (True, in_other), (a_self, a_other)) - c_D)
    return total


def brute_decline(q_other, p_other, table):
    total = 0.0
    for a_other, in_other in itertools.product([True, False], repeat=2):
        w = prob(p_other, a_other) * prob(q_other, in_other)
        total += w * outcome_value(table, (False, in_other), (False, a_other))
    return total


def brute_attacker(attacked, q1, q2, table, c_A):
    total = 0.0
    for in1, in2 in itertools.product([True, False], repeat=2):
        w = prob(q1, in1) * prob(q2, in2)
        total += w * (-outcome_value(table, (in1, in2), attacked) - c_A * sum(attacked))
    return total


def brute_reward(n, i, m, table):
    """Average accuracy over every placement of m poisoned clients among n."""
    admitted = set(range(i))
    vals = [table.u(len(admitted & set(s)), i) for s in itertools.combinations(range(n), m)]
    return sum(vals) / len(vals)


# -- bound_k ----------------------------------------------------------------

@pytest.mark.parametrize("args, mode, k", [
    ((10, 3, 5), BEST, 0), ((10, 3, 5), WORST, 3), ((10, 8, 5), BEST, 3),
    ((7, 0, 4), BEST, 0), ((7, 0, 4), WORST, 0), ((7, 0, 0), WORST, 0),
])
def test_bound_k_examples(args, mode, k):
    assert game.bound_k(*args, mode) == k


def test_bound_k_brackets_realized_overlap():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 30))
        m, i = (int(x) for x in rng.integers(0, n + 1, 2))
        poisoned = set(rng.choice(n, m, replace=False).tolist())
        admitted = set(rng.choice(n, i, replace=False).tolist())
        k = len(poisoned & admitted)
        assert game.bound_k(n, m, i, BEST) <= k <= game.bound_k(n, m, i, WORST)


@pytest.mark.parametrize("args", [(3, 4, 1, BEST), (3, 1, -1, BEST), (3, 1, 1, "median")])
def test_bound_k_errors(args):
    with pytest.raises(ValueError):
        game.bound_k(*args)


# -- hypergeometric weights -------------------------------------------------

@pytest.mark.parametrize("args, w", [
    ((4, 2, 2, 1), 2 / 3), ((5, 0, 3, 0), 1.0), ((10, 3, 5, 0), 1 / 12),
    ((4, 3, 1, 0), 0.25), ((4, 3, 0, 1), 0.0), ((4, 1, 4, 0), 0.0),
])
def test_hypergeom_examples(args, w):
    assert game.hypergeom_weight(*args) == pytest.approx(w, abs=1e-15)


def test_hypergeom_normalized():
    for n in range(31):
        for m in range(n + 1):
            for i in range(n + 1):
                s = math.fsum(game.hypergeom_weight(n, m, i, k) for k in range(n + 1))
                assert abs(s - 1) < 1e-12


def test_hypergeom_matches_subset_enumeration():
    n = 7
    for m, i in itertools.product(range(n + 1), repeat=2):
        subsets = list(itertools.combinations(range(n), m))
        for k in range(n + 1):
            count = sum(len(set(s) & set(range(i))) == k for s in subsets)
            assert game.hypergeom_weight(n, m, i, k) == pytest.approx(count / len(subsets), abs=1e-15)


def test_hypergeom_large_n_uses_logs():
    w = game.hypergeom_weight(200, 50, 100, 25)
    exact = math.comb(100, 25) ** 2 / math.comb(200, 50)
    assert w == pytest.approx(exact, rel=1e-10)


# -- two-client utilities ---------------------------------------------------

def test_participate_degenerate(toy):
    assert game.client_utility_participate(0, 0, 0.3, toy, 0.05) == pytest.approx(0.8 - 0.05)
    assert game.client_utility_participate(1, 1, 1, toy, 0.05) == pytest.approx(0.1 - 0.05)


def test_participate_matches_enumeration(toy):
    got = game.client_utility_participate(0.5, 0.5, 0.5, toy, 0.05)
    assert got == pytest.approx(brute_participate(0.5, 0.5, 0.5, toy, 0.05), abs=1e-15)


def test_decline(toy):
    assert game.client_utility_decline(0, 0.9, toy) == 0.5
    assert game.client_utility_decline(1, 0, toy) == 0.8
    got = game.client_utility_decline(0.3, 0.7, toy)
    assert got == pytest.approx(0.3 * (0.7 * 0.2 + 0.3 * 0.8) + 0.7 * 0.5, abs=1e-15)
    assert got == pytest.approx(brute_decline(0.3, 0.7, toy), abs=1e-15)


def test_client_average_mixture(toy):
    args = (0.4, 0.3, 0.6)
    part = game.client_utility_participate(*args, toy, 0.05)
    dec = game.client_utility_decline(0.4, 0.6, toy)
    assert game.client_avg_utility(1, *args, toy, 0.05) == pytest.approx(part)
    assert game.client_avg_utility(0, *args, toy, 0.05) == pytest.approx(dec)
    assert game.client_avg_utility(0.5, *args, toy, 0.05) == pytest.approx((part + dec) / 2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=3, max_size=3), st.floats(0, 1), st.integers(0, 2**32))
def test_client_utilities_match_enumeration(probs, c_D, seed):
    table = random_table(np.random.default_rng(seed), 2)
    q, ps, po = probs
    assert game.client_utility_participate(q, ps, po, table, c_D) == pytest.approx(
        brute_participate(q, ps, po, table, c_D), abs=1e-12)
    assert game.client_utility_decline(q, po, table) == pytest.approx(brute_decline(q, po, table), abs=1e-12)


def test_attacker_cases_certain_admission(toy):
    both, only1, only2, none = game.attacker_case_utilities(1, 1, toy, 0.1)
    assert both == pytest.approx(-0.1 - 0.2)
    assert none == pytest.approx(-0.9)
    assert only1 == only2 == pytest.approx(-0.5 - 0.1)


def test_attacker_cases_nobody_admitted(toy):
    both, only1, only2, none = game.attacker_case_utilities(0, 0, toy, 0.1)
    assert both == pytest.approx(-0.5 - 0.2)
    assert only1 == only2 == pytest.approx(-0.5 - 0.1)
    assert none == pytest.approx(-0.5)


def test_attacker_cases_match_enumeration(toy):
    cases = game.attacker_case_utilities(0.4, 0.6, toy, 0.1)
    plans = [(True, True), (True, False), (False, True), (False, False)]
    for got, plan in zip(cases, plans):
        assert got == pytest.approx(brute_attacker(plan, 0.4, 0.6, toy, 0.1), abs=1e-15)


def test_attacker_average(toy):
    cases = game.attacker_case_utilities(0.4, 0.6, toy, 0.1)
    assert game.attacker_avg_utility(0, 0, 0.4, 0.6, toy, 0.1) == pytest.approx(cases[3])
    assert game.attacker_avg_utility(1, 1, 0.4, 0.6, toy, 0.1) == pytest.approx(cases[0])
    assert game.attacker_avg_utility(0.5, 0.5, 0.4, 0.6, toy, 0.1) == pytest.approx(sum(cases) / 4)


def test_broadcasting(toy):
    g = np.linspace(0, 1, 5)
    out = game.client_avg_utility(g, 0.3, 0.2, 0.2, toy, 0.05)
    assert out.shape == (5,)
    assert out[2] == pytest.approx(game.client_avg_utility(0.5, 0.3, 0.2, 0.2, toy, 0.05))


def test_two_client_errors(toy):
    with pytest.raises(ValueError, match="two-client"):
        game.client_utility_decline(0.5, 0.5, AccuracyTable.from_function(3, lambda k, i: 0.5))
    with pytest.raises(ValueError):
        game.client_utility_participate(1.2, 0.5, 0.5, toy, 0.0)


@pytest.mark.parametrize("kw", [dict(c_A=-1), dict(c_D=float("nan"))])
def test_costs_validation(kw):
    with pytest.raises(ValueError):
        game.GameCosts(**kw)


# -- n-client utilities -----------------------------------------------------

def test_attack_and_defense_examples(toy):
    assert game.attack_utility_nm(2, 1, toy, 0.05) == pytest.approx(-0.55)
    assert game.defense_utility_nm(2, 1, toy, 0.1) == pytest.approx(0.3)
    for i in range(3):
        assert game.attack_utility_nm(i, 0, toy, 7.0) == toy.u(0, i) * -1
    for m in range(3):
        assert game.defense_utility_nm(0, m, toy, 0.3) == 0.5


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32), st.floats(0, 2), st.floats(0, 2))
def test_utilities_cancel_up_to_costs(n, seed, c_A, c_D):
    table = random_table(np.random.default_rng(seed), n)
    for i, m in itertools.product(range(n + 1), repeat=2):
        total = game.defense_utility_nm(i, m, table, c_D) + game.attack_utility_nm(i, m, table, c_A)
        assert total == pytest.approx(-i * c_D - m * c_A, abs=1e-12)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_expected_reward_matches_subset_enumeration(n):
    table = random_table(np.random.default_rng(n), n)
    for i, m in itertools.product(range(n + 1), repeat=2):
        assert game.expected_reward(i, m, table) == pytest.approx(brute_reward(n, i, m, table), abs=1e-12)


def test_utility_matrices(toy):
    costs = game.GameCosts(0.5, 0.05)
    UD, UA = game.utility_matrices(toy, costs)
    for i, m in itertools.product(range(3), repeat=2):
        assert UD[i, m] == pytest.approx(game.defense_utility_nm(i, m, toy, 0.05))
        assert UA[i, m] == pytest.approx(game.attack_utility_nm(i, m, toy, 0.5))


# -- defense bounds ---------------------------------------------------------

def test_best_bound_toy(toy):
    b = game.defense_bound_utility(toy, 0.0, BEST)
    assert (b.value, b.i) == (0.9, 2)


def test_expensive_admission_admits_nobody(toy):
    for mode in (BEST, WORST):
        b = game.defense_bound_utility(toy, 1.5, mode)
        assert (b.i, b.value) == (0, 0.5)


def test_worst_never_exceeds_best():
    rng = np.random.default_rng(1)
    for _ in range(200):
        table = random_table(rng, int(rng.integers(1, 9)))
        c_D = float(rng.random() * 0.3)
        for orientation in ("bracket", "maxmin"):
            best = game.defense_bound_utility(table, c_D, BEST, orientation)
            worst = game.defense_bound_utility(table, c_D, WORST, orientation)
            assert worst.value <= best.value + 1e-15


def test_bound_matches_scan():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(1, 7))
        table = random_table(rng, n)
        best = max(table.u(game.bound_k(n, m, i, BEST), i) for i in range(n + 1) for m in range(n + 1))
        worst = max(min(table.u(game.bound_k(n, m, i, WORST), i) for m in range(n + 1)) for i in range(n + 1))
        assert game.defense_bound_utility(table, 0.0, BEST).value == best
        assert game.defense_bound_utility(table, 0.0, WORST).value == worst
