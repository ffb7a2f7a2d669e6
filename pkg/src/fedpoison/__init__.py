"""Poisoning attacks and admission defenses for federated signal classification."""

from .equilibrium import find_pure_nash, solve_two_client
from .fl import AccuracyTable, FLConfig, Roster, estimate_table, run_fl
from .game import GameCosts
from .signals import ChannelConfig

__all__ = [
    "AccuracyTable", "ChannelConfig", "FLConfig", "GameCosts", "Roster",
    "estimate_table", "find_pure_nash", "run_fl", "solve_two_client",
]
