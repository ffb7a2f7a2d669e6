"""Federated averaging with label-flipping clients, and the accuracy table.

``run_fl`` simulates one federation: the server broadcasts the global
weights, every admitted client runs local RMSprop epochs on its own data
(labels flipped if the client is poisoned) and the server replaces the
global weights with the mean of the returned local weights.

``estimate_table`` repeats this over random rosters to estimate the
accuracy U[k|i] of a federation with ``i`` admitted clients of which ``k``
are poisoned.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import nn
from .signals import ChannelConfig, Dataset, client_rng, generate_client_dataset, generate_test_dataset

CHANCE_ACCURACY = 0.5


@dataclass(frozen=True)
class FLConfig:
    rounds: int = 100
    local_epochs_per_round: int = 1
    batch_size: int = 32
    samples_per_client: int = 1000
    test_samples: int = 1000
    learning_rate: float = 1e-3
    rho: float = 0.9
    epsilon: float = 1e-8
    flip_fraction: float = 1.0
    master_seed: int = 0
    arch: nn.Architecture = nn.CLASSIFIER

    def __post_init__(self):
        for name in ("rounds", "local_epochs_per_round", "batch_size", "samples_per_client", "test_samples"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.flip_fraction <= 1.0:
            raise ValueError("flip_fraction must lie in [0, 1]")


PAPER_PROFILE = dict(rounds=100, samples_per_client=1000, test_samples=1000)
FAST_PROFILE = dict(rounds=20, samples_per_client=200, test_samples=1000)


@dataclass(frozen=True)
class Roster:
    """Clients are numbered 1..n."""

    n: int
    admitted: frozenset
    poisoned: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "admitted", frozenset(self.admitted))
        object.__setattr__(self, "poisoned", frozenset(self.poisoned))
        everyone = set(range(1, self.n + 1))
        if self.n < 1 or not self.admitted <= everyone or not self.poisoned <= everyone:
            raise ValueError("admitted and poisoned must be subsets of 1..n")

    @property
    def i(self):
        return len(self.admitted)

    @property
    def m(self):
        return len(self.poisoned)

    @property
    def k(self):
        return len(self.admitted & self.poisoned)


def poison_labels(dataset: Dataset, flip_fraction: float, seed) -> Dataset:
    """Flip the labels of a random ceil(flip_fraction * N) subset of samples."""
    if not 0.0 <= flip_fraction <= 1.0:
        raise ValueError("flip_fraction must lie in [0, 1]")
    n = len(dataset)
    count = math.ceil(flip_fraction * n)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    idx = rng.choice(n, size=count, replace=False)
    labels = dataset.labels.copy()
    labels[idx] = 1 - labels[idx]
    return dataset.with_labels(labels)


def federated_average(models) -> np.ndarray:
    models = [np.asarray(m, dtype=float) for m in models]
    if not models:
        raise ValueError("need at least one model to average")
    if any(m.shape != models[0].shape for m in models):
        raise ValueError("all parameter vectors must have the same length")
    return np.mean(models, axis=0)


@dataclass
class FLResult:
    accuracy: float
    params: np.ndarray
    history: list = field(default_factory=list)


def client_data(client_id: int, poisoned: bool, cfg: FLConfig, channel: ChannelConfig) -> Dataset:
    d = generate_client_dataset(client_id, cfg.samples_per_client, channel)
    if poisoned and cfg.flip_fraction > 0:
        d = poison_labels(d, cfg.flip_fraction, client_rng(cfg.master_seed, 0xF11B, client_id))
    return d


def test_data(n: int, cfg: FLConfig, channel: ChannelConfig) -> Dataset:
    return generate_test_dataset(range(1, n + 1), cfg.test_samples, channel)


def run_fl(roster: Roster, cfg: FLConfig, channel: ChannelConfig, test: Dataset | None = None,
           track: bool = False) -> FLResult:
    """Train a global model on the admitted clients and score it on clean test data.

    With nobody admitted there is no model and the accuracy is chance level.
    Each client keeps its own RMSprop accumulator across rounds.
    """
    arch = cfg.arch
    params = nn.init_params(arch, client_rng(cfg.master_seed, 0x1A17))
    if test is None:
        test = test_data(roster.n, cfg, channel)
    if roster.i == 0:
        return FLResult(CHANCE_ACCURACY, params)

    clients = sorted(roster.admitted)
    data = {c: client_data(c, c in roster.poisoned, cfg, channel) for c in clients}
    states = {c: nn.OptimizerState.fresh(len(params), learning_rate=cfg.learning_rate,
                                         rho=cfg.rho, epsilon=cfg.epsilon) for c in clients}
    rngs = {c: client_rng(cfg.master_seed, 0x7EA1, c) for c in clients}
    history = []
    for _ in range(cfg.rounds):
        local = []
        for c in clients:
            w, states[c], _ = nn.train_epochs(params, data[c].features, data[c].labels, states[c],
                                              rngs[c], arch, cfg.local_epochs_per_round, cfg.batch_size)
            local.append(w)
        params = federated_average(local)
        if track:
            history.append(nn.accuracy(params, test.features, test.labels, arch))
    acc = nn.accuracy(params, test.features, test.labels, arch)
    return FLResult(acc, params, history)


@dataclass
class AccuracyTable:
    """U[k|i] for 0 <= k <= i <= n; ``u(k, i)`` reads an entry."""

    n: int
    entries: dict
    trials: int | None = None
    seed: int | None = None

    def __post_init__(self):
        self.entries = {(int(i), int(k)): float(v) for (i, k), v in self.entries.items()}
        expected = set(table_cells(self.n))
        if set(self.entries) != expected:
            missing = sorted(expected - set(self.entries))
            extra = sorted(set(self.entries) - expected)
            raise ValueError(f"table for n={self.n} has missing cells {missing} / extra cells {extra}")
        bad = [c for c, v in self.entries.items() if not 0.0 <= v <= 1.0]
        if bad:
            raise ValueError(f"accuracies outside [0, 1] at {sorted(bad)}")

    def u(self, k: int, i: int) -> float:
        return self.entries[(i, k)]

    def matrix(self) -> np.ndarray:
        """(n+1, n+1) array indexed [i, k]; NaN above the diagonal."""
        out = np.full((self.n + 1, self.n + 1), np.nan)
        for (i, k), v in self.entries.items():
            out[i, k] = v
        return out

    @classmethod
    def from_function(cls, n: int, fn, **kw) -> "AccuracyTable":
        return cls(n, {(i, k): fn(k, i) for i, k in table_cells(n)}, **kw)


def table_cells(n: int):
    return [(i, k) for i in range(n + 1) for k in range(i + 1)]


def sample_roster(n: int, i: int, k: int, rng: np.random.Generator) -> Roster:
    """Uniformly random i admitted clients, k of them poisoned."""
    admitted = rng.choice(np.arange(1, n + 1), size=i, replace=False)
    poisoned = rng.choice(admitted, size=k, replace=False) if k else []
    return Roster(n, frozenset(int(a) for a in admitted), frozenset(int(p) for p in poisoned))


def _cell_job(args):
    n, i, k, trial, cfg, channel = args
    rng = client_rng(cfg.master_seed, 0xCE11, i, k, trial)
    roster = sample_roster(n, i, k, rng)
    trial_cfg = replace(cfg, master_seed=int(rng.integers(2**63)))
    return run_fl(roster, trial_cfg, channel, test_data(n, cfg, channel)).accuracy


def estimate_table(n: int, trials: int, cfg: FLConfig, channel: ChannelConfig, workers: int = 1) -> AccuracyTable:
    """Monte Carlo mean accuracy per (i, k); U[0|0] is pinned to chance.

    Every (i, k, trial) cell seeds itself from (master_seed, i, k, trial), so
    the result does not depend on ``workers``.
    """
    if n < 1 or trials < 1:
        raise ValueError("need n >= 1 and trials >= 1")
    jobs = [(n, i, k, t, cfg, channel) for i, k in table_cells(n) if i > 0 for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            accs = list(pool.map(_cell_job, jobs, chunksize=1))
    else:
        accs = [_cell_job(j) for j in jobs]
    sums = {}
    for job, a in zip(jobs, accs):
        sums.setdefault((job[1], job[2]), []).append(a)
    entries = {cell: float(np.mean(v)) for cell, v in sums.items()}
    entries[(0, 0)] = CHANCE_ACCURACY
    return AccuracyTable(n, entries, trials, cfg.master_seed)


def _fmt_accuracy(x: float) -> str:
    s = f"{x:.6f}"
    return s if float(s) == x else repr(float(x))


def save_table_csv(table: AccuracyTable, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "k", "accuracy"])
        for i, k in table_cells(table.n):
            w.writerow([i, k, _fmt_accuracy(table.u(k, i))])


class TableFormatError(ValueError):
    pass


def load_table_csv(path) -> AccuracyTable:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["i", "k", "accuracy"]:
        raise TableFormatError(f"{path}: line 1: expected header 'i,k,accuracy'")
    entries = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            i, k, acc = int(row[0]), int(row[1]), float(row[2])
            if len(row) != 3:
                raise ValueError
        except (ValueError, IndexError):
            raise TableFormatError(f"{path}: line {lineno}: malformed row {','.join(row)!r}") from None
        if not (0 <= k <= i) or not 0.0 <= acc <= 1.0 or (i, k) in entries:
            raise TableFormatError(f"{path}: line {lineno}: invalid or duplicate row {','.join(row)!r}")
        entries[(i, k)] = acc
    if not entries:
        raise TableFormatError(f"{path}: no data rows")
    n = max(i for i, _ in entries)
    try:
        return AccuracyTable(n, entries)
    except ValueError as exc:
        raise TableFormatError(f"{path}: {exc}") from None
