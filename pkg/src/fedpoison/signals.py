"""Synthetic BPSK/QPSK spectrum samples observed by spatially spread sensors.

Each sample is a 16-symbol burst (by default the transmitter's fixed
per-modulation preamble) passed through a path-loss channel with a random
phase rotation and additive complex Gaussian noise, reduced to 16 phases
followed by 16 powers.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

N_SYMBOLS = 16
N_FEATURES = 2 * N_SYMBOLS
BPSK, QPSK = 0, 1
TEST_CLIENT = -1

_BPSK_PHASES = np.array([0.0, np.pi])
_QPSK_PHASES = np.pi / 4 + np.pi / 2 * np.arange(4)

# Constellation indices of the 16-symbol burst each transmitter repeats.
BPSK_PREAMBLE = np.array([0, 0, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 1, 0, 1])
QPSK_PREAMBLE = np.array([0, 2, 1, 3, 3, 0, 2, 1, 1, 3, 0, 2, 2, 1, 3, 0])
SYMBOL_MODELS = ("preamble", "random")


@dataclass(frozen=True)
class ChannelConfig:
    path_loss_exponent: float = 2.7
    reference_gain: float = 1.0
    # ~10 dB SNR at the median distance 5.5 m
    noise_power: float = 1e-3
    distance_min: float = 1.0
    distance_max: float = 10.0
    seed: int = 0
    # "preamble": every burst carries the fixed per-class sequence above;
    # "random": i.i.d. uniform symbols (hard to learn from raw phases)
    symbol_model: str = "preamble"

    def __post_init__(self):
        if not self.path_loss_exponent > 0:
            raise ValueError("path_loss_exponent must be positive")
        if self.noise_power < 0:
            raise ValueError("noise_power must be non-negative")
        if not 0 < self.distance_min <= self.distance_max:
            raise ValueError("need 0 < distance_min <= distance_max")
        if self.symbol_model not in SYMBOL_MODELS:
            raise ValueError(f"symbol_model must be one of {SYMBOL_MODELS}")

    def gain(self, distance):
        return self.reference_gain * np.asarray(distance, dtype=float) ** (-self.path_loss_exponent)


@dataclass
class Dataset:
    """Features of shape (N, 32) and integer labels of shape (N,)."""

    features: np.ndarray
    labels: np.ndarray
    client_id: int = TEST_CLIENT

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[1] != N_FEATURES:
            raise ValueError(f"features must have shape (N, {N_FEATURES})")
        if len(self.labels) != len(self.features) or len(self.labels) == 0:
            raise ValueError("need a non-empty dataset with one label per sample")
        if not np.isin(self.labels, (BPSK, QPSK)).all():
            raise ValueError("labels must be 0 (BPSK) or 1 (QPSK)")

    def __len__(self):
        return len(self.labels)

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.features, labels, self.client_id)


def features_from_iq(iq) -> np.ndarray:
    """Phase (radians, in (-pi, pi]) and power of each of 16 symbols.

    Accepts a single 16-vector or a stack of shape (..., 16).
    """
    iq = np.asarray(iq, dtype=complex)
    if iq.shape[-1:] != (N_SYMBOLS,):
        raise ValueError(f"expected {N_SYMBOLS} complex samples, got shape {iq.shape}")
    phase = np.arctan2(iq.imag, iq.real)
    # arctan2 returns -pi for (negative, -0.0)
    phase = np.where(phase == -np.pi, np.pi, phase)
    power = iq.real**2 + iq.imag**2
    return np.concatenate([phase, power], axis=-1)


def client_rng(seed: int, *stream) -> np.random.Generator:
    """Independent stream for (seed, *stream); negative ids are allowed."""
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(s) & 0xFFFFFFFFFFFFFFFF for s in stream]
    return np.random.default_rng(np.random.SeedSequence(words))


def client_distance(channel: ChannelConfig, client_id: int) -> float:
    rng = client_rng(channel.seed, 0xD15, client_id)
    return float(rng.uniform(channel.distance_min, channel.distance_max))


def _iq_samples(rng, labels, distance, channel):
    n = len(labels)
    if channel.symbol_model == "random":
        bpsk = rng.integers(0, 2, size=(n, N_SYMBOLS))
        qpsk = rng.integers(0, 4, size=(n, N_SYMBOLS))
    else:
        bpsk, qpsk = BPSK_PREAMBLE, QPSK_PREAMBLE
    phases = np.where(labels[:, None] == QPSK, _QPSK_PHASES[qpsk], _BPSK_PHASES[bpsk])
    # one common rotation per burst: unsynchronised receiver
    rotation = rng.uniform(0.0, 2 * np.pi, size=(n, 1))
    amp = np.sqrt(channel.gain(np.asarray(distance)))
    if amp.ndim:
        amp = amp[:, None]
    signal = amp * np.exp(1j * (phases + rotation))
    # total noise power per symbol = noise_power, split over I and Q
    sigma = np.sqrt(channel.noise_power / 2)
    noise = sigma * (rng.standard_normal((n, N_SYMBOLS)) + 1j * rng.standard_normal((n, N_SYMBOLS)))
    return signal + noise


def generate_client_dataset(client_id: int, num_samples: int, channel: ChannelConfig,
                            label_balance: float = 0.5) -> Dataset:
    """Samples seen by one sensor at a fixed random distance from the transmitter."""
    if num_samples <= 0:
        raise ValueError("num_samples must be positive")
    if not 0.0 <= label_balance <= 1.0:
        raise ValueError("label_balance must lie in [0, 1]")
    distance = client_distance(channel, client_id)
    rng = client_rng(channel.seed, 0xDA7A, client_id, num_samples)
    labels = (rng.random(num_samples) < label_balance).astype(np.int64)
    iq = _iq_samples(rng, labels, distance, channel)
    return Dataset(features_from_iq(iq), labels, client_id)


def generate_test_dataset(client_ids, num_samples: int, channel: ChannelConfig,
                          label_balance: float = 0.5, stream: int = 0) -> Dataset:
    """Held-out samples spread evenly (round robin) over the given sensors' locations."""
    client_ids = list(client_ids)
    if not client_ids:
        raise ValueError("need at least one client location")
    if num_samples <= 0:
        raise ValueError("num_samples must be positive")
    rng = client_rng(channel.seed, 0x7E57, stream, num_samples, len(client_ids))
    distances = np.array([client_distance(channel, c) for c in client_ids])
    where = distances[np.arange(num_samples) % len(client_ids)]
    labels = (rng.random(num_samples) < label_balance).astype(np.int64)
    iq = _iq_samples(rng, labels, where, channel)
    return Dataset(features_from_iq(iq), labels, TEST_CLIENT)


def save_dataset_csv(dataset: Dataset, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label"] + [f"f{j}" for j in range(N_FEATURES)])
        for y, x in zip(dataset.labels, dataset.features):
            w.writerow([int(y)] + [repr(float(v)) for v in x])


def load_dataset_csv(path, client_id: int = TEST_CLIENT) -> Dataset:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = ["label"] + [f"f{j}" for j in range(N_FEATURES)]
    if not rows or rows[0] != header:
        raise ValueError(f"{path}: bad header")
    body = rows[1:]
    labels = [int(r[0]) for r in body]
    feats = [[float(v) for v in r[1:]] for r in body]
    return Dataset(np.array(feats, dtype=float).reshape(-1, N_FEATURES), labels, client_id)
