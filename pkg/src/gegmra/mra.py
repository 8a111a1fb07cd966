"""Decimating analysis filter bank (no synthesis side)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .filters import FilterPair


@dataclass(frozen=True)
class MraDecomposition:
    """Approximations and details for levels 1..J.

    ``approximations[j-1]`` and ``details[j-1]`` hold level j. ``delays[j-1]``
    is the constant group delay of the level-j output expressed in input
    samples (None for filters without linear phase).
    """

    levels: int
    approximations: List[np.ndarray]
    details: List[np.ndarray]
    effective_rate: List[float]
    source_length: int
    delays: List[Optional[float]]

    def approximation(self, level: int) -> np.ndarray:
        return self.approximations[level - 1]

    def detail(self, level: int) -> np.ndarray:
        return self.details[level - 1]


def _filter_decimate(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # y[n] = sum_k taps[k] x[2n - k]; x[-m] -> x[m-1] (half-sample symmetric)
    L = len(taps)
    xe = np.pad(x, (L - 1, 0), mode="symmetric")
    y = np.convolve(xe, taps, mode="valid")
    return y[::2]


def analyze_one_level(x, pair: FilterPair) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("input must be one-dimensional")
    if len(x) < pair.length:
        raise ValueError(f"input of {len(x)} samples is shorter than the {pair.length}-tap filter")
    return _filter_decimate(x, pair.h), _filter_decimate(x, pair.g)


def decompose(x, pair: FilterPair, levels: int, sample_rate: float = 7680.0) -> MraDecomposition:
    x = np.asarray(x, dtype=float)
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if 2**levels > len(x):
        raise ValueError(f"{levels} levels need at least {2**levels} samples, got {len(x)}")
    approx, details, rates, delays = [], [], [], []
    a = x
    gd = pair.group_delay
    for j in range(1, levels + 1):
        a, d = analyze_one_level(a, pair)
        approx.append(a)
        details.append(d)
        rates.append(sample_rate / 2**j)
        # delay at level j in input samples: gd * (1 + 2 + ... + 2^{j-1})
        delays.append(None if gd is None else gd * (2**j - 1))
    return MraDecomposition(levels, approx, details, rates, len(x), delays)
