"""Frequency-domain characterization of analysis filters.

Responses are normalized so that a scaling filter has unit gain at DC (the
coefficients themselves sum to sqrt(2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .filters import SQRT2, FilterPair

MINUS_3DB = 10.0 ** (-3.0 / 20.0)
HALF_POWER = 1.0 / math.sqrt(2.0)

# Frequency grid of the standard band tables: 512 bins on [0, fs/2).
TABLE_GRID_POINTS = 512


class NoCrossing(ValueError):
    """The magnitude response never crosses the cutoff level on the searched side."""


class RootAccuracyError(RuntimeError):
    pass


@dataclass(frozen=True)
class FrequencyResponse:
    omega: np.ndarray
    values: np.ndarray
    magnitude: np.ndarray
    phase: np.ndarray
    group_delay: np.ndarray
    coeffs: np.ndarray

    def at(self, omega: float) -> complex:
        """Exact response at an arbitrary frequency (not interpolated)."""
        return complex(_eval(self.coeffs, np.array([omega]))[0])


def _eval(coeffs: np.ndarray, omega: np.ndarray) -> np.ndarray:
    k = np.arange(len(coeffs))
    return np.exp(-1j * np.outer(omega, k)) @ coeffs / SQRT2


def dtft(coeffs: Sequence[float], grid_size: int = 4096) -> FrequencyResponse:
    """Sample H(w) = sum_k h_k e^{-jwk} / sqrt(2) on ``grid_size`` points of [0, pi].

    Group delay is the central difference of the unwrapped phase. The phase
    step between neighbours is taken as the angle of H[i+1]/H[i-1], which is
    the unwrapped difference wherever the phase is continuous; points at,
    next to, or straddling magnitude nulls are set to NaN.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0:
        raise ValueError("empty filter")
    if grid_size < 64:
        raise ValueError(f"grid_size must be >= 64, got {grid_size}")
    omega = np.linspace(0.0, math.pi, grid_size)
    H = _eval(c, omega)
    mag = np.abs(H)
    phase = np.unwrap(np.angle(H))

    dw = omega[1] - omega[0]
    gd = np.full(grid_size, np.nan)
    step = np.full(grid_size, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        step[1:-1] = np.angle(H[2:] / H[:-2])
        step[0] = np.angle(H[1] / H[0])
        step[-1] = np.angle(H[-1] / H[-2])
    gd = -step / np.r_[dw, np.full(grid_size - 2, 2 * dw), dw]
    # a step beyond pi/2 between neighbours is a sign flip through a null
    null = mag <= 1e-8
    near_null = null | (np.abs(step) > math.pi / 2)
    near_null[1:] |= null[:-1]
    near_null[:-1] |= null[1:]
    gd[near_null] = np.nan
    return FrequencyResponse(omega, H, mag, phase, gd, c)


def _magnitude_hz(coeffs: np.ndarray, f: np.ndarray, sample_rate: float) -> np.ndarray:
    return np.abs(_eval(coeffs, 2 * math.pi * np.asarray(f, dtype=float) / sample_rate))


def cutoff_minus3db(
    response: FrequencyResponse | Sequence[float],
    sample_rate: float,
    side: str = "lowpass",
    method: str = "table",
) -> float:
    """Cutoff frequency in Hz, searched from the band edge (DC or Nyquist).

    ``method="exact"`` bisects the first crossing of 1/sqrt(2) to 0.01 Hz.
    ``method="table"`` returns the first bin of a 512-point grid on [0, fs/2)
    whose level is at or below -3.0 dB; this is the convention that reproduces
    the standard band tables.
    """
    coeffs = response.coeffs if isinstance(response, FrequencyResponse) else np.asarray(response, float)
    if side not in ("lowpass", "highpass"):
        raise ValueError(f"side must be 'lowpass' or 'highpass', got {side!r}")
    nyq = sample_rate / 2.0

    if method == "table":
        f = np.arange(TABLE_GRID_POINTS) * nyq / TABLE_GRID_POINTS
        if side == "highpass":
            f = f[::-1]
        below = np.nonzero(_magnitude_hz(coeffs, f, sample_rate) <= MINUS_3DB)[0]
        if below.size == 0:
            raise NoCrossing(f"magnitude never falls to -3 dB on the {side} side")
        return float(f[below[0]])

    if method != "exact":
        raise ValueError(f"unknown cutoff method {method!r}")
    # coarse scan for the first sign change, then bisection
    f = np.linspace(0.0, nyq, 8193)
    if side == "highpass":
        f = f[::-1]
    m = _magnitude_hz(coeffs, f, sample_rate) - HALF_POWER
    if m[0] <= 0:
        raise NoCrossing(f"response starts below 1/sqrt(2) at the {side} band edge")
    idx = np.nonzero(m <= 0)[0]
    if idx.size == 0:
        raise NoCrossing(f"magnitude never crosses 1/sqrt(2) on the {side} side")
    lo, hi = f[idx[0] - 1], f[idx[0]]
    while abs(hi - lo) > 1e-3:
        mid = 0.5 * (lo + hi)
        if _magnitude_hz(coeffs, np.array([mid]), sample_rate)[0] > HALF_POWER:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def fundamental_leakage(pair: FilterPair, sample_rate: float = 7680.0, fundamental: float = 60.0) -> float:
    """Gain of the wavelet filter at the fundamental, relative to the scaling filter.

    A steady fundamental leaks into the level-1 detail with this amplitude
    ratio; it sets the raw pre-fault detail level and hence the threshold.
    """
    w = np.array([2 * math.pi * fundamental / sample_rate])
    return float(abs(_eval(pair.g, w)[0]) / abs(_eval(pair.h, w)[0]))


@dataclass(frozen=True)
class BandLevel:
    level: int
    samples_per_cycle: float
    scaling_band: Tuple[float, float]
    wavelet_band: Tuple[float, float]


@dataclass(frozen=True)
class BandTable:
    sample_rate: float
    filter_name: str
    levels: List[BandLevel]
    fundamental: float = 60.0

    def to_dict(self, rounded: bool = False) -> dict:
        def r(x):
            return int(round(x)) if rounded else x

        return {
            "filter": self.filter_name,
            "sample_rate": self.sample_rate,
            "levels": [
                {
                    "level": lv.level,
                    "samples_per_cycle": lv.samples_per_cycle,
                    "scaling_hz": [r(lv.scaling_band[0]), r(lv.scaling_band[1])],
                    "wavelet_hz": [r(lv.wavelet_band[0]), r(lv.wavelet_band[1])],
                }
                for lv in self.levels
            ],
        }


def band_table(
    pair: FilterPair | None,
    sample_rate: float = 7680.0,
    max_level: int = 7,
    fundamental: float = 60.0,
    method: str = "table",
) -> BandTable:
    """Per-level frequency bands; ``pair=None`` gives the ideal half-band split."""
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    if max_level < 1:
        raise ValueError("max_level must be >= 1")
    if pair is None:
        f_c = f_w = sample_rate / 4.0
        name = "ideal-orthogonal"
    else:
        f_c = cutoff_minus3db(pair.h, sample_rate, "lowpass", method)
        f_w = cutoff_minus3db(pair.g, sample_rate, "highpass", method)
        name = pair.name
    spc = sample_rate / fundamental
    levels = []
    for j in range(1, max_level + 1):
        scale = 2.0 ** (j - 1)
        levels.append(
            BandLevel(
                level=j,
                samples_per_cycle=spc / 2**j,
                scaling_band=(0.0, f_c / scale),
                wavelet_band=(f_w / scale, sample_rate / 2**j),
            )
        )
    return BandTable(sample_rate, name, levels, fundamental)


def zeros_on_unit_circle(coeffs: Sequence[float], tol: float = 1e-6) -> List[Tuple[complex, float]]:
    """Roots of sum_k h_k z^{-k} (companion-matrix eigenvalues), each with its radius."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if len(c) < 2:
        raise ValueError("filter must have degree >= 1")
    roots = np.roots(c)
    # polish with a few Newton steps on the monic polynomial
    p = np.poly1d(c)
    dp = p.deriv()
    for _ in range(3):
        d = dp(roots)
        ok = np.abs(d) > 1e-300
        roots[ok] = roots[ok] - p(roots[ok]) / d[ok]
    scale = np.sum(np.abs(c))
    resid = np.abs(p(roots)) / scale
    if np.any(resid > tol):
        raise RootAccuracyError(f"root residual {resid.max():.3g} exceeds {tol}")
    order = np.lexsort((roots.imag, roots.real))
    return [(complex(r), float(abs(r))) for r in roots[order]]


@dataclass(frozen=True)
class CascadeWaveform:
    iterations: int
    kind: str
    samples: np.ndarray

    @property
    def t(self) -> np.ndarray:
        """Abscissa in units of the coarsest sample spacing."""
        return np.arange(len(self.samples)) / 2.0**self.iterations


def cascade(pair: FilterPair, kind: str = "scaling", iterations: int = 4) -> CascadeWaveform:
    """Cascade-algorithm approximation of the scaling or wavelet function.

    Starting from the coefficients, each pass upsamples by two and convolves
    with h. Samples are scaled by 2^{i/2} so they approximate the function
    values on the dyadic grid t = n / 2^i.
    """
    if not 1 <= iterations <= 12:
        raise ValueError(f"iterations must be in 1..12, got {iterations}")
    if kind not in ("scaling", "wavelet"):
        raise ValueError(f"kind must be 'scaling' or 'wavelet', got {kind!r}")
    c = np.array(pair.h if kind == "scaling" else pair.g, dtype=float)
    for _ in range(iterations - 1):
        up = np.zeros(2 * len(c) - 1)
        up[::2] = c
        c = np.convolve(up, pair.h)
    return CascadeWaveform(iterations, kind, c * 2.0 ** (iterations / 2.0))
