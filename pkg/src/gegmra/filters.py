"""Gegenbauer scaling/wavelet filter construction and the Daubechies-4 reference."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SQRT2 = math.sqrt(2.0)

# Largest alpha accepted by default, where Gamma(alpha + nu) itself would overflow a double.
ALPHA_MAX = 170.0


class FilterError(ValueError):
    """Invalid filter parameters or coefficient sequences."""


class FilterRangeError(FilterError):
    """Parameters outside the numerically supported range."""


@dataclass(frozen=True)
class GegenbauerParams:
    nu: int
    alpha: float
    alpha_max: float = field(default=ALPHA_MAX, compare=False, repr=False)

    def __post_init__(self):
        if isinstance(self.nu, bool) or int(self.nu) != self.nu:
            raise FilterError(f"nu must be an integer, got {self.nu!r}")
        object.__setattr__(self, "nu", int(self.nu))
        if self.nu < 1 or self.nu % 2 == 0:
            raise FilterError(f"nu must be odd and >= 1, got {self.nu}")
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or alpha <= 0.0:
            raise FilterError(f"alpha must be > 0, got {self.alpha!r}")
        if alpha > self.alpha_max:
            raise FilterRangeError(f"alpha={alpha} exceeds supported maximum {self.alpha_max}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def label(self) -> str:
        a = f"{self.alpha:g}"
        return f"Geg{self.nu}a{a}"


@dataclass(frozen=True)
class FilterPair:
    """Analysis filter pair: scaling (low-pass) ``h`` and wavelet (high-pass) ``g``.

    ``family`` is ``"gegenbauer"``, ``"daub4"`` or ``"haar"``; ``params`` is set
    for the Gegenbauer family only.
    """

    family: str
    h: np.ndarray
    g: np.ndarray
    params: Optional[GegenbauerParams] = None

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        g = np.asarray(self.g, dtype=float)
        if h.ndim != 1 or h.shape != g.shape:
            raise FilterError("h and g must be 1-D sequences of equal length")
        h.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)

    @property
    def length(self) -> int:
        return len(self.h)

    @property
    def order(self) -> int:
        return len(self.h) - 1

    @property
    def symmetric(self) -> bool:
        return bool(np.allclose(self.h, self.h[::-1], rtol=0, atol=1e-14))

    @property
    def group_delay(self) -> Optional[float]:
        """Constant group delay in samples, or None for non-linear-phase filters."""
        return self.order / 2.0 if self.symmetric else None

    @property
    def name(self) -> str:
        if self.params is not None:
            return self.params.label
        return {"daub4": "Daub4", "haar": "Haar"}.get(self.family, self.family)

    def to_dict(self) -> dict:
        out = {"family": self.family, "name": self.name, "h": self.h.tolist(), "g": self.g.tolist()}
        if self.params is not None:
            out["nu"] = self.params.nu
            out["alpha"] = self.params.alpha
        return out


def eval_gegenbauer(n: int, alpha: float, z: float) -> float:
    """Evaluate C_n^(alpha)(z) with the three-term recurrence.

    Seeds are C_0 = 1, C_1 = 2*alpha*z and C_2 = 2*alpha*(alpha+1)*z**2 - alpha.
    """
    if n < 0 or int(n) != n:
        raise ValueError(f"order must be a non-negative integer, got {n!r}")
    if alpha <= -0.5:
        raise ValueError(f"alpha must be > -1/2, got {alpha}")
    if not -1.0 <= z <= 1.0:
        raise ValueError(f"argument must lie in [-1, 1], got {z}")
    n = int(n)
    if n == 0:
        return 1.0
    c_prev2 = 2.0 * alpha * z
    if n == 1:
        return c_prev2
    c_prev1 = 2.0 * alpha * (alpha + 1.0) * z * z - alpha
    for m in range(3, n + 1):
        c = (2.0 * (alpha + m - 1) * z * c_prev1 - (2.0 * alpha + m - 2) * c_prev2) / m
        c_prev2, c_prev1 = c_prev1, c
    return c_prev1


def _rising_tail(a: float, n: int) -> float:
    """prod_{i=1}^{n-1} (a + i) / i, so that (a)_n / n! = (a / n) * _rising_tail(a, n)."""
    i = np.arange(1, n, dtype=float)
    return float(np.prod((a + i) / i))


def gegenbauer_scaling_coeffs(params: GegenbauerParams) -> np.ndarray:
    """Closed-form scaling coefficients h_0..h_nu (sum sqrt(2)).

    Gamma(alpha+k)/(k! Gamma(alpha)) is the rising factorial (alpha)_k / k!
    and C_nu(1) = (2 alpha)_nu / nu!, so every Gamma ratio reduces to a short
    product. The leading factor alpha of each rising factorial is cancelled
    by hand, which keeps the result exact down to the smallest positive alpha.
    """
    nu, alpha = params.nu, params.alpha
    denom = _rising_tail(2.0 * alpha, nu)
    h = np.empty(nu + 1)
    h[0] = h[nu] = _rising_tail(alpha, nu) / (2.0 * denom)
    for k in range(1, nu):
        h[k] = (
            alpha * nu / (2.0 * k * (nu - k))
            * _rising_tail(alpha, k) * _rising_tail(alpha, nu - k) / denom
        )
    h *= SQRT2
    if not np.all(np.isfinite(h)):
        raise FilterRangeError(f"coefficients overflow for nu={nu}, alpha={alpha}")
    # exact mirror symmetry
    return 0.5 * (h + h[::-1])


def wavelet_from_scaling(h: Sequence[float]) -> np.ndarray:
    """High-pass filter g_k = (-1)^k h_{nu-k}.

    For the symmetric Gegenbauer filters this is the pi-shift of the scaling
    response, |G(w)| = |H(pi - w)|, and g is odd-symmetric.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 1 or len(h) < 2:
        raise FilterError("scaling filter needs at least two taps")
    if len(h) % 2:
        raise FilterError(f"filter length must be even (nu odd), got {len(h)}")
    signs = np.where(np.arange(len(h)) % 2 == 0, 1.0, -1.0)
    return signs * h[::-1]


def gegenbauer_pair(nu: int, alpha: float) -> FilterPair:
    params = GegenbauerParams(nu, alpha)
    h = gegenbauer_scaling_coeffs(params)
    return FilterPair("gegenbauer", h, wavelet_from_scaling(h), params)


def daub4_coeffs() -> FilterPair:
    s3 = math.sqrt(3.0)
    h = np.array([1 + s3, 3 + s3, 3 - s3, 1 - s3]) / (4.0 * SQRT2)
    return FilterPair("daub4", h, wavelet_from_scaling(h))


def haar_pair() -> FilterPair:
    h = np.array([SQRT2 / 2, SQRT2 / 2])
    return FilterPair("haar", h, wavelet_from_scaling(h))


def shift2_autocorrelation(h: Sequence[float]) -> float:
    """<h, h shifted by two samples>; zero for orthogonal scaling filters."""
    h = np.asarray(h, dtype=float)
    return float(np.dot(h[2:], h[:-2]))


def parse_filter_spec(text: str) -> FilterPair:
    """Parse ``geg:<nu>:<alpha>``, ``daub4`` or ``haar`` into a FilterPair."""
    spec = text.strip().lower()
    if spec == "daub4":
        return daub4_coeffs()
    if spec == "haar":
        return haar_pair()
    parts = spec.split(":")
    if parts[0] != "geg":
        raise FilterError(f"unknown filter family {parts[0]!r} in {text!r}")
    if len(parts) != 3:
        raise FilterError(f"expected geg:<nu>:<alpha>, got {text!r}")
    try:
        nu = int(parts[1])
    except ValueError:
        raise FilterError(f"nu must be an integer, got {parts[1]!r}") from None
    try:
        alpha = float(parts[2])
    except ValueError:
        raise FilterError(f"alpha must be a decimal number, got {parts[2]!r}") from None
    if "." in parts[2] and len(parts[2].split(".")[1]) > 6:
        raise FilterError(f"alpha accepts at most 6 fractional digits, got {parts[2]!r}")
    return gegenbauer_pair(nu, alpha)
