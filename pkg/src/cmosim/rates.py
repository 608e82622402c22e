"""CIR short-rate paths and the closed-form long rate used for refinancing."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .types import CirParams, RichardRollParams

DT = 1.0 / 12.0


@dataclass(frozen=True)
class RatePath:
    short: np.ndarray  # r(t), t = 1..wam
    long: np.ndarray  # R(t, T), t = 1..wam


def simulate_short_path(cir: CirParams, wam: int, normals) -> np.ndarray:
    """Full-truncation Euler scheme at monthly steps.

    Consumes exactly ``wam`` standard normal draws and returns
    ``r(1), ..., r(wam)``; ``r(0) = cir.r0`` is not included.
    """
    z = np.asarray(normals, dtype=float)
    if z.shape != (wam,):
        raise ValueError(f"need exactly {wam} normal draws, got shape {z.shape}")
    sqdt = math.sqrt(DT)
    out = np.empty(wam)
    r = cir.r0
    for t in range(wam):
        r = r + cir.a * (cir.b - r) * DT + cir.sigma * math.sqrt(max(r, 0.0)) * sqdt * z[t]
        r = max(r, 0.0)
        out[t] = r
    return out


def simulate_short_paths(cir: CirParams, normals: np.ndarray) -> np.ndarray:
    """Vectorised form of :func:`simulate_short_path` for a (paths, wam) array."""
    z = np.asarray(normals, dtype=float)
    sqdt = math.sqrt(DT)
    out = np.empty_like(z)
    r = np.full(z.shape[0], cir.r0)
    for t in range(z.shape[1]):
        r = r + cir.a * (cir.b - r) * DT + cir.sigma * np.sqrt(np.maximum(r, 0.0)) * sqdt * z[:, t]
        r = np.maximum(r, 0.0)
        out[:, t] = r
    return out


def gamma(sigma: float, rr: RichardRollParams) -> float:
    k = rr.gamma_a_const
    return math.sqrt(k * k + 2.0 * sigma * sigma)


def bond_factors(tau, sigma: float, rr: RichardRollParams):
    """Return ``(A, B)`` of the long-rate formula for time to maturity ``tau`` (years).

    ``B = 2(e^{g tau} - 1) / ((g + k)(e^{g tau} - 1) + 2g)`` and ``A = B**ab_exponent``,
    evaluated with numerator and denominator scaled by ``e^{-g tau}``.
    """
    k = rr.gamma_a_const
    g = gamma(sigma, rr)
    tau = np.asarray(tau, dtype=float)
    one_minus = -np.expm1(-g * tau)
    b = 2.0 * one_minus / ((g + k) * one_minus + 2.0 * g * np.exp(-g * tau))
    return b**rr.ab_exponent, b


def observation_time(month) -> float:
    """Years from deal start at which month ``t``'s long rate is observed (month start)."""
    return (np.asarray(month, dtype=float) - 1.0) / 12.0


def long_rate(r_t, t, cir: CirParams, rr: RichardRollParams, wam: int = 360):
    """Long rate ``R(t, T) = (-ln A + B r_t) / (T - t)``.

    ``t`` is the deal month (1-based); ``T`` is ``cir.horizon(wam)`` in years.
    Works elementwise on arrays of ``r_t`` and ``t``.
    """
    tau = cir.horizon(wam) - observation_time(t)
    if np.any(tau <= 0):
        raise ValueError("long_rate needs T - t > 0")
    a, b = bond_factors(tau, cir.sigma, rr)
    out = (-np.log(a) + b * np.asarray(r_t, dtype=float)) / tau
    return float(out) if np.ndim(out) == 0 else out


def rate_path(cir: CirParams, rr: RichardRollParams, wam: int, normals) -> RatePath:
    short = simulate_short_path(cir, wam, normals)
    months = np.arange(1, wam + 1)
    return RatePath(short=short, long=long_rate(short, months, cir, rr, wam))
