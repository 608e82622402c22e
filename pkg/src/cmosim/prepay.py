"""PSA and Richard-Roll prepayment speeds."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import RichardRollParams


@dataclass(frozen=True)
class PrepayState:
    initial_balance: float
    current_balance: float  # month-start balance before defaults; may be an array


def psa_cpr(t, psa_multiple: float = 1.0):
    """Annual CPR of the PSA benchmark: 0.2% per month of age, flat at 6% from month 30."""
    if np.any(np.asarray(t) < 1):
        raise ValueError("month index must be >= 1")
    return psa_multiple * 0.002 * np.minimum(t, 30)


def smm(cpr):
    """Single monthly mortality implied by an annual CPR."""
    return 1.0 - (1.0 - cpr) ** (1.0 / 12.0)


def refinancing_incentive(wac, long_rate, rr: RichardRollParams):
    return rr.ri_base + rr.ri_scale * np.arctan(rr.ri_shift + rr.ri_gain * (wac - long_rate))


def seasoning(t, rr: RichardRollParams):
    return np.minimum(1.0, np.asarray(t) / rr.seasoning_months)


def monthly_multiplier(t, rr: RichardRollParams):
    idx = (np.asarray(t) - 1 + rr.mm_offset) % 12
    mm = np.asarray(rr.monthly_multiplier, dtype=float)[idx]
    return float(mm) if np.ndim(mm) == 0 else mm


def burnout(balance, initial_balance, rr: RichardRollParams):
    return rr.burnout_floor + rr.burnout_slope * (balance / initial_balance)


def richard_roll_cpr(t, wac, long_rate, state: PrepayState, rr: RichardRollParams):
    """CPR = RI * AGE * MM * BM, clipped to [0, 1].

    Burnout uses ``state.current_balance``, the pool balance at the start of
    month ``t`` before defaults. Broadcasts over array arguments.
    """
    if np.any(np.asarray(t) < 1):
        raise ValueError("month index must be >= 1")
    cpr = (
        refinancing_incentive(wac, long_rate, rr)
        * seasoning(t, rr)
        * monthly_multiplier(t, rr)
        * burnout(state.current_balance, state.initial_balance, rr)
    )
    return np.clip(cpr, 0.0, 1.0)
