"""Monthly pool cash flows and their allocation to tranches.

Each month the pool loses a fraction ``x`` of its balance to default, pays a
level annuity on what remains, and prepays a fraction ``smm`` of the
post-scheduled balance. Defaulted principal net of recovery is written off
the most junior tranche first; scheduled principal, prepayment and recovery
are then paid sequentially by seniority, interest pro rata by balance.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

REL_TOL = 1e-9


@dataclass(frozen=True)
class PoolCashFlow:
    month: int
    balance_start: float
    defaulted: float
    balance_after_default: float
    scheduled_payment: float
    interest: float
    scheduled_principal: float
    prepayment: float
    recovery_cash: float
    total: float

    @property
    def principal(self) -> float:
        """Cash available for principal distribution."""
        return self.scheduled_principal + self.prepayment + self.recovery_cash

    @property
    def loss(self) -> float:
        """Defaulted balance not covered by recovery."""
        return self.defaulted - self.recovery_cash


@dataclass(frozen=True)
class TrancheState:
    name: str
    balance: float
    principal_received: float = 0.0
    interest_received: float = 0.0
    written_down: float = 0.0

    @property
    def retired(self) -> bool:
        return self.balance == 0.0


@dataclass(frozen=True)
class TranchePayment:
    name: str
    principal: float
    interest: float

    @property
    def total(self) -> float:
        return self.principal + self.interest


def level_payment(balance: float, rate: float, n: int) -> float:
    """Level monthly payment amortising ``balance`` over ``n`` months at annual ``rate``."""
    i = rate / 12.0
    if i == 0.0:
        return balance / n
    return balance * i / (1.0 - (1.0 + i) ** (-n))


def pool_step(
    balance: float,
    month: int,
    wac: float,
    wam: int,
    x: float,
    smm: float,
    recovery: float = 0.0,
) -> tuple[PoolCashFlow, float]:
    """Advance the pool one month; returns the month's cash flow and ``B(t+1)``.

    The scheduled payment re-amortises the post-default balance over the
    remaining ``wam - month + 1`` months, so the final month pays off exactly.
    """
    if month < 1 or month > wam:
        raise ValueError(f"month {month} outside 1..{wam}")
    if balance < 0 or not 0.0 <= x <= 1.0 or not 0.0 <= smm <= 1.0:
        raise ValueError("need balance >= 0 and x, smm in [0, 1]")
    defaulted = x * balance
    b_prime = (1.0 - x) * balance
    recovery_cash = recovery * defaulted
    interest = b_prime * wac / 12.0
    if month == wam:
        mp = b_prime + interest
        sp = b_prime
        pp = 0.0
    else:
        mp = level_payment(b_prime, wac, wam - month + 1)
        sp = mp - interest
        if sp > b_prime * (1.0 + 1e-12):
            raise ArithmeticError(f"scheduled principal {sp} exceeds balance {b_prime}")
        sp = min(sp, b_prime)
        pp = (b_prime - sp) * smm
    next_balance = b_prime - sp - pp
    if smm == 1.0 or month == wam:
        next_balance = 0.0
    cf = PoolCashFlow(
        month=month,
        balance_start=balance,
        defaulted=defaulted,
        balance_after_default=b_prime,
        scheduled_payment=mp,
        interest=interest,
        scheduled_principal=sp,
        prepayment=pp,
        recovery_cash=recovery_cash,
        total=sp + interest + pp + recovery_cash,
    )
    return cf, max(next_balance, 0.0)


def write_down_defaults(amount: float, tranches: Sequence[TrancheState]) -> list[TrancheState]:
    """Reduce tranche balances by ``amount``, most junior (last) tranche first."""
    if amount < 0:
        raise ValueError("write-down amount must be >= 0")
    out = list(tranches)
    left = amount
    for i in range(len(out) - 1, -1, -1):
        if left <= 0:
            break
        t = out[i]
        cut = min(t.balance, left)
        left -= cut
        # snap to zero so `retired` is exact
        bal = t.balance - cut
        if bal <= REL_TOL * 1e-3 * max(1.0, t.balance):
            bal = 0.0
        out[i] = replace(t, balance=bal, written_down=t.written_down + cut)
    return out


def distribute(
    cf: PoolCashFlow, tranches: Sequence[TrancheState], pool_balance_after: Optional[float] = None
) -> tuple[list[TranchePayment], list[TrancheState], float]:
    """Pay one month's cash flow to the tranches.

    Principal (scheduled + prepaid + recovered) goes sequentially in list
    order, each tranche capped at its balance. Interest is split pro rata by
    the balances passed in. Returns payments, updated states and the
    overcollateralisation residual (cash no tranche could absorb).

    When ``pool_balance_after`` is 0 the pool is gone and any rounding dust
    left on tranche balances is cleared.
    """
    total_bal = sum(t.balance for t in tranches)
    principal_left = cf.principal
    payments: list[TranchePayment] = []
    states: list[TrancheState] = []
    interest_paid = 0.0
    for t in tranches:
        share = cf.interest * (t.balance / total_bal) if total_bal > 0 else 0.0
        prin = min(t.balance, principal_left)
        principal_left -= prin
        bal = t.balance - prin
        if bal <= REL_TOL * 1e-3 * max(1.0, t.balance):
            # absorb float dust from the final payoff
            prin += bal
            principal_left -= bal
            bal = 0.0
        interest_paid += share
        payments.append(TranchePayment(t.name, prin, share))
        states.append(
            replace(
                t,
                balance=bal,
                principal_received=t.principal_received + prin,
                interest_received=t.interest_received + share,
            )
        )
    if pool_balance_after == 0.0:
        states = [replace(t, balance=0.0) for t in states]
    residual = principal_left + (cf.interest - interest_paid)
    return payments, states, residual
