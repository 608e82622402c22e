"""Deal, model and simulation parameter types.

All types are frozen dataclasses so a parsed deal can be shared freely
between worker processes. Defaults are the numerical-example values
(rho 0.15, 5% portfolio default rate, 5% risk-free rate, 8% WAC, 30-year
pool) and the published Richard-Roll prepayment constants.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class PrincipalRule(Enum):
    SEQUENTIAL_PAY = "sequential"


class InterestRule(Enum):
    PRO_RATA_BY_BALANCE = "pro_rata"


class DefaultRateConvention(Enum):
    ANNUALIZED = "annualized"
    MONTHLY = "monthly"


class PriceConvention(Enum):
    DISCOUNTED_AT_SHORT_RATE = "discounted"
    UNDISCOUNTED_SUM = "undiscounted"


class CreditModel(Enum):
    BASEL_ONE_FACTOR = "basel"
    GAUSSIAN_COPULA = "copula"


class PrepayModel(Enum):
    RICHARD_ROLL = "richard_roll"
    PSA = "psa"
    NONE = "none"


MONTHLY_MULTIPLIER = (0.94, 0.76, 0.74, 0.95, 0.98, 0.92, 0.98, 1.10, 1.18, 1.22, 1.23, 0.98)


@dataclass(frozen=True)
class TrancheSpec:
    name: str
    balance: float


@dataclass(frozen=True)
class DealSpec:
    pool_balance: float = 1000.0
    wac: float = 0.08
    wam: int = 360
    tranches: tuple[TrancheSpec, ...] = (
        TrancheSpec("A", 500.0),
        TrancheSpec("B", 300.0),
        TrancheSpec("C", 200.0),
    )
    principal_rule: PrincipalRule = PrincipalRule.SEQUENTIAL_PAY
    interest_rule: InterestRule = InterestRule.PRO_RATA_BY_BALANCE

    @property
    def tranche_names(self) -> list[str]:
        return [t.name for t in self.tranches]


@dataclass(frozen=True)
class CirParams:
    """CIR short-rate parameters (annual units).

    ``horizon_T`` is the maturity date, in years from deal start, of the long
    rate fed to the refinancing incentive. ``None`` means WAM/12.
    """

    a: float = 0.2
    b: float = 0.05
    sigma: float = 0.1
    r0: float = 0.05
    horizon_T: Optional[float] = None

    def horizon(self, wam: int) -> float:
        return self.horizon_T if self.horizon_T is not None else wam / 12.0


@dataclass(frozen=True)
class RichardRollParams:
    ri_base: float = 0.28
    ri_scale: float = 0.14
    ri_shift: float = -8.571
    ri_gain: float = 430.0
    seasoning_months: int = 30
    monthly_multiplier: tuple[float, ...] = MONTHLY_MULTIPLIER
    burnout_floor: float = 0.3
    burnout_slope: float = 0.7
    gamma_a_const: float = 0.28
    ab_exponent: float = 0.0784
    # deal month 1 uses monthly_multiplier[mm_offset]
    mm_offset: int = 0


@dataclass(frozen=True)
class ModelParams:
    rho: float = 0.15
    annual_default_rate: float = 0.05
    default_rate_convention: DefaultRateConvention = DefaultRateConvention.ANNUALIZED
    confidence: float = 0.999
    cir: CirParams = field(default_factory=CirParams)
    rr: RichardRollParams = field(default_factory=RichardRollParams)
    price_convention: PriceConvention = PriceConvention.DISCOUNTED_AT_SHORT_RATE
    recovery_rate: float = 0.0
    prepay_model: PrepayModel = PrepayModel.RICHARD_ROLL
    psa_multiple: float = 1.0
    # reuse one systematic factor for every month of an iteration (Basel mode)
    persistent_factor: bool = False


@dataclass(frozen=True)
class SimulationConfig:
    iterations: int = 10000
    seed: int = 20080915
    credit_model: CreditModel = CreditModel.BASEL_ONE_FACTOR
    copula_loans: int = 1000
    crn: bool = True


@dataclass(frozen=True)
class Violation:
    field: str
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.severity}: {self.field}: {self.message}"


def validate(
    spec: DealSpec, params: ModelParams, config: Optional[SimulationConfig] = None
) -> list[Violation]:
    """Check every type invariant. Returns an empty list when all hold.

    Feller-condition breaches are reported with ``severity="warning"``.
    """
    out: list[Violation] = []

    def err(name: str, msg: str) -> None:
        out.append(Violation(name, msg))

    if not spec.pool_balance > 0:
        err("pool.balance", "pool balance must be > 0")
    if not 0 < spec.wac < 1:
        err("pool.wac", "wac out of (0,1)")
    if not (isinstance(spec.wam, int) and spec.wam >= 1):
        err("pool.wam", "wam must be an integer >= 1")
    if not spec.tranches:
        err("tranches", "deal needs at least one tranche")
    names = [t.name for t in spec.tranches]
    if len(set(names)) != len(names):
        err("tranches", "tranche names must be unique")
    for t in spec.tranches:
        if not t.balance > 0:
            err(f"tranches.{t.name}", "tranche balance must be > 0")
    total = sum(t.balance for t in spec.tranches)
    if spec.tranches and abs(total - spec.pool_balance) > 1e-9 * max(1.0, spec.pool_balance):
        err("tranches", f"tranche balances ≠ pool balance ({total:g} vs {spec.pool_balance:g})")

    if not 0 < params.rho < 1:
        err("model.rho", "rho out of (0,1)")
    # 0 is accepted and means "no defaults"
    if not 0 <= params.annual_default_rate < 1:
        err("model.default_rate", "default_rate out of [0,1)")
    if not 0 < params.confidence < 1:
        err("model.confidence", "confidence out of (0,1)")
    if not 0 <= params.recovery_rate < 1:
        err("model.recovery", "recovery out of [0,1)")
    if not params.psa_multiple >= 0:
        err("model.psa_multiple", "psa_multiple must be >= 0")

    cir = params.cir
    if not cir.a > 0:
        err("model.cir.a", "a must be > 0")
    if not cir.b > 0:
        err("model.cir.b", "b must be > 0")
    if not cir.sigma >= 0:
        err("model.cir.sigma", "sigma must be >= 0")
    if not cir.r0 > 0:
        err("model.cir.r0", "r0 must be > 0")
    if cir.a > 0 and cir.b > 0 and 2 * cir.a * cir.b < cir.sigma**2:
        out.append(Violation("model.cir", "Feller condition violated (2ab < sigma^2)", "warning"))
    if isinstance(spec.wam, int) and spec.wam >= 1:
        # the long rate is observed at the start of each month, last one at (wam-1)/12
        if not cir.horizon(spec.wam) > (spec.wam - 1) / 12.0:
            err("model.cir.T", "T must exceed the last observation time (wam-1)/12 years")

    rr = params.rr
    if len(rr.monthly_multiplier) != 12:
        err("model.rr.monthly_multiplier", "monthly_multiplier needs exactly 12 entries")
    elif any(not m > 0 for m in rr.monthly_multiplier):
        err("model.rr.monthly_multiplier", "monthly_multiplier entries must be > 0")
    if not rr.seasoning_months >= 1:
        err("model.rr.seasoning_months", "seasoning_months must be >= 1")

    if config is not None:
        if not config.iterations >= 1:
            err("simulation.iterations", "iterations must be >= 1")
        if not config.copula_loans >= 1:
            err("simulation.copula_loans", "copula_loans must be >= 1")
        if not 0 <= config.seed < 2**64:
            err("simulation.seed", "seed must be a 64-bit unsigned integer")
    return out
