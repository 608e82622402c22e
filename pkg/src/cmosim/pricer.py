"""Monte Carlo pricing of a CMO deal.

One iteration draws a CIR short-rate path, derives the long rate and the
Richard-Roll prepayment speed from it, draws monthly default fractions from
the chosen credit model, runs the pool cash flows through the waterfall and
discounts each tranche's cash along the simulated short-rate path.

:func:`run_iteration` is the readable single-path reference (and produces
traces). :func:`run_simulation` and :func:`compare_models` use a vectorised
engine over fixed blocks of iterations; each iteration draws from its own
counter-based substreams, so the output does not depend on the number of
workers.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from . import streams as st
from .credit import (
    OneFactorParams,
    copula_default_fractions,
    monthly_default_probability,
    sample_default_fraction,
    simulate_copula_pool,
)
from .prepay import PrepayState, psa_cpr, richard_roll_cpr, smm
from .rates import long_rate, simulate_short_path, simulate_short_paths
from .types import (
    CreditModel,
    DealSpec,
    ModelParams,
    PrepayModel,
    PriceConvention,
    SimulationConfig,
)
from .waterfall import TrancheState, distribute, pool_step, write_down_defaults

log = logging.getLogger(__name__)

BLOCK_SIZE = 512
MAX_HIST_BINS = 500
SNAP = 1e-12


@dataclass(frozen=True)
class IterationResult:
    tranche_values: dict[str, float]
    total_value: float
    default_fraction: float  # defaulted principal / B(0)
    prepaid_fraction: float  # prepaid principal / B(0)
    trace: Optional[list[dict]] = None


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray


@dataclass
class SimulationSummary:
    names: list[str]  # tranche names followed by "total"
    initial_balances: list[float]
    values: np.ndarray  # (iterations, len(names)) per-iteration present values
    mean: np.ndarray
    std: np.ndarray
    histograms: list[Histogram]
    iterations: int
    seed: int
    model: str
    price_convention: str
    mean_default_fraction: float
    mean_prepaid_fraction: float
    warnings: list[str] = field(default_factory=list)


@dataclass
class ComparisonReport:
    names: list[str]
    models: tuple[str, str]
    mean_first: np.ndarray
    mean_second: np.ndarray
    std_first: np.ndarray
    std_second: np.ndarray
    mean_difference: float  # mean(first total) - mean(second total)
    diff_variance: float  # sample variance of per-iteration total differences
    t_statistic: float
    p_value: float
    reject: bool
    alpha: float
    crn: bool
    iterations: int
    seed: int
    test: str = "paired t-test, two-sided"
    summaries: Optional[tuple[SimulationSummary, SimulationSummary]] = None


# ---------------------------------------------------------------- draws


def iteration_streams(
    seed: int, iteration: int, credit_model: CreditModel, rates_stream: str = st.RATES
) -> dict[str, np.random.Generator]:
    return {
        "rates": st.substream(seed, iteration, rates_stream),
        "credit": st.substream(seed, iteration, st.credit_stream(credit_model.value)),
    }


def _draw(
    gens: Mapping[str, np.random.Generator],
    wam: int,
    credit_model: CreditModel,
    copula_loans: int,
    persistent: bool,
) -> tuple[np.ndarray, np.ndarray]:
    z = gens["rates"].standard_normal(wam)
    if credit_model is CreditModel.GAUSSIAN_COPULA:
        c = gens["credit"].standard_normal(copula_loans + 1)
    else:
        c = st.open_uniforms(gens["credit"], 1 if persistent else wam)
    return z, c


def _one_factor(params: ModelParams) -> Optional[OneFactorParams]:
    p = monthly_default_probability(params)
    return OneFactorParams(params.rho, p) if p > 0 else None


def _cpr(params: ModelParams, deal: DealSpec, t, long_r, balance):
    if params.prepay_model is PrepayModel.RICHARD_ROLL:
        return richard_roll_cpr(t, deal.wac, long_r, PrepayState(deal.pool_balance, balance), params.rr)
    if params.prepay_model is PrepayModel.PSA:
        return psa_cpr(t, params.psa_multiple) + 0.0 * balance
    return 0.0 * balance


# ---------------------------------------------------------------- single path


def value_cash_flows(
    deal: DealSpec,
    params: ModelParams,
    short: Sequence[float],
    long: Sequence[float],
    x: Sequence[float],
    trace: bool = False,
) -> IterationResult:
    """Value one scenario given its short rates, long rates and default fractions."""
    discounted = params.price_convention is PriceConvention.DISCOUNTED_AT_SHORT_RATE
    states = [TrancheState(t.name, t.balance) for t in deal.tranches]
    values = [0.0] * len(states)
    balance = deal.pool_balance
    df = 1.0
    defaulted = prepaid = 0.0
    rows: list[dict] = []
    for t in range(1, deal.wam + 1):
        if balance <= 0.0:
            break
        s = float(smm(_cpr(params, deal, t, long[t - 1], balance)))
        cf, next_balance = pool_step(balance, t, deal.wac, deal.wam, float(x[t - 1]), s, params.recovery_rate)
        states = write_down_defaults(cf.loss, states)
        payments, states, residual = distribute(cf, states, next_balance)
        if abs(residual) > 1e-9 * max(1.0, cf.total):
            log.warning("month %d: %.3g of cash not absorbed by any tranche", t, residual)
        if discounted:
            df = df / (1.0 + float(short[t - 1]) / 12.0)
        for k, pay in enumerate(payments):
            values[k] += df * pay.total
        defaulted += cf.defaulted
        prepaid += cf.prepayment
        if trace:
            row = {
                "month": t,
                "balance_start": cf.balance_start,
                "defaulted": cf.defaulted,
                "B_prime": cf.balance_after_default,
                "MP": cf.scheduled_payment,
                "IP": cf.interest,
                "SP": cf.scheduled_principal,
                "PP": cf.prepayment,
                "CF": cf.total,
            }
            for pay, state in zip(payments, states):
                row[f"tranche{pay.name}_prin"] = pay.principal
                row[f"tranche{pay.name}_int"] = pay.interest
                row[f"tranche{pay.name}_balance"] = state.balance
            row.update(
                recovery=cf.recovery_cash,
                short_rate=float(short[t - 1]),
                long_rate=float(long[t - 1]),
                x=float(x[t - 1]),
                smm=s,
                discount_factor=df,
            )
            rows.append(row)
        balance = next_balance
    named = {s.name: float(v) for s, v in zip(states, values)}
    total = math.fsum(values)
    return IterationResult(
        tranche_values=named,
        total_value=total,
        default_fraction=defaulted / deal.pool_balance,
        prepaid_fraction=prepaid / deal.pool_balance,
        trace=rows if trace else None,
    )


def scenario(
    deal: DealSpec,
    params: ModelParams,
    gens: Mapping[str, np.random.Generator],
    credit_model: CreditModel = CreditModel.BASEL_ONE_FACTOR,
    copula_loans: int = 1000,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``(short, long, x)`` for one iteration from its streams."""
    wam = deal.wam
    z, c = _draw(gens, wam, credit_model, copula_loans, params.persistent_factor)
    short = simulate_short_path(params.cir, wam, z)
    if params.prepay_model is PrepayModel.RICHARD_ROLL:
        long = np.asarray(long_rate(short, np.arange(1, wam + 1), params.cir, params.rr, wam))
    else:
        long = np.full(wam, np.nan)
    of = _one_factor(params)
    if of is None:
        x = np.zeros(wam)
    elif credit_model is CreditModel.GAUSSIAN_COPULA:
        p = np.full(wam, of.p)
        x = simulate_copula_pool(of, copula_loans, p, c).default_fractions()
    else:
        x = np.broadcast_to(sample_default_fraction(c, of), (wam,)).copy()
    return short, long, x


def run_iteration(
    deal: DealSpec,
    params: ModelParams,
    gens: Mapping[str, np.random.Generator],
    credit_model: CreditModel = CreditModel.BASEL_ONE_FACTOR,
    copula_loans: int = 1000,
    trace: bool = False,
) -> IterationResult:
    """Simulate and value one iteration. ``gens`` needs ``"rates"`` and ``"credit"``."""
    short, long, x = scenario(deal, params, gens, credit_model, copula_loans)
    return value_cash_flows(deal, params, short, long, x, trace=trace)


# ---------------------------------------------------------------- batch engine


def _value_batch(deal: DealSpec, params: ModelParams, short, long, x):
    """Vectorised :func:`value_cash_flows` over the first axis of the inputs."""
    paths, wam = short.shape
    k_count = len(deal.tranches)
    discounted = params.price_convention is PriceConvention.DISCOUNTED_AT_SHORT_RATE
    i = deal.wac / 12.0
    rec_rate = params.recovery_rate

    bal = np.tile(np.array([t.balance for t in deal.tranches], dtype=float), (paths, 1))
    values = np.zeros((paths, k_count))
    balance = np.full(paths, float(deal.pool_balance))
    df = np.ones(paths)
    defaulted_sum = np.zeros(paths)
    prepaid_sum = np.zeros(paths)

    for t in range(1, wam + 1):
        if not np.any(balance > 0.0):
            break
        xt = x[:, t - 1]
        s = smm(_cpr(params, deal, t, long[:, t - 1], balance))
        defaulted = xt * balance
        b_prime = (1.0 - xt) * balance
        recovery = rec_rate * defaulted
        interest = b_prime * deal.wac / 12.0
        if t == wam:
            sp = b_prime
            pp = np.zeros(paths)
            next_balance = np.zeros(paths)
        else:
            n = wam - t + 1
            mp = b_prime * i / (1.0 - (1.0 + i) ** (-n)) if i != 0.0 else b_prime / n
            sp = np.minimum(mp - interest, b_prime)
            pp = (b_prime - sp) * s
            next_balance = np.maximum(np.where(s == 1.0, 0.0, b_prime - sp - pp), 0.0)

        # junior-first write-down of unrecovered loss
        left = defaulted - recovery
        for k in range(k_count - 1, -1, -1):
            cut = np.minimum(bal[:, k], left)
            left = left - cut
            nb = bal[:, k] - cut
            bal[:, k] = np.where(nb <= SNAP * np.maximum(1.0, bal[:, k]), 0.0, nb)

        total_bal = np.zeros(paths)
        for k in range(k_count):
            total_bal = total_bal + bal[:, k]
        safe = np.where(total_bal > 0, total_bal, 1.0)
        principal_left = sp + pp + recovery
        if discounted:
            df = df / (1.0 + short[:, t - 1] / 12.0)
        for k in range(k_count):
            share = np.where(total_bal > 0, interest * (bal[:, k] / safe), 0.0)
            prin = np.minimum(bal[:, k], principal_left)
            principal_left = principal_left - prin
            nb = bal[:, k] - prin
            dust = nb <= SNAP * np.maximum(1.0, bal[:, k])
            prin = np.where(dust, prin + nb, prin)
            principal_left = np.where(dust, principal_left - nb, principal_left)
            bal[:, k] = np.where(dust, 0.0, nb)
            values[:, k] += df * (prin + share)

        defaulted_sum += defaulted
        prepaid_sum += pp
        balance = np.where(balance > 0.0, next_balance, 0.0)
        bal[balance == 0.0] = 0.0

    total = np.array([math.fsum(row) for row in values])
    return (
        np.column_stack([values, total]),
        defaulted_sum / deal.pool_balance,
        prepaid_sum / deal.pool_balance,
    )


def _run_block(args):
    deal, params, seed, start, stop, credit_model, copula_loans, rates_stream = args
    wam = deal.wam
    z_rows, c_rows = [], []
    for it in range(start, stop):
        gens = iteration_streams(seed, it, credit_model, rates_stream)
        z, c = _draw(gens, wam, credit_model, copula_loans, params.persistent_factor)
        z_rows.append(z)
        c_rows.append(c)
    z = np.vstack(z_rows)
    c = np.vstack(c_rows)
    short = simulate_short_paths(params.cir, z)
    if params.prepay_model is PrepayModel.RICHARD_ROLL:
        months = np.arange(1, wam + 1)
        long = long_rate(short, months[None, :], params.cir, params.rr, wam)
    else:
        long = np.full_like(short, np.nan)
    of = _one_factor(params)
    if of is None:
        x = np.zeros_like(short)
    elif credit_model is CreditModel.GAUSSIAN_COPULA:
        x = copula_default_fractions(of.rho, np.full(wam, of.p), c)
    else:
        x = np.broadcast_to(sample_default_fraction(c, of), short.shape).copy()
    return _value_batch(deal, params, short, long, x)


def simulate_values(
    deal: DealSpec,
    params: ModelParams,
    seed: int,
    iterations: int,
    credit_model: CreditModel,
    copula_loans: int = 1000,
    workers: int = 1,
    rates_stream: str = st.RATES,
):
    """Per-iteration values ``(iterations, tranches + 1)`` and diagnostics."""
    jobs = [
        (deal, params, seed, s, min(s + BLOCK_SIZE, iterations), credit_model, copula_loans, rates_stream)
        for s in range(0, iterations, BLOCK_SIZE)
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(j) for j in jobs]
    values = np.vstack([p[0] for p in parts])
    dflt = np.concatenate([p[1] for p in parts])
    prep = np.concatenate([p[2] for p in parts])
    return values, dflt, prep


# ---------------------------------------------------------------- statistics


def histogram(values: np.ndarray, min_bins: int = 20, max_bins: int = MAX_HIST_BINS) -> Histogram:
    """Freedman-Diaconis bins, clamped to [min_bins, max_bins]."""
    values = np.asarray(values, dtype=float)
    edges = np.histogram_bin_edges(values, bins="fd")
    nbins = len(edges) - 1
    if nbins < min_bins or nbins > max_bins:
        edges = np.histogram_bin_edges(values, bins=min(max(nbins, min_bins), max_bins))
    counts, edges = np.histogram(values, bins=edges)
    return Histogram(edges=edges, counts=counts)


def summarize(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and sample standard deviations (0 when there is one row)."""
    mean = values.mean(axis=0)
    if values.shape[0] < 2:
        return mean, np.zeros(values.shape[1])
    return mean, values.std(axis=0, ddof=1)


def run_simulation(
    deal: DealSpec, params: ModelParams, config: SimulationConfig, workers: int = 1
) -> SimulationSummary:
    values, dflt, prep = simulate_values(
        deal, params, config.seed, config.iterations, config.credit_model, config.copula_loans, workers
    )
    return _summary(deal, params, config, config.credit_model, values, dflt, prep)


def _summary(deal, params, config, credit_model, values, dflt, prep) -> SimulationSummary:
    mean, std = summarize(values)
    warnings = []
    if config.iterations < 2:
        warnings.append("std undefined for a single iteration; reported as 0")
    return SimulationSummary(
        names=deal.tranche_names + ["total"],
        initial_balances=[t.balance for t in deal.tranches] + [deal.pool_balance],
        values=values,
        mean=mean,
        std=std,
        histograms=[histogram(values[:, j]) for j in range(values.shape[1])],
        iterations=config.iterations,
        seed=config.seed,
        model=credit_model.value,
        price_convention=params.price_convention.value,
        mean_default_fraction=float(dflt.mean()),
        mean_prepaid_fraction=float(prep.mean()),
        warnings=warnings,
    )


def paired_t_test(first: np.ndarray, second: np.ndarray) -> tuple[float, float, float, float]:
    """Return ``(mean difference, variance of differences, t, two-sided p)``.

    The mean difference is ``mean(first) - mean(second)``.
    """
    n = first.size
    mean_diff = float(first.mean() - second.mean())
    d = first - second
    var = float(d.var(ddof=1)) if n > 1 else 0.0
    if var == 0.0 or n < 2:
        return mean_diff, var, 0.0 if mean_diff == 0.0 else math.copysign(math.inf, mean_diff), (
            1.0 if mean_diff == 0.0 else 0.0
        )
    t = mean_diff / math.sqrt(var / n)
    p = float(2.0 * stats.t.sf(abs(t), n - 1))
    return mean_diff, var, t, p


def compare_models(
    deal: DealSpec,
    params: ModelParams,
    config: SimulationConfig,
    workers: int = 1,
    models: tuple[CreditModel, CreditModel] = (CreditModel.BASEL_ONE_FACTOR, CreditModel.GAUSSIAN_COPULA),
    alpha: float = 0.01,
) -> ComparisonReport:
    """Price the deal under two credit models and test equality of mean total value.

    With ``config.crn`` both sides reuse the same per-iteration rate streams,
    so prepayment incentives coincide and the paired difference isolates the
    credit model. Without it the second side draws independent rates.
    """
    first, d1, p1 = simulate_values(
        deal, params, config.seed, config.iterations, models[0], config.copula_loans, workers
    )
    second, d2, p2 = simulate_values(
        deal,
        params,
        config.seed,
        config.iterations,
        models[1],
        config.copula_loans,
        workers,
        rates_stream=st.RATES if config.crn else st.RATES_INDEPENDENT,
    )
    sum1 = _summary(deal, params, config, models[0], first, d1, p1)
    sum2 = _summary(deal, params, config, models[1], second, d2, p2)
    mean_diff, var, t, p = paired_t_test(first[:, -1], second[:, -1])
    return ComparisonReport(
        names=deal.tranche_names + ["total"],
        models=(models[0].value, models[1].value),
        mean_first=sum1.mean,
        mean_second=sum2.mean,
        std_first=sum1.std,
        std_second=sum2.std,
        mean_difference=mean_diff,
        diff_variance=var,
        t_statistic=t,
        p_value=p,
        reject=p < alpha,
        alpha=alpha,
        crn=config.crn,
        iterations=config.iterations,
        seed=config.seed,
        summaries=(sum1, sum2),
    )
