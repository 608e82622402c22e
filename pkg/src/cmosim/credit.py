"""One-factor (Vasicek / Basel II) default model and a Gaussian-copula alternative.

Obligor asset values load on a single systematic factor ``Y``::

    V_i = sqrt(rho) * Y + sqrt(1 - rho) * eps_i,   default iff V_i < K = N^-1(p)

so conditional on ``Y = y`` defaults are independent with probability
``p(y) = N((K - sqrt(rho) y) / sqrt(1 - rho))``. In a large pool the defaulted
fraction equals ``p(Y)``, whose CDF and inverse are implemented here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln, log_ndtr

from .normal import norm_cdf, norm_ppf
from .types import DefaultRateConvention, ModelParams


@dataclass(frozen=True)
class OneFactorParams:
    rho: float
    p: float

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ValueError(f"rho must be in (0,1), got {self.rho}")
        if not 0 < self.p < 1:
            raise ValueError(f"p must be in (0,1), got {self.p}")

    @cached_property
    def threshold(self) -> float:
        return float(norm_ppf(self.p))


def monthly_default_probability(params: ModelParams) -> float:
    """Per-month default probability implied by the configured rate convention."""
    p = params.annual_default_rate
    if params.default_rate_convention is DefaultRateConvention.ANNUALIZED:
        return 1.0 - (1.0 - p) ** (1.0 / 12.0)
    return p


def _open_unit(name: str, v) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise ValueError(f"{name} must lie strictly inside (0,1)")
    return arr


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def vasicek_cdf(x, params: OneFactorParams):
    """P(X <= x) for the large-pool default fraction X."""
    x = _open_unit("x", x)
    rho = params.rho
    return _out(norm_cdf((math.sqrt(1.0 - rho) * norm_ppf(x) - params.threshold) / math.sqrt(rho)))


def sample_default_fraction(u, params: OneFactorParams):
    """Inverse-transform draw of the default fraction from uniform ``u``."""
    u = _open_unit("u", u)
    rho = params.rho
    return _out(norm_cdf((math.sqrt(rho) * norm_ppf(u) + params.threshold) / math.sqrt(1.0 - rho)))


def basel_capital(p: float, rho: float, confidence: float = 0.999) -> float:
    """Stressed default probability at ``confidence`` (the Basel II IRB formula).

    ``N(N^-1(p)/sqrt(1-rho) + sqrt(rho/(1-rho)) N^-1(confidence))`` is the
    sampler evaluated at ``u = confidence``, and is computed that way.
    """
    _open_unit("confidence", confidence)
    return float(sample_default_fraction(confidence, OneFactorParams(rho, p)))


def conditional_default_probability(y, params: OneFactorParams):
    return norm_cdf((params.threshold - math.sqrt(params.rho) * np.asarray(y)) / math.sqrt(1.0 - params.rho))


def _gauss_legendre_grid(lo: float, hi: float, width: float, order: int = 8):
    panels = max(1, int(math.ceil((hi - lo) / width)))
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    y = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return y, w


def finite_pool_default_pmf(n, N: int, params: OneFactorParams, y_range: float = 10.0):
    """Probability of ``n`` defaults among ``N`` loans under the one-factor model.

    Integrates the binomial mixture over ``Y ~ N(0,1)`` with composite
    Gauss-Legendre on ``[-y_range, y_range]``; the panel width shrinks like
    ``1/sqrt(N)`` so the conditional binomial peak is resolved. ``n`` may be
    an integer or an array of integers.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    n_arr = np.atleast_1d(np.asarray(n))
    if np.any((n_arr < 0) | (n_arr > N)):
        raise ValueError("need 0 <= n <= N")
    n_arr = n_arr.astype(float)

    stiff = max(1.0, math.sqrt(params.rho / (1.0 - params.rho)))
    width = min(0.25, 1.5 / (math.sqrt(N) * stiff))
    y, w = _gauss_legendre_grid(-y_range, y_range, width)
    log_phi = -0.5 * y * y - 0.5 * math.log(2.0 * math.pi)
    z = (params.threshold - math.sqrt(params.rho) * y) / math.sqrt(1.0 - params.rho)
    log_p = log_ndtr(z)
    log_q = log_ndtr(-z)
    log_binom = gammaln(N + 1.0) - gammaln(n_arr + 1.0) - gammaln(N - n_arr + 1.0)

    out = np.zeros(n_arr.shape)
    chunk = max(1, 4_000_000 // max(1, n_arr.size))
    for s in range(0, y.size, chunk):
        sl = slice(s, s + chunk)
        logs = (
            log_binom[None, :]
            + n_arr[None, :] * log_p[sl, None]
            + (N - n_arr)[None, :] * log_q[sl, None]
            + log_phi[sl, None]
        )
        out += w[sl] @ np.exp(logs)
    if np.ndim(n) == 0:
        return float(out[0])
    return out


@dataclass(frozen=True)
class CopulaPoolState:
    n_loans: int
    default_month: np.ndarray  # 1..wam, or 0 for never
    alive_fraction: np.ndarray  # surviving loan fraction at the end of each month

    def default_fractions(self) -> np.ndarray:
        """Fraction of the loans alive at each month start that default in that month."""
        wam = self.alive_fraction.size
        counts = np.bincount(self.default_month, minlength=wam + 1)[1:]
        before = self.n_loans - np.concatenate(([0], np.cumsum(counts)[:-1]))
        return counts / np.maximum(before, 1)


def cumulative_default_curve(monthly_p) -> np.ndarray:
    """``CumDefault(t) = 1 - prod_{s<=t} (1 - p(s))``."""
    return 1.0 - np.cumprod(1.0 - np.asarray(monthly_p, dtype=float))


def copula_default_months(latent: np.ndarray, cum_default: np.ndarray) -> np.ndarray:
    """First month whose cumulative default probability reaches ``N(latent)``; 0 = never."""
    u = norm_cdf(latent)
    idx = np.searchsorted(cum_default, u, side="left")
    return np.where(idx < cum_default.size, idx + 1, 0)


def simulate_copula_pool(params: OneFactorParams, n_loans: int, monthly_p, normals) -> CopulaPoolState:
    """One iteration of the one-factor Gaussian copula on default times.

    ``normals`` holds ``1 + n_loans`` standard normals: the systematic factor
    first, then one idiosyncratic draw per loan.
    """
    if n_loans < 1:
        raise ValueError("n_loans must be >= 1")
    z = np.asarray(normals, dtype=float)
    if z.shape != (n_loans + 1,):
        raise ValueError(f"need {n_loans + 1} normals, got shape {z.shape}")
    cum = cumulative_default_curve(monthly_p)
    latent = math.sqrt(params.rho) * z[0] + math.sqrt(1.0 - params.rho) * z[1:]
    months = copula_default_months(latent, cum)
    counts = np.bincount(months, minlength=cum.size + 1)
    alive = (n_loans - np.cumsum(counts[1:])) / n_loans
    return CopulaPoolState(n_loans=n_loans, default_month=months, alive_fraction=alive)


def copula_default_fractions(rho: float, monthly_p, normals: np.ndarray) -> np.ndarray:
    """Batch version of :func:`simulate_copula_pool`: (paths, 1 + n_loans) normals in,
    (paths, wam) monthly default fractions out."""
    cum = cumulative_default_curve(monthly_p)
    wam = cum.size
    paths, width = normals.shape
    n_loans = width - 1
    latent = math.sqrt(rho) * normals[:, :1] + math.sqrt(1.0 - rho) * normals[:, 1:]
    months = copula_default_months(latent, cum)
    flat = (np.arange(paths)[:, None] * (wam + 1) + months).ravel()
    counts = np.bincount(flat, minlength=paths * (wam + 1)).reshape(paths, wam + 1)[:, 1:]
    before = n_loans - np.concatenate((np.zeros((paths, 1), dtype=counts.dtype), np.cumsum(counts, axis=1)[:, :-1]), axis=1)
    return counts / np.maximum(before, 1)
