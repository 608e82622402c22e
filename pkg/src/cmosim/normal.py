"""Standard normal CDF and quantile.

Backed by the Cephes routines in :mod:`scipy.special` (``ndtr``/``ndtri``),
which are accurate to a few ulp over the whole double range; both accept
scalars and arrays.
"""
from __future__ import annotations

from scipy.special import ndtr, ndtri


def norm_cdf(x):
    return ndtr(x)


def norm_ppf(p):
    return ndtri(p)
