"""Convergence diagnostics over arrays shaped (iterations, chains)."""
from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import InsufficientDraws


class DiagnosticWarning(UserWarning):
    """A diagnostic hit a degenerate case (zero variance, capped ESS)."""


def _check(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("expected an (iterations, chains) array")
    n, m = x.shape
    if m < 2 or n < 4:
        raise InsufficientDraws(f"need >= 2 chains and >= 4 draws per chain, got {m} x {n}")
    return x


def split_rhat(x: np.ndarray) -> float:
    """Split-chain potential scale reduction factor.

    Returns NaN with a DiagnosticWarning when every chain is constant at the
    same value, and inf when chains are constant at different values.
    """
    x = _check(x)
    half = x.shape[0] // 2
    parts = np.concatenate([x[:half], x[-half:]], axis=1)
    n = parts.shape[0]
    w = parts.var(axis=0, ddof=1).mean()
    b_over_n = parts.mean(axis=0).var(ddof=1)
    if w == 0:
        if b_over_n == 0:
            warnings.warn("R-hat undefined for constant chains", DiagnosticWarning, stacklevel=2)
            return math.nan
        return math.inf
    var_plus = (n - 1) / n * w + b_over_n
    return math.sqrt(var_plus / w)


def _autocovariance(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance of each column, via FFT."""
    n = x.shape[0]
    centered = x - x.mean(axis=0)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centered, n=size, axis=0)
    acov = np.fft.irfft(f * np.conj(f), n=size, axis=0)[:n]
    return acov / n


def effective_sample_size(x: np.ndarray) -> tuple[float, bool]:
    """Multi-chain ESS with Geyer's initial positive and monotone sequence.

    Returns (ess, capped). The autocorrelation time is bounded below by
    1 / log10(N), so ESS never exceeds N log10(N) for N total draws.
    """
    x = _check(x)
    n, m = x.shape
    total = n * m
    acov = _autocovariance(x)
    chain_var = acov[0] * n / (n - 1)
    w = chain_var.mean()
    var_plus = w * (n - 1) / n
    if m > 1:
        var_plus += x.mean(axis=0).var(ddof=1)
    if var_plus == 0:
        warnings.warn("ESS undefined for constant chains", DiagnosticWarning, stacklevel=2)
        return math.nan, True
    rho = 1.0 - (w - acov.mean(axis=1)) / var_plus
    rho[0] = 1.0

    # pair sums, truncated before the first negative one, then made monotone
    n_pairs = n // 2
    pairs = rho[: 2 * n_pairs].reshape(n_pairs, 2).sum(axis=1)
    neg = np.flatnonzero(pairs < 0)
    pairs = pairs[: neg[0]] if neg.size else pairs
    pairs = np.minimum.accumulate(pairs)
    tau = -1.0 + 2.0 * pairs.sum()
    bound = 1.0 / math.log10(total)
    capped = tau < bound
    if capped:
        warnings.warn("ESS capped at N log10(N)", DiagnosticWarning, stacklevel=2)
        tau = bound
    return total / tau, bool(capped)


def ess(x: np.ndarray) -> float:
    return effective_sample_size(x)[0]


def mcse_mean(x: np.ndarray) -> float:
    """Monte-Carlo standard error of the mean."""
    x = np.asarray(x, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DiagnosticWarning)
        n_eff = ess(x)
    return float(x.std(ddof=1) / math.sqrt(n_eff))
