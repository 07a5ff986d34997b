"""Chain diagnostics: autocorrelation and effective sample size."""

from __future__ import annotations

import numpy as np

DEFAULT_MAX_LAG = 50


def autocorrelation(trace, max_lag: int = DEFAULT_MAX_LAG) -> np.ndarray:
    """Sample autocorrelations at lags 1..max_lag (FFT-based).

    A zero-variance trace returns all zeros.
    """
    x = np.asarray(trace, dtype=float).ravel()
    n = x.size
    if n < 2:
        return np.zeros(0)
    max_lag = min(max_lag, n - 1)
    x = x - x.mean()
    var = float(np.dot(x, x)) / n
    if var == 0.0:
        return np.zeros(max_lag)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[: max_lag + 1].real / n
    return acov[1:] / var


def ess(trace) -> tuple[float, bool]:
    """Effective sample size via Geyer's initial positive sequence.

    Sums consecutive autocorrelation pairs until the first non-positive
    pair sum. Returns (ess, zero_variance); a constant trace reports
    ess = N with the flag set. The estimate is capped at N.
    """
    x = np.asarray(trace, dtype=float).ravel()
    n = x.size
    if n < 2:
        return float(n), False
    xc = x - x.mean()
    var = float(np.dot(xc, xc)) / n
    if var == 0.0:
        return float(n), True
    rho = np.empty(n)
    rho[0] = 1.0
    rho[1:] = autocorrelation(x, max_lag=n - 1)
    total = 0.0
    m = 0
    while 2 * m + 1 < n:
        pair = rho[2 * m] + rho[2 * m + 1]
        if pair <= 0.0:
            break
        total += pair
        m += 1
    denom = max(2.0 * total - 1.0, 1.0 / n)
    return float(min(n / denom, n)), False
