"""Random-variate samplers and log-densities used by the Gibbs sweep.

Parameterizations are fixed here once, so every caller agrees:

* gamma(shape, rate)            density ~ x^(shape-1) exp(-rate x)
* inverse_gamma(shape, scale)   density ~ x^(-shape-1) exp(-scale / x)
* gig(p, chi, psi)              density ~ x^(p-1) exp(-(chi/x + psi x)/2)
* inverse_wishart(scale, dof)   mean scale / (dof - dim - 1) for dof > dim + 1

The generalized inverse Gaussian is the workhorse of the per-edge scale
update. The general-p case defers to scipy's rejection sampler through the
scaling identity GIG(p, chi, psi) = sqrt(chi/psi) * GIG(p, b, b) with
b = sqrt(chi psi); p = 1/2 takes an exact vectorized route via the
reciprocal inverse-Gaussian representation because the sweep draws one
variate per edge per iteration.
"""

from __future__ import annotations

import numpy as np
from scipy import stats
from scipy.special import gammaln, kve

from .errors import InvalidParameterError, NumericalError

# Below this, chi*psi is treated as the exact chi -> 0 limit (a gamma draw).
# The total-variation gap of the limit is O(sqrt(chi*psi)), far below Monte
# Carlo resolution, while sqrt(psi/chi) in the exact route would overflow.
_GIG_GAMMA_EPS = 1e-14

_JITTER_REL = 1e-10
_JITTER_TRIES = 3


def cholesky_with_jitter(a: np.ndarray, context: str = "") -> np.ndarray:
    """Lower Cholesky factor of ``a``, nudging the diagonal if needed.

    Adds 1e-10 * mean(diag) to the diagonal on failure and escalates
    tenfold, at most three attempts, then raises NumericalError carrying a
    minimum-eigenvalue estimate of the (symmetrized) input.
    """
    a = np.asarray(a, dtype=float)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    base = _JITTER_REL * float(np.mean(np.diag(a)))
    if base <= 0.0 or not np.isfinite(base):
        base = _JITTER_REL
    eye = np.eye(a.shape[0])
    jitter = base
    for _ in range(_JITTER_TRIES):
        try:
            return np.linalg.cholesky(a + jitter * eye)
        except np.linalg.LinAlgError:
            jitter *= 10.0
    sym = 0.5 * (a + a.T)
    min_eig = float(np.linalg.eigvalsh(sym)[0])
    raise NumericalError(
        f"Cholesky failed after {_JITTER_TRIES} jitter escalations"
        + (f" in {context}" if context else ""),
        min_eigenvalue=min_eig,
        context=context,
    )


def sample_mvn(mean, cov, rng: np.random.Generator) -> np.ndarray:
    """One draw from N(mean, cov) via Cholesky with the jitter policy."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (mean.size, mean.size):
        raise InvalidParameterError(
            f"covariance shape {cov.shape} does not match mean length {mean.size}"
        )
    chol = cholesky_with_jitter(cov, context="sample_mvn")
    return mean + chol @ rng.standard_normal(mean.size)


def sample_gamma(shape, rate, rng: np.random.Generator):
    """Gamma(shape, rate) draw (rate = 1/scale)."""
    if shape <= 0 or rate <= 0:
        raise InvalidParameterError("gamma requires shape > 0 and rate > 0")
    return rng.gamma(shape, 1.0 / rate)


def sample_inverse_gamma(shape, scale, rng: np.random.Generator):
    """InvGamma(shape, scale) draw; mean scale/(shape-1) for shape > 1."""
    if shape <= 0 or scale <= 0:
        raise InvalidParameterError("inverse gamma requires shape > 0 and scale > 0")
    return scale / rng.gamma(shape, 1.0)


def sample_beta(a, b, rng: np.random.Generator):
    if a <= 0 or b <= 0:
        raise InvalidParameterError("beta requires a > 0 and b > 0")
    return rng.beta(a, b)


def sample_bernoulli(p, rng: np.random.Generator) -> int:
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"bernoulli probability {p} outside [0, 1]")
    return int(rng.random() < p)


def sample_normal(mean, sd, rng: np.random.Generator):
    if sd < 0:
        raise InvalidParameterError("normal requires sd >= 0")
    return rng.normal(mean, sd)


def _check_gig_params(p, chi, psi):
    if np.any(psi <= 0):
        raise InvalidParameterError("gig requires psi > 0")
    if np.any(chi < 0):
        raise InvalidParameterError("gig requires chi >= 0")
    if p <= 0 and np.any(chi == 0):
        raise InvalidParameterError("gig with chi = 0 requires p > 0")


def sample_gig(p, chi, psi, rng: np.random.Generator):
    """Draw from GIG(p, chi, psi); chi and psi may be arrays (broadcast).

    chi = 0 (p > 0) is the exact Gamma(p, psi/2) limit. Returns a float for
    scalar inputs, otherwise an array of the broadcast shape.
    """
    p = float(p)
    chi_arr, psi_arr = np.broadcast_arrays(
        np.asarray(chi, dtype=float), np.asarray(psi, dtype=float)
    )
    _check_gig_params(p, chi_arr, psi_arr)
    scalar = chi_arr.ndim == 0
    chi_arr = np.atleast_1d(chi_arr).astype(float)
    psi_arr = np.atleast_1d(psi_arr).astype(float)
    out = np.empty(chi_arr.shape)

    small = chi_arr * psi_arr < _GIG_GAMMA_EPS
    if p > 0 and np.any(small):
        out[small] = rng.gamma(p, 2.0 / psi_arr[small])
    else:
        small = np.zeros_like(small)

    big = ~small
    if np.any(big):
        c, s = chi_arr[big], psi_arr[big]
        if p == 0.5:
            # X ~ GIG(1/2, chi, psi)  <=>  1/X ~ InvGauss(sqrt(psi/chi), psi)
            out[big] = 1.0 / rng.wald(np.sqrt(s / c), s)
        else:
            b = np.sqrt(c * s)
            out[big] = np.sqrt(c / s) * stats.geninvgauss.rvs(p, b, random_state=rng)
    return float(out[0]) if scalar else out


def gig_logpdf(x, p, chi, psi):
    """Log density of GIG(p, chi, psi); the chi = 0 case is Gamma(p, psi/2)."""
    x = np.asarray(x, dtype=float)
    p = float(p)
    chi = np.asarray(chi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    _check_gig_params(p, chi, psi)
    if np.any(x <= 0):
        raise InvalidParameterError("gig support is x > 0")
    gamma_form = (
        p * np.log(psi / 2.0) - gammaln(p) + (p - 1.0) * np.log(x) - psi * x / 2.0
    )
    chi_safe = np.where(chi > 0, chi, 1.0)
    b = np.sqrt(chi_safe * psi)
    # log K_p(b) = log(kve(p, b)) - b, stable for small and large b
    log_norm = (p / 2.0) * np.log(psi / chi_safe) - np.log(2.0) - (np.log(kve(p, b)) - b)
    gig_form = log_norm + (p - 1.0) * np.log(x) - 0.5 * (chi_safe / x + psi * x)
    return np.where(chi > 0, gig_form, gamma_form)


def sample_inverse_wishart(scale, dof, rng: np.random.Generator) -> np.ndarray:
    """One draw from InverseWishart(scale, dof) for a d x d SPD scale."""
    scale = np.asarray(scale, dtype=float)
    d = scale.shape[0]
    if scale.shape != (d, d) or not np.allclose(scale, scale.T, atol=1e-12):
        raise InvalidParameterError("inverse wishart scale must be square symmetric")
    if dof <= d - 1:
        raise InvalidParameterError(f"inverse wishart requires dof > dim - 1 = {d - 1}")
    cholesky_with_jitter(scale, context="sample_inverse_wishart scale")
    draw = stats.invwishart.rvs(df=dof, scale=scale, random_state=rng)
    return np.asarray(draw, dtype=float).reshape(d, d)


def invwishart_logpdf(x, scale, dof) -> float:
    return float(stats.invwishart.logpdf(np.asarray(x, dtype=float), df=dof, scale=scale))
