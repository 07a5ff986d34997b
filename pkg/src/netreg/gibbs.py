"""Gibbs sampler: full conditionals, the sweep, and chain running.

Every update block comes in two parts: a pure ``*_conditional`` function
returning the conditional's parameters given the rest of the state, and an
``update_*`` function that draws from it and writes the block back into the
state. The matching ``log_conditional_*`` evaluators exist so the kernel can
be checked against the joint density: for any two values of one block with
the rest held fixed, the conditional log-density difference must equal the
joint log-density difference.

Sweep order is fixed: mu, gamma, tau2, s, theta2, (u_k, xi_k) for each node,
delta, M, lambda_r for each factor dimension, pi_r for each factor dimension.
Prior edge means are recomputed from (U, lam) wherever needed, so every
update sees current values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from . import diagnostics as diag
from .data import DesignMatrix, upper_indices
from .errors import ChainError, InvalidParameterError, NumericalError
from .model import Hyperparameters, LatentState, MuTau2Prior, compute_w, init_state
from .rng import RngStream
from .samplers import (
    cholesky_with_jitter,
    gig_logpdf,
    invwishart_logpdf,
    sample_gig,
    sample_inverse_gamma,
    sample_inverse_wishart,
)

_SCALE_FLOOR = 1e-12


@lru_cache(maxsize=None)
def edge_positions(V: int) -> np.ndarray:
    """(V, V-1) array: row k lists the edge-vector positions touching node k.

    Row k is ordered by the other endpoint j ascending (j != k), matching
    the stacking of the node-factor design in the u_k update.
    """
    iu, ju = upper_indices(V)
    full = np.zeros((V, V), dtype=np.intp)
    idx = np.arange(iu.size)
    full[iu, ju] = idx
    full[ju, iu] = idx
    keep = ~np.eye(V, dtype=bool)
    return full[keep].reshape(V, V - 1)


def _normal_logpdf(x, mean, var):
    return -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)


# ---------------------------------------------------------------------------
# mu

def mu_conditional(
    state: LatentState, design: DesignMatrix, prior: MuTau2Prior | None = None
) -> tuple[float, float]:
    """Mean and variance of mu | rest."""
    resid = design.y - design.X @ state.gamma
    if prior is None:
        return float(resid.mean()), state.tau2 / design.n
    prec = 1.0 / prior.var + design.n / state.tau2
    mean = (prior.mean / prior.var + float(resid.sum()) / state.tau2) / prec
    return mean, 1.0 / prec


def update_mu(state, design, rng, prior=None) -> float:
    mean, var = mu_conditional(state, design, prior)
    state.mu = float(rng.normal(mean, np.sqrt(var)))
    return state.mu


def log_conditional_mu(state, design, value, prior=None) -> float:
    mean, var = mu_conditional(state, design, prior)
    return float(_normal_logpdf(value, mean, var))


# ---------------------------------------------------------------------------
# gamma

def gamma_conditional(state: LatentState, design: DesignMatrix):
    """Posterior mean and precision Cholesky of gamma | rest.

    gamma | rest ~ N(mean, tau2 * Q^{-1}) with Q = X'X + D^{-1}; returns
    (mean, chol_Q) where chol_Q is the lower Cholesky factor of Q.
    """
    w = compute_w(state.U, state.lam)
    d_inv = 1.0 / state.s
    Q = design.xtx + np.diag(d_inv)
    chol_q = cholesky_with_jitter(Q, context="gamma update precision")
    rhs = design.xty - state.mu * design.col_sums + d_inv * w
    tmp = solve_triangular(chol_q, rhs, lower=True, check_finite=False)
    mean = solve_triangular(chol_q.T, tmp, lower=False, check_finite=False)
    return mean, chol_q


def update_gamma(state, design, rng) -> np.ndarray:
    mean, chol_q = gamma_conditional(state, design)
    z = rng.standard_normal(mean.size)
    state.gamma = mean + np.sqrt(state.tau2) * solve_triangular(
        chol_q.T, z, lower=False, check_finite=False
    )
    return state.gamma


def log_conditional_gamma(state, design, value) -> float:
    mean, chol_q = gamma_conditional(state, design)
    q = mean.size
    dev = np.asarray(value, dtype=float) - mean
    quad = float(np.sum((chol_q.T @ dev) ** 2)) / state.tau2
    logdet_cov = q * np.log(state.tau2) - 2.0 * float(np.sum(np.log(np.diag(chol_q))))
    return -0.5 * (q * np.log(2.0 * np.pi) + logdet_cov + quad)


# ---------------------------------------------------------------------------
# tau2

def tau2_conditional(
    state, design, prior=None, debug_shape_offset: float = 0.0
) -> tuple[float, float]:
    """Shape and scale of the inverse-gamma conditional for tau2.

    ``debug_shape_offset`` deliberately perturbs the shape; it exists only
    so sampler-validation harnesses can verify they detect a broken update.
    """
    w = compute_w(state.U, state.lam)
    resid = design.y - state.mu - design.X @ state.gamma
    dev = state.gamma - w
    quad = float(resid @ resid) + float(np.sum(dev * dev / state.s))
    shape = design.n / 2.0 + state.gamma.size / 2.0 + debug_shape_offset
    scale = max(quad / 2.0, _SCALE_FLOOR)
    if prior is not None:
        shape += prior.shape
        scale += prior.scale
    return shape, scale


def update_tau2(state, design, rng, prior=None, debug_shape_offset=0.0) -> float:
    shape, scale = tau2_conditional(state, design, prior, debug_shape_offset)
    state.tau2 = max(float(sample_inverse_gamma(shape, scale, rng)), _SCALE_FLOOR)
    return state.tau2


def log_conditional_tau2(state, design, value, prior=None) -> float:
    shape, scale = tau2_conditional(state, design, prior)
    return float(stats.invgamma.logpdf(value, shape, scale=scale))


# ---------------------------------------------------------------------------
# per-edge scales s

def s_conditional(state) -> tuple[float, np.ndarray, float]:
    """GIG(p, chi_j, psi) parameters for every edge scale."""
    w = compute_w(state.U, state.lam)
    chi = (state.gamma - w) ** 2 / state.tau2
    return 0.5, chi, state.theta2


def update_s(state, rng) -> np.ndarray:
    p, chi, psi = s_conditional(state)
    draws = sample_gig(p, chi, psi, rng)
    state.s = np.maximum(np.atleast_1d(draws), _SCALE_FLOOR)
    return state.s


def log_conditional_s(state, value) -> float:
    p, chi, psi = s_conditional(state)
    return float(np.sum(gig_logpdf(np.asarray(value, dtype=float), p, chi, psi)))


# ---------------------------------------------------------------------------
# global shrinkage theta2

def theta2_conditional(state, hyper) -> tuple[float, float]:
    """Gamma (shape, rate) of theta2 | rest."""
    shape = hyper.zeta + state.s.size
    rate = hyper.iota + float(np.sum(state.s)) / 2.0
    return shape, rate


def update_theta2(state, hyper, rng) -> float:
    shape, rate = theta2_conditional(state, hyper)
    state.theta2 = float(rng.gamma(shape, 1.0 / rate))
    return state.theta2


def log_conditional_theta2(state, hyper, value) -> float:
    shape, rate = theta2_conditional(state, hyper)
    return float(
        shape * np.log(rate) - gammaln(shape) + (shape - 1.0) * np.log(value) - rate * value
    )


# ---------------------------------------------------------------------------
# node factors (u_k, xi_k)

@dataclass
class UConditional:
    """Spike-and-slab conditional for one node's factor vector."""

    log_spike_prob: float      # log P(xi_k = 0 | rest)
    log_slab_prob: float       # log P(xi_k = 1 | rest)
    mean: np.ndarray           # slab Gaussian mean
    chol_prec: np.ndarray      # lower Cholesky of the slab precision


def _factor_prior_terms(state: LatentState) -> tuple[np.ndarray, float]:
    """(M^{-1}, log det M); M is fixed across the whole node loop."""
    chol_m = cholesky_with_jitter(state.M, context="factor prior covariance")
    inv_chol = solve_triangular(chol_m, np.eye(state.rank), lower=True,
                                check_finite=False)
    return inv_chol.T @ inv_chol, 2.0 * float(np.sum(np.log(np.diag(chol_m))))


def u_conditional(
    state: LatentState, k: int, prior_terms: tuple[np.ndarray, float] | None = None
) -> UConditional:
    """Spike weight and slab Gaussian for node k's factors.

    The slab marginal of the touching edge coefficients is evaluated
    through the posterior precision (determinant lemma plus Woodbury), so
    only R x R factorizations are needed:

        det(H + U M U') = det(H) det(M) det(U'H^{-1}U + M^{-1})
        g'(H + U M U')^{-1} g = g'H^{-1}g - rhs' prec^{-1} rhs,
        rhs = U'H^{-1}g
    """
    V = state.n_nodes
    pos = edge_positions(V)[k]
    gam_k = state.gamma[pos]
    h = state.tau2 * state.s[pos]
    others = np.delete(state.U, k, axis=0)
    ustar = others * state.lam

    log_h = np.log(h)
    spike_quad = float(np.sum(gam_k * gam_k / h))
    log_spike = -0.5 * (
        gam_k.size * np.log(2.0 * np.pi) + float(np.sum(log_h)) + spike_quad
    )

    if prior_terms is None:
        prior_terms = _factor_prior_terms(state)
    m_inv, logdet_m = prior_terms
    prec = ustar.T @ (ustar / h[:, None]) + m_inv
    chol_prec = cholesky_with_jitter(prec, context=f"u[{k}] slab precision")
    rhs = ustar.T @ (gam_k / h)
    tmp = solve_triangular(chol_prec, rhs, lower=True, check_finite=False)
    mean = solve_triangular(chol_prec.T, tmp, lower=False, check_finite=False)

    logdet_prec = 2.0 * float(np.sum(np.log(np.diag(chol_prec))))
    slab_quad = spike_quad - float(rhs @ mean)
    log_slab = -0.5 * (
        gam_k.size * np.log(2.0 * np.pi)
        + float(np.sum(log_h)) + logdet_m + logdet_prec
        + slab_quad
    )

    log_num0 = np.log1p(-state.delta) + log_spike
    log_num1 = np.log(state.delta) + log_slab
    log_norm = np.logaddexp(log_num0, log_num1)

    return UConditional(
        log_spike_prob=float(log_num0 - log_norm),
        log_slab_prob=float(log_num1 - log_norm),
        mean=mean,
        chol_prec=chol_prec,
    )


def update_u_xi(state, k, rng, prior_terms=None) -> tuple[np.ndarray, int]:
    cond = u_conditional(state, k, prior_terms)
    if np.log(rng.random()) < cond.log_spike_prob:
        state.U[k] = 0.0
        state.xi[k] = 0
    else:
        z = rng.standard_normal(state.rank)
        state.U[k] = cond.mean + solve_triangular(
            cond.chol_prec.T, z, lower=False, check_finite=False
        )
        state.xi[k] = 1
    return state.U[k], int(state.xi[k])


def log_conditional_u_xi(state, k, u_value, xi_value) -> float:
    """Mixed-measure log density of (u_k, xi_k) = (u_value, xi_value) | rest."""
    cond = u_conditional(state, k)
    if xi_value == 0:
        if np.any(np.asarray(u_value) != 0.0):
            raise InvalidParameterError("xi=0 requires u=0")
        return cond.log_spike_prob
    dev = np.asarray(u_value, dtype=float) - cond.mean
    quad = float(np.sum((cond.chol_prec.T @ dev) ** 2))
    logdet_prec = 2.0 * float(np.sum(np.log(np.diag(cond.chol_prec))))
    R = cond.mean.size
    return cond.log_slab_prob - 0.5 * (R * np.log(2.0 * np.pi) - logdet_prec + quad)


# ---------------------------------------------------------------------------
# node inclusion probability delta

def delta_conditional(state, hyper) -> tuple[float, float]:
    active = float(np.sum(state.xi))
    return hyper.a_delta + active, hyper.b_delta + state.n_nodes - active


def update_delta(state, hyper, rng) -> float:
    a, b = delta_conditional(state, hyper)
    state.delta = float(rng.beta(a, b))
    return state.delta


def log_conditional_delta(state, hyper, value) -> float:
    a, b = delta_conditional(state, hyper)
    return float(stats.beta.logpdf(value, a, b))


# ---------------------------------------------------------------------------
# factor covariance M

def m_conditional(state, hyper) -> tuple[np.ndarray, float]:
    active = state.xi == 1
    scale = hyper.S + state.U[active].T @ state.U[active]
    dof = hyper.nu + float(np.sum(active))
    return scale, dof


def update_m(state, hyper, rng) -> np.ndarray:
    scale, dof = m_conditional(state, hyper)
    state.M = sample_inverse_wishart(scale, dof, rng)
    return state.M


def log_conditional_m(state, hyper, value) -> float:
    scale, dof = m_conditional(state, hyper)
    return invwishart_logpdf(value, scale, dof)


# ---------------------------------------------------------------------------
# factor-dimension switches lambda_r

def lambda_conditional(state, r: int) -> float:
    """P(lambda_r = 1 | rest)."""
    lam = state.lam.copy()
    var = state.tau2 * state.s
    lam[r] = 1
    w1 = compute_w(state.U, lam)
    lam[r] = 0
    w0 = compute_w(state.U, lam)
    ll1 = -0.5 * float(np.sum((state.gamma - w1) ** 2 / var))
    ll0 = -0.5 * float(np.sum((state.gamma - w0) ** 2 / var))
    log1 = np.log(state.pi[r]) + ll1
    log0 = np.log1p(-state.pi[r]) + ll0
    return float(np.exp(log1 - np.logaddexp(log0, log1)))


def update_lambda(state, r, rng) -> int:
    p = lambda_conditional(state, r)
    state.lam[r] = 1 if rng.random() < p else 0
    return int(state.lam[r])


def log_conditional_lambda(state, r, value) -> float:
    p = lambda_conditional(state, r)
    p = min(max(p, 1e-300), 1.0 - 1e-16)
    return float(np.log(p) if value == 1 else np.log1p(-p))


# ---------------------------------------------------------------------------
# factor-dimension probabilities pi_r

def pi_conditional(state, hyper, r: int) -> tuple[float, float]:
    lam_r = float(state.lam[r])
    return lam_r + 1.0, 1.0 - lam_r + hyper.rank_penalty[r]


def update_pi(state, hyper, r, rng) -> float:
    a, b = pi_conditional(state, hyper, r)
    state.pi[r] = float(rng.beta(a, b))
    return state.pi[r]


def log_conditional_pi(state, hyper, r, value) -> float:
    a, b = pi_conditional(state, hyper, r)
    return float(stats.beta.logpdf(value, a, b))


# ---------------------------------------------------------------------------
# the sweep

def sweep(
    state: LatentState,
    design: DesignMatrix,
    hyper: Hyperparameters,
    rng: np.random.Generator,
    mu_tau2_prior: MuTau2Prior | None = None,
    debug_tau2_shape_offset: float = 0.0,
) -> LatentState:
    """One full Gibbs pass over all blocks, in the fixed order."""
    block = "mu"
    try:
        update_mu(state, design, rng, mu_tau2_prior)
        block = "gamma"
        update_gamma(state, design, rng)
        block = "tau2"
        update_tau2(state, design, rng, mu_tau2_prior, debug_tau2_shape_offset)
        block = "s"
        update_s(state, rng)
        block = "theta2"
        update_theta2(state, hyper, rng)
        block = "u_xi"
        prior_terms = _factor_prior_terms(state)
        for k in range(state.n_nodes):
            block = f"u_xi[{k}]"
            update_u_xi(state, k, rng, prior_terms)
        block = "delta"
        update_delta(state, hyper, rng)
        block = "M"
        update_m(state, hyper, rng)
        for r in range(state.rank):
            block = f"lambda[{r}]"
            update_lambda(state, r, rng)
        for r in range(state.rank):
            block = f"pi[{r}]"
            update_pi(state, hyper, r, rng)
    except NumericalError as err:
        err.context = f"{block}: {err.context or ''}".rstrip(": ")
        raise
    return state


# ---------------------------------------------------------------------------
# chain configuration, samples, runner

@dataclass
class ChainConfig:
    iterations: int = 50_000
    burn_in: int = 30_000
    thin: int = 10
    seed: int = 0
    n_chains: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise InvalidParameterError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise InvalidParameterError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.thin < 1:
            raise InvalidParameterError("thin must be >= 1")
        if self.n_chains < 1:
            raise InvalidParameterError("n_chains must be >= 1")
        if self.seed < 0:
            raise InvalidParameterError("seed must be non-negative")

    @property
    def n_samples(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class ChainSamples:
    """Recorded post-burn-in draws, one row per kept iteration."""

    iters: np.ndarray      # 1-based sweep numbers of the kept draws
    mu: np.ndarray
    tau2: np.ndarray
    delta: np.ndarray
    theta2: np.ndarray
    r_eff: np.ndarray
    gamma: np.ndarray      # (L, q)
    xi: np.ndarray         # (L, V)
    lam: np.ndarray        # (L, R)
    n_nodes: int
    rank: int
    edge_index: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    extras: dict | None = None

    @property
    def n_samples(self) -> int:
        return self.iters.size


def _chain_diagnostics(samples: ChainSamples) -> dict:
    out = {}
    scalars = {
        "mu": samples.mu,
        "tau2": samples.tau2,
        "delta": samples.delta,
        "theta2": samples.theta2,
        "reff": samples.r_eff.astype(float),
    }
    for name, trace in scalars.items():
        e, flat = diag.ess(trace)
        out[name] = {
            "ess": e,
            "zero_variance": flat,
            "acf": diag.autocorrelation(trace),
        }
    gamma_ess = np.array([diag.ess(samples.gamma[:, j])[0] for j in range(samples.gamma.shape[1])])
    out["gamma"] = {
        "ess_min": float(gamma_ess.min()),
        "ess_median": float(np.median(gamma_ess)),
    }
    return out


def run_chain(
    design: DesignMatrix,
    hyper: Hyperparameters,
    config: ChainConfig,
    stream_id: int = 0,
    mu_tau2_prior: MuTau2Prior | None = None,
    record_extras: bool = False,
) -> ChainSamples:
    """Run one chain; raises ChainError (with partial samples) on failure."""
    rng = RngStream(config.seed, stream_id).gen
    state = init_state(hyper, design, rng, mu_tau2_prior)
    V, R, q = design.n_nodes, hyper.R, design.q
    L = config.n_samples

    iters = np.zeros(L, dtype=np.int64)
    mu_tr = np.zeros(L)
    tau2_tr = np.zeros(L)
    delta_tr = np.zeros(L)
    theta2_tr = np.zeros(L)
    reff_tr = np.zeros(L, dtype=np.int64)
    gamma_tr = np.zeros((L, q))
    xi_tr = np.zeros((L, V), dtype=np.int8)
    lam_tr = np.zeros((L, R), dtype=np.int8)
    extras = (
        {"U": np.zeros((L, V, R)), "M": np.zeros((L, R, R)), "s": np.zeros((L, q))}
        if record_extras
        else None
    )

    kept = 0
    for it in range(1, config.iterations + 1):
        try:
            sweep(state, design, hyper, rng, mu_tau2_prior)
        except NumericalError as err:
            partial = ChainSamples(
                iters=iters[:kept].copy(),
                mu=mu_tr[:kept].copy(),
                tau2=tau2_tr[:kept].copy(),
                delta=delta_tr[:kept].copy(),
                theta2=theta2_tr[:kept].copy(),
                r_eff=reff_tr[:kept].copy(),
                gamma=gamma_tr[:kept].copy(),
                xi=xi_tr[:kept].copy(),
                lam=lam_tr[:kept].copy(),
                n_nodes=V,
                rank=R,
                edge_index=design.edge_index.copy(),
            )
            raise ChainError(
                f"sweep {it} failed in block {err.context}: {err}",
                iteration=it,
                block=err.context,
                partial=partial,
            ) from err
        offset = it - config.burn_in
        if offset > 0 and offset % config.thin == 0:
            iters[kept] = it
            mu_tr[kept] = state.mu
            tau2_tr[kept] = state.tau2
            delta_tr[kept] = state.delta
            theta2_tr[kept] = state.theta2
            reff_tr[kept] = state.r_eff
            gamma_tr[kept] = state.gamma
            xi_tr[kept] = state.xi
            lam_tr[kept] = state.lam
            if extras is not None:
                extras["U"][kept] = state.U
                extras["M"][kept] = state.M
                extras["s"][kept] = state.s
            kept += 1

    samples = ChainSamples(
        iters=iters,
        mu=mu_tr,
        tau2=tau2_tr,
        delta=delta_tr,
        theta2=theta2_tr,
        r_eff=reff_tr,
        gamma=gamma_tr,
        xi=xi_tr,
        lam=lam_tr,
        n_nodes=V,
        rank=R,
        edge_index=design.edge_index.copy(),
        extras=extras,
    )
    samples.diagnostics = _chain_diagnostics(samples)
    return samples


def run_chains(
    design: DesignMatrix,
    hyper: Hyperparameters,
    config: ChainConfig,
    mu_tau2_prior: MuTau2Prior | None = None,
    record_extras: bool = False,
) -> list[ChainSamples]:
    """Run config.n_chains chains on independent streams of one seed."""
    return [
        run_chain(design, hyper, config, stream_id=c, mu_tau2_prior=mu_tau2_prior,
                  record_extras=record_extras)
        for c in range(config.n_chains)
    ]


def merge_chains(chains: list[ChainSamples]) -> ChainSamples:
    """Pool kept draws from several chains (diagnostics are per-chain only)."""
    if not chains:
        raise InvalidParameterError("no chains to merge")
    first = chains[0]
    for c in chains[1:]:
        if c.n_nodes != first.n_nodes or c.rank != first.rank:
            raise InvalidParameterError("chains disagree on dimensions")
    return ChainSamples(
        iters=np.concatenate([c.iters for c in chains]),
        mu=np.concatenate([c.mu for c in chains]),
        tau2=np.concatenate([c.tau2 for c in chains]),
        delta=np.concatenate([c.delta for c in chains]),
        theta2=np.concatenate([c.theta2 for c in chains]),
        r_eff=np.concatenate([c.r_eff for c in chains]),
        gamma=np.vstack([c.gamma for c in chains]),
        xi=np.vstack([c.xi for c in chains]),
        lam=np.vstack([c.lam for c in chains]),
        n_nodes=first.n_nodes,
        rank=first.rank,
        edge_index=first.edge_index,
        diagnostics={},
    )


# ---------------------------------------------------------------------------
# chain persistence

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_chain(samples: ChainSamples, out_dir) -> None:
    """Write one chain as CSVs: scalars, gamma, xi, lambda, diagnostics."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "scalars.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "mu", "tau2", "delta", "theta2", "reff"])
        for i in range(samples.n_samples):
            writer.writerow(
                [
                    int(samples.iters[i]),
                    _fmt(samples.mu[i]),
                    _fmt(samples.tau2[i]),
                    _fmt(samples.delta[i]),
                    _fmt(samples.theta2[i]),
                    int(samples.r_eff[i]),
                ]
            )

    headers = [f"gamma_{k + 1}_{l + 1}" for k, l in samples.edge_index]
    with open(out / "gamma.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter"] + headers)
        for i in range(samples.n_samples):
            writer.writerow([int(samples.iters[i])] + [_fmt(v) for v in samples.gamma[i]])

    with open(out / "xi.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter"] + [f"xi_{k + 1}" for k in range(samples.n_nodes)])
        for i in range(samples.n_samples):
            writer.writerow([int(samples.iters[i])] + [int(v) for v in samples.xi[i]])

    with open(out / "lambda.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter"] + [f"lambda_{r + 1}" for r in range(samples.rank)])
        for i in range(samples.n_samples):
            writer.writerow([int(samples.iters[i])] + [int(v) for v in samples.lam[i]])

    if samples.diagnostics:
        _save_diagnostics(samples.diagnostics, out / "diagnostics.csv")


def _save_diagnostics(diagnostics: dict, path) -> None:
    max_lag = 0
    for entry in diagnostics.values():
        if "acf" in entry:
            max_lag = max(max_lag, len(entry["acf"]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["parameter", "ess", "zero_variance"] + [f"acf_{i}" for i in range(1, max_lag + 1)]
        )
        for name, entry in diagnostics.items():
            if "acf" in entry:
                acf = list(entry["acf"]) + [np.nan] * (max_lag - len(entry["acf"]))
                writer.writerow(
                    [name, _fmt(entry["ess"]), int(entry["zero_variance"])]
                    + [_fmt(v) for v in acf]
                )
            else:
                writer.writerow(
                    [name + "_ess_min", _fmt(entry["ess_min"]), 0]
                    + [""] * max_lag
                )
                writer.writerow(
                    [name + "_ess_median", _fmt(entry["ess_median"]), 0]
                    + [""] * max_lag
                )


def load_chain(chain_dir) -> ChainSamples:
    """Reload a chain saved by save_chain (diagnostics are not reloaded)."""
    out = Path(chain_dir)

    def read(name):
        with open(out / name, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [row for row in reader]
        return header, rows

    header, rows = read("scalars.csv")
    iters = np.array([int(r[0]) for r in rows], dtype=np.int64)
    mu = np.array([float(r[1]) for r in rows])
    tau2 = np.array([float(r[2]) for r in rows])
    delta = np.array([float(r[3]) for r in rows])
    theta2 = np.array([float(r[4]) for r in rows])
    reff = np.array([int(r[5]) for r in rows], dtype=np.int64)

    gheader, grows = read("gamma.csv")
    edge_index = np.array(
        [[int(p) - 1 for p in name.split("_")[1:]] for name in gheader[1:]], dtype=np.intp
    )
    gamma = np.array([[float(v) for v in r[1:]] for r in grows])

    xheader, xrows = read("xi.csv")
    xi = np.array([[int(v) for v in r[1:]] for r in xrows], dtype=np.int8)

    lheader, lrows = read("lambda.csv")
    lam = np.array([[int(v) for v in r[1:]] for r in lrows], dtype=np.int8)

    return ChainSamples(
        iters=iters,
        mu=mu,
        tau2=tau2,
        delta=delta,
        theta2=theta2,
        r_eff=reff,
        gamma=gamma,
        xi=xi,
        lam=lam,
        n_nodes=len(xheader) - 1,
        rank=len(lheader) - 1,
        edge_index=edge_index,
    )
