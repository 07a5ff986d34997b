"""Model state, priors, and the joint log density.

The regression is y_i = mu + <A_i, B>_F + eps_i with eps_i ~ N(0, tau2) and
B symmetric with zero diagonal. Vectorizing the strict upper triangle with
coefficients gamma = 2 * upper(B) gives y = mu 1 + X gamma + eps.

Each edge coefficient gets an adaptive Gaussian prior centered on a low-rank
node-factor product: gamma_kl ~ N(u_k' Lambda u_l, tau2 s_kl), where u_k is
a latent R-vector per node (spike-and-slab: u_k = 0 drops node k entirely),
Lambda = diag(lambda_1..lambda_R) with binary lambda_r switching factor
dimensions on and off, and s_kl ~ Exp(theta2 / 2) gives lasso-type tails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .data import DesignMatrix, edge_count, upper_indices
from .errors import InvalidParameterError
from .samplers import (
    cholesky_with_jitter,
    invwishart_logpdf,
    sample_inverse_gamma,
    sample_inverse_wishart,
)

_VAR_FLOOR = 1e-12


@dataclass
class Hyperparameters:
    """Fixed prior settings; defaults follow the reference configuration."""

    R: int
    S: np.ndarray | None = None
    nu: float = 10.0
    a_delta: float = 1.0
    b_delta: float = 1.0
    zeta: float = 1.0
    iota: float = 1.0
    eta: float = 2.0

    def __post_init__(self):
        if self.R < 1:
            raise InvalidParameterError("R must be a positive integer")
        if self.S is None:
            self.S = np.eye(self.R)
        self.S = np.asarray(self.S, dtype=float)
        if self.S.shape != (self.R, self.R):
            raise InvalidParameterError(f"S must be {self.R}x{self.R}")
        if not np.allclose(self.S, self.S.T, atol=1e-12):
            raise InvalidParameterError("S must be symmetric")
        cholesky_with_jitter(self.S, context="Hyperparameters.S")
        if self.nu <= self.R - 1:
            raise InvalidParameterError("nu must exceed R - 1")
        for name in ("a_delta", "b_delta", "zeta", "iota"):
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"{name} must be positive")
        if self.eta <= 1:
            raise InvalidParameterError("eta must exceed 1")

    @property
    def rank_penalty(self) -> np.ndarray:
        """Beta second shape r^eta for factor dims r = 1..R."""
        return np.arange(1, self.R + 1, dtype=float) ** self.eta


@dataclass
class MuTau2Prior:
    """Proper conjugate prior mu ~ N(mean, var), tau2 ~ InvGamma(shape, scale).

    The production model puts the flat improper prior p(mu, tau2) ~ 1/tau2
    on these two parameters (represented by prior=None throughout). This
    proper version exists for validation harnesses that need to draw the
    model forward from its prior; the conditionals it induces recover the
    flat-prior ones as var -> inf, shape -> 0, scale -> 0.
    """

    mean: float = 0.0
    var: float = 1.0
    shape: float = 5.0
    scale: float = 4.0

    def __post_init__(self):
        if self.var <= 0 or self.shape <= 0 or self.scale <= 0:
            raise InvalidParameterError("MuTau2Prior needs positive var/shape/scale")


@dataclass
class LatentState:
    """All unknowns of one Gibbs iteration.

    U is V x R with row k the node factor u_k; xi marks active nodes
    (xi_k = 0 forces u_k = 0); lam holds the binary factor-dimension
    switches; s the per-edge prior scales in upper-triangle edge order.
    """

    mu: float
    tau2: float
    gamma: np.ndarray
    U: np.ndarray
    xi: np.ndarray
    lam: np.ndarray
    pi: np.ndarray
    delta: float
    theta2: float
    s: np.ndarray
    M: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.U.shape[0]

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    @property
    def r_eff(self) -> int:
        """Effective dimensionality: number of switched-on factor dims."""
        return int(np.sum(self.lam))

    def copy(self) -> "LatentState":
        return LatentState(
            mu=self.mu,
            tau2=self.tau2,
            gamma=self.gamma.copy(),
            U=self.U.copy(),
            xi=self.xi.copy(),
            lam=self.lam.copy(),
            pi=self.pi.copy(),
            delta=self.delta,
            theta2=self.theta2,
            s=self.s.copy(),
            M=self.M.copy(),
        )


def validate_state(state: LatentState, V: int, R: int) -> None:
    """Raise InvalidParameterError on any structural violation."""
    checks = [
        (state.gamma.shape == (edge_count(V),), "gamma has wrong length"),
        (state.U.shape == (V, R), "U has wrong shape"),
        (state.xi.shape == (V,), "xi has wrong length"),
        (state.lam.shape == (R,), "lam has wrong length"),
        (state.pi.shape == (R,), "pi has wrong length"),
        (state.s.shape == (edge_count(V),), "s has wrong length"),
        (state.M.shape == (R, R), "M has wrong shape"),
        (state.tau2 > 0, "tau2 must be positive"),
        (state.theta2 > 0, "theta2 must be positive"),
        (np.all(state.s > 0), "s entries must be positive"),
        (0.0 < state.delta < 1.0, "delta must lie in (0, 1)"),
        (np.all((state.pi > 0) & (state.pi < 1)), "pi entries must lie in (0, 1)"),
        (set(np.unique(state.xi)) <= {0, 1}, "xi must be binary"),
        (set(np.unique(state.lam)) <= {0, 1}, "lam must be binary"),
        (np.allclose(state.M, state.M.T, atol=1e-10), "M must be symmetric"),
    ]
    for ok, msg in checks:
        if not ok:
            raise InvalidParameterError(msg)
    inactive = state.xi == 0
    if np.any(np.abs(state.U[inactive]) > 0):
        raise InvalidParameterError("inactive nodes (xi=0) must have zero factors")
    cholesky_with_jitter(state.M, context="validate_state M")


def compute_w(U: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Low-rank prior means u_k' Lambda u_l for all edges, edge order."""
    V = U.shape[0]
    G = (U * lam) @ U.T
    return G[upper_indices(V)]


@dataclass
class DerivedQuantities:
    """Quantities the sweep recomputes from the raw state."""

    w: np.ndarray  # prior edge means
    d: np.ndarray  # prior edge variances / tau2 (the s vector, as D's diagonal)
    r_eff: int

    @classmethod
    def from_state(cls, state: LatentState) -> "DerivedQuantities":
        return cls(w=compute_w(state.U, state.lam), d=state.s.copy(), r_eff=state.r_eff)


def _normal_logpdf(x, mean, var):
    return -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)


def log_joint(
    state: LatentState,
    design: DesignMatrix,
    hyper: Hyperparameters,
    mu_tau2_prior: MuTau2Prior | None = None,
) -> float:
    """Joint log density of data and state, up to the flat-prior constant.

    The (u_k, xi_k) pairs contribute under the mixed dominating measure:
    log(delta) + log N(u_k | 0, M) when xi_k = 1, log(1 - delta) when
    xi_k = 0 (u_k must then be exactly zero). Binary factors enter as
    point masses. With mu_tau2_prior=None the improper -log(tau2) term
    stands in for the flat prior.
    """
    V, R = state.n_nodes, state.rank
    validate_state(state, V, R)
    total = 0.0

    if design.n > 0:
        resid = design.y - state.mu - design.X @ state.gamma
        total += float(np.sum(_normal_logpdf(resid, 0.0, state.tau2)))

    w = compute_w(state.U, state.lam)
    total += float(np.sum(_normal_logpdf(state.gamma, w, state.tau2 * state.s)))

    if mu_tau2_prior is None:
        total += -np.log(state.tau2)
    else:
        p = mu_tau2_prior
        total += float(_normal_logpdf(state.mu, p.mean, p.var))
        total += float(stats.invgamma.logpdf(state.tau2, p.shape, scale=p.scale))

    # per-edge scales: Exp(rate theta2/2)
    rate = state.theta2 / 2.0
    total += state.s.size * np.log(rate) - rate * float(np.sum(state.s))

    # theta2 ~ Gamma(zeta, rate iota)
    total += float(
        hyper.zeta * np.log(hyper.iota)
        - gammaln(hyper.zeta)
        + (hyper.zeta - 1.0) * np.log(state.theta2)
        - hyper.iota * state.theta2
    )

    # node factors and inclusion indicators
    active = state.xi == 1
    n_active = int(np.sum(active))
    total += n_active * np.log(state.delta)
    total += (V - n_active) * np.log(1.0 - state.delta)
    if n_active:
        chol = cholesky_with_jitter(state.M, context="log_joint M")
        sol = np.linalg.solve(chol, state.U[active].T)
        logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
        total += -0.5 * n_active * (R * np.log(2.0 * np.pi) + logdet)
        total += -0.5 * float(np.sum(sol**2))

    total += float(stats.beta.logpdf(state.delta, hyper.a_delta, hyper.b_delta))
    total += invwishart_logpdf(state.M, hyper.S, hyper.nu)

    lam = state.lam.astype(float)
    total += float(np.sum(lam * np.log(state.pi) + (1.0 - lam) * np.log(1.0 - state.pi)))
    penalty = hyper.rank_penalty
    total += float(np.sum(stats.beta.logpdf(state.pi, 1.0, penalty)))
    return float(total)


def init_state(
    hyper: Hyperparameters,
    design: DesignMatrix,
    rng: np.random.Generator,
    mu_tau2_prior: MuTau2Prior | None = None,
) -> LatentState:
    """Draw latent blocks from their priors; mu and tau2 from data moments.

    Under the flat prior mu starts at mean(y) and tau2 at var(y) (floored);
    with a proper prior both are drawn from it instead.
    """
    V, R = design.n_nodes, hyper.R
    if mu_tau2_prior is None:
        if design.n == 0:
            raise InvalidParameterError("flat-prior init needs at least one response")
        mu = float(np.mean(design.y))
        tau2 = max(float(np.var(design.y)), _VAR_FLOOR)
    else:
        mu = float(rng.normal(mu_tau2_prior.mean, np.sqrt(mu_tau2_prior.var)))
        tau2 = float(
            sample_inverse_gamma(mu_tau2_prior.shape, mu_tau2_prior.scale, rng)
        )

    delta = float(rng.beta(hyper.a_delta, hyper.b_delta))
    xi = (rng.random(V) < delta).astype(np.int8)
    M = sample_inverse_wishart(hyper.S, hyper.nu, rng)
    chol_m = cholesky_with_jitter(M, context="init_state M")
    U = np.zeros((V, R))
    active = xi == 1
    if np.any(active):
        U[active] = rng.standard_normal((int(active.sum()), R)) @ chol_m.T
    pi = rng.beta(1.0, hyper.rank_penalty)
    lam = (rng.random(R) < pi).astype(np.int8)
    theta2 = float(rng.gamma(hyper.zeta, 1.0 / hyper.iota))
    s = rng.exponential(2.0 / theta2, size=edge_count(V))
    w = compute_w(U, lam)
    gamma = w + np.sqrt(tau2 * s) * rng.standard_normal(s.size)
    return LatentState(
        mu=mu,
        tau2=tau2,
        gamma=gamma,
        U=U,
        xi=xi,
        lam=lam,
        pi=pi,
        delta=delta,
        theta2=theta2,
        s=s,
        M=M,
    )
