"""Synthetic-study generators.

Three schemes over V-node networks with iid N(0,1) edge predictors:

* scheme 1: low-rank truth. Each node draws a latent R_gen-vector
  w_k ~ N(w_mean * 1, w_sd^2 I) with probability 1 - node_sparsity, else
  w_k = 0; edge coefficients are gamma_kl = w_k' w_l (so B_0 = W W' / 2 off
  the diagonal and the nonzero block has rank at most R_gen).
* scheme 2: full-rank truth. Nodes activate independently; edges between
  two active nodes draw beta_kl ~ N(beta_mean, beta_sd^2), gamma = 2 beta.
* scheme 3: scheme 2 plus independent per-edge dropout with probability
  edge_sparsity.

Responses are y = mu0 + <A, B_0>_F + N(0, tau2_0) for train and held-out
sets alike; the noiseless regression means of the held-out set are kept for
scoring predictions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import (
    Dataset,
    NetworkObservation,
    edge_count,
    frobenius_inner,
    matrix_from_upper,
    upper_indices,
)
from .errors import DataValidationError, InvalidParameterError

SCHEMES = ("sim1", "sim2", "sim3")


@dataclass
class SimConfig:
    scheme: str = "sim1"
    n_nodes: int = 20
    n_train: int = 70
    n_pred: int = 30
    rank_gen: int = 2
    node_sparsity: float = 0.5
    edge_sparsity: float = 0.0
    mu0: float = 0.0
    tau2_0: float = 1.0
    w_mean: float = 0.8
    w_sd: float = 1.0
    beta_mean: float = 0.8
    beta_sd: float = 1.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidParameterError(f"scheme must be one of {SCHEMES}")
        if self.n_nodes < 2:
            raise InvalidParameterError("n_nodes must be at least 2")
        if self.n_train < 1 or self.n_pred < 0:
            raise InvalidParameterError("need n_train >= 1 and n_pred >= 0")
        if self.rank_gen < 1:
            raise InvalidParameterError("rank_gen must be positive")
        if not 0.0 <= self.node_sparsity < 1.0:
            raise InvalidParameterError("node_sparsity must lie in [0, 1)")
        if not 0.0 <= self.edge_sparsity < 1.0:
            raise InvalidParameterError("edge_sparsity must lie in [0, 1)")
        if self.tau2_0 <= 0:
            raise InvalidParameterError("tau2_0 must be positive")
        if self.w_sd < 0 or self.beta_sd < 0:
            raise InvalidParameterError("scale parameters must be non-negative")


@dataclass
class GroundTruth:
    beta0: np.ndarray          # V x V symmetric coefficient matrix
    gamma0: np.ndarray         # 2 * upper(beta0), edge order
    active_nodes: np.ndarray   # bool mask
    mu0: float
    tau2_0: float
    latents: np.ndarray | None = None  # scheme-1 node factors, V x R_gen


def gen_predictors(n_nodes: int, n: int, rng: np.random.Generator) -> list[NetworkObservation]:
    """n networks with iid standard normal upper-triangle weights."""
    iu, ju = upper_indices(n_nodes)
    nets = []
    for _ in range(n):
        w = np.zeros((n_nodes, n_nodes))
        vals = rng.standard_normal(iu.size)
        w[iu, ju] = vals
        w[ju, iu] = vals
        nets.append(NetworkObservation(w))
    return nets


def gen_truth(config: SimConfig, rng: np.random.Generator) -> GroundTruth:
    V = config.n_nodes
    active = rng.random(V) >= config.node_sparsity
    if config.scheme == "sim1":
        W = np.zeros((V, config.rank_gen))
        n_active = int(active.sum())
        if n_active:
            W[active] = config.w_mean + config.w_sd * rng.standard_normal(
                (n_active, config.rank_gen)
            )
        gamma_mat = W @ W.T
        beta0 = gamma_mat / 2.0
        np.fill_diagonal(beta0, 0.0)
        latents = W
    else:
        iu, ju = upper_indices(V)
        both = active[iu] & active[ju]
        beta_upper = np.where(
            both, rng.normal(config.beta_mean, config.beta_sd, size=iu.size), 0.0
        )
        if config.scheme == "sim3":
            keep = rng.random(iu.size) >= config.edge_sparsity
            beta_upper = np.where(keep, beta_upper, 0.0)
        beta0 = matrix_from_upper(beta_upper, V)
        latents = None
    gamma0 = 2.0 * beta0[upper_indices(V)]
    return GroundTruth(
        beta0=beta0,
        gamma0=gamma0,
        active_nodes=active,
        mu0=config.mu0,
        tau2_0=config.tau2_0,
        latents=latents,
    )


def regression_means(networks, truth: GroundTruth) -> np.ndarray:
    """Noiseless regression surface mu0 + <A_i, B_0>_F per network."""
    return np.array(
        [truth.mu0 + frobenius_inner(net, truth.beta0) for net in networks]
    )


def gen_response(networks, truth: GroundTruth, rng: np.random.Generator) -> np.ndarray:
    means = regression_means(networks, truth)
    return means + np.sqrt(truth.tau2_0) * rng.standard_normal(means.size)


@dataclass
class SimulatedStudy:
    train: Dataset
    test: Dataset
    test_means: np.ndarray  # noiseless held-out regression means
    truth: GroundTruth


def simulate_study(config: SimConfig, rng: np.random.Generator) -> SimulatedStudy:
    truth = gen_truth(config, rng)
    train_nets = gen_predictors(config.n_nodes, config.n_train, rng)
    train_y = gen_response(train_nets, truth, rng)
    test_nets = gen_predictors(config.n_nodes, config.n_pred, rng)
    test_y = gen_response(test_nets, truth, rng)
    train = Dataset(train_nets, train_y, subject_ids=[str(i + 1) for i in range(config.n_train)])
    test = Dataset(test_nets, test_y, subject_ids=[str(i + 1) for i in range(config.n_pred)])
    return SimulatedStudy(
        train=train,
        test=test,
        test_means=regression_means(test_nets, truth),
        truth=truth,
    )


# ---------------------------------------------------------------------------
# truth file: edge coefficients, node activity, and scalars in one long CSV

TRUTH_HEADER = ["kind", "row", "col", "value"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_truth_csv(path, truth: GroundTruth) -> None:
    V = truth.beta0.shape[0]
    iu, ju = upper_indices(V)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRUTH_HEADER)
        for k, l, g in zip(iu, ju, truth.gamma0):
            writer.writerow(["edge", k + 1, l + 1, _fmt(g)])
        for k in range(V):
            writer.writerow(["node", k + 1, "", int(truth.active_nodes[k])])
        writer.writerow(["mu0", "", "", _fmt(truth.mu0)])
        writer.writerow(["tau2_0", "", "", _fmt(truth.tau2_0)])


def read_truth_csv(path) -> GroundTruth:
    edges: dict[tuple[int, int], float] = {}
    nodes: dict[int, int] = {}
    mu0 = 0.0
    tau2_0 = 1.0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRUTH_HEADER:
            raise DataValidationError(f"{path}: expected header {','.join(TRUTH_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise DataValidationError(f"{path}:{lineno}: expected 4 fields")
            kind = row[0]
            if kind == "edge":
                k, l = int(row[1]) - 1, int(row[2]) - 1
                edges[(k, l)] = float(row[3])
            elif kind == "node":
                nodes[int(row[1]) - 1] = int(row[3])
            elif kind == "mu0":
                mu0 = float(row[3])
            elif kind == "tau2_0":
                tau2_0 = float(row[3])
            else:
                raise DataValidationError(f"{path}:{lineno}: unknown kind {kind!r}")
    if not nodes:
        raise DataValidationError(f"{path}: no node rows")
    V = max(nodes) + 1
    if set(nodes) != set(range(V)) or len(edges) != edge_count(V):
        raise DataValidationError(f"{path}: incomplete node or edge rows")
    gamma0 = np.zeros(edge_count(V))
    iu, ju = upper_indices(V)
    for j, (k, l) in enumerate(zip(iu, ju)):
        gamma0[j] = edges[(int(k), int(l))]
    active = np.array([bool(nodes[k]) for k in range(V)])
    return GroundTruth(
        beta0=matrix_from_upper(gamma0 / 2.0, V),
        gamma0=gamma0,
        active_nodes=active,
        mu0=mu0,
        tau2_0=tau2_0,
    )
