"""Posterior summaries, selection, effective dimensionality, prediction."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import StandardizationStats, vectorize_upper
from .diagnostics import autocorrelation, ess  # noqa: F401  (re-exported)
from .errors import InvalidParameterError
from .gibbs import ChainSamples

CI_LO, CI_HI = 0.025, 0.975


@dataclass
class PosteriorSummary:
    """Marginal posterior summaries of one (possibly pooled) chain."""

    node_prob: np.ndarray        # P(xi_k = 1 | data)
    active_nodes: np.ndarray     # node_prob > 0.5, strict
    gamma_mean: np.ndarray
    gamma_lo: np.ndarray         # 2.5% quantile, linear interpolation
    gamma_hi: np.ndarray         # 97.5% quantile
    significant_edges: np.ndarray  # CI excludes zero
    reff_pmf: np.ndarray         # P(R_eff = r | data), r = 0..R
    reff_mode: int
    reff_mean: float
    mu_mean: float
    tau2_mean: float
    edge_index: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.node_prob.size


def summarize(samples: ChainSamples) -> PosteriorSummary:
    if samples.n_samples == 0:
        raise InvalidParameterError("cannot summarize an empty chain")
    node_prob = samples.xi.mean(axis=0)
    gamma_mean = samples.gamma.mean(axis=0)
    gamma_lo = np.quantile(samples.gamma, CI_LO, axis=0)
    gamma_hi = np.quantile(samples.gamma, CI_HI, axis=0)
    significant = (gamma_lo > 0.0) | (gamma_hi < 0.0)
    counts = np.bincount(samples.r_eff, minlength=samples.rank + 1).astype(float)
    pmf = counts / counts.sum()
    return PosteriorSummary(
        node_prob=node_prob,
        active_nodes=node_prob > 0.5,
        gamma_mean=gamma_mean,
        gamma_lo=gamma_lo,
        gamma_hi=gamma_hi,
        significant_edges=significant,
        reff_pmf=pmf,
        reff_mode=int(np.argmax(pmf)),
        reff_mean=float(samples.r_eff.mean()),
        mu_mean=float(samples.mu.mean()),
        tau2_mean=float(samples.tau2.mean()),
        edge_index=samples.edge_index,
    )


def mse_against_truth(gamma_mean: np.ndarray, gamma_true: np.ndarray) -> float:
    """Mean squared coefficient error over all edges."""
    gamma_mean = np.asarray(gamma_mean, dtype=float)
    gamma_true = np.asarray(gamma_true, dtype=float)
    if gamma_mean.shape != gamma_true.shape:
        raise InvalidParameterError("coefficient vectors differ in length")
    return float(np.mean((gamma_mean - gamma_true) ** 2))


@dataclass
class PredictionResult:
    """Posterior-predictive points and 95% intervals for new networks.

    When standardization stats are supplied the primary fields are on the
    original response scale and the *_std fields keep the model scale;
    otherwise the primary fields are on the model scale and *_std are None.
    """

    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    point_std: np.ndarray | None = None
    lower_std: np.ndarray | None = None
    upper_std: np.ndarray | None = None
    mspe: float | None = None
    coverage: float | None = None
    mean_length: float = 0.0


def predict(
    samples: ChainSamples,
    networks,
    rng: np.random.Generator,
    stats: StandardizationStats | None = None,
    y_true=None,
) -> PredictionResult:
    """Posterior-predictive prediction with noise-inclusive intervals.

    Each kept draw t contributes mu_t + x' gamma_t + N(0, tau2_t) per new
    network; points are draw means, intervals the 2.5%/97.5% quantiles.
    With y_true supplied (on the original scale when stats are given),
    MSPE, empirical coverage, and mean interval length are filled in.
    """
    if samples.n_samples == 0:
        raise InvalidParameterError("cannot predict from an empty chain")
    X = np.stack([vectorize_upper(net) for net in networks])
    if X.shape[1] != samples.gamma.shape[1]:
        raise InvalidParameterError(
            f"new networks have {X.shape[1]} edges, chain has {samples.gamma.shape[1]}"
        )
    if stats is not None:
        X = stats.scale_edges(X)
    draws = samples.mu[:, None] + samples.gamma @ X.T
    draws += np.sqrt(samples.tau2)[:, None] * rng.standard_normal(draws.shape)
    point = draws.mean(axis=0)
    lower = np.quantile(draws, CI_LO, axis=0)
    upper = np.quantile(draws, CI_HI, axis=0)

    if stats is not None:
        result = PredictionResult(
            point=stats.unscale_y(point),
            lower=stats.unscale_y(lower),
            upper=stats.unscale_y(upper),
            point_std=point,
            lower_std=lower,
            upper_std=upper,
        )
    else:
        result = PredictionResult(point=point, lower=lower, upper=upper)

    result.mean_length = float(np.mean(result.upper - result.lower))
    if y_true is not None:
        y_true = np.asarray(y_true, dtype=float).ravel()
        if y_true.size != point.size:
            raise InvalidParameterError("y_true length does not match networks")
        result.mspe = float(np.mean((result.point - y_true) ** 2))
        inside = (y_true >= result.lower) & (y_true <= result.upper)
        result.coverage = float(np.count_nonzero(inside)) / y_true.size
    return result


# ---------------------------------------------------------------------------
# CSV outputs

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_summary_csv(path, summary: PosteriorSummary, node_labels=None) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if node_labels is not None:
            writer.writerow(["node", "label", "probability", "active"])
            for k in range(summary.n_nodes):
                writer.writerow(
                    [k + 1, node_labels[k], _fmt(summary.node_prob[k]),
                     int(summary.active_nodes[k])]
                )
        else:
            writer.writerow(["node", "probability", "active"])
            for k in range(summary.n_nodes):
                writer.writerow(
                    [k + 1, _fmt(summary.node_prob[k]), int(summary.active_nodes[k])]
                )


def write_edges_csv(path, summary: PosteriorSummary) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "mean", "lower", "upper", "significant"])
        for j, (k, l) in enumerate(summary.edge_index):
            writer.writerow(
                [
                    int(k) + 1,
                    int(l) + 1,
                    _fmt(summary.gamma_mean[j]),
                    _fmt(summary.gamma_lo[j]),
                    _fmt(summary.gamma_hi[j]),
                    int(summary.significant_edges[j]),
                ]
            )


def write_reff_csv(path, summary: PosteriorSummary) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "probability"])
        for r, p in enumerate(summary.reff_pmf):
            writer.writerow([r, _fmt(p)])


def write_predictions_csv(path, result: PredictionResult, subject_ids=None) -> None:
    ids = subject_ids or [str(i + 1) for i in range(result.point.size)]
    has_std = result.point_std is not None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["subject", "point", "lower", "upper"]
        if has_std:
            header += ["point_std", "lower_std", "upper_std"]
        writer.writerow(header)
        for i, sid in enumerate(ids):
            row = [sid, _fmt(result.point[i]), _fmt(result.lower[i]), _fmt(result.upper[i])]
            if has_std:
                row += [
                    _fmt(result.point_std[i]),
                    _fmt(result.lower_std[i]),
                    _fmt(result.upper_std[i]),
                ]
            writer.writerow(row)


def write_metrics_csv(path, result: PredictionResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mspe", "coverage", "mean_length"])
        writer.writerow(
            [
                _fmt(result.mspe) if result.mspe is not None else "",
                _fmt(result.coverage) if result.coverage is not None else "",
                _fmt(result.mean_length),
            ]
        )
