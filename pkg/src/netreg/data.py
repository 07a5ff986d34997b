"""Network observations, datasets, and the regression design mapping.

A predictor is an undirected weighted network on V nodes: a symmetric
V x V matrix with zero diagonal. The regression operates on the vectorized
strict upper triangle in row-major order, i.e. edge (k, l) with k < l sits
at position (1,2), (1,3), ..., (1,V), (2,3), ..., (V-1,V). Node and edge
indices are 0-based everywhere in memory and 1-based in every file format.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DataValidationError

_SYM_TOL = 1e-8
_DIAG_TOL = 1e-12


def upper_indices(V: int) -> tuple[np.ndarray, np.ndarray]:
    """Row and column index arrays of the strict upper triangle, edge order."""
    return np.triu_indices(V, k=1)


def edge_count(V: int) -> int:
    return V * (V - 1) // 2


@dataclass
class NetworkObservation:
    """One network predictor; validates symmetry and zero diagonal."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DataValidationError(f"network must be square, got shape {w.shape}")
        if w.shape[0] < 2:
            raise DataValidationError("network needs at least 2 nodes")
        if not np.all(np.isfinite(w)):
            raise DataValidationError("network weights must be finite")
        scale = max(1.0, float(np.max(np.abs(w))))
        if np.max(np.abs(w - w.T)) > _SYM_TOL * scale:
            raise DataValidationError("network weights are not symmetric")
        if np.max(np.abs(np.diag(w))) > _DIAG_TOL:
            raise DataValidationError("network diagonal must be zero")
        w = 0.5 * (w + w.T)
        np.fill_diagonal(w, 0.0)
        self.weights = w

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]


def vectorize_upper(network) -> np.ndarray:
    """Strict upper triangle of a network as a length V(V-1)/2 vector."""
    w = network.weights if isinstance(network, NetworkObservation) else np.asarray(network)
    return w[upper_indices(w.shape[0])].astype(float)


def matrix_from_upper(vec: np.ndarray, V: int) -> np.ndarray:
    """Inverse of vectorize_upper: symmetric zero-diagonal matrix."""
    vec = np.asarray(vec, dtype=float)
    if vec.size != edge_count(V):
        raise DataValidationError(
            f"expected {edge_count(V)} entries for V={V}, got {vec.size}"
        )
    out = np.zeros((V, V))
    iu, ju = upper_indices(V)
    out[iu, ju] = vec
    out[ju, iu] = vec
    return out


def frobenius_inner(network, coef: np.ndarray) -> float:
    """<A, B>_F = trace(B'A); equals 2 sum_{k<l} a_kl b_kl for zero diagonals."""
    w = network.weights if isinstance(network, NetworkObservation) else np.asarray(network)
    coef = np.asarray(coef, dtype=float)
    if coef.shape != w.shape:
        raise DataValidationError(
            f"coefficient matrix shape {coef.shape} does not match network {w.shape}"
        )
    return float(np.sum(w * coef))


@dataclass
class Dataset:
    """Aligned networks and scalar responses, optionally with labels."""

    networks: list[NetworkObservation]
    responses: np.ndarray
    subject_ids: list[str] | None = None
    node_labels: list[str] | None = None

    def __post_init__(self):
        self.responses = np.asarray(self.responses, dtype=float).ravel()
        if len(self.networks) != self.responses.size:
            raise DataValidationError(
                f"{len(self.networks)} networks but {self.responses.size} responses"
            )
        if not np.all(np.isfinite(self.responses)):
            raise DataValidationError("responses must be finite")
        sizes = {net.n_nodes for net in self.networks}
        if len(sizes) > 1:
            raise DataValidationError(f"networks disagree on node count: {sorted(sizes)}")
        if self.subject_ids is not None and len(self.subject_ids) != len(self.networks):
            raise DataValidationError("subject_ids length does not match networks")
        if self.node_labels is not None and self.networks:
            if len(self.node_labels) != self.networks[0].n_nodes:
                raise DataValidationError("node_labels length does not match node count")

    @property
    def n(self) -> int:
        return len(self.networks)

    @property
    def n_nodes(self) -> int:
        return self.networks[0].n_nodes


@dataclass
class StandardizationStats:
    """Per-edge and response moments frozen from a training set.

    Degenerate (zero-variance) edges are centered but not scaled; their sd
    is recorded as 0 and flagged. Same convention for the response.
    """

    edge_mean: np.ndarray
    edge_sd: np.ndarray
    y_mean: float
    y_sd: float
    degenerate_edges: np.ndarray  # bool mask, True where sd == 0

    @property
    def y_degenerate(self) -> bool:
        return self.y_sd == 0.0

    def to_dict(self) -> dict:
        return {
            "edge_mean": [float(v) for v in self.edge_mean],
            "edge_sd": [float(v) for v in self.edge_sd],
            "y_mean": float(self.y_mean),
            "y_sd": float(self.y_sd),
            "degenerate_edges": [bool(v) for v in self.degenerate_edges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizationStats":
        return cls(
            edge_mean=np.asarray(d["edge_mean"], dtype=float),
            edge_sd=np.asarray(d["edge_sd"], dtype=float),
            y_mean=float(d["y_mean"]),
            y_sd=float(d["y_sd"]),
            degenerate_edges=np.asarray(d["degenerate_edges"], dtype=bool),
        )

    def scale_edges(self, X: np.ndarray) -> np.ndarray:
        divisor = np.where(self.degenerate_edges, 1.0, self.edge_sd)
        return (X - self.edge_mean) / divisor

    def scale_y(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.y_mean) / (self.y_sd or 1.0)

    def unscale_y(self, y_std) -> np.ndarray:
        return np.asarray(y_std, dtype=float) * (self.y_sd or 1.0) + self.y_mean


def standardize(data: Dataset) -> tuple[Dataset, StandardizationStats]:
    """Center and scale each edge weight and the response across subjects.

    Uses the n-1 divisor. Returns a new Dataset on the standardized scale
    plus the stats needed to map new data in and predictions back out.
    """
    if data.n < 2:
        raise DataValidationError("standardization needs at least 2 subjects")
    V = data.n_nodes
    X = np.stack([vectorize_upper(net) for net in data.networks])
    edge_mean = X.mean(axis=0)
    edge_sd = X.std(axis=0, ddof=1)
    degenerate = edge_sd == 0.0
    y = data.responses
    y_mean = float(y.mean())
    y_sd = float(y.std(ddof=1))
    stats = StandardizationStats(edge_mean, edge_sd, y_mean, y_sd, degenerate)
    X_std = stats.scale_edges(X)
    nets = [NetworkObservation(matrix_from_upper(row, V)) for row in X_std]
    out = Dataset(nets, stats.scale_y(y), data.subject_ids, data.node_labels)
    return out, stats


@dataclass
class DesignMatrix:
    """Vectorized design: X is n x q over the strict upper triangle."""

    X: np.ndarray
    y: np.ndarray
    n_nodes: int
    edge_index: np.ndarray  # q x 2 array of 0-based (k, l), k < l
    subject_ids: list[str] | None = None
    node_labels: list[str] | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.ndim != 2:
            raise DataValidationError("X must be 2-dimensional")
        if self.X.shape[0] != self.y.size:
            raise DataValidationError("X rows and y length differ")
        if self.X.shape[1] != edge_count(self.n_nodes):
            raise DataValidationError(
                f"X has {self.X.shape[1]} columns, expected {edge_count(self.n_nodes)}"
            )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def q(self) -> int:
        return self.X.shape[1]

    @cached_property
    def xtx(self) -> np.ndarray:
        return self.X.T @ self.X

    @cached_property
    def xty(self) -> np.ndarray:
        return self.X.T @ self.y

    @cached_property
    def col_sums(self) -> np.ndarray:
        return self.X.sum(axis=0)


def build_design(data: Dataset) -> DesignMatrix:
    V = data.n_nodes
    X = np.stack([vectorize_upper(net) for net in data.networks])
    iu, ju = upper_indices(V)
    return DesignMatrix(
        X=X,
        y=data.responses.copy(),
        n_nodes=V,
        edge_index=np.column_stack([iu, ju]),
        subject_ids=data.subject_ids,
        node_labels=data.node_labels,
    )


# ---------------------------------------------------------------------------
# file formats: edge-list and response CSVs (1-based indices in files)

EDGE_HEADER = ["subject", "row", "col", "weight"]
RESPONSE_HEADER = ["subject", "y"]


def _read_rows(path, expected_header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: empty file") from None
        if [h.strip() for h in header] != expected_header:
            raise DataValidationError(
                f"{path}: expected header {','.join(expected_header)}, "
                f"got {','.join(header)}"
            )
        return list(reader)


def read_response_csv(path) -> tuple[list[str], np.ndarray]:
    """Subjects (file order) and responses from a subject,y CSV."""
    rows = _read_rows(path, RESPONSE_HEADER)
    subjects: list[str] = []
    seen = set()
    values = []
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 2:
            raise DataValidationError(f"{path}:{lineno}: expected 2 fields")
        sid = row[0].strip()
        if sid in seen:
            raise DataValidationError(f"{path}:{lineno}: duplicate subject {sid!r}")
        try:
            y = float(row[1])
        except ValueError:
            raise DataValidationError(f"{path}:{lineno}: bad response {row[1]!r}") from None
        if not np.isfinite(y):
            raise DataValidationError(f"{path}:{lineno}: non-finite response")
        seen.add(sid)
        subjects.append(sid)
        values.append(y)
    if not subjects:
        raise DataValidationError(f"{path}: no data rows")
    return subjects, np.array(values)


def read_edge_csv(path, n_nodes: int | None = None):
    """Per-subject edge dict from a subject,row,col,weight CSV.

    Indices are 1-based in the file; pairs are undirected and may appear in
    either orientation but only once. Returns (edges, V) where edges maps
    subject -> {(k, l): weight} with 0-based k < l.
    """
    rows = _read_rows(path, EDGE_HEADER)
    edges: dict[str, dict[tuple[int, int], float]] = {}
    max_node = 0
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 4:
            raise DataValidationError(f"{path}:{lineno}: expected 4 fields")
        sid = row[0].strip()
        try:
            r, c = int(row[1]), int(row[2])
            w = float(row[3])
        except ValueError:
            raise DataValidationError(f"{path}:{lineno}: bad row/col/weight") from None
        if r < 1 or c < 1:
            raise DataValidationError(f"{path}:{lineno}: node indices are 1-based")
        if r == c:
            raise DataValidationError(f"{path}:{lineno}: self-loop ({r},{c}) not allowed")
        if not np.isfinite(w):
            raise DataValidationError(f"{path}:{lineno}: non-finite weight")
        k, l = (r - 1, c - 1) if r < c else (c - 1, r - 1)
        bucket = edges.setdefault(sid, {})
        if (k, l) in bucket:
            raise DataValidationError(
                f"{path}:{lineno}: duplicate edge ({r},{c}) for subject {sid!r}"
            )
        bucket[(k, l)] = w
        max_node = max(max_node, r, c)
    if n_nodes is None:
        n_nodes = max_node
    elif max_node > n_nodes:
        raise DataValidationError(
            f"{path}: node index {max_node} exceeds declared node count {n_nodes}"
        )
    if n_nodes < 2:
        raise DataValidationError(f"{path}: fewer than 2 nodes")
    return edges, n_nodes


def load_dataset(edges_path, responses_path, n_nodes: int | None = None) -> Dataset:
    """Join an edge-list CSV with a response CSV into a Dataset.

    The response file defines the subject set and order; a subject absent
    from the edge file gets an all-zero network (missing pairs are 0).
    """
    subjects, y = read_response_csv(responses_path)
    edges, V = read_edge_csv(edges_path, n_nodes)
    unknown = sorted(set(edges) - set(subjects))
    if unknown:
        raise DataValidationError(
            f"{edges_path}: subjects {unknown[:5]} have edges but no response"
        )
    nets = []
    for sid in subjects:
        w = np.zeros((V, V))
        for (k, l), val in edges.get(sid, {}).items():
            w[k, l] = val
            w[l, k] = val
        nets.append(NetworkObservation(w))
    return Dataset(nets, y, subject_ids=subjects)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_edge_csv(path, data: Dataset) -> None:
    ids = data.subject_ids or [str(i + 1) for i in range(data.n)]
    iu, ju = upper_indices(data.n_nodes)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EDGE_HEADER)
        for sid, net in zip(ids, data.networks):
            vals = net.weights[iu, ju]
            for k, l, w in zip(iu, ju, vals):
                writer.writerow([sid, k + 1, l + 1, _fmt(w)])


def write_response_csv(path, data: Dataset) -> None:
    ids = data.subject_ids or [str(i + 1) for i in range(data.n)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESPONSE_HEADER)
        for sid, y in zip(ids, data.responses):
            writer.writerow([sid, _fmt(y)])
