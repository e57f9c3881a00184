"""Trajectory-clustered model reduction.

Snapshots of the full model are clustered per node trajectory with
agglomerative average linkage (Lance-Williams updates, deterministic
lexicographic tie-breaking), and the resulting partition defines an
orthonormal projection U whose columns carry weight 1/sqrt(cluster size).
The reduced dynamics are Petrov-Galerkin: lift with U, advance the full
model, project back with U^T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, ValidationError
from .richards import FullModel


@dataclass(frozen=True)
class SnapshotMatrix:
    """Node trajectories over a prediction window: (n_steps + 1) x n_nodes."""

    data: np.ndarray
    origin_step: int = 0

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=float))
        if self.data.ndim != 2:
            raise DimensionMismatch("snapshot matrix must be 2-D (time x nodes)")

    @property
    def n_nodes(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class Clustering:
    """Partition of nodes: assignment[i] is the cluster id of node i."""

    assignment: np.ndarray
    n_clusters: int
    merges: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "assignment", np.asarray(self.assignment, dtype=int))
        ids = np.unique(self.assignment)
        if not (ids.size == self.n_clusters and ids[0] == 0 and ids[-1] == self.n_clusters - 1):
            raise ValidationError("cluster ids must form a contiguous range [0, n_clusters)")

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_clusters)

    @classmethod
    def singletons(cls, n_nodes: int) -> "Clustering":
        return cls(np.arange(n_nodes), n_nodes)


def generate_snapshots(model: FullModel, x0, inputs, dt: float, origin_step: int = 0) -> SnapshotMatrix:
    """Noise-free forward simulation of the full model over the input schedule."""
    if len(inputs) < 1:
        raise ValidationError("snapshot generation needs at least one interval")
    return SnapshotMatrix(model.simulate(x0, inputs, dt), origin_step)


def trajectory_distance(a, b) -> float:
    """Euclidean distance between two node trajectories."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch("trajectories must have equal length")
    return float(np.linalg.norm(a - b))


def _pairwise_distances(data: np.ndarray) -> np.ndarray:
    """Symmetric matrix of column-trajectory distances.

    Computed from explicit column differences (not the Gram identity) so
    near-identical trajectories keep full precision; the upper triangle is
    mirrored so ties resolve identically on both sides.
    """
    n = data.shape[1]
    dist = np.zeros((n, n))
    for i in range(n - 1):
        diff = data[:, i + 1:] - data[:, i:i + 1]
        dist[i, i + 1:] = np.sqrt(np.einsum("tj,tj->j", diff, diff))
    return dist + dist.T


def cluster_trajectories(snapshots: SnapshotMatrix, th_c: float, record_merges: bool = False) -> Clustering:
    """Agglomerative average-linkage clustering of node trajectories.

    Starts from singletons and merges the pair at minimum average-linkage
    distance while that minimum is below th_c. Ties break on the smallest
    (i, j) position pair; positions stay ordered by each cluster's first
    member node, which also fixes the final id order.
    """
    if not th_c > 0:
        raise ValidationError("th_c must be > 0")
    n = snapshots.n_nodes
    dist = _pairwise_distances(snapshots.data)
    active = np.ones(n, dtype=bool)
    sizes = np.ones(n)
    members = [[i] for i in range(n)]
    merges = []

    work = dist.copy()
    inf = np.inf
    work[np.tril_indices(n)] = inf  # search the strict upper triangle only

    while active.sum() > 1:
        flat = np.argmin(work)
        i, j = divmod(int(flat), n)
        d_min = work[i, j]
        if not d_min < th_c:
            break
        if record_merges:
            merges.append((i, j, float(d_min)))
        # Lance-Williams average-linkage update of row/column i
        others = np.flatnonzero(active)
        others = others[(others != i) & (others != j)]
        if others.size:
            d_ik = np.where(others > i, work[i, others], work[others, i])
            d_jk = np.where(others > j, work[j, others], work[others, j])
            merged = (sizes[i] * d_ik + sizes[j] * d_jk) / (sizes[i] + sizes[j])
            lo = np.minimum(others, i)
            hi = np.maximum(others, i)
            work[lo, hi] = merged
        sizes[i] += sizes[j]
        members[i].extend(members[j])
        active[j] = False
        work[j, :] = inf
        work[:, j] = inf

    assignment = np.empty(n, dtype=int)
    order = np.flatnonzero(active)  # ascending == order of first member node
    for cid, pos in enumerate(order):
        assignment[members[pos]] = cid
    return Clustering(assignment, order.size, tuple(merges))


def format_merge_log(clustering: Clustering) -> str:
    """One line per merge: absorbing id, absorbed id, linkage distance."""
    return "\n".join(f"{i} {j} {d:.17g}" for i, j, d in clustering.merges)


def format_assignment(clustering: Clustering) -> str:
    """One line per node: node index, cluster id."""
    return "\n".join(f"{i} {c}" for i, c in enumerate(clustering.assignment))


def build_projection(clustering: Clustering) -> sp.csr_matrix:
    """Sparse n_nodes x n_clusters projection with weights 1/sqrt(cluster size)."""
    n = clustering.assignment.size
    cols = clustering.assignment
    weights = 1.0 / np.sqrt(clustering.sizes[cols].astype(float))
    return sp.csr_matrix((weights, (np.arange(n), cols)), shape=(n, clustering.n_clusters))


def reduce_state(projection: sp.csr_matrix, x) -> np.ndarray:
    """xi = U^T x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (projection.shape[0],):
        raise DimensionMismatch(f"state has shape {x.shape}, expected ({projection.shape[0]},)")
    return projection.T @ x


def lift_state(projection: sp.csr_matrix, xi) -> np.ndarray:
    """x_tilde = U xi."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (projection.shape[1],):
        raise DimensionMismatch(f"reduced state has shape {xi.shape}, expected ({projection.shape[1]},)")
    return projection @ xi


@dataclass(frozen=True)
class ReducedModel:
    """Petrov-Galerkin reduction of a full model through a fixed projection."""

    full: FullModel
    projection: sp.csr_matrix

    def __post_init__(self):
        if self.projection.shape[0] != self.full.n_states:
            raise DimensionMismatch("projection row count must match the full state size")

    @property
    def order(self) -> int:
        return self.projection.shape[1]

    def step(self, xi, surface, forcing, dt) -> np.ndarray:
        """xi' = U^T f_step(U xi): lift, advance the full model, project back."""
        lifted = lift_state(self.projection, xi)
        return reduce_state(self.projection, self.full.step(lifted, surface, forcing, dt))

    def simulate(self, xi0, inputs, dt) -> np.ndarray:
        out = np.empty((len(inputs) + 1, self.order))
        out[0] = np.asarray(xi0, dtype=float)
        for j, (surface, forcing) in enumerate(inputs):
            out[j + 1] = self.step(out[j], surface, forcing, dt)
        return out
