"""Undirected weighted graphs and their Laplacians.

Graphs here are plain dense adjacency matrices: symmetric, nonnegative,
zero diagonal.  They seed the spectral kernels in :mod:`kronmc.kernels`
and the benchmark dataset recipes in :mod:`kronmc.bench`.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .errors import InvalidInputError

__all__ = [
    "Graph",
    "Laplacian",
    "build_laplacian",
    "erdos_renyi",
    "knn_symmetric",
    "geodesic_distances",
    "heat_adjacency",
]


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph given by its dense adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInputError(f"adjacency must be square, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise InvalidInputError("adjacency must be symmetric")
        if np.any(a < 0):
            raise InvalidInputError("adjacency weights must be nonnegative")
        if np.any(np.diag(a) != 0):
            raise InvalidInputError("adjacency diagonal must be zero (no self loops)")
        object.__setattr__(self, "adjacency", a)

    @property
    def num_vertices(self):
        return self.adjacency.shape[0]


@dataclass(frozen=True)
class Laplacian:
    """Combinatorial graph Laplacian, L = diag(A 1) - A."""

    matrix: np.ndarray

    @property
    def side(self):
        return self.matrix.shape[0]


def build_laplacian(graph):
    """Form the combinatorial Laplacian of ``graph``.

    Row sums of the result are exactly zero and the matrix is positive
    semidefinite for any valid adjacency.
    """
    a = graph.adjacency
    return Laplacian(np.diag(a.sum(axis=1)) - a)


def erdos_renyi(n, p, seed):
    """Random graph on ``n`` vertices; each pair is joined with probability ``p``.

    Edges are unweighted (weight 1).  Deterministic for a fixed ``seed``.
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"edge probability must lie in [0, 1], got {p}")
    if n < 1:
        raise InvalidInputError(f"need at least one vertex, got n={n}")
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < p, k=1)
    adj = (upper | upper.T).astype(float)
    return Graph(adj)


def knn_symmetric(distances, k):
    """Symmetrized k-nearest-neighbour graph from a distance matrix.

    Each vertex is first joined to its ``k`` closest neighbours (directed,
    ties broken by index); the result is the unweighted symmetrization
    sign(P + P^T) with zero diagonal.
    """
    d = np.asarray(distances, dtype=float)
    n = d.shape[0]
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise InvalidInputError(f"distance matrix must be square, got shape {d.shape}")
    if not np.array_equal(d, d.T):
        raise InvalidInputError("distance matrix must be symmetric")
    if np.any(d < 0):
        raise InvalidInputError("distances must be nonnegative")
    if np.any(np.diag(d) != 0):
        raise InvalidInputError("distance matrix must have a zero diagonal")
    if not 0 <= k < n:
        raise InvalidInputError(f"k must satisfy 0 <= k < n, got k={k}, n={n}")
    p = np.zeros((n, n))
    for i in range(n):
        order = np.argsort(d[i], kind="stable")
        order = order[order != i][:k]
        p[i, order] = 1.0
    adj = np.sign(p + p.T)
    np.fill_diagonal(adj, 0.0)
    return Graph(adj)


def geodesic_distances(graph):
    """All-pairs shortest-path hop counts on ``graph``.

    The graph is treated as unweighted: any nonzero adjacency entry is one
    hop.  Raises for disconnected graphs, naming an unreachable pair.
    """
    a = (graph.adjacency > 0).astype(float)
    d = shortest_path(a, method="D", unweighted=True, directed=False)
    if np.any(np.isinf(d)):
        i, j = np.argwhere(np.isinf(d))[0]
        raise InvalidInputError(
            f"graph is disconnected: no path between vertices {i + 1} and {j + 1}"
        )
    return d


def heat_adjacency(distances, n):
    """Heat-weighted adjacency exp(-n^2 d_ij / sum(d)) with zero diagonal."""
    d = np.asarray(distances, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise InvalidInputError(f"distance matrix must be square, got shape {d.shape}")
    if not np.array_equal(d, d.T):
        raise InvalidInputError("distance matrix must be symmetric")
    if np.any(d < 0):
        raise InvalidInputError("distances must be nonnegative")
    total = d.sum()
    if total <= 0:
        raise InvalidInputError("distance matrix sums to zero; weights are undefined")
    adj = np.exp(-(n**2) * d / total)
    np.fill_diagonal(adj, 0.0)
    return Graph(adj)
