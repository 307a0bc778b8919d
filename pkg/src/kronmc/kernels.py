"""Kernel matrices, the lazy Kronecker product kernel, and low-rank feature maps.

The product kernel over row-column index pairs is held as its two factors
and never materialized: with column-major vectorization the (i', j') entry
of the big kernel is kappa_x(i, n) * kappa_y(j, l) for the decoded factor
indices.  Feature maps are rank-d factorizations phi with phi @ phi.T
approximating the product kernel, built from factor eigen- or singular
decompositions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalError

__all__ = [
    "KernelMatrix",
    "Diffusion",
    "RegularizedLaplacian",
    "Bandlimited",
    "KroneckerKernel",
    "FeatureMap",
    "spectral_kernel",
    "linear_kernel",
    "gaussian_kernel",
    "pearson_kernel",
    "kron_entry",
    "kron_submatrix",
    "kron_times_selector",
    "features_from_eig",
    "features_from_svd",
    "save_feature_map",
    "load_feature_map",
]

PSD_TOL = 1e-8
SYM_TOL = 1e-8


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric positive semidefinite similarity matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.matrix, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise InvalidInputError(f"kernel matrix must be square, got shape {k.shape}")
        scale = max(1.0, np.abs(k).max()) if k.size else 1.0
        if np.abs(k - k.T).max() > SYM_TOL * scale:
            raise InvalidInputError("kernel matrix must be symmetric")
        k = (k + k.T) / 2.0
        eigs = np.linalg.eigvalsh(k)
        if eigs[0] < -PSD_TOL * max(1.0, eigs[-1]):
            raise InvalidInputError(
                f"kernel matrix is not positive semidefinite (min eigenvalue {eigs[0]:g})"
            )
        object.__setattr__(self, "matrix", k)

    @property
    def side(self):
        return self.matrix.shape[0]

    def max_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.matrix)[-1])


@dataclass(frozen=True)
class Diffusion:
    """Spectral weighting with r(lambda) = exp(eta * lambda)."""

    eta: float

    def __post_init__(self):
        if self.eta <= 0:
            raise InvalidInputError("diffusion weight eta must be positive")

    def inverse_weights(self, eigenvalues):
        return np.exp(-self.eta * eigenvalues)


@dataclass(frozen=True)
class RegularizedLaplacian:
    """Spectral weighting with r(lambda) = 1 + eta * lambda."""

    eta: float

    def __post_init__(self):
        if self.eta <= 0:
            raise InvalidInputError("regularization weight eta must be positive")

    def inverse_weights(self, eigenvalues):
        r = 1.0 + self.eta * eigenvalues
        if np.any(r == 0):
            raise NumericalError("spectral weight r(lambda) vanished; kernel undefined")
        return 1.0 / r


@dataclass(frozen=True)
class Bandlimited:
    """Keep only the frequencies whose (ascending, 1-based) indices lie in the pass band."""

    pass_band: frozenset

    def __init__(self, pass_band):
        object.__setattr__(self, "pass_band", frozenset(int(i) for i in pass_band))
        if not self.pass_band:
            raise InvalidInputError("pass band must be nonempty")
        if min(self.pass_band) < 1:
            raise InvalidInputError("pass band indices are 1-based and must be >= 1")

    def inverse_weights(self, eigenvalues):
        n = len(eigenvalues)
        if max(self.pass_band) > n:
            raise InvalidInputError(
                f"pass band index {max(self.pass_band)} exceeds spectrum size {n}"
            )
        w = np.zeros(n)
        w[[i - 1 for i in sorted(self.pass_band)]] = 1.0
        return w


def spectral_kernel(lap, weighting):
    """Kernel from a Laplacian eigendecomposition with inversely applied weights.

    Eigenvalues are sorted ascending; each is mapped through the weighting's
    inverse response (suppressed frequencies map to zero).
    """
    eigvals, q = np.linalg.eigh(lap.matrix)
    w = weighting.inverse_weights(eigvals)
    if not np.all(np.isfinite(w)):
        raise NumericalError("non-finite spectral weight; kernel undefined")
    return KernelMatrix((q * w) @ q.T)


def linear_kernel(x):
    """Gram matrix of the rows of ``x`` under the Euclidean dot product."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] < 1:
        raise InvalidInputError("feature matrix needs at least one column")
    return KernelMatrix(x @ x.T)


def gaussian_kernel(x, eta):
    """Gaussian similarity exp(-||x_i - x_j||^2 / (2 eta)) between rows of ``x``."""
    if eta <= 0:
        raise InvalidInputError("gaussian bandwidth eta must be positive")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    sq = np.sum(x**2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0)
    return KernelMatrix(np.exp(-d2 / (2.0 * eta)))


def pearson_kernel(x):
    """Pearson correlation between rows of ``x``; PSD with unit diagonal."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    centered = x - x.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    if np.any(norms == 0):
        row = int(np.flatnonzero(norms == 0)[0]) + 1
        raise InvalidInputError(f"row {row} is constant; correlation is undefined")
    u = centered / norms[:, None]
    k = u @ u.T
    np.fill_diagonal(k, 1.0)
    return KernelMatrix(k)


@dataclass(frozen=True)
class KroneckerKernel:
    """Product kernel over an N x L grid, stored as its two factors.

    Entry (i', j') of the implied NL x NL matrix is
    kx[i, n] * ky[j, l] with i' = (j - 1) N + i and j' = (l - 1) N + n.
    """

    kx: KernelMatrix
    ky: KernelMatrix

    @property
    def n_rows(self):
        return self.kx.side

    @property
    def n_cols(self):
        return self.ky.side

    @property
    def size(self):
        return self.n_rows * self.n_cols


def _decode(index, n_rows, size):
    if not 1 <= index <= size:
        raise InvalidInputError(f"vector index {index} outside 1..{size}")
    return (index - 1) % n_rows, (index - 1) // n_rows


def kron_entry(kk, iprime, jprime):
    """Single entry of the product kernel at 1-based vector indices."""
    i, j = _decode(iprime, kk.n_rows, kk.size)
    n, l = _decode(jprime, kk.n_rows, kk.size)
    return float(kk.kx.matrix[i, n] * kk.ky.matrix[j, l])


def kron_submatrix(kk, sampling):
    """S x S block of the product kernel at the sampled positions.

    Cost is O(S^2); the full product matrix is never formed.  Row/column
    order follows the sampling order.
    """
    rows = sampling.row_indices0
    cols = sampling.col_indices0
    g = kk.kx.matrix[np.ix_(rows, rows)].copy()
    g *= kk.ky.matrix[np.ix_(cols, cols)]
    return g


def kron_times_selector(kk, sampling):
    """NL x S matrix of product-kernel columns at the sampled vector indices."""
    rows = sampling.row_indices0
    cols = sampling.col_indices0
    kx_cols = kk.kx.matrix[:, rows]
    ky_cols = kk.ky.matrix[:, cols]
    out = np.einsum("jc,ic->jic", ky_cols, kx_cols)
    return out.reshape(kk.size, len(sampling))


@dataclass(frozen=True)
class FeatureMap:
    """Rank-d feature matrix phi (NL x d) with phi @ phi.T approximating the
    product kernel; rows follow the column-major vectorization order."""

    phi: np.ndarray
    n_rows: int
    n_cols: int
    provenance: str

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim != 2 or phi.shape[0] != self.n_rows * self.n_cols:
            raise InvalidInputError(
                f"feature matrix must have {self.n_rows * self.n_cols} rows, "
                f"got shape {phi.shape}"
            )
        object.__setattr__(self, "phi", phi)

    @property
    def dim(self):
        return self.phi.shape[1]

    def row(self, i, j):
        """Feature vector of grid entry (i, j), 1-based."""
        from .sampling import vec_index

        return self.phi[vec_index(i, j, self.n_rows) - 1]


def _ranked_pairs(values_x, values_y, n_rows, d):
    """Top-d (a, b) factor-index pairs by product values_x[a] * values_y[b].

    Ties break toward the smallest composite vector index b * n_rows + a,
    so the selection is deterministic.
    """
    products = np.outer(values_y, values_x).ravel()  # composite index b * n + a
    order = np.argsort(-products, kind="stable")[:d]
    return [(int(c % n_rows), int(c // n_rows)) for c in order], products[order]


def features_from_eig(kx, ky, d):
    """Feature map from the top-d eigenvalue products of the two factors.

    Only the factor matrices are eigendecomposed.  Column c carries
    sqrt(sigma_pair) times the Kronecker product of the paired eigenvectors;
    zero eigenvalues yield all-zero columns.
    """
    n, l = kx.side, ky.side
    if not 1 <= d <= n * l:
        raise InvalidInputError(f"feature dimension must lie in 1..{n * l}, got {d}")
    sx, qx = np.linalg.eigh(kx.matrix)
    sy, qy = np.linalg.eigh(ky.matrix)
    pairs, products = _ranked_pairs(sx, sy, n, d)
    phi = np.empty((n * l, d))
    for c, ((a, b), prod) in enumerate(zip(pairs, products)):
        phi[:, c] = np.sqrt(max(prod, 0.0)) * np.kron(qy[:, b], qx[:, a])
    return FeatureMap(phi, n, l, "eig-based")


def features_from_svd(x, y, d):
    """Feature map from the top-d singular-value products of two factor SVDs.

    Approximates the column space of the Kronecker product of ``y`` and ``x``
    (rows of ``x`` index grid rows, rows of ``y`` grid columns).  Column c is
    the paired singular value times the Kronecker product of the paired left
    singular vectors; requests beyond the available spectrum yield zero columns.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    n, tx = x.shape
    l, ty = y.shape
    if not 1 <= d <= min(n * l, tx * ty):
        raise InvalidInputError(
            f"feature dimension must lie in 1..{min(n * l, tx * ty)}, got {d}"
        )
    ux, dx, _ = np.linalg.svd(x, full_matrices=False)
    uy, dy, _ = np.linalg.svd(y, full_matrices=False)
    avail = len(dx) * len(dy)
    pairs, products = _ranked_pairs(dx, dy, len(dx), min(d, avail))
    phi = np.zeros((n * l, d))
    for c, ((a, b), prod) in enumerate(zip(pairs, products)):
        phi[:, c] = prod * np.kron(uy[:, b], ux[:, a])
    return FeatureMap(phi, n, l, "svd-based")


def save_feature_map(path, fmap):
    """Write a feature map as CSV with a one-line N,L,d,provenance header."""
    with open(path, "w") as fh:
        fh.write(f"{fmap.n_rows},{fmap.n_cols},{fmap.dim},{fmap.provenance}\n")
        np.savetxt(fh, fmap.phi, fmt="%.17g", delimiter=",")


def load_feature_map(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if len(header) != 4:
            raise InvalidInputError(f"{path}: malformed feature-map header {header}")
        n, l, d = (int(v) for v in header[:3])
        phi = np.loadtxt(fh, delimiter=",", ndmin=2)
    if phi.shape != (n * l, d):
        raise InvalidInputError(
            f"{path}: feature block {phi.shape} does not match header ({n * l}, {d})"
        )
    return FeatureMap(phi, n, l, header[3])
