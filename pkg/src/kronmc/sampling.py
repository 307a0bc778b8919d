"""Observation masks, vectorization indexing, and noise injection.

Matrices are vectorized column-major: entry (i, j) of an N x L matrix maps
to vector index (j - 1) N + i (1-based).  A sampling set is an ordered list
of distinct (i, j) pairs; its order defines the rows of the implied binary
selector, and every downstream object indexed by observations inherits it.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "vec_index",
    "SamplingSet",
    "ObservationSet",
    "NoiseSpec",
    "uniform_sample",
    "observe",
]


def vec_index(i, j, n_rows):
    """Column-major vector index of entry (i, j), all 1-based."""
    if not 1 <= i <= n_rows:
        raise InvalidInputError(f"row index {i} outside 1..{n_rows}")
    if j < 1:
        raise InvalidInputError(f"column index {j} must be >= 1")
    return (j - 1) * n_rows + i


@dataclass(frozen=True)
class SamplingSet:
    """Ordered set of observed (i, j) positions in an N x L matrix (1-based)."""

    n_rows: int
    n_cols: int
    entries: tuple

    def __post_init__(self):
        entries = tuple((int(i), int(j)) for i, j in self.entries)
        for i, j in entries:
            if not (1 <= i <= self.n_rows and 1 <= j <= self.n_cols):
                raise InvalidInputError(
                    f"entry ({i}, {j}) outside {self.n_rows} x {self.n_cols} grid"
                )
        if len(set(entries)) != len(entries):
            raise InvalidInputError("sampling entries must be distinct")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    @property
    def row_indices0(self):
        """0-based row indices, in sampling order."""
        return np.fromiter((i - 1 for i, _ in self.entries), dtype=np.intp, count=len(self))

    @property
    def col_indices0(self):
        """0-based column indices, in sampling order."""
        return np.fromiter((j - 1 for _, j in self.entries), dtype=np.intp, count=len(self))

    @property
    def vec_indices0(self):
        """0-based column-major vector indices, in sampling order."""
        return self.col_indices0 * self.n_rows + self.row_indices0

    def selector_matrix(self):
        """Explicit S x NL binary selector; for small problems and tests only."""
        s = np.zeros((len(self), self.n_rows * self.n_cols))
        s[np.arange(len(self)), self.vec_indices0] = 1.0
        return s


@dataclass(frozen=True)
class ObservationSet:
    """Observed values paired with their sampling positions."""

    sampling: SamplingSet
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != len(self.sampling):
            raise InvalidInputError(
                f"{v.size} values for {len(self.sampling)} sampled entries"
            )
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise: disabled, fixed variance, or an exact SNR target."""

    mode: str = "none"
    nu_sq: float = 0.0
    snr: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("none", "variance", "target_snr"):
            raise InvalidInputError(f"unknown noise mode {self.mode!r}")
        if self.mode == "variance" and self.nu_sq < 0:
            raise InvalidInputError("noise variance must be nonnegative")
        if self.mode == "target_snr" and self.snr <= 0:
            raise InvalidInputError("target snr must be positive")

    @classmethod
    def none(cls):
        return cls(mode="none")

    @classmethod
    def variance(cls, nu_sq, seed=0):
        return cls(mode="variance", nu_sq=nu_sq, seed=seed)

    @classmethod
    def target_snr(cls, snr, seed=0):
        return cls(mode="target_snr", snr=snr, seed=seed)


def uniform_sample(n_rows, n_cols, count, seed):
    """Draw ``count`` distinct positions uniformly without replacement.

    The sampling order is the draw order; deterministic for a fixed seed.
    """
    total = n_rows * n_cols
    if not 0 <= count <= total:
        raise InvalidInputError(f"count must lie in 0..{total}, got {count}")
    rng = np.random.default_rng(seed)
    flat = rng.choice(total, size=count, replace=False)
    entries = [(int(v % n_rows) + 1, int(v // n_rows) + 1) for v in flat]
    return SamplingSet(n_rows, n_cols, tuple(entries))


def noise_matrix(f, noise):
    """Full-size noise realization for ``f`` under ``noise``.

    In target-SNR mode the draw is rescaled so that the squared-Frobenius
    signal-to-noise ratio matches the target exactly.
    """
    f = np.asarray(f, dtype=float)
    if noise.mode == "none":
        return np.zeros_like(f)
    rng = np.random.default_rng(noise.seed)
    if noise.mode == "variance":
        if noise.nu_sq == 0.0:
            return np.zeros_like(f)
        return rng.normal(scale=np.sqrt(noise.nu_sq), size=f.shape)
    e = rng.normal(size=f.shape)
    signal = np.sum(f**2)
    if signal == 0:
        raise InvalidInputError("target-snr noise undefined for an all-zero matrix")
    return e * np.sqrt(signal / (noise.snr * np.sum(e**2)))


def observe(f, sampling, noise=NoiseSpec.none()):
    """Sample ``f`` at the given positions after adding full-matrix noise."""
    f = np.asarray(f, dtype=float)
    if f.shape != (sampling.n_rows, sampling.n_cols):
        raise InvalidInputError(
            f"matrix shape {f.shape} does not match sampling grid "
            f"{(sampling.n_rows, sampling.n_cols)}"
        )
    noisy = f + noise_matrix(f, noise)
    values = noisy[sampling.row_indices0, sampling.col_indices0]
    return ObservationSet(sampling, values)
