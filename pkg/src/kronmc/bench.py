"""Benchmark datasets, experiment protocols, and CSV plumbing.

A sweep draws a fresh uniform sampling set per realization, observes the
ground truth (optionally with noise), fits the configured method, and
accumulates normalized errors and wall-clock seconds.  Timing covers fit
plus predict only; kernel and feature-map construction happen outside the
clock and are reported separately.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import nmse
from .errors import InvalidInputError
from .graphs import (Graph, build_laplacian, erdos_renyi, geodesic_distances,
                     heat_adjacency, knn_symmetric)
from .kernels import (Diffusion, KroneckerKernel, features_from_eig,
                      pearson_kernel, spectral_kernel)
from .sampling import (NoiseSpec, ObservationSet, SamplingSet, observe,
                       uniform_sample)
from .solvers import (StepSchedule, als_fit, factor_predict, factor_sgd_fit,
                      kkmcex_fit, kkmcex_predict, orrmcex_run, rrmcex_fit,
                      rrmcex_predict)

__all__ = [
    "DatasetBundle",
    "ExperimentConfig",
    "ExperimentResult",
    "derive_seed",
    "generate_synthetic",
    "band_graph",
    "station_day_bundle",
    "synthetic_station_day_bundle",
    "class_agreement_bundle",
    "synthetic_categorical_table",
    "load_matrix_csv",
    "save_matrix_csv",
    "load_triplets_csv",
    "save_triplets_csv",
    "load_sampling_csv",
    "save_sampling_csv",
    "onehot_features",
    "run_sweep",
    "grid_search",
    "run_online",
]

METHODS = ("kkmcex", "rrmcex", "orrmcex", "als", "factor_sgd")

# default search grids when nothing better is known
DEFAULT_MU_GRID = tuple(10.0 ** e for e in range(-6, 3))
DEFAULT_ETA_GRID = tuple(10.0 ** e for e in (-2.0, -1.0, 0.0, 1.0))


def derive_seed(*parts):
    """Deterministic child seed from a tuple of integer tags."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


@dataclass(frozen=True)
class DatasetBundle:
    """Ground truth matrix with its row/column kernels and optional features.

    ``kernel_builder``, when present, rebuilds (kx, ky) for a new kernel
    parameter so grid search can sweep it.
    """

    f: np.ndarray
    kx: object
    ky: object
    x: np.ndarray = None
    y: np.ndarray = None
    provenance: dict = field(default_factory=dict)
    kernel_builder: object = None

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        if f.shape != (self.kx.side, self.ky.side):
            raise InvalidInputError(
                f"matrix shape {f.shape} does not match kernel sides "
                f"({self.kx.side}, {self.ky.side})"
            )
        object.__setattr__(self, "f", f)

    @property
    def shape(self):
        return self.f.shape


@dataclass(frozen=True)
class ExperimentConfig:
    """Protocol knobs for a sweep: method, sampling percentages, grids, noise."""

    method: str
    ps_grid: tuple
    realizations: int = 1
    mu_grid: tuple = (1e-3,)
    eta_grid: tuple = (1.0,)
    rank: int = 10
    feature_dim: int = 10
    noise: NoiseSpec = NoiseSpec.none()
    seed: int = 0
    epochs: int = 20
    schedule: StepSchedule = StepSchedule.decay(0.5, 10.0)
    max_iters: int = 500
    rel_tol: float = 1e-6
    validation_fraction: float = 0.2

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method {self.method!r}")
        if not self.ps_grid or not all(0 < p <= 100 for p in self.ps_grid):
            raise InvalidInputError("sampling percentages must lie in (0, 100]")
        if not self.mu_grid or not self.eta_grid:
            raise InvalidInputError("parameter grids must be nonempty")
        if self.realizations < 1:
            raise InvalidInputError("need at least one realization")


@dataclass
class ExperimentResult:
    """Per-realization rows plus aggregate views."""

    rows: list
    estimates: dict = field(default_factory=dict)

    def summary(self):
        """Mean error and total seconds per (method, P_s)."""
        out = {}
        for row in self.rows:
            key = (row["method"], row["p_s"])
            out.setdefault(key, []).append(row)
        return {
            key: {
                "nmse": float(np.mean([r["nmse"] for r in group])),
                "seconds": float(np.sum([r["seconds"] for r in group])),
                "mu": group[0]["mu"],
                "eta": group[0]["eta"],
            }
            for key, group in out.items()
        }

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("method,P_s,realization,nmse,seconds,mu,eta\n")
            for r in self.rows:
                fh.write(f"{r['method']},{r['p_s']!r},{r['realization']},"
                         f"{r['nmse']!r},{r['seconds']!r},{r['mu']!r},{r['eta']!r}\n")


def generate_synthetic(n, l, graph_p, eta, seed):
    """Random smooth matrix: two random graphs, diffusion kernels, F = Kx G Ky.

    G has iid standard Gaussian entries.  Deterministic for a fixed seed; the
    bundle carries a kernel builder so the diffusion weight can be re-swept.
    """
    if n < 2 or l < 2:
        raise InvalidInputError("synthetic grids need at least 2 rows and columns")
    rng = np.random.default_rng(seed)
    seed_x, seed_y = (int(s) for s in rng.integers(2**63, size=2))
    lap_x = build_laplacian(erdos_renyi(n, graph_p, seed_x))
    lap_y = build_laplacian(erdos_renyi(l, graph_p, seed_y))

    def builder(eta_val):
        return (spectral_kernel(lap_x, Diffusion(eta_val)),
                spectral_kernel(lap_y, Diffusion(eta_val)))

    kx, ky = builder(eta)
    gamma = rng.normal(size=(n, l))
    f = kx.matrix @ gamma @ ky.matrix
    return DatasetBundle(
        f, kx, ky,
        provenance={"generator": "synthetic", "n": n, "l": l,
                    "graph_p": graph_p, "eta": eta, "seed": seed},
        kernel_builder=builder,
    )


def band_graph(n, half_width):
    """Chain-like graph joining each vertex to its ``half_width`` neighbours
    on either side (unweighted)."""
    if half_width < 0:
        raise InvalidInputError("band half-width must be nonnegative")
    idx = np.arange(n)
    adj = (np.abs(idx[:, None] - idx[None, :]) <= half_width).astype(float)
    np.fill_diagonal(adj, 0.0)
    return Graph(adj)


def station_day_bundle(f, station_distances, k=8, day_band=10, eta=1.0):
    """Measurement-station recipe: rows are stations, columns are days.

    The station kernel diffuses over a heat-weighted adjacency built from
    hop-count geodesics on the symmetrized k-nearest graph of the supplied
    pairwise distances; the day kernel diffuses over a +/- ``day_band``
    band graph.  ``f`` is the user-supplied readings matrix.
    """
    f = np.asarray(f, dtype=float)
    n, l = f.shape
    nearest = knn_symmetric(station_distances, k)
    hops = geodesic_distances(nearest)
    station_graph = heat_adjacency(hops, n)
    kx = spectral_kernel(build_laplacian(station_graph), Diffusion(eta))
    ky = spectral_kernel(build_laplacian(band_graph(l, day_band)), Diffusion(eta))

    def builder(eta_val):
        return (spectral_kernel(build_laplacian(station_graph), Diffusion(eta_val)),
                spectral_kernel(build_laplacian(band_graph(l, day_band)),
                                Diffusion(eta_val)))

    return DatasetBundle(f, kx, ky,
                         provenance={"generator": "station-day", "k": k,
                                     "day_band": day_band, "eta": eta},
                         kernel_builder=builder)


def synthetic_station_day_bundle(n_stations=30, n_days=60, k=8, day_band=10,
                                 eta=1.0, seed=0):
    """Synthetic stand-in with the station-day shape, for tests and demos.

    Stations get random planar coordinates; the readings are drawn smooth
    against the recipe's own kernels so completion is meaningful.
    """
    rng = np.random.default_rng(seed)
    coords = rng.uniform(size=(n_stations, 2))
    diffs = coords[:, None, :] - coords[None, :, :]
    distances = np.sqrt(np.sum(diffs**2, axis=-1))
    np.fill_diagonal(distances, 0.0)
    placeholder = np.zeros((n_stations, n_days))
    bundle = station_day_bundle(placeholder, distances, k=k, day_band=day_band,
                                eta=eta)
    f = bundle.kx.matrix @ rng.normal(size=(n_stations, n_days)) @ bundle.ky.matrix
    return DatasetBundle(f, bundle.kx, bundle.ky,
                         provenance={**bundle.provenance,
                                     "generator": "station-day-synthetic",
                                     "seed": seed},
                         kernel_builder=bundle.kernel_builder)


def class_agreement_bundle(rows, labels, subsample=400, seed=0):
    """Clustering-style recipe: the target is the label-agreement matrix.

    The categorical ``rows`` are one-hot encoded; both side kernels are the
    Pearson correlation of the encoded rows (rows and columns index the same
    items), and the target has +1 where two items share a label and -1
    elsewhere.  Items are subsampled to ``subsample`` (seeded) to keep the
    grid at desk scale.
    """
    rows = list(rows)
    labels = list(labels)
    if len(rows) != len(labels):
        raise InvalidInputError(f"{len(rows)} rows but {len(labels)} labels")
    if subsample < len(rows):
        keep = np.random.default_rng(seed).choice(len(rows), size=subsample,
                                                  replace=False)
        keep.sort()
        rows = [rows[i] for i in keep]
        labels = [labels[i] for i in keep]
    x = onehot_features(rows)
    kx = pearson_kernel(x)
    lab = np.array(labels)
    f = np.where(lab[:, None] == lab[None, :], 1.0, -1.0)
    return DatasetBundle(f, kx, kx, x=x, y=x,
                         provenance={"generator": "class-agreement",
                                     "subsample": len(rows), "seed": seed})


def synthetic_categorical_table(n_rows=120, n_attrs=22, seed=0):
    """Random categorical table plus binary labels, shaped like a species
    catalogue; a stand-in used by tests and demos.

    Labels are a thresholded random linear score of the one-hot encoding,
    so attribute similarity is informative about label agreement.
    """
    rng = np.random.default_rng(seed)
    sizes = rng.integers(2, 7, size=n_attrs)
    rows = [tuple(f"a{a}v{rng.integers(sizes[a])}" for a in range(n_attrs))
            for _ in range(n_rows)]
    enc = onehot_features(rows)
    score = enc @ rng.normal(size=enc.shape[1])
    labels = [int(v) for v in score > np.median(score)]
    return rows, labels


def save_matrix_csv(path, m):
    np.savetxt(path, np.atleast_2d(np.asarray(m, dtype=float)),
               fmt="%.17g", delimiter=",")


def load_matrix_csv(path):
    """Dense CSV matrix; raises with the offending line number on bad input."""
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            try:
                row = [float(v) for v in fields]
            except ValueError as exc:
                raise InvalidInputError(f"{path}: line {lineno}: {exc}") from exc
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise InvalidInputError(
                    f"{path}: line {lineno}: expected {width} fields, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise InvalidInputError(f"{path}: empty matrix file")
    return np.array(rows)


def save_triplets_csv(path, obs):
    with open(path, "w") as fh:
        for (i, j), v in zip(obs.sampling.entries, obs.values):
            fh.write(f"{i},{j},{float(v)!r}\n")


def load_triplets_csv(path, n_rows, n_cols):
    """Observation triplets ``i,j,value`` (1-based); duplicates are rejected."""
    entries = []
    values = []
    seen = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 3:
                raise InvalidInputError(
                    f"{path}: line {lineno}: expected i,j,value, got {line!r}"
                )
            try:
                i, j, v = int(fields[0]), int(fields[1]), float(fields[2])
            except ValueError as exc:
                raise InvalidInputError(f"{path}: line {lineno}: {exc}") from exc
            if not (1 <= i <= n_rows and 1 <= j <= n_cols):
                raise InvalidInputError(
                    f"{path}: line {lineno}: index ({i}, {j}) outside "
                    f"{n_rows} x {n_cols} grid"
                )
            if (i, j) in seen:
                raise InvalidInputError(f"{path}: line {lineno}: duplicate entry ({i}, {j})")
            seen.add((i, j))
            entries.append((i, j))
            values.append(v)
    sampling = SamplingSet(n_rows, n_cols, tuple(entries))
    return ObservationSet(sampling, np.array(values))


def save_sampling_csv(path, sampling):
    with open(path, "w") as fh:
        for i, j in sampling.entries:
            fh.write(f"{i},{j}\n")


def load_sampling_csv(path, n_rows, n_cols):
    entries = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise InvalidInputError(f"{path}: line {lineno}: expected i,j")
            entries.append((int(fields[0]), int(fields[1])))
    return SamplingSet(n_rows, n_cols, tuple(entries))


def onehot_features(rows):
    """Binary indicator matrix for rows of categorical tuples.

    One column per (attribute, category) pair; categories are ordered by
    first appearance within each attribute.
    """
    rows = list(rows)
    if not rows:
        raise InvalidInputError("need at least one row")
    arity = len(rows[0])
    for r, row in enumerate(rows):
        if len(row) != arity:
            raise InvalidInputError(
                f"row {r + 1} has {len(row)} attributes, expected {arity}"
            )
    categories = [[] for _ in range(arity)]
    for row in rows:
        for a, cat in enumerate(row):
            if cat not in categories[a]:
                categories[a].append(cat)
    offsets = np.cumsum([0] + [len(c) for c in categories])
    out = np.zeros((len(rows), int(offsets[-1])))
    for r, row in enumerate(rows):
        for a, cat in enumerate(row):
            out[r, offsets[a] + categories[a].index(cat)] = 1.0
    return out


def _prepare_method_state(method, kx, ky, dataset, config):
    """Build whatever the method needs before the clock starts."""
    if method == "kkmcex":
        return {"kernel": KroneckerKernel(kx, ky)}
    if method in ("rrmcex", "orrmcex"):
        return {"features": features_from_eig(kx, ky, config.feature_dim)}
    if method == "als":
        return {"kx": kx, "ky": ky}
    return {}


def _fit_predict(method, state, obs, mu, config, seed):
    """Fit the configured method on one observation set and predict."""
    if method == "kkmcex":
        return kkmcex_predict(kkmcex_fit(state["kernel"], obs, mu))
    if method == "rrmcex":
        return rrmcex_predict(rrmcex_fit(state["features"], obs, mu))
    if method == "orrmcex":
        model = orrmcex_run(state["features"], obs, config.schedule, mu,
                            config.epochs, seed=seed)
        return rrmcex_predict(model)
    if method == "als":
        model = als_fit(obs, state["kx"], state["ky"], config.rank, mu,
                        max_iters=config.max_iters, rel_tol=config.rel_tol,
                        seed=seed)
        return factor_predict(model)
    model = factor_sgd_fit(obs, config.rank, mu, config.schedule,
                           config.epochs, seed)
    return factor_predict(model)


def _kernels_for_eta(dataset, eta, base_eta):
    if dataset.kernel_builder is not None and eta != base_eta:
        return dataset.kernel_builder(eta)
    if eta != base_eta:
        raise InvalidInputError(
            "dataset has no kernel builder; the kernel parameter grid must be "
            "a single point"
        )
    return dataset.kx, dataset.ky


def _base_eta(dataset):
    return dataset.provenance.get("eta", None)


def _sample_count(p_s, n, l):
    count = int(round(p_s / 100.0 * n * l))
    return min(max(count, 1), n * l)


def grid_search(config, dataset, validation_fraction=None, p_s=None):
    """Pick (mu, eta) minimizing held-out error on one observation draw.

    A fraction of the observed entries is held out; each grid point is fit
    on the rest and scored on the holdout.  Ties break toward the larger mu.
    """
    if validation_fraction is None:
        validation_fraction = config.validation_fraction
    if not 0 < validation_fraction < 1:
        raise InvalidInputError("validation fraction must lie strictly in (0, 1)")
    if p_s is None:
        p_s = config.ps_grid[0]
    n, l = dataset.shape
    count = _sample_count(p_s, n, l)
    sampling = uniform_sample(n, l, count, derive_seed(config.seed, 9001))
    noise = replace(config.noise, seed=derive_seed(config.seed, 9002))
    obs = observe(dataset.f, sampling, noise)

    n_val = int(round(validation_fraction * count))
    if n_val == 0 or n_val == count:
        raise InvalidInputError(
            f"validation split is degenerate ({n_val} of {count} observations)"
        )
    val_entries = obs.sampling.entries[:n_val]
    fit_entries = obs.sampling.entries[n_val:]
    val_values = obs.values[:n_val]
    fit_obs = ObservationSet(SamplingSet(n, l, fit_entries), obs.values[n_val:])
    val_rows = np.array([i - 1 for i, _ in val_entries])
    val_cols = np.array([j - 1 for _, j in val_entries])
    val_norm = float(np.sum(val_values**2))
    if val_norm == 0:
        raise InvalidInputError("validation values are all zero; score undefined")

    base_eta = _base_eta(dataset)
    best = None
    for eta in config.eta_grid:
        kx, ky = _kernels_for_eta(dataset, eta, base_eta)
        state = _prepare_method_state(config.method, kx, ky, dataset, config)
        for mu in config.mu_grid:
            est = _fit_predict(config.method, state, fit_obs, mu, config,
                               derive_seed(config.seed, 9003))
            score = float(np.sum((est[val_rows, val_cols] - val_values) ** 2)) / val_norm
            if best is None or score < best[0] or (score == best[0] and mu > best[1]):
                best = (score, mu, eta)
    return best[1], best[2]


def run_sweep(config, dataset, keep_estimates=False):
    """Run the full protocol: per P_s and realization, sample, observe, fit.

    Wall-clock seconds cover fit plus predict only.  When a parameter grid
    has several points the choice is made once per P_s by grid search.
    Fully reproducible from (config, seed).
    """
    n, l = dataset.shape
    base_eta = _base_eta(dataset)
    result = ExperimentResult(rows=[])
    for ps_idx, p_s in enumerate(config.ps_grid):
        if len(config.mu_grid) == 1 and len(config.eta_grid) == 1:
            mu, eta = config.mu_grid[0], config.eta_grid[0]
        else:
            mu, eta = grid_search(config, dataset, p_s=p_s)
        kx, ky = _kernels_for_eta(dataset, eta, base_eta)
        state = _prepare_method_state(config.method, kx, ky, dataset, config)
        count = _sample_count(p_s, n, l)
        estimates = []
        for r in range(config.realizations):
            sampling = uniform_sample(n, l, count,
                                      derive_seed(config.seed, ps_idx, r, 0))
            noise = replace(config.noise, seed=derive_seed(config.seed, ps_idx, r, 1))
            obs = observe(dataset.f, sampling, noise)
            fit_seed = derive_seed(config.seed, ps_idx, r, 2)
            tic = time.perf_counter()
            est = _fit_predict(config.method, state, obs, mu, config, fit_seed)
            seconds = time.perf_counter() - tic
            result.rows.append({
                "method": config.method,
                "p_s": float(p_s),
                "realization": r,
                "nmse": nmse(est, dataset.f),
                "seconds": seconds,
                "mu": float(mu),
                "eta": float(eta),
            })
            if keep_estimates:
                estimates.append(est)
        if keep_estimates:
            result.estimates[(config.method, float(p_s))] = estimates
    return result


def run_online(config, dataset, stride=None):
    """Reveal one observation per iteration, cycling, and trace the error.

    The reveal order is a seeded permutation of the sampling set repeated
    circularly.  Trace rows are (iteration, elapsed seconds, nmse) recorded
    every ``stride`` iterations (None: final point only); evaluation time is
    excluded from the elapsed clock.
    """
    if config.method not in ("orrmcex", "factor_sgd"):
        raise InvalidInputError(
            f"online protocol supports orrmcex and factor_sgd, got {config.method!r}"
        )
    n, l = dataset.shape
    p_s = config.ps_grid[0]
    count = _sample_count(p_s, n, l)
    sampling = uniform_sample(n, l, count, derive_seed(config.seed, 0, 0, 0))
    noise = replace(config.noise, seed=derive_seed(config.seed, 0, 0, 1))
    obs = observe(dataset.f, sampling, noise)
    mu = config.mu_grid[0]
    order = np.random.default_rng(derive_seed(config.seed, 0, 0, 2)).permutation(count)
    total_iters = config.epochs * count
    trace = []

    if config.method == "orrmcex":
        features = features_from_eig(dataset.kx, dataset.ky, config.feature_dim)
        phi = features.phi
        vec_idx = obs.sampling.vec_indices0
        xi = np.zeros(features.dim)
        elapsed = 0.0
        for it in range(1, total_iters + 1):
            tic = time.perf_counter()
            k = order[(it - 1) % count]
            t = config.schedule.step(it)
            phi_row = phi[vec_idx[k]]
            resid = phi_row @ xi - obs.values[k]
            xi -= t * (phi_row * resid + mu * xi)
            elapsed += time.perf_counter() - tic
            if (stride is not None and it % stride == 0) or it == total_iters:
                est = np.reshape(phi @ xi, (n, l), order="F")
                trace.append({"iteration": it, "seconds": elapsed,
                              "nmse": nmse(est, dataset.f)})
    else:
        rows0 = obs.sampling.row_indices0
        cols0 = obs.sampling.col_indices0
        row_counts = np.bincount(rows0, minlength=n).astype(float)
        col_counts = np.bincount(cols0, minlength=l).astype(float)
        rng_init = derive_seed(config.seed, 0, 0, 3)
        from .solvers import _factor_init

        w, h = _factor_init(n, l, config.rank, rng_init)
        elapsed = 0.0
        for it in range(1, total_iters + 1):
            tic = time.perf_counter()
            k = order[(it - 1) % count]
            t = config.schedule.step(it)
            i, j = rows0[k], cols0[k]
            wi, hj = w[i], h[j]
            err = obs.values[k] - wi @ hj
            gw = -2.0 * err * hj + (2.0 * mu / row_counts[i]) * wi
            gh = -2.0 * err * wi + (2.0 * mu / col_counts[j]) * hj
            w[i] = wi - t * gw
            h[j] = hj - t * gh
            elapsed += time.perf_counter() - tic
            if (stride is not None and it % stride == 0) or it == total_iters:
                trace.append({"iteration": it, "seconds": elapsed,
                              "nmse": nmse(w @ h.T, dataset.f)})
    return trace


def write_trace_csv(path, trace):
    with open(path, "w") as fh:
        fh.write("iteration,seconds,nmse\n")
        for row in trace:
            fh.write(f"{row['iteration']},{row['seconds']!r},{row['nmse']!r}\n")
