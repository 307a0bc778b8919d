"""Completion estimators: the closed-form product-kernel solver, its
reduced-dimension ridge variant (batch and streaming), and the two
factorization baselines (exact alternating minimization and row-wise SGD).

All linear systems are symmetric positive definite by construction
(PSD Gram plus mu I with mu > 0) and are solved by Cholesky factorization.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError
from scipy.linalg.blas import dsyrk

from .errors import InvalidInputError, NumericalError
from .kernels import kron_submatrix

__all__ = [
    "KkmcexModel",
    "RrmcexModel",
    "FactorModel",
    "StepSchedule",
    "kkmcex_fit",
    "kkmcex_predict",
    "rrmcex_fit",
    "rrmcex_predict",
    "orrmcex_step",
    "orrmcex_run",
    "als_fit",
    "factor_sgd_fit",
    "factor_predict",
    "save_model",
    "load_kkmcex_model",
    "load_rrmcex_model",
    "load_factor_model",
]


def _spd_solve(a, b):
    try:
        return cho_solve(cho_factor(a, lower=True), b)
    except LinAlgError as exc:
        raise NumericalError(f"positive-definite solve failed: {exc}") from exc


def _unvec(v, n_rows, n_cols):
    """Undo column-major vectorization."""
    return np.reshape(v, (n_rows, n_cols), order="F")


@dataclass(frozen=True)
class KkmcexModel:
    """Fitted closed-form model: dual coefficients on the observed entries only."""

    kernel: object
    sampling: object
    mu: float
    dual_coeffs: np.ndarray

    def full_dual_vector(self):
        """Length-NL coefficient vector; exactly zero off the sampled indices."""
        gamma = np.zeros(self.kernel.size)
        gamma[self.sampling.vec_indices0] = self.dual_coeffs
        return gamma


@dataclass(frozen=True)
class RrmcexModel:
    """Fitted ridge model in feature space: d primal coefficients."""

    features: object
    mu: float
    xi: np.ndarray


@dataclass(frozen=True)
class FactorModel:
    """Rank-p factorization: an N x p and an L x p factor.

    ``kernel_reg`` records the kernel pair whose inverses regularized the
    fit, when one was used.
    """

    w: np.ndarray
    h: np.ndarray
    mu: float
    kernel_reg: tuple = None

    @property
    def rank(self):
        return self.w.shape[1]


@dataclass(frozen=True)
class StepSchedule:
    """Step-size rule: a constant step or the decay c / (n + n0)."""

    rule: str
    c: float
    n0: float = 0.0

    def __post_init__(self):
        if self.rule not in ("constant", "decay"):
            raise InvalidInputError(f"unknown step rule {self.rule!r}")
        if self.c <= 0 or (self.rule == "decay" and self.n0 <= 0):
            raise InvalidInputError("step-size parameters must be positive")

    @classmethod
    def constant(cls, t):
        return cls("constant", t)

    @classmethod
    def decay(cls, c, n0):
        return cls("decay", c, n0)

    def step(self, n):
        """Step size at 1-based iteration n."""
        if self.rule == "constant":
            return self.c
        return self.c / (n + self.n0)


def _check_fit_inputs(obs, mu):
    if mu <= 0:
        raise InvalidInputError(f"ridge weight mu must be positive, got {mu}")
    if not np.all(np.isfinite(obs.values)):
        raise InvalidInputError("observations contain non-finite values")


def kkmcex_fit(kernel, obs, mu):
    """Solve the S x S regularized system on the sampled kernel block.

    The dual coefficients solve (G + mu I) c = m with G the sampled S x S
    product-kernel block; the full NL x NL kernel is never formed.
    """
    _check_fit_inputs(obs, mu)
    sampling = obs.sampling
    g = kron_submatrix(kernel, sampling)
    g[np.diag_indices_from(g)] += mu
    coeffs = _spd_solve(g, obs.values)
    return KkmcexModel(kernel, sampling, mu, coeffs)


def kkmcex_predict(model):
    """Full N x L estimate from the fitted dual coefficients.

    The product-kernel times scattered-coefficients product collapses to
    Kx @ C @ Ky with C the coefficients placed at their grid positions, so
    prediction costs two small dense multiplies.
    """
    kk = model.kernel
    c = np.zeros((kk.n_rows, kk.n_cols))
    c[model.sampling.row_indices0, model.sampling.col_indices0] = model.dual_coeffs
    return kk.kx.matrix @ c @ kk.ky.matrix


def rrmcex_fit(features, obs, mu):
    """Ridge regression on the sampled feature rows.

    Solves (Phi_S^T Phi_S + mu I) xi = Phi_S^T m where Phi_S gathers the
    feature rows at the sampled vector indices (cost O(d^2 S)).  The Gram
    matrix comes from a rank-k symmetric update (half the flops of a full
    multiply); the Cholesky solve only reads its lower triangle.
    """
    _check_fit_inputs(obs, mu)
    phi_s = features.phi[obs.sampling.vec_indices0]
    a = dsyrk(1.0, phi_s, trans=1, lower=1)
    a[np.diag_indices_from(a)] += mu
    try:
        xi = cho_solve(cho_factor(a, lower=True), phi_s.T @ obs.values)
    except LinAlgError as exc:
        raise NumericalError(f"positive-definite solve failed: {exc}") from exc
    return RrmcexModel(features, mu, xi)


def rrmcex_predict(model):
    """Full N x L estimate phi @ xi, un-vectorized column-major."""
    f = model.features
    return _unvec(f.phi @ model.xi, f.n_rows, f.n_cols)


def orrmcex_step(model, i, j, m, t, mu):
    """One streaming update from the observation m at grid entry (i, j).

    The update direction phi (phi^T xi - m) + mu xi is the gradient of the
    half-scaled instantaneous objective (residual^2 + mu ||xi||^2) / 2.
    A zero step size leaves the model unchanged.
    """
    if t < 0:
        raise InvalidInputError(f"step size must be nonnegative, got {t}")
    phi_row = model.features.row(i, j)
    resid = float(phi_row @ model.xi) - m
    xi = model.xi - t * (phi_row * resid + mu * model.xi)
    return RrmcexModel(model.features, mu, xi)


def orrmcex_run(features, obs, schedule, mu, epochs, eval_hook=None, seed=0,
                eval_every=None):
    """Stream the observations for several epochs of seeded-order SGD.

    Starts from xi = 0, visits the observations in a fresh random order each
    epoch, and applies the streaming update with the scheduled step size.
    ``eval_hook(iteration, model)`` fires every ``eval_every`` iterations
    (default: once per epoch).
    """
    if epochs < 0:
        raise InvalidInputError(f"epochs must be nonnegative, got {epochs}")
    _check_fit_inputs(obs, mu)
    rng = np.random.default_rng(seed)
    vec_idx = obs.sampling.vec_indices0
    values = obs.values
    xi = np.zeros(features.dim)
    phi = features.phi
    n = 0
    for _ in range(epochs):
        for k in rng.permutation(len(values)):
            n += 1
            t = schedule.step(n)
            phi_row = phi[vec_idx[k]]
            resid = phi_row @ xi - values[k]
            xi -= t * (phi_row * resid + mu * xi)
            if eval_every is not None and n % eval_every == 0 and eval_hook is not None:
                eval_hook(n, RrmcexModel(features, mu, xi.copy()))
        if eval_every is None and eval_hook is not None:
            eval_hook(n, RrmcexModel(features, mu, xi.copy()))
    return RrmcexModel(features, mu, xi)


def _factor_init(n, l, p, seed):
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(p)
    return rng.normal(scale=scale, size=(n, p)), rng.normal(scale=scale, size=(l, p))


def _kernel_inverse(kernel, name):
    try:
        factor = cho_factor(kernel.matrix, lower=True)
    except LinAlgError as exc:
        raise InvalidInputError(f"{name} kernel is singular; its inverse-regularized "
                                f"subproblems are undefined") from exc
    return cho_solve(factor, np.eye(kernel.side))


def _als_objective(m_vals, rows, cols, w, h, mu, kxinv, kyinv):
    resid = m_vals - np.sum(w[rows] * h[cols], axis=1)
    fit = float(resid @ resid)
    reg = mu * (float(np.sum(w * (kxinv @ w))) + float(np.sum(h * (kyinv @ h))))
    return fit + reg


def _als_half_step(m_vals, own_idx, other_idx, other, n_own, p, mu, kinv):
    """Exact minimization over one factor with the other held fixed.

    The normal equations couple the rows of the updated factor through the
    inverse-kernel regularizer, so all n_own * p unknowns are solved at once.
    """
    size = n_own * p
    a = mu * np.kron(kinv, np.eye(p))
    rhs = np.zeros(size)
    for k in range(len(m_vals)):
        i = own_idx[k]
        v = other[other_idx[k]]
        block = slice(i * p, (i + 1) * p)
        a[block, block] += np.outer(v, v)
        rhs[block.start:block.stop] += m_vals[k] * v
    return _spd_solve(a, rhs).reshape(n_own, p)


def als_fit(obs, kx, ky, p, mu, max_iters=500, rel_tol=1e-6, seed=0,
            init_w=None, init_h=None, return_objectives=False):
    """Alternating exact minimization of the kernel-regularized factorization.

    Each half step solves its coupled normal equations exactly, so the
    objective is non-increasing; an increase beyond 1e-10 signals a solver
    bug and raises.  Stops on relative objective decrease below ``rel_tol``.
    """
    if p < 1:
        raise InvalidInputError(f"rank bound must be at least 1, got {p}")
    _check_fit_inputs(obs, mu)
    sampling = obs.sampling
    n, l = sampling.n_rows, sampling.n_cols
    kxinv = _kernel_inverse(kx, "row")
    kyinv = _kernel_inverse(ky, "column")
    rows = sampling.row_indices0
    cols = sampling.col_indices0
    m_vals = obs.values

    if init_w is None or init_h is None:
        w, h = _factor_init(n, l, p, seed)
    else:
        w, h = np.array(init_w, dtype=float), np.array(init_h, dtype=float)

    objectives = [_als_objective(m_vals, rows, cols, w, h, mu, kxinv, kyinv)]
    for _ in range(max_iters):
        w = _als_half_step(m_vals, rows, cols, h, n, p, mu, kxinv)
        h = _als_half_step(m_vals, cols, rows, w, l, p, mu, kyinv)
        obj = _als_objective(m_vals, rows, cols, w, h, mu, kxinv, kyinv)
        prev = objectives[-1]
        if obj > prev + 1e-10:
            raise NumericalError(
                f"alternating minimization objective increased ({prev:g} -> {obj:g})"
            )
        objectives.append(obj)
        if prev - obj < rel_tol * max(abs(prev), 1e-30):
            break
    model = FactorModel(w, h, mu, kernel_reg=(kx, ky))
    if return_objectives:
        return model, objectives
    return model


def factor_sgd_fit(obs, p, mu, schedule, epochs, seed):
    """Row-wise SGD on the entrywise factorization objective.

    Each observed entry contributes its squared residual plus per-row ridge
    terms weighted by mu over the number of observations touching that row
    or column; updates follow the exact gradient of that summand.
    """
    if p < 1:
        raise InvalidInputError(f"rank bound must be at least 1, got {p}")
    _check_fit_inputs(obs, mu)
    sampling = obs.sampling
    n, l = sampling.n_rows, sampling.n_cols
    rows = sampling.row_indices0
    cols = sampling.col_indices0
    m_vals = obs.values
    row_counts = np.bincount(rows, minlength=n).astype(float)
    col_counts = np.bincount(cols, minlength=l).astype(float)

    rng = np.random.default_rng(seed)
    w, h = _factor_init(n, l, p, seed)
    step_no = 0
    for _ in range(epochs):
        for k in rng.permutation(len(m_vals)):
            step_no += 1
            t = schedule.step(step_no)
            i, j = rows[k], cols[k]
            wi, hj = w[i], h[j]
            err = m_vals[k] - wi @ hj
            gw = -2.0 * err * hj + (2.0 * mu / row_counts[i]) * wi
            gh = -2.0 * err * wi + (2.0 * mu / col_counts[j]) * hj
            w[i] = wi - t * gw
            h[j] = hj - t * gh
    return FactorModel(w, h, mu)


def factor_predict(model):
    """Full N x L estimate as the factor product."""
    return model.w @ model.h.T


def save_model(path, model):
    """Serialize a fitted model as a CSV bundle with a metadata header line."""
    with open(path, "w") as fh:
        if isinstance(model, KkmcexModel):
            s = model.sampling
            fh.write(f"kkmcex,{s.n_rows},{s.n_cols},{len(s)},{float(model.mu)!r}\n")
            for (i, j), c in zip(s.entries, model.dual_coeffs):
                fh.write(f"{i},{j},{float(c)!r}\n")
        elif isinstance(model, RrmcexModel):
            f = model.features
            fh.write(f"rrmcex,{f.n_rows},{f.n_cols},{f.dim},{float(model.mu)!r}\n")
            for v in model.xi:
                fh.write(f"{float(v)!r}\n")
        elif isinstance(model, FactorModel):
            n, l = model.w.shape[0], model.h.shape[0]
            fh.write(f"factor,{n},{l},{model.rank},{float(model.mu)!r}\n")
            np.savetxt(fh, model.w, fmt="%.17g", delimiter=",")
            np.savetxt(fh, model.h, fmt="%.17g", delimiter=",")
        else:
            raise InvalidInputError(f"cannot serialize model of type {type(model)!r}")


def _read_bundle(path, kind):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[0] != kind:
            raise InvalidInputError(f"{path}: expected a {kind} bundle, got {header[0]!r}")
        body = [line.strip() for line in fh if line.strip()]
    return header, body


def load_kkmcex_model(path, kernel):
    from .sampling import SamplingSet

    header, body = _read_bundle(path, "kkmcex")
    n, l, s, mu = int(header[1]), int(header[2]), int(header[3]), float(header[4])
    entries, coeffs = [], []
    for line in body:
        i, j, c = line.split(",")
        entries.append((int(i), int(j)))
        coeffs.append(float(c))
    if len(entries) != s:
        raise InvalidInputError(f"{path}: expected {s} coefficients, found {len(entries)}")
    sampling = SamplingSet(n, l, tuple(entries))
    return KkmcexModel(kernel, sampling, mu, np.array(coeffs))


def load_rrmcex_model(path, features):
    header, body = _read_bundle(path, "rrmcex")
    d, mu = int(header[3]), float(header[4])
    xi = np.array([float(v) for v in body])
    if xi.size != d or features.dim != d:
        raise InvalidInputError(f"{path}: coefficient count does not match d={d}")
    return RrmcexModel(features, mu, xi)


def load_factor_model(path):
    header, body = _read_bundle(path, "factor")
    n, l, p, mu = int(header[1]), int(header[2]), int(header[3]), float(header[4])
    rows = [np.array([float(v) for v in line.split(",")]) for line in body]
    if len(rows) != n + l:
        raise InvalidInputError(f"{path}: expected {n + l} factor rows, found {len(rows)}")
    w = np.vstack(rows[:n])
    h = np.vstack(rows[n:])
    if w.shape[1] != p or h.shape[1] != p:
        raise InvalidInputError(f"{path}: factor rows do not match rank {p}")
    return FactorModel(w, h, mu)
