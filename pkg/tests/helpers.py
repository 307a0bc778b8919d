"""Independent oracles shared across test modules.

Everything here deliberately recomputes quantities by a different route
than the library (dense Kronecker products, full NL x NL solves, explicit
selector matrices, dynamic-programming shortest paths) so the two sides
of each check stay independent.
"""

import numpy as np

from kronmc import KernelMatrix


def make_spd_kernel(rng, n, ridge=0.5):
    """Random symmetric positive definite kernel, eigenvalues >= ridge."""
    b = rng.normal(size=(n, n))
    return KernelMatrix(b @ b.T / n + ridge * np.eye(n))


def dense_kron(kk):
    """Dense product-kernel oracle under the column-major vec convention."""
    return np.kron(kk.ky.matrix, kk.kx.matrix)


def dense_krr_gamma(kz, sampling, values, mu):
    """Full-size regularized solve oracle: (S^T S Kz + mu I)^{-1} S^T m."""
    s = sampling.selector_matrix()
    nl = kz.shape[0]
    return np.linalg.solve(s.T @ s @ kz + mu * np.eye(nl), s.T @ values)


def unvec(v, n, l):
    return np.reshape(v, (n, l), order="F")


def floyd_warshall_hops(adjacency):
    """All-pairs hop counts by dynamic programming."""
    n = adjacency.shape[0]
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    d[adjacency > 0] = 1.0
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d


def plain_als(values, rows0, cols0, n, l, p, mu, w0, h0, iters):
    """Exact alternating minimization of the plain ridge factorization.

    Independent route for the identity-kernel reduction: every row solves
    its own p x p ridge system, no cross-row coupling.
    """
    w = w0.copy()
    h = h0.copy()

    def objective():
        resid = values - np.sum(w[rows0] * h[cols0], axis=1)
        return float(resid @ resid + mu * (np.sum(w**2) + np.sum(h**2)))

    objectives = [objective()]
    for _ in range(iters):
        for i in range(n):
            mask = rows0 == i
            hj = h[cols0[mask]]
            a = hj.T @ hj + mu * np.eye(p)
            w[i] = np.linalg.solve(a, hj.T @ values[mask])
        for j in range(l):
            mask = cols0 == j
            wi = w[rows0[mask]]
            a = wi.T @ wi + mu * np.eye(p)
            h[j] = np.linalg.solve(a, wi.T @ values[mask])
        objectives.append(objective())
    return w, h, objectives
