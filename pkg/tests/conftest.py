"""Shared test helpers: independent oracles kept away from solver code paths.

Oracles deliberately use eigendecompositions, matrix square roots, brute
force, and exact rationals, none of which the library's solve paths touch.
"""

import numpy as np
import pytest

from framescale import Frame


def random_frame(rng, d, n, spread=1.0):
    while True:
        U = rng.standard_normal((d, n))
        if spread != 1.0:
            U *= np.exp(rng.uniform(-spread, spread, size=n))
        try:
            return Frame(U)
        except ValueError:
            continue


def random_scaling(rng, n, decades=1.0):
    return 10.0 ** rng.uniform(-decades, decades, size=n)


def gram_inv_half(U, z):
    """(UZU^T)^{-1/2} via eigendecomposition (oracle only)."""
    G = (U * z) @ U.T
    w, E = np.linalg.eigh(0.5 * (G + G.T))
    return E @ np.diag(1.0 / np.sqrt(w)) @ E.T


def whitened(U, z):
    """V = (UZU^T)^{-1/2} U sqrt(Z); satisfies V V^T = I."""
    return gram_inv_half(U, z) @ (U * np.sqrt(z))


def mu_spectrum(U, z, T):
    """Eigenvalues of U_T Z_T U_T^T (UZU^T)^{-1}, descending, clipped to [0,1]."""
    V = whitened(U, z)
    W = V[:, T] @ V[:, T].T
    mu = np.linalg.eigvalsh(0.5 * (W + W.T))[::-1]
    return np.clip(mu, 0.0, 1.0)


def oracle_h(mu, alpha):
    return float(np.sum(alpha * mu / (1.0 + (alpha - 1.0) * mu)))


def oracle_h_prime(mu, alpha):
    return float(np.sum(mu * (1.0 - mu) / (1.0 + (alpha - 1.0) * mu) ** 2))


def sinkhorn_column_scaling(A, r, c, iters=200000, tol=1e-14):
    """Classic alternating row/column normalization; returns y."""
    y = np.ones(A.shape[1])
    for _ in range(iters):
        x = r / (A @ y)
        y_new = c / (A.T @ x)
        if np.max(np.abs(y_new / y - 1.0)) < tol:
            return y_new
        y = y_new
    return y


def gapped_instance(rng, d, n, big_exp=(4.0, 6.0), small_exp=(-4.0, -2.0)):
    """(frame, z, T) whose T-spectrum splits around 1/2 with a wide gap.

    A few columns of T get huge weights (eigenvalues near 1), the rest tiny
    weights (small positive eigenvalues), which keeps sum mu(1-mu) < 1/4.
    """
    while True:
        frame = random_frame(rng, d, n)
        t_size = int(rng.integers(2, min(n - 1, d + 2) + 1))
        perm = rng.permutation(n)
        T = perm[:t_size]
        n_big = int(rng.integers(0, min(t_size, d - 1) + 1))
        z = np.ones(n)
        if n_big:
            z[T[:n_big]] = 10.0 ** rng.uniform(*big_exp, size=n_big)
        z[T[n_big:]] = 10.0 ** rng.uniform(*small_exp, size=t_size - n_big)
        mu = mu_spectrum(frame.matrix, z, T)
        if float(np.sum(mu * (1.0 - mu))) < 0.24:
            return frame, z, np.sort(T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240801)
