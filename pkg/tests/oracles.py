"""Independent reference computations used only by the tests."""

import numpy as np


def R_grid(mu, deltas):
    """``R(delta)`` for many deltas at once via sorted prefix sums."""
    mu = np.sort(np.asarray(mu, dtype=float))
    n = mu.size
    prefix = np.concatenate([[0.0], np.cumsum(mu)])
    d2 = np.asarray(deltas, dtype=float) ** 2
    below = np.searchsorted(mu, d2, side="left")  # eigenvalues < delta^2 contribute themselves
    total = prefix[below] + (n - below) * d2
    return np.sqrt(total / n)


def critical_radius_scan(mu, sigma, points=10**6):
    """Two-stage grid scan for the first delta with R(delta)/delta <= delta/sigma."""
    mu = np.asarray(mu, dtype=float)
    hi = 4.0 * max(sigma, 1.0) * max(1.0, np.sqrt(mu.max()))
    grid = np.geomspace(1e-10, hi, points)
    gap = R_grid(mu, grid) / grid - grid / sigma
    k = int(np.argmax(gap <= 0))
    assert gap[k] <= 0 and k > 0, "scan range does not bracket the crossing"
    fine = np.linspace(grid[k - 1], grid[k], points)
    gap = R_grid(mu, fine) / fine - fine / sigma
    j = int(np.argmax(gap <= 0))
    return fine[j]


def boost_naive(K, y, dphi, alpha, T):
    """Plain-Python boosting iterates f^0..f^T for a scalar derivative ``dphi``."""
    n = len(y)
    f = [0.0] * n
    out = [list(f)]
    for _ in range(T):
        g = [dphi(y[i], f[i]) / n for i in range(n)]
        f = [f[i] - alpha * n * sum(K[i][j] * g[j] for j in range(n)) for i in range(n)]
        out.append(list(f))
    return np.array(out)
