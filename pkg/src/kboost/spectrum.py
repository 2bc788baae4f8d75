"""Kernel-matrix eigenspectrum and the complexity quantities built on it.

The eigensolver reduces the matrix to tridiagonal form with Householder
reflections and then runs implicit-shift QL on the tridiagonal.  Only
eigenvalues are computed.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _accel

EPS = np.finfo(float).eps
MAX_QL_SWEEPS = 50


class NotSymmetricError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class DegenerateSpectrumError(ValueError):
    """The critical-radius inequality has no positive solution."""


# ---------------------------------------------------------------------------
# Householder tridiagonalization


def _tridiagonalize_loops(a):
    """Reduce symmetric ``a`` (overwritten) to tridiagonal ``(diag, offdiag)``."""
    n = a.shape[0]
    d = np.zeros(n)
    e = np.zeros(n)
    v = np.zeros(n)
    p = np.zeros(n)
    for k in range(n - 2):
        d[k] = a[k, k]
        norm2 = 0.0
        for i in range(k + 1, n):
            norm2 += a[i, k] * a[i, k]
        if norm2 == 0.0:
            e[k] = 0.0
            continue
        x0 = a[k + 1, k]
        alpha = -math.copysign(math.sqrt(norm2), x0)
        for i in range(k + 1, n):
            v[i] = a[i, k]
        v[k + 1] -= alpha
        inv = 1.0 / math.sqrt(norm2 - x0 * x0 + v[k + 1] * v[k + 1])
        for i in range(k + 1, n):
            v[i] *= inv
        e[k] = alpha
        beta = 0.0
        for i in range(k + 1, n):
            s = 0.0
            for j in range(k + 1, n):
                s += a[i, j] * v[j]
            p[i] = s
            beta += v[i] * s
        for i in range(k + 1, n):
            p[i] -= beta * v[i]
        for i in range(k + 1, n):
            vi2 = 2.0 * v[i]
            pi2 = 2.0 * p[i]
            for j in range(k + 1, n):
                a[i, j] -= vi2 * p[j] + pi2 * v[j]
    if n >= 2:
        d[n - 2] = a[n - 2, n - 2]
        e[n - 2] = a[n - 1, n - 2]
    d[n - 1] = a[n - 1, n - 1]
    return d, e


def _tridiagonalize_numpy(a):
    n = a.shape[0]
    d = np.zeros(n)
    e = np.zeros(n)
    for k in range(n - 2):
        d[k] = a[k, k]
        x = a[k + 1 :, k]
        norm = math.sqrt(float(x @ x))
        if norm == 0.0:
            continue
        alpha = -math.copysign(norm, x[0])
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        e[k] = alpha
        sub = a[k + 1 :, k + 1 :]
        p = sub @ v
        w = p - (v @ p) * v
        sub -= 2.0 * (np.outer(v, w) + np.outer(w, v))
    if n >= 2:
        d[n - 2] = a[n - 2, n - 2]
        e[n - 2] = a[n - 1, n - 2]
    d[n - 1] = a[n - 1, n - 1]
    return d, e


# ---------------------------------------------------------------------------
# implicit-shift QL on the tridiagonal


def _tql_implicit(d, e, max_sweeps):
    """Diagonalize in place; ``e[i]`` couples ``d[i]`` and ``d[i + 1]``.

    Returns 0 on success, otherwise ``l + 1`` for the first eigenvalue that
    failed to converge within ``max_sweeps`` sweeps.
    """
    n = len(d)
    eps = 2.220446049250313e-16
    # deflate against the running norm, as in EISPACK tql1; a purely local
    # test stalls on graded matrices whose tail sits at round-off level
    tst1 = 0.0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                if abs(e[m]) <= eps * max(tst1, abs(d[m]) + abs(d[m + 1])):
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                return l + 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0


_tridiagonalize_nb = _accel.njit(_tridiagonalize_loops)
_tql_nb = _accel.njit(_tql_implicit)


def symmetric_eigenvalues(a, max_sweeps=MAX_QL_SWEEPS, backend=None):
    """Unsorted eigenvalues of a symmetric matrix (input is not modified)."""
    a = np.array(a, dtype=np.float64, order="C", copy=True)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0)
    backend = backend or _accel.backend()
    if backend == "numba":
        d, e = _tridiagonalize_nb(a)
        status = _tql_nb(d, e, max_sweeps)
    else:
        d, e = _tridiagonalize_numpy(a)
        dl, el = d.tolist(), e.tolist()
        status = _tql_implicit(dl, el, max_sweeps)
        d = np.array(dl)
    if status:
        raise ConvergenceError(f"QL iteration did not converge for eigenvalue {status} within {max_sweeps} sweeps")
    return np.asarray(d)


# ---------------------------------------------------------------------------
# spectrum and derived quantities


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted descending, all nonnegative."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        mu = np.sort(np.array(self.eigenvalues, dtype=float).ravel())[::-1].copy()
        if mu.size == 0:
            raise ValueError("empty spectrum")
        if not np.all(np.isfinite(mu)):
            raise ValueError("spectrum contains non-finite values")
        if mu[-1] < 0:
            raise NotPSDError(f"negative eigenvalue {mu[-1]!r} in spectrum")
        if mu[0] > 1 + 1e-8:
            raise ValueError(f"largest eigenvalue {mu[0]!r} exceeds 1; the kernel is not normalized")
        mu.setflags(write=False)
        object.__setattr__(self, "eigenvalues", mu)

    @property
    def n(self):
        return self.eigenvalues.size


def eigenvalues(K, max_sweeps=MAX_QL_SWEEPS, backend=None):
    """Full spectrum of a normalized kernel matrix, descending and clipped at zero."""
    a = np.asarray(K, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale > 0 and float(np.max(np.abs(a - a.T))) > 1e-10 * scale:
        raise NotSymmetricError("kernel matrix is not symmetric")
    mu = symmetric_eigenvalues(a, max_sweeps=max_sweeps, backend=backend)
    trace = float(np.trace(a))
    lowest = float(mu.min())
    if lowest < -1e-8 * abs(trace):
        raise NotPSDError(f"eigenvalue {lowest!r} is below the round-off threshold; matrix is not PSD")
    return Spectrum(np.clip(mu, 0.0, None))


def complexity_R(s, delta):
    """``sqrt(sum_j min(delta**2, mu_j)) / sqrt(n)``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    mu = s.eigenvalues
    return math.sqrt(float(np.minimum(delta * delta, mu).sum()) / mu.size)


@dataclass(frozen=True)
class CriticalRadius:
    delta_n: float
    sigma: float
    bracket: tuple
    iterations: int


def _gap(s, delta, sigma):
    return complexity_R(s, delta) / delta - delta / sigma


def critical_radius(s, sigma, rtol=1e-10):
    """Smallest ``delta > 0`` with ``R(delta) / delta <= delta / sigma``, by bisection."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    mu1 = float(s.eigenvalues[0])
    if mu1 <= 0:
        raise DegenerateSpectrumError("all eigenvalues are zero; no positive critical radius exists")
    lo = 1e-12
    if _gap(s, lo, sigma) <= 0:
        raise DegenerateSpectrumError(f"critical radius is below {lo}; spectrum is numerically degenerate")
    hi = 2.0 * max(sigma, math.sqrt(mu1) * sigma, 1.0)
    doublings = 0
    while _gap(s, hi, sigma) >= 0:
        hi *= 2.0
        doublings += 1
        if doublings > 60:
            raise DegenerateSpectrumError("bracket expansion exceeded 60 doublings")
    iterations = 0
    while hi - lo > rtol * hi and iterations < 500:
        mid = 0.5 * (lo + hi)
        if _gap(s, mid, sigma) > 0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    return CriticalRadius(hi, sigma, (lo, hi), iterations)


def statistical_dimension(s, delta):
    """1-based index of the first eigenvalue ``<= delta**2``; ``n`` if none is."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    below = np.flatnonzero(s.eigenvalues <= delta * delta)
    return int(below[0]) + 1 if below.size else s.n


class Regularity(NamedTuple):
    is_regular: bool
    tail_sum: float
    d_n: int


def regularity_check(s, delta_n, c):
    """Check ``sum_{j > d_n} mu_j <= c * d_n * delta_n**2``."""
    if not (delta_n > 0 and c > 0):
        raise ValueError("delta_n and c must be positive")
    d_n = statistical_dimension(s, delta_n)
    tail = float(s.eigenvalues[d_n:].sum())
    return Regularity(bool(tail <= c * d_n * delta_n**2), tail, d_n)


def decay_slope(s, j_lo, j_hi):
    """Least-squares slope of ``log mu_j`` against ``log j`` for ``j_lo <= j <= j_hi``."""
    if not 1 <= j_lo < j_hi <= s.n:
        raise ValueError(f"need 1 <= j_lo < j_hi <= {s.n}, got ({j_lo}, {j_hi})")
    mu = s.eigenvalues[j_lo - 1 : j_hi]
    if np.any(mu <= 0):
        raise ValueError("decay slope needs strictly positive eigenvalues in range")
    j = np.arange(j_lo, j_hi + 1, dtype=float)
    slope, _ = np.polyfit(np.log(j), np.log(mu), 1)
    return float(slope)
