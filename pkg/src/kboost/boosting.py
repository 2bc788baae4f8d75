"""Kernel boosting iterations, averaged iterates and stopping rules.

The update works on function values at the design points::

    f[t+1] = f[t] - alpha * n * K @ grad L_n(f[t])

with ``f[0] = 0``.  Because ``grad L_n = phi'(y, f) / n`` this is
``f - alpha * K @ phi'(y, f)``.  The representer coefficients ``omega``
(``f = sqrt(n) K omega``) follow ``omega -= alpha * phi' / sqrt(n)``.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _accel
from .losses import empirical_gradient, loss_value, reduce_labels


class DivergenceError(ArithmeticError):
    def __init__(self, iteration):
        super().__init__(f"non-finite iterate at iteration {iteration}")
        self.iteration = iteration


class StepSizeWarning(UserWarning):
    pass


def _boost_loop(K, y, fstar, alpha, loss_code, factor, T, rec_t, track_err):
    """Run ``T`` updates; record snapshots at the sorted times ``rec_t``.

    Returns ``(status, F, Fbar, W, Wbar, err_last, err_avg, best, best_t)``
    where ``status`` is 0 or the first iteration producing a non-finite value,
    ``best`` stacks ``f``, ``omega`` at the per-iterate error minimum and
    ``fbar``, ``omegabar`` at the averaged error minimum (``t >= 1``), and
    ``best_t`` holds those two iteration indices.
    """
    n = y.shape[0]
    nrec = rec_t.shape[0]
    root_n = math.sqrt(n)
    f = np.zeros(n)
    w = np.zeros(n)
    fsum = np.zeros(n)
    wsum = np.zeros(n)
    F = np.zeros((nrec, n))
    Fbar = np.zeros((nrec, n))
    W = np.zeros((nrec, n))
    Wbar = np.zeros((nrec, n))
    err_last = np.full(T + 1, np.nan)
    err_avg = np.full(T + 1, np.nan)
    best = np.zeros((4, n))
    best_last = np.inf
    best_avg = np.inf
    best_t = np.zeros(2, dtype=np.int64)
    status = 0
    ri = 0
    for t in range(T + 1):
        if t > 0:
            if loss_code == 0:
                g = f - y
            elif loss_code == 1:
                g = 0.5 * (1.0 + np.tanh(0.5 * f)) - 0.5 * (1.0 + y)
            else:
                g = 0.5 * (1.0 - y) * np.exp(f) - 0.5 * (1.0 + y) * np.exp(-f)
            g = g * factor
            f = f - alpha * np.dot(K, g)
            w = w - (alpha / root_n) * g
            if not np.all(np.isfinite(f)):
                status = t
                break
            fsum += f
            wsum += w
        if track_err:
            err_last[t] = np.mean((f - fstar) ** 2)
            if t > 0:
                err_avg[t] = np.mean((fsum / t - fstar) ** 2)
                if err_last[t] < best_last:
                    best_last = err_last[t]
                    best_t[0] = t
                    best[0] = f
                    best[1] = w
                if err_avg[t] < best_avg:
                    best_avg = err_avg[t]
                    best_t[1] = t
                    best[2] = fsum / t
                    best[3] = wsum / t
        while ri < nrec and rec_t[ri] == t:
            F[ri] = f
            W[ri] = w
            if t > 0:
                Fbar[ri] = fsum / t
                Wbar[ri] = wsum / t
            ri += 1
    return status, F, Fbar, W, Wbar, err_last, err_avg, best, best_t


_boost_loop_nb = _accel.njit(_boost_loop)


def boost_loop(K, y, fstar, alpha, loss_code, factor, T, rec_t, track_err, backend=None):
    backend = backend or _accel.backend()
    fn = _boost_loop_nb if backend == "numba" else _boost_loop
    # overflow is reported through the status code
    with np.errstate(over="ignore", invalid="ignore"):
        return fn(
            np.ascontiguousarray(K, dtype=np.float64),
            np.ascontiguousarray(y, dtype=np.float64),
            np.ascontiguousarray(fstar, dtype=np.float64),
            float(alpha),
            int(loss_code),
            float(factor),
            int(T),
            np.ascontiguousarray(rec_t, dtype=np.int64),
            bool(track_err),
        )


def boost_step(K, y, f_t, model, alpha):
    """One boosting update from ``f_t``."""
    K = np.asarray(K, dtype=float)
    f_t = np.asarray(f_t, dtype=float)
    if K.shape != (f_t.size, f_t.size):
        raise ValueError(f"kernel matrix {K.shape} does not match vector length {f_t.size}")
    if not alpha > 0:
        raise ValueError("step size must be positive")
    return f_t - alpha * f_t.size * (K @ empirical_gradient(model, y, f_t))


@dataclass(frozen=True)
class BoostConfig:
    step_size: float
    max_iterations: int
    record_every: int = 1

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")

    def check_step(self, model):
        """Warn when the step exceeds ``min(1/M, M)``; returns that bound."""
        bound = min(1.0 / model.M, model.M)
        if self.step_size > bound:
            warnings.warn(
                f"step size {self.step_size} exceeds min(1/M, M) = {bound:g} for {model.kind} loss",
                StepSizeWarning,
                stacklevel=3,
            )
        return bound


@dataclass
class BoostTrace:
    """Recorded iterates of one boosting run.

    Row ``k`` of ``iterates``/``averages``/``coefficients`` belongs to
    iteration ``times[k]``.  ``per_iterate_error[t]`` and ``average_error[t]``
    are filled when a target function was supplied.
    """

    times: np.ndarray
    iterates: np.ndarray
    averages: np.ndarray
    coefficients: np.ndarray
    avg_coefficients: np.ndarray
    T_final: int
    per_iterate_error: Optional[np.ndarray] = None
    average_error: Optional[np.ndarray] = None

    def index(self, t):
        k = int(np.searchsorted(self.times, t))
        if k >= self.times.size or self.times[k] != t:
            raise KeyError(f"iteration {t} was not recorded")
        return k

    def iterate(self, t):
        return self.iterates[self.index(t)]


def _record_times(T, every, extra=()):
    times = set(range(0, T + 1, every))
    times.add(T)
    times.update(int(t) for t in extra if 0 <= t <= T)
    return np.array(sorted(times), dtype=np.int64)


def run_boosting(K, y, model, cfg, fstar=None, record_times=(), backend=None):
    """Iterate :func:`boost_step` from zero for ``cfg.max_iterations`` steps.

    Raises :class:`DivergenceError` if any iterate becomes non-finite.
    """
    K = np.asarray(K, dtype=float)
    y = reduce_labels(y)
    if K.shape != (y.size, y.size):
        raise ValueError(f"kernel matrix {K.shape} does not match label length {y.size}")
    if model.kind != "least_squares" and np.any(np.abs(y) > 1):
        raise ValueError(f"{model.kind} loss needs labels in [-1, 1]")
    cfg.check_step(model)
    track = fstar is not None
    target = np.zeros(y.size) if fstar is None else np.asarray(fstar, dtype=float)
    rec = _record_times(cfg.max_iterations, cfg.record_every, record_times)
    status, F, Fbar, W, Wbar, err_last, err_avg, _, _ = boost_loop(
        K, y, target, cfg.step_size, model.code, model.factor, cfg.max_iterations, rec, track, backend
    )
    if status:
        raise DivergenceError(status)
    return BoostTrace(
        times=rec,
        iterates=F,
        averages=Fbar,
        coefficients=W,
        avg_coefficients=Wbar,
        T_final=cfg.max_iterations,
        per_iterate_error=err_last if track else None,
        average_error=err_avg if track else None,
    )


def averaged_iterate(trace, T):
    """``(1/T) * sum_{t=1..T} f[t]``; ``f[0]`` is not part of the mean."""
    if not 1 <= T <= trace.T_final:
        raise ValueError(f"T must lie in [1, {trace.T_final}], got {T}")
    return trace.averages[trace.index(T)]


def closed_form_l2(K, y, alpha, t):
    """Least-squares iterate ``(I - (I - alpha K)**t) y`` via an eigendecomposition."""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    lam, V = np.linalg.eigh(K)
    if alpha * lam.max(initial=0.0) >= 2.0:
        raise ValueError(f"alpha * mu_1 = {alpha * lam.max():g} >= 2; the iteration is unstable")
    if t == 0:
        return np.zeros_like(y)
    shrink = 1.0 - (1.0 - alpha * lam) ** t
    return V @ (shrink * (V.T @ y))


def _floor(x):
    # absorbs round-off in values like 343 ** (1/3)
    return math.floor(x * (1.0 + 1e-12))


def stopping_time_theory(delta_n, m, M, rule="corollary"):
    """Stopping time from the critical radius, never below 1.

    ``corollary``: ``floor(1 / (delta_n**2 * max(8, M)))``;
    ``theorem_cap``: ``floor(m / (8 M delta_n**2))``.
    """
    if not delta_n > 0 or not 0 < m <= M:
        raise ValueError("need delta_n > 0 and 0 < m <= M")
    if rule == "corollary":
        T = _floor(1.0 / (delta_n**2 * max(8.0, M)))
    elif rule == "theorem_cap":
        T = _floor(m / (8.0 * M * delta_n**2))
    else:
        raise ValueError(f"unknown rule {rule!r}")
    return max(T, 1)


def stopping_time_power(n, kappa, c=7.0):
    """``floor((c n)**kappa)``, never below 1."""
    if n < 1 or not c > 0 or not kappa > 0:
        raise ValueError("need n >= 1, c > 0 and kappa > 0")
    return max(_floor((c * n) ** kappa), 1)


def empirical_error(f, fstar):
    """``(1/n) * sum_i (f_i - fstar_i)**2``."""
    f = np.asarray(f, dtype=float)
    fstar = np.asarray(fstar, dtype=float)
    if f.shape != fstar.shape:
        raise ValueError(f"length mismatch: {f.shape} vs {fstar.shape}")
    return float(np.mean((f - fstar) ** 2))


def gold_standard(per_iterate_error):
    """``(t*, error)`` minimizing the error over ``t >= 1``; list index 0 is ``t = 1``."""
    errs = np.asarray(per_iterate_error, dtype=float)
    if errs.size == 0:
        raise ValueError("empty error sequence")
    k = int(np.nanargmin(errs))
    return k + 1, float(errs[k])


def _draw_responses(noise, fstar, n_mc, rng):
    if noise.kind == "gaussian_sd":
        return fstar + noise.sd * rng.standard_normal((n_mc, fstar.size))
    p = 0.5 * (1.0 + np.tanh(0.5 * fstar))
    return np.where(rng.random((n_mc, fstar.size)) < p, 1.0, -1.0)


def excess_risk_mc(model, f, fstar, noise, n_mc, seed=None, return_stderr=False, chunk=4096):
    """Monte-Carlo ``L(f) - L(f*)`` with paired response draws.

    Gaussian noise draws ``Y = f* + sd * z``; bounded-loss noise draws
    ``Y = +-1`` with ``P(Y = 1) = 1 / (1 + exp(-f*))``.
    """
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    if (noise.kind == "gaussian_sd") != (model.kind == "least_squares"):
        raise ValueError(f"{noise.kind} noise is not supported with {model.kind} loss")
    f = np.asarray(f, dtype=float)
    fstar = np.asarray(fstar, dtype=float)
    rng = np.random.default_rng(seed)
    deltas = np.empty(n_mc)
    for start in range(0, n_mc, chunk):
        stop = min(start + chunk, n_mc)
        Y = _draw_responses(noise, fstar, stop - start, rng)
        deltas[start:stop] = np.mean(loss_value(model, Y, f) - loss_value(model, Y, fstar), axis=1)
    est = float(deltas.mean())
    if not return_stderr:
        return est
    se = float(deltas.std(ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else math.inf
    return est, se

