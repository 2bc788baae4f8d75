"""Synthetic data, the stopping-rule comparison harness and result tables."""

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import boosting, kernels, losses, spectrum


class MissingRepresentationError(TypeError):
    """A population error needs a function, not a vector of values at the design."""


RAW_HEADER = ["n", "trial", "rule", "kappa", "T", "mse_emp", "mse_pop", "excess_risk", "wall_ms", "failed"]
AGG_HEADER = ["n", "rule", "kappa", "mean_mse_emp", "se_mse_emp", "mean_T"]


def fstar_piecewise(x):
    """``|x - 1/2| - 1/4`` on ``[0, 1]``; its first-order Sobolev norm is 1."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
        raise ValueError("fstar_piecewise is defined on [0, 1]")
    out = np.abs(x - 0.5) - 0.25
    return float(out) if out.ndim == 0 else out


def _rng(seed):
    return np.random.default_rng(seed)


def gen_regression_data(design, sd, seed, fstar=fstar_piecewise):
    """``y_i = f*(x_i) + sd * z_i`` with standard normal ``z``."""
    if sd < 0:
        raise ValueError("sd must be nonnegative")
    z = _rng(seed).standard_normal(design.n)
    return fstar(design.points) + sd * z


def gen_logit_data(design, reps, seed, fstar=fstar_piecewise):
    """``(n, reps)`` matrix of labels in ``{-1, +1}``, ``P(+1) = 1 / (1 + exp(-f*(x_i)))``."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    p = 0.5 * (1.0 + np.tanh(0.5 * np.asarray(fstar(design.points), dtype=float)))
    u = _rng(seed).random((design.n, reps))
    return np.where(u < p[:, None], 1.0, -1.0)


def population_error_mc(f, fstar, n_mc, seed, dist="uniform01"):
    """Monte-Carlo ``E (f(X) - f*(X))**2`` over fresh covariates."""
    if not callable(f):
        raise MissingRepresentationError(
            "population error needs a function (e.g. a KernelExpansion), not values at the design"
        )
    if dist != "uniform01":
        raise ValueError(f"unsupported covariate distribution {dist!r}")
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    X = _rng(seed).random(n_mc)
    return float(np.mean((f(X) - fstar(X)) ** 2))


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Rule:
    kind: str
    kappa: Optional[float] = None
    c: float = 7.0

    def __post_init__(self):
        if self.kind not in ("gold", "theory", "power"):
            raise ValueError(f"unknown stopping rule {self.kind!r}")
        if self.kind == "power" and not (self.kappa and self.kappa > 0):
            raise ValueError("power rule needs a positive kappa")

    @classmethod
    def parse(cls, text):
        """``gold``, ``theory``, ``power:KAPPA`` or ``power:KAPPA:C``."""
        parts = text.strip().split(":")
        if parts[0] == "power":
            if len(parts) not in (2, 3):
                raise ValueError(f"bad power rule {text!r}; use power:KAPPA[:C]")
            return cls("power", float(parts[1]), float(parts[2]) if len(parts) == 3 else 7.0)
        if len(parts) != 1:
            raise ValueError(f"rule {parts[0]!r} takes no parameters")
        return cls(parts[0])


def parse_rules(text):
    return tuple(Rule.parse(part) for part in text.split(",") if part.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: kernels.KernelSpec = field(default_factory=kernels.sobolev1)
    loss: str = "least_squares"
    n_grid: tuple = (64, 128, 256, 512)
    trials: int = 40
    rules: tuple = (Rule("gold"), Rule("power", 0.33), Rule("power", 0.67), Rule("power", 1.0))
    alpha: float = 0.75
    sd: float = math.sqrt(0.5)
    reps: int = 5
    signal_scale: float = 1.0
    seed: int = 0
    max_iter_cap: Optional[int] = None
    n_mc_pop: int = 2000
    n_mc_risk: int = 200
    estimator: str = "averaged"
    sigma: Optional[float] = None
    loss_rescale: bool = False
    D: Optional[float] = None
    record_timing: bool = False

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if not grid:
            raise ValueError("n_grid must be nonempty")
        if any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
            raise ValueError("n_grid must be positive and strictly ascending")
        object.__setattr__(self, "n_grid", grid)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.rules:
            raise ValueError("at least one rule is required")
        if self.loss not in losses.LOSS_KINDS:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.estimator not in ("averaged", "last", "both"):
            raise ValueError(f"estimator must be averaged, last or both, got {self.estimator!r}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.kernel.family == "tabulated":
            raise ValueError("experiments need covariates in [0, 1]; tabulated kernels are not supported")

    def fstar(self, x):
        return self.signal_scale * fstar_piecewise(x)

    @property
    def fstar_norm(self):
        return abs(self.signal_scale)

    def constants(self):
        return losses.resolve_constants(self.loss, self.fstar_norm, sd=self.sd, rescale=self.loss_rescale)

    def loss_model(self):
        if self.D is not None:
            return losses.LossModel(self.loss, D=self.D, rescale=self.loss_rescale)
        return self.constants().model

    def noise(self):
        if self.loss == "least_squares":
            return losses.gaussian_noise(self.sd)
        return losses.bounded_noise(self.constants().C_H0)

    def effective_sigma(self):
        if self.sigma is not None:
            return self.sigma
        return losses.effective_noise_level(self.noise(), self.loss_model())


@dataclass(frozen=True)
class TrialRecord:
    n: int
    trial: int
    rule: str
    kappa: Optional[float]
    T: int
    mse_emp: float
    mse_pop: float
    excess_risk: float
    wall_ms: float
    failed: bool = False


# ---------------------------------------------------------------------------
# running


@dataclass(frozen=True)
class _Setting:
    """Everything shared by the trials at one sample size."""

    n: int
    design: kernels.DesignPoints
    K: np.ndarray
    fstar: np.ndarray
    rule_T: tuple
    T_run: int
    delta_n: Optional[float]


def _prepare(cfg, n):
    design = kernels.equidistant_design(n)
    K = kernels.build_kernel_matrix(cfg.kernel, design)
    model = cfg.loss_model()
    delta_n = None
    rule_T = []
    for rule in cfg.rules:
        if rule.kind == "power":
            rule_T.append(boosting.stopping_time_power(n, rule.kappa, rule.c))
        elif rule.kind == "theory":
            if delta_n is None:
                spec = spectrum.eigenvalues(K)
                delta_n = spectrum.critical_radius(spec, cfg.effective_sigma()).delta_n
            rule_T.append(boosting.stopping_time_theory(delta_n, model.m, model.M, "corollary"))
        else:
            rule_T.append(None)
    timed = [T for T in rule_T if T is not None]
    base = max(timed) if timed else boosting.stopping_time_power(n, 2.0 / 3.0)
    T_run = 4 * base
    if cfg.max_iter_cap is not None:
        T_run = min(T_run, cfg.max_iter_cap)
    rule_T = tuple(None if T is None else min(T, T_run) for T in rule_T)
    return _Setting(n, design, np.array(K.entries), cfg.fstar(design.points), rule_T, T_run, delta_n)


def trial_streams(seed, n, trial):
    """Independent seed sequences (data, population, risk) for one trial."""
    root = np.random.SeedSequence(int(seed), spawn_key=(int(n), int(trial)))
    return root.spawn(3)


def _trial_data(cfg, setting, data_seed):
    if cfg.loss == "least_squares":
        return gen_regression_data(setting.design, cfg.sd, data_seed, fstar=cfg.fstar)
    return gen_logit_data(setting.design, cfg.reps, data_seed, fstar=cfg.fstar)


def run_trial(cfg, setting, trial):
    start = time.perf_counter()
    data_seed, pop_seed, risk_seed = trial_streams(cfg.seed, setting.n, trial)
    model = cfg.loss_model()
    noise = cfg.noise()
    y = losses.reduce_labels(_trial_data(cfg, setting, data_seed))
    rec_t = np.array(sorted({T for T in setting.rule_T if T is not None}), dtype=np.int64)
    status, F, Fbar, W, Wbar, err_last, err_avg, best, best_t = boosting.boost_loop(
        setting.K, y, setting.fstar, cfg.alpha, model.code, model.factor, setting.T_run, rec_t, True
    )
    wall_ms = (time.perf_counter() - start) * 1e3 if cfg.record_timing else 0.0

    variants = []
    if cfg.estimator in ("averaged", "both"):
        variants.append(("", Fbar, Wbar, err_avg, best[2], best[3], int(best_t[1])))
    if cfg.estimator in ("last", "both"):
        variants.append(("_last", F, W, err_last, best[0], best[1], int(best_t[0])))

    records = []
    for suffix, vals, coefs, errs, gold_f, gold_w, gold_t in variants:
        for rule, T in zip(cfg.rules, setting.rule_T):
            name = rule.kind + suffix
            if status:
                records.append(
                    TrialRecord(setting.n, trial, name, rule.kappa, T or 1, math.nan, math.nan, math.nan, wall_ms, True)
                )
                continue
            if T is None:
                T, f, w = gold_t, gold_f, gold_w
            else:
                k = int(np.searchsorted(rec_t, T))
                f, w = vals[k], coefs[k]
            expansion = kernels.KernelExpansion(cfg.kernel, setting.design, np.array(w))
            records.append(
                TrialRecord(
                    n=setting.n,
                    trial=trial,
                    rule=name,
                    kappa=rule.kappa,
                    T=int(T),
                    mse_emp=float(errs[T]),
                    mse_pop=population_error_mc(expansion, cfg.fstar, cfg.n_mc_pop, pop_seed),
                    excess_risk=boosting.excess_risk_mc(model, f, setting.fstar, noise, cfg.n_mc_risk, risk_seed),
                    wall_ms=wall_ms,
                )
            )
    return records


def _run_task(args):
    cfg, setting, trial = args
    return run_trial(cfg, setting, trial)


def run_experiment(cfg, jobs=1):
    """All trial records for ``cfg``, ordered by ``(n, trial, rule)``.

    Each trial draws from a seed stream derived from ``(seed, n, trial)``, so
    the output does not depend on ``jobs`` or on execution order.
    """
    tasks = []
    for n in cfg.n_grid:
        setting = _prepare(cfg, n)
        tasks.extend((cfg, setting, trial) for trial in range(cfg.trials))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_task, tasks))
    else:
        chunks = [_run_task(task) for task in tasks]
    records = [rec for chunk in chunks for rec in chunk]
    order = {}
    for rec in records:
        order.setdefault(rec.rule, len(order))
    records.sort(key=lambda r: (r.n, r.trial, order[r.rule], -1.0 if r.kappa is None else r.kappa))
    return records


def aggregate(records):
    """Mean and standard error of ``mse_emp`` per ``(n, rule, kappa)``; failed trials skipped."""
    groups = {}
    for rec in records:
        if rec.failed:
            continue
        groups.setdefault((rec.n, rec.rule, rec.kappa), []).append(rec)
    rows = []
    for (n, rule, kappa), recs in groups.items():
        mse = np.array([r.mse_emp for r in recs])
        se = float(mse.std(ddof=1) / math.sqrt(mse.size)) if mse.size > 1 else math.nan
        rows.append(
            {
                "n": n,
                "rule": rule,
                "kappa": kappa,
                "mean_mse_emp": float(mse.mean()),
                "se_mse_emp": se,
                "mean_T": float(np.mean([r.T for r in recs])),
            }
        )
    return rows


def fmt(value):
    """Locale-free shortest round-trip text for CSV cells."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def records_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RAW_HEADER)
    for r in records:
        writer.writerow(
            [fmt(r.n), fmt(r.trial), r.rule, fmt(r.kappa), fmt(r.T), fmt(r.mse_emp), fmt(r.mse_pop),
             fmt(r.excess_risk), fmt(r.wall_ms), fmt(r.failed)]
        )
    return buf.getvalue()


def aggregate_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(AGG_HEADER)
    for row in rows:
        writer.writerow([fmt(row[key]) if key != "rule" else row[key] for key in AGG_HEADER])
    return buf.getvalue()


def read_records(text):
    """Parse a raw CSV back into :class:`TrialRecord` objects."""
    out = []
    for row in csv.DictReader(io.StringIO(text), strict=True):
        out.append(
            TrialRecord(
                n=int(row["n"]),
                trial=int(row["trial"]),
                rule=row["rule"],
                kappa=float(row["kappa"]) if row["kappa"] else None,
                T=int(row["T"]),
                mse_emp=float(row["mse_emp"]),
                mse_pop=float(row["mse_pop"]),
                excess_risk=float(row["excess_risk"]),
                wall_ms=float(row["wall_ms"]),
                failed=row["failed"] == "1",
            )
        )
    return out


def error_curve(cfg, n, trial=0, T=None):
    """Per-iterate and averaged empirical errors of one trial, ``t = 0..T``.

    ``T`` defaults to the trial's usual run length.  Returns
    ``(err_last, err_avg)``; ``err_avg[0]`` is NaN.
    """
    setting = _prepare(cfg, n)
    if T is not None:
        setting = replace(setting, T_run=int(T))
    data_seed, _, _ = trial_streams(cfg.seed, n, trial)
    model = cfg.loss_model()
    y = losses.reduce_labels(_trial_data(cfg, setting, data_seed))
    status, *_, err_last, err_avg, _, _ = boosting.boost_loop(
        setting.K, y, setting.fstar, cfg.alpha, model.code, model.factor, setting.T_run,
        np.zeros(0, dtype=np.int64), True,
    )
    if status:
        raise boosting.DivergenceError(status)
    return err_last, err_avg
