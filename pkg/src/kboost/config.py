"""``key = value`` configuration files and inline overrides."""

import math
from dataclasses import dataclass

from . import kernels
from .experiments import ExperimentConfig, parse_rules


class ConfigError(ValueError):
    pass


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int_list(text):
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)


def _optional(parse):
    def inner(text):
        return None if text.strip().lower() in ("", "none") else parse(text)

    return inner


def _real(text):
    # accepts sqrt(x) so presets can state sd = sqrt(0.5) exactly
    text = text.strip()
    if text.startswith("sqrt(") and text.endswith(")"):
        return math.sqrt(float(text[5:-1]))
    return float(text)


KEYS = {
    "command": str,
    "kernel": str,
    "bandwidth": _optional(_real),
    "table": _optional(str),
    "kernel_rescale": _bool,
    "loss": str,
    "n": int,
    "n_grid": _int_list,
    "trials": int,
    "trial": int,
    "rules": str,
    "alpha": _real,
    "sd": _real,
    "reps": int,
    "signal_scale": _real,
    "seed": int,
    "iterations": _optional(int),
    "max_iter_cap": _optional(int),
    "n_mc_pop": int,
    "n_mc_risk": int,
    "estimator": str,
    "sigma": _optional(_real),
    "loss_rescale": _bool,
    "D": _optional(_real),
    "c_regular": _real,
    "record_timing": _bool,
}


@dataclass(frozen=True)
class Entry:
    value: str
    origin: str


def _check_key(key, origin):
    if key not in KEYS:
        raise ConfigError(f"{origin}: unknown key {key!r}")


def parse_lines(lines, source="<config>"):
    """Raw ``{key: Entry}`` from ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        origin = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{origin}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        _check_key(key, origin)
        out[key] = Entry(value, origin)
    return out


def load_file(path):
    with open(path) as fh:
        return parse_lines(fh.read().splitlines(), str(path))


def parse_overrides(items):
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = (part.strip() for part in item.split("=", 1))
        _check_key(key, "override")
        out[key] = Entry(value, "override")
    return out


def typed(entries):
    """Convert raw entries to typed values, naming the offending key on failure."""
    values = {}
    for key, entry in entries.items():
        try:
            values[key] = KEYS[key](entry.value)
        except ValueError as exc:
            raise ConfigError(f"{entry.origin}: bad value for {key!r}: {exc}") from None
    return values


def kernel_spec(values):
    family = values.get("kernel", "sobolev1")
    rescale = values.get("kernel_rescale", True)
    try:
        if family == "sobolev1":
            return kernels.sobolev1(rescale)
        if family == "gaussian":
            return kernels.gaussian(values.get("bandwidth"), rescale)
        if family == "tabulated":
            path = values.get("table")
            if path is None:
                raise ConfigError("tabulated kernel needs 'table' (a matrix file)")
            return kernels.tabulated(kernels.load_table(path), rescale)
    except kernels.KernelDomainError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown kernel {family!r}; expected one of {kernels.FAMILIES}")


_EXPERIMENT_FIELDS = (
    "loss", "trials", "alpha", "sd", "reps", "signal_scale", "seed", "max_iter_cap", "n_mc_pop",
    "n_mc_risk", "estimator", "sigma", "loss_rescale", "D", "record_timing",
)


def experiment_config(values):
    kwargs = {key: values[key] for key in _EXPERIMENT_FIELDS if key in values}
    kwargs["kernel"] = kernel_spec(values)
    if "n_grid" in values:
        kwargs["n_grid"] = values["n_grid"]
    elif "n" in values:
        kwargs["n_grid"] = (values["n"],)
    try:
        if "rules" in values:
            kwargs["rules"] = parse_rules(values["rules"])
        return ExperimentConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
