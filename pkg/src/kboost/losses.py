"""Scalar losses, their derivatives and the curvature/noise constants.

Classification losses accept fractional labels ``y`` in ``[-1, 1]``.  A
fractional label stands for a mixture of the two classes with weights
``(1 + y) / 2`` and ``(1 - y) / 2``, which is exactly the average of the
loss over replicated binary labels sharing one prediction.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

LOSS_KINDS = ("least_squares", "logistic", "exponential")
LOSS_CODES = {kind: code for code, kind in enumerate(LOSS_KINDS)}


class LabelError(ValueError):
    pass


class NoisePairingError(ValueError):
    pass


class Constants(NamedTuple):
    m: float
    M: float
    B: float


def mM_constants(kind, D=0.0):
    """Strong-convexity ``m``, smoothness ``M`` and gradient bound ``B`` over ``|theta| <= D``."""
    if kind == "least_squares":
        return Constants(1.0, 1.0, math.inf)
    if D < 0:
        raise ValueError(f"D must be nonnegative, got {D}")
    if kind == "logistic":
        return Constants(1.0 / (math.exp(-D) + math.exp(D) + 2.0), 0.25, 1.0)
    if kind == "exponential":
        return Constants(math.exp(-D), math.exp(D), math.exp(D))
    raise ValueError(f"unknown loss kind {kind!r}")


@dataclass(frozen=True)
class LossModel:
    """A loss together with its constants on the Hilbert ball of diameter ``D``.

    ``rescale`` divides the loss (and its gradient) by ``B``; it is only
    meaningful for the classification losses and is off by default.
    """

    kind: str
    D: float = 0.0
    rescale: bool = False

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        if self.rescale and self.kind == "least_squares":
            raise ValueError("least squares has no gradient bound to rescale by")

    @property
    def constants(self):
        return mM_constants(self.kind, self.D)

    @property
    def m(self):
        return self.constants.m

    @property
    def M(self):
        return self.constants.M

    @property
    def B(self):
        return self.constants.B

    @property
    def code(self):
        return LOSS_CODES[self.kind]

    @property
    def factor(self):
        """Multiplier applied to loss values and gradients."""
        return 1.0 / self.B if self.rescale else 1.0


def _labels(model, y):
    y = np.asarray(y, dtype=float)
    if model.kind != "least_squares" and np.any(np.abs(y) > 1):
        raise LabelError(f"{model.kind} loss needs labels in [-1, 1]")
    return y


def _expit(theta):
    return 0.5 * (1.0 + np.tanh(0.5 * theta))


def loss_value(model, y, theta):
    """``phi(y, theta)``; broadcasts over arrays."""
    y = _labels(model, y)
    theta = np.asarray(theta, dtype=float)
    if model.kind == "least_squares":
        out = 0.5 * (y - theta) ** 2
    else:
        w_pos, w_neg = 0.5 * (1.0 + y), 0.5 * (1.0 - y)
        if model.kind == "logistic":
            out = w_pos * np.logaddexp(0.0, -theta) + w_neg * np.logaddexp(0.0, theta)
        else:
            out = w_pos * np.exp(-theta) + w_neg * np.exp(theta)
    out = out * model.factor
    return float(out) if out.ndim == 0 else out


def loss_grad(model, y, theta):
    """Derivative of ``phi(y, theta)`` in ``theta``."""
    y = _labels(model, y)
    theta = np.asarray(theta, dtype=float)
    if model.kind == "least_squares":
        out = theta - y
    elif model.kind == "logistic":
        # equals -y / (1 + exp(y * theta)) for y = +-1
        out = _expit(theta) - 0.5 * (1.0 + y)
    else:
        out = 0.5 * (1.0 - y) * np.exp(theta) - 0.5 * (1.0 + y) * np.exp(-theta)
    out = out * model.factor
    return float(out) if out.ndim == 0 else out


def loss_curvature(model, y, theta):
    """Second derivative of ``phi(y, theta)`` in ``theta``."""
    y = _labels(model, y)
    theta = np.asarray(theta, dtype=float)
    if model.kind == "least_squares":
        out = np.ones(np.broadcast(y, theta).shape)
    elif model.kind == "logistic":
        s = _expit(theta)
        out = s * (1.0 - s) + 0.0 * y
    else:
        out = 0.5 * (1.0 - y) * np.exp(theta) + 0.5 * (1.0 + y) * np.exp(-theta)
    out = out * model.factor
    return float(out) if out.ndim == 0 else out


def reduce_labels(y):
    """Collapse an ``(n, reps)`` label matrix to per-point mean labels."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 2:
        return y.mean(axis=1)
    return y


def empirical_gradient(model, y, f):
    """Gradient of ``L_n(f) = mean_i phi(y_i, f_i)`` with respect to the vector ``f``.

    ``y`` may be an ``(n, reps)`` matrix of replicated labels, in which case
    the loss is averaged over replicates.
    """
    y = reduce_labels(y)
    f = np.asarray(f, dtype=float)
    if y.shape != f.shape:
        raise ValueError(f"label and function vectors differ in length: {y.shape} vs {f.shape}")
    return loss_grad(model, y, f) / f.size


def empirical_loss(model, y, f):
    y = reduce_labels(y)
    return float(np.mean(loss_value(model, y, np.asarray(f, dtype=float))))


def hilbert_radius(hilbert_norm_fstar, sigma):
    """``C_H = sqrt(2 * max(||f*||_H**2, 32, sigma**2))``."""
    if hilbert_norm_fstar < 0 or sigma < 0:
        raise ValueError("norm and sigma must be nonnegative")
    return math.sqrt(2.0 * max(hilbert_norm_fstar**2, 32.0, sigma**2))


@dataclass(frozen=True)
class NoiseSpec:
    """Response-noise description: Gaussian with ``sd`` or a bounded-gradient loss with ``C_H``."""

    kind: str
    sd: Optional[float] = None
    C_H: Optional[float] = None

    def __post_init__(self):
        if self.kind == "gaussian_sd":
            if self.sd is None or self.C_H is not None:
                raise ValueError("gaussian_sd noise takes sd only")
            if not self.sd > 0:
                raise ValueError(f"sd must be positive, got {self.sd}")
        elif self.kind == "bounded_loss":
            if self.C_H is None or self.sd is not None:
                raise ValueError("bounded_loss noise takes C_H only")
            if self.C_H < 0:
                raise ValueError(f"C_H must be nonnegative, got {self.C_H}")
        else:
            raise ValueError(f"unknown noise kind {self.kind!r}")


def gaussian_noise(sd):
    return NoiseSpec("gaussian_sd", sd=sd)


def bounded_noise(C_H):
    return NoiseSpec("bounded_loss", C_H=C_H)


def effective_noise_level(noise, model):
    """Noise scale entering the critical-radius inequality.

    Gaussian residuals get ``2 * sd``, which sits strictly inside the range
    where ``E exp(w**2 / t**2)`` is finite (``t**2 > 2 sd**2``).
    """
    if noise.kind == "gaussian_sd":
        if model.kind != "least_squares":
            raise NoisePairingError("gaussian_sd noise pairs with the least-squares loss")
        return 2.0 * noise.sd
    if model.kind == "least_squares":
        raise NoisePairingError("bounded_loss noise pairs with logistic or exponential loss")
    return 4.0 * (2.0 * model.M + 1.0) * (1.0 + 2.0 * noise.C_H)


@dataclass(frozen=True)
class ResolvedConstants:
    C_H0: float
    D: float
    sigma: float
    C_H: float
    model: LossModel


def resolve_constants(kind, fstar_norm, sd=None, rescale=False):
    """Break the ``C_H`` / ``sigma`` circularity with a two-pass rule.

    First ``C_H0 = sqrt(2 max(||f*||**2, 32))`` and ``D = C_H0 + ||f*||``
    fix the loss constants; ``sigma`` follows from those, and the final
    ``C_H`` from ``sigma``.  ``D`` stays at its first-pass value so the
    exponential-loss constants remain finite.
    """
    C_H0 = math.sqrt(2.0 * max(fstar_norm**2, 32.0))
    D = C_H0 + fstar_norm
    model = LossModel(kind, D=D if kind != "least_squares" else 0.0, rescale=rescale)
    if kind == "least_squares":
        if sd is None:
            raise ValueError("least squares needs the noise sd")
        sigma = effective_noise_level(gaussian_noise(sd), model)
    else:
        sigma = effective_noise_level(bounded_noise(C_H0), model)
    return ResolvedConstants(C_H0, D, sigma, hilbert_radius(fstar_norm, sigma), model)
