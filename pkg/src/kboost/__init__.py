"""Kernel boosting with early stopping rules derived from the kernel eigenspectrum."""

from ._accel import backend, set_backend
from .boosting import (
    BoostConfig,
    BoostTrace,
    DivergenceError,
    averaged_iterate,
    boost_step,
    closed_form_l2,
    empirical_error,
    excess_risk_mc,
    gold_standard,
    run_boosting,
    stopping_time_power,
    stopping_time_theory,
)
from .kernels import (
    DesignPoints,
    KernelExpansion,
    KernelMatrix,
    KernelSpec,
    build_kernel_matrix,
    equidistant_design,
    eval_kernel,
)
from .losses import (
    LossModel,
    NoiseSpec,
    effective_noise_level,
    empirical_gradient,
    hilbert_radius,
    loss_grad,
    loss_value,
    mM_constants,
)
from .spectrum import (
    CriticalRadius,
    Spectrum,
    complexity_R,
    critical_radius,
    decay_slope,
    eigenvalues,
    regularity_check,
    statistical_dimension,
)

__version__ = "0.1.0"
