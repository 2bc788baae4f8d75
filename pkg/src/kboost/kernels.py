"""Kernel families, design points and the normalized kernel matrix."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

FAMILIES = ("sobolev1", "gaussian", "tabulated")


class KernelDomainError(ValueError):
    """Kernel evaluated outside its domain, or an ill-formed kernel spec."""


@dataclass(frozen=True)
class KernelSpec:
    """A bounded PSD kernel on a one-dimensional covariate space.

    ``sobolev1`` is ``1 + min(x, x')`` on ``[0, 1]``; ``gaussian`` is
    ``exp(-(x - x')**2 / (2 * bandwidth**2))``; ``tabulated`` looks values up
    in a user matrix, with covariates acting as integer row/column indices.

    With ``rescale=True`` (the default) every value is divided by
    ``sup_x K(x, x)`` so the kernel satisfies ``K(x, x) <= 1``.  The factor
    is available as :attr:`diag_sup`.
    """

    family: str
    bandwidth: Optional[float] = None
    table: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    rescale: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelDomainError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "gaussian":
            if self.bandwidth is None:
                raise KernelDomainError("gaussian kernel needs a bandwidth")
            if not self.bandwidth > 0:
                raise KernelDomainError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.family == "tabulated":
            if self.table is None:
                raise KernelDomainError("tabulated kernel needs a table")
            table = np.array(self.table, dtype=float)
            if table.ndim != 2 or table.shape[0] != table.shape[1]:
                raise KernelDomainError(f"kernel table must be square, got shape {table.shape}")
            if not np.array_equal(table, table.T):
                raise KernelDomainError("kernel table must be symmetric")
            table.setflags(write=False)
            object.__setattr__(self, "table", table)

    @property
    def diag_sup(self):
        """``sup_x K(x, x)`` of the raw kernel."""
        if self.family == "sobolev1":
            return 2.0
        if self.family == "gaussian":
            return 1.0
        sup = float(np.max(np.diag(self.table)))
        if sup <= 0:
            raise KernelDomainError("kernel table has a nonpositive diagonal")
        return sup

    @property
    def scale(self):
        """Divisor applied to raw kernel values."""
        return self.diag_sup if self.rescale else 1.0


def sobolev1(rescale=True):
    return KernelSpec("sobolev1", rescale=rescale)


def gaussian(bandwidth, rescale=True):
    return KernelSpec("gaussian", bandwidth=bandwidth, rescale=rescale)


def tabulated(table, rescale=True):
    return KernelSpec("tabulated", table=np.asarray(table, dtype=float), rescale=rescale)


def load_table(path):
    """Read a dense kernel table: first line ``n``, then ``n`` rows of ``n`` numbers."""
    with open(path) as fh:
        lines = [ln for ln in (raw.strip() for raw in fh) if ln]
    if not lines:
        raise KernelDomainError(f"{path}: empty kernel table file")
    try:
        n = int(lines[0])
    except ValueError:
        raise KernelDomainError(f"{path}: first line must be the dimension, got {lines[0]!r}") from None
    rows = lines[1:]
    if len(rows) != n:
        raise KernelDomainError(f"{path}: expected {n} rows, found {len(rows)}")
    table = np.array([[float(v) for v in row.split()] for row in rows])
    if table.shape != (n, n):
        raise KernelDomainError(f"{path}: expected a {n}x{n} table, got shape {table.shape}")
    return table


def _check_domain(spec, x):
    if spec.family == "sobolev1":
        if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
            raise KernelDomainError("sobolev1 kernel is defined on [0, 1]")
    elif spec.family == "tabulated":
        n = spec.table.shape[0]
        if np.any(x != np.round(x)) or np.any((x < 0) | (x >= n)):
            raise KernelDomainError(f"tabulated kernel takes integer indices in [0, {n})")


def kernel_values(spec, x, xp):
    """Matrix ``K(x[i], xp[j]) / scale`` for two 1-d arrays of covariates."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    _check_domain(spec, x)
    _check_domain(spec, xp)
    if spec.family == "sobolev1":
        vals = 1.0 + np.minimum.outer(x, xp)
    elif spec.family == "gaussian":
        vals = np.exp(-np.subtract.outer(x, xp) ** 2 / (2.0 * spec.bandwidth**2))
    else:
        vals = spec.table[np.ix_(x.astype(np.intp), xp.astype(np.intp))]
    return vals / spec.scale


def eval_kernel(spec, x, xp):
    """Single kernel value ``K(x, x')``, rescaled according to ``spec``."""
    return float(kernel_values(spec, [x], [xp])[0, 0])


@dataclass(frozen=True)
class DesignPoints:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).ravel()
        if pts.size < 1:
            raise ValueError("a design needs at least one point")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return self.points.size


def equidistant_design(n):
    """Points ``i / n`` for ``i = 1..n``; the origin is excluded."""
    if n < 1:
        raise ValueError(f"design size must be positive, got {n}")
    return DesignPoints(np.arange(1, n + 1) / n)


def index_design(n):
    """Indices ``0..n-1``, the design used with tabulated kernels."""
    if n < 1:
        raise ValueError(f"design size must be positive, got {n}")
    return DesignPoints(np.arange(n, dtype=float))


@dataclass(frozen=True)
class KernelMatrix:
    """Normalized kernel matrix with entries ``K(x_i, x_j) / n``."""

    entries: np.ndarray
    spec: Optional[KernelSpec] = None
    design: Optional[DesignPoints] = None

    @property
    def n(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)


def build_kernel_matrix(spec, design):
    raw = kernel_values(spec, design.points, design.points)
    # mirror the upper triangle so symmetry holds bitwise
    upper = np.triu(raw)
    entries = (upper + np.triu(upper, 1).T) / design.n
    entries.setflags(write=False)
    return KernelMatrix(entries, spec, design)


@dataclass(frozen=True)
class KernelExpansion:
    """Function ``x -> sum_i omega_i K(x, x_i) / sqrt(n)`` over a design."""

    spec: KernelSpec
    design: DesignPoints
    omega: np.ndarray

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return kernel_values(self.spec, x, self.design.points) @ self.omega / np.sqrt(self.design.n)
