"""Phase normalization and normalized Gaussian radial-basis features.

A movement is indexed by a phase z in [0, 1] instead of wall-clock time, which
decouples its shape from duration and sampling rate. Features are Gaussian
bumps on the phase axis, normalized so every feature row sums to one. The
multi-joint feature matrix is block diagonal (one identical block per joint),
so it is never materialized: :func:`block_apply` applies it joint by joint.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateBasisError,
    DimensionError,
    InvalidTrajectoryError,
    ValidationError,
)


@dataclass(frozen=True)
class PhaseVector:
    """Normalized time axis: nondecreasing values in [0, 1], endpoints pinned."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size < 1:
            raise ValidationError("phase vector must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(values)):
            raise ValidationError("phase vector contains non-finite values")
        if np.any(np.diff(values) < 0):
            raise ValidationError("phase vector must be nondecreasing")
        if values.size >= 2 and (values[0] != 0.0 or values[-1] != 1.0):
            raise ValidationError(
                f"phase vector endpoints must be 0 and 1, got {values[0]} and {values[-1]}"
            )
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise ValidationError("phase values must lie in [0, 1]")

    def __len__(self) -> int:
        return self.values.size


def phase_from_timestamps(times: Sequence[float] | np.ndarray) -> PhaseVector:
    """Map timestamps to phases: z_i = (t_i - t_1) / (t_T - t_1).

    The result is invariant under affine reparameterizations a*t + b, a > 0.

    Raises
    ------
    InvalidTrajectoryError
        If fewer than 2 samples are given or the times are not strictly
        increasing.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise InvalidTrajectoryError("need at least 2 timestamps to define a phase")
    if not np.all(np.isfinite(t)):
        raise InvalidTrajectoryError("timestamps contain non-finite values")
    if np.any(np.diff(t) <= 0):
        raise InvalidTrajectoryError("timestamps must be strictly increasing")
    z = (t - t[0]) / (t[-1] - t[0])
    z[0], z[-1] = 0.0, 1.0
    return PhaseVector(z)


def default_bandwidth(n: int) -> float:
    """Bandwidth matched to the neighbor-center spacing on [0, 1]; 0.5 for n = 1."""
    if n <= 1:
        return 0.5
    return 1.0 / (n - 1)


@dataclass(frozen=True)
class BasisConfig:
    """n Gaussian radial basis functions with bandwidth h.

    Centers are evenly spaced over [-2h, 1+2h] so the bumps pad the phase
    interval on both sides. A single basis function sits at the midpoint 0.5.
    When h is omitted it defaults to :func:`default_bandwidth`.
    """

    n: int
    h: float | None = None
    centers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValidationError(f"basis count must be a positive integer, got {self.n!r}")
        h = default_bandwidth(self.n) if self.h is None else float(self.h)
        if not np.isfinite(h) or h <= 0:
            raise ValidationError(f"bandwidth must be a positive real, got {self.h!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "h", h)
        if self.n == 1:
            centers = np.array([0.5])
        else:
            centers = np.linspace(-2.0 * h, 1.0 + 2.0 * h, self.n)
        object.__setattr__(self, "centers", centers)


@dataclass(frozen=True)
class FeatureMatrix:
    """Stacked feature rows (T x n), plus the joint count for block expansion."""

    phi: np.ndarray
    dof: int

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        object.__setattr__(self, "phi", phi)
        if phi.ndim != 2:
            raise ValidationError("feature matrix must be 2-D")
        if self.dof < 1:
            raise ValidationError("dof must be >= 1")

    @property
    def num_samples(self) -> int:
        return self.phi.shape[0]

    @property
    def n(self) -> int:
        return self.phi.shape[1]


def _raw_activations(z: np.ndarray, cfg: BasisConfig) -> np.ndarray:
    diff = z[..., None] - cfg.centers
    return np.exp(-(diff * diff) / (2.0 * cfg.h * cfg.h))


def features_at(z: float, cfg: BasisConfig) -> np.ndarray:
    """Normalized feature row at a single phase value.

    Evaluation outside [0, 1] is allowed; the centers already pad the
    interval. Raises ``DegenerateBasisError`` if every activation underflows
    to zero, since the row can then not be normalized.
    """
    z = float(z)
    if not np.isfinite(z):
        raise ValidationError("phase must be finite")
    row = _raw_activations(np.asarray(z), cfg)
    total = row.sum()
    if total == 0.0:
        raise DegenerateBasisError(f"all basis activations underflowed at phase {z}")
    return row / total


def feature_matrix(z: PhaseVector | np.ndarray, cfg: BasisConfig, dof: int = 1) -> FeatureMatrix:
    """Evaluate the normalized feature row at every phase sample.

    Accepts a ``PhaseVector`` or any 1-D array of finite phases (e.g. a dense
    grid for resampling a movement at a new rate).
    """
    values = z.values if isinstance(z, PhaseVector) else np.asarray(z, dtype=float)
    if values.ndim != 1:
        raise ValidationError("phase grid must be 1-D")
    if not np.all(np.isfinite(values)):
        raise ValidationError("phase grid contains non-finite values")
    phi = _raw_activations(values, cfg)
    totals = phi.sum(axis=1)
    dead = np.flatnonzero(totals == 0.0)
    if dead.size:
        raise DegenerateBasisError(
            f"all basis activations underflowed at phase {values[dead[0]]} (row {dead[0]})"
        )
    return FeatureMatrix(phi / totals[:, None], dof=dof)


def block_apply(phi_row: np.ndarray, w: np.ndarray, dof: int) -> np.ndarray:
    """Apply one block-diagonal feature row to a stacked weight vector.

    Weight layout is joint-major: w = [w_1, ..., w_dof] with one length-n
    block per joint. Joint j gets dot(phi_row, w_j), which equals the full
    block-matrix product without ever materializing it.
    """
    phi_row = np.asarray(phi_row, dtype=float)
    w = np.asarray(w, dtype=float)
    if phi_row.ndim != 1 or w.ndim != 1:
        raise DimensionError("block_apply expects 1-D feature row and weight vector")
    n = phi_row.size
    if w.size != n * dof:
        raise DimensionError(
            f"weight vector has length {w.size}, expected n*dof = {n}*{dof} = {n * dof}"
        )
    return w.reshape(dof, n) @ phi_row
