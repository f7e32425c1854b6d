"""Per-trajectory movement-primitive weights: ridge fitting and reconstruction.

A movement with d joints sampled at T instants is encoded by a weight vector
of length n*d, one length-n block per joint. Because the multi-joint feature
matrix is block diagonal with identical blocks, fitting decomposes into d
independent n-dimensional ridge solves sharing one normal matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .basis import BasisConfig, PhaseVector, feature_matrix, phase_from_timestamps
from .errors import (
    DimensionError,
    IllConditionedError,
    InvalidTrajectoryError,
    ValidationError,
)

#: Relative penalization applied when no explicit lambda is given; it is
#: scaled by trace(Phi^T Phi)/n so the default behaves the same regardless
#: of how densely a movement was sampled.
DEFAULT_RIDGE_SCALE = 1e-6

#: Condition-number ceiling above which an unpenalized solve is refused.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class Trajectory:
    """Timestamped multi-joint position series."""

    times: np.ndarray
    positions: np.ndarray
    joint_names: tuple[str, ...] | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        positions = np.asarray(self.positions, dtype=float)
        if positions.ndim == 1:
            positions = positions[:, None]
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", positions)
        if times.ndim != 1 or times.size < 2:
            raise InvalidTrajectoryError("trajectory needs at least 2 samples")
        if positions.ndim != 2 or positions.shape[0] != times.size:
            raise InvalidTrajectoryError(
                f"positions shape {positions.shape} does not match {times.size} timestamps"
            )
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(positions))):
            raise InvalidTrajectoryError("trajectory contains non-finite entries")
        if np.any(np.diff(times) <= 0):
            raise InvalidTrajectoryError("timestamps must be strictly increasing")
        if self.joint_names is not None:
            names = tuple(self.joint_names)
            if len(names) != positions.shape[1]:
                raise InvalidTrajectoryError(
                    f"{len(names)} joint names for {positions.shape[1]} joints"
                )
            object.__setattr__(self, "joint_names", names)

    @property
    def num_samples(self) -> int:
        return self.times.size

    @property
    def dof(self) -> int:
        return self.positions.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def phase(self) -> PhaseVector:
        return phase_from_timestamps(self.times)


@dataclass(frozen=True)
class MpWeights:
    """Stacked weight vector of length n*d (joint-major blocks)."""

    w: np.ndarray
    n: int
    d: int

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "w", w)
        if w.ndim != 1 or w.size != self.n * self.d:
            raise DimensionError(
                f"weight vector has length {w.size}, expected n*d = {self.n}*{self.d}"
            )
        if not np.all(np.isfinite(w)):
            raise ValidationError("weights contain non-finite entries")

    def per_joint(self) -> np.ndarray:
        """Weights as a (d, n) array, row j holding joint j's block."""
        return self.w.reshape(self.d, self.n)


@dataclass(frozen=True)
class RidgeConfig:
    """Ridge penalization. ``lam=None`` selects the scaled default.

    An explicit ``lam`` enters the normal equations unchanged. When left as
    None, the effective penalization is DEFAULT_RIDGE_SCALE * trace(G)/n for
    the normal matrix G at hand.
    """

    lam: float | None = None

    def __post_init__(self):
        if self.lam is not None:
            lam = float(self.lam)
            if not np.isfinite(lam) or lam < 0:
                raise ValidationError(f"ridge penalization must be >= 0, got {self.lam!r}")
            object.__setattr__(self, "lam", lam)

    def effective(self, gram: np.ndarray) -> float:
        if self.lam is not None:
            return self.lam
        return DEFAULT_RIDGE_SCALE * float(np.trace(gram)) / gram.shape[0]


@dataclass(frozen=True)
class ObservationNoise:
    """Per-sample observation-noise covariance over the d joints."""

    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        object.__setattr__(self, "sigma", sigma)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise ValidationError("observation-noise covariance must be square")
        if not np.all(np.isfinite(sigma)):
            raise ValidationError("observation-noise covariance has non-finite entries")
        if not np.allclose(sigma, sigma.T, atol=1e-10):
            raise ValidationError("observation-noise covariance must be symmetric")
        evals = np.linalg.eigvalsh(0.5 * (sigma + sigma.T))
        if evals.size and evals.min() < -1e-10 * max(1.0, float(evals.max())):
            raise ValidationError("observation-noise covariance must be PSD")

    @classmethod
    def isotropic(cls, d: int, var: float = 1e-6) -> "ObservationNoise":
        return cls(var * np.eye(d))

    @property
    def dof(self) -> int:
        return self.sigma.shape[0]


def solve_penalized(gram: np.ndarray, rhs: np.ndarray, ridge: RidgeConfig) -> np.ndarray:
    """Solve (gram + lam*I) x = rhs through a symmetric PD factorization.

    An unpenalized solve is refused when the condition estimate of the
    normal matrix exceeds CONDITION_LIMIT.
    """
    lam = ridge.effective(gram)
    a = gram + lam * np.eye(gram.shape[0])
    if lam == 0.0:
        cond = np.linalg.cond(a)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise IllConditionedError(
                f"normal matrix condition estimate {cond:.3e} exceeds {CONDITION_LIMIT:.0e}; "
                "increase the ridge penalization"
            )
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - cho raises scipy's
        raise IllConditionedError(f"normal matrix is not positive definite: {exc}") from exc
    except scipy.linalg.LinAlgError as exc:
        raise IllConditionedError(f"normal matrix is not positive definite: {exc}") from exc
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


def fit_weights(traj: Trajectory, cfg: BasisConfig, ridge: RidgeConfig = RidgeConfig()) -> MpWeights:
    """Ridge-regress one weight block per joint against the trajectory.

    All joints share the same normal matrix Phi^T Phi + lam*I, so the
    multi-joint problem is d solves against one factorization.
    """
    phi = feature_matrix(traj.phase(), cfg, dof=traj.dof).phi
    gram = phi.T @ phi
    solution = solve_penalized(gram, phi.T @ traj.positions, ridge)  # (n, d)
    return MpWeights(solution.T.reshape(-1), n=cfg.n, d=traj.dof)


def reconstruct(w: MpWeights, z: PhaseVector | np.ndarray, cfg: BasisConfig) -> np.ndarray:
    """Noiseless mean reconstruction of the movement on a phase grid, (T, d)."""
    if w.n != cfg.n:
        raise DimensionError(f"weights built for n={w.n}, basis has n={cfg.n}")
    phi = feature_matrix(z, cfg, dof=w.d).phi
    return phi @ w.per_joint().T


_KIND_ALIASES = {"pro-primos": "pro_primos", "proprimos": "pro_primos"}


def parameter_count(
    kind: str,
    n: int | None = None,
    d: int | None = None,
    n_c: int | None = None,
    n_latent: int | None = None,
) -> tuple[int, int]:
    """(mean, covariance) parameter counts for a model kind.

    mp/promp need n*d mean values and the promp covariance is its square.
    The reduced representations need n_c mean values with an n_c x n_c
    covariance; the configuration-space baseline needs n_latent*n per
    movement and keeps no covariance.
    """
    kind = _KIND_ALIASES.get(kind, kind)

    def _need(value, name) -> int:
        if value is None or value < 1:
            raise ValidationError(f"parameter_count({kind!r}) needs positive {name}")
        return int(value)

    if kind == "mp":
        return _need(n, "n") * _need(d, "d"), 0
    if kind == "promp":
        mean = _need(n, "n") * _need(d, "d")
        return mean, mean * mean
    if kind in ("primos", "pro_primos"):
        k = _need(n_c, "n_c")
        return k, k * k
    if kind == "cpca":
        return _need(n_latent, "n_latent") * _need(n, "n"), 0
    raise ValidationError(f"unknown model kind {kind!r}")


def fit_dataset_weights(
    dataset: Sequence[Trajectory], cfg: BasisConfig, ridge: RidgeConfig = RidgeConfig()
) -> list[MpWeights]:
    """Fit every trajectory, reporting which one failed on error."""
    out = []
    for i, traj in enumerate(dataset):
        try:
            out.append(fit_weights(traj, cfg, ridge))
        except Exception as exc:
            raise type(exc)(f"trajectory {i}: {exc}") from exc
    return out
