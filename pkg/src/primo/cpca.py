"""Configuration-space PCA baseline.

PCA runs over joint configurations pooled across every trajectory and
timestep; movement primitives are then fit per latent dimension. Latent
directions stay orthonormal and unscaled, since the latent weights absorb
any scale.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._linalg import fix_eigvec_signs, sym
from .basis import BasisConfig, PhaseVector
from .errors import DimensionError, InsufficientDataError, ValidationError
from .mpcore import MpWeights, RidgeConfig, Trajectory, fit_weights, reconstruct


@dataclass(frozen=True)
class ConfigProjection:
    """Mean configuration and orthonormal principal configuration directions."""

    mean_config: np.ndarray
    proj: np.ndarray
    n_latent: int

    def __post_init__(self):
        mean = np.asarray(self.mean_config, dtype=float)
        proj = np.asarray(self.proj, dtype=float)
        object.__setattr__(self, "mean_config", mean)
        object.__setattr__(self, "proj", proj)
        if mean.ndim != 1:
            raise ValidationError("mean configuration must be 1-D")
        if proj.shape != (mean.size, self.n_latent):
            raise DimensionError(
                f"projection shape {proj.shape} != ({mean.size}, {self.n_latent})"
            )
        if not np.allclose(proj.T @ proj, np.eye(self.n_latent), atol=1e-8):
            raise ValidationError("projection columns must be orthonormal within 1e-8")

    @property
    def dof(self) -> int:
        return self.mean_config.size


def fit_configuration_pca(dataset: Sequence[Trajectory], n_latent: int) -> ConfigProjection:
    """PCA over all configuration samples pooled across the dataset."""
    if not dataset:
        raise InsufficientDataError("dataset is empty")
    d = dataset[0].dof
    for i, traj in enumerate(dataset):
        if traj.dof != d:
            raise DimensionError(f"trajectory {i} has {traj.dof} joints, expected {d}")
    if not 1 <= n_latent <= d:
        raise DimensionError(f"latent dimension {n_latent} outside [1, {d}]")
    samples = np.vstack([traj.positions for traj in dataset])
    if samples.shape[0] < 2:
        raise InsufficientDataError("need at least 2 pooled configuration samples")
    mean = samples.mean(axis=0)
    centered = samples - mean
    cov = sym(centered.T @ centered / samples.shape[0])
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")
    evecs = fix_eigvec_signs(evecs[:, order])
    return ConfigProjection(mean_config=mean, proj=evecs[:, :n_latent], n_latent=n_latent)


def encode_config(p: ConfigProjection, positions: np.ndarray) -> np.ndarray:
    """Project configurations onto the latent directions, (T, n_latent)."""
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 2 or positions.shape[1] != p.dof:
        raise DimensionError(f"positions shape {positions.shape} incompatible with dof {p.dof}")
    return (positions - p.mean_config) @ p.proj


def decode_config(p: ConfigProjection, latent: np.ndarray) -> np.ndarray:
    """Map latent series back to configuration space, (T, d)."""
    latent = np.asarray(latent, dtype=float)
    if latent.ndim != 2 or latent.shape[1] != p.n_latent:
        raise DimensionError(
            f"latent shape {latent.shape} incompatible with n_latent {p.n_latent}"
        )
    return p.mean_config + latent @ p.proj.T


def fit_cpca_mp(
    dataset: Sequence[Trajectory],
    p: ConfigProjection,
    cfg: BasisConfig,
    ridge: RidgeConfig = RidgeConfig(),
) -> list[MpWeights]:
    """Fit one latent movement primitive per trajectory (n_latent*n weights each)."""
    out = []
    for i, traj in enumerate(dataset):
        try:
            latent = Trajectory(traj.times, encode_config(p, traj.positions))
            out.append(fit_weights(latent, cfg, ridge))
        except Exception as exc:
            raise type(exc)(f"trajectory {i}: {exc}") from exc
    return out


def reconstruct_cpca(
    latent_w: MpWeights,
    p: ConfigProjection,
    z: PhaseVector | np.ndarray,
    cfg: BasisConfig,
) -> np.ndarray:
    """Decode the latent reconstruction back to joint positions, (T, d)."""
    if latent_w.d != p.n_latent:
        raise DimensionError(
            f"latent weights cover {latent_w.d} dimensions, projection keeps {p.n_latent}"
        )
    return decode_config(p, reconstruct(latent_w, z, cfg))
