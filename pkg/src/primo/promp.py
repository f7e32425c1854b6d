"""Gaussian distributions over movement-primitive weights.

Estimation uses the 1/m (biased) covariance normalization deliberately; many
libraries default to 1/(m-1), so the moment estimators here are written out
instead of delegated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._linalg import sym
from .basis import BasisConfig, features_at
from .errors import ConditioningError, DimensionError, InsufficientDataError, ValidationError
from .mpcore import MpWeights, ObservationNoise


def _check_covariance(sigma: np.ndarray, name: str) -> None:
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {sigma.shape}")
    if not np.all(np.isfinite(sigma)):
        raise ValidationError(f"{name} has non-finite entries")
    if not np.allclose(sigma, sigma.T, atol=1e-10):
        raise ValidationError(f"{name} is not symmetric within 1e-10")
    evals = np.linalg.eigvalsh(sym(sigma))
    scale = max(1.0, float(np.abs(evals).max())) if evals.size else 1.0
    if evals.size and float(evals.min()) < -1e-10 * scale:
        raise ValidationError(f"{name} has eigenvalue {evals.min():.3e} below -1e-10 tolerance")


@dataclass(frozen=True)
class PrompDistribution:
    """Gaussian over stacked weight vectors, with its basis and noise model."""

    mu_w: np.ndarray
    sigma_w: np.ndarray
    cfg: BasisConfig
    dof: int
    noise: ObservationNoise

    def __post_init__(self):
        mu = np.asarray(self.mu_w, dtype=float)
        sigma = np.asarray(self.sigma_w, dtype=float)
        object.__setattr__(self, "mu_w", mu)
        object.__setattr__(self, "sigma_w", sigma)
        if mu.ndim != 1:
            raise ValidationError("weight mean must be 1-D")
        if mu.size != self.cfg.n * self.dof:
            raise DimensionError(
                f"weight mean length {mu.size} != n*dof = {self.cfg.n}*{self.dof}"
            )
        if sigma.shape != (mu.size, mu.size):
            raise DimensionError(f"weight covariance shape {sigma.shape} != ({mu.size}, {mu.size})")
        _check_covariance(sigma, "weight covariance")
        if self.noise.dof != self.dof:
            raise DimensionError(
                f"observation noise is {self.noise.dof}-dimensional for {self.dof} joints"
            )

    @property
    def dim(self) -> int:
        return self.mu_w.size

    def mean_weights(self) -> MpWeights:
        return MpWeights(self.mu_w, n=self.cfg.n, d=self.dof)


def estimate_distribution(
    weights: Sequence[MpWeights],
    cfg: BasisConfig,
    noise: ObservationNoise | None = None,
) -> PrompDistribution:
    """Moment-match a Gaussian to per-trajectory weights (1/m covariance)."""
    if len(weights) < 2:
        raise InsufficientDataError(
            f"need at least 2 weight vectors to estimate a distribution, got {len(weights)}"
        )
    first = weights[0]
    for i, w in enumerate(weights):
        if (w.n, w.d) != (first.n, first.d):
            raise DimensionError(
                f"weight vector {i} has (n={w.n}, d={w.d}), expected (n={first.n}, d={first.d})"
            )
    if first.n != cfg.n:
        raise DimensionError(f"weights built for n={first.n}, basis has n={cfg.n}")
    stacked = np.stack([w.w for w in weights])
    mu = stacked.mean(axis=0)
    centered = stacked - mu
    sigma = sym(centered.T @ centered / len(weights))
    if noise is None:
        noise = ObservationNoise.isotropic(first.d)
    return PrompDistribution(mu, sigma, cfg=cfg, dof=first.d, noise=noise)


def gaussian_samples(mean: np.ndarray, cov: np.ndarray, seed: int, count: int) -> np.ndarray:
    """Draw ``count`` rows from N(mean, cov), deterministic per seed.

    Uses an eigendecomposition square root with negative eigenvalues clipped
    at zero, so exactly degenerate covariances reproduce the mean exactly.
    """
    if count < 1:
        raise ValidationError("sample count must be positive")
    evals, evecs = np.linalg.eigh(sym(np.asarray(cov, dtype=float)))
    root = evecs * np.sqrt(np.clip(evals, 0.0, None))
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((count, mean.size))
    return np.asarray(mean) + eps @ root.T


def sample_weights(dist: PrompDistribution, seed: int, count: int) -> list[MpWeights]:
    """Sample weight vectors from the distribution."""
    draws = gaussian_samples(dist.mu_w, dist.sigma_w, seed, count)
    return [MpWeights(row, n=dist.cfg.n, d=dist.dof) for row in draws]


def _phase_feature_map(cfg: BasisConfig, dof: int, z: float) -> np.ndarray:
    """The d x (n*d) block-diagonal feature map at one phase."""
    return np.kron(np.eye(dof), features_at(z, cfg))


def marginal_at(dist: PrompDistribution, z: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form Gaussian over the joint positions at phase z.

    Returns ``(mean, cov)`` with mean of length d and cov of shape (d, d);
    the observation-noise covariance is included.
    """
    phi = features_at(z, dist.cfg)
    blocks = dist.sigma_w.reshape(dist.dof, dist.cfg.n, dist.dof, dist.cfg.n)
    mean = dist.mu_w.reshape(dist.dof, dist.cfg.n) @ phi
    cov = np.einsum("a,iajb,b->ij", phi, blocks, phi) + dist.noise.sigma
    return mean, sym(cov)


def condition_on_waypoint(
    dist: PrompDistribution,
    z_star: float,
    y_star: np.ndarray,
    sigma_y: np.ndarray,
) -> PrompDistribution:
    """Gaussian posterior over weights given the observation y* at phase z*.

    The observation model is y* ~ N(Psi_{z*} w, sigma_y); the posterior
    marginal mean at z* moves toward y*, and the marginal variance there
    never increases.
    """
    y_star = np.asarray(y_star, dtype=float).reshape(-1)
    sigma_y = np.asarray(sigma_y, dtype=float)
    if y_star.size != dist.dof:
        raise DimensionError(f"waypoint has {y_star.size} entries for {dist.dof} joints")
    if sigma_y.shape != (dist.dof, dist.dof):
        raise DimensionError(f"waypoint noise shape {sigma_y.shape} != ({dist.dof}, {dist.dof})")

    h = _phase_feature_map(dist.cfg, dist.dof, z_star)
    cross = dist.sigma_w @ h.T  # (nd, d)
    innovation = sym(h @ cross) + sigma_y
    cond = np.linalg.cond(innovation)
    if not np.isfinite(cond) or cond > 1e14:
        raise ConditioningError(
            f"innovation covariance at phase {z_star} is numerically singular (cond {cond:.3e})"
        )
    try:
        gain = np.linalg.solve(innovation, cross.T).T  # (nd, d)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"innovation covariance is singular: {exc}") from exc
    mu_post = dist.mu_w + gain @ (y_star - h @ dist.mu_w)
    sigma_post = sym(dist.sigma_w - gain @ cross.T)
    return PrompDistribution(mu_post, sigma_post, cfg=dist.cfg, dof=dist.dof, noise=dist.noise)
