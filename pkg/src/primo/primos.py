"""Dimensionality reduction in weight space: principal movements.

A dataset of movements is summarized by a mean weight vector and a small set
of principal movements: eigenvectors of the weight covariance, scaled by the
square roots of their eigenvalues. Each movement is then a coefficient vector
over those columns, and a Gaussian over the coefficients gives the reduced
probabilistic model. Because the scaling absorbs the data's spread, the
fitted coefficients come out approximately standard normal.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._linalg import eigh_by_abs, sym
from .basis import BasisConfig, PhaseVector, feature_matrix, features_at
from .errors import DimensionError, InsufficientDataError, RankWarning, ValidationError
from .mpcore import (
    MpWeights,
    ObservationNoise,
    RidgeConfig,
    Trajectory,
    fit_dataset_weights,
    reconstruct,
    solve_penalized,
)
from .promp import PrompDistribution, _check_covariance, estimate_distribution, gaussian_samples

#: Eigenvalues whose magnitude falls below this fraction of the largest one
#: are treated as numerical noise: clamped to zero before square-rooting.
EIGVAL_CLIP = 1e-12


@dataclass(frozen=True)
class PrincipalMovements:
    """Mean movement plus principal-movement columns.

    Column i is an eigenvector of the weight covariance times sqrt(|lambda_i|),
    so the columns are mutually orthogonal with squared norms equal to the
    retained eigenvalue magnitudes, ordered descending.
    """

    w_bar: np.ndarray
    omega: np.ndarray
    eigvals: np.ndarray
    n_c: int

    def __post_init__(self):
        w_bar = np.asarray(self.w_bar, dtype=float)
        omega = np.asarray(self.omega, dtype=float)
        eigvals = np.asarray(self.eigvals, dtype=float)
        object.__setattr__(self, "w_bar", w_bar)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "eigvals", eigvals)
        if w_bar.ndim != 1:
            raise ValidationError("mean movement must be a 1-D vector")
        if omega.shape != (w_bar.size, self.n_c):
            raise DimensionError(
                f"principal-movement matrix shape {omega.shape} != ({w_bar.size}, {self.n_c})"
            )
        if eigvals.shape != (self.n_c,):
            raise DimensionError(f"{eigvals.size} eigenvalues for {self.n_c} components")
        mags = np.abs(eigvals)
        scale = max(1.0, float(mags.max())) if mags.size else 1.0
        if np.any(np.diff(mags) > 1e-8 * scale):
            raise ValidationError("eigenvalues must be ordered by decreasing magnitude")
        gram = omega.T @ omega
        if not np.allclose(gram, np.diag(mags), atol=1e-8 * scale):
            raise ValidationError(
                "principal-movement columns must be orthogonal with squared norms "
                "equal to the eigenvalue magnitudes"
            )

    @property
    def dim(self) -> int:
        return self.w_bar.size


@dataclass(frozen=True)
class AlphaCoeffs:
    """Reduced coefficient vector over the principal movements."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        object.__setattr__(self, "a", a)
        if a.ndim != 1:
            raise ValidationError("coefficient vector must be 1-D")
        if not np.all(np.isfinite(a)):
            raise ValidationError("coefficients contain non-finite entries")

    @property
    def n_c(self) -> int:
        return self.a.size


@dataclass(frozen=True)
class ProPrimoDistribution:
    """Gaussian over reduced coefficients, tied to its principal movements."""

    pm: PrincipalMovements
    mu_a: np.ndarray
    sigma_a: np.ndarray
    cfg: BasisConfig
    dof: int
    noise: ObservationNoise

    def __post_init__(self):
        mu = np.asarray(self.mu_a, dtype=float)
        sigma = np.asarray(self.sigma_a, dtype=float)
        object.__setattr__(self, "mu_a", mu)
        object.__setattr__(self, "sigma_a", sigma)
        if mu.shape != (self.pm.n_c,):
            raise DimensionError(f"coefficient mean length {mu.size} != n_c = {self.pm.n_c}")
        if sigma.shape != (self.pm.n_c, self.pm.n_c):
            raise DimensionError(
                f"coefficient covariance shape {sigma.shape} != ({self.pm.n_c}, {self.pm.n_c})"
            )
        _check_covariance(sigma, "coefficient covariance")
        if self.pm.dim != self.cfg.n * self.dof:
            raise DimensionError(
                f"principal movements live in dimension {self.pm.dim}, "
                f"basis/dof give {self.cfg.n}*{self.dof}"
            )
        if self.noise.dof != self.dof:
            raise DimensionError(
                f"observation noise is {self.noise.dof}-dimensional for {self.dof} joints"
            )


def numerical_rank(sigma_or_dist: PrompDistribution | np.ndarray) -> int:
    """Count eigenvalues above the clipping threshold used for column scaling."""
    sigma = (
        sigma_or_dist.sigma_w
        if isinstance(sigma_or_dist, PrompDistribution)
        else np.asarray(sigma_or_dist, dtype=float)
    )
    mags = np.abs(np.linalg.eigvalsh(sym(sigma)))
    top = mags.max() if mags.size else 0.0
    if top == 0.0:
        return 0
    return int(np.count_nonzero(mags > EIGVAL_CLIP * top))


def principal_movements(dist: PrompDistribution, n_c: int) -> PrincipalMovements:
    """Extract the n_c most informative movement directions from the weight covariance.

    Eigenvectors are sorted by absolute eigenvalue, sign-fixed so the first
    significant component is nonnegative, and scaled by sqrt(|lambda|).
    Requesting more components than the covariance numerically supports
    emits a ``RankWarning``; the surplus columns are (near) zero.
    """
    if not 1 <= n_c <= dist.dim:
        raise DimensionError(f"component count {n_c} outside [1, {dist.dim}]")
    evals, evecs = eigh_by_abs(dist.sigma_w)
    mags = np.abs(evals)
    top = mags.max() if mags.size else 0.0
    clipped = np.where(mags < EIGVAL_CLIP * top, 0.0, evals) if top > 0.0 else np.zeros_like(evals)
    rank = int(np.count_nonzero(clipped))
    if n_c > rank:
        warnings.warn(
            f"requested {n_c} components but the weight covariance has numerical rank {rank}",
            RankWarning,
            stacklevel=2,
        )
    kept = clipped[:n_c]
    omega = evecs[:, :n_c] * np.sqrt(np.abs(kept))
    return PrincipalMovements(w_bar=dist.mu_w.copy(), omega=omega, eigvals=kept, n_c=n_c)


def _reduced_normal_system(
    traj: Trajectory, pm: PrincipalMovements, cfg: BasisConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Normal matrix and right-hand side of the reduced ridge problem.

    Exploits the block-diagonal feature structure: with per-joint blocks
    B_j of the principal-movement matrix, the normal matrix is
    sum_j B_j^T (Phi^T Phi) B_j and the target is the residual against the
    mean movement, so the full stacked feature matrix never materializes.
    """
    d = traj.dof
    if pm.dim != cfg.n * d:
        raise DimensionError(
            f"principal movements live in dimension {pm.dim}, trajectory needs {cfg.n}*{d}"
        )
    phi = feature_matrix(traj.phase(), cfg, dof=d).phi
    blocks = pm.omega.reshape(d, cfg.n, pm.n_c)
    gram_phi = phi.T @ phi
    normal = np.einsum("jna,nm,jmb->ab", blocks, gram_phi, blocks)
    residual = traj.positions - phi @ pm.w_bar.reshape(d, cfg.n).T
    rhs = np.einsum("jna,nj->a", blocks, phi.T @ residual)
    return sym(normal), rhs


def fit_alpha(
    traj: Trajectory,
    pm: PrincipalMovements,
    cfg: BasisConfig,
    ridge: RidgeConfig = RidgeConfig(),
) -> AlphaCoeffs:
    """Ridge solution for the coefficients of one trajectory.

    The regression target is the trajectory's residual against the mean
    movement, evaluated on the trajectory's own phase grid, so demonstrations
    of any length or rate are handled without resampling.
    """
    normal, rhs = _reduced_normal_system(traj, pm, cfg)
    return AlphaCoeffs(solve_penalized(normal, rhs, ridge))


def reconstruct_primo(
    a: AlphaCoeffs,
    pm: PrincipalMovements,
    z: PhaseVector | np.ndarray,
    cfg: BasisConfig,
) -> np.ndarray:
    """Positions of the movement 'mean + principal movements times a' on a grid."""
    if a.n_c != pm.n_c:
        raise DimensionError(f"coefficient length {a.n_c} != component count {pm.n_c}")
    if pm.dim % cfg.n != 0:
        raise DimensionError(f"principal-movement dimension {pm.dim} not divisible by n={cfg.n}")
    w = MpWeights(pm.w_bar + pm.omega @ a.a, n=cfg.n, d=pm.dim // cfg.n)
    return reconstruct(w, z, cfg)


def estimate_alpha_distribution(alphas: Sequence[AlphaCoeffs]) -> tuple[np.ndarray, np.ndarray]:
    """1/m mean and 1/m covariance of coefficient vectors."""
    if len(alphas) < 2:
        raise InsufficientDataError(
            f"need at least 2 coefficient vectors, got {len(alphas)}"
        )
    n_c = alphas[0].n_c
    for i, a in enumerate(alphas):
        if a.n_c != n_c:
            raise DimensionError(f"coefficient vector {i} has length {a.n_c}, expected {n_c}")
    stacked = np.stack([a.a for a in alphas])
    mu = stacked.mean(axis=0)
    centered = stacked - mu
    return mu, sym(centered.T @ centered / len(alphas))


def to_promp(ppd: ProPrimoDistribution) -> PrompDistribution:
    """Map the reduced Gaussian back to a full weight-space Gaussian.

    The mapped covariance has rank at most n_c.
    """
    mu = ppd.pm.omega @ ppd.mu_a + ppd.pm.w_bar
    sigma = sym(ppd.pm.omega @ ppd.sigma_a @ ppd.pm.omega.T)
    return PrompDistribution(mu, sigma, cfg=ppd.cfg, dof=ppd.dof, noise=ppd.noise)


def marginal_primo(ppd: ProPrimoDistribution, z: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form Gaussian over joint positions at phase z.

    Algebraically identical to mapping to the full weight-space Gaussian and
    marginalizing there, but computed in the reduced space.
    """
    phi = features_at(z, ppd.cfg)
    blocks = ppd.pm.omega.reshape(ppd.dof, ppd.cfg.n, ppd.pm.n_c)
    mapped = np.einsum("a,jab->jb", phi, blocks)  # (d, n_c): Psi_z times Omega
    mean = (ppd.pm.omega @ ppd.mu_a + ppd.pm.w_bar).reshape(ppd.dof, ppd.cfg.n) @ phi
    cov = mapped @ ppd.sigma_a @ mapped.T + ppd.noise.sigma
    return mean, sym(cov)


def sample_alphas(ppd: ProPrimoDistribution, seed: int, count: int) -> list[AlphaCoeffs]:
    """Sample coefficient vectors, deterministic per seed."""
    draws = gaussian_samples(ppd.mu_a, ppd.sigma_a, seed, count)
    return [AlphaCoeffs(row) for row in draws]


def fit_pro_primos(
    dataset: Sequence[Trajectory],
    cfg: BasisConfig,
    ridge: RidgeConfig = RidgeConfig(),
    n_c: int = 2,
    noise: ObservationNoise | None = None,
) -> ProPrimoDistribution:
    """Full reduction pipeline over a dataset of trajectories.

    Fits each trajectory's weights, moment-matches the weight Gaussian,
    extracts the principal movements, refits every trajectory against them,
    and moment-matches the coefficient Gaussian.
    """
    if len(dataset) < 2:
        raise InsufficientDataError(f"need at least 2 trajectories, got {len(dataset)}")
    weights = fit_dataset_weights(dataset, cfg, ridge)
    dist = estimate_distribution(weights, cfg, noise)
    pm = principal_movements(dist, n_c)
    alphas = []
    for i, traj in enumerate(dataset):
        try:
            alphas.append(fit_alpha(traj, pm, cfg, ridge))
        except Exception as exc:
            raise type(exc)(f"trajectory {i}: {exc}") from exc
    mu_a, sigma_a = estimate_alpha_distribution(alphas)
    return ProPrimoDistribution(
        pm=pm, mu_a=mu_a, sigma_a=sigma_a, cfg=cfg, dof=dist.dof, noise=dist.noise
    )
