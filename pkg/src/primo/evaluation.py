"""Reconstruction accuracy: NRMSE, parameter-vs-error grids, leave-one-out.

All errors are normalized by the pooled standard deviation of the full
dataset (every joint and timestep together), so curves from datasets of
different scales remain comparable and folds of a leave-one-out run share
one scale.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import BasisConfig
from .cpca import fit_configuration_pca, fit_cpca_mp, reconstruct_cpca
from .errors import (
    DegenerateDatasetError,
    DimensionError,
    InsufficientDataError,
    PrimoError,
    RankWarning,
    ValidationError,
)
from .mpcore import RidgeConfig, Trajectory, fit_weights, parameter_count, reconstruct
from .primos import fit_alpha, principal_movements, reconstruct_primo
from .promp import estimate_distribution

METHODS = ("mp", "primos", "cpca")


@dataclass(frozen=True)
class DatasetStats:
    """Pooled spread of every position value in a dataset."""

    std: float
    count: int

    def __post_init__(self):
        if not np.isfinite(self.std) or self.std < 0:
            raise ValidationError(f"dataset std must be >= 0, got {self.std!r}")


def dataset_stats(dataset: Sequence[Trajectory]) -> DatasetStats:
    """Population standard deviation over all joints and timesteps."""
    if not dataset:
        raise InsufficientDataError("dataset is empty")
    values = np.concatenate([traj.positions.ravel() for traj in dataset])
    return DatasetStats(std=float(values.std()), count=values.size)


def nrmse(pred: np.ndarray, ref: np.ndarray, stats: DatasetStats) -> float:
    """Root-mean-square error over all entries, divided by the dataset spread."""
    pred = np.asarray(pred, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if pred.shape != ref.shape:
        raise DimensionError(f"prediction shape {pred.shape} != reference shape {ref.shape}")
    if stats.std <= 0:
        raise DegenerateDatasetError("dataset standard deviation is zero; NRMSE undefined")
    return float(np.sqrt(np.mean((pred - ref) ** 2)) / stats.std)


def _pooled_nrmse(sq_sum: float, count: int, stats: DatasetStats) -> float:
    if stats.std <= 0:
        raise DegenerateDatasetError("dataset standard deviation is zero; NRMSE undefined")
    return float(np.sqrt(sq_sum / count) / stats.std)


@dataclass(frozen=True)
class ErrorCurvePoint:
    """One evaluated configuration: how many parameters bought how much accuracy."""

    method: str
    param_count: int
    nrmse: float
    config: dict

    def __post_init__(self):
        if self.param_count < 1:
            raise ValidationError("param_count must be >= 1")
        if self.nrmse < 0:
            raise ValidationError("nrmse must be >= 0")


@dataclass
class GridResult:
    """All evaluated grid points plus per-point failures."""

    evaluated: list[ErrorCurvePoint]
    failures: list[tuple[dict, str]] = field(default_factory=list)

    def frontier(self) -> list[ErrorCurvePoint]:
        return pareto_frontier(self.evaluated)

    def min_params_at(self, level: float) -> int | None:
        """Smallest parameter count reaching NRMSE <= level, if any point does."""
        counts = [p.param_count for p in self.evaluated if p.nrmse <= level]
        return min(counts) if counts else None


def pareto_frontier(points: Sequence[ErrorCurvePoint]) -> list[ErrorCurvePoint]:
    """Minimal parameter counts for strictly improving accuracy.

    Sorted by parameter count; a point survives only if its error strictly
    beats everything cheaper.
    """
    best = np.inf
    frontier = []
    for point in sorted(points, key=lambda p: (p.param_count, p.nrmse)):
        if point.nrmse < best:
            frontier.append(point)
            best = point.nrmse
    return frontier


def default_grid(method: str, dataset: Sequence[Trajectory], max_components: int = 30) -> list[dict]:
    """Configuration grid mirroring the accuracy-analysis sweep.

    Basis counts 5..20 in steps of 5; component counts up to the largest
    rank the per-trajectory estimates can support; latent dimensions up to
    the joint count.
    """
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}, expected one of {METHODS}")
    ns = [5, 10, 15, 20]
    d = dataset[0].dof
    m = len(dataset)
    if method == "mp":
        return [{"n": n} for n in ns]
    if method == "primos":
        return [
            {"n": n, "n_c": k}
            for n in ns
            for k in range(1, min(max_components, m - 1, n * d) + 1)
        ]
    return [{"n": n, "n_latent": q} for n in ns for q in range(1, d + 1)]


def _evaluate_mp(dataset, n, h, ridge, stats):
    cfg = BasisConfig(n, h)
    sq, count = 0.0, 0
    for traj in dataset:
        w = fit_weights(traj, cfg, ridge)
        recon = reconstruct(w, traj.phase(), cfg)
        sq += float(np.sum((recon - traj.positions) ** 2))
        count += recon.size
    return _pooled_nrmse(sq, count, stats)


def _evaluate_primos_group(dataset, n, h, components, ridge, stats):
    """All component counts for one basis size share the weight fits."""
    cfg = BasisConfig(n, h)
    weights = [fit_weights(traj, cfg, ridge) for traj in dataset]
    dist = estimate_distribution(weights, cfg)
    out = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankWarning)
        for n_c in components:
            pm = principal_movements(dist, n_c)
            sq, count = 0.0, 0
            for traj in dataset:
                a = fit_alpha(traj, pm, cfg, ridge)
                recon = reconstruct_primo(a, pm, traj.phase(), cfg)
                sq += float(np.sum((recon - traj.positions) ** 2))
                count += recon.size
            out[n_c] = _pooled_nrmse(sq, count, stats)
    return out


def _evaluate_cpca(dataset, n, h, n_latent, ridge, stats, projection):
    cfg = BasisConfig(n, h)
    latent_weights = fit_cpca_mp(dataset, projection, cfg, ridge)
    sq, count = 0.0, 0
    for traj, lw in zip(dataset, latent_weights):
        recon = reconstruct_cpca(lw, projection, traj.phase(), cfg)
        sq += float(np.sum((recon - traj.positions) ** 2))
        count += recon.size
    return _pooled_nrmse(sq, count, stats)


def param_error_curve(
    dataset: Sequence[Trajectory],
    method: str,
    configs: Sequence[dict] | None = None,
    ridge: RidgeConfig = RidgeConfig(),
) -> GridResult:
    """Fit each configuration on the full dataset and pool the reconstruction error.

    Failed configurations are kept as (config, message) markers instead of
    being dropped.
    """
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}, expected one of {METHODS}")
    if not dataset:
        raise InsufficientDataError("dataset is empty")
    if configs is None:
        configs = default_grid(method, dataset)
    if not configs:
        raise ValidationError("configuration grid is empty")
    stats = dataset_stats(dataset)
    d = dataset[0].dof
    result = GridResult(evaluated=[])

    def record(config, params, value):
        result.evaluated.append(
            ErrorCurvePoint(method=method, param_count=params, nrmse=value, config=dict(config))
        )

    if method == "primos":
        groups: dict[tuple, list[dict]] = {}
        for config in configs:
            groups.setdefault((config["n"], config.get("h")), []).append(config)
        for (n, h), group in groups.items():
            try:
                errors = _evaluate_primos_group(
                    dataset, n, h, [c["n_c"] for c in group], ridge, stats
                )
            except PrimoError as exc:
                result.failures.extend((dict(c), str(exc)) for c in group)
                continue
            for config in group:
                record(config, config["n_c"], errors[config["n_c"]])
        return result

    projections: dict[int, object] = {}
    for config in configs:
        try:
            if method == "mp":
                value = _evaluate_mp(dataset, config["n"], config.get("h"), ridge, stats)
                params = parameter_count("mp", n=config["n"], d=d)[0]
            else:
                q = config["n_latent"]
                if q not in projections:
                    projections[q] = fit_configuration_pca(dataset, q)
                value = _evaluate_cpca(
                    dataset, config["n"], config.get("h"), q, ridge, stats, projections[q]
                )
                params = parameter_count("cpca", n=config["n"], n_latent=q)[0]
            record(config, params, value)
        except PrimoError as exc:
            result.failures.append((dict(config), str(exc)))
    return result


@dataclass(frozen=True)
class LooFold:
    """One held-out trajectory at one component count."""

    n_c: int
    fold: int
    train_nrmse: float
    validation_nrmse: float


def leave_one_out(
    dataset: Sequence[Trajectory],
    cfg: BasisConfig,
    components: Sequence[int],
    ridge: RidgeConfig = RidgeConfig(),
) -> list[LooFold]:
    """Hold out each trajectory in turn; refit its coefficients with the frozen training model.

    Per fold, the mean movement and principal movements come from the m-1
    training trajectories only; the held-out trajectory contributes nothing
    but its own coefficient fit. Training error pools over the training set.
    """
    m = len(dataset)
    if m < 3:
        raise InsufficientDataError(f"leave-one-out needs at least 3 trajectories, got {m}")
    components = sorted(set(int(k) for k in components))
    if not components or components[0] < 1:
        raise ValidationError("component counts must be positive")
    stats = dataset_stats(dataset)
    folds = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankWarning)
        for fold in range(m):
            training = [traj for i, traj in enumerate(dataset) if i != fold]
            held_out = dataset[fold]
            weights = [fit_weights(traj, cfg, ridge) for traj in training]
            dist = estimate_distribution(weights, cfg)
            for n_c in components:
                pm = principal_movements(dist, n_c)
                sq, count = 0.0, 0
                for traj in training:
                    a = fit_alpha(traj, pm, cfg, ridge)
                    recon = reconstruct_primo(a, pm, traj.phase(), cfg)
                    sq += float(np.sum((recon - traj.positions) ** 2))
                    count += recon.size
                a_star = fit_alpha(held_out, pm, cfg, ridge)
                recon = reconstruct_primo(a_star, pm, held_out.phase(), cfg)
                folds.append(
                    LooFold(
                        n_c=n_c,
                        fold=fold,
                        train_nrmse=_pooled_nrmse(sq, count, stats),
                        validation_nrmse=nrmse(recon, held_out.positions, stats),
                    )
                )
    return folds


def loo_summary(folds: Sequence[LooFold]) -> dict[int, tuple[float, float]]:
    """Per component count: (mean training NRMSE, mean validation NRMSE)."""
    by_nc: dict[int, list[LooFold]] = {}
    for f in folds:
        by_nc.setdefault(f.n_c, []).append(f)
    return {
        n_c: (
            float(np.mean([f.train_nrmse for f in group])),
            float(np.mean([f.validation_nrmse for f in group])),
        )
        for n_c, group in sorted(by_nc.items())
    }
