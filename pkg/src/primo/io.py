"""File formats: trajectory CSV, dataset manifests, model files.

Reals are serialized with their shortest round-trip decimal representation,
so every write/read cycle reproduces the exact double and re-saving a loaded
file is byte-identical. Loading validates the invariants of everything it
constructs; a file that fails validation produces no partial object.
"""
from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .basis import BasisConfig
from .cpca import ConfigProjection
from .errors import (
    DataError,
    InvalidTrajectoryError,
    ModelFormatError,
    ParseError,
    PrimoError,
    ValidationError,
)
from .mpcore import MpWeights, ObservationNoise, Trajectory
from .primos import PrincipalMovements, ProPrimoDistribution
from .promp import PrompDistribution

FORMAT_MODEL = "primo-model"
FORMAT_DATASET = "primo-dataset"
VERSION = 1

MODEL_KINDS = ("mp", "promp", "primos", "pro_primos", "cpca")


def write_text_atomic(path: str | Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value: float) -> str:
    return repr(float(value))


# ---------------------------------------------------------------------------
# Trajectory CSV
# ---------------------------------------------------------------------------

def write_trajectory_csv(traj: Trajectory, path: str | Path) -> None:
    """Header ``t,<joint names>``, one row per sample, full-precision reals."""
    names = traj.joint_names or tuple(f"j{i + 1}" for i in range(traj.dof))
    lines = ["t," + ",".join(names)]
    for t, row in zip(traj.times, traj.positions):
        lines.append(",".join(_fmt(v) for v in (t, *row)))
    write_text_atomic(path, "\n".join(lines) + "\n")


def read_trajectory_csv(path: str | Path) -> Trajectory:
    """Parse a trajectory CSV, reporting the offending line on any defect."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: cannot read: {exc}") from exc
    rows = list(csv.reader(raw.splitlines()))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2 or header[0].strip() != "t":
        raise ParseError(f"{path}: line 1: header must be 't,<joint>,...', got {header!r}")
    names = tuple(name.strip() for name in header[1:])
    d = len(names)
    times, positions = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d + 1:
            raise ParseError(f"{path}: line {lineno}: expected {d + 1} fields, got {len(row)}")
        try:
            values = [float(field) for field in row]
        except ValueError as exc:
            raise ParseError(f"{path}: line {lineno}: {exc}") from exc
        if not all(np.isfinite(values)):
            raise ParseError(f"{path}: line {lineno}: non-finite value")
        if times and values[0] <= times[-1]:
            raise InvalidTrajectoryError(
                f"{path}: line {lineno}: time {values[0]} does not increase past {times[-1]}"
            )
        times.append(values[0])
        positions.append(values[1:])
    if len(times) < 2:
        raise InvalidTrajectoryError(f"{path}: needs at least 2 samples, got {len(times)}")
    return Trajectory(np.array(times), np.array(positions), joint_names=names)


# ---------------------------------------------------------------------------
# Dataset manifest
# ---------------------------------------------------------------------------

def save_dataset(
    directory: str | Path,
    dataset: Sequence[Trajectory],
    joint_names: Sequence[str] | None = None,
    metadata: dict | None = None,
    stem: str = "traj",
) -> Path:
    """Write one CSV per trajectory plus ``manifest.json``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(max(len(dataset) - 1, 0))))
    files = []
    for i, traj in enumerate(dataset):
        name = f"{stem}_{i:0{width}d}.csv"
        if joint_names is not None and traj.joint_names is None:
            traj = Trajectory(traj.times, traj.positions, joint_names=tuple(joint_names))
        write_trajectory_csv(traj, directory / name)
        files.append(name)
    doc = {
        "format": FORMAT_DATASET,
        "version": VERSION,
        "joint_names": list(joint_names) if joint_names is not None else None,
        "trajectories": files,
        "metadata": metadata or {},
    }
    manifest = directory / "manifest.json"
    write_text_atomic(manifest, json.dumps(doc, indent=2, allow_nan=False) + "\n")
    return manifest


def load_dataset(manifest_path: str | Path) -> list[Trajectory]:
    """Load every trajectory referenced by a manifest; all must exist and agree on joints."""
    manifest_path = Path(manifest_path)
    doc = _read_json(manifest_path, FORMAT_DATASET)
    files = doc.get("trajectories")
    if not isinstance(files, list) or not files:
        raise ModelFormatError(f"{manifest_path}: field 'trajectories' must be a nonempty list")
    dataset = []
    for name in files:
        target = manifest_path.parent / name
        if not target.exists():
            raise ModelFormatError(f"{manifest_path}: referenced file does not exist: {name}")
        dataset.append(read_trajectory_csv(target))
    dofs = {traj.dof for traj in dataset}
    if len(dofs) > 1:
        raise ModelFormatError(f"{manifest_path}: inconsistent joint counts across files: {sorted(dofs)}")
    return dataset


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CpcaModel:
    """Configuration projection plus the per-trajectory latent weights."""

    projection: ConfigProjection
    latent_weights: tuple[MpWeights, ...]

    def __post_init__(self):
        object.__setattr__(self, "latent_weights", tuple(self.latent_weights))
        for i, w in enumerate(self.latent_weights):
            if w.d != self.projection.n_latent:
                raise ValidationError(
                    f"latent weights {i} cover {w.d} dimensions, "
                    f"projection keeps {self.projection.n_latent}"
                )


@dataclass(frozen=True)
class ModelEnvelope:
    """A saved model: its kind, shared configuration, and kind-specific payload."""

    kind: str
    cfg: BasisConfig
    dof: int
    noise: ObservationNoise
    payload: object
    lam: float | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValidationError(f"unknown model kind {self.kind!r}")
        expected = {
            "mp": MpWeights,
            "promp": PrompDistribution,
            "primos": PrincipalMovements,
            "pro_primos": ProPrimoDistribution,
            "cpca": CpcaModel,
        }[self.kind]
        if not isinstance(self.payload, expected):
            raise ValidationError(
                f"kind {self.kind!r} expects a {expected.__name__} payload, "
                f"got {type(self.payload).__name__}"
            )


def _array_doc(arr: np.ndarray) -> dict:
    arr = np.asarray(arr, dtype=float)
    return {"shape": list(arr.shape), "data": [float(v) for v in arr.ravel()]}


def _read_array(doc: dict, field: str, expect_ndim: int | None = None) -> np.ndarray:
    try:
        spec = doc["arrays"][field]
        shape = tuple(int(s) for s in spec["shape"])
        data = spec["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"field '{field}': missing or malformed array") from exc
    size = int(np.prod(shape)) if shape else 1
    if not isinstance(data, list) or len(data) != size:
        raise ModelFormatError(
            f"field '{field}': {len(data) if isinstance(data, list) else '?'} values "
            f"for declared shape {list(shape)}"
        )
    arr = np.array(data, dtype=float).reshape(shape)
    if expect_ndim is not None and arr.ndim != expect_ndim:
        raise ModelFormatError(f"field '{field}': expected {expect_ndim}-D array, got {arr.ndim}-D")
    return arr


def save_model(env: ModelEnvelope, path: str | Path) -> None:
    """Serialize a model envelope as versioned JSON (atomic write)."""
    arrays: dict[str, dict] = {}
    extra: dict[str, object] = {}
    p = env.payload
    if env.kind == "mp":
        arrays["weights"] = _array_doc(p.w)
    elif env.kind == "promp":
        arrays["mu_w"] = _array_doc(p.mu_w)
        arrays["sigma_w"] = _array_doc(p.sigma_w)
    elif env.kind in ("primos", "pro_primos"):
        pm = p if env.kind == "primos" else p.pm
        arrays["w_bar"] = _array_doc(pm.w_bar)
        arrays["omega"] = _array_doc(pm.omega)
        arrays["eigvals"] = _array_doc(pm.eigvals)
        extra["n_c"] = pm.n_c
        if env.kind == "pro_primos":
            arrays["mu_alpha"] = _array_doc(p.mu_a)
            arrays["sigma_alpha"] = _array_doc(p.sigma_a)
    else:  # cpca
        arrays["mean_config"] = _array_doc(p.projection.mean_config)
        arrays["proj"] = _array_doc(p.projection.proj)
        arrays["latent_weights"] = _array_doc(np.stack([w.w for w in p.latent_weights]))
        extra["n_latent"] = p.projection.n_latent
    doc = {
        "format": FORMAT_MODEL,
        "version": VERSION,
        "kind": env.kind,
        "basis": {"n": env.cfg.n, "h": float(env.cfg.h)},
        "dof": env.dof,
        "ridge_lambda": env.lam,
        **extra,
        "sigma_tau": _array_doc(env.noise.sigma),
        "arrays": arrays,
    }
    write_text_atomic(path, json.dumps(doc, indent=2, allow_nan=False) + "\n")


def _read_json(path: Path, expected_format: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFormatError(f"{path}: cannot read: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid or truncated JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != expected_format:
        raise ModelFormatError(f"{path}: field 'format': expected {expected_format!r}")
    if doc.get("version") != VERSION:
        raise ModelFormatError(
            f"{path}: field 'version': expected {VERSION}, got {doc.get('version')!r}"
        )
    return doc


def load_model(path: str | Path) -> ModelEnvelope:
    """Load and fully validate a model file; never returns a partial model."""
    path = Path(path)
    doc = _read_json(path, FORMAT_MODEL)
    kind = doc.get("kind")
    if kind not in MODEL_KINDS:
        raise ModelFormatError(f"{path}: field 'kind': unknown model kind {kind!r}")
    try:
        basis = doc["basis"]
        cfg = BasisConfig(int(basis["n"]), float(basis["h"]))
        dof = int(doc["dof"])
        lam = doc["ridge_lambda"]
        lam = None if lam is None else float(lam)
        noise = ObservationNoise(_read_array({"arrays": {"s": doc["sigma_tau"]}}, "s", 2))
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError, PrimoError) as exc:
        raise ModelFormatError(f"{path}: malformed header: {exc}") from exc

    def build(field, fn, *args):
        try:
            return fn(*args)
        except PrimoError as exc:
            raise ModelFormatError(f"{path}: field '{field}': {exc}") from exc

    try:
        if kind == "mp":
            payload = build("weights", MpWeights, _read_array(doc, "weights", 1), cfg.n, dof)
        elif kind == "promp":
            payload = build(
                "sigma_w",
                PrompDistribution,
                _read_array(doc, "mu_w", 1),
                _read_array(doc, "sigma_w", 2),
                cfg,
                dof,
                noise,
            )
        elif kind in ("primos", "pro_primos"):
            n_c = int(doc.get("n_c", 0))
            pm = build(
                "omega",
                PrincipalMovements,
                _read_array(doc, "w_bar", 1),
                _read_array(doc, "omega", 2),
                _read_array(doc, "eigvals", 1),
                n_c,
            )
            if kind == "primos":
                payload = pm
            else:
                payload = build(
                    "sigma_alpha",
                    ProPrimoDistribution,
                    pm,
                    _read_array(doc, "mu_alpha", 1),
                    _read_array(doc, "sigma_alpha", 2),
                    cfg,
                    dof,
                    noise,
                )
        else:  # cpca
            n_latent = int(doc.get("n_latent", 0))
            projection = build(
                "proj",
                ConfigProjection,
                _read_array(doc, "mean_config", 1),
                _read_array(doc, "proj", 2),
                n_latent,
            )
            stacked = _read_array(doc, "latent_weights", 2)
            payload = build(
                "latent_weights",
                CpcaModel,
                projection,
                tuple(MpWeights(row, cfg.n, n_latent) for row in stacked),
            )
        return ModelEnvelope(kind=kind, cfg=cfg, dof=dof, noise=noise, payload=payload, lam=lam)
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model body: {exc}") from exc
