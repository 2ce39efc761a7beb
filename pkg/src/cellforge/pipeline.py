"""Config-driven experiment runner.

A run is described by a YAML file with six component sections plus optional
``seeds`` and ``workspace``::

    train_test_split:
        name: 'MATRPrimaryTestTrainTestSplitter'
        cell_data_path: 'data/processed/MATR'
    feature:
        name: 'VarianceModelFeatureExtractor'
        interp_dims: 1000
    feature_transformation:
        name: 'ZScoreDataTransformation'
    label:
        name: 'RULLabelAnnotator'
    label_transformation:
        name: 'SequentialDataTransformation'
        transformations:
            - name: 'LogScaleDataTransformation'
            - name: 'ZScoreDataTransformation'
    model:
        name: 'LinearRegressionRULPredictor'

Training executes split -> labels -> features -> transforms (fit on train
rows only) -> one model per seed, then persists everything under
``<workspace>/<config stem>_<hash8>/``. Metrics are computed on labels in
original units (predictions are inverse-transformed before scoring).
"""

from __future__ import annotations

import hashlib
import inspect
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import components as _components  # noqa: F401  (populates registries)
from .battery_data import CellRecord, load_cells
from .errors import CheckpointError, ConfigError, PipelineError
from .models import load_model
from .registry import FEATURES, LABELS, MODELS, SPLITTERS, TRANSFORMS
from .splitters import SplitResult
from .transforms import transform_from_dict

COMPONENT_KEYS = (
    "train_test_split",
    "feature",
    "feature_transformation",
    "label",
    "label_transformation",
    "model",
)
OPTIONAL_KEYS = ("seeds", "workspace")
DEFAULT_SEEDS = tuple(range(10))

__all__ = [
    "ComponentSpec",
    "PipelineConfig",
    "Checkpoint",
    "run_train",
    "run_evaluate",
    "rmse",
    "mae",
]


def rmse(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


def mae(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    return float(np.mean(np.abs(y_true - y_pred)))


def _jsonify(value):
    """Normalize parsed config values to canonical JSON-safe types."""
    if isinstance(value, dict):
        return {str(k): _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    raise ConfigError(f"unsupported config value type: {type(value).__name__}")


@dataclass(frozen=True)
class ComponentSpec:
    """One config section: a registered name plus constructor parameters."""

    name: str
    params: dict = field(default_factory=dict)

    @classmethod
    def from_config(cls, section, key: str) -> "ComponentSpec":
        if not isinstance(section, dict):
            raise ConfigError(f"{key!r} section must be a mapping with a 'name'")
        section = _jsonify(section)
        name = section.pop("name", None)
        if not isinstance(name, str) or not name:
            raise ConfigError(f"{key!r} section needs a non-empty 'name' string")
        return cls(name=name, params=section)

    def to_dict(self) -> dict:
        return {"name": self.name, **self.params}


@dataclass(frozen=True)
class PipelineConfig:
    train_test_split: ComponentSpec
    feature: ComponentSpec
    feature_transformation: ComponentSpec
    label: ComponentSpec
    label_transformation: ComponentSpec
    model: ComponentSpec
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    workspace: str | None = None
    source_path: Path | None = None

    @classmethod
    def from_dict(cls, obj: dict, source_path=None) -> "PipelineConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config root must be a mapping")
        unknown = sorted(set(obj) - set(COMPONENT_KEYS) - set(OPTIONAL_KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        missing = [k for k in COMPONENT_KEYS if k not in obj]
        if missing:
            raise ConfigError(f"missing config keys: {missing}")
        sections = {k: ComponentSpec.from_config(obj[k], k) for k in COMPONENT_KEYS}
        seeds = obj.get("seeds", list(DEFAULT_SEEDS))
        if (
            not isinstance(seeds, list)
            or not seeds
            or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds)
        ):
            raise ConfigError("'seeds' must be a non-empty list of integers")
        if len(set(seeds)) != len(seeds):
            raise ConfigError("'seeds' must not repeat")
        workspace = obj.get("workspace")
        if workspace is not None and not isinstance(workspace, str):
            raise ConfigError("'workspace' must be a string")
        return cls(
            **sections,
            seeds=tuple(seeds),
            workspace=workspace,
            source_path=Path(source_path) if source_path else None,
        )

    @classmethod
    def from_yaml(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            obj = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(obj, source_path=path)

    @classmethod
    def load(cls, config) -> "PipelineConfig":
        if isinstance(config, PipelineConfig):
            return config
        if isinstance(config, dict):
            return cls.from_dict(config)
        return cls.from_yaml(config)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k).to_dict() for k in COMPONENT_KEYS}
        out["seeds"] = list(self.seeds)
        if self.workspace is not None:
            out["workspace"] = self.workspace
        return out

    def config_hash(self) -> str:
        """Identity of the experiment: the six component sections only.

        Seeds and workspace are runtime choices; two runs that differ only
        there share split, features, and labels and may reuse them.
        """
        payload = {k: getattr(self, k).to_dict() for k in COMPONENT_KEYS}
        canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def run_name(self) -> str:
        stem = self.source_path.stem if self.source_path else "run"
        return f"{stem}_{self.config_hash()[:8]}"


def _accepts(factory, param: str) -> bool:
    """Whether a registry factory's signature has the named parameter."""
    try:
        sig = inspect.signature(factory)
    except (TypeError, ValueError):
        return False
    if param in sig.parameters:
        return True
    return any(p.kind is inspect.Parameter.VAR_KEYWORD for p in sig.parameters.values())


def _with_overrides(spec: ComponentSpec, registry, overrides: dict) -> dict:
    """Component params plus split-metadata overrides the factory accepts.

    Explicit config values win over split metadata.
    """
    params = dict(spec.params)
    factory = registry.get_factory(spec.name)
    for key, value in overrides.items():
        if value is None or key in params or factory is None:
            continue
        if _accepts(factory, key):
            params[key] = value
    return params


def _make_model(spec: ComponentSpec, seed: int):
    params = dict(spec.params)
    factory = MODELS.get_factory(spec.name)
    if factory is not None and _accepts(factory, "seed"):
        params["seed"] = seed
    return MODELS.create(spec.name, **params)


def _align(features, label_vector):
    """Join feature rows to labels by row key, keeping feature-row order.

    Rows of either side without a partner are dropped (an extractor may
    cover fewer cycles than the annotator, or vice versa); an empty join
    is an error.
    """
    by_key = {}
    for key, value in zip(label_vector.row_keys, label_vector.values):
        if key in by_key:
            raise PipelineError(f"duplicate label row key {key!r}")
        by_key[key] = value
    rows, y, keys = [], [], []
    for i, key in enumerate(features.row_keys):
        if key in by_key:
            rows.append(i)
            y.append(by_key[key])
            keys.append(key)
    if not rows:
        raise PipelineError(
            "feature rows and label rows share no keys; feature and label "
            "granularity (cell/cycle/step) must match"
        )
    return features.values[rows], np.asarray(y, dtype=float), keys


def _resolve_workspace(workspace, config: PipelineConfig) -> Path:
    if workspace is not None:
        return Path(workspace)
    if config.workspace is not None:
        return Path(config.workspace)
    env = os.environ.get("CELLFORGE_WORKSPACE")
    if env:
        return Path(env)
    return Path("workspace")


def _split_cells(config: PipelineConfig, cells):
    """Run the splitter and bind the resulting IDs back to cell records."""
    split_params = dict(config.train_test_split.params)
    cell_data_path = split_params.pop("cell_data_path", None)
    if cells is None:
        if cell_data_path is None:
            raise ConfigError(
                "train_test_split needs 'cell_data_path' when cells are not supplied"
            )
        cells = load_cells(cell_data_path)
    cells = sorted(cells, key=lambda c: c.cell_id)
    if not cells:
        raise PipelineError("no cells to run on")
    splitter = SPLITTERS.create(config.train_test_split.name, **split_params)
    split = splitter.split([c.cell_id for c in cells])
    by_id = {c.cell_id: c for c in cells}
    train = [by_id[i] for i in split.train_cell_ids]
    test = [by_id[i] for i in split.test_cell_ids]
    return split, train, test


def _label_and_featurize(config: PipelineConfig, split: SplitResult,
                         train_cells, test_cells, jobs: int):
    """Labels then features for both partitions; returns aligned arrays."""
    meta = split.metadata
    label_params = _with_overrides(
        config.label, LABELS, {"eol_soh_percent": meta.get("eol_soh")}
    )
    feature_params = _with_overrides(
        config.feature, FEATURES, {"observed_cycles": meta.get("observed_cycles")}
    )

    annotator = LABELS.create(config.label.name, **label_params)
    labels_train, excl_train = annotator.annotate(train_cells)
    labels_test, excl_test = annotator.annotate(test_cells)
    excluded = [{"cell_id": cid, "reason": reason} for cid, reason in excl_train + excl_test]

    labeled = {key[0] for key in labels_train.row_keys} | {
        key[0] for key in labels_test.row_keys
    }
    train_kept = [c for c in train_cells if c.cell_id in labeled]
    test_kept = [c for c in test_cells if c.cell_id in labeled]
    if not train_kept:
        raise PipelineError("all training cells were excluded by the label annotator")
    if not test_kept:
        raise PipelineError("all test cells were excluded by the label annotator")

    extractor = FEATURES.create(config.feature.name, **feature_params)
    features_train = extractor.extract(train_kept, jobs=jobs)
    features_test = extractor.extract(test_kept, jobs=jobs)

    X_train, y_train, keys_train = _align(features_train, labels_train)
    X_test, y_test, keys_test = _align(features_test, labels_test)
    return {
        "features_train": features_train,
        "features_test": features_test,
        "X_train": X_train,
        "y_train": y_train,
        "keys_train": keys_train,
        "X_test": X_test,
        "y_test": y_test,
        "keys_test": keys_test,
        "excluded": excluded,
    }


def _fit_transforms(config: PipelineConfig, X_train, y_train):
    ft = TRANSFORMS.create(
        config.feature_transformation.name, **config.feature_transformation.params
    )
    lt = TRANSFORMS.create(
        config.label_transformation.name, **config.label_transformation.params
    )
    ft.fit(X_train)
    lt.fit(y_train)
    return ft, lt


def _train_seed(config, seed, Xtr, ytr):
    model = _make_model(config.model, seed)
    model.fit(Xtr, ytr)
    return model


def _score(models_by_seed, lt, Xte, y_test):
    """Per-seed metrics plus the across-seed mean prediction per test row."""
    per_seed, preds = [], []
    for seed, model in models_by_seed:
        y_pred = lt.inverse_transform(model.predict(Xte))
        preds.append(y_pred)
        per_seed.append(
            {"seed": seed, "rmse": rmse(y_test, y_pred), "mae": mae(y_test, y_pred)}
        )
    mean_pred = np.mean(np.stack(preds), axis=0)
    return per_seed, mean_pred


def _prediction_rows(keys, y_true, y_pred):
    rows = []
    for key, yt, yp in zip(keys, y_true, y_pred):
        cell_id, cycle, step = key
        row = {"cell_id": cell_id}
        if cycle is not None:
            row["cycle"] = int(cycle)
        if step is not None:
            row["step"] = int(step)
        row["y_true"] = float(yt)
        row["y_pred"] = float(yp)
        rows.append(row)
    return rows


def _report(config, per_seed, keys_test, y_test, mean_pred, excluded, overrides=()):
    rmses = np.array([s["rmse"] for s in per_seed])
    maes = np.array([s["mae"] for s in per_seed])
    report = {
        "config_hash": config.config_hash(),
        "per_seed": per_seed,
        "mean_rmse": float(rmses.mean()),
        "sd_rmse": float(rmses.std()),
        "mean_mae": float(maes.mean()),
        "sd_mae": float(maes.std()),
        "predictions": _prediction_rows(keys_test, y_test, mean_pred),
        "excluded": excluded,
    }
    if overrides:
        report["overrides"] = sorted(overrides)
    return report


@dataclass(frozen=True)
class Checkpoint:
    """A persisted training run: its directory and the evaluation report."""

    directory: Path
    report: dict


def run_train(config, workspace=None, cells: list[CellRecord] | None = None,
              jobs: int = 1, device=None) -> Checkpoint:
    """Train per config and persist a checkpoint; returns it with the report.

    ``cells`` short-circuits corpus loading (callers that already hold the
    records in memory); otherwise cells come from ``cell_data_path``.
    ``device`` is accepted for config compatibility and ignored: every
    bundled model runs on the CPU.
    """
    del device
    config = PipelineConfig.load(config)
    split, train_cells, test_cells = _split_cells(config, cells)
    data = _label_and_featurize(config, split, train_cells, test_cells, jobs)

    ft, lt = _fit_transforms(config, data["X_train"], data["y_train"])
    Xtr = ft.transform(data["X_train"])
    ytr = lt.transform(data["y_train"])
    Xte = ft.transform(data["X_test"])

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            fitted = list(
                pool.map(lambda s: _train_seed(config, s, Xtr, ytr), config.seeds)
            )
    else:
        fitted = [_train_seed(config, s, Xtr, ytr) for s in config.seeds]
    models_by_seed = list(zip(config.seeds, fitted))

    per_seed, mean_pred = _score(models_by_seed, lt, Xte, data["y_test"])
    report = _report(
        config, per_seed, data["keys_test"], data["y_test"], mean_pred, data["excluded"]
    )

    ckpt_dir = _resolve_workspace(workspace, config) / config.run_name()
    _write_checkpoint(ckpt_dir, config, split, data, ft, lt, models_by_seed, report)
    return Checkpoint(directory=ckpt_dir, report=report)


def _write_checkpoint(ckpt_dir, config, split, data, ft, lt, models_by_seed, report):
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    if config.source_path is not None and config.source_path.is_file():
        (ckpt_dir / "config.yaml").write_text(config.source_path.read_text())
    else:
        (ckpt_dir / "config.yaml").write_text(yaml.safe_dump(config.to_dict()))
    _write_json(ckpt_dir / "report.json", report)
    _write_json(ckpt_dir / "split.json", split.to_dict())
    _write_json(
        ckpt_dir / "transforms.json",
        {"feature_transformation": ft.to_dict(), "label_transformation": lt.to_dict()},
    )
    _write_json(
        ckpt_dir / "labels.json",
        {
            "train": _label_payload(data["keys_train"], data["y_train"]),
            "test": _label_payload(data["keys_test"], data["y_test"]),
            "excluded": data["excluded"],
        },
    )
    data["features_train"].save(ckpt_dir / "features_train")
    data["features_test"].save(ckpt_dir / "features_test")
    for seed, model in models_by_seed:
        model.save(ckpt_dir / f"model_seed{seed}.bin")


def _label_payload(keys, values):
    return {"row_keys": [list(k) for k in keys], "values": [float(v) for v in values]}


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, allow_nan=False)


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint file missing: {path}") from None
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not valid JSON: {exc}") from exc


def _load_stored_models(ckpt_dir, seeds):
    models_by_seed = []
    for seed in seeds:
        path = ckpt_dir / f"model_seed{seed}.bin"
        if not path.is_file():
            raise CheckpointError(f"checkpoint file missing: {path}")
        models_by_seed.append((seed, load_model(path)))
    return models_by_seed


def run_evaluate(checkpoint, overrides: dict | None = None,
                 cells: list[CellRecord] | None = None, jobs: int = 1) -> dict:
    """Recompute the evaluation report of a stored checkpoint.

    Without overrides the stored split, features, labels, transforms, and
    models are reused, so the result is bit-identical to the report written
    at train time. ``overrides`` replaces whole config sections (any of the
    six component keys) and forces the affected stages to rerun against a
    corpus (``cells`` or the split's ``cell_data_path``); the report then
    flags which sections were overridden. A corpus passed without overrides
    is checked for the stored test cells (missing ones are an error) but
    stored features are still used.
    """
    from .features import FeatureMatrix

    ckpt_dir = Path(checkpoint)
    if not ckpt_dir.is_dir():
        raise CheckpointError(f"checkpoint directory not found: {ckpt_dir}")

    stored_report = _read_json(ckpt_dir / "report.json")
    try:
        stored_config = PipelineConfig.from_yaml(ckpt_dir / "config.yaml")
    except ConfigError as exc:
        raise CheckpointError(f"stored config unreadable: {exc}") from exc
    if stored_config.config_hash() != stored_report.get("config_hash"):
        raise CheckpointError(
            "stored config does not match the hash in report.json; the "
            "checkpoint was modified after training"
        )

    overrides = dict(overrides or {})
    unknown = sorted(set(overrides) - set(COMPONENT_KEYS))
    if unknown:
        raise ConfigError(f"unknown override keys: {unknown}")
    merged = stored_config.to_dict()
    merged.update({k: _jsonify(v) for k, v in overrides.items()})
    merged.pop("workspace", None)
    config = PipelineConfig.from_dict(merged)

    transforms_payload = _read_json(ckpt_dir / "transforms.json")
    ft = transform_from_dict(transforms_payload["feature_transformation"])
    lt = transform_from_dict(transforms_payload["label_transformation"])
    models_by_seed = _load_stored_models(ckpt_dir, config.seeds)

    stored_split = SplitResult.from_dict(_read_json(ckpt_dir / "split.json"))
    if cells is not None:
        available = {c.cell_id for c in cells}
        missing = [cid for cid in stored_split.test_cell_ids if cid not in available]
        if missing and "train_test_split" not in overrides:
            raise CheckpointError(f"corpus is missing stored test cells: {missing}")

    if not overrides:
        features_test = FeatureMatrix.load(ckpt_dir / "features_test")
        labels_payload = _read_json(ckpt_dir / "labels.json")
        keys_test = [tuple(k) for k in labels_payload["test"]["row_keys"]]
        y_test = np.asarray(labels_payload["test"]["values"], dtype=float)
        # feature rows were aligned to these keys at train time
        key_to_row = {key: i for i, key in enumerate(features_test.row_keys)}
        rows = [key_to_row[k] for k in keys_test]
        X_test = features_test.values[rows]
        excluded = labels_payload.get("excluded", [])
    else:
        split, train_cells, test_cells = _split_cells(
            config, cells if cells is not None else None
        )
        data = _label_and_featurize(config, split, train_cells, test_cells, jobs)
        keys_test, y_test = data["keys_test"], data["y_test"]
        X_test, excluded = data["X_test"], data["excluded"]

    Xte = ft.transform(X_test)
    per_seed, mean_pred = _score(models_by_seed, lt, Xte, y_test)
    return _report(
        config, per_seed, keys_test, y_test, mean_pred, excluded, overrides=overrides
    )
