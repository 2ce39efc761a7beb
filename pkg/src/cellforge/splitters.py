"""Train/test partitioning of battery cells.

Splitters operate on cell identifiers. Random splits are deterministic
given a seed; fixed splits ship as JSON data files of ID lists so that
published dataset compositions are reproducible byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import SplitError

__all__ = [
    "SplitResult",
    "BaseTrainTestSplitter",
    "RandomTrainTestSplitter",
    "ExplicitTrainTestSplitter",
    "FixedSplitTrainTestSplitter",
    "packaged_split_path",
    "PACKAGED_SPLITS",
]


@dataclass(frozen=True)
class SplitResult:
    """A partition of cell identifiers plus optional dataset metadata.

    ``metadata`` may carry task overrides consumed downstream, e.g.
    ``{"eol_soh": 90, "observed_cycles": 20}`` for early-prediction setups.
    """

    train_cell_ids: tuple[str, ...]
    test_cell_ids: tuple[str, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        overlap = set(self.train_cell_ids) & set(self.test_cell_ids)
        if overlap:
            raise SplitError(f"cells in both train and test: {sorted(overlap)}")
        if not self.train_cell_ids:
            raise SplitError("empty train partition")
        if not self.test_cell_ids:
            raise SplitError("empty test partition")

    def to_dict(self) -> dict:
        return {
            "train": list(self.train_cell_ids),
            "test": list(self.test_cell_ids),
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SplitResult":
        if not isinstance(payload, dict):
            raise SplitError("split payload must be an object")
        for key in ("train", "test"):
            if key not in payload:
                raise SplitError(f"split payload missing {key!r} list")
            ids = payload[key]
            if not isinstance(ids, list) or not all(isinstance(c, str) for c in ids):
                raise SplitError(f"split payload {key!r} must be a list of strings")
        metadata = payload.get("metadata", {})
        if not isinstance(metadata, dict):
            raise SplitError("split payload 'metadata' must be an object")
        return cls(
            train_cell_ids=tuple(payload["train"]),
            test_cell_ids=tuple(payload["test"]),
            metadata=metadata,
        )


class BaseTrainTestSplitter:
    """Interface: map available cell IDs to a train/test partition."""

    def split(self, cell_ids: Sequence[str]) -> SplitResult:
        raise NotImplementedError


class RandomTrainTestSplitter(BaseTrainTestSplitter):
    """Random partition; test count is floor(n * test_fraction), at least 1."""

    def __init__(self, test_fraction: float = 0.2, seed: int = 0):
        if not 0.0 < test_fraction < 1.0:
            raise SplitError(f"test_fraction must be in (0, 1), got {test_fraction}")
        self.test_fraction = float(test_fraction)
        self.seed = int(seed)

    def split(self, cell_ids: Sequence[str]) -> SplitResult:
        ids = sorted(cell_ids)
        if len(ids) != len(set(ids)):
            raise SplitError("duplicate cell ids")
        if len(ids) < 2:
            raise SplitError(f"need at least 2 cells to split, got {len(ids)}")
        n_test = max(1, int(len(ids) * self.test_fraction))
        if n_test >= len(ids):
            n_test = len(ids) - 1
        rng = np.random.default_rng(self.seed)
        perm = rng.permutation(len(ids))
        test = tuple(sorted(ids[i] for i in perm[:n_test]))
        train = tuple(sorted(ids[i] for i in perm[n_test:]))
        return SplitResult(train_cell_ids=train, test_cell_ids=test)


class ExplicitTrainTestSplitter(BaseTrainTestSplitter):
    """Partition given directly as two ID lists.

    Every listed cell must be present in the corpus; corpus cells not
    listed are dropped from the experiment.
    """

    def __init__(self, train_ids: Sequence[str], test_ids: Sequence[str],
                 metadata: dict | None = None):
        self._result = SplitResult(
            train_cell_ids=tuple(train_ids),
            test_cell_ids=tuple(test_ids),
            metadata=dict(metadata or {}),
        )

    def split(self, cell_ids: Sequence[str]) -> SplitResult:
        available = set(cell_ids)
        missing = [c for c in self._result.train_cell_ids + self._result.test_cell_ids
                   if c not in available]
        if missing:
            raise SplitError(f"cells listed in split but absent from corpus: {missing}")
        return self._result


class FixedSplitTrainTestSplitter(ExplicitTrainTestSplitter):
    """Partition loaded from a JSON file {train: [...], test: [...], metadata: {...}}."""

    def __init__(self, path: str | Path):
        path = Path(path)
        if not path.is_file():
            raise SplitError(f"split file not found: {path}")
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SplitError(f"{path}: not valid JSON: {exc}") from exc
        result = SplitResult.from_dict(payload)
        super().__init__(result.train_cell_ids, result.test_cell_ids, result.metadata)


# Packaged dataset compositions.  Keys are short dataset names; values are
# the data files under cellforge/data/splits.
PACKAGED_SPLITS = {
    "MATR1": "matr1.json",
    "MATR2": "matr2.json",
    "CLO": "clo.json",
    "HUST": "hust.json",
    "SNL": "snl.json",
    "CRUH": "cruh.json",
    "CRUSH": "crush.json",
    "MIX": "mix.json",
}


def packaged_split_path(dataset: str) -> Path:
    """Filesystem path of a packaged split file, e.g. packaged_split_path('MATR1')."""
    key = dataset.upper()
    if key not in PACKAGED_SPLITS:
        raise SplitError(
            f"unknown packaged split {dataset!r}; available: {', '.join(sorted(PACKAGED_SPLITS))}"
        )
    return Path(resources.files("cellforge") / "data" / "splits" / PACKAGED_SPLITS[key])


def _packaged_splitter(dataset: str):
    class _Fixed(FixedSplitTrainTestSplitter):
        def __init__(self):
            super().__init__(packaged_split_path(dataset))

    _Fixed.__name__ = f"{dataset}TrainTestSplitter"
    _Fixed.__qualname__ = _Fixed.__name__
    _Fixed.__doc__ = f"Packaged {dataset} dataset composition."
    return _Fixed


MATRPrimaryTestTrainTestSplitter = _packaged_splitter("MATR1")
MATRSecondaryTestTrainTestSplitter = _packaged_splitter("MATR2")
MATRCLOTrainTestSplitter = _packaged_splitter("CLO")
HUSTTrainTestSplitter = _packaged_splitter("HUST")
SNLTrainTestSplitter = _packaged_splitter("SNL")
CRUHTrainTestSplitter = _packaged_splitter("CRUH")
CRUSHTrainTestSplitter = _packaged_splitter("CRUSH")
MIXTrainTestSplitter = _packaged_splitter("MIX")

__all__ += [
    "MATRPrimaryTestTrainTestSplitter",
    "MATRSecondaryTestTrainTestSplitter",
    "MATRCLOTrainTestSplitter",
    "HUSTTrainTestSplitter",
    "SNLTrainTestSplitter",
    "CRUHTrainTestSplitter",
    "CRUSHTrainTestSplitter",
    "MIXTrainTestSplitter",
]
