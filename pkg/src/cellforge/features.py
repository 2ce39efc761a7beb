"""Feature extraction from cycling records.

Conventions used throughout this module:

* Cycle indices are 0-based positions into ``cell.cycle_data`` (index 9 is
  the tenth recorded cycle). Written ranges such as "cycles 2..99" are
  0-based and inclusive.
* ``qdlinear`` resamples a cycle's discharge capacity onto a uniform voltage
  grid running from ``v_max`` down to ``v_min``. Grid bounds default to the
  cell's voltage limits and may be overridden per extractor.
* Statistics of capacity-difference vectors are population moments; variance
  features take log10 with a 1e-12 floor, the multi-feature extractors take
  raw log10 and rely on sanitization.
* Extractor output is sanitized: NaN and +/-Inf entries become 0.0.

Extractors registered for pipeline use share one shape of contract:
``process_cell(cell) -> (values (k, d), row_keys)`` and
``extract(cells, jobs=1) -> FeatureMatrix``.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .battery_data import CellRecord, CycleRecord
from .errors import FeatureError

VARIANCE_FLOOR = 1e-12
COULOMBIC_EPS = 1e-5
_DEGENERATE_SPAN_V = 1e-6


def voltage_bounds(cell: CellRecord, v_min=None, v_max=None) -> tuple[float, float]:
    """Interpolation bounds: explicit overrides, else the cell's limits."""
    lo = v_min if v_min is not None else cell.min_voltage_limit_in_V
    hi = v_max if v_max is not None else cell.max_voltage_limit_in_V
    if lo is None or hi is None:
        raise FeatureError(
            f"{cell.cell_id}: voltage bounds unavailable (no cell limits; pass v_min/v_max)"
        )
    if not lo < hi:
        raise FeatureError(f"{cell.cell_id}: voltage bounds must satisfy v_min < v_max")
    return float(lo), float(hi)


def qdlinear(cycle: CycleRecord, v_min: float, v_max: float, interp_dims: int) -> np.ndarray:
    """Discharge capacity resampled onto a uniform descending voltage grid.

    Parameters
    ----------
    cycle : CycleRecord
        Must contain a discharge segment (current < 0) of >= 2 samples whose
        observed voltage span is at least 1e-6 V.
    v_min, v_max : float
        Grid endpoints; the grid runs from ``v_max`` down to ``v_min``.
    interp_dims : int
        Number of grid points (>= 2).

    Returns
    -------
    numpy.ndarray
        ``interp_dims`` capacities. Within the observed span the value is the
        piecewise-linear interpolant of the (voltage, discharge capacity)
        samples with exact-duplicate voltages averaged; outside it, the
        nearest endpoint value (clamping).
    """
    if interp_dims < 2:
        raise ValueError(f"interp_dims must be >= 2, got {interp_dims}")
    if not v_min < v_max:
        raise ValueError("v_min must be < v_max")
    current = np.asarray(cycle.current_in_A)
    mask = current < 0
    if np.count_nonzero(mask) < 2:
        raise FeatureError(
            f"cycle {cycle.cycle_number}: no discharge segment (need >= 2 samples with current < 0)"
        )
    v = np.asarray(cycle.voltage_in_V)[mask]
    q = np.asarray(cycle.discharge_capacity_in_Ah)[mask]
    if v.max() - v.min() < _DEGENERATE_SPAN_V:
        raise FeatureError(
            f"cycle {cycle.cycle_number}: degenerate discharge voltage span "
            f"({v.max() - v.min():.2e} V)"
        )
    vu, inverse = np.unique(v, return_inverse=True)
    qu = np.bincount(inverse, weights=q) / np.bincount(inverse)
    grid = np.linspace(v_max, v_min, interp_dims)
    return np.interp(grid[::-1], vu, qu)[::-1]


def delta_q(
    cell: CellRecord,
    late_index: int,
    early_index: int,
    *,
    interp_dims: int = 1000,
    v_min=None,
    v_max=None,
) -> np.ndarray:
    """Between-cycle capacity difference Qd_late(V) - Qd_early(V) on the grid."""
    lo, hi = voltage_bounds(cell, v_min, v_max)
    n = len(cell.cycle_data)
    for idx in (late_index, early_index):
        if not 0 <= idx < n:
            raise FeatureError(f"{cell.cell_id}: cycle index {idx} out of range (have {n})")
    late = _cached_or_computed_qdlin(cell, late_index, lo, hi, interp_dims, False)
    early = _cached_or_computed_qdlin(cell, early_index, lo, hi, interp_dims, False)
    return late - early


def coulombic_efficiency(cycle: CycleRecord) -> float:
    """Final discharge capacity over final charge capacity of one cycle."""
    qd = cycle.discharge_capacity_in_Ah
    qc = cycle.charge_capacity_in_Ah
    if not qd or not qc:
        raise FeatureError(f"cycle {cycle.cycle_number}: empty capacity sequences")
    return qd[-1] / (qc[-1] + COULOMBIC_EPS)


def estimate_internal_resistance(cycle: CycleRecord) -> float:
    """|dV/dI| across the largest current step within the cycle.

    A fallback for sources that do not record the per-cycle scalar; not used
    implicitly by any extractor.
    """
    i = np.asarray(cycle.current_in_A)
    v = np.asarray(cycle.voltage_in_V)
    if len(i) < 2:
        raise FeatureError(f"cycle {cycle.cycle_number}: need >= 2 samples")
    di = np.diff(i)
    k = int(np.argmax(np.abs(di)))
    if abs(di[k]) < 1e-12:
        raise FeatureError(f"cycle {cycle.cycle_number}: current is constant; cannot estimate dV/dI")
    return abs((v[k + 1] - v[k]) / di[k])


def _moments(x: np.ndarray) -> tuple[float, float, float, float]:
    """(min, population variance, skewness m3/m2^1.5, kurtosis m4/m2^2)."""
    x = np.asarray(x, dtype=float)
    mu = x.mean()
    d = x - mu
    m2 = np.mean(d**2)
    m3 = np.mean(d**3)
    m4 = np.mean(d**4)
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = m3 / m2**1.5
        kurt = m4 / m2**2
    return float(x.min()), float(m2), float(skew), float(kurt)


def sanitize(values: np.ndarray) -> np.ndarray:
    """Replace NaN and +/-Inf feature entries with 0.0."""
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        values = values.copy()
        values[bad] = 0.0
    return values


# ---------------------------------------------------------------------------
# qdlinear cache stored in the cell's side map

def _cached_or_computed_qdlin(cell, cycle_index, v_min, v_max, interp_dims, use_cache):
    # Cache hits require an exact (v_min, v_max, interp_dims) match; anything
    # else falls back to direct interpolation.
    if use_cache:
        block = cell.extra.get("qdlinear")
        if isinstance(block, dict) and _cache_matches(block, v_min, v_max, interp_dims):
            values = block.get("values", [])
            if cycle_index < len(values):
                row = np.asarray(values[cycle_index], dtype=float)
                if row.shape == (interp_dims,):
                    return row
    return qdlinear(cell.cycle_data[cycle_index], v_min, v_max, interp_dims)


def _cache_matches(block, v_min, v_max, interp_dims):
    try:
        return (
            float(block["v_min"]) == v_min
            and float(block["v_max"]) == v_max
            and int(block["interp_dims"]) == interp_dims
        )
    except (KeyError, TypeError, ValueError):
        return False


def attach_qdlinear_cache(cell: CellRecord, *, interp_dims: int, v_min=None, v_max=None) -> CellRecord:
    """Return a copy of ``cell`` carrying a qdlinear cache in its side map."""
    lo, hi = voltage_bounds(cell, v_min, v_max)
    values = [qdlinear(c, lo, hi, interp_dims).tolist() for c in cell.cycle_data]
    extra = dict(cell.extra)
    extra["qdlinear"] = {"v_min": lo, "v_max": hi, "interp_dims": interp_dims, "values": values}
    return CellRecord(
        **{f: getattr(cell, f) for f in (
            "cell_id", "nominal_capacity_in_Ah", "cycle_data", "form_factor",
            "anode_material", "cathode_material", "electrolyte_material",
            "depth_of_charge", "depth_of_discharge", "already_spent_cycles",
            "max_voltage_limit_in_V", "min_voltage_limit_in_V",
            "max_current_limit_in_A", "min_current_limit_in_A",
            "charge_protocol", "discharge_protocol", "description",
        )},
        extra=extra,
    )


# ---------------------------------------------------------------------------
# Feature matrix container

@dataclass
class FeatureMatrix:
    """2-D feature values plus row keys and column names.

    Persisted as a columnar ``.npy`` binary next to a JSON header carrying
    ``col_names`` and ``row_keys``.
    """

    values: np.ndarray
    row_keys: list[tuple]
    col_names: list[str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError(f"feature values must be 2-D, got shape {self.values.shape}")
        if self.values.shape[0] != len(self.row_keys):
            raise ValueError("row count and row keys disagree")
        if self.values.shape[1] != len(self.col_names):
            raise ValueError("column count and column names disagree")

    def save(self, base) -> tuple[Path, Path]:
        base = Path(base)
        npy = base.with_suffix(".npy")
        hdr = base.with_suffix(".json")
        np.save(npy, self.values)
        with open(hdr, "w", encoding="utf-8") as fh:
            json.dump(
                {"col_names": self.col_names, "row_keys": [list(k) for k in self.row_keys]},
                fh,
            )
        return npy, hdr

    @classmethod
    def load(cls, base) -> "FeatureMatrix":
        base = Path(base)
        values = np.load(base.with_suffix(".npy"))
        with open(base.with_suffix(".json"), encoding="utf-8") as fh:
            header = json.load(fh)
        keys = [tuple(k) for k in header["row_keys"]]
        return cls(values=values, row_keys=keys, col_names=list(header["col_names"]))


class BaseFeatureExtractor:
    """Shared per-cell iteration, sanitization, and matrix assembly."""

    #: cycle indices the extractor reads; checked against observed_cycles
    def __init__(self, observed_cycles: int | None = None):
        if observed_cycles is not None and observed_cycles < 1:
            raise ValueError("observed_cycles must be >= 1")
        self.observed_cycles = observed_cycles

    def _check_observed(self, indices):
        if self.observed_cycles is None:
            return
        bad = [i for i in indices if i >= self.observed_cycles]
        if bad:
            raise FeatureError(
                f"{type(self).__name__}: cycle indices {bad} exceed the observed-cycle "
                f"budget of {self.observed_cycles}"
            )

    def _require_cycles(self, cell, count):
        if len(cell.cycle_data) < count:
            raise FeatureError(
                f"{cell.cell_id}: needs >= {count} cycles, has {len(cell.cycle_data)}"
            )

    def process_cell(self, cell: CellRecord) -> tuple[np.ndarray, list[tuple]]:
        raise NotImplementedError

    def extract(self, cells: list[CellRecord], jobs: int = 1) -> FeatureMatrix:
        if not cells:
            raise FeatureError("no cells to extract features from")
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                parts = list(pool.map(self.process_cell, cells))
        else:
            parts = [self.process_cell(c) for c in cells]
        values = np.vstack([p[0] for p in parts])
        keys = [k for p in parts for k in p[1]]
        return FeatureMatrix(values=sanitize(values), row_keys=keys, col_names=list(self.col_names))


class VarianceModelFeatureExtractor(BaseFeatureExtractor):
    """Single feature: log10 variance (floored) of the late-minus-early
    capacity-difference curve between two critical cycles."""

    col_names = ["log10_var_delta_qdlin"]

    def __init__(
        self,
        interp_dims: int = 1000,
        critical_cycles=(2, 9, 99),
        use_precalculated_qdlin: bool = False,
        v_min=None,
        v_max=None,
        observed_cycles: int | None = None,
    ):
        super().__init__(observed_cycles)
        if interp_dims < 2:
            raise ValueError("interp_dims must be >= 2")
        if len(critical_cycles) != 3:
            raise ValueError("critical_cycles must list three 0-based cycle indices")
        self.interp_dims = int(interp_dims)
        self.critical_cycles = tuple(int(c) for c in critical_cycles)
        self.use_precalculated_qdlin = bool(use_precalculated_qdlin)
        self.v_min = v_min
        self.v_max = v_max
        self._check_observed(self.critical_cycles)

    def _delta(self, cell):
        _, early, late = self.critical_cycles
        self._require_cycles(cell, late + 1)
        lo, hi = voltage_bounds(cell, self.v_min, self.v_max)
        q_late = _cached_or_computed_qdlin(cell, late, lo, hi, self.interp_dims, self.use_precalculated_qdlin)
        q_early = _cached_or_computed_qdlin(cell, early, lo, hi, self.interp_dims, self.use_precalculated_qdlin)
        return q_late - q_early

    def process_cell(self, cell):
        dq = self._delta(cell)
        var = max(float(np.var(dq)), VARIANCE_FLOOR)
        return np.array([[np.log10(var)]]), [(cell.cell_id, None, None)]


class DischargeModelFeatureExtractor(VarianceModelFeatureExtractor):
    """Six cell-level features of the capacity-difference curve and the
    early discharge capacities."""

    col_names = [
        "log10_abs_min_delta_q",
        "log10_var_delta_q",
        "log10_abs_skew_delta_q",
        "log10_abs_kurt_delta_q",
        "discharge_capacity_at_cap_cycle",
        "max_discharge_capacity_minus_cap_cycle",
    ]

    def _discharge_vector(self, cell):
        cap_idx, _, late = self.critical_cycles
        dq = self._delta(cell)
        mn, var, skew, kurt = _moments(dq)
        caps = [max(c.discharge_capacity_in_Ah) for c in cell.cycle_data[: late + 1]]
        with np.errstate(divide="ignore", invalid="ignore"):
            row = np.array(
                [
                    np.log10(abs(mn)),
                    np.log10(var),
                    np.log10(abs(skew)),
                    np.log10(abs(kurt)),
                    caps[cap_idx],
                    max(caps) - caps[cap_idx],
                ]
            )
        return row

    def process_cell(self, cell):
        return self._discharge_vector(cell)[None, :], [(cell.cell_id, None, None)]


class FullModelFeatureExtractor(DischargeModelFeatureExtractor):
    """Discharge features plus charge time, temperature integral, and
    internal-resistance drift (entries sanitize to 0 when signals are absent)."""

    col_names = DischargeModelFeatureExtractor.col_names + [
        "mean_charge_time_s",
        "log10_abs_temperature_integral",
        "internal_resistance_rise_ohm",
    ]

    # 0-based inclusive index ranges read by the extra signals
    CHARGE_TIME_CYCLES = (2, 6)
    INTEGRAL_CYCLES = (2, 99)

    def _charge_time(self, cycle):
        i = np.asarray(cycle.current_in_A)
        t = np.asarray(cycle.time_in_s)
        charging = np.nonzero(i > 0)[0]
        if charging.size < 2:
            return np.nan
        return t[charging[-1]] - t[charging[0]]

    def process_cell(self, cell):
        lo, hi = self.CHARGE_TIME_CYCLES
        self._require_cycles(cell, max(hi + 1, self.critical_cycles[2] + 1, self.INTEGRAL_CYCLES[1] + 1))
        base = self._discharge_vector(cell)
        charge_times = [self._charge_time(c) for c in cell.cycle_data[lo : hi + 1]]
        mean_ct = float(np.mean(charge_times))

        lo_i, hi_i = self.INTEGRAL_CYCLES
        integral = 0.0
        for cyc in cell.cycle_data[lo_i : hi_i + 1]:
            if cyc.temperature_in_C is None:
                integral = np.nan
                break
            integral += np.trapezoid(np.asarray(cyc.temperature_in_C), np.asarray(cyc.time_in_s))
        with np.errstate(divide="ignore", invalid="ignore"):
            log_integral = np.log10(abs(integral))

        resistances = [c.internal_resistance_in_ohm for c in cell.cycle_data[lo_i : hi_i + 1]]
        present = [r for r in resistances if r is not None]
        if resistances and resistances[0] is not None and present:
            ir_rise = resistances[0] - min(present)
        else:
            ir_rise = np.nan

        row = np.concatenate([base, [mean_ct, log_integral, ir_rise]])
        return row[None, :], [(cell.cell_id, None, None)]


class VoltageCapacityMatrixFeatureExtractor(BaseFeatureExtractor):
    """Per-cell matrix of capacity-difference curves against a base cycle.

    Row j is ``qdlinear(cycle j) - qdlinear(cycle diff_base)`` for the first
    ``cycles_to_keep`` cycles with index <= ``max_cycle_index``; rows are
    flattened for tabular models.
    """

    def __init__(
        self,
        interp_dims: int = 1000,
        diff_base: int = 9,
        max_cycle_index: int = 99,
        cycles_to_keep: int = 100,
        use_precalculated_qdlin: bool = False,
        v_min=None,
        v_max=None,
        observed_cycles: int | None = None,
    ):
        super().__init__(observed_cycles)
        if interp_dims < 2:
            raise ValueError("interp_dims must be >= 2")
        if diff_base < 0 or max_cycle_index < 0 or cycles_to_keep < 1:
            raise ValueError("diff_base/max_cycle_index must be >= 0 and cycles_to_keep >= 1")
        self.interp_dims = int(interp_dims)
        self.diff_base = int(diff_base)
        self.max_cycle_index = int(max_cycle_index)
        self.cycles_to_keep = int(cycles_to_keep)
        self.use_precalculated_qdlin = bool(use_precalculated_qdlin)
        self.v_min = v_min
        self.v_max = v_max
        self.row_indices = list(range(min(self.cycles_to_keep, self.max_cycle_index + 1)))
        self._check_observed([self.diff_base, self.row_indices[-1]])
        self.col_names = [
            f"dq_c{j}_v{k}" for j in self.row_indices for k in range(self.interp_dims)
        ]

    def matrix(self, cell) -> np.ndarray:
        """The unflattened (cycles_to_keep, interp_dims) matrix of one cell."""
        self._require_cycles(cell, max(self.row_indices[-1], self.diff_base) + 1)
        lo, hi = voltage_bounds(cell, self.v_min, self.v_max)
        base = _cached_or_computed_qdlin(
            cell, self.diff_base, lo, hi, self.interp_dims, self.use_precalculated_qdlin
        )
        rows = [
            _cached_or_computed_qdlin(cell, j, lo, hi, self.interp_dims, self.use_precalculated_qdlin) - base
            for j in self.row_indices
        ]
        return np.vstack(rows)

    def process_cell(self, cell):
        return self.matrix(cell).reshape(1, -1), [(cell.cell_id, None, None)]


def soh_cycle_features(cell: CellRecord, cycle_index: int) -> np.ndarray:
    """Per-cycle SOH features: normalized charge capacity, first-cycle
    voltage statistics, coulombic efficiency, and the cycle number."""
    if not cell.cycle_data:
        raise FeatureError(f"{cell.cell_id}: no cycles")
    if not 0 <= cycle_index < len(cell.cycle_data):
        raise FeatureError(f"{cell.cell_id}: cycle index {cycle_index} out of range")
    cyc = cell.cycle_data[cycle_index]
    v0 = np.asarray(cell.cycle_data[0].voltage_in_V)
    return sanitize(
        np.array(
            [
                max(cyc.charge_capacity_in_Ah) / cell.nominal_capacity_in_Ah,
                v0.mean(),
                v0.min(),
                v0.max(),
                coulombic_efficiency(cyc),
                float(cyc.cycle_number),
            ]
        )
    )


SOH_CYCLE_COL_NAMES = [
    "max_charge_capacity_ratio",
    "first_cycle_voltage_mean",
    "first_cycle_voltage_min",
    "first_cycle_voltage_max",
    "coulombic_efficiency",
    "cycle_number",
]


def soc_step_features(
    cell: CellRecord,
    cycle_index: int,
    *,
    n_qdlin: int = 32,
    v_min=None,
    v_max=None,
) -> tuple[np.ndarray, list[str]]:
    """Per-step SOC features of one cycle.

    Columns: the step's current, voltage, and elapsed time, then the previous
    cycle's qdlinear curve downsampled to ``n_qdlin`` points and broadcast to
    every step. For the first cycle the block is zero-filled and the block's
    column names carry a ``(zero_filled)`` marker.
    """
    if not 0 <= cycle_index < len(cell.cycle_data):
        raise FeatureError(f"{cell.cell_id}: cycle index {cycle_index} out of range")
    cyc = cell.cycle_data[cycle_index]
    t = np.asarray(cyc.time_in_s)
    base = np.column_stack(
        [np.asarray(cyc.current_in_A), np.asarray(cyc.voltage_in_V), t - t[0]]
    )
    names = ["current_in_A", "voltage_in_V", "elapsed_time_s"]
    if cycle_index == 0:
        block = np.zeros((len(t), n_qdlin))
        names += [f"prev_qdlin_{k:02d}(zero_filled)" for k in range(n_qdlin)]
    else:
        lo, hi = voltage_bounds(cell, v_min, v_max)
        prev = qdlinear(cell.cycle_data[cycle_index - 1], lo, hi, n_qdlin)
        block = np.tile(prev, (len(t), 1))
        names += [f"prev_qdlin_{k:02d}" for k in range(n_qdlin)]
    return sanitize(np.hstack([base, block])), names


class SOHCycleFeatureExtractor(BaseFeatureExtractor):
    """One row per (cell, cycle) of :func:`soh_cycle_features`."""

    col_names = SOH_CYCLE_COL_NAMES

    def __init__(self, max_cycle_index: int | None = None, observed_cycles: int | None = None):
        super().__init__(observed_cycles)
        self.max_cycle_index = max_cycle_index

    def _stop(self, cell):
        stop = len(cell.cycle_data)
        caps = [c for c in (self.max_cycle_index, None if self.observed_cycles is None else self.observed_cycles - 1) if c is not None]
        if caps:
            stop = min(stop, min(caps) + 1)
        return stop

    def process_cell(self, cell):
        stop = self._stop(cell)
        rows = [soh_cycle_features(cell, i) for i in range(stop)]
        keys = [(cell.cell_id, cell.cycle_data[i].cycle_number, None) for i in range(stop)]
        return np.vstack(rows), keys


class SOCStepFeatureExtractor(SOHCycleFeatureExtractor):
    """One row per (cell, cycle, step); zero-filled first-cycle history is
    flagged by an indicator column so column names stay uniform."""

    def __init__(
        self,
        n_qdlin: int = 32,
        max_cycle_index: int | None = None,
        v_min=None,
        v_max=None,
        observed_cycles: int | None = None,
    ):
        super().__init__(max_cycle_index, observed_cycles)
        self.n_qdlin = int(n_qdlin)
        self.v_min = v_min
        self.v_max = v_max
        self.col_names = (
            ["current_in_A", "voltage_in_V", "elapsed_time_s"]
            + [f"prev_qdlin_{k:02d}" for k in range(self.n_qdlin)]
            + ["prev_qdlin_zero_filled"]
        )

    def process_cell(self, cell):
        blocks, keys = [], []
        for idx in range(self._stop(cell)):
            rows, _ = soc_step_features(
                cell, idx, n_qdlin=self.n_qdlin, v_min=self.v_min, v_max=self.v_max
            )
            flag = np.full((rows.shape[0], 1), 1.0 if idx == 0 else 0.0)
            blocks.append(np.hstack([rows, flag]))
            number = cell.cycle_data[idx].cycle_number
            keys.extend((cell.cell_id, number, step) for step in range(rows.shape[0]))
        return np.vstack(blocks), keys


class CapacityFadeSlopeFeatureExtractor(BaseFeatureExtractor):
    """Least-squares slope of SOH over an early cycle window (percent/cycle).

    Captures the capacity decay dynamic as a standalone single feature.
    """

    col_names = ["soh_slope_percent_per_cycle"]

    def __init__(self, first_cycle: int = 2, last_cycle: int = 99, observed_cycles: int | None = None):
        super().__init__(observed_cycles)
        if not 0 <= first_cycle < last_cycle:
            raise ValueError("need 0 <= first_cycle < last_cycle")
        self.first_cycle = first_cycle
        self.last_cycle = last_cycle
        self._check_observed([last_cycle])

    def process_cell(self, cell):
        from .labels import soh_per_cycle

        self._require_cycles(cell, self.last_cycle + 1)
        soh = soh_per_cycle(cell)[self.first_cycle : self.last_cycle + 1]
        n = np.arange(self.first_cycle, self.last_cycle + 1, dtype=float)
        slope = np.polyfit(n, soh, 1)[0]
        return np.array([[slope]]), [(cell.cell_id, None, None)]
