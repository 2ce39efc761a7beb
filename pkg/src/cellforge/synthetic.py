"""Deterministic synthetic degradation corpora for desk-scale work.

Fade model: the full discharge capacity at cycle n follows

    C(n) = C0 * (1 - a * n**1.7)                          for n <= knee
    C(n) = C0 * (1 - a * n**1.7 - c * (n - knee)**2)      for n >  knee

with per-cell coefficients calibrated so SOH crosses 80% exactly at the
drawn integer cycle life (the curve passes 0.8 at life - 0.5, leaving a
half-cycle margin on either side against float jitter) and the knee sits at
``knee_fraction * life``. Cells are cycled on until SOH first drops below
70%, inclusive of that final cycle.

Each cycle is a CC charge at 1C to the maximum voltage, a CV hold during
which the current ramps linearly to zero, then a CC discharge at 2C to the
minimum voltage. With zero noise the discharge capacity is exactly linear in
voltage, which makes the between-cycle capacity-difference features analytic.
Gaussian noise (``noise_sigma``) perturbs the voltage signal only.

Determinism: cell i uses the sub-seed ``seed XOR i`` (masked to 64 bits), so
corpora are reproducible cell-by-cell regardless of generation order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .battery_data import CellRecord, CycleRecord, ProtocolStep

# Fractional capacity lost at end of life: 16% through the power law plus 4%
# through the post-knee quadratic, totalling the 20% that defines EOL.
_POWER = 1.7
_PRE_KNEE_FADE = 0.16
_KNEE_FADE = 0.04
_SOH_FLOOR = 0.70  # generation stops at the first cycle below this fraction
_MIN_LIFE = 10

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic corpus."""

    n_cells: int = 10
    nominal_capacity_in_Ah: float = 1.1
    voltage_min_V: float = 2.0
    voltage_max_V: float = 3.6
    cycle_life_mean: float = 823.0
    cycle_life_std: float = 368.0
    points_per_cycle: int = 64
    knee_fraction: float = 0.9
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError(f"n_cells must be >= 1, got {self.n_cells}")
        if not self.nominal_capacity_in_Ah > 0:
            raise ValueError("nominal_capacity_in_Ah must be > 0")
        if not self.voltage_min_V < self.voltage_max_V:
            raise ValueError("voltage_min_V must be < voltage_max_V")
        if not self.cycle_life_mean > 0:
            raise ValueError("cycle_life_mean must be > 0")
        if self.cycle_life_std < 0:
            raise ValueError("cycle_life_std must be >= 0")
        if self.points_per_cycle < 16:
            raise ValueError(f"points_per_cycle must be >= 16, got {self.points_per_cycle}")
        if not 0.0 < self.knee_fraction < 1.0:
            raise ValueError("knee_fraction must be within (0, 1)")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def fade_curve(n: np.ndarray | int, life: int, knee_fraction: float) -> np.ndarray:
    """SOH fraction at cycle(s) ``n`` for a cell with the given cycle life.

    This is the generator's analytic fade law; tests use it as the oracle for
    the SOH label. ``fade_curve(life - 1) >= 0.8 > fade_curve(life)`` holds
    for every ``life >= 2``.
    """
    n = np.asarray(n, dtype=float)
    scale = life - 0.5
    a = _PRE_KNEE_FADE / scale**_POWER
    knee = knee_fraction * scale
    c = _KNEE_FADE / (scale - knee) ** 2
    soh = 1.0 - a * n**_POWER
    past = n > knee
    soh = np.where(past, soh - c * (n - knee) ** 2, soh)
    return soh


def _cell_life(rng: np.random.Generator, spec: SynthSpec) -> int:
    raw = rng.normal(spec.cycle_life_mean, spec.cycle_life_std)
    return max(_MIN_LIFE, int(round(raw)))


def _n_cycles(life: int, knee_fraction: float) -> int:
    # First cycle with SOH < 70%, inclusive. The quadratic term guarantees
    # the floor is reached; 3x life is a safe search bound.
    hi = max(int(3 * life), life + 10)
    n = np.arange(1, hi + 1)
    soh = fade_curve(n, life, knee_fraction)
    below = np.nonzero(soh < _SOH_FLOOR)[0]
    return int(below[0]) + 1 if below.size else hi


def _cycle_arrays(c_n, c0, v_min, v_max, ppc, rng, noise_sigma):
    """One cycle's signals: CC charge at 1C, CV hold, CC discharge at 2C."""
    n_cc = max(2, round(0.4 * ppc))
    n_cv = max(2, round(0.2 * ppc))
    n_dis = max(2, ppc - n_cc - n_cv)
    t1 = 0.8 * c_n / c0  # hours of CC charge (fills 80% of the cycle capacity)
    t2 = 0.4 * c_n / c0  # CV hold; triangular current fills the last 20%
    t3 = 0.5 * c_n / c0  # CC discharge at 2C
    t_cc = np.linspace(0.0, t1, n_cc)
    u = np.linspace(0.0, 1.0, n_cv + 1)[1:]  # CV progress; exact 1.0 at the end
    t_cv = t1 + t2 * u
    t_ds = np.linspace(t1 + t2, t1 + t2 + t3, n_dis + 1)[1:]

    i_cc = np.full(n_cc, c0)
    i_cv = c0 * (1.0 - u)  # ends at exactly 0 A, never dips negative
    i_ds = np.full(n_dis, -2.0 * c0)

    qc_cc = c0 * t_cc
    qc_cv = 0.8 * c_n + 0.2 * c_n * (2.0 * u - u * u)
    qc_cv[-1] = c_n  # close the integral exactly
    qc_ds = np.full(n_dis, c_n)

    qd_ds = 2.0 * c0 * (t_ds - (t1 + t2))
    qd_ds[-1] = c_n  # close the integral exactly
    qd = np.concatenate([np.zeros(n_cc + n_cv), qd_ds])

    v_cc = v_min + (v_max - v_min) * (t_cc / t1)
    v_cv = np.full(n_cv, v_max)
    v_ds = v_max - (v_max - v_min) * (qd_ds / c_n)

    t = np.concatenate([t_cc, t_cv, t_ds]) * 3600.0
    i = np.concatenate([i_cc, i_cv, i_ds])
    qc = np.concatenate([qc_cc, qc_cv, qc_ds])
    v = np.concatenate([v_cc, v_cv, v_ds])
    if noise_sigma > 0:
        v = v + rng.normal(0.0, noise_sigma, v.size)
    return t, v, i, qc, qd


def _make_cell(spec: SynthSpec, index: int) -> CellRecord:
    rng = np.random.default_rng((spec.seed ^ index) & _MASK64)
    life = _cell_life(rng, spec)
    n_cycles = _n_cycles(life, spec.knee_fraction)
    soh = fade_curve(np.arange(1, n_cycles + 1), life, spec.knee_fraction)

    c0 = spec.nominal_capacity_in_Ah
    cycles = []
    for n in range(1, n_cycles + 1):
        c_n = c0 * soh[n - 1]
        t, v, i, qc, qd = _cycle_arrays(
            c_n, c0, spec.voltage_min_V, spec.voltage_max_V,
            spec.points_per_cycle, rng, spec.noise_sigma,
        )
        cycles.append(
            CycleRecord(
                cycle_number=n,
                voltage_in_V=v,
                current_in_A=i,
                charge_capacity_in_Ah=qc,
                discharge_capacity_in_Ah=qd,
                time_in_s=t,
                temperature_in_C=np.full(t.size, 30.0),
                internal_resistance_in_ohm=0.015 * (1.0 + 0.5 * (1.0 - soh[n - 1])),
            )
        )

    return CellRecord(
        cell_id=f"SYN_{index:04d}",
        cycle_data=tuple(cycles),
        form_factor="cylindrical_18650",
        anode_material="graphite",
        cathode_material="LFP",
        nominal_capacity_in_Ah=c0,
        depth_of_charge=1.0,
        depth_of_discharge=1.0,
        already_spent_cycles=0,
        max_voltage_limit_in_V=spec.voltage_max_V,
        min_voltage_limit_in_V=spec.voltage_min_V,
        max_current_limit_in_A=c0,
        min_current_limit_in_A=-2.0 * c0,
        charge_protocol=(
            ProtocolStep(rate_in_C=1.0, start_soc=0.0, end_soc=0.8, end_voltage_in_V=spec.voltage_max_V),
            ProtocolStep(voltage_in_V=spec.voltage_max_V, start_soc=0.8, end_soc=1.0),
        ),
        discharge_protocol=(
            ProtocolStep(rate_in_C=2.0, start_soc=1.0, end_soc=0.0, end_voltage_in_V=spec.voltage_min_V),
        ),
        description="synthetic degradation corpus cell",
    )


def generate_synthetic(spec: SynthSpec, jobs: int = 1) -> list[CellRecord]:
    """Generate ``spec.n_cells`` cells; deterministic in ``spec`` alone."""
    if jobs <= 1:
        return [_make_cell(spec, i) for i in range(spec.n_cells)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda i: _make_cell(spec, i), range(spec.n_cells)))
