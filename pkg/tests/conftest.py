"""Shared builders, strategies, and fixtures for the test suite."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from cellforge.battery_data import CellRecord, CycleRecord, ProtocolStep
from cellforge.synthetic import SynthSpec, generate_synthetic

V_MIN, V_MAX = 2.0, 3.6


def linear_cycle(
    number: int,
    *,
    c_full: float = 1.0,
    c_charge: float | None = None,
    n_charge: int = 4,
    n_dis: int = 8,
    v_min: float = V_MIN,
    v_max: float = V_MAX,
    temperature: float | None = None,
    internal_resistance: float | None = None,
) -> CycleRecord:
    """A charge-then-discharge cycle whose Qd(V) is exactly linear.

    Charge: ``n_charge`` samples at +1 A ramping voltage v_min -> v_max and
    charge capacity 0 -> c_charge (default c_full). Discharge: ``n_dis``
    samples at -1 A stepping discharge capacity up to exactly ``c_full``
    with voltage linear in capacity.
    """
    c_charge = c_full if c_charge is None else c_charge
    t_c = np.arange(n_charge, dtype=float) * 60.0
    v_c = v_min + (v_max - v_min) * (np.arange(n_charge) / max(n_charge - 1, 1))
    qc_c = c_charge * (np.arange(n_charge) / max(n_charge - 1, 1))

    k = np.arange(1, n_dis + 1, dtype=float)
    qd_d = c_full * (k / n_dis)  # fraction first: the last sample is exactly c_full
    v_d = v_max - (v_max - v_min) * (qd_d / c_full)
    t_d = t_c[-1] + k * 60.0

    return CycleRecord(
        cycle_number=number,
        voltage_in_V=np.concatenate([v_c, v_d]),
        current_in_A=np.concatenate([np.ones(n_charge), -np.ones(n_dis)]),
        charge_capacity_in_Ah=np.concatenate([qc_c, np.full(n_dis, c_charge)]),
        discharge_capacity_in_Ah=np.concatenate([np.zeros(n_charge), qd_d]),
        time_in_s=np.concatenate([t_c, t_d]),
        temperature_in_C=None if temperature is None else np.full(n_charge + n_dis, temperature),
        internal_resistance_in_ohm=internal_resistance,
    )


def make_cell(
    cell_id: str = "CELL_A",
    caps=(1.0, 0.95, 0.9),
    *,
    nominal: float = 1.0,
    v_min: float = V_MIN,
    v_max: float = V_MAX,
    n_dis: int = 8,
    **cell_kwargs,
) -> CellRecord:
    """A valid cell with one linear cycle per entry of ``caps``."""
    cycles = tuple(
        linear_cycle(i + 1, c_full=c, v_min=v_min, v_max=v_max, n_dis=n_dis)
        for i, c in enumerate(caps)
    )
    return CellRecord(
        cell_id=cell_id,
        nominal_capacity_in_Ah=nominal,
        cycle_data=cycles,
        min_voltage_limit_in_V=v_min,
        max_voltage_limit_in_V=v_max,
        **cell_kwargs,
    )


def random_valid_cell(rng: np.random.Generator, index: int) -> CellRecord:
    """A randomized but always-valid cell, for bulk round-trip checks."""
    n_cycles = int(rng.integers(1, 5))
    cycles = []
    for j in range(n_cycles):
        n = int(rng.integers(2, 9))
        t = np.cumsum(rng.uniform(0.5, 120.0, n))
        cycles.append(
            CycleRecord(
                cycle_number=j + 1,
                voltage_in_V=rng.uniform(1.5, 4.5, n),
                current_in_A=rng.uniform(-5.0, 5.0, n),
                charge_capacity_in_Ah=np.cumsum(rng.uniform(0.0, 0.2, n)),
                discharge_capacity_in_Ah=np.cumsum(rng.uniform(0.0, 0.2, n)),
                time_in_s=t,
                temperature_in_C=rng.uniform(15, 45, n) if rng.random() < 0.5 else None,
                internal_resistance_in_ohm=float(rng.uniform(0.001, 0.1))
                if rng.random() < 0.5
                else None,
                extra={"segment": int(rng.integers(0, 9))} if rng.random() < 0.3 else {},
            )
        )
    kwargs = {}
    if rng.random() < 0.5:
        kwargs["form_factor"] = rng.choice(["pouch", "prismatic", "cylindrical_18650"])
    if rng.random() < 0.5:
        kwargs["anode_material"] = "graphite"
        kwargs["cathode_material"] = rng.choice(["LFP", "NMC", "NCA", "LCO"])
    if rng.random() < 0.5:
        lo, hi = sorted(rng.uniform(1.0, 5.0, 2))
        kwargs["min_voltage_limit_in_V"] = float(lo)
        kwargs["max_voltage_limit_in_V"] = float(hi + 0.01)
    if rng.random() < 0.4:
        kwargs["charge_protocol"] = (
            ProtocolStep(rate_in_C=float(rng.uniform(0.2, 4.0)), start_soc=0.0, end_soc=1.0),
        )
    if rng.random() < 0.4:
        kwargs["discharge_protocol"] = (
            ProtocolStep(current_in_A=float(-rng.uniform(0.5, 8.0))),
        )
    if rng.random() < 0.3:
        kwargs["description"] = f"fuzz cell {index}"
    if rng.random() < 0.3:
        kwargs["extra"] = {"batch": int(rng.integers(0, 99)), "tags": ["a", "b"]}
    return CellRecord(
        cell_id=f"RND_{index:04d}",
        nominal_capacity_in_Ah=float(rng.uniform(0.5, 5.0)),
        cycle_data=tuple(cycles),
        depth_of_charge=float(rng.uniform(0.5, 1.0)),
        depth_of_discharge=float(rng.uniform(0.5, 1.0)),
        already_spent_cycles=int(rng.integers(0, 20)),
        **kwargs,
    )


# -- hypothesis strategies ---------------------------------------------------

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@st.composite
def cycle_strategy(draw, number: int):
    n = draw(st.integers(min_value=2, max_value=6))
    dt = draw(
        st.lists(st.floats(0.01, 500.0, allow_nan=False), min_size=n, max_size=n)
    )
    t = tuple(float(v) for v in np.cumsum(dt))
    volts = draw(st.lists(st.floats(0.1, 6.0), min_size=n, max_size=n))
    amps = draw(st.lists(st.floats(-10.0, 10.0), min_size=n, max_size=n))
    qc = tuple(float(v) for v in np.cumsum(draw(
        st.lists(st.floats(0.0, 0.5), min_size=n, max_size=n))))
    qd = tuple(float(v) for v in np.cumsum(draw(
        st.lists(st.floats(0.0, 0.5), min_size=n, max_size=n))))
    temp = draw(st.one_of(st.none(), st.lists(st.floats(-20.0, 80.0), min_size=n, max_size=n)))
    return CycleRecord(
        cycle_number=number,
        voltage_in_V=volts,
        current_in_A=amps,
        charge_capacity_in_Ah=qc,
        discharge_capacity_in_Ah=qd,
        time_in_s=t,
        temperature_in_C=temp,
        internal_resistance_in_ohm=draw(st.one_of(st.none(), st.floats(1e-4, 1.0))),
    )


@st.composite
def cell_strategy(draw):
    n_cycles = draw(st.integers(min_value=1, max_value=4))
    cycles = tuple(draw(cycle_strategy(number=i + 1)) for i in range(n_cycles))
    return CellRecord(
        cell_id=draw(st.text(min_size=1, max_size=12, alphabet=st.characters(
            whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters="_-"))),
        nominal_capacity_in_Ah=draw(st.floats(0.1, 10.0)),
        cycle_data=cycles,
        depth_of_charge=draw(st.floats(0.01, 1.0)),
        depth_of_discharge=draw(st.floats(0.01, 1.0)),
        already_spent_cycles=draw(st.integers(0, 50)),
        description=draw(st.one_of(st.none(), st.text(max_size=20))),
    )


# -- fixtures ----------------------------------------------------------------


@pytest.fixture(scope="session")
def synth_cells():
    """A small deterministic synthetic corpus shared across test modules."""
    spec = SynthSpec(
        n_cells=12, cycle_life_mean=250.0, cycle_life_std=40.0,
        points_per_cycle=16, seed=11,
    )
    return generate_synthetic(spec)
