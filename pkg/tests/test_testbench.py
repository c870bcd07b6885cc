"""Unit tests for the grid/DC-link surroundings and the run engine."""

import math

import numpy as np
import pytest

from mmcsim.controller import SortPolicy
from mmcsim.errors import ConfigError
from mmcsim.metrics import SummaryMetrics
from mmcsim.testbench import (
    DEFAULT_GRID_AMPLITUDE,
    DEFAULT_GRID_FREQUENCY,
    DcLink,
    GridSource,
    Scenario,
    build_stock_system,
    reference_current,
    run_scenario,
    simulate,
)


# ------------------------------------------------------------ stock system


def test_stock_system_constants():
    params, grid, link, scenario = build_stock_system()
    assert params.n == 6
    assert params.R == 0.03
    assert params.L == 5e-3
    assert params.l_arm == 3e-3
    assert params.C == 2.5e-3
    assert params.V_dc == 60e3
    assert params.T_s == 25e-6
    assert params.w == 1.0 and params.w_z == 1.0
    assert grid.amplitude == DEFAULT_GRID_AMPLITUDE == 24.5e3
    assert grid.frequency == DEFAULT_GRID_FREQUENCY == 60.0
    assert link.length_km == 5.0
    assert link.c_total == pytest.approx(80e-6, rel=1e-12)
    assert link.l_total == pytest.approx(250e-6, rel=1e-12)
    assert link.v_mmc1 == link.v_mmc2 == 60e3
    assert link.i_link == 0.0
    assert scenario.mode == "back_to_back"
    assert scenario.duration == 3.0
    assert scenario.events == [(1.2, SortPolicy.F1V2), (1.4, SortPolicy.V1F2)]
    assert scenario.p_set == (13.18e6, -13.18e6)


# --------------------------------------------------------------- sources


def test_grid_voltage_at_zero():
    grid = GridSource(amplitude=24.5e3, frequency=60.0)
    v = grid.voltage(0.0)
    assert v[0] == 24.5e3
    assert v[1] == pytest.approx(-12.25e3, rel=1e-12)
    assert v[2] == pytest.approx(-12.25e3, rel=1e-12)
    assert grid.omega == pytest.approx(2.0 * math.pi * 60.0, rel=1e-15)


def test_grid_validation():
    with pytest.raises(ConfigError):
        GridSource(amplitude=-1.0, frequency=60.0)
    with pytest.raises(ConfigError):
        GridSource(amplitude=1.0, frequency=0.0)
    with pytest.raises(ConfigError):
        GridSource(amplitude=1.0, frequency=60.0, offsets=(0.0, 1.0, 2.0))


def test_reference_current_amplitude():
    grid = GridSource(amplitude=24.5e3, frequency=60.0)
    ref = reference_current(13.18e6, grid, 0.0)
    assert ref[0] == pytest.approx(358.63945578231295, rel=1e-12)
    assert reference_current(0.0, grid, 0.0).tolist() == [0.0, 0.0, 0.0]


def test_reference_current_linearity_and_sign():
    grid = GridSource(amplitude=24.5e3, frequency=60.0)
    t = 3.7e-3
    one = reference_current(5e6, grid, t)
    two = reference_current(10e6, grid, t)
    neg = reference_current(-5e6, grid, t)
    assert np.allclose(two, 2.0 * one, rtol=1e-12, atol=0.0)
    assert np.array_equal(neg, -one)


def test_reference_current_is_balanced():
    grid = GridSource(amplitude=24.5e3, frequency=60.0)
    for t in (0.0, 1.1e-3, 7.9e-3):
        assert reference_current(8e6, grid, t).sum() == pytest.approx(
            0.0, abs=1e-9
        )


def test_reference_current_zero_amplitude_grid():
    grid = GridSource(amplitude=0.0, frequency=60.0)
    with pytest.raises(ConfigError):
        reference_current(1e6, grid, 0.0)


def test_dc_link_totals_and_validation():
    link = DcLink(length_km=5.0, c_per_km=16e-6, l_per_km=50e-6)
    assert link.c_total == pytest.approx(80e-6, rel=1e-12)
    assert link.l_total == pytest.approx(250e-6, rel=1e-12)
    assert link.v_link == link.v_mmc1
    with pytest.raises(ConfigError):
        DcLink(length_km=0.0, c_per_km=16e-6, l_per_km=50e-6)
    with pytest.raises(ConfigError):
        DcLink(length_km=5.0, c_per_km=-1e-6, l_per_km=50e-6)


# -------------------------------------------------------------- scenarios


def test_scenario_requires_exactly_one_reference():
    with pytest.raises(ConfigError):
        Scenario(duration=1.0)
    with pytest.raises(ConfigError):
        Scenario(duration=1.0, p_set=(1e6,), i_amp=(100.0,))


def test_scenario_reference_arity_matches_mode():
    Scenario(duration=1.0, mode="ideal_dc", p_set=(1e6,))
    Scenario(duration=1.0, mode="back_to_back", p_set=(1e6, -1e6))
    with pytest.raises(ConfigError):
        Scenario(duration=1.0, mode="back_to_back", p_set=(1e6,))
    with pytest.raises(ConfigError):
        Scenario(duration=1.0, mode="ideal_dc", i_amp=(100.0, 100.0))


def test_scenario_event_validation():
    with pytest.raises(ConfigError):
        Scenario(
            duration=1.0,
            events=[(0.5, SortPolicy.F1V2), (0.2, SortPolicy.V1F2)],
            p_set=(1e6,),
        )
    with pytest.raises(ConfigError):
        Scenario(duration=1.0, events=[(1.5, SortPolicy.F1V2)], p_set=(1e6,))
    with pytest.raises(ConfigError):
        Scenario(duration=-1.0, p_set=(1e6,))
    with pytest.raises(ConfigError):
        Scenario(duration=1.0, mode="islanded", p_set=(1e6,))


def test_policy_schedule_lookup():
    scenario = Scenario(
        duration=3.0,
        events=[(1.2, SortPolicy.F1V2), (1.4, SortPolicy.V1F2)],
        mode="back_to_back",
        p_set=(1e6, -1e6),
    )
    assert scenario.policy_at(0.0) is SortPolicy.V1F2
    assert scenario.policy_at(1.1999) is SortPolicy.V1F2
    assert scenario.policy_at(1.2) is SortPolicy.F1V2
    assert scenario.policy_at(1.3) is SortPolicy.F1V2
    assert scenario.policy_at(1.4) is SortPolicy.V1F2
    assert scenario.policy_at(2.9) is SortPolicy.V1F2


# ------------------------------------------------------------- run engine


def _short_scenario(duration, events=(), mode="ideal_dc"):
    p_set = (13.18e6,) if mode == "ideal_dc" else (13.18e6, -13.18e6)
    return Scenario(
        duration=duration, events=list(events), mode=mode, p_set=p_set
    )


def test_policy_switch_lands_on_exact_step():
    params, grid, _, _ = build_stock_system()
    event_t = 5 * params.T_s
    scenario = _short_scenario(10 * params.T_s, [(event_t, SortPolicy.F1V2)])
    record = simulate(scenario, params=params, grid=grid)
    assert record.policy == ["V1F2"] * 5 + ["F1V2"] * 5


def test_zero_duration_run():
    params, grid, _, _ = build_stock_system()
    record = simulate(_short_scenario(0.0), params=params, grid=grid)
    assert record.steps == 0
    metrics = run_scenario(_short_scenario(0.0), params=params, grid=grid)
    assert isinstance(metrics, SummaryMetrics)
    assert metrics.window == (0.0, 0.0)
    assert metrics.fs_mean == 0.0


def test_ideal_dc_run_shape_and_bus():
    params, grid, _, _ = build_stock_system()
    record = simulate(_short_scenario(0.01), params=params, grid=grid)
    assert record.labels == ["a", "b", "c"]
    assert record.steps == 400
    assert record.n == 6
    assert np.all(record.v_dc_link == 60e3)
    # Rows are stamped at the end of each period.
    assert record.times[0] == params.T_s
    assert record.times[-1] == pytest.approx(0.01, rel=1e-12)
    # The recorded DC-side current is the summed circulating current.
    assert np.array_equal(record.i_dc_link[:, 0], record.i_z.sum(axis=1))


def test_back_to_back_requires_link():
    params, grid, _, _ = build_stock_system()
    with pytest.raises(ConfigError):
        simulate(_short_scenario(0.01, mode="back_to_back"), params=params, grid=grid)


def test_back_to_back_run_shape():
    params, grid, link, _ = build_stock_system()
    record = simulate(
        _short_scenario(0.01, mode="back_to_back"),
        params=params, grid=grid, dc_link=link,
    )
    assert record.labels == ["1a", "1b", "1c", "2a", "2b", "2c"]
    # Phases of one converter share a bus; the link current is global.
    for col in (1, 2):
        assert np.array_equal(record.v_dc_link[:, col], record.v_dc_link[:, 0])
        assert np.array_equal(record.v_dc_link[:, 3 + col], record.v_dc_link[:, 3])
    for col in range(1, 6):
        assert np.array_equal(record.i_dc_link[:, col], record.i_dc_link[:, 0])
    assert np.all(np.isfinite(record.v_dc_link))
    # The caller's link object is left untouched.
    assert link.i_link == 0.0 and link.v_mmc1 == 60e3


def test_simulate_is_deterministic():
    params, grid, _, _ = build_stock_system()
    a = simulate(_short_scenario(0.005), params=params, grid=grid)
    b = simulate(_short_scenario(0.005), params=params, grid=grid)
    assert np.array_equal(a.i, b.i)
    assert np.array_equal(a.v_c, b.v_c)
    assert np.array_equal(a.u, b.u)
    assert a.policy == b.policy


def test_simulate_without_energy_control_stays_finite():
    params, grid, _, _ = build_stock_system()
    record = simulate(
        _short_scenario(0.02), params=params, grid=grid, energy_control=False
    )
    assert np.all(np.isfinite(record.i))
    assert np.all(np.isfinite(record.v_c))


def test_run_scenario_defaults_window_to_whole_run():
    params, grid, _, _ = build_stock_system()
    metrics = run_scenario(_short_scenario(0.01), params=params, grid=grid)
    assert metrics.window == (0.0, 0.01)
    assert metrics.fs_mean > 0.0


class _CountingSink:
    def __init__(self):
        self.calls = []

    def write_record(self, record, decimation):
        self.calls.append((record.steps, decimation))


def test_run_scenario_streams_to_sink():
    params, grid, _, _ = build_stock_system()
    sink = _CountingSink()
    run_scenario(
        _short_scenario(0.002), sink, params=params, grid=grid, decimation=4
    )
    assert sink.calls == [(80, 4)]


def test_run_scenario_rejects_bad_decimation():
    params, grid, _, _ = build_stock_system()
    with pytest.raises(ConfigError):
        run_scenario(_short_scenario(0.002), params=params, grid=grid, decimation=0)
