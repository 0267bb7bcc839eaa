import numpy as np
import pytest

import rsfd.harness as harness
from conftest import instance
from rsfd.benchmarks import SchemeId
from rsfd.config import SystemConfig
from rsfd.harness import (
    CellStats,
    ExperimentError,
    ExperimentSpec,
    SweepResult,
    axis_config,
    emit_csv,
    format_csv,
    parse_csv,
    run_experiment,
)
from rsfd.oracles import water_filling
from rsfd.solver import InnerSolverError
from rsfd.validation import ConfigError


def _small(**kw):
    base = dict(
        config=SystemConfig(num_subcarriers=2, num_bs_antennas=4),
        axis="noise",
        values=(-40, -30),
        num_realizations=3,
        schemes=("RS", "ODL"),
        base_seed=11,
    )
    base.update(kw)
    return ExperimentSpec(**base)


def test_spec_validation():
    spec = _small()
    assert spec.axis == "noise_var"
    assert spec.schemes == (SchemeId.RS, SchemeId.ODL)
    with pytest.raises(ConfigError):
        _small(axis="bandwidth")
    with pytest.raises(ConfigError):
        _small(values=())
    with pytest.raises(ConfigError):
        _small(values=(float("inf"),))
    with pytest.raises(ConfigError):
        _small(num_realizations=0)
    with pytest.raises(ConfigError):
        _small(schemes=("XX",))
    assert ExperimentSpec(axis="strength_sd").values == harness.DEFAULT_GRIDS["strength_sd"]


def test_axis_config():
    c = SystemConfig()
    assert axis_config(c, "noise", -30).noise_var_dest[0] == pytest.approx(1e-3)
    assert axis_config(c, "strength_sd", -20).strength_sd == pytest.approx(1e-2)
    d = axis_config(c, "distortion", -20)
    assert d.kappa_relay == d.beta_relay == d.beta_dest == pytest.approx(1e-2)
    np.testing.assert_allclose(d.theta_tx_source, 1e-2)
    p = axis_config(c, "power", 2.5)
    assert p.power_source == p.power_relay == 2.5


def test_run_is_deterministic_and_paired():
    spec = _small()
    a, b = run_experiment(spec), run_experiment(spec)
    assert format_csv(a) == format_csv(b)
    # the noise axis does not touch the channels, so ODL sees the same draws at both values
    for i in range(2):
        cell = a.cell(i, "ODL")
        assert cell.n_ok == 3 and cell.n_fail == 0
        assert np.min(cell.values) <= cell.mean <= np.max(cell.values)
        assert cell.mean == pytest.approx(np.mean(cell.values), abs=1e-12)
        assert cell.std == pytest.approx(np.std(cell.values), abs=1e-12)
        assert cell.mean_iterations >= 1
    assert np.all(a.cell(0, "RS").values >= a.cell(0, "ODL").values - 1e-6)


def test_parallel_matches_serial():
    spec = _small(num_realizations=2)
    assert format_csv(run_experiment(spec, jobs=2)) == format_csv(run_experiment(spec))


def test_single_point_water_filling():
    config = SystemConfig(num_subcarriers=1).without_impairments()
    spec = ExperimentSpec(config=config, axis="power", values=(1.0,), num_realizations=1, schemes=("ODL",), base_seed=5)
    result = run_experiment(spec)
    _, _, co = instance(config, 5)
    p = water_filling(co.gain_sd / co.alpha_d, 1.0)
    expected = float(np.log2(1 + co.gain_sd * p / co.alpha_d).sum())
    assert result.cell(0, "ODL").mean == pytest.approx(expected, abs=1e-9)


def test_csv_layout_and_round_trip(tmp_path):
    result = run_experiment(_small(num_realizations=2))
    path = tmp_path / "out.csv"
    emit_csv(result, path)
    raw = path.read_bytes()
    text = raw.decode("utf-8")
    lines = text.split("\n")
    assert lines[0] == "axis_value,scheme,mean_rate,std_rate,n_ok,n_fail"
    assert len(lines) == 1 + 4 + 1 and lines[-1] == ""
    assert b"\r" not in raw
    rows = parse_csv(text)
    assert [(r[0], r[1]) for r in rows] == [(-40, SchemeId.RS), (-40, SchemeId.ODL), (-30, SchemeId.RS), (-30, SchemeId.ODL)]
    for (value, scheme, cell), row in zip(result.rows(), rows):
        assert row[2] == pytest.approx(cell.mean, rel=1e-8)
        assert row[3] == pytest.approx(cell.std, rel=1e-8, abs=1e-12)
    emit_csv(result, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_bytes() == raw


def test_failed_cells_print_nan():
    cell = CellStats(np.array([np.nan, np.nan]), np.zeros(2))
    result = SweepResult("power", (1.0,), (SchemeId.ODL,), {(0, SchemeId.ODL): cell})
    assert format_csv(result).splitlines()[1] == "1,ODL,nan,nan,0,2"


def test_failures_counted_and_threshold(monkeypatch):
    real = harness.solve_realization
    calls = {"n": 0}

    def sometimes(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] % 3 == 0:
            raise InnerSolverError("stalled")
        return real(*args, **kwargs)

    monkeypatch.setattr(harness, "solve_realization", sometimes)
    with pytest.raises(ExperimentError) as info:
        run_experiment(_small(values=(-40,), schemes=("ODL",)))
    cell = info.value.result.cell(0, "ODL")
    assert (cell.n_ok, cell.n_fail) == (2, 1)


def test_config_error_surfaces_before_solving():
    with pytest.raises(ConfigError):
        run_experiment(_small(axis="strength_sd", values=(-60,)))
