import csv
import math
import os

import pytest
from hypothesis import given, strategies as st

from swiptpep import harness
from swiptpep.analysis import pep_bound
from swiptpep.harness import (
    CSV_COLUMNS,
    SCENARIOS,
    ConfigError,
    ExperimentSpec,
    ResultRow,
    SweepKind,
    format_rows,
    load_config_file,
    parse_snr_grid,
    run_analytical,
    run_monte_carlo,
    run_sweep,
    simulate_point,
    spec_from_mapping,
    theta_grid,
    wilson_interval,
    write_csv,
)
from swiptpep.mca_noise import SpatialModel
from swiptpep.phy import ALL_VARIANTS, SchemeVariant, SystemConfig
from swiptpep.specfun import QuadratureError

BLIND_IEH = SchemeVariant("blind", "ieh")
BLIND_AEH = SchemeVariant("blind", "aeh")
CSI_IEH = SchemeVariant("csi", "ieh")
CSI_AEH = SchemeVariant("csi", "aeh")


def test_scenarios():
    assert SCENARIOS[1] == (0.8, 0.8)
    assert SCENARIOS[6] == (0.2, 0.2)
    assert len(SCENARIOS) == 6


def test_theta_grid():
    grid = theta_grid()
    assert len(grid) == 49
    assert grid[0] == 0.02 and grid[-1] == 0.98
    assert 0.22 in grid and 0.5 in grid


class TestSpec:
    def test_grid_must_increase(self):
        with pytest.raises(ConfigError):
            ExperimentSpec(SystemConfig(), snr_grid_db=(10, 5))
        with pytest.raises(ConfigError):
            ExperimentSpec(SystemConfig(), snr_grid_db=())

    def test_minimum_trials(self):
        with pytest.raises(ConfigError):
            ExperimentSpec(SystemConfig(), trials=999)
        ExperimentSpec(SystemConfig(), trials=0)

    def test_seed_range(self):
        with pytest.raises(ConfigError):
            ExperimentSpec(SystemConfig(), seed=-1)
        ExperimentSpec(SystemConfig(), seed=2 ** 64 - 1)

    def test_sweep_aliases(self):
        assert SweepKind.parse("scenario") is SweepKind.RELAY_SCENARIO
        assert SweepKind.parse("theta-equal") is SweepKind.THETA_EQUAL
        with pytest.raises(ConfigError):
            SweepKind.parse("bogus")


class TestWilson:
    def test_zero_errors(self):
        lo, hi = wilson_interval(0, 1000)
        assert lo == 0.0 and 0 < hi < 0.01

    @given(st.integers(1, 10 ** 6), st.data())
    def test_contains_estimate(self, n, data):
        k = data.draw(st.integers(0, n))
        lo, hi = wilson_interval(k, n)
        assert 0.0 <= lo <= k / n <= hi <= 1.0


class TestMonteCarlo:
    def test_reproducible_and_worker_independent(self):
        cfg = SystemConfig(environment="MI")
        a = simulate_point(cfg, 5, 20_000, seed=9, chunk_size=4096)
        b = simulate_point(cfg, 5, 20_000, seed=9, chunk_size=4096)
        c = simulate_point(cfg, 5, 20_000, seed=9, chunk_size=4096, workers=2)
        assert a == b == c
        assert simulate_point(cfg, 5, 20_000, seed=10, chunk_size=4096) != a

    def test_point_index_separates_streams(self):
        cfg = SystemConfig()
        a = simulate_point(cfg, 0, 5000, seed=1, point_index=0)
        b = simulate_point(cfg, 0, 5000, seed=1, point_index=1)
        assert a.errors != b.errors or a.semi_analytic != b.semi_analytic

    def test_below_bound_near_gaussian(self):
        cfg = SystemConfig(variant=BLIND_AEH, environment="NG")
        point = simulate_point(cfg, 20, 10 ** 6, seed=7)
        assert point.pep - 3 * point.sigma <= pep_bound(cfg, 20)

    def test_coin_flip_at_vanishing_snr(self):
        point = simulate_point(SystemConfig(environment="NG"), -80, 20_000, seed=3)
        assert abs(point.pep - 0.5) < 3 * math.sqrt(0.25 / point.trials)
        assert point.ci_low <= 0.5 <= point.ci_high

    def test_near_coin_flip_at_minus_40db(self):
        # the low-variance impulse state still leaves a ~1% edge at -40 dB
        point = simulate_point(SystemConfig(environment="NG"), -40, 20_000, seed=3)
        assert abs(point.pep - point.semi_analytic) < 3 * math.sqrt(0.25 / point.trials)
        assert abs(point.pep - 0.5) < 0.02

    def test_rows(self):
        spec = ExperimentSpec(SystemConfig(variant=CSI_IEH, environment="MI"), (0, 10), trials=5000, seed=4)
        rows = run_monte_carlo(spec)
        assert [r.snr_db for r in rows] == [0.0, 10.0]
        for r in rows:
            assert 0 <= r.ci_low <= r.pep_mc <= r.ci_high <= 1
            assert r.trials == 5000 and r.seed == 4
            assert (r.scheme, r.eh_mode, r.noise_env, r.spatial_model) == ("csi", "ieh", "MI", "model1")

    def test_requires_trials(self):
        with pytest.raises(ConfigError):
            run_monte_carlo(ExperimentSpec(SystemConfig()))


class TestAnalytical:
    def test_csi_aeh_lowest_at_40db(self):
        values = {v: run_analytical(ExperimentSpec(SystemConfig(variant=v), (40,)))[0].pep_analytical
                  for v in ALL_VARIANTS}
        assert min(values, key=values.get) == CSI_AEH

    def test_blind_aeh_and_csi_ieh_close_at_40db(self):
        a = run_analytical(ExperimentSpec(SystemConfig(variant=BLIND_AEH), (40,)))[0].pep_analytical
        b = run_analytical(ExperimentSpec(SystemConfig(variant=CSI_IEH), (40,)))[0].pep_analytical
        assert abs(a - b) / max(a, b) <= 0.10

    def test_model_two_dispatch(self):
        cfg = SystemConfig(environment="HI", spatial=SpatialModel.MODEL_II)
        row = run_analytical(ExperimentSpec(cfg, (20,)))[0]
        assert row.spatial_model == "model2"
        assert row.pep_analytical == pep_bound(cfg, 20)

    def test_errors_recorded_per_row(self, monkeypatch):
        def failing(*args, **kwargs):
            raise QuadratureError("no convergence", 0.1, 1.0)

        monkeypatch.setattr(harness, "pep_bound", failing)
        rows = run_analytical(ExperimentSpec(SystemConfig(), (0, 5)))
        assert all(r.pep_chernoff_flag == "error" and math.isnan(r.pep_analytical) for r in rows)

    def test_saturation_flag(self, monkeypatch):
        monkeypatch.setattr(harness, "pep_bound", lambda *a, **k: 1.25)
        row = run_analytical(ExperimentSpec(SystemConfig(), (0,)))[0]
        assert row.pep_chernoff_flag == "saturated" and row.pep_analytical == 1.25


class TestSweep:
    def test_scenario_six_beats_scenario_one(self):
        spec = ExperimentSpec(SystemConfig(variant=BLIND_IEH, environment="HI"), (30,),
                              sweep=SweepKind.RELAY_SCENARIO)
        rows = run_sweep(spec)
        assert [(r.d_sr1, r.d_sr2) for r in rows] == list(SCENARIOS.values())
        assert rows[5].pep_analytical < rows[0].pep_analytical

    def test_theta_complement_pairs(self):
        rows = run_sweep(ExperimentSpec(SystemConfig(variant=CSI_AEH), (40,), sweep="theta_complement"))
        assert len(rows) == 49
        assert all(abs(r.theta1 + r.theta2 - 1.0) < 1e-12 for r in rows)

    def test_model_compare_rows_paired(self):
        rows = run_sweep(ExperimentSpec(SystemConfig(environment="HI"), (10, 30), sweep="model_compare"))
        assert [(r.snr_db, r.spatial_model) for r in rows] == [
            (10.0, "model1"), (10.0, "model2"), (30.0, "model1"), (30.0, "model2")]

    def test_sweep_with_monte_carlo(self):
        rows = run_sweep(ExperimentSpec(SystemConfig(), (10,), trials=2000, seed=1, sweep="model_compare"))
        assert all(r.pep_mc is not None for r in rows)

    def test_requires_kind(self):
        with pytest.raises(ConfigError):
            run_sweep(ExperimentSpec(SystemConfig()))


class TestCsv:
    def _row(self, **kw):
        base = dict(snr_db=20.0, scheme="blind", eh_mode="aeh", noise_env="NG", spatial_model="model1",
                    d_sr1=0.5, d_sr2=0.5, theta1=0.5, theta2=0.5, pep_analytical=8.2454324089e-06,
                    pep_chernoff_flag="ok", pep_mc=0.00123, ci_low=0.0, ci_high=None, trials=1000, seed=7)
        base.update(kw)
        return ResultRow(**base)

    def test_header_and_formatting(self):
        text = format_rows([self._row()])
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[1] == "20,blind,aeh,NG,model1,0.5,0.5,0.5,0.5,8.245432e-06,ok,0.00123,0,,1000,7"

    def test_scientific_below_threshold_only(self):
        fields = format_rows([self._row(pep_analytical=1e-4, pep_mc=9.99e-5)]).splitlines()[1].split(",")
        assert fields[9] == "0.0001"
        assert fields[11] == "9.990000e-05"

    def test_nan(self):
        assert ",nan," in format_rows([self._row(pep_analytical=float("nan"))])

    def test_atomic_write(self, tmp_path):
        path = write_csv([self._row()], tmp_path / "out.csv")
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["pep_chernoff_flag"] == "ok"
        assert os.listdir(tmp_path) == ["out.csv"]

    def test_unwritable_target(self, tmp_path):
        with pytest.raises(OSError):
            write_csv([self._row()], tmp_path / "missing" / "out.csv")
        assert not (tmp_path / "missing").exists()


class TestConfig:
    def test_grid_forms(self):
        assert parse_snr_grid("0:45:5") == tuple(float(v) for v in range(0, 50, 5))
        assert parse_snr_grid("50:80:5")[-2:] == (75.0, 80.0)
        assert parse_snr_grid("10, 20,30") == (10.0, 20.0, 30.0)
        assert parse_snr_grid([1, 2]) == (1.0, 2.0)
        assert parse_snr_grid(7) == (7.0,)

    @pytest.mark.parametrize("bad", ["0:10:0", "a:b", "1,x"])
    def test_bad_grid(self, bad):
        with pytest.raises(ConfigError):
            parse_snr_grid(bad)

    def test_mapping(self):
        spec = spec_from_mapping({"env": "HI", "scheme": "csi", "eh": "aeh", "spatial": "model2", "d_sr1": 0.2,
                                  "theta2": 0.3, "eta1": 0.4, "lambda": 3.0, "Ps": 2.0, "M": 4,
                                  "snr_db": [5, 15], "trials": "1e4", "seed": 11, "out": "x.csv"})
        cfg = spec.config
        assert cfg.variant == CSI_AEH and cfg.environment.value == "HI" and cfg.spatial is SpatialModel.MODEL_II
        assert cfg.topology.d_sr1 == 0.2 and cfg.topology.path_loss_exponent_lambda == 3.0
        assert cfg.relays[1].theta == 0.3 and cfg.relays[0].eta == 0.4
        assert (cfg.P_s, cfg.M) == (2.0, 4)
        assert spec.snr_grid_db == (5.0, 15.0) and spec.trials == 10_000 and spec.seed == 11
        assert str(spec.output) == "x.csv"

    def test_defaults(self):
        spec = spec_from_mapping({})
        assert spec.config == SystemConfig()
        assert len(spec.snr_grid_db) == 10

    @pytest.mark.parametrize("data", [{"theta1": 1.5}, {"env": "XX"}, {"scheme": "relay"}, {"M": 2.5},
                                      {"trials": 10}])
    def test_invalid_mapping(self, data):
        with pytest.raises(ConfigError):
            spec_from_mapping(data)

    def test_config_files(self, tmp_path):
        good = tmp_path / "c.yaml"
        good.write_text("env: MI\nscheme: blind\neh: aeh\nsnr_db: '0:10:5'\n")
        assert load_config_file(good)["env"] == "MI"
        js = tmp_path / "c.json"
        js.write_text('{"env": "HI", "seed": 3}')
        assert load_config_file(js) == {"env": "HI", "seed": 3}
        for text in ("env: [unclosed", "- a\n- b\n", "colour: red\n", "env: {nested: 1}\n"):
            bad = tmp_path / "bad.yaml"
            bad.write_text(text)
            with pytest.raises(ConfigError):
                load_config_file(bad)
        with pytest.raises(ConfigError):
            load_config_file(tmp_path / "absent.yaml")
