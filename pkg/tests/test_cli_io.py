import json
import subprocess
import sys

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from v2vchan.cli_io import (
    EXIT_IO,
    EXIT_NOT_AVAILABLE,
    EXIT_OK,
    EXIT_USAGE,
    RunConfig,
    main,
    parse_args,
    read_curve_json,
    run_main,
    write_curve,
)
from v2vchan.engine import ExperimentSpec, run_pathloss_curve, run_probability_curve
from v2vchan.link_budget import RadioConfig
from v2vchan.link_state import LinkState
from v2vchan.scenario import Density, TrafficConfig


class TestParse:
    def test_example_flags(self):
        cfg = parse_args("--scenario urban --model extended --density medium --metric prr --n 32 --seed 7".split())
        s = cfg.spec
        assert (s.scenario.value, s.model.value, s.density, s.metric.value, s.seed) == (
            "urban", "extended", Density.MEDIUM, "prr", 7,
        )
        assert s.radio == RadioConfig(array_elements=32)
        assert (s.d_min, s.d_max) == (2.0, 500.0)

    def test_bad_scenario(self, capsys):
        assert main(["--scenario", "suburb"]) == EXIT_USAGE
        err = capsys.readouterr().err
        assert "urban" in err and "highway" in err

    @pytest.mark.parametrize(
        "argv",
        [
            ["--bogus"],
            ["--dmin", "300", "--dmax", "200"],
            ["--dmin", "300", "--dmax", "300"],
            ["--points", "5", "--bin", "10"],
            ["--metric", "prob", "--state", "overall"],
            ["--type-mix", "type2=0.5"],
        ],
    )
    def test_usage_errors(self, argv):
        assert main(argv) == EXIT_USAGE

    def test_gpp_prr_not_available(self, tmp_path):
        assert main(["--model", "3gpp", "--metric", "prr", "--out", str(tmp_path / "x.csv")]) == EXIT_NOT_AVAILABLE
        assert not (tmp_path / "x.csv").exists()

    def test_gpp_nlos_probability_not_available(self, tmp_path):
        argv = ["--model", "3gpp", "--metric", "prob", "--state", "nlos", "--out", str(tmp_path / "p.csv")]
        assert main(argv) == EXIT_NOT_AVAILABLE

    def test_seed_env_fallback(self, monkeypatch):
        monkeypatch.setenv("V2V_SEED", "4242")
        assert parse_args([]).spec.seed == 4242
        assert parse_args(["--seed", "3"]).spec.seed == 3

    def test_flags_override_config(self, tmp_path):
        path = tmp_path / "run.json"
        base = RunConfig(spec=ExperimentSpec(metric="pathloss", state="nlos", seed=11), format="json")
        path.write_text(json.dumps(base.to_dict()))
        cfg = parse_args(["--config", str(path), "--seed", "12", "--fc", "60"])
        assert cfg.spec.seed == 12 and cfg.spec.radio.carrier == 60
        assert cfg.spec.state.value == "nlos" and cfg.format == "json"

    def test_config_unknown_key(self, tmp_path):
        path = tmp_path / "run.json"
        data = RunConfig().to_dict()
        data["extra"] = 1
        path.write_text(json.dumps(data))
        assert main(["--config", str(path)]) == EXIT_USAGE

    def test_oxygen_override(self, tmp_path):
        table = tmp_path / "o2.csv"
        table.write_text("freq_ghz,omega_db_per_km\n55,0\n63,30\n70,0\n")
        cfg = parse_args(["--oxygen-table", str(table)])
        assert cfg.spec.table.omega(63) == 30


configs = st.builds(
    lambda metric, scen, dens, n, seed, trials, d0, span, fmt, mix: RunConfig(
        spec=ExperimentSpec(
            metric=metric,
            state="los" if metric == "prob" else "overall",
            scenario=scen,
            radio=RadioConfig(array_elements=n),
            traffic=TrafficConfig(12.0, dens, {"type2": 1 - mix, "type3": mix}),
            seed=seed,
            trials_per_point=trials,
            d_min=d0,
            d_max=min(500.0, d0 + span),
        ),
        format=fmt,
    ),
    st.sampled_from(["prob", "pathloss", "prr"]),
    st.sampled_from(["urban", "highway"]),
    st.sampled_from(["low", "medium", "high"]),
    st.integers(1, 64),
    st.integers(0, 2**64 - 1),
    st.integers(1, 10**6),
    st.floats(2, 400),
    st.floats(1, 200),
    st.sampled_from(["csv", "json"]),
    st.sampled_from([0.0, 0.25, 0.5]),
)


@settings(max_examples=40, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(cfg=configs)
def test_config_round_trip(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert parse_args(["--config", str(path)]) == cfg


class TestWrite:
    def test_probability_csv(self, tmp_path):
        spec = ExperimentSpec(metric="prob", model="3gpp", scenario="highway", d_min=100, d_max=500, n_points=3)
        series = run_probability_curve(spec)[LinkState.LOS]
        out = tmp_path / "p.csv"
        write_curve(series, out, "csv")
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# spec: {")
        assert json.loads(lines[0][len("# spec: "):]) == spec.to_dict()
        assert lines[1] == "d_m,value,stderr,n_trials"
        assert lines[2:] == ["100,0.840313,0,0", "300,0.608417,0,0", "500,0.515,0,0"]

    def test_json_round_trip(self, tmp_path):
        series = run_pathloss_curve(ExperimentSpec(metric="pathloss", state="overall", trials_per_point=50, n_points=4))
        write_curve(series, tmp_path / "c.json", "json")
        assert read_curve_json(tmp_path / "c.json") == series

    def test_no_temp_files_left(self, tmp_path):
        series = run_probability_curve(ExperimentSpec(metric="prob"))[LinkState.LOS]
        write_curve(series, tmp_path / "a.csv")
        write_curve(series, tmp_path / "a.csv")
        assert [p.name for p in tmp_path.iterdir()] == ["a.csv"]

    def test_identical_runs_identical_bytes(self, tmp_path):
        argv = ["--metric", "prr", "--trials", "700", "--seed", "5"]
        assert main(argv + ["--out", str(tmp_path / "a.csv")]) == EXIT_OK
        assert main(argv + ["--out", str(tmp_path / "b.csv"), "--workers", "3"]) == EXIT_OK
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestRunMain:
    def test_prr_run(self, tmp_path):
        out = tmp_path / "prr.json"
        cfg = parse_args(["--metric", "prr", "--trials", "200", "--out", str(out), "--format", "json"])
        assert run_main(cfg) == EXIT_OK
        assert read_curve_json(out).metric == "prr"

    def test_unwritable(self, tmp_path):
        cfg = parse_args(["--metric", "prob", "--out", str(tmp_path / "missing" / "x.csv")])
        assert run_main(cfg) == EXIT_IO

    def test_stdout(self, capsys):
        assert main(["--metric", "prob", "--points", "3"]) == EXIT_OK
        assert capsys.readouterr().out.splitlines()[1] == "d_m,value,stderr,n_trials"

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "v2vchan", "--model", "3gpp", "--metric", "prr"],
            capture_output=True, text=True,
        )
        assert proc.returncode == EXIT_NOT_AVAILABLE
