import json
import math

import numpy as np
import pytest

from jclattice import (
    ConfigError,
    main,
    parse_config,
    preset_names,
    preset_text,
    render_config,
    run_experiment,
)


def parse(d):
    return parse_config(json.dumps(d))


def test_minimal_meanfield_config_gets_documented_defaults():
    cfg = parse({"engine": "meanfield", "M": 2})
    lat = cfg.lattice
    assert lat.J == 1.0
    assert lat.delta_c == 0.01 and lat.delta_q == 0.01
    assert lat.kappa == 0.0 and lat.gamma == 0.0
    assert lat.g == (0.0, 0.0) and lat.d == (0.0, 0.0)
    assert not lat.periodic
    assert cfg.initial.photons == (0.0, 0.0)
    assert cfg.initial.qubit_z == (-0.5, -0.5)
    assert cfg.initial.kind == "coherent"
    assert cfg.meanfield.t_max == 100.0


def test_g_length_mismatch_names_the_key():
    with pytest.raises(ConfigError, match="'g'"):
        parse({"engine": "meanfield", "M": 2, "g": [1.0, 2.0, 3.0]})


def test_unknown_key_is_rejected_by_name():
    with pytest.raises(ConfigError, match="'n_traj'.*'master'"):
        parse({"engine": "master", "M": 1, "n_max": 2, "n_traj": 10})


@pytest.mark.parametrize("bad, msg", [
    ({"engine": "master", "M": 1}, "'n_max'"),
    ({"engine": "trajectories", "M": 1, "n_max": 2}, "'n_traj'"),
    ({"engine": "meanfield"}, "'M'"),
    ({"M": 2}, "'engine'"),
    ({"engine": "exact", "M": 2}, "'engine'"),
    ({"engine": "meanfield", "M": 1.5}, "integer"),
    ({"engine": "meanfield", "M": 2, "periodic": "yes"}, "true or false"),
    ({"engine": "meanfield", "M": 2, "description": 7}, "string"),
    ({"engine": "meanfield", "M": 2, "output": ""}, "'output'"),
    ({"engine": "master", "M": 1, "n_max": 2, "initial_kind": "squeezed"},
     "'initial_kind'"),
    ({"engine": "phase_sweep", "M": 2, "axis2_values": [0.1]}, "'d1_values'"),
    ({"engine": "phase_sweep", "M": 2, "axis2_values": [0.1],
      "d1_values": {"start": 0.0, "stop": 1.0}}, "missing 'num'"),
    ({"engine": "phase_sweep", "M": 2, "d1_values": [0.1],
      "axis2_values": [0.1], "axis2_name": "J"}, "'axis2_name'"),
    ({"engine": "phase_sweep", "M": 2, "d1_values": [0.1],
      "axis2_values": [0.1], "boundary_kappa_range": [0.1]},
     "boundary_kappa_range"),
])
def test_invalid_configs_name_the_offending_key(bad, msg):
    with pytest.raises(ConfigError, match=msg):
        parse(bad)


def test_config_must_be_a_json_object():
    with pytest.raises(ConfigError, match="valid JSON"):
        parse_config("{not json")
    with pytest.raises(ConfigError, match="JSON object"):
        parse_config("[1, 2]")


def test_grid_values_accept_start_stop_num():
    cfg = parse({"engine": "phase_sweep", "M": 2,
                 "d1_values": {"start": 0.0, "stop": 0.3, "num": 4},
                 "axis2_values": [0.04, 0.2]})
    np.testing.assert_allclose(cfg.sweep.d1_values, (0.0, 0.1, 0.2, 0.3),
                               rtol=0, atol=1e-15)
    assert cfg.sweep.axis2_name == "kappa"
    assert cfg.sweep.horizon == 1400.0


def test_engineered_trapping_preset_pins_the_published_constants():
    cfg = parse_config(preset_text("fig2g-i"))
    assert cfg.engine == "master"
    assert cfg.lattice.g[0] == 0.0
    assert math.isclose(cfg.lattice.g[1], 2.0 * 2.8 * math.sqrt(10.0),
                        rel_tol=0, abs_tol=1e-12)
    assert cfg.lattice.d == (0.04, 0.0)
    assert cfg.lattice.kappa == 0.04 and cfg.lattice.gamma == 0.04
    assert cfg.initial.photons == (10.0, 0.0)
    assert cfg.evolution.compute_g2


def test_all_shipped_presets_parse():
    names = preset_names()
    assert "fig2a-c" in names and "s1" in names and "empty" in names
    for name in names:
        cfg = parse_config(preset_text(name))
        assert cfg.engine in ("master", "trajectories", "meanfield", "phase_sweep")


def test_parse_render_round_trips_every_preset():
    for name in preset_names():
        cfg = parse_config(preset_text(name))
        again = parse_config(json.dumps(render_config(cfg)))
        assert render_config(again) == render_config(cfg), name


def test_empty_lattice_run_keeps_vacuum_observables(tmp_path):
    cfg = parse_config(preset_text("empty"))
    summary = run_experiment(cfg, output_dir=tmp_path)
    assert summary.final["N"] == [0.0, 0.0]
    assert summary.final["sz"] == [-0.5, -0.5]
    assert math.isnan(summary.final["z"])
    assert summary.truncation_peak == 0.0
    csv = (tmp_path / "empty.csv").read_text().strip().splitlines()
    assert len(csv) == 1 + 21  # header + Jt in [0, 10] every 0.5


def test_run_exit_code_zero_and_artifacts(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "engine": "master", "M": 1, "n_max": 2, "kappa": 0.3,
        "t_max": 1.0, "sample_dt": 0.5, "initial_photons": [1],
        "output": "decay"}))
    code = main(["run", str(path), "--output-dir", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "decay.csv").exists()
    assert (tmp_path / "decay_summary.json").exists()
    out = capsys.readouterr().out
    assert "decay.csv" in out


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    assert main(["run", str(bad)]) == 2
    assert main(["run", "no-such-preset"]) == 2
    # wrong subcommand for the engine
    sweep_cfg = tmp_path / "sweep.json"
    sweep_cfg.write_text(json.dumps({
        "engine": "phase_sweep", "M": 2,
        "d1_values": [0.1], "axis2_values": [0.1]}))
    assert main(["run", str(sweep_cfg)]) == 2
    run_cfg = tmp_path / "run.json"
    run_cfg.write_text(json.dumps({"engine": "meanfield", "M": 2}))
    assert main(["sweep", str(run_cfg)]) == 2
    err = capsys.readouterr().err
    assert "config error" in err


def test_truncation_overflow_exits_3(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "engine": "master", "M": 1, "n_max": 2, "d": 2.0,
        "t_max": 2.0, "sample_dt": 0.5}))
    assert main(["run", str(path), "--output-dir", str(tmp_path)]) == 3
    assert "truncation error" in capsys.readouterr().err


def test_integration_failure_exits_4(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "engine": "master", "M": 1, "n_max": 2, "d": 0.3, "kappa": 0.1,
        "t_max": 200.0, "sample_dt": 100.0, "rtol": 1e-10, "atol": 1e-12,
        "max_steps": 5}))
    assert main(["run", str(path), "--output-dir", str(tmp_path)]) == 4
    assert "integration error" in capsys.readouterr().err


def test_rerun_reproduces_artifacts_byte_for_byte(tmp_path):
    doc = {"engine": "trajectories", "M": 1, "n_max": 2, "kappa": 0.5,
           "d": 0.6, "n_traj": 5, "t_max": 2.0, "sample_dt": 0.5,
           "truncation_tol": 0.5, "output": "mc"}
    dirs = [tmp_path / "a", tmp_path / "b"]
    summaries = [run_experiment(parse(doc), output_dir=d) for d in dirs]
    csvs = [(d / "mc.csv").read_bytes() for d in dirs]
    assert csvs[0] == csvs[1]
    jsons = [json.loads((d / "mc_summary.json").read_text()) for d in dirs]
    for j in jsons:
        j["summary"].pop("wall_time")
        j["summary"]["outputs"] = None  # paths differ by directory
    assert jsons[0] == jsons[1]
    assert summaries[0].config_sha256 == summaries[1].config_sha256


def test_seed_override_changes_the_ensemble(tmp_path):
    # jumps must actually fire, or every seed yields the same no-jump paths
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "engine": "trajectories", "M": 1, "n_max": 4, "kappa": 1.5,
        "d": 0.5, "n_traj": 10, "t_max": 4.0, "sample_dt": 1.0,
        "initial_photons": [1], "truncation_tol": 0.5, "output": "mc"}))
    outs = []
    for seed, sub in ((7, "a"), (8, "b")):
        d = tmp_path / sub
        assert main(["run", str(path), "--seed", str(seed),
                     "--output-dir", str(d)]) == 0
        summary = json.loads((d / "mc_summary.json").read_text())
        assert summary["config"]["base_seed"] == seed
        outs.append((d / "mc.csv").read_bytes())
    assert outs[0] != outs[1]


def test_seed_flag_on_other_engines_is_a_no_op_note(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "engine": "meanfield", "M": 2, "t_max": 1.0, "sample_dt": 0.5,
        "output": "mf"}))
    assert main(["run", str(path), "--seed", "3",
                 "--output-dir", str(tmp_path)]) == 0
    assert "--seed has no effect" in capsys.readouterr().err


def test_sweep_subcommand_writes_grid_and_band_rows(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "engine": "phase_sweep", "M": 2,
        "g": 25.043961347997644, "gamma": 0.04,
        "initial_photons": [20, 0],
        "d1_values": [0.04, 0.25], "axis2_values": [0.04, 1.5],
        "horizon": 60.0, "output": "grid"}))
    assert main(["sweep", str(path), "--output-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "grid.csv").read_text().strip().splitlines()
    assert lines[0] == "d1,kappa,stable,t_break,z_long"
    assert len(lines) == 1 + 4
    summary = json.loads((tmp_path / "grid_summary.json").read_text())
    det = summary["summary"]["details"]
    assert det["n_cells"] == 4 and det["n_failed_cells"] == 0
    rows = det["rows"]
    assert rows[0]["kappa"] == 0.04 and rows[0]["n_stable"] >= 1
    assert "analytic_boundary" in det
    assert "stable cells" in capsys.readouterr().out


def test_horizon_override_reaches_the_sweep(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "engine": "phase_sweep", "M": 2,
        "g": 25.043961347997644, "gamma": 0.04,
        "initial_photons": [20, 0],
        "d1_values": [0.04], "axis2_values": [0.04],
        "horizon": 1400.0, "output": "grid"}))
    assert main(["sweep", str(path), "--horizon", "40",
                 "--output-dir", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "grid_summary.json").read_text())
    assert summary["config"]["horizon"] == 40.0


def test_boundary_subcommand_evaluates_the_analytic_curve(tmp_path, capsys):
    assert main(["boundary", "fig6a", "--output-dir", str(tmp_path)]) == 0
    out_files = list(tmp_path.glob("*_boundary.csv"))
    assert len(out_files) == 1
    lines = out_files[0].read_text().strip().splitlines()
    assert lines[0] == "d1,kappa"
    assert len(lines) > 100
    d1, kappa = np.loadtxt(out_files[0], delimiter=",", skiprows=1, unpack=True)
    assert np.all(np.diff(d1) > 0)
    assert np.all(np.diff(kappa) > 0)  # larger drive survives only larger loss
    assert "domain edge" in capsys.readouterr().out


def test_presets_list_subcommand(capsys):
    assert main(["presets", "list"]) == 0
    listed = capsys.readouterr().out.split()
    assert listed == sorted(preset_names())
    assert "fig2g-i" in listed
