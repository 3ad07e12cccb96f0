import json
import math
import os

import numpy as np
import pytest

from conelab import ConfigError
from conelab.cli import RunConfig, main, validate_config


@pytest.fixture(autouse=True)
def no_out_env(monkeypatch):
    monkeypatch.delenv("CONELAB_OUT", raising=False)


def read_summary(out):
    with open(os.path.join(out, "summary.json")) as fh:
        return json.load(fh)


def test_empty_config_gives_documented_defaults():
    cfg = validate_config("", "spectrum")
    assert cfg.p == 3 and cfg.q == 3
    assert cfg.max_degree == 3
    assert cfg.tol == 1e-8
    assert cfg.rho0 == 0.5
    assert cfg.seed == 0
    assert cfg.out == "./conelab-out"
    assert cfg.plot is False
    # the foliate shot only needs the asymptote tolerance, not the solver one
    assert validate_config("", "foliate").tol == 1e-3


def test_config_round_trips_through_text():
    cfg = validate_config("p=2\nq=4\nt-min=-0.01\nt-max=0.03\nseed=5",
                          "plateau-sweep")
    again = validate_config(cfg.to_text(), "plateau-sweep")
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()


def test_config_hash_ignores_output_location_only():
    base = validate_config("", "spectrum")
    moved = validate_config("out=elsewhere\nplot=true", "spectrum")
    changed = validate_config("p=4", "spectrum")
    assert base.config_hash() == moved.config_hash()
    assert base.config_hash() != changed.config_hash()


def test_all_invalid_entries_are_reported_together():
    with pytest.raises(ConfigError) as exc:
        validate_config("p = 0\nrho0 = 1.5\ntau = 0\nmystery = 7",
                        "spectrum")
    text = str(exc.value)
    assert "p" in text and ">= 1" in text
    assert "rho0" in text and "(0,1)" in text
    assert "tau" in text
    assert "mystery" in text
    assert len(exc.value.entries) == 4


def test_unparseable_and_unknown_lines():
    with pytest.raises(ConfigError) as exc:
        validate_config("p == 3\nsamples = few", "spectrum")
    text = str(exc.value)
    assert "p" in text
    assert "samples" in text


def test_comments_and_blank_lines_are_ignored():
    cfg = validate_config("# a comment\n\np = 2\n q = 5 \n", "spectrum")
    assert (cfg.p, cfg.q) == (2, 5)


def test_offset_range_validation():
    with pytest.raises(ConfigError):
        validate_config(f"t-min=0.02\nt-max=-0.02", "plateau-sweep")
    with pytest.raises(ConfigError):
        validate_config(f"t-max={math.pi / 8}", "plateau-sweep")


def test_spectrum_command_writes_expected_row(tmp_path):
    out = str(tmp_path / "run")
    assert main(["spectrum", "--p", "3", "--q", "3", "--max-degree", "3",
                 "--out", out]) == 0
    rows = [ln for ln in open(os.path.join(out, "spectrum.csv"))
            if not ln.startswith("#")]
    assert rows[0].strip() == "k,l,degeneracy,mu,gamma_plus,gamma_minus"
    assert rows[1].strip() == "0,0,1,-6,-2,-3"
    summary = read_summary(out)
    assert summary["command"] == "spectrum"
    assert all(summary["checks"].values())
    assert summary["outputs"] == ["spectrum.csv"]


def test_csv_metadata_header(tmp_path):
    out = str(tmp_path / "run")
    main(["spectrum", "--out", out, "--seed", "9"])
    lines = open(os.path.join(out, "spectrum.csv")).read().splitlines()
    assert lines[0].startswith("# version=")
    assert lines[1].startswith("# config=")
    assert lines[2] == "# seed=9"


def test_plateau_sweep_degenerate_window_is_single_cone(tmp_path):
    out = str(tmp_path / "run")
    assert main(["plateau-sweep", "--p", "3", "--q", "3", "--t-min", "0",
                 "--t-max", "0", "--out", out]) == 0
    rows = [ln for ln in open(os.path.join(out, "sweep.csv"))
            if not ln.startswith("#")]
    assert len(rows) == 2
    vals = rows[1].split(",")
    assert float(vals[0]) == 0.0
    assert float(vals[1]) == 0.0          # cone hits the origin
    assert float(vals[2]) == float(vals[3]) == 0.0
    assert float(vals[4]) == pytest.approx(math.pi / 4, abs=1e-12)


def test_foliate_command_outputs_and_fits(tmp_path):
    out = str(tmp_path / "run")
    assert main(["foliate", "--p", "3", "--q", "3", "--out", out]) == 0
    with open(os.path.join(out, "foliate_fits.json")) as fh:
        fits = json.load(fh)
    assert set(fits) == {"foliate_plus", "foliate_minus"}
    assert fits["foliate_plus"]["exponent"] == pytest.approx(-2.0, abs=0.05)
    assert fits["foliate_minus"]["coefficient"] < 0
    assert fits["foliate_plus"]["window"] == [10.0, 100.0]


def test_jacobi_suite_checks(tmp_path):
    out = str(tmp_path / "run")
    assert main(["jacobi-suite", "--fields", "50", "--out", out]) == 0
    summary = read_summary(out)
    assert summary["checks"]["three_annulus_no_violations"] is True
    assert summary["checks"]["norm_closed_form_matches_quadrature"] is True
    assert summary["checks"]["dirichlet_rigidity_zero_data"] is True
    assert summary["levels_checked"] > 50
    assert os.path.exists(os.path.join(out, "field_0.json"))
    assert os.path.exists(os.path.join(out, "norms_0.csv"))


def test_diagnostics_command(tmp_path):
    out = str(tmp_path / "run")
    assert main(["diagnostics", "--out", out]) == 0
    with open(os.path.join(out, "diagnostics.json")) as fh:
        diag = json.load(fh)
    for name in ("foliate_plus", "foliate_minus"):
        assert diag[name]["mass_bound_ok"] is True
        assert diag[name]["density_radius"] is not None


def test_exit_code_2_on_invalid_config(tmp_path, capsys):
    assert main(["spectrum", "--p", "0"]) == 2
    err = capsys.readouterr().err
    assert "config error" in err and "p" in err


def test_exit_code_2_on_missing_config_file(tmp_path):
    assert main(["spectrum", "--config",
                 str(tmp_path / "nope.txt")]) == 2


def test_exit_code_3_on_nonconvergence(tmp_path, capsys):
    out = str(tmp_path / "run")
    code = main(["foliate", "--r-max", "15", "--tol", "1e-15", "--out", out])
    assert code == 3
    assert "foliate.asymptote" in capsys.readouterr().err


def test_exit_code_1_on_failed_check(tmp_path, capsys):
    # an unreachably tight density pin makes a diagnostics check fail
    out = str(tmp_path / "run")
    code = main(["diagnostics", "--tau", "1e-9", "--out", out])
    assert code == 1
    assert "density_pins_cone" in capsys.readouterr().err
    summary = read_summary(out)
    assert not all(summary["checks"].values())


def test_output_dir_precedence(tmp_path, monkeypatch):
    env_dir = str(tmp_path / "from_env")
    flag_dir = str(tmp_path / "from_flag")
    monkeypatch.setenv("CONELAB_OUT", env_dir)
    main(["spectrum"])
    assert os.path.isdir(env_dir)
    main(["spectrum", "--out", flag_dir])
    assert os.path.isdir(flag_dir)
    assert not os.path.exists(os.path.join(flag_dir, "from_env"))


def test_reruns_are_byte_identical(tmp_path):
    args = ["jacobi-suite", "--fields", "20", "--seed", "3"]
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(args + ["--out", out1]) == 0
    assert main(args + ["--out", out2]) == 0
    for name in ("summary.json", "field_0.json", "norms_0.csv"):
        with open(os.path.join(out1, name), "rb") as fh:
            first = fh.read()
        with open(os.path.join(out2, name), "rb") as fh:
            second = fh.read()
        assert first == second, name


def test_seed_changes_jacobi_sample(tmp_path):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    main(["jacobi-suite", "--fields", "4", "--seed", "1", "--out", out1])
    main(["jacobi-suite", "--fields", "4", "--seed", "2", "--out", out2])
    a = open(os.path.join(out1, "field_0.json")).read()
    b = open(os.path.join(out2, "field_0.json")).read()
    assert a != b


def test_plot_emission_is_optional_svg(tmp_path):
    out = str(tmp_path / "run")
    assert main(["spectrum", "--out", out, "--plot"]) == 0
    assert os.path.exists(os.path.join(out, "spectrum.svg"))
    out2 = str(tmp_path / "bare")
    main(["spectrum", "--out", out2])
    assert not os.path.exists(os.path.join(out2, "spectrum.svg"))


def test_unknown_command_rejected():
    with pytest.raises(SystemExit):
        main(["resonate"])
