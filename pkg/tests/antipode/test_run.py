import json
import os

import numpy as np
import pytest
from unittest.mock import patch

from antipode.exceptions import EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, EXIT_VERIFY
from antipode.maps import make_random_trig
from antipode.run import AntipodeRunner, build_parser, main, resolve_map


@pytest.fixture
def run_config(config, tmp_path):
    """Test config writing into a temporary output directory."""
    config.output_dir = str(tmp_path)
    return config


@pytest.fixture
def run_command(run_config, mock_logger):
    """Parse argv and run it through a fresh runner, returning the exit code."""
    def _run(*argv):
        argv = list(argv)
        args = build_parser(run_config).parse_args(argv)
        return AntipodeRunner(run_config, mock_logger).run(args, argv)
    return _run


def read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def run_main(argv):
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    return excinfo.value.code


def test_resolve_named_maps():
    assert resolve_map("random-trig", 3, 4, seed=1).codomain_dim == 4
    padded = resolve_map("inclusion-pad", 2, 3, seed=0)
    assert padded.kind == "inclusion" and padded.pad == 1
    poly = resolve_map("poly-eval", 2, 5, seed=0)
    assert poly.kind == "poly-eval" and poly.codomain_dim == 5
    assert resolve_map("tensor-power", 2, 4, seed=0, l=1).pad == 0
    with pytest.raises(ValueError):
        resolve_map("poly-eval", 3, 5, seed=0)
    with pytest.raises(ValueError):
        resolve_map("no-such-map", 2, 3, seed=0)


def test_resolve_map_from_descriptor_file(tmp_path):
    odd_map = make_random_trig(3, 4, seed=2)
    path = tmp_path / "map.json"
    path.write_text(odd_map.to_json(), encoding="utf-8")
    loaded = resolve_map(str(path), 3, 4, seed=0)
    v = np.array([0.0, 0.6, 0.8])
    assert np.array_equal(loaded.evaluate(v), odd_map.evaluate(v))
    with pytest.raises(ValueError):
        resolve_map(str(path), 2, 4, seed=0)


def test_solve_circle_writes_a_verified_certificate(run_command, tmp_path):
    assert run_command("solve-circle", "--k", "1", "--seed", "7") == EXIT_OK
    cert = read_json(tmp_path / "certificate.json")
    assert cert["residual"] <= 1e-9
    assert cert["seed"] == 7
    manifest = read_json(tmp_path / "manifest.json")
    assert manifest["status"] == "ok"
    assert manifest["seed"] == 7
    assert str(tmp_path / "certificate.json") in manifest["outputs"]
    assert set(manifest["versions"]) == {"antipode", "numpy", "scipy"}


def test_solve_circle_on_poly_eval(run_command, tmp_path):
    assert run_command("solve-circle", "--k", "2", "--map", "poly-eval") == EXIT_OK
    manifest = read_json(tmp_path / "manifest.json")
    assert manifest["details"]["reports"]["delta_invariant"] <= 1e-6


def test_solve_circle_on_padded_inclusion(run_command, tmp_path):
    assert run_command("solve-circle", "--k", "1", "--map", "inclusion-pad") == EXIT_OK
    manifest = read_json(tmp_path / "manifest.json")
    assert "degenerate" in manifest["details"]["flags"]
    assert manifest["details"]["theta"] == 0.0


def test_verify_accepts_fresh_and_rejects_tampered_certificates(run_command, tmp_path):
    assert run_command("solve-circle", "--k", "2", "--seed", "3") == EXIT_OK
    path = tmp_path / "certificate.json"
    assert run_command("verify", "--cert", str(path)) == EXIT_OK
    assert read_json(tmp_path / "verification.json")["passed"]

    original = read_json(path)
    tampered = dict(original, lambdas=original["lambdas"][::-1])
    bad_weights = tmp_path / "bad_weights.json"
    bad_weights.write_text(json.dumps(tampered), encoding="utf-8")
    assert run_command("verify", "--cert", str(bad_weights)) == EXIT_VERIFY

    wrong_diameter = tmp_path / "wrong_diameter.json"
    wrong_diameter.write_text(json.dumps(dict(original, diameter=original["diameter"] - 0.05)), encoding="utf-8")
    assert run_command("verify", "--cert", str(wrong_diameter)) == EXIT_VERIFY
    assert not read_json(tmp_path / "verification.json")["passed"]


def test_bounds_for_one_pair(tmp_path, capsys):
    code = run_main(["bounds", "--m", "3", "--n", "2", "--out", str(tmp_path), "--no-progress"])
    assert code == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    header = lines.index("m,n,lower,upper,exact,lower_source,upper_source")
    m, n, lower, upper, exact, lower_source, upper_source = lines[header + 1].split(",")
    assert (m, n, exact) == ("3", "2", "True")
    assert float(upper) == pytest.approx(0.8090169943749474, abs=1e-15)
    assert float(lower) == float(upper)
    assert (lower_source, upper_source) == ("circle-extremal", "circle")


def test_bounds_table_file(run_command, tmp_path):
    assert run_command("bounds", "--table", "4", "6", "--csv", "atlas.csv", "--json", "atlas.json") == EXIT_OK
    lines = (tmp_path / "atlas.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 25
    assert len(read_json(tmp_path / "atlas.json")) == 24


def test_solve_simplex_on_the_inclusion(run_command, tmp_path):
    assert run_command("solve-simplex", "--n", "4", "--map", "inclusion") == EXIT_OK
    details = read_json(tmp_path / "manifest.json")["details"]
    assert details["lambdas"] == pytest.approx([0.2] * 5, abs=1e-6)
    assert details["restart"] == 0


@pytest.mark.parametrize("argv", [
    ["solve-lemma", "--r", "0", "--n", "3", "--l", "2", "--points", "lattice"],
    ["solve-lemma", "--r", "1", "--n", "2", "--k", "1", "--points", "multiindex"],
    ["solve-lemma", "--r", "0", "--n", "3", "--k", "4"],
])
def test_solve_lemma_point_sources(run_command, tmp_path, argv):
    assert run_command(*argv) == EXIT_OK
    assert read_json(tmp_path / "certificate.json")["residual"] <= 1e-9


def test_solve_lemma_rejects_mismatched_point_sources(run_command, tmp_path):
    assert run_command("solve-lemma", "--r", "1", "--n", "2", "--points", "lattice") == EXIT_USAGE
    assert read_json(tmp_path / "manifest.json")["status"] == "usage-error"


def test_not_converged_exit_keeps_the_best_certificate(tmp_path):
    with patch.dict(os.environ, {"ANTIPODE_MAX_EVALS": "1"}):
        code = run_main(["solve-simplex", "--n", "3", "--restarts", "1", "--out", str(tmp_path), "--no-progress"])
    assert code == EXIT_NOT_CONVERGED
    assert (tmp_path / "best_certificate.json").exists()
    assert not (tmp_path / "certificate.json").exists()
    manifest = read_json(tmp_path / "manifest.json")
    assert manifest["status"] == "not-converged"
    assert manifest["exit_code"] == EXIT_NOT_CONVERGED


@pytest.mark.parametrize("argv", [
    ["solve-circle"],
    ["frobnicate"],
    ["solve-circle", "--k", "one"],
])
def test_usage_errors_exit_with_one(argv):
    assert run_main(argv) == EXIT_USAGE


def test_runtime_usage_errors_exit_with_one(tmp_path):
    assert run_main(["bounds", "--out", str(tmp_path)]) == EXIT_USAGE
    assert run_main(["solve-circle", "--k", "1", "--map", "nope", "--out", str(tmp_path)]) == EXIT_USAGE


def test_help_exits_cleanly():
    assert run_main(["--help"]) == EXIT_OK


def test_same_seed_gives_identical_certificates(run_config, mock_logger, tmp_path):
    contents = []
    for name in ("first", "second"):
        run_config.output_dir = str(tmp_path / name)
        argv = ["solve-simplex", "--n", "3", "--seed", "5"]
        args = build_parser(run_config).parse_args(argv)
        assert AntipodeRunner(run_config, mock_logger).run(args, argv) == EXIT_OK
        contents.append((tmp_path / name / "certificate.json").read_bytes())
    assert contents[0] == contents[1]


def test_corroborate_asymptotic_writes_csv(run_command, tmp_path):
    assert run_command("corroborate", "asymptotic", "--n", "2", "--l", "1", "2", "3", "4", "--alpha", "0.5") == EXIT_OK
    rows = (tmp_path / "asymptotic.csv").read_text(encoding="utf-8").splitlines()
    assert len(rows) == 5
    assert read_json(tmp_path / "manifest.json")["details"]["trend"] == "decreasing from row 2"
    assert read_json(tmp_path / "corroborate-asymptotic.json")["label"] == "corroboration"


def test_search_min_diameter_command(run_command, tmp_path):
    assert run_command("search-min-diameter", "--map", "poly-eval", "--k", "1", "--restarts", "3") == EXIT_OK
    report = read_json(tmp_path / "search.json")
    assert report["passed"]
    assert report["best_diameter"] >= report["bound"] - 1e-3
