import json
import math

import pytest

from qrdyn.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, RunConfig, UsageError, _float_list, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ---- eval ----

def test_eval_examples(capsys):
    assert run(capsys, "eval", "--map", "ns", "--point", "0,0,-5")[:2] == (0, "0 0 -5\n")
    assert run(capsys, "eval", "--map", "zorich", "--point", "0,0,0")[:2] == (0, "0 0 1\n")


@pytest.mark.parametrize("point", ["bad", "1,2", "1,2,x", "1,2,nan"])
def test_eval_bad_point_is_usage_error(capsys, point):
    code, _, err = run(capsys, "eval", "--map", "zorich", "--point", point)
    assert code == EXIT_USAGE and "error" in err


def test_eval_prints_17_significant_digits(capsys):
    code, out, _ = run(capsys, "eval", "--map", "ns", "--point", "0,0,2")
    assert code == 0
    assert out.split()[2] == "{:.17g}".format(2 + math.exp(2))


def test_eval_exponent_notation_and_json(capsys):
    code, out, _ = run(capsys, "eval", "--map", "scaling", "--scale", "2e0", "--point", "1e-3,0,-2.5E1", "--json")
    assert code == 0 and json.loads(out)["output"] == [0.002, 0.0, -50.0]


def test_eval_overflow_reports_failure(capsys):
    code, _, err = run(capsys, "eval", "--map", "zorich", "--point", "0,0,800")
    assert code == EXIT_FAIL and "overflow" in err


def test_unknown_map_and_command(capsys):
    assert run(capsys, "eval", "--map", "nope", "--point", "0,0,0")[0] == EXIT_USAGE
    assert run(capsys, "frobnicate")[0] == EXIT_USAGE


def test_constants_json(capsys):
    code, out, _ = run(capsys, "constants", "--json")
    d = json.loads(out)
    assert code == 0 and d["C1"] == pytest.approx(1 / math.sqrt(2), abs=1e-6)


# ---- config ----

def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"map": {"kind": "identity"}, "radii": [1.0, 2.0, 3.0], "samples": 50}))
    out = tmp_path / "o"
    code, stdout, _ = run(capsys, "growth", "--config", str(cfg), "--radii", "2,3", "--out", str(out), "--json")
    assert code == 0
    d = json.loads(stdout)
    assert d["radii"] == [2.0, 3.0] and d["status"] == "undefined"  # identity: M <= e at r = 2
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["samples"] == 50 and man["config"]["map"] == {"kind": "identity"}


def test_config_rejects_unknown_keys_and_bad_counts(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"sampels": 5}))
    assert run(capsys, "growth", "--config", str(cfg))[0] == EXIT_USAGE
    with pytest.raises(UsageError):
        RunConfig(samples=0).validate()
    with pytest.raises(UsageError):
        RunConfig(hausdorff_tol=-1).validate()


def test_float_list_ranges():
    assert _float_list("20:200:20") == [20.0 * k for k in range(1, 11)]
    assert _float_list("1,2.5,1e1") == [1.0, 2.5, 10.0]


# ---- growth ----

def test_growth_F_writes_files(tmp_path, capsys):
    out = tmp_path / "g"
    code, stdout, _ = run(capsys, "growth", "--map", "ns", "--radii", "20:200:20", "--out", str(out), "--json")
    assert code == 0
    order = json.loads(stdout)["order"]
    assert 1.8 <= order <= 2.2
    assert json.loads((out / "order.json").read_text())["order"] == order
    lines = (out / "growth.csv").read_bytes().split(b"\r\n")
    assert lines[0] == b"r,Mhat,mhat" and len(lines) == 12


def test_growth_identity_order_near_zero(tmp_path, capsys):
    radii = ",".join(repr(math.exp(k)) for k in (5, 6, 7, 8))
    code, stdout, _ = run(capsys, "growth", "--map", "identity", "--radii", radii, "--samples", "200",
                          "--out", str(tmp_path), "--json")
    assert code == 0 and json.loads(stdout)["order"] == pytest.approx(0.3128, abs=1e-4)


def test_growth_overflow_reported(tmp_path, capsys):
    code, out, err = run(capsys, "growth", "--map", "zorich", "--radii", "100,800", "--out", str(tmp_path))
    assert code == EXIT_FAIL and "overflow" in err


# ---- directions ----

def test_directions_hemisphere_and_determinism(tmp_path, capsys):
    args = ["directions", "--map", "ns", "--grid-n", "5000", "--json"]
    code, stdout, _ = run(capsys, *args, "--out", str(tmp_path / "a"))
    assert code == 0
    rep = json.loads(stdout)
    assert rep["status"] == "ok" and rep["hausdorff"] <= 0.15
    run(capsys, *args, "--out", str(tmp_path / "b"), "--threads", "3")
    for name in ("directions.csv", "directions.json", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["config_hash"] == mb["config_hash"]
    assert set(ma["versions"]) == {"qrdyn", "numpy", "scipy", "python"}
    assert "directions" in ma["durations_s"]


def test_directions_glued_lists_caps(tmp_path, capsys):
    code, stdout, _ = run(capsys, "directions", "--map", "glued", "--cap", "1,0,0,0.6283185307179586",
                          "--cap", "0,0,-1,0.4487989505128276", "--grid-n", "5000", "--out", str(tmp_path), "--json")
    rep = json.loads(stdout)
    assert code == 0 and rep["target"] == "caps"
    assert len(rep["per_cap"]) == 2 and all(c["n_samples"] > 0 for c in rep["per_cap"])


def test_directions_identity_is_empty(tmp_path, capsys):
    code, stdout, _ = run(capsys, "directions", "--map", "identity", "--grid-n", "2000", "--out", str(tmp_path),
                          "--json")
    assert code == EXIT_OK and json.loads(stdout)["status"] == "empty"
    assert json.loads((tmp_path / "report.json").read_text())["status"] == "empty"
    assert (tmp_path / "directions.csv").read_text().startswith("ux,uy,uz,shell_radius")


def test_directions_identity_degenerate_thresholds(tmp_path, capsys):
    # R below the identity's float noise floor makes the thresholds stall
    code, stdout, _ = run(capsys, "directions", "--map", "scaling", "--scale", "1", "--grid-n", "2000",
                          "--threshold-radius", "1", "--out", str(tmp_path), "--json")
    d = json.loads(stdout)
    assert code == EXIT_OK and d["status"] == "empty"


# ---- covering ----

def test_covering_command_writes_ply(tmp_path, capsys):
    ply = tmp_path / "surface.ply"
    code, stdout, _ = run(capsys, "covering", "--height", "10", "--ply", str(ply), "--json")
    assert code == 0 and json.loads(stdout)["passed"] is True
    assert ply.read_text().startswith("ply\nformat ascii 1.0")


def test_covering_precondition_is_usage_error(capsys):
    assert run(capsys, "covering", "--height", "1")[0] == EXIT_USAGE


# ---- verify ----

def test_verify_zorich_passes(capsys):
    code, out, _ = run(capsys, "verify", "zorich", "--json")
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and rows and all(r["passed"] for r in rows)
    assert {"check", "passed", "value", "tolerance", "suite"} <= set(rows[0])


def test_verify_covering_20_configurations(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", "covering", "--json", "--out", str(tmp_path))
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and len(rows) == 20 and all(r["passed"] for r in rows)
    assert json.loads((tmp_path / "verify.json").read_text()) == rows


def test_verify_growth_reports_the_failing_check(capsys):
    # the checker reports that F satisfies the condition at r = 5 (see ledger)
    code, out, _ = run(capsys, "verify", "growth", "--json")
    rows = {r["check"]: r for r in map(json.loads, out.splitlines())}
    assert code == EXIT_FAIL
    failed = [k for k, r in rows.items() if not r["passed"]]
    assert failed == ["min_modulus_condition_F_r=5"]


@pytest.mark.slow
def test_verify_all_is_deterministic(tmp_path, capsys):
    a = run(capsys, "verify", "all", "--json", "--out", str(tmp_path / "a"))
    b = run(capsys, "verify", "all", "--json", "--out", str(tmp_path / "b"))
    assert a[0] == b[0] == EXIT_FAIL
    assert (tmp_path / "a" / "verify.json").read_bytes() == (tmp_path / "b" / "verify.json").read_bytes()
    suites = {json.loads(line)["suite"] for line in a[1].splitlines()}
    assert suites == {"zorich", "metrics", "covering", "growth", "directions"}
