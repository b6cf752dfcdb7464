import csv
import json
import math

import pytest

from szegolab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


def test_dims_report_and_csv(capsys, tmp_path):
    path = tmp_path / "dims.csv"
    code, rep, _ = report(capsys, "dims", "--weights", "1,2", "--k-max", "40", "--csv", str(path))
    assert code == 0
    assert rep["schema_version"] == "1"
    assert rep["command"] == "dims"
    assert rep["results"]["dims"][7] == [7, 4]
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "value", "fit", "residual"]
    assert rows[8][:2] == ["7", "4"]


def test_report_has_no_timing(capsys):
    _, out, err = run(capsys, "stratify", "--weights", "2,4,6")
    assert "time" not in out
    assert "stratify:" in err
    rep = json.loads(out)
    assert rep["results"]["stratification"]["ell0"] == 2


def test_output_file_is_written_atomically(capsys, tmp_path):
    out = tmp_path / "r.json"
    out.write_text("stale")
    assert main(["levi", "--weights", "1,2", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert [v["status"] for v in rep["verdicts"]] == ["PASS", "PASS"]
    assert [p.name for p in tmp_path.iterdir()] == ["r.json"]


def test_identical_configs_give_identical_bytes(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert main(["geom-integral", "--weights", "1,2,3", "--samples", "20000", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_geometric_integral_product_rule(capsys):
    code, rep, _ = report(capsys, "geom-integral", "--weights", "1,2", "--method", "product1d")
    assert code == 0
    assert rep["results"]["exact"] == pytest.approx(math.pi**2 / 2)


def test_calibrate(capsys):
    code, rep, _ = report(capsys, "calibrate", "--n", "1")
    assert code == 0
    assert rep["results"]["kappa"] == pytest.approx(2.0, abs=1e-6)


def test_kernel_diag_at_a_singular_point(capsys):
    code, rep, _ = report(capsys, "kernel-diag", "--weights", "1,2", "--point", "0,1")
    assert code == 0
    assert rep["results"]["stratum"] == 2


def test_kernel_offdiag(capsys):
    code, rep, _ = report(capsys, "kernel-offdiag", "--weights", "1,1", "--point", "1,0",
                          "--point2", "0.9,0.4359")
    assert code == 0
    assert rep["results"]["decay"]["rate"] > 0


def test_quotient_average(capsys):
    code, rep, _ = report(capsys, "quotient-avg", "--m", "3", "--w", "1,2", "--pairs", "10")
    assert code == 0
    assert [r["k"] for r in rep["results"]["rows"]] == [3, 7, 12]


def test_orbifold_skips_non_invariant_integrands(capsys):
    code, rep, _ = report(capsys, "integrate-orbifold", "--m", "3", "--w", "1,2", "--samples", "20000")
    assert code == 0
    skipped = [r for r in rep["results"]["integrals"] if "skipped" in r]
    assert [r["integrand"] for r in skipped] == ["oscillating"]


def test_reduce_and_sigma(capsys):
    code, rep, _ = report(capsys, "reduce", "--weights", "1,1,1", "--b", "1,-1,0", "--k-max", "30")
    assert code == 0
    assert rep["results"]["comparison"]["all_equal"]
    code, rep, _ = report(capsys, "sigma", "--weights", "1,1,1", "--b", "1,-1,0", "--k-list", "2,4")
    assert code == 0


def test_failing_verdict_exit_code(capsys):
    # finite differences never reproduce the closed form to zero tolerance
    code, _, err = run(capsys, "levi", "--tol", "0", "--weights", "1,2,3")
    assert code == 4
    assert "[FAIL]" in err


@pytest.mark.parametrize("argv", [
    ["dims", "--weights", "1,0"],
    ["dims", "--weights", "a,b"],
    ["stratum", "--weights", "1,2", "--point", "1,1"],
    ["stratum", "--weights", "1,2"],
    ["reduce", "--weights", "1,1", "--b", "1,-1"],
    ["reduce", "--weights", "1,1,1", "--b", "1,1,1"],
    ["reduce", "--weights", "1,1,1"],
    ["kernel-offdiag", "--weights", "1,1", "--point", "1,0"],
    ["calibrate", "--n", "0"],
    ["geom-integral", "--samples", "0"],
    ["levi", "--point", "1,2,3"],
])
def test_configuration_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_unwritable_output(capsys, tmp_path):
    assert run(capsys, "stratify", "--out", str(tmp_path / "missing" / "r.json"))[0] == 2


def test_unknown_command(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nope"])
    assert exc.value.code == 2


def test_numerical_failure_exit_code(capsys):
    # at low degree the two-term fit cannot reach the residual bound
    code, _, err = run(capsys, "kernel-diag", "--weights", "1,5", "--k-list", "6:13:1")
    assert code == 3
    assert "numerical failure" in err


def test_fit_with_no_admissible_degrees_is_a_config_error(capsys):
    code, _, err = run(capsys, "kernel-diag", "--weights", "2,4", "--point", "0.6,0.8",
                       "--k-list", "1,3,5,7,9,11,13")
    assert code == 2
