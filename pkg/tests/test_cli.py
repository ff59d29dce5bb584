import json
import math

import pytest

from dckit.cli import SECTIONS, main
from dckit.config import settings


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_classify_prints_json(capsys):
    code, out, _ = run(capsys, "classify", "--seq", "gevrey:s=1", "--kmax", "64")
    assert code == 0
    report = json.loads(out)
    assert report["sequence"] == "gevrey:s=1.0"
    assert report["log_convex"]["status"] == "Holds"


def test_compare_exit_codes(capsys):
    code, _, _ = run(capsys, "compare", "--m", "gevrey:s=1", "--n", "gevrey:s=2", "--kmax", "64")
    assert code == 0
    code, _, _ = run(capsys, "compare", "--m", "gevrey:s=2", "--n", "gevrey:s=1", "--kmax", "64")
    assert code == 1


def test_classify_exit_reflects_standing_conditions(capsys):
    code, out, _ = run(capsys, "classify", "--seq", "const:1", "--kmax", "64")
    assert code == 1
    assert json.loads(out)["ratio_to_infinity"]["status"] == "Fails"
    code, _, _ = run(capsys, "classify", "--seq", "gevrey:s=1", "--kmax", "64")
    assert code == 0


def test_compare_fast_sequence_reports_log_sup(capsys):
    code, out, _ = run(capsys, "compare", "--m", "qpow:q=20", "--n", "const:1", "--kmax", "256")
    assert code == 1
    report = json.loads(out)
    assert report["ratio_root_sup"] is None
    assert report["log_ratio_root_sup"] == pytest.approx(256 * math.log(20), rel=1e-9)


def test_repeated_runs_are_identical(capsys):
    argv = ("classify", "--seq", "gevrey:s=0.3333333333333333", "--kmax", "64")
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    assert json.loads(first)["sequence"] == "gevrey:s=0.3333333333333333"


@pytest.mark.parametrize("argv", [
    ["classify", "--seq", "foo"],
    ["classify"],
    ["nonsense"],
    ["classify", "--seq", "const:1", "--format", "xml"],
])
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 3
    assert out == ""
    assert "error" in err


def test_jet_compose_csv(capsys):
    code, out, _ = run(capsys, "jet-compose", "--f-seq", "const:1", "--g-seq", "const:1",
                       "--order", "6", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 7
    assert lines[0] == "0,1,0.0"
    assert lines[1] == "1,1,0.0"
    k, sign, log10 = lines[2].split(",")
    assert (k, sign) == ("2", "1")
    assert float(log10) == pytest.approx(math.log10(4.0))


def test_counterexample_table(capsys):
    code, out, _ = run(capsys, "counterexample54", "--q", "2", "--nmax", "8")
    assert code == 0
    report = json.loads(out)
    assert len(report["rows"]) == 8
    assert report["verdict"]["status"] == "Holds"


def test_counterexample_csv(capsys):
    code, out, _ = run(capsys, "counterexample54", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("n,valid,log_term")
    assert len(lines) == 9


def test_human_format(capsys):
    code, out, _ = run(capsys, "counterexample54", "--format", "human")
    assert code == 0
    assert out.splitlines()[-1] == "status: Holds"


def test_radius_flag_mismatch_is_usage_error(capsys):
    code, _, err = run(capsys, "radius-test", "--jet-seq", "const:1", "--order", "16",
                       "--r", "const:1", "--delta", "0.5", "--variant", "roumieu", "--kmax", "64")
    assert code == 3
    assert "flag_mismatch" in err


def test_jet_options_are_exclusive(capsys):
    code, _, _ = run(capsys, "jet-classify", "--jet", "a.csv", "--jet-seq", "const:1")
    assert code == 3


def test_domain_error_is_numeric(capsys):
    code, out, _ = run(capsys, "norms", "--expr", "log(x)", "--grid", "0,1,5")
    assert code == 4
    assert out == ""


def test_norms_with_general_weight(capsys):
    code, out, _ = run(capsys, "norms", "--expr", "exp(x)", "--grid", "0,1,9",
                       "--order", "10", "--r", "const:1")
    assert code == 0
    report = json.loads(out)
    assert report["lower"] == pytest.approx(math.e)
    assert report["general_norm"] >= report["lower"]


def test_output_file(capsys, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "counterexample54", "--output", str(target))
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text())["q"] == 2.0


def test_tolerance_flags_are_scoped(capsys):
    before = settings.convexity_tol
    code, _, _ = run(capsys, "classify", "--seq", "gevrey:s=1", "--kmax", "64",
                     "--tol-convexity", "0.5")
    assert code == 0
    assert settings.convexity_tol == before


@pytest.mark.parametrize("section", list(SECTIONS))
def test_cookbook_sections_pass(capsys, tmp_path, section):
    code, out, _ = run(capsys, "cookbook", section, "--dir", str(tmp_path))
    assert code == 0, out
    assert json.loads(out)["passed"] is True
    summary = (tmp_path / "summary.txt").read_text().splitlines()
    assert summary[0] == f"{section}: pass"
    inputs = json.loads((tmp_path / "inputs.json").read_text())
    assert "thresholds" in inputs
    assert json.loads((tmp_path / "report.json").read_text())


def test_unknown_cookbook_section(capsys, tmp_path):
    code, _, err = run(capsys, "cookbook", "thm9.9", "--dir", str(tmp_path))
    assert code == 3
    assert "unknown_section" in err
