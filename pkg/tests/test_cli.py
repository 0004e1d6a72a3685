"""Script execution, reports, figures and the interactive loop."""

import io
import json

import pytest

from supersmooth.cli import Config, Session, CommandError, main, repl, run_script

NONSPLIT = """\
ring R = C(1|2)
ring Q = R / (x1^2 + t1*t2)
nf x1^4
nf x1^2
split
assert nf x1^4 == 0
assert split is NotSplit
"""


def write(tmp_path, text, name="script.ss"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_nonsplit_regression_script(tmp_path):
    code, report = run_script(write(tmp_path, NONSPLIT), Config(seed=42))
    assert code == 0
    assert report["summary"]["x1^4"] == "0"
    assert report["summary"]["x1^2"] == "-t1t2"
    assert report["summary"]["split"] == "NotSplit"
    assert report["failures"] == 0


def test_empty_script_exits_clean(tmp_path):
    code, report = run_script(write(tmp_path, "\n# nothing here\n"), Config())
    assert code == 0
    assert report["entries"] == []


def test_unknown_command_is_usage_error(tmp_path):
    code, report = run_script(write(tmp_path, "ring R = C(1|1)\nfrobnicate x\n"),
                              Config())
    assert code == 2
    assert "line 2" in report["error"]


def test_expression_parse_error_reports_line(tmp_path):
    code, report = run_script(write(tmp_path, "ring R = C(1|0)\nnf x1 +\n"),
                              Config())
    assert code == 2
    assert "line 2" in report["error"]


def test_failed_assertion_sets_exit_one(tmp_path):
    script = "ring R = C(1|2)\nassert nf x1 == 0\n"
    code, report = run_script(write(tmp_path, script), Config())
    assert code == 1
    assert report["failures"] == 1
    checks = [e for e in report["entries"] if e["command"] == "assert"]
    assert checks[0]["verdict"] == "FAIL"


def test_reports_are_byte_identical_under_pinned_seed(tmp_path):
    script = write(tmp_path, NONSPLIT + "points box=-2..2 grid=9\n")
    blobs = []
    for _ in range(2):
        code, report = run_script(script, Config(seed=42))
        assert code == 0
        blobs.append(json.dumps(report, indent=2, sort_keys=True))
    assert blobs[0] == blobs[1]


def test_elapsed_is_measured_without_seed(tmp_path):
    code, report = run_script(write(tmp_path, "ring R = C(1|1)\nnf x1\n"),
                              Config(seed=None))
    kinds = {e["command"]: e for e in report["entries"]}
    assert isinstance(kinds["nf"]["elapsed_ms"], float)


def test_points_renders_figure_and_csv(tmp_path):
    svg = tmp_path / "pts.svg"
    script = """\
ring R = C(2|1)
ring Q = R / (x1^2 + x2^2 - 1)
points Q box=-2..2 grid=12
"""
    code, report = run_script(write(tmp_path, script),
                              Config(seed=0, svg_out=str(svg)))
    assert code == 0
    entry = [e for e in report["entries"] if e["command"] == "points"][0]
    n = int(entry["verdict"].split()[0])
    assert n >= 4
    assert len(entry["witnesses"]) == n
    assert svg.exists()
    csv_path = tmp_path / "pts.csv"
    assert csv_path.exists()
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "x1,x2"
    assert len(lines) == n + 1


def test_multiple_point_plots_get_numbered_files(tmp_path):
    svg = tmp_path / "out.svg"
    script = "ring R = C(1|0)\npoints grid=5\npoints grid=7\n"
    code, report = run_script(write(tmp_path, script),
                              Config(seed=0, svg_out=str(svg)))
    assert code == 0
    assert svg.exists()
    assert (tmp_path / "out-2.svg").exists()
    assert (tmp_path / "out-2.csv").exists()


def test_apply_golden_through_session():
    s = Session(Config(seed=0))
    s.execute("ring R = C(1|2)")
    s.execute("elem a = x1 + sin(x1)*t1*t2")
    entry = s.execute("apply exp a")
    assert entry["verdict"] == "exp(x1) + exp(x1)*sin(x1)*t1t2"


def test_apply_binary_expression():
    s = Session(Config(seed=0))
    s.execute("ring R = C(1|2)")
    s.execute("elem a = x1")
    s.execute("elem b = x1 + t1*t2")
    entry = s.execute("apply (x1*x2) a b")
    assert entry["verdict"] == "x1^2 + x1*t1t2"


def test_member_and_radical_commands():
    s = Session(Config(seed=0))
    s.execute("ring R = C(1|2)")
    s.execute("ideal I = (x1^2 + t1*t2)")
    assert s.execute("member x1^2 in I")["verdict"] == "Out"
    s.execute("ideal F = (flat(x1))")
    entry = s.execute("radical x1 in F")
    assert entry["verdict"] == "In"
    assert entry["provenance"] == "sampled"


def test_localize_command_shows_truncated_series():
    s = Session(Config(seed=0))
    s.execute("ring R = C(1|1)")
    entry = s.execute("localize sin(x1)*t1 at 0 order=3")
    assert entry["verdict"] == "(x1 - 0.166667*x1^3)*t1"


def test_morphism_commands():
    s = Session(Config(seed=0))
    s.execute("ring R = C(1|2)")
    s.execute("mor phi : R -> R = x1 + t1*t2; t1; t2")
    entry = s.execute("morapply phi sin(x1)")
    assert entry["verdict"] == "sin(x1) + cos(x1)*t1t2"


def test_coproduct_command_defines_inclusions():
    s = Session(Config(seed=0))
    s.execute("ring A = C(1|1)")
    s.execute("ring B = C(1|1)")
    entry = s.execute("coproduct A B as T")
    assert entry["verdict"] == "C(2|2)"
    assert "T_alpha" in s.morphisms and "T_beta" in s.morphisms
    assert s.execute("nf x2*t2")["verdict"] == "x2*t2"


def test_axioms_command_reports_yes():
    s = Session(Config(seed=0))
    s.execute("ring R = C(1|2)")
    entry = s.execute("axioms trials=5")
    assert entry["verdict"] == "Yes"


def test_psi_and_fair_commands():
    s = Session(Config(seed=0, grid=9))
    s.execute("ring R = C(1|2)")
    s.execute("ring Q = R / (x1)")
    assert s.execute("psi x1*t1")["verdict"] == "Zero"
    s.execute("ring R2 = C(1|2)")
    entry = s.execute("fair 1; x1; bump(x1, 4, 5)*t1*t2")
    assert "killed 1" in entry["verdict"]


def test_repl_golden_flow():
    out = io.StringIO()
    lines = io.StringIO(
        "ring R = C(1|2)\nelem a = x1 + sin(x1)*t1*t2\napply exp a\n"
        "wat\nnf a\nquit\n")
    repl(Config(seed=0), stdin=lines, stdout=out)
    text = out.getvalue()
    assert "exp(x1) + exp(x1)*sin(x1)*t1t2" in text
    assert "error: unknown command 'wat'" in text
    # state survived the error
    assert "x1 + sin(x1)*t1t2" in text


def test_unknown_ring_is_command_error():
    s = Session(Config())
    with pytest.raises(CommandError):
        s.execute("elem a = x1 in NOPE")


def test_main_writes_json_file(tmp_path):
    script = write(tmp_path, "ring R = C(1|1)\nnf x1\n")
    out = tmp_path / "report.json"
    code = main([script, "--seed", "7", "--json-out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["summary"]["x1"] == "x1"
    assert rep["config"]["seed"] == 7


def test_main_bad_box_is_usage_error(tmp_path):
    script = write(tmp_path, "ring R = C(1|1)\n")
    assert main([script, "--box", "nonsense"]) == 2
