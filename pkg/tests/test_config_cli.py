import json

import pytest

from lpsfem.cli import main
from lpsfem.config import ExperimentConfig, parse_config
from lpsfem.errors import ConfigurationError


def test_parse_valid():
    cfg = parse_config("example = example1  # comment\n\nr = 1, 2\nlevels=4,8\ns2 = false\n")
    assert cfg.example == "example1" and cfg.r == (1, 2) and cfg.levels == (4, 8)
    assert cfg.s2 is False and cfg.toggles_set


@pytest.mark.parametrize("text,line,needle", [
    ("example = example1\nbogus\n", 2, "expected"),
    ("colour = red\n", 1, "unknown key"),
    ("r = 1\n# c\nr = 2\n", 3, "duplicate"),
    ("levels = four\n", 1, "bad value"),
    ("s1 = maybe\n", 1, "bad value"),
])
def test_parse_errors_carry_line_numbers(text, line, needle):
    with pytest.raises(ConfigurationError) as exc:
        parse_config(text, "cfg.txt")
    assert f"cfg.txt:{line}:" in str(exc.value) and needle in str(exc.value)


def test_flags_override_file():
    cfg = ExperimentConfig(example="example1", r=(2,)).merged(r=(1,), kind=None)
    assert cfg.r == (1,) and cfg.example == "example1"


def test_list(capsys):
    assert main(["list"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 6
    assert lines[0].startswith("example1:")


def test_unknown_example_exit_code(tmp_path, capsys):
    assert main(["run", "nope", "--out", str(tmp_path)]) == 2
    assert "unknown example" in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "c.cfg"
    p.write_text("r = 1\nfoo = 2\n")
    assert main(["run", "--config", str(p)]) == 2
    assert f"{p}:2:" in capsys.readouterr().err


def _run(tmp_path, name, *extra):
    out = tmp_path / name
    assert main(["run", "example1", "--kind", "curl", "--r", "1", "--levels", "2,4",
                 "--out", str(out), *extra]) == 0
    return out


def test_deterministic_csv_is_byte_identical(tmp_path):
    a = _run(tmp_path, "a", "--deterministic")
    b = _run(tmp_path, "b", "--deterministic")
    names = sorted(p.name for p in a.glob("*.csv"))
    assert names == ["example1_curl_r1_lps.csv", "example1_curl_r1_no_stabilization.csv"]
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()
    summary = json.loads((a / "example1_summary.json").read_text())
    assert summary["deterministic"] is True and len(summary["runs"]) == 2


def test_toggle_flags_select_one_variant(tmp_path):
    out = _run(tmp_path, "t", "--no-s2")
    assert [p.name for p in out.glob("*.csv")] == ["example1_curl_r1_s1-only.csv"]


def test_custom_problem_from_config(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("example = custom\nbeta = rotating\nexact = smooth2d\nkind = div\n"
                 f"levels = 2,4\nr = 1\nout = {tmp_path / 'o'}\n")
    assert main(["run", "--config", str(p)]) == 0
    csv = (tmp_path / "o" / "custom_div_r1_lps.csv").read_text().splitlines()
    assert len(csv) == 3


def test_custom_problem_needs_velocity(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("example = custom\n")
    assert main(["run", "--config", str(p)]) == 2


def test_layer_run_writes_vtk(tmp_path):
    assert main(["run", "example5", "--n", "4", "--resolution", "8", "--out", str(tmp_path)]) == 0
    vtks = sorted(p.name for p in tmp_path.glob("*.vtk"))
    assert vtks == ["example5_curl_r1_lps_n4.vtk", "example5_curl_r1_no_stabilization_n4.vtk"]
    summary = json.loads((tmp_path / "example5_summary.json").read_text())
    assert {c["variant"] for c in summary["layer_comparison"]} == {"lps"}


def test_verify_command(tmp_path, capsys):
    js = tmp_path / "v.json"
    assert main(["verify", "--json", str(js)]) == 0
    assert "PASS" in capsys.readouterr().out
    assert all(r["passed"] for r in json.loads(js.read_text()))
