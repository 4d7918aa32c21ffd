import json
import math
from xml.etree import ElementTree as ET

import pytest

from fastescape.cli import main

SVG_NS = "{http://www.w3.org/2000/svg}"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_escape_vn(capsys):
    code, out, _ = run(capsys, "escape", "--field", "vn", "--param", "N=8", "--start", "0,0")
    data = json.loads(out)
    assert code == 0
    assert data["escape_length"] >= 1 and data["status"] == "escaped"


def test_escape_constant(capsys):
    code, out, _ = run(capsys, "escape", "--field", "const", "--param", "u=1", "--param", "v=0")
    assert code == 0
    assert json.loads(out)["escape_length"] == pytest.approx(1.0, abs=1e-6)


def test_escape_rotation(capsys):
    code, out, _ = run(capsys, "escape", "--field", "rotation", "--start", "0.5,0")
    assert code == 0
    assert json.loads(out)["escape_length"] == pytest.approx(math.pi / 2, abs=1e-4)


def test_escape_stagnation_exit_code(capsys):
    code, out, _ = run(capsys, "escape", "--field", "rotation")
    assert code == 3
    assert json.loads(out)["status"] == "hypothesis_violated"


def test_escape_perp_and_bidirectional(capsys):
    code, out, _ = run(capsys, "escape", "--field", "vn", "--param", "N=64", "--perp")
    assert code == 0 and json.loads(out)["escape_length"] < 1.5
    code, out, _ = run(capsys, "escape", "--field", "vn", "--param", "N=8", "--bidirectional")
    assert code == 0 and json.loads(out)["escape_length"] >= 1


def test_plan_vn_and_expression_agree(capsys):
    code, out, _ = run(capsys, "plan", "--field", "vn", "--param", "N=8")
    a = json.loads(out)
    assert code == 0 and a["satisfied"] is True
    code, out, _ = run(capsys, "plan", "--expr", "y - 0.5*sin(N*x)", "--param", "N=8")
    b = json.loads(out)
    assert code == 0
    assert b["total_length"] == pytest.approx(a["total_length"], rel=1e-3)


def test_plan_constant_with_svg(capsys, tmp_path):
    svg = tmp_path / "plan.svg"
    code, out, _ = run(capsys, "plan", "--field", "const", "--param", "u=1", "--param", "v=0",
                       "--svg", str(svg))
    data = json.loads(out)
    assert code == 0 and data["satisfied"] is True
    assert data["total_length"] == pytest.approx(1.0, abs=1e-6)
    root = ET.parse(svg).getroot()
    assert root.tag == SVG_NS + "svg"
    assert len(root.findall(f".//{SVG_NS}circle")) == 1
    # the level A = t0 misses the disk, leaving the two legs
    assert len(root.findall(f".//{SVG_NS}polyline")) == 2


def test_render_svg_polyline_count(capsys, tmp_path):
    svg = tmp_path / "render.svg"
    code, out, _ = run(capsys, "render", "--expr", "x*y + y + 0.1*x", "--svg", str(svg))
    summary = json.loads(out)
    assert code == 0
    root = ET.parse(svg).getroot()
    assert len(root.findall(f".//{SVG_NS}polyline")) == summary["curves"]
    assert root.find(f".//{SVG_NS}circle").get("class") == "clip"


def test_render_needs_a_path(capsys):
    code, _, err = run(capsys, "render", "--field", "const")
    assert code == 2 and "svg" in err


def test_verify_commands(capsys):
    code, out, _ = run(capsys, "verify", "thm3", "--field", "vn", "--param", "N=8")
    assert code == 0 and json.loads(out)["verdict"] == "pass"
    code, out, _ = run(capsys, "verify", "coarea", "--field", "const")
    assert code == 0 and json.loads(out)["measured"]["rel_err"] <= 0.02
    code, out, _ = run(capsys, "verify", "thm1", "--field", "vn", "--param", "N=4")
    assert code == 0
    code, out, _ = run(capsys, "verify", "irrot", "--expr", "y")
    assert code == 0
    code, out, _ = run(capsys, "verify", "vn-scaling", "--N", "8,16")
    assert code == 0 and json.loads(out)["verdict"] == "pass"


def test_verify_thm2_grid(capsys):
    code, out, _ = run(capsys, "verify", "thm2", "--field", "vn", "--param", "N=4", "--grid", "5")
    assert json.loads(out)["verdict"] in ("pass", "inconclusive")
    assert code in (0, 5)
    code, out, _ = run(capsys, "verify", "thm2", "--field", "vn", "--param", "N=4", "--grid", "5",
                       "--restricted-time")
    assert code == 5


def test_verify_rotation_is_a_hypothesis_violation(capsys):
    code, _, _ = run(capsys, "verify", "thm1", "--field", "rotation")
    assert code == 3


def test_compressible_stream_function_is_numerical_failure(capsys):
    code, _, err = run(capsys, "plan", "--field", "linear", "--start", "3,0")
    assert code == 4 and "divergence" in err


@pytest.mark.parametrize("argv", [
    ["escape"],
    ["escape", "--field", "nope"],
    ["escape", "--field", "vn"],
    ["escape", "--field", "vn", "--expr", "y"],
    ["escape", "--expr", "y +"],
    ["escape", "--expr", "tan(x)"],
    ["escape", "--field", "const", "--start", "1"],
    ["escape", "--field", "const", "--radius", "-1"],
    ["plan", "--field", "const", "--radius", "2"],
    ["sweep", "--field", "vn", "--N", ""],
    ["sweep", "--field", "vn"],
    ["frobnicate"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_list_fields(capsys):
    code, out, _ = run(capsys, "list-fields")
    assert code == 0
    assert {"const", "rotation", "vn", "zigzag", "random"} <= set(json.loads(out))


def test_random_field_uses_seed(capsys):
    _, a, _ = run(capsys, "escape", "--field", "random", "--param", "index=3", "--seed", "0")
    _, b, _ = run(capsys, "escape", "--field", "random", "--param", "index=3", "--seed", "7")
    assert json.loads(a)["escape_length"] != json.loads(b)["escape_length"]


def test_sweep_is_byte_identical(capsys, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"sweep{k}.csv"
        code, _, _ = run(capsys, "sweep", "--field", "vn", "--N", "4,8", "--out", str(path))
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    lines = outs[0].decode().splitlines()
    assert lines[0] == "N,c1,c2,ell_direct,ell_perp,plan_length,thm1_bound"
    assert len(lines) == 3


def test_fast_oscillation_warning(capsys):
    code, _, err = run(capsys, "escape", "--field", "vn", "--param", "N=64")
    assert code == 0 and "warning" in err
    _, _, err = run(capsys, "escape", "--field", "vn", "--param", "N=32")
    assert "warning" not in err
