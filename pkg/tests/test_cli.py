import io
import itertools
import subprocess
import sys

from isofree.cli import main
from isofree.cube import Cube
from isofree.modelio import to_hex
from isofree.syntax import Signature

from conftest import theory_path

BIN = Signature((("*", 2),))
A = [0, 1, 0, 3, 1, 2, 1, 2, 2, 1, 2, 1, 3, 0, 3, 0]
B = [0, 1, 2, 0, 1, 3, 3, 1, 2, 0, 0, 2, 3, 1, 1, 3]
C = [0, 0, 2, 3, 1, 1, 3, 3, 2, 2, 0, 0, 3, 3, 1, 1]


def run(argv, stdin=""):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err, io.StringIO(stdin))
    return code, out.getvalue(), err.getvalue()


def test_enumerate_tarski():
    code, out, err = run(["enumerate", "-f", theory_path("tarski"), "-n", "9"])
    assert code == 0
    assert out.count("interpretation(") == 11
    assert err.startswith("order=9 models=11 ")


def test_enumerate_count():
    code, out, _ = run(["enumerate", "-f", theory_path("loops"), "-n", "2", "--output", "count"])
    assert (code, out) == (0, "1\n")


def test_order_below_two_is_a_usage_error():
    code, out, err = run(["enumerate", "-f", theory_path("tarski"), "-n", "1"])
    assert code == 1 and out == "" and "at least 2" in err


def test_bad_flags(tmp_path):
    assert run(["enumerate", "-f", theory_path("tarski")])[0] == 1
    assert run(["enumerate", "-f", str(tmp_path / "missing.th"), "-n", "3"])[0] == 1
    bad = tmp_path / "bad.th"
    bad.write_text("x * = y.")
    code, _, err = run(["enumerate", "-f", str(bad), "-n", "3"])
    assert code == 1 and "line 1" in err
    assert run(["frobnicate"])[0] == 1


def test_enumerate_is_deterministic():
    argv = ["enumerate", "-f", theory_path("involutive_lattices"), "-n", "5", "--output", "compact"]
    assert run(argv)[1] == run(argv)[1]


def test_node_cap_exit_code():
    code, _, err = run(["enumerate", "-f", theory_path("loops"), "-n", "5", "--max-nodes", "2"])
    assert code == 2 and "incomplete=node-cap" in err


def test_max_models_is_not_an_abort():
    code, out, _ = run(["enumerate", "-f", theory_path("loops"), "-n", "5", "--max-models", "2",
                        "--output", "count"])
    assert (code, out) == (0, "2\n")


def _theory(tmp_path):
    path = tmp_path / "magma.th"
    path.write_text("functions */2.\nx * y = x * y.\n")
    return str(path)


def test_filter_isomorphic_tables(tmp_path):
    text = "".join(to_hex(Cube(BIN, 4, t)) + "\n" for t in (A, B, C))
    code, out, err = run(["filter", "-f", _theory(tmp_path)], text)
    assert code == 0 and out.splitlines() == [to_hex(Cube(BIN, 4, A))]
    assert "kept=1" in err


def test_filter_empty(tmp_path):
    assert run(["filter", "-f", _theory(tmp_path)], "") == (0, "", "read=0 kept=0 dropped=0\n")


def test_filter_sixteen_tables(tmp_path):
    path = tmp_path / "all.hex"
    path.write_text("".join(to_hex(Cube(BIN, 2, list(t))) + "\n"
                            for t in itertools.product(range(2), repeat=4)))
    for mode in ("graph", "brute-force"):
        code, out, _ = run(["filter", "-f", _theory(tmp_path), "-i", str(path), "--mode", mode])
        assert code == 0 and len(out.splitlines()) == 10


def test_filter_interpretations(tmp_path):
    th = theory_path("loops")
    _, models, _ = run(["enumerate", "-f", th, "-n", "5", "--canon", "off"])
    code, out, err = run(["filter", "-f", th, "--format", "interp"], models)
    assert code == 0 and out.count("interpretation(") == 6


def test_filter_bad_line(tmp_path):
    code, _, err = run(["filter", "-f", _theory(tmp_path)], "00\n")
    assert code == 1 and "line 1" in err


def test_graph_listing(tmp_path):
    code, out, _ = run(["graph", "-f", _theory(tmp_path), to_hex(Cube(BIN, 2, [0, 1, 0, 1]))])
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 13 and lines[0] == "0 : 2 4 6"


def test_graph_of_cube(tmp_path):
    hexed = to_hex(Cube(BIN, 2, [0, -1, -1, -1]))
    code, out, _ = run(["graph", "-f", _theory(tmp_path)], hexed)
    assert code == 0 and "12 :" in out and out.split("partition : ")[1].strip().endswith("| 12")


def test_graph_bad_hex(tmp_path):
    assert run(["graph", "-f", _theory(tmp_path), "xyz"])[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "isofree", "enumerate", "-f", theory_path("loops"),
                           "-n", "4", "--output", "count"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "2\n"
    assert proc.stderr.startswith("order=4 models=2")
