import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from graphon_ldp import cli
from graphon_ldp.errors import FormatError
from graphon_ldp.graphon import StepGraphon, random_step_graphon
from graphon_ldp.io import dumps, graphon_from_dict, graphon_to_dict, load_graphon, save_graphon


@pytest.fixture
def files(tmp_path):
    bip = tmp_path / "bip.json"
    save_graphon(StepGraphon([Fraction(1, 2)] * 2, [[0.0, 0.5], [0.5, 0.0]]), bip)
    const = tmp_path / "const.json"
    save_graphon(StepGraphon([1], [[0.3]]), const)
    edge = tmp_path / "edge.txt"
    edge.write_text("2 1\n1 2\n")
    c4 = tmp_path / "c4.txt"
    c4.write_text("4 4\n1 2\n2 3\n3 4\n4 1\n")
    return {"bip": str(bip), "const": str(const), "edge": str(edge), "c4": str(c4), "dir": tmp_path}


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_enumerate_example(files, capsys):
    code, out, _ = run(["enumerate", "--graphon", files["bip"], "--graph", files["edge"], "--t", "0.25", "--kn", "4"], capsys)
    assert code == 0 and json.loads(out)["p_hat"] == 0.6875


def test_density_constant(files, capsys):
    code, out, _ = run(["density", "--graphon", files["const"], "--graph", files["c4"]], capsys)
    assert code == 0 and json.loads(out)["t"] == pytest.approx(0.3**4, rel=1e-15)


def test_phase_matches_profile(files, capsys):
    from graphon_ldp.entropy import analyze_psi, on_minorant

    code, out, _ = run(["phase", "--p", "0.05", "--gamma", "0.5", "--d", "2", "--r", "0.4"], capsys)
    rep = json.loads(out)
    prof = analyze_psi(0.05, 2)
    assert code == 0
    assert rep["on_minorant"] == on_minorant(0.05, 2, 0.4)
    assert rep["window"] == list(prof.window)


def test_scan_csv(files, capsys):
    code, out, _ = run(["scan", "--p", "0.05", "--gamma", "0.5", "--graph", "C4", "--r-grid", "0.3,0.97",
                        "--format", "csv"], capsys)
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "r,t_target,on_minorant,symmetric_I,witness_I"
    assert lines[1].split(",")[2] == "false" and lines[2].split(",")[2] == "true"
    assert lines[2].endswith(",")


def test_exit_codes(files, capsys):
    assert run(["bogus"], capsys)[0] == 1
    assert run([], capsys)[0] == 1
    assert run(["phase", "--p", "0.05"], capsys)[0] == 1
    assert run(["phase", "--p", "2", "--gamma", "0.5", "--d", "2", "--r", "0.4"], capsys)[0] == 2
    bad = files["dir"] / "bad.json"
    bad.write_text('{"gamma": [["1","2"],["1","2"]],\n "values": [[0.0, 0.5], [0.4, 0.0]]}')
    code, _, err = run(["opnorm", "--graphon", str(bad)], capsys)
    assert code == 2 and "values[0][1]" in err
    broken = files["dir"] / "broken.txt"
    broken.write_text("3 2\n1 2\n2 x\n")
    code, _, err = run(["density", "--graphon", files["const"], "--graph", str(broken)], capsys)
    assert code == 2 and "line 3" in err
    code, _, err = run(["tail", "--graphon", files["const"], "--graph", "C4", "--t", "0.1", "--kn", "200",
                        "--samples", "1000"], capsys)
    assert code == 3


def test_out_file_and_determinism(files, capsys):
    target = files["dir"] / "tail.json"
    argv = ["tail", "--graphon", files["const"], "--graph", files["edge"], "--t", "0.4", "--kn", "6",
            "--samples", "2000", "--seed", "5"]
    assert run(argv + ["--out", str(target)], capsys)[0] == 0
    first = target.read_text()
    run(argv + ["--out", str(target)], capsys)
    assert target.read_text() == first


def test_sample_writes_edges(files, capsys):
    edges = files["dir"] / "g.txt"
    code, out, _ = run(["sample", "--graphon", files["bip"], "--n", "3", "--edges-out", str(edges)], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["kn"] == 6
    assert edges.read_text().splitlines()[0] == f"6 {len(rep['edges'])}"


def test_witness_and_solve(files, capsys):
    code, out, _ = run(["witness", "--kind", "geps", "--p", "0.05", "--gamma", "0.5", "--graph", "C4", "--r", "0.5"], capsys)
    assert code == 0 and json.loads(out)["valid"] is True
    code, out, _ = run(["witness", "--kind", "planted", "--gamma", "0.5", "--alpha", "0.3", "--graph", "C4"], capsys)
    assert code == 0
    code, _, _ = run(["witness", "--kind", "geps", "--p", "0.05", "--gamma", "0.5", "--graph", "C4", "--r", "0.97"], capsys)
    assert code == 2
    code, out, _ = run(["solve", "--graphon", files["bip"], "--graph", "C4", "--t", "0.02", "--restarts", "3"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["regime"] == "SymmetricCertified"
    opt = graphon_from_dict(rep["solution"]["optimizer"])
    assert opt.values[0, 1] == pytest.approx((0.02 / 0.125) ** 0.25, rel=1e-9)


def test_module_entry_point(files):
    res = subprocess.run([sys.executable, "-m", "graphon_ldp", "opnorm", "--graphon", files["const"]],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["op_norm"] == pytest.approx(0.3)


def test_graphon_json_round_trip_bit_identical(tmp_path):
    rng = np.random.default_rng(4)
    for k in range(30):
        f = random_step_graphon(rng, int(rng.integers(1, 6)), denom=int(rng.integers(6, 40)))
        path = tmp_path / f"g{k}.json"
        save_graphon(f, path)
        g = load_graphon(path)
        assert g.widths == f.widths and g.values.tobytes() == f.values.tobytes()
        assert graphon_from_dict(json.loads(dumps(graphon_to_dict(f)))) == f


def test_json_format_errors(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"gamma": [["1","2"],\n["1","2"]],\n "values": [[0.0, 0.5], [0.5, 0.0]')
    with pytest.raises(FormatError) as info:
        load_graphon(p)
    assert info.value.line == 3
    for bad, fld in [({"gamma": [["1", "3"], ["1", "2"]], "values": [[0, 0], [0, 0]]}, "gamma"),
                     ({"gamma": [["1", "0"]], "values": [[0]]}, "gamma[0]"),
                     ({"gamma": [["1", "1"]], "values": [[1.5]]}, "values[0][0]"),
                     ({"gamma": [["1", "1"]]}, "values")]:
        with pytest.raises(FormatError) as info:
            graphon_from_dict(bad)
        assert info.value.field == fld


def test_dumps_floats():
    text = dumps({"a": 0.1, "b": float("inf"), "c": 2.0, "d": [1.5, None]})
    obj = json.loads(text)
    assert obj["a"] == 0.1 and obj["b"] == "inf" and obj["c"] == 2.0
    assert "0.10000000000000001" in text
