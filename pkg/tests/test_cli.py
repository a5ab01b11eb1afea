import io
import json
import subprocess
import sys

import pytest

from cflimsup.cli import run


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), out=out)
    text = out.getvalue()
    recs = [json.loads(x) for x in text.splitlines()] if text and not text.startswith("record,") else []
    return code, recs, text


def test_expand():
    code, recs, _ = call("expand", "--x", "3/7")
    assert code == 0
    assert recs[0]["record"] == "config" and recs[0]["x"] == "3/7"
    assert recs[1]["word"] == [2, 3]


def test_f_eval_pair():
    code, recs, _ = call("f-eval", "--kind", "pair", "--t", "2,1", "--s", "0.6")
    assert code == 0 and float(recs[1]["f"]) == pytest.approx(0.225, abs=1e-15)


def test_dim_pow4_end_to_end():
    code, recs, _ = call("dim", "--psi", "pow(4)", "--t", "1,1", "--tol", "1e-6")
    assert code == 0
    d = recs[1]
    assert d["branch"] == "finiteB_exact_m2"
    code, recs2, _ = call("solve-s", "--B", "4", "--t", "1,1", "--tol", "1e-6")
    assert float(d["lower"]) == pytest.approx(float(recs2[1]["value"]), abs=1e-12)


def test_numbers_have_17_digits():
    _, recs, _ = call("gauss-measure", "--word", "1")
    assert recs[1]["value"] == format(0.41503749927884381, ".17g")


def test_brackets_are_pairs():
    _, recs, _ = call("tail-sum", "--t", "1,1", "--g", "100")
    lo, hi = (float(x) for x in recs[1]["bracket"])
    assert lo <= hi


def test_every_record_has_config_hash():
    _, recs, _ = call("event-measure", "--t", "1,1", "--threshold", "50")
    hashes = {r["config_hash"] for r in recs}
    assert len(hashes) == 1 and len(hashes.pop()) == 16
    _, other, _ = call("event-measure", "--t", "1,1", "--threshold", "51")
    assert other[0]["config_hash"] != recs[0]["config_hash"]


def test_byte_reproducible():
    argv = ("simulate", "--psi", "n", "--t", "1,1", "--samples", "20", "--n1", "200", "--seed", "4")
    assert call(*argv)[2] == call(*argv)[2]


def test_csv_output():
    code, _, text = call("cylinder", "--word", "2,3", "--format", "csv")
    lines = text.splitlines()
    assert code == 0 and lines[0].startswith("record,") and len(lines) == 3


@pytest.mark.parametrize("argv,code", [
    (("expand",), 2),                                   # missing flag
    (("expand", "--x", "1/2", "--bogus", "1"), 2),      # unknown flag
    (("nosuch",), 2),
    (("series", "--psi", "n^", "--t", "1"), 3),         # parse failure
    (("series", "--psi", "foo(n)", "--t", "1"), 3),
    (("expand", "--x", "3/2"), 4),                      # domain
    (("tail-sum", "--t", "1,0", "--g", "3"), 4),
    (("pressure", "--M", "9", "--n", "12", "--s", "0.6", "--engine", "wordsum"), 5),   # budget
])
def test_exit_codes(argv, code, capsys):
    got, recs, _ = call(*argv)
    assert got == code
    if recs:
        assert recs[-1]["record"] == "error" and recs[-1]["exit_code"] == code


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nx = 3/7\nformat = json\n")
    code, recs, _ = call("expand", "--config", str(cfg))
    assert code == 0 and recs[1]["word"] == [2, 3]
    code, recs, _ = call("expand", "--config", str(cfg), "--x", "1/3")
    assert recs[1]["word"] == [3]
    cfg.write_text("nonsense = 1\nx = 1/3\n")
    assert call("expand", "--config", str(cfg))[0] == 2


def test_threads_env(monkeypatch):
    monkeypatch.setenv("CFLIMSUP_THREADS", "1")
    assert call("expand", "--x", "1/5")[0] == 0


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "cflimsup", "expand", "--x", "16/113"],
                       capture_output=True, text=True, check=True)
    assert json.loads(p.stdout.splitlines()[1])["word"] == [7, 16]
