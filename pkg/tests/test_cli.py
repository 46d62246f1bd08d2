import csv
import io

import pytest

from slelab import cli
from slelab.charts import Chart
from slelab.zipper import SwallowedPoint, Trace


def _run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_classify_chordal(capsys):
    code, out, _ = _run(capsys, "classify", "--delta", "-2:2", "--sigma", "-1:-1")
    assert code == 0
    assert out.strip() == "delta: parabolic (Δ3=0); sigma: parabolic (Δ2=0); kappa=1; nu=0"


def test_classify_dipolar(capsys):
    code, out, _ = _run(capsys, "classify", "--delta", "-2:2,0:-2", "--sigma", "-1:-1,1:1")
    assert code == 0
    assert "delta: hyperbolic (Δ3=32)" in out and "sigma: hyperbolic (Δ2=1)" in out


def test_bad_field_text_is_usage_error(capsys):
    code, _, _ = _run(capsys, "classify", "--delta", "-2=2")
    assert code == 2


def test_unknown_flag(capsys):
    code, _, err = _run(capsys, "simulate", "--bogus")
    assert code == 2 and "No such option" in err


@pytest.mark.parametrize("args", [["--dmin", "0.02", "--dmax", "0.01"], ["--nmax", "0"]])
def test_bad_resolution(capsys, args):
    code, _, _ = _run(capsys, "simulate", *args)
    assert code == 2


def test_simulate_csv(capsys):
    code, out, err = _run(capsys, "simulate", "--nmax", "30", "--seed", "4", "--dmin", "0.01", "--dmax", "0.02")
    assert code == 0 and "n_max" in err
    rows = _rows(out)
    assert list(rows[0]) == ["index", "kind", "t", "x", "y"]
    ts = [float(r["t"]) for r in rows]
    assert ts == sorted(ts) and float(rows[0]["y"]) == 0
    assert {r["kind"] for r in rows} == {"a"}


def test_simulate_reproducible(capsys, tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        p = tmp_path / name
        assert cli.run(["simulate", "--nmax", "40", "--seed", "9", "--out", str(p)]) == 0
        outs.append(p.read_bytes())
    capsys.readouterr()
    assert outs[0] == outs[1]


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("seed = 9\nnmax = 40\n[simulate]\ndmin = 0.005\n")
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert cli.run(["--config", str(cfg), "simulate", "--out", str(a)]) == 0
    assert cli.run(["simulate", "--nmax", "40", "--seed", "9", "--dmin", "0.005", "--out", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    # flags override the file
    code, out, _ = _run(capsys, "--config", str(cfg), "simulate", "--nmax", "3")
    assert code == 0 and len(_rows(out)) <= 4


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[simulate]\nwidth = 3\n")
    code, _, _ = _run(capsys, "--config", str(cfg), "simulate")
    assert code == 2


def test_svg_disk(capsys, tmp_path):
    svg = tmp_path / "t.svg"
    code, _, _ = _run(capsys, "simulate", "--delta", "-2:2,0:2", "--sigma", "-1:-1,1:-1", "--chart", "disk",
                      "--nmax", "30", "--out", str(tmp_path / "t.csv"), "--svg", str(svg))
    assert code == 0
    text = svg.read_text()
    assert 'viewBox="-1.05 -1.05 2.1 2.1"' in text and 'class="boundary"' in text
    assert text.count('class="trace"') == 1


def test_trace_render_roundtrip(capsys, tmp_path):
    csv_p, svg_a, svg_b = tmp_path / "t.csv", tmp_path / "a.svg", tmp_path / "b.svg"
    assert cli.run(["simulate", "--nmax", "25", "--out", str(csv_p), "--svg", str(svg_a)]) == 0
    assert cli.run(["trace-render", "--in", str(csv_p), "--out", str(svg_b)]) == 0
    capsys.readouterr()
    assert svg_a.read_bytes() == svg_b.read_bytes()


def test_levy_tree_arcs(capsys, tmp_path):
    csv_p, arcs, svg_a, svg_b = (tmp_path / n for n in ("t.csv", "arcs.csv", "a.svg", "b.svg"))
    assert cli.run(["simulate", "--driver", "levy:alpha=1.5", "--nmax", "20", "--dmin", "0.02", "--dmax", "0.04",
                    "--out", str(csv_p), "--arcs-out", str(arcs), "--svg", str(svg_a)]) == 0
    assert cli.run(["trace-render", "--in", str(csv_p), "--arcs", str(arcs), "--out", str(svg_b)]) == 0
    capsys.readouterr()
    rows = _rows(csv_p.read_text())
    n_b = sum(r["kind"] == "b" for r in rows)
    arc_rows = _rows(arcs.read_text())
    assert n_b > 0 and len({r["arc"] for r in arc_rows}) == n_b
    text = svg_a.read_text()
    assert text.count('class="arc"') == n_b
    assert svg_a.read_bytes() == svg_b.read_bytes()


def test_svg_two_points_is_line():
    tr = Trace([(0, "a", 0.0, 0j), (1, "a", 0.1, 0.5j)])
    assert '<line class="trace"' in cli.svg_text(tr, Chart.HALFPLANE)


def test_transform(capsys):
    code, out, _ = _run(capsys, "transform", "--delta", "-2:2", "--sigma", "-1:-1", "--op", "V:2")
    assert code == 0
    assert "sigma: -1:-2" in out and "kappa=4" in out
    code, _, _ = _run(capsys, "transform", "--op", "Q:1")
    assert code == 2


def test_vir_check(capsys):
    code, out, _ = _run(capsys, "vir-check", "--kappa", "4", "--nu", "0")
    assert code == 0
    assert "h=0.25; c=1" in out and "martingale condition: PASS" in out
    code, out, _ = _run(capsys, "vir-check", "--kappa", "4", "--nu", "0.5")
    assert code == 0 and "L_-1 coefficient: -0.5" in out and "martingale condition: FAIL" in out
    code, out, _ = _run(capsys, "vir-check", "--kappa", "2", "--direction", "rev")
    assert "h=-2; c=28" in out and "PASS" in out


def test_couple_check(capsys, tmp_path):
    out_csv = tmp_path / "r.csv"
    code, out, _ = _run(capsys, "couple-check", "--case", "dipolar", "--direction", "rev", "--kappa", "3",
                        "--nu", "1", "--points", "6", "--csv", str(out_csv))
    assert code == 0
    header, row = out.strip().splitlines()[:2]
    assert header.split()[:3] == ["case", "direction", "kappa"] and row.split()[-1] == "PASS"
    assert _rows(out_csv.read_text())[0]["status"] == "PASS"
    code, out, _ = _run(capsys, "couple-check", "--case", "twisted", "--kappa", "3.5", "--points", "6")
    assert code == 0 and out.strip().splitlines()[1].split()[-1] == "FAIL"


def test_couple_check_mc(capsys):
    code, out, _ = _run(capsys, "couple-check", "--case", "chordal", "--points", "4",
                        "--mc", "500,0.2,1+2i", "--seed", "3")
    assert code == 0 and "PASS" in out


def test_couple_check_direction_guard(capsys):
    code, _, err = _run(capsys, "couple-check", "--case", "dn", "--direction", "rev")
    assert code == 2 and "forward only" in err


def test_numerical_failure_exit_code(capsys, monkeypatch):
    def boom(*a, **k):
        raise SwallowedPoint(3)

    monkeypatch.setattr(cli, "simulate_sle", boom)
    code, _, err = _run(capsys, "simulate", "--nmax", "5")
    assert code == 3 and err
