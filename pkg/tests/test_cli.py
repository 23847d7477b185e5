import csv

import pytest

from mlc_lab import report
from mlc_lab.cli import main
from mlc_lab.mi import Backend, CurveLevel, MiRow


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_fmt():
    assert report.fmt(1 / 3) == "0.333333333"
    assert report.fmt(123456789012.0) == "1.23456789e+11"
    assert report.fmt(3) == "3"
    assert report.fmt(True) == "1"
    assert report.fmt(None) == "" and report.fmt(float("nan")) == ""


def test_parse_grid():
    g = report.parse_grid("0:0.25:4")
    assert len(g) == 17 and g[0] == 0 and g[-1] == 4
    assert report.parse_grid("1, 2.5,3") == [1, 2.5, 3]
    with pytest.raises(ValueError):
        report.parse_grid("1:0:2")


def test_mi_csv_roundtrip(tmp_path):
    rows = [MiRow(0.5, 0.1, 0.4, 0.5, Backend.QUADRATURE, 0.0),
            MiRow(1.0, 0.25, 0.7, 0.95, Backend.QUADRATURE, 0.0)]
    path = tmp_path / "mi.csv"
    report.write_mi_csv(rows, path)
    assert _rows(path)[0] == report.MI_HEADER
    curve = report.read_mi_csv(path, CurveLevel.HIGH)
    assert list(curve.values) == [0.4, 0.7]


def test_read_mi_csv_missing_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("snr_linear,mi_low\n1,0.2\n")
    with pytest.raises(ValueError, match="missing"):
        report.read_mi_csv(path)


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\ngamma-max = 0.2\nstep=0.1\nno_plot = true\nout = %s\n" % (tmp_path / "a.csv"))
    assert main(["--config", str(cfg), "mi-curve"]) == 0
    rows = _rows(tmp_path / "a.csv")
    assert len(rows) == 4
    assert not (tmp_path / "a.png").exists()
    # flags override the file
    assert main(["--config", str(cfg), "mi-curve", "--gamma-max", "0.3", "--out", str(tmp_path / "b.csv")]) == 0
    assert len(_rows(tmp_path / "b.csv")) == 5


def test_mi_curve_convexity_ar_line(tmp_path, capsys):
    mi = tmp_path / "mi_curve.csv"
    assert main(["mi-curve", "--gamma-max", "3", "--step", "0.1", "--out", str(mi)]) == 0
    assert (tmp_path / "mi_curve.png").exists()
    rows = _rows(mi)
    assert rows[0] == report.MI_HEADER and len(rows) == 32
    assert main(["convexity", "--in", str(mi), "--a", "0", "--b", "1.5"]) == 0
    assert "convex=True" in capsys.readouterr().out
    assert (tmp_path / "mi_curve_convexity.png").exists()
    assert main(["convexity", "--in", str(mi), "--a", "1.5", "--b", "3", "--no-plot"]) == 1

    ar = tmp_path / "ar_points.csv"
    assert main(["ar-line", "--gamma1", "2.10", "--M", "1,2,4,8", "--mi-in", str(mi), "--out", str(ar)]) == 0
    rows = _rows(ar)
    assert rows[0] == report.AR_HEADER
    assert [r[0] for r in rows[1:]] == ["1", "2", "4", "8"]
    assert float(rows[1][5]) == 0
    assert (tmp_path / "ar_points.png").exists()


def test_mi_curve_mc_backend(tmp_path):
    out = tmp_path / "mc.csv"
    assert main(["mi-curve", "--gamma-min", "1", "--gamma-max", "1.1", "--step", "0.1",
                 "--backend", "mc", "--samples", "20000", "--out", str(out), "--no-plot"]) == 0
    rows = _rows(out)
    assert rows[1][5] == "mc" and float(rows[1][6]) > 0


def test_ar_line_simulated_anchor(tmp_path, capsys):
    out = tmp_path / "ar.csv"
    assert main(["ar-line", "--gamma1", "2.10", "--rate1", "0.5", "--M", "1,4", "--out", str(out),
                 "--no-plot"]) == 0
    assert float(_rows(out)[2][3]) == pytest.approx(0.125)


def test_ber_sweep_and_search(tmp_path, capsys):
    out = tmp_path / "ber.csv"
    args = ["ber-sweep", "--snr-db", "3.5,4", "--max-frames", "128", "--seed", "7", "--out", str(out)]
    assert main(args) == 0
    rows = _rows(out)
    assert rows[0] == report.BER_HEADER and len(rows) == 3
    assert (tmp_path / "ber.png").exists()
    assert main(["snr-search", "--snr-db", "3,4.5", "--target-ber", "1",
                 "--max-frames", "64"]) == 0
    assert "gamma_hat=" in capsys.readouterr().out
    assert main(["snr-search", "--snr-db", "0,0.5", "--target-ber", "1e-4", "--max-frames", "64",
                 "--max-iters", "5"]) == 2


def test_full_scale_prints_estimate(tmp_path, capsys):
    assert main(["snr-search", "--full-scale", "--snr-db", "3,4.5", "--target-ber", "1",
                 "--max-frames", "64"]) == 0
    err = capsys.readouterr().err
    assert "estimated runtime" in err and "n=1008" in err


def test_repeat_check_command(tmp_path):
    out = tmp_path / "repeat_check.csv"
    assert main(["repeat-check", "--gamma1-db", "3.8", "--Ms", "1,2", "--max-frames", "64", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == report.EQUIV_HEADER and len(rows) == 3


def test_make_codes(tmp_path):
    assert main(["make-codes", "--dir", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "r116_n1008.alist", "r12_n1008.alist", "r14_n1008.alist", "r18_n1008.alist"]
