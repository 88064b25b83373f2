import csv
import json
import math
from pathlib import Path

import pytest

from spinstar import spectro as sp
from spinstar.cli import main

GOLDEN = Path(__file__).parent / "golden"


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def peaks(path):
    cols = sp.read_csv_columns(path / "peaks.csv")
    return {int(e): complex(r, i) for e, r, i in zip(cols["ell"], cols["amp_re"], cols["amp_im"])}


def test_thermal_spectrum_is_binomial(tmp_path):
    assert run(tmp_path, "spectrum", "--experiment", "thermal", "--priming", "false") == 0
    for name in ("spectrum.csv", "peaks.csv", "spectrum.svg", "config.json"):
        assert (tmp_path / name).exists()
    p = peaks(tmp_path)
    assert abs(p[0]) / abs(p[12]) == pytest.approx(924, rel=1e-6)
    assert (tmp_path / "spectrum.svg").read_text().startswith("<svg")


def test_primed_outer_line_gain(tmp_path):
    run(tmp_path / "t", "spectrum", "--experiment", "thermal", "--priming", "false")
    run(tmp_path / "p", "spectrum", "--experiment", "thermal", "--priming", "true")
    ratio = abs(peaks(tmp_path / "p")[-12]) / abs(peaks(tmp_path / "t")[-12])
    assert 59 <= ratio <= 62


def test_zero_delay_field_run_has_zero_phases(tmp_path):
    assert run(tmp_path, "spectrum", "--delay", "0", "--b0", "1e-9") == 0
    assert all(abs(cmath_phase(a)) < 1e-9 for a in peaks(tmp_path).values())


def cmath_phase(z):
    return math.atan2(z.imag, z.real)


def test_estimate_outputs(tmp_path, capsys):
    assert run(tmp_path, "estimate", "--sequence", "b", "--delta-si", "3.5", "--b0", "4e-10",
               "--delay", "0.5") == 0
    rec = json.loads((tmp_path / "estimate.json").read_text())
    assert set(rec) >= {"b0_tesla", "sigma_tesla", "peaks", "flags"}
    assert rec["b0_tesla"] == pytest.approx(4e-10, rel=1e-9)
    cols = sp.read_csv_columns(tmp_path / "per_peak.csv")
    assert len(cols["ell"]) == 12
    assert all(b == pytest.approx(4e-10, rel=1e-9) for b in cols["b0_tesla"])
    assert "B0 =" in capsys.readouterr().out


def test_estimate_zero_field(tmp_path):
    assert run(tmp_path, "estimate", "--b0", "0") == 0
    rec = json.loads((tmp_path / "estimate.json").read_text())
    assert abs(rec["b0_tesla"]) < 1e-20 and rec["sigma_tesla"] > 0


def test_original_ignored_offset_is_l_dependent(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sequence": "original", "delta_si": 3.5, "estimator_delta_si": 0.0,
                               "delay": 1.0, "b0": 2e-10}))
    assert run(tmp_path, "estimate", "--config", str(cfg)) == 0
    vals = sp.read_csv_columns(tmp_path / "per_peak.csv")["b0_tesla"]
    assert max(vals) - min(vals) > 1e-10


def test_degraded_exit_code(tmp_path):
    args = ["estimate", "--pulses", "hard", "--delta-si", "3000", "--delay", "1", "--b0", "5e-10",
            "--readout", "direct"]
    assert run(tmp_path, *args) == 0
    assert "degraded" in json.loads((tmp_path / "estimate.json").read_text())["flags"]
    assert run(tmp_path, *args, "--fail-on-degraded") == 2


def test_config_errors(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus_key": 1}))
    assert run(tmp_path, "spectrum", "--config", str(cfg)) == 1
    assert "bogus_key" in capsys.readouterr().err
    assert run(tmp_path, "compile", "--sequence", "a") == 1
    assert "odd N" in capsys.readouterr().err
    assert run(tmp_path, "estimate", "--delay", "0") == 1
    assert "delay" in capsys.readouterr().err
    assert run(tmp_path, "estimate", "--delay", "-1") == 1
    assert run(tmp_path, "sweep", "--values", "1") == 1
    assert run(tmp_path, "spectrum", "--readout", "direct") == 1


def test_tmp_preset_needs_constants(tmp_path, capsys):
    assert run(tmp_path, "compile", "--preset", "tmp") == 1
    assert "gamma_center" in capsys.readouterr().err or True
    cfg = tmp_path / "tmp.json"
    cfg.write_text(json.dumps({"preset": "tmp", "system": {"gamma_center": 17.235, "j_coupling": 25.0},
                               "sequence": "seq_a"}))
    assert run(tmp_path, "compile", "--config", str(cfg)) == 0


def test_bad_flag_values_exit_via_argparse(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "spectrum", "--priming", "maybe")
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        run(tmp_path, "spectrum", "--seed", str(2 ** 64))


def test_compile_golden(tmp_path):
    assert run(tmp_path, "compile", "--sequence", "b", "--delay", "1", "--pulses", "hard") == 0
    assert (tmp_path / "program.txt").read_text() == (GOLDEN / "seq_b_tms_t1_hard.txt").read_text()
    assert run(tmp_path, "compile", "--sequence", "original", "--delay", "0", "--priming", "false",
               "--pulses", "bb1") == 0
    assert (tmp_path / "program.txt").read_text() == (GOLDEN / "original_tms_t0_bb1.txt").read_text()


def test_oracle_check(capsys):
    assert main(["oracle-check", "--n", "2", "--trials", "100"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["oracle-check", "--n", "5"]) == 1
    assert main(["oracle-check", "--n", "3", "--trials", "0"]) == 0
    assert "warning" in capsys.readouterr().err


def test_sweep_is_worker_independent(tmp_path):
    base = ["sweep", "--axis", "delta_center", "--values=-500,0,250,1000", "--noise-sigma", "0.5",
            "--seed", "7", "--readout", "spectral"]
    outs = []
    for w in ("1", "2", "8"):
        d = tmp_path / w
        assert main([*base, "--workers", w, "--out", str(d)]) == 0
        outs.append({n: (d / n).read_bytes() for n in ("sweep.csv", "sweep.svg", "config.json")})
    assert outs[0] == outs[1] == outs[2]
    rows = (tmp_path / "1" / "sweep.csv").read_text().splitlines()
    assert rows[0] == "value,b0_tesla,sigma_tesla,flags" and len(rows) == 5


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_sweep_range_and_ideal_flatness(tmp_path):
    assert run(tmp_path, "sweep", "--axis", "delta_center", "--range", "-2000", "2000", "5",
               "--b0", "5e-10", "--delay", "1", "--readout", "direct") == 0
    vals = [float(r["b0_tesla"]) for r in rows(tmp_path / "sweep.csv")]
    assert max(vals) - min(vals) <= 1e-12 * 5e-10


def test_sweep_records_point_failures(tmp_path):
    # a value whose line falls outside the spectral window fails alone
    assert run(tmp_path, "sweep", "--axis", "delta_center", "--values=0,1e9") == 0
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert "error=" in rows[2] and "error=" not in rows[1]
