import re
import subprocess
import sys

import numpy as np
import pytest

from qhosim.cli import emit_fit_report, run_experiment
from qhosim.errors import NumericalFailure, UsageError
from qhosim.scattering import read_signal_csv, write_signal_csv

FOOTER = re.compile(r"^# fit slope=(\S+) intercept=(\S+) r2=(\S+)$")


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = run_experiment([*argv, "--output", str(out), "--workers", "1"])
    return code, out


def data_rows(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:] if not ln.startswith("#")]


def test_eig_error_scan_footer(tmp_path):
    code, out = run(tmp_path, "eig-error-scan")
    assert code == 0
    header, rows = data_rows(out)
    assert header == ["N", "n", "log_abs_err"]
    assert [int(r[0]) for r in rows] == [32, 48, 64, 80, 96]
    last = out.read_text().splitlines()[-1]
    m = FOOTER.match(last)
    assert m
    slope, _, r2 = map(float, m.groups())
    assert -0.40 <= slope <= -0.12 and r2 >= 0.95


def test_output_is_deterministic(tmp_path):
    _, a = run(tmp_path, "trotter-error-n", "--n-dim", "64", "--p", "2", "--s", "0.2", "--n-max", "10", name="a.csv")
    _, b = run(tmp_path, "trotter-error-n", "--n-dim", "64", "--p", "2", "--s", "0.2", "--n-max", "10", name="b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_floats_use_seventeen_digits(tmp_path):
    _, out = run(tmp_path, "spectrum", "--n-dim", "16", "--n-max", "3")
    _, rows = data_rows(out)
    assert rows[0][2] == format(float(rows[0][2]), ".17g")
    assert len(rows) == 4


def test_config_metadata_lines(tmp_path):
    _, out = run(tmp_path, "prep-ground", "--n-dim", "256", "--deltas", "1,2,3")
    text = out.read_text()
    assert "# command=prep-ground" in text
    assert "# n_dim=256" in text
    assert FOOTER.match(text.splitlines()[-1])


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("QHOSIM_OUTPUT_DIR", str(tmp_path / "res"))
    assert run_experiment(["sp2-defect", "--p", "2"]) == 0
    out = tmp_path / "res" / "sp2-defect.csv"
    header, rows = data_rows(out)
    assert header == ["degree", "re_a", "im_a", "re_b", "im_b", "re_c", "im_c"]
    assert "# lowest_degree=4" in out.read_text()


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nn-dim = 32\nn_targets=0,1\nmodes=exact\n")
    code, out = run(tmp_path, "jc-ladder", "--config", str(cfg))
    assert code == 0
    _, rows = data_rows(out)
    assert [(r[0], r[1]) for r in rows] == [("0", "exact"), ("1", "exact")]
    # command-line flags override the file
    code, out = run(tmp_path, "jc-ladder", "--config", str(cfg), "--n-targets", "2", name="b.csv")
    assert [r[0] for r in data_rows(out)[1]] == ["2"]


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no_such_key=1\n")
    code, out = run(tmp_path, "spectrum", "--config", str(cfg))
    assert code == 1 and not out.exists()


def test_unknown_flag_exits_one(tmp_path):
    code, out = run(tmp_path, "spectrum", "--bogus")
    assert code == 1 and not out.exists()


def test_too_few_fit_points(tmp_path):
    code, out = run(tmp_path, "eig-error-scan", "--n-dims", "32,48")
    assert code == 1 and not out.exists()


def test_precondition_violation_exits_one(tmp_path):
    code, out = run(tmp_path, "jc-ladder", "--n-dim", "16", "--n-targets", "12")
    assert code == 1 and not out.exists()


def test_numerical_failure_exits_two(tmp_path, monkeypatch):
    import qhosim.cli

    def broken(*args, **kwargs):
        raise NumericalFailure("QL iteration did not converge for eigenvalue 7", index=7)

    monkeypatch.setattr(qhosim.cli, "build_hamiltonian", broken)
    code, out = run(tmp_path, "spectrum", "--n-dim", "16")
    assert code == 2 and not out.exists()


def test_nonpositive_fit_ordinate():
    with pytest.raises(NumericalFailure):
        emit_fit_report([1, 2, 3], [1.0, 0.0, 2.0])


def test_fit_report_models():
    fit = emit_fit_report([1, 2, 4], [3, 6, 12], "powerlaw")
    assert fit.slope == pytest.approx(1.0) and fit.r_squared == pytest.approx(1.0)
    with pytest.raises(UsageError):
        emit_fit_report([1, 2], [1, 2])
    with pytest.raises(UsageError):
        emit_fit_report([1, 2, 3], [1, 2, 3], "cubic")


def test_pi_expressions(tmp_path):
    code, out = run(tmp_path, "trotter-converge", "--n-dims", "32", "--t", "pi/2", "--n", "4")
    assert code == 0
    assert f"# t={format(np.pi / 2, '.17g')}" in out.read_text()


def test_frft_csv_io(tmp_path):
    from qhosim.oscillator import GridSpec, hermite_states

    g = GridSpec(64)
    sig = hermite_states(g, 2)[:, 2].astype(complex)
    src = tmp_path / "in.csv"
    write_signal_csv(src, sig)
    code, out = run(tmp_path, "frft", "--n-dim", "64", "--input", str(src), "--order", "1")
    assert code == 0
    res = read_signal_csv(out, 64)
    assert np.linalg.norm(res + sig) <= 1e-8  # (-i)**2 = -1


def test_frft_wrong_length(tmp_path):
    src = tmp_path / "in.csv"
    write_signal_csv(src, np.ones(10))
    code, out = run(tmp_path, "frft", "--n-dim", "64", "--input", str(src))
    assert code == 1 and not out.exists()


def test_quartic_table_row(tmp_path):
    code, out = run(tmp_path, "quartic-table", "--n-dims", "64", "--ref-n-dim", "128", "--thresholds", "1e-5")
    assert code == 0
    header, rows = data_rows(out)
    assert header == ["N", "threshold_eps", "n_max", "ratio"]
    n_dim, eps, n_max, ratio = rows[0]
    assert int(n_dim) == 64 and int(n_max) > 0
    assert float(ratio) == pytest.approx(int(n_max) / 64)


def test_amplitude_with_hadamard(tmp_path):
    code, out = run(tmp_path, "amplitude", "--n-dim", "64", "--coeffs", "1,0.5j", "--times", "0.7,3",
                    "--shots", "0")
    assert code == 0
    header, rows = data_rows(out)
    assert header[-2:] == ["re_hadamard", "im_hadamard"]
    for r in rows:
        vals = list(map(float, r))
        assert vals[5] <= 1e-8
        assert abs(vals[1] - vals[6]) <= 1e-10 and abs(vals[2] - vals[7]) <= 1e-10


def test_overlap_matrix(tmp_path):
    code, out = run(tmp_path, "overlap-matrix", "--n-dim", "16", "--max-n", "3")
    assert code == 0
    _, rows = data_rows(out)
    assert len(rows) == 16
    diag = [float(r[2]) for r in rows if r[0] == r[1]]
    assert min(diag) > 0.99


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qhosim", "spectrum", "--nope"], capture_output=True, text=True,
                          cwd=tmp_path)
    assert proc.returncode == 1
    assert "error" in proc.stderr
    proc = subprocess.run([sys.executable, "-m", "qhosim", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
