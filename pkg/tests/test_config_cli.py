import numpy as np
import pytest

from bbmfem.cli import main
from bbmfem.config import parse_config
from bbmfem.errors import ConfigError

MINIMAL = """
problem = soliton
scheme = DG1
M = 8
L = 5.0
c = 2.0
dt = 0.1
t_end = 0.3
"""


class TestParseConfig:
    def test_minimal_fills_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.solver.newton_tol == 1e-12
        assert cfg.monitor_k == 1.0
        assert cfg.transfer == "interpolate"  # H1 scheme family default
        assert cfg.num_steps == 3

    def test_dg2_defaults_to_conservative_transfer(self):
        cfg = parse_config("scheme = DG2")
        assert cfg.transfer == "conservative"

    def test_comments_and_blank_lines_ignored(self):
        cfg = parse_config("# a comment\n\nscheme = TR  # trailing\n")
        assert cfg.scheme == "TR"

    def test_unknown_key_reports_line_number(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config("problem = soliton\nscheme = DG1\nbogus = 1\n")

    def test_type_mismatch_reports_line_number(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("scheme = DG1\ndt = fast\n")

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("scheme = DG3\n")

    def test_basis_conflict_rejected(self):
        with pytest.raises(ConfigError, match="conflicts"):
            parse_config("scheme = DG1\nbasis = bspline\n")

    def test_basis_agreement_accepted(self):
        cfg = parse_config("scheme = DG2\nbasis = bspline\n")
        assert cfg.scheme == "DG2"

    def test_overrides_win(self):
        cfg = parse_config(MINIMAL, overrides=["dt=0.05", "scheme=TR"])
        assert cfg.dt == 0.05
        assert cfg.scheme == "TR"

    def test_bad_override_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(MINIMAL, overrides=["dt:0.05"])

    def test_snapshot_times_list(self):
        cfg = parse_config("scheme = DG1\nsnapshot_times = 0, 1.5, 3\n")
        assert cfg.snapshot_times == (0.0, 1.5, 3.0)

    def test_invalid_dt_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("scheme = DG1\ndt = -0.1\n")

    def test_subcritical_speed_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("problem = soliton\nc = 0.9\n")


def write_config(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return str(path)


SMALL_RUN = """
problem = soliton
scheme = DG2
moving_mesh = true
c = 2.0
L = 10.0
M = 16
dt = 0.1
t_end = 0.5
snapshot_times = 0.3
"""


class TestCli:
    def test_run_writes_outputs(self, tmp_path):
        cfg_path = write_config(tmp_path, SMALL_RUN + f"output_dir = {tmp_path}/out\n")
        assert main(["run", cfg_path, "--quiet"]) == 0
        out = tmp_path / "out"
        assert (out / "series.csv").exists()
        assert (out / "mesh.csv").exists()
        assert (out / "snapshot_0.csv").exists()
        assert (out / "snapshot_0.3.csv").exists()
        series = np.genfromtxt(out / "series.csv", delimiter=",", names=True)
        assert series.shape[0] == 6  # t = 0 .. 0.5
        mesh = np.genfromtxt(out / "mesh.csv", delimiter=",", skip_header=1)
        assert np.all(np.diff(mesh[:, 1:], axis=1) > 0)

    def test_determinism_byte_identical(self, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        cfg_path = write_config(tmp_path, SMALL_RUN)
        assert main(["run", cfg_path, "--quiet", "--override", f"output_dir={out_a}"]) == 0
        assert main(["run", cfg_path, "--quiet", "--override", f"output_dir={out_b}"]) == 0
        for name in ("series.csv", "mesh.csv", "snapshot_0.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_zero_t_end_writes_initial_row_only(self, tmp_path):
        text = SMALL_RUN.replace("t_end = 0.5", "t_end = 0.0")
        cfg_path = write_config(tmp_path, text + f"output_dir = {tmp_path}/out0\n")
        assert main(["run", cfg_path, "--quiet"]) == 0
        series = open(tmp_path / "out0" / "series.csv").read().strip().splitlines()
        assert len(series) == 2  # header + t=0 row
        assert (tmp_path / "out0" / "snapshot_0.csv").exists()

    def test_config_error_exit_code(self, tmp_path):
        cfg_path = write_config(tmp_path, "scheme = DG9\n")
        assert main(["run", cfg_path, "--quiet"]) == 1

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.cfg"), "--quiet"]) == 1

    def test_solver_failure_exit_code_and_dump(self, tmp_path):
        # An absurd time step makes Newton diverge; the runner must dump the
        # last good state and exit with the solver-failure code.
        text = """
problem = soliton
scheme = DG1
c = 3.0
L = 10.0
M = 16
dt = 80.0
t_end = 160.0
max_newton_iters = 8
"""
        cfg_path = write_config(tmp_path, text + f"output_dir = {tmp_path}/fail\n")
        assert main(["run", cfg_path, "--quiet"]) == 2
        assert (tmp_path / "fail" / "snapshot_abort.csv").exists()
        assert (tmp_path / "fail" / "series.csv").exists()

    def test_two_wave_series_has_nan_errors(self, tmp_path):
        text = """
problem = two_wave
scheme = DG1
L = 20.0
M = 16
x_r = 5.0
x_s = -5.0
dt = 0.1
t_end = 0.2
"""
        cfg_path = write_config(tmp_path, text + f"output_dir = {tmp_path}/tw\n")
        assert main(["run", cfg_path, "--quiet"]) == 0
        series = np.genfromtxt(tmp_path / "tw" / "series.csv", delimiter=",", names=True)
        assert np.all(np.isnan(series["phase_error"]))
        assert np.all(np.isfinite(series["H1_p"]))
