import numpy as np
import pytest

from spintraj import (
    CohOrder,
    ControlSet,
    Spin,
    SpinSystem,
    build_projector,
    population_series,
    product_basis,
    propagate,
)
from spintraj.cli import main
from spintraj.expressions import parse_state
from spintraj.fileio import read_trajectory, write_system, write_waveform

ONE_SPIN = SpinSystem((Spin("1H", 2, 150.0),))

SMALL_CONFIG = """
system:
  spins:
    - {isotope: 1H, multiplicity: 2, offset: 200.0}
seed: 3
problem:
  initial: Lz(0)
  target: Lx(0)
  parametrization: amplitudes
  duration: 2.0e-4
  n_steps: 4
  power_hz: 5000.0
  channels: [1H:x, 1H:y]
  max_iterations: 60
"""


@pytest.fixture
def one_spin_files(tmp_path):
    rng = np.random.default_rng(4)
    controls = ControlSet(
        dt=2e-5, power_hz=4000.0, channels=(("1H", "x"), ("1H", "y")),
        amplitudes=rng.uniform(-1, 1, (2, 30)),
    )
    sys_path = tmp_path / "system.yaml"
    wave_path = tmp_path / "waveform.txt"
    sys_path.write_text(write_system(ONE_SPIN))
    wave_path.write_text(write_waveform(controls))
    return sys_path, wave_path, controls


class TestBasisCommand:
    def test_two_spin_half_table(self, tmp_path, capsys):
        path = tmp_path / "sys.yaml"
        path.write_text(write_system(SpinSystem((Spin("1H", 2), Spin("13C", 2)))))
        assert main(["basis", "--system", str(path)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 17  # header + 16 product states
        corr_counts = {k: 0 for k in range(3)}
        for line in lines[1:]:
            corr_counts[int(line.split()[-2])] += 1
        assert corr_counts == {0: 1, 1: 6, 2: 9}


class TestSimulateCommand:
    def test_matches_in_memory_propagation(self, tmp_path, one_spin_files):
        sys_path, wave_path, controls = one_spin_files
        out = tmp_path / "run"
        assert main([
            "simulate", "--system", str(sys_path), "--waveform", str(wave_path),
            "--initial", "Lz(0)", "--out", str(out),
        ]) == 0
        traj = read_trajectory((out / "trajectory.txt").read_text())
        basis = product_basis(ONE_SPIN)
        expected = propagate(ONE_SPIN, controls, parse_state(basis, "Lz(0)"))
        assert np.max(np.abs(traj.states - expected.states)) < 1e-12

    def test_analyze_partition_identity(self, tmp_path, one_spin_files):
        sys_path, wave_path, _ = one_spin_files
        out = tmp_path / "run"
        main(["simulate", "--system", str(sys_path), "--waveform", str(wave_path),
              "--initial", "Lz(0)", "--out", str(out)])
        assert main([
            "analyze", "--trajectory", str(out / "trajectory.txt"),
            "--spec", "coh-orders", "--out", str(out),
        ]) == 0
        rows = (out / "coh_orders.csv").read_text().strip().splitlines()
        assert rows[0] == "time,coh_order_-1,coh_order_0,coh_order_1"
        data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
        # unit trace-normalized state: squared populations partition the norm
        assert np.max(np.abs((data[:, 1:] ** 2).sum(axis=1) - 1.0)) < 1e-9

    def test_analyze_matches_library(self, tmp_path, one_spin_files):
        sys_path, wave_path, controls = one_spin_files
        out = tmp_path / "run"
        main(["simulate", "--system", str(sys_path), "--waveform", str(wave_path),
              "--initial", "Lx(0)", "--out", str(out)])
        main(["analyze", "--trajectory", str(out / "trajectory.txt"),
              "--spec", "coh-orders", "--out", str(out)])
        rows = (out / "coh_orders.csv").read_text().strip().splitlines()
        data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
        basis = product_basis(ONE_SPIN)
        traj = propagate(ONE_SPIN, controls, parse_state(basis, "Lx(0)"))
        series = population_series(build_projector(basis, CohOrder(0)), traj)
        assert np.max(np.abs(data[:, 2] - series)) < 1e-11


class TestCompareCommand:
    def test_self_comparison_is_unity(self, tmp_path, one_spin_files):
        sys_path, wave_path, _ = one_spin_files
        out = tmp_path / "run"
        main(["simulate", "--system", str(sys_path), "--waveform", str(wave_path),
              "--initial", "Lz(0)", "--out", str(out)])
        traj = str(out / "trajectory.txt")
        assert main([
            "compare", "--traj-a", traj, "--traj-b", traj,
            "--score", "rsp", "--grouping", "sg", "--out", str(out),
        ]) == 0
        rows = (out / "sg_rsp.csv").read_text().strip().splitlines()
        assert rows[0] == "time,sg_rsp"
        scores = np.array([float(r.split(",")[1]) for r in rows[1:]])
        assert np.max(np.abs(scores - 1.0)) < 1e-9

    def test_ungrouped_rsp_has_two_columns(self, tmp_path, one_spin_files):
        sys_path, wave_path, _ = one_spin_files
        out = tmp_path / "run"
        main(["simulate", "--system", str(sys_path), "--waveform", str(wave_path),
              "--initial", "Lx(0)", "--out", str(out)])
        traj = str(out / "trajectory.txt")
        main(["compare", "--traj-a", traj, "--traj-b", traj,
              "--score", "rsp", "--out", str(out)])
        rows = (out / "rsp.csv").read_text().strip().splitlines()
        assert rows[0] == "time,rsp_re,rsp_abs"


class TestOptimizeCommand:
    def test_small_run_and_determinism(self, tmp_path, capsys):
        cfg = tmp_path / "config.yaml"
        cfg.write_text(SMALL_CONFIG)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["optimize", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["optimize", "--config", str(cfg), "--out", str(out2)]) == 0
        assert (out1 / "waveform.txt").read_text() == (out2 / "waveform.txt").read_text()
        assert (out1 / "trajectory.txt").read_text() == (out2 / "trajectory.txt").read_text()
        import json

        report = json.loads((out1 / "report.json").read_text())
        assert report["final_fidelity"] > 0.99
        assert report["seed"] == 3


class TestExitCodes:
    def test_missing_file(self, tmp_path, capsys):
        code = main(["basis", "--system", str(tmp_path / "nope.yaml")])
        assert code == 3
        assert "not found" in capsys.readouterr().err

    def test_malformed_file(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("spins: 17\n")
        assert main(["basis", "--system", str(path)]) == 4

    def test_domain_error(self, tmp_path, one_spin_files, capsys):
        sys_path, wave_path, _ = one_spin_files
        # channel targets an isotope that is not in the system
        bad = wave_path.read_text().replace("1H:x", "19F:x")
        wave_path.write_text(bad)
        code = main(["simulate", "--system", str(sys_path),
                     "--waveform", str(wave_path), "--initial", "Lz(0)",
                     "--out", str(tmp_path / "run")])
        assert code == 5

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
