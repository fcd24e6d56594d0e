import json
import os
import socket
import subprocess
import sys
import threading
import time
from pathlib import Path

import numpy as np
import pytest

from prometheus_teleop import dataset as ds
from prometheus_teleop.cli import main
from prometheus_teleop.geometry import Pose
from prometheus_teleop.gripper_sim import GraspOutcome


def run_cli(*argv):
    return main(list(argv))


def batch_files(dirpath):
    return sorted(str(p) for p in Path(dirpath).glob("*.jsonl"))


class TestSimulate:
    def test_writes_files_and_summary(self, tmp_path):
        out = tmp_path / "batch"
        rc = run_cli(
            "simulate", "--task", "tomato", "--policy", "force_capped",
            "--episodes", "3", "--seed", "7", "--out-dir", str(out),
        )
        assert rc == 0
        files = batch_files(out)
        assert len(files) == 3
        summary = json.loads((out / "summary.json").read_text())
        assert summary["episodes"] == 3
        assert summary["outcomes"]["success"] == 3
        rates = [summary["success_rate"], summary["slip_rate"], summary["damage_rate"]]
        assert sum(rates) == pytest.approx(1.0, abs=1e-12)

    def test_zero_episodes_empty_summary_success(self, tmp_path):
        out = tmp_path / "none"
        rc = run_cli(
            "simulate", "--task", "tomato", "--policy", "force_capped",
            "--episodes", "0", "--seed", "1", "--out-dir", str(out),
        )
        assert rc == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["files"] == []
        assert summary["success_rate"] is None

    def test_same_seed_byte_identical(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            rc = run_cli(
                "simulate", "--task", "tomato", "--policy", "position_only",
                "--episodes", "2", "--seed", "42", "--out-dir", str(out),
            )
            assert rc == 0
            outs.append(out)
        for fa, fb in zip(batch_files(outs[0]), batch_files(outs[1])):
            assert Path(fa).read_bytes() == Path(fb).read_bytes()
        assert (outs[0] / "summary.json").read_bytes() == (
            outs[1] / "summary.json"
        ).read_bytes()

    def test_different_seeds_differ(self, tmp_path):
        blobs = []
        for seed in ("1", "2"):
            out = tmp_path / f"s{seed}"
            run_cli(
                "simulate", "--task", "tomato", "--policy", "force_capped",
                "--episodes", "1", "--seed", seed, "--out-dir", str(out),
            )
            blobs.append(batch_files(out)[0])
        assert Path(blobs[0]).read_bytes() != Path(blobs[1]).read_bytes()

    def test_unknown_task_is_usage_error(self, tmp_path, capsys):
        rc = run_cli(
            "simulate", "--task", "anvil", "--policy", "force_capped",
            "--episodes", "1", "--seed", "1", "--out-dir", str(tmp_path / "x"),
        )
        assert rc == 1

    def test_unknown_policy_is_usage_error(self, tmp_path):
        rc = run_cli(
            "simulate", "--task", "tomato", "--policy", "yolo",
            "--episodes", "1", "--seed", "1", "--out-dir", str(tmp_path / "x"),
        )
        assert rc == 1


class TestReplay:
    def test_recorded_file_replays_exactly(self, tmp_path):
        out = tmp_path / "r"
        run_cli(
            "simulate", "--task", "tomato", "--policy", "force_capped",
            "--episodes", "1", "--seed", "3", "--out-dir", str(out),
        )
        rc = run_cli("replay", batch_files(out)[0])
        assert rc == 0

    def test_missing_file_is_runtime_error(self):
        assert run_cli("replay", "/nonexistent/file.jsonl") == 2

    def test_tampered_force_detected(self, tmp_path):
        out = tmp_path / "r"
        run_cli(
            "simulate", "--task", "toothpaste", "--policy", "force_capped",
            "--episodes", "1", "--seed", "3", "--out-dir", str(out),
        )
        path = Path(batch_files(out)[0])
        lines = path.read_text().splitlines()
        # find a step with nonzero force and perturb it
        for i, line in enumerate(lines[1:-1], start=1):
            rec = json.loads(line)
            if rec.get("type") == "step" and rec["obs"]["force_norm"] > 0:
                rec["obs"]["force_norm"] *= 0.5
                lines[i] = json.dumps(rec)
                break
        tampered = tmp_path / "tampered.jsonl"
        tampered.write_text("\n".join(lines) + "\n")
        assert run_cli("replay", str(tampered)) == 2


class TestAnalyze:
    @staticmethod
    def synthetic_batch(tmp_path, name, peaks):
        """Trajectories whose outcome peaks are the given values."""
        files = []
        rng = np.random.default_rng(0)
        for i, peak in enumerate(peaks):
            rec = ds.TrajectoryRecorder(f"{name}-{i}", "synthetic")
            for k in range(3):
                rec.append(
                    ds.Observation(
                        joints=np.zeros(6),
                        ee_pose=Pose.identity(),
                        gripper_pos_norm=0.5,
                        force_norm=min(peak / 20.0, 1.0),
                        opening_mm=42.5,
                    )
                )
            traj = rec.build(GraspOutcome("success", peak, 1))
            path = tmp_path / f"{name}-{i}.jsonl"
            ds.export_trajectory(traj, path)
            files.append(str(path))
        return files

    def test_reduction_between_batches(self, tmp_path, capsys):
        a = self.synthetic_batch(tmp_path, "a", [10.0, 10.0])
        b = self.synthetic_batch(tmp_path, "b", [6.5, 6.4])
        rc = run_cli("analyze", *a, "--batch-b", *b)
        assert rc == 0
        out = capsys.readouterr().out
        assert "35.50%" in out

    def test_plot_data_emitted(self, tmp_path):
        a = self.synthetic_batch(tmp_path, "a", [5.0])
        plot = tmp_path / "curve.tsv"
        rc = run_cli("analyze", *a, "--plot-data", str(plot))
        assert rc == 0
        lines = plot.read_text().splitlines()
        assert lines[0].startswith("step\t")
        assert len(lines) == 4  # header + 3 aligned steps

    def test_simulate_output_always_analyzable(self, tmp_path):
        out = tmp_path / "sim"
        run_cli(
            "simulate", "--task", "shampoo", "--policy", "position_only",
            "--episodes", "2", "--seed", "5", "--out-dir", str(out),
        )
        assert run_cli("analyze", *batch_files(out)) == 0

    def test_rates_sum_to_one(self, tmp_path, capsys):
        out = tmp_path / "sim"
        run_cli(
            "simulate", "--task", "tomato", "--policy", "position_only",
            "--episodes", "4", "--seed", "9", "--out-dir", str(out),
        )
        rc = run_cli("analyze", *batch_files(out))
        assert rc == 0
        text = capsys.readouterr().out
        assert "rates" in text

    def test_empty_batch_is_error_not_nan(self, tmp_path):
        # a trajectory file is required; a missing one must error cleanly
        assert run_cli("analyze", str(tmp_path / "missing.jsonl")) == 2


class TestExport:
    def test_discretized_view(self, tmp_path):
        out = tmp_path / "sim"
        run_cli(
            "simulate", "--task", "tomato", "--policy", "force_capped",
            "--episodes", "1", "--seed", "11", "--out-dir", str(out),
        )
        csv_path = tmp_path / "tokens.csv"
        rc = run_cli("export", batch_files(out)[0], "--out", str(csv_path))
        assert rc == 0
        lines = csv_path.read_text().splitlines()
        header = lines[0].split(",")
        assert header[:3] == ["step", "gripper_pos_bin", "force_bin"]
        first = lines[1].split(",")
        assert 0 <= int(first[1]) <= 255
        assert 0 <= int(first[2]) <= 255


class TestServeCommand:
    def test_bind_failure_exits_2(self):
        blocker = socket.create_server(("127.0.0.1", 0))
        port = blocker.getsockname()[1]
        rc = run_cli("serve", "--port", str(port))
        assert rc == 2
        blocker.close()

    def test_client_session_end_clean_exit(self, tmp_path):
        proc = subprocess.Popen(
            [
                sys.executable, "-m", "prometheus_teleop.cli", "serve",
                "--port", "0", "--out-dir", str(tmp_path),
            ],
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            text=True,
        )
        try:
            line = proc.stdout.readline()
            assert line.startswith("listening on ")
            port = int(line.strip().rsplit(":", 1)[1])
            sock = socket.create_connection(("127.0.0.1", port), timeout=5.0)
            sock.sendall(b'{"type": "hello", "name": "t"}\n')
            time.sleep(0.3)
            sock.close()
            rc = proc.wait(timeout=10.0)
            assert rc == 0
        finally:
            if proc.poll() is None:
                proc.kill()


class TestUsage:
    def test_no_command_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 1

    def test_unknown_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--frobnicate"])
        assert exc.value.code == 1
