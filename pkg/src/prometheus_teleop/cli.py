"""Command-line entry points: simulate, serve, replay, analyze, export.

All commands are deterministic given their flags and seed. Exit codes are a
stable contract: 0 success, 1 usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
from dataclasses import replace

import numpy as np

from . import dataset as ds
from . import gripper_sim as grip
from . import haptics as hap
from .config import load_app_config
from .teleop_server import (
    ServerConfig,
    run_episode,
    serve,
    trajectory_from_reports,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UnknownTask(ValueError):
    pass


class UnknownPolicy(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors (the default would exit 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="prometheus", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run scripted grasp episodes and record them")
    p.add_argument("--task", required=True, help="object preset name")
    p.add_argument("--policy", required=True, help="position_only or force_capped")
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config", default=None)

    p = sub.add_parser("serve", help="serve one live operator session")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7777)
    p.add_argument("--out-dir", default="recordings")
    p.add_argument("--config", default=None)

    p = sub.add_parser("replay", help="verify a recorded trajectory reproduces itself")
    p.add_argument("file")

    p = sub.add_parser("analyze", help="summarize recorded batches")
    p.add_argument("files", nargs="+", help="batch A trajectory files")
    p.add_argument("--batch-b", nargs="+", default=None, help="batch B for comparison")
    p.add_argument("--plot-data", default=None, help="write aligned mean-force table")

    p = sub.add_parser("export", help="write the discretized training view of a file")
    p.add_argument("file")
    p.add_argument("--out", required=True)
    return parser


def _episode_variation(seed: int, index: int, obj: grip.ObjectModel):
    """Deterministic per-episode size jitter and grasp placement."""
    rng = random.Random(f"{seed}:{index}")
    size_jitter = rng.uniform(-2.5, 2.5)  # mm
    radius = 0.05 * math.sqrt(rng.random())
    angle = rng.uniform(0.0, 2.0 * math.pi)
    varied = replace(obj, free_size=max(obj.free_size + size_jitter, 1.0))
    return varied, (radius * math.cos(angle), radius * math.sin(angle))


def _make_policy(kind: str, obj: grip.ObjectModel, f_max: float):
    if kind == "force_capped":
        return grip.scripted_policy(kind, obj, f_max=f_max)
    return grip.scripted_policy(kind, obj)


def cmd_simulate(args) -> int:
    app = load_app_config(args.config, mode="scripted")
    if args.task not in app.rig.objects:
        raise UnknownTask(
            f"unknown task {args.task!r}; have {sorted(app.rig.objects)}"
        )
    if args.policy not in grip.POLICY_KINDS:
        raise UnknownPolicy(
            f"unknown policy {args.policy!r}; have {list(grip.POLICY_KINDS)}"
        )
    os.makedirs(args.out_dir, exist_ok=True)
    preset = app.rig.objects[args.task]
    files = []
    outcomes = {"success": 0, "slip": 0, "damage": 0}
    peaks = []
    for i in range(args.episodes):
        obj, offset = _episode_variation(args.seed, i, preset)
        policy = _make_policy(args.policy, obj, app.rig.haptics.fsr.f_max)
        reports, outcome = run_episode(app.server, policy, obj, app.rig, offset)
        episode_id = f"{args.task}-{args.policy}-s{args.seed}-e{i:03d}"
        traj = trajectory_from_reports(
            reports,
            episode_id,
            args.task,
            app.server,
            app.rig,
            obj=obj,
            outcome=outcome,
            meta={"policy": args.policy, "seed": args.seed, "episode_index": i},
        )
        path = os.path.join(args.out_dir, f"{episode_id}.jsonl")
        ds.export_trajectory(traj, path)
        files.append(os.path.basename(path))
        outcomes[outcome.label] += 1
        peaks.append(outcome.peak_force)
    summary = {
        "task": args.task,
        "policy": args.policy,
        "episodes": args.episodes,
        "seed": args.seed,
        "outcomes": outcomes,
        "success_rate": outcomes["success"] / args.episodes if args.episodes else None,
        "slip_rate": outcomes["slip"] / args.episodes if args.episodes else None,
        "damage_rate": outcomes["damage"] / args.episodes if args.episodes else None,
        "mean_peak_force": sum(peaks) / len(peaks) if peaks else None,
        "files": files,
    }
    summary_path = os.path.join(args.out_dir, "summary.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(summary, indent=2) + "\n")
    print(f"wrote {len(files)} episodes + summary to {args.out_dir}")
    return EXIT_OK


def cmd_serve(args) -> int:
    app = load_app_config(args.config, mode="live")
    cfg = replace(app.server, mode="live")

    def on_ready(host, port):
        print(f"listening on {host}:{port}", flush=True)

    serve(
        cfg,
        host=args.host,
        port=args.port,
        rig=app.rig,
        out_dir=args.out_dir,
        on_ready=on_ready,
    )
    print("session ended")
    return EXIT_OK


def _rig_pieces_from_meta(meta: dict):
    h = meta.get("haptics", {})
    params = hap.HapticsParams(
        linearizer=hap.LinearizerConfig(
            v_ref=h.get("v_ref", 3.3), r_g=h.get("r_g", 1000.0)
        ),
        fsr=hap.FsrModel(r_fs=h.get("r_fs", 1000.0), f_max=h.get("f_max", 20.0)),
        k_t=h.get("k_t", 0.2),
    )
    p = meta.get("pad", {})
    mech = grip.PadMechanism(
        spring_k=p.get("spring_k", 0.25),
        spring_count=p.get("spring_count", 2),
        preload_f=p.get("preload_f", 0.5),
        pad_length=p.get("pad_length", 90.0),
    )
    return params, mech


def cmd_replay(args) -> int:
    traj = ds.import_trajectory(args.file)
    if traj.object_params is None:
        raise ValueError("file has no object parameters; cannot replay forces")
    obj = grip.ObjectModel(**traj.object_params)
    params, mech = _rig_pieces_from_meta(traj.meta)

    mismatches = 0
    for step in traj.steps:
        opening = step.observation.opening_mm
        if opening < obj.free_size:
            contact = obj.stiffness * (obj.free_size - opening)
        else:
            contact = 0.0
        sensor = grip.pad_transfer(contact, mech.pad_length / 2.0, mech)
        norm = params.sample(sensor).normalized
        if norm != step.observation.force_norm:
            mismatches += 1
    recon = traj.reconstruct_states()
    recorded = traj.raw_states()
    clamped_steps = sum(
        1 for s in traj.steps if s.action is not None and s.action.clamped
    )
    prefix = len(traj.steps)  # clamped actions cannot reconstruct past themselves
    for j, s in enumerate(traj.steps[:-1]):
        if s.action.clamped:
            prefix = j + 1
            break
    state_err = float(np.max(np.abs(recon[:prefix] - recorded[:prefix])))
    print(
        f"{len(traj.steps)} steps; force-trace mismatches: {mismatches}; "
        f"max state reconstruction error: {state_err:.3e}; "
        f"clamped actions: {clamped_steps}"
    )
    if mismatches or state_err > 1e-9:
        raise RuntimeError("replay did not reproduce the recorded trajectory")
    print("replay OK: stored force trace reproduced exactly")
    return EXIT_OK


def _load_batch(paths):
    episodes = []
    for path in paths:
        traj = ds.import_trajectory(path)
        if not traj.steps:
            continue
        f_max = traj.meta.get("haptics", {}).get("f_max", 20.0)
        forces = [s.observation.force_norm * f_max for s in traj.steps]
        hold = [f for f in forces if f > 0.0]
        if traj.outcome is not None:
            peak = traj.outcome.peak_force
            label = traj.outcome.label
        else:
            peak = max(forces)
            label = "unknown"
        episodes.append(
            {
                "id": traj.episode_id,
                "peak": peak,
                "mean_hold": sum(hold) / len(hold) if hold else 0.0,
                "label": label,
                "forces": forces,
            }
        )
    if not episodes:
        raise ValueError("batch contains no steps to analyze")
    return episodes


def _batch_rates(episodes):
    n = len(episodes)
    rates = {}
    for label in ("success", "slip", "damage", "unknown"):
        count = sum(1 for e in episodes if e["label"] == label)
        if count:
            rates[label] = count / n
    return rates


def _mean_curve(episodes):
    longest = max(len(e["forces"]) for e in episodes)
    curve = []
    for i in range(longest):
        vals = [e["forces"][i] for e in episodes if len(e["forces"]) > i]
        curve.append(sum(vals) / len(vals))
    return curve


def cmd_analyze(args) -> int:
    batch_a = _load_batch(args.files)
    print(f"{'episode':<32} {'outcome':<9} {'peak N':>8} {'hold N':>8}")
    for e in batch_a:
        print(f"{e['id']:<32} {e['label']:<9} {e['peak']:>8.3f} {e['mean_hold']:>8.3f}")
    rates = _batch_rates(batch_a)
    mean_peak_a = sum(e["peak"] for e in batch_a) / len(batch_a)
    print(f"batch A: n={len(batch_a)} mean peak {mean_peak_a:.3f} N rates {rates}")

    mean_curve_b = None
    if args.batch_b:
        batch_b = _load_batch(args.batch_b)
        mean_peak_b = sum(e["peak"] for e in batch_b) / len(batch_b)
        reduction = (mean_peak_a - mean_peak_b) / mean_peak_a
        print(
            f"batch B: n={len(batch_b)} mean peak {mean_peak_b:.3f} N; "
            f"reduction A→B: {100.0 * reduction:.2f}%"
        )
        mean_curve_b = _mean_curve(batch_b)

    if args.plot_data:
        curve_a = _mean_curve(batch_a)
        with open(args.plot_data, "w", encoding="utf-8") as fh:
            if mean_curve_b is None:
                fh.write("step\tmean_force_a\n")
                for i, v in enumerate(curve_a):
                    fh.write(f"{i}\t{v!r}\n")
            else:
                fh.write("step\tmean_force_a\tmean_force_b\n")
                for i in range(max(len(curve_a), len(mean_curve_b))):
                    a = repr(curve_a[i]) if i < len(curve_a) else ""
                    b = repr(mean_curve_b[i]) if i < len(mean_curve_b) else ""
                    fh.write(f"{i}\t{a}\t{b}\n")
        print(f"wrote plot data to {args.plot_data}")
    return EXIT_OK


def cmd_export(args) -> int:
    import csv

    traj = ds.import_trajectory(args.file)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["step", "gripper_pos_bin", "force_bin"]
            + [f"action_{i+1}" for i in range(7)]
            + ["clamped"]
        )
        for i, step in enumerate(traj.steps):
            obs = step.observation
            row = [i, ds.discretize(obs.gripper_pos_norm), ds.discretize(obs.force_norm)]
            if step.action is None:
                row += [""] * 7 + [""]
            else:
                row += [repr(float(v)) for v in step.action.values] + [
                    step.action.clamped
                ]
            writer.writerow(row)
    print(f"wrote {len(traj.steps)} discretized steps to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "serve": cmd_serve,
    "replay": cmd_replay,
    "analyze": cmd_analyze,
    "export": cmd_export,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (UnknownTask, UnknownPolicy) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:  # runtime failures map to the stable exit contract
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
