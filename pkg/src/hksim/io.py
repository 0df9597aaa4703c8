"""Deterministic result writers and readers.

Floats are serialized with ``repr`` (shortest round-trip form), JSON keys are
sorted, and nothing time- or host-dependent is emitted, so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .core import OpinionState, Trajectory

TRAJECTORY_HEADER = ("t", "agent_index", "opinion", "weight")


def emit_trajectory(traj: Trajectory, path) -> None:
    """Write snapshots in long format: one row per (time, agent)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for t, state in zip(traj.times, traj.states):
            for i in range(state.n):
                writer.writerow((t, i, repr(float(state.opinions[i])), repr(float(state.weights[i]))))


def read_trajectory(path) -> Trajectory:
    """Read a file written by :func:`emit_trajectory` back into a Trajectory."""
    frames = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRAJECTORY_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        for row in reader:
            t = int(row[0])
            frames.setdefault(t, []).append((int(row[1]), float(row[2]), float(row[3])))
    traj = Trajectory()
    for t in sorted(frames):
        rows = sorted(frames[t])
        x = np.array([r[1] for r in rows])
        w = np.array([r[2] for r in rows])
        traj.times.append(t)
        traj.states.append(OpinionState(x, w, time=t))
    return traj


def emit_sweep(rows, path) -> None:
    """Write bifurcation sweep rows: one CSV line per (L, cluster)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ("L", "n", "converged", "convergence_time", "cluster_index", "position", "weight")
        )
        for row in rows:
            ct = "" if row.convergence_time is None else row.convergence_time
            for k in range(row.n_clusters):
                writer.writerow(
                    (
                        repr(row.L),
                        row.n,
                        int(row.converged),
                        ct,
                        k,
                        repr(float(row.cluster_positions[k])),
                        repr(float(row.cluster_weights[k])),
                    )
                )


def emit_perturbations(report, path) -> None:
    """Write an empirical stability grid: one line per (delta, probe position)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("delta", "x0", "displacement"))
        for d, row in zip(report.deltas, report.displacements):
            for x0, disp in zip(report.grid, row):
                writer.writerow((repr(float(d)), repr(float(x0)), repr(float(disp))))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def emit_json(obj: dict, path) -> None:
    """Write a summary dict as canonical JSON (sorted keys, fixed layout)."""
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
