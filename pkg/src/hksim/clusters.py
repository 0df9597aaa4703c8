"""Cluster extraction and equilibrium certification for converged profiles.

A converged profile is a set of point clusters; consecutive clusters sit at
least 1 apart (anything closer would still interact). Cluster detection is a
gap split: any threshold comfortably between the numerical group diameter
(~fixed_point_tol) and 1 yields the same clusters on a certified equilibrium.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .core import OpinionState, SimResult, Trajectory, is_fixed_point

SEPARATION_SLACK = 1e-9


@dataclass(frozen=True)
class Cluster:
    """One opinion cluster: weighted-mean position, total weight, member indices."""

    position: float
    weight: float
    members: np.ndarray


@dataclass(frozen=True)
class Equilibrium:
    """Certified fixed-point profile.

    ``state`` is the profile the clusters were read from (for synthetic
    equilibria: one agent per cluster). ``convergence_time`` carries the
    source simulation's convergence step when known.
    """

    clusters: tuple
    state: OpinionState
    convergence_time: Optional[int] = None

    def __post_init__(self):
        if not self.clusters:
            raise ValueError("equilibrium must contain at least one cluster")
        pos = np.array([c.position for c in self.clusters])
        if np.any(np.diff(pos) < 1.0 - SEPARATION_SLACK):
            raise ValueError("cluster separations must be >= 1")

    @property
    def positions(self) -> np.ndarray:
        return np.array([c.position for c in self.clusters])

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.clusters])


def detect_clusters(state: OpinionState, gap_threshold: float = 0.5) -> list:
    """Split the sorted profile at consecutive gaps > gap_threshold.

    Positions are weighted means of the member opinions. On a certified
    equilibrium the result is invariant to the threshold across
    [10 * fixed_point_tol, 0.9].
    """
    if not 0.0 < gap_threshold < 1.0:
        raise ValueError("gap_threshold must lie strictly between 0 and 1")
    x = state.opinions
    w = state.weights
    cut = np.flatnonzero(x[1:] - x[:-1] > gap_threshold)
    starts = np.concatenate(([0], cut + 1))
    ends = np.concatenate((cut + 1, [x.size]))
    out = []
    for s, e in zip(starts, ends):
        ww = w[s:e]
        weight = float(np.sum(ww))
        position = float(np.dot(ww, x[s:e]) / weight)
        out.append(Cluster(position, weight, np.arange(s, e)))
    return out


def decoupled_groups(state: OpinionState) -> list:
    """Inclusive index ranges split at gaps >= 1; groups evolve independently."""
    seg = kernels.segment_starts(state.opinions)
    starts = np.flatnonzero(seg == np.arange(state.n))
    ends = np.append(starts[1:] - 1, state.n - 1)
    return [(int(s), int(e)) for s, e in zip(starts, ends)]


def convergence_time(traj: Trajectory, tol: float = 1e-12) -> Optional[int]:
    """Earliest recorded time whose snapshot is a fixed point; None if none is.

    Exact when the trajectory was recorded with record_every=1; with thinning
    it returns the earliest qualifying snapshot.
    """
    for t, s in zip(traj.times, traj.states):
        if is_fixed_point(s, tol):
            return int(t)
    return None


def certify_equilibrium(
    result: SimResult,
    gap_threshold: float = 0.5,
    tol: Optional[float] = None,
) -> Equilibrium:
    """Turn a converged SimResult into an Equilibrium; raises if not converged."""
    if not result.converged:
        raise ValueError("cannot certify equilibrium: simulation did not converge")
    state = result.final_state
    if tol is not None and not is_fixed_point(state, tol):
        raise ValueError("final state fails the fixed-point test at the given tol")
    cs = detect_clusters(state, gap_threshold)
    return Equilibrium(tuple(cs), state, result.convergence_time)


def equilibrium_from_clusters(positions, weights) -> Equilibrium:
    """Synthetic equilibrium: one point agent per cluster (clusters >= 1 apart)."""
    pos = np.asarray(positions, dtype=np.float64)
    wts = np.asarray(weights, dtype=np.float64)
    state = OpinionState(pos, wts)
    cs = tuple(
        Cluster(float(p), float(w), np.array([i])) for i, (p, w) in enumerate(zip(pos, wts))
    )
    return Equilibrium(cs, state, None)
