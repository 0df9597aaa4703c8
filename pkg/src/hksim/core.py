"""Synchronous bounded-confidence opinion dynamics on the real line.

Every agent holds an opinion; at each step it moves to the weighted average
of all opinions strictly within distance 1 of its own (itself included).
The confidence radius is hard-wired to 1: the model is scale-free, so callers
rescale opinions instead of configuring a radius. Neighbor membership uses
strict IEEE comparison with no tolerance; a pair exactly 1 apart does not
interact.

States keep opinions sorted ascending. The update preserves order, so agent
indices are stable identities for an entire trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import kernels

CONFIDENCE_RADIUS = 1.0


class Termination(Enum):
    """Why a simulation stopped."""

    FIXED_POINT = "fixed_point"
    MAX_STEPS = "max_steps"


@dataclass(frozen=True)
class OpinionState:
    """Sorted opinion profile with positive weights at a discrete time.

    Arrays are float64 and must not be mutated after construction. Use
    :meth:`from_values` for unsorted input.
    """

    opinions: np.ndarray
    weights: Optional[np.ndarray] = None
    time: int = 0

    def __post_init__(self):
        x = np.ascontiguousarray(np.asarray(self.opinions, dtype=np.float64))
        if x.ndim != 1 or x.size == 0:
            raise ValueError("opinions must be a non-empty 1-D array")
        if not np.all(np.isfinite(x)):
            raise ValueError("opinions must be finite")
        if np.any(x[1:] < x[:-1]):
            raise ValueError("opinions must be sorted ascending")
        if self.weights is None:
            w = np.ones(x.size, dtype=np.float64)
        else:
            w = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64))
            if w.shape != x.shape:
                raise ValueError("weights length must match opinions length")
            if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
                raise ValueError("weights must be finite and strictly positive")
        if not isinstance(self.time, (int, np.integer)) or self.time < 0:
            raise ValueError("time must be a non-negative integer")
        object.__setattr__(self, "opinions", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "time", int(self.time))

    @classmethod
    def from_values(cls, opinions, weights=None, time=0) -> "OpinionState":
        """Build a state from possibly-unsorted opinions (stable sort, weights follow)."""
        x = np.asarray(opinions, dtype=np.float64)
        order = np.argsort(x, kind="stable")
        w = None if weights is None else np.asarray(weights, dtype=np.float64)[order]
        return cls(x[order], w, time)

    @property
    def n(self) -> int:
        return self.opinions.size

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    @property
    def span(self) -> float:
        return float(self.opinions[-1] - self.opinions[0])


@dataclass(frozen=True)
class SimParams:
    """Simulation controls. The confidence radius itself is not a parameter."""

    max_steps: int = 100_000
    fixed_point_tol: float = 1e-12
    record_every: int = 1

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.fixed_point_tol < 0.0:
            raise ValueError("fixed_point_tol must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class Trajectory:
    """Thinned snapshots plus per-step summary statistics.

    ``states[k]`` is the state at time ``times[k]``; the initial and final
    states are always present. ``max_change[t]``, ``state_min[t]`` and
    ``state_max[t]`` describe the transition into time ``t + 1``.
    """

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    max_change: np.ndarray = field(default_factory=lambda: np.empty(0))
    state_min: np.ndarray = field(default_factory=lambda: np.empty(0))
    state_max: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def steps(self) -> int:
        return len(self.max_change)


@dataclass(frozen=True)
class SimResult:
    """Outcome of :func:`simulate`."""

    final_state: OpinionState
    converged: bool
    convergence_time: Optional[int]
    termination: Termination


def neighbor_window(state: OpinionState, i: int) -> tuple:
    """Inclusive index range ``(lo, hi)`` of the agents within distance < 1 of agent i."""
    x = state.opinions
    n = x.size
    if not 0 <= i < n:
        raise IndexError(f"agent index {i} out of range for n={n}")
    lo, hi = 0, i
    while lo < hi:
        mid = (lo + hi) // 2
        if x[i] - x[mid] < 1.0:
            hi = mid
        else:
            lo = mid + 1
    left = lo
    lo, hi = i + 1, n
    while lo < hi:
        mid = (lo + hi) // 2
        if x[mid] - x[i] >= 1.0:
            hi = mid
        else:
            lo = mid + 1
    return left, lo - 1


def step(state: OpinionState) -> OpinionState:
    """One synchronous update of all agents.

    O(n) via two-pointer neighbor windows and prefix sums. Output is sorted
    (order preservation) and weights are carried through unchanged.
    """
    out = kernels.step_values(state.opinions, state.weights)
    return OpinionState(out, state.weights, state.time + 1)


def step_naive(state: OpinionState) -> OpinionState:
    """Reference update with all-pairs neighbor determination.

    Bitwise-identical to :func:`step` (the window sums share one summation
    path); kept as an independent O(n^2) route for cross-checking.
    """
    lo, hi = kernels.naive_window_bounds(state.opinions)
    out = kernels.window_means(state.opinions, state.weights, lo, hi)
    return OpinionState(out, state.weights, state.time + 1)


def is_fixed_point(state: OpinionState, tol: float = 1e-12) -> bool:
    """True iff opinions form groups of diameter <= tol separated by >= 1 - tol.

    Such a profile no longer moves (up to tol): every group only sees itself.
    """
    if tol < 0.0:
        raise ValueError("tol must be >= 0")
    return bool(kernels.fixed_point_reached(state.opinions, tol))


def simulate(state: OpinionState, params: SimParams = SimParams()):
    """Iterate :func:`step` until a fixed point or ``params.max_steps``.

    Returns ``(SimResult, Trajectory)``. Convergence time is the first step
    index whose state passes :func:`is_fixed_point`; a state that is already
    a fixed point converges at time 0 without stepping.
    """
    tol = params.fixed_point_tol
    traj = Trajectory()
    max_change = []
    smin = []
    smax = []
    cur = state
    base = state.time
    traj.times.append(cur.time)
    traj.states.append(cur)
    recorded_last = True
    while True:
        if is_fixed_point(cur, tol):
            converged = True
            conv_time = cur.time - base
            termination = Termination.FIXED_POINT
            break
        if cur.time - base >= params.max_steps:
            converged = False
            conv_time = None
            termination = Termination.MAX_STEPS
            break
        nxt = step(cur)
        max_change.append(float(np.max(np.abs(nxt.opinions - cur.opinions))))
        smin.append(float(nxt.opinions[0]))
        smax.append(float(nxt.opinions[-1]))
        cur = nxt
        recorded_last = (cur.time - base) % params.record_every == 0
        if recorded_last:
            traj.times.append(cur.time)
            traj.states.append(cur)
    if not recorded_last:
        traj.times.append(cur.time)
        traj.states.append(cur)
    traj.max_change = np.asarray(max_change)
    traj.state_min = np.asarray(smin)
    traj.state_max = np.asarray(smax)
    result = SimResult(cur, converged, conv_time, termination)
    return result, traj


def run_to_fixed_point(state: OpinionState, params: SimParams = SimParams()):
    """Fast-path simulate without trajectory recording (backend run loop)."""
    x, t, conv = kernels.run_to_fixed(
        state.opinions, state.weights, params.fixed_point_tol, params.max_steps
    )
    final = OpinionState(x, state.weights, state.time + int(t))
    termination = Termination.FIXED_POINT if conv else Termination.MAX_STEPS
    return SimResult(final, bool(conv), int(t) if conv else None, termination)
