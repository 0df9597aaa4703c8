"""Stability analysis of cluster equilibria.

Analytic route: a pair of clusters with weights W_a, W_b at distance d is
stable against vanishing perturbations iff d >= 2 when the weights are equal,
or d > 1 + min(W_a, W_b) / max(W_a, W_b) when they differ (strictly). A pair
of unequal weights sitting exactly at the bound is reported as Boundary: it
is a knife edge (provably unstable, but any finite-delta probe is
inconclusive there).

Empirical route: insert a probe agent of weight delta, run to a fixed point,
remove it, and measure the weighted displacement of the original agents.
Stable equilibria show displacements that vanish linearly with delta;
unstable ones show an O(1) displacement (a merge) no matter how small delta
gets.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from . import kernels
from .clusters import Equilibrium, detect_clusters
from .core import OpinionState, SimParams
from .core import Trajectory


class Verdict(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    BOUNDARY = "boundary"


class EmpiricalVerdict(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class PairCheck:
    """Outcome of the pair condition for one cluster pair."""

    i: int
    j: int
    distance: float
    bound: float
    verdict: Verdict

    @property
    def margin(self) -> float:
        return self.distance - self.bound


@dataclass(frozen=True)
class StabilityVerdict:
    """Aggregate verdict over all cluster pairs at distance < 2.

    ``status`` is UNSTABLE iff ``violations`` is non-empty; BOUNDARY is
    reserved for distances exactly at the unequal-weight bound (and no strict
    violations); otherwise STABLE.
    """

    status: Verdict
    checks: tuple
    violations: tuple
    boundary_pairs: tuple


@dataclass(frozen=True)
class PerturbationResult:
    """One probe run: insertion point, probe weight, and what it did."""

    x0: float
    delta: float
    displacement: float
    merged: bool
    steps: int


@dataclass(frozen=True)
class EmpiricalStabilityReport:
    verdict: EmpiricalVerdict
    deltas: np.ndarray
    grid: np.ndarray
    displacements: np.ndarray  # shape (len(deltas), len(grid))
    sups: np.ndarray
    sup_locations: np.ndarray


@dataclass(frozen=True)
class MetastablePhase:
    """Maximal run of steps spent in a slowly drifting two-group configuration."""

    start: int
    end: int
    gap: float


def pair_condition(w_a: float, w_b: float, d: float) -> Verdict:
    """Stability verdict for a single cluster pair at distance d."""
    if w_a <= 0.0 or w_b <= 0.0:
        raise ValueError("cluster weights must be positive")
    if d <= 0.0:
        raise ValueError("cluster distance must be positive")
    if w_a == w_b:
        return Verdict.STABLE if d >= 2.0 else Verdict.UNSTABLE
    bound = 1.0 + min(w_a, w_b) / max(w_a, w_b)
    if d == bound:
        return Verdict.BOUNDARY
    return Verdict.STABLE if d > bound else Verdict.UNSTABLE


def pair_bound(w_a: float, w_b: float) -> float:
    """Critical distance for the pair: 2 for equal weights, 1 + min/max otherwise."""
    if w_a <= 0.0 or w_b <= 0.0:
        raise ValueError("cluster weights must be positive")
    if w_a == w_b:
        return 2.0
    return 1.0 + min(w_a, w_b) / max(w_a, w_b)


def center_of_mass_test(x_a: float, x_b: float, w_a: float, w_b: float) -> bool:
    """Strict-branch pair condition in center-of-mass form.

    True iff the pair's center of mass is farther than 1 from one of the
    clusters; algebraically equivalent to |x_a - x_b| > 1 + min/max.
    """
    if w_a <= 0.0 or w_b <= 0.0:
        raise ValueError("cluster weights must be positive")
    m = (w_a * x_a + w_b * x_b) / (w_a + w_b)
    return max(abs(m - x_a), abs(m - x_b)) > 1.0


def classify(eq: Equilibrium) -> StabilityVerdict:
    """Analytic stability of an equilibrium: pair condition on all pairs < 2 apart.

    Pairs at distance >= 2 are unconditionally stable and skipped. A single
    cluster is trivially stable.
    """
    pos = eq.positions
    wts = eq.weights
    checks = []
    violations = []
    boundary = []
    k = len(pos)
    for i in range(k):
        for j in range(i + 1, k):
            d = float(pos[j] - pos[i])
            if d >= 2.0:
                continue
            v = pair_condition(float(wts[i]), float(wts[j]), d)
            chk = PairCheck(i, j, d, pair_bound(float(wts[i]), float(wts[j])), v)
            checks.append(chk)
            if v is Verdict.UNSTABLE:
                violations.append(chk)
            elif v is Verdict.BOUNDARY:
                boundary.append(chk)
    if violations:
        status = Verdict.UNSTABLE
    elif boundary:
        status = Verdict.BOUNDARY
    else:
        status = Verdict.STABLE
    return StabilityVerdict(status, tuple(checks), tuple(violations), tuple(boundary))


def perturb_and_measure(
    eq: Equilibrium,
    x0: float,
    delta: float,
    params: Optional[SimParams] = None,
) -> PerturbationResult:
    """Insert a probe agent (x0, delta), run to a fixed point, remove it.

    Displacement is sum_i w_i |final_i - original_i| over the original agents;
    it is exactly 0 when the probe never interacts. ``merged`` reports whether
    the original agents now form fewer clusters than before.
    """
    if delta <= 0.0:
        raise ValueError("probe weight delta must be positive")
    if params is None:
        params = SimParams(max_steps=1_000_000)
    x = eq.state.opinions
    w = eq.state.weights
    k = int(np.searchsorted(x, x0))
    xp = np.insert(x, k, x0)
    wp = np.insert(w, k, delta)
    xf, steps, conv = kernels.run_to_fixed(xp, wp, params.fixed_point_tol, params.max_steps)
    if not conv:
        raise RuntimeError(
            f"perturbed system did not reach a fixed point in {params.max_steps} steps"
        )
    rest = np.delete(xf, k)
    displacement = float(np.sum(w * np.abs(rest - x)))
    after = detect_clusters(OpinionState(rest, w))
    merged = len(after) < len(eq.clusters)
    return PerturbationResult(float(x0), float(delta), displacement, merged, int(steps))


def empirical_stability(
    eq: Equilibrium,
    deltas=(1e-2, 1e-3, 1e-4),
    grid_step: float = 0.01,
    stability_eps: float = 1e-2,
    params: Optional[SimParams] = None,
) -> EmpiricalStabilityReport:
    """Probe the equilibrium over a grid of insertion points and a delta schedule.

    Declares STABLE when the sup displacement shrinks with delta and ends
    below stability_eps, UNSTABLE when it stays above, INCONCLUSIVE otherwise
    (e.g. at a knife-edge pair distance).
    """
    if grid_step <= 0.0:
        raise ValueError("grid_step must be positive")
    deltas = np.asarray(sorted(deltas, reverse=True), dtype=np.float64)
    if np.any(deltas <= 0.0):
        raise ValueError("deltas must be positive")
    pos = eq.positions
    a = pos[0] - 1.0
    b = pos[-1] + 1.0
    npts = int(round((b - a) / grid_step)) + 1
    grid = a + grid_step * np.arange(npts)
    disp = np.empty((deltas.size, grid.size))
    for r, d in enumerate(deltas):
        for c, x0 in enumerate(grid):
            disp[r, c] = perturb_and_measure(eq, float(x0), float(d), params).displacement
    sups = disp.max(axis=1)
    sup_locations = grid[disp.argmax(axis=1)]
    decreasing = bool(np.all(np.diff(sups) <= 0.0))
    if sups[-1] < stability_eps and decreasing:
        verdict = EmpiricalVerdict.STABLE
    elif sups[-1] >= stability_eps:
        verdict = EmpiricalVerdict.UNSTABLE
    else:
        verdict = EmpiricalVerdict.INCONCLUSIVE
    return EmpiricalStabilityReport(verdict, deltas, grid, disp, sups, sup_locations)


def _two_group_structure(cs):
    """(pos_a, pos_b, gap) if clusters form two heavy groups with a light bridge."""
    if len(cs) < 3:
        return None
    order = np.argsort([-c.weight for c in cs], kind="stable")
    ga, gb = sorted((cs[order[0]], cs[order[1]]), key=lambda c: c.position)
    others = [c for c in cs if c is not ga and c is not gb]
    if not all(ga.position < c.position < gb.position for c in others):
        return None
    bridge_w = float(sum(c.weight for c in others))
    gap = gb.position - ga.position
    if 1.0 < gap < 2.0 and 0.0 < bridge_w < 0.05 * min(ga.weight, gb.weight):
        return ga.position, gb.position, gap
    return None


def metastable_scan(
    traj: Trajectory,
    drift_eps: float = 0.01,
    min_len: int = 50,
) -> list:
    """Find long-lived two-group configurations bridged by a little weight.

    A snapshot qualifies when the profile splits into exactly two heavy
    groups at gap in (1, 2), everything else is strictly between them with
    total weight < 5% of either group (non-zero: with no bridge the groups
    are simply decoupled forever), and both group positions drift less than
    drift_eps per step since the previous snapshot. Maximal qualifying runs
    spanning >= min_len steps are returned; the reported gap is taken at the
    start of the run.
    """
    if min_len < 1:
        raise ValueError("min_len must be >= 1")
    phases = []
    prev = None  # (time, pos_a, pos_b) at the previous structurally valid snapshot
    run_start = None
    run_last = None
    run_gap = None

    def flush():
        if run_start is not None and run_last - run_start >= min_len:
            phases.append(MetastablePhase(int(run_start), int(run_last), float(run_gap)))

    for t, s in zip(traj.times, traj.states):
        info = _two_group_structure(detect_clusters(s))
        ok = False
        if info is not None:
            pa, pb, gap = info
            if prev is not None:
                dt = t - prev[0]
                drift = max(abs(pa - prev[1]), abs(pb - prev[2]))
                ok = dt > 0 and drift / dt < drift_eps
            prev = (t, pa, pb)
        else:
            prev = None
        if ok:
            if run_start is None:
                run_start = t
                run_gap = gap
            run_last = t
        else:
            flush()
            run_start = None
    flush()
    return phases
