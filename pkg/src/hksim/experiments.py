"""Canned experiments: bifurcation sweep, contraction bounds, edge-free
cluster spacings, and the named demonstration presets."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .clusters import certify_equilibrium, detect_clusters
from .continuum import DensitySpec
from .core import OpinionState, SimParams, SimResult, Termination, run_to_fixed_point, simulate
from .stability import StabilityVerdict, classify, metastable_scan

# Profiles narrower than this provably collapse to a single cluster.
SINGLE_CLUSTER_SPAN_BOUND = 23.0 / 6.0

PRESET_NAMES = ("fig4_stable_lt2", "fig5_conjecture", "metastable", "slow_convergence")


@dataclass(frozen=True)
class SweepRow:
    """One sweep point: final clusters of a uniformly spaced profile on [0, L].

    Cluster positions are recentered by -L/2 so rows are comparable across L.
    """

    L: float
    n: int
    cluster_positions: np.ndarray
    cluster_weights: np.ndarray
    convergence_time: Optional[int]
    converged: bool

    @property
    def n_clusters(self) -> int:
        return self.cluster_positions.size


def bifurcation_sweep(
    l_min: float,
    l_max: float,
    l_step: float = 0.1,
    agents_per_unit: int = 1000,
    params: Optional[SimParams] = None,
) -> list:
    """Run uniformly spaced profiles for L in [l_min, l_max] and collect clusters."""
    if l_min <= 0.0 or l_max < l_min or l_step <= 0.0:
        raise ValueError("need 0 < l_min <= l_max and l_step > 0")
    if agents_per_unit < 2:
        raise ValueError("agents_per_unit must be >= 2")
    if params is None:
        params = SimParams(max_steps=200_000)
    count = int(round((l_max - l_min) / l_step)) + 1
    rows = []
    for k in range(count):
        L = l_min + k * l_step
        n = int(round(agents_per_unit * L))
        state = OpinionState(np.linspace(0.0, L, n))
        res = run_to_fixed_point(state, params)
        cs = detect_clusters(res.final_state)
        rows.append(
            SweepRow(
                float(L),
                n,
                np.array([c.position - L / 2.0 for c in cs]),
                np.array([c.weight for c in cs]),
                res.convergence_time,
                res.converged,
            )
        )
    return rows


@dataclass(frozen=True)
class SingleClusterReport:
    """Contraction bounds of a narrow uniform profile on [0, L], L < 23/6.

    After one step all opinions provably sit in [1/2 - O(1/n), L - 1/2 + O(1/n)],
    after two in [11/12 - O(1/n), L - 11/12 + O(1/n)], and the profile ends in
    a single cluster at L/2. ``midpoint_deviation`` is the largest distance of
    the middle agent from L/2 seen along the run (symmetry check).
    """

    L: float
    n: int
    span_bound: float
    step1_min: float
    step1_max: float
    step2_min: float
    step2_max: float
    midpoint_deviation: float
    cluster_count: int
    cluster_position: float
    convergence_time: Optional[int]
    converged: bool


def single_cluster_bound_check(
    L: float = 3.8, n: int = 10001, params: Optional[SimParams] = None
) -> SingleClusterReport:
    if not 0.0 < L < SINGLE_CLUSTER_SPAN_BOUND:
        raise ValueError(f"L must lie in (0, {SINGLE_CLUSTER_SPAN_BOUND})")
    if n < 3 or n % 2 == 0:
        raise ValueError("n must be odd and >= 3 (a middle agent is tracked)")
    if params is None:
        params = SimParams()
    x = np.linspace(0.0, L, n)
    w = np.ones(n)
    mid = (n - 1) // 2
    half = L / 2.0
    tol = params.fixed_point_tol
    mid_dev = abs(float(x[mid]) - half)
    mins = []
    maxs = []
    t = 0
    cur = x
    while not kernels.fixed_point_reached(cur, tol) and t < params.max_steps:
        cur = kernels.step_values(cur, w)
        t += 1
        if t <= 2:
            mins.append(float(cur[0]))
            maxs.append(float(cur[-1]))
        mid_dev = max(mid_dev, abs(float(cur[mid]) - half))
    converged = bool(kernels.fixed_point_reached(cur, tol))
    while len(mins) < 2:  # already a fixed point this early; pad with current extremes
        mins.append(float(cur[0]))
        maxs.append(float(cur[-1]))
    cs = detect_clusters(OpinionState(cur, w))
    return SingleClusterReport(
        float(L),
        n,
        SINGLE_CLUSTER_SPAN_BOUND,
        mins[0],
        maxs[0],
        mins[1],
        maxs[1],
        mid_dev,
        len(cs),
        cs[0].position if len(cs) == 1 else float("nan"),
        t if converged else None,
        converged,
    )


def _exact_lattice(n: int, spacing: float) -> np.ndarray:
    """Uniform lattice whose positions and pairwise differences are exact.

    The spacing is rounded up to the nearest float with enough trailing zero
    mantissa bits that every product i*spacing (i < n) is representable. A raw
    i/apu lattice puts many pairs at distance exactly one confidence unit and
    lets per-position rounding resolve each such tie differently, seeding an
    irregular cascade; exact positions resolve them all the strict-< way.
    """
    bits = max(16, int(np.ceil(np.log2(n))))
    raw = struct.unpack("<Q", struct.pack("<d", float(spacing)))[0]
    mask = (1 << bits) - 1
    if raw & mask:
        raw = (raw & ~mask) + (1 << bits)
    h = struct.unpack("<d", struct.pack("<Q", raw))[0]
    return np.arange(n, dtype=np.float64) * h


@dataclass(frozen=True)
class EdgeCluster:
    position: float
    weight: float
    decouple_time: Optional[int]
    certified: bool


@dataclass(frozen=True)
class SemiInfiniteReport:
    """Clusters of a long uniform profile with edge-independence certification.

    A cluster is certified when its group decoupled from the right at a time
    t_d early enough that boundary truncation effects (propagating at most 2
    opinion units per step, starting one unit inside the boundary) could not
    yet have reached any of its members.
    """

    extent: float
    agents_per_unit: int
    n: int
    converged: bool
    steps: int
    clusters: tuple
    certified_positions: np.ndarray
    certified_spacings: np.ndarray


def semi_infinite(
    extent: float = 50.0,
    agents_per_unit: int = 100,
    params: Optional[SimParams] = None,
) -> SemiInfiniteReport:
    """Evolve a uniform profile on [0, extent] and certify edge-free clusters."""
    if extent <= 2.0:
        raise ValueError("extent must exceed 2")
    if agents_per_unit < 2:
        raise ValueError("agents_per_unit must be >= 2")
    if params is None:
        params = SimParams()
    n = int(round(extent * agents_per_unit)) + 1
    x0 = _exact_lattice(n, 1.0 / agents_per_unit)
    w = np.ones(n)
    tol = params.fixed_point_tol
    first_gap = np.full(n - 1, -1, dtype=np.int64)
    gap_edge = np.full(n - 1, np.nan)
    emax = x0.copy()
    fresh = x0[1:] - x0[:-1] >= 1.0
    first_gap[fresh] = 0
    gap_edge[fresh] = emax[:-1][fresh]
    cur = x0
    t = 0
    while not kernels.fixed_point_reached(cur, tol) and t < params.max_steps:
        cur = kernels.step_values(cur, w)
        t += 1
        emax = np.maximum(emax, cur)
        fresh = (cur[1:] - cur[:-1] >= 1.0) & (first_gap < 0)
        first_gap[fresh] = t
        gap_edge[fresh] = emax[:-1][fresh]
    converged = bool(kernels.fixed_point_reached(cur, tol))
    cs = detect_clusters(OpinionState(cur, w))
    out = []
    for c in cs:
        hi = int(c.members[-1])
        if hi >= n - 1 or first_gap[hi] < 0:
            out.append(EdgeCluster(c.position, c.weight, None, False))
            continue
        td = int(first_gap[hi])
        certified = bool(gap_edge[hi] + 2.0 * td < extent - 1.0)
        out.append(EdgeCluster(c.position, c.weight, td, certified))
    cert_pos = np.array([c.position for c in out if c.certified])
    spacings = np.array(
        [
            out[k + 1].position - out[k].position
            for k in range(len(out) - 1)
            if out[k].certified and out[k + 1].certified
        ]
    )
    return SemiInfiniteReport(
        float(extent),
        int(agents_per_unit),
        n,
        converged,
        t,
        tuple(out),
        cert_pos,
        spacings,
    )


# ---------------------------------------------------------------------------
# Presets.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoGroupPresetResult:
    """Deterministic two-cluster profile: a thin wide band plus a dense band."""

    result: SimResult
    verdict: StabilityVerdict
    cluster_positions: np.ndarray
    cluster_weights: np.ndarray

    @property
    def distance(self) -> float:
        return float(self.cluster_positions[-1] - self.cluster_positions[0])


def _preset_two_group(params: Optional[SimParams]) -> TwoGroupPresetResult:
    # 251 agents spaced 0.01 on [0, 2.5] plus 500 spaced 0.001 on (2.5, 3].
    x = np.concatenate((np.linspace(0.0, 2.5, 251), 2.5 + np.arange(1, 501) / 1000.0))
    state = OpinionState(x)
    res = run_to_fixed_point(state, params or SimParams())
    eq = certify_equilibrium(res)
    return TwoGroupPresetResult(res, classify(eq), eq.positions, eq.weights)


@dataclass(frozen=True)
class ConjectureSeedRow:
    seed_index: int
    n: int
    status: str
    n_clusters: int


@dataclass(frozen=True)
class ConjectureStudyResult:
    """Sampled two-band profiles at two resolutions, classified per seed.

    The working conjecture is that finer samplings of a fixed density are
    stable more often; the study reports fractions without asserting the
    unproven direction.
    """

    master_seed: int
    n_small: int
    n_large: int
    rows: tuple
    small_stable_fraction: float
    large_stable_fraction: float


def _conjecture_density() -> DensitySpec:
    # Level ratio 5.5 puts n=501 draws right at the split/merge transition:
    # typical two-cluster outcomes carry weights near (150, 350) about 1.4
    # apart, so individual draws land on either side of the stability bound.
    return DensitySpec.from_pieces([(0.0, 2.5, 1.0), (2.5, 3.0, 5.5)])


def _preset_conjecture(
    seed: int, params: Optional[SimParams], n_seeds: int = 20, n_small: int = 501, n_large: int = 5001
) -> ConjectureStudyResult:
    density = _conjecture_density()
    params = params or SimParams()
    rows = []
    counts = {n_small: 0, n_large: 0}
    children = np.random.SeedSequence(seed).spawn(n_seeds)
    for k, child in enumerate(children):
        rng = np.random.default_rng(child)
        for n in (n_small, n_large):
            u = rng.random(n)
            x = np.sort(density.quantile(u))
            res = run_to_fixed_point(OpinionState(x), params)
            eq = certify_equilibrium(res)
            verdict = classify(eq)
            rows.append(ConjectureSeedRow(k, n, verdict.status.value, len(eq.clusters)))
            if verdict.status.value == "stable":
                counts[n] += 1
    return ConjectureStudyResult(
        seed,
        n_small,
        n_large,
        tuple(rows),
        counts[n_small] / n_seeds,
        counts[n_large] / n_seeds,
    )


@dataclass(frozen=True)
class MetastablePresetResult:
    """Uniform profile just under the two-cluster threshold: a long-lived
    two-group phase that eventually collapses into one cluster."""

    L: float
    n: int
    result: SimResult
    phases: tuple
    final_cluster_count: int


def _preset_metastable(params: Optional[SimParams]) -> MetastablePresetResult:
    L = 5.0
    n = 1001
    if params is None:
        params = SimParams(max_steps=100_000, record_every=1)
    state = OpinionState(np.linspace(0.0, L, n))
    res, traj = simulate(state, params)
    phases = metastable_scan(traj)
    cs = detect_clusters(res.final_state)
    return MetastablePresetResult(L, n, res, tuple(phases), len(cs))


@dataclass(frozen=True)
class SlowConvergenceRow:
    n: int
    convergence_time: Optional[int]
    cluster_count: int
    cluster_position: float


@dataclass(frozen=True)
class SlowConvergencePresetResult:
    """Two heavy side blocks glued by one middle agent: convergence time grows
    with the block size."""

    rows: tuple


def _preset_slow_convergence(params: Optional[SimParams]) -> SlowConvergencePresetResult:
    params = params or SimParams()
    rows = []
    for n in (5, 51, 501):
        half = (n - 1) // 2
        x = np.concatenate((np.full(half, 0.1), [1.0], np.full(half, 1.9)))
        res = run_to_fixed_point(OpinionState(x), params)
        cs = detect_clusters(res.final_state)
        rows.append(
            SlowConvergenceRow(
                n,
                res.convergence_time,
                len(cs),
                cs[0].position if len(cs) == 1 else float("nan"),
            )
        )
    return SlowConvergencePresetResult(tuple(rows))


def preset(name: str, seed: int = 0, params: Optional[SimParams] = None):
    """Run a named demonstration scenario. ``seed`` only affects sampled ones."""
    if name == "fig4_stable_lt2":
        return _preset_two_group(params)
    if name == "fig5_conjecture":
        return _preset_conjecture(seed, params)
    if name == "metastable":
        return _preset_metastable(params)
    if name == "slow_convergence":
        return _preset_slow_convergence(params)
    raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
