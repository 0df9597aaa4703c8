"""Continuum-limit diagnostics: operators, potential, and the mu-metric.

A unit-mass opinion distribution is represented by weighted quantile
discretizations. On such states the interaction defines three operators in
the weighted inner product <y, z> = sum_i w_i y_i z_i:

* adjacency  (A_x y)_i = sum over the window of w_j y_j,
* degree     (D_x y)_i = d_i y_i with d_i the window weight,
* laplacian  L_x = D_x - A_x,

with A_x self-adjoint, L_x positive semi-definite, L_x 1 = 0, and the update
written as step(x) - x = -(L_x x) / d_x. The potential
V(x) = 1/2 sum_{ij} w_i w_j min(1, (x_i - x_j)^2) decreases along
trajectories by at least <dx, (A_x + D_x) dx>.

All quadratic forms run in O(n) through window prefix sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .core import OpinionState, step


def _seq_sum(values) -> float:
    # Sequential (index-order) total, so results do not depend on numpy's
    # pairwise summation blocking.
    if values.size == 0:
        return 0.0
    return float(np.cumsum(values)[-1])


# ---------------------------------------------------------------------------
# Densities and their quantile discretizations.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensitySpec:
    """Piecewise-constant density on [0, L], normalized to total mass 1.

    ``edges`` are the n_pieces + 1 breakpoints starting at 0; ``heights`` are
    the normalized densities per piece (>= 0, at least one positive).
    """

    edges: np.ndarray
    heights: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.float64)
        h = np.asarray(self.heights, dtype=np.float64)
        if e.ndim != 1 or e.size < 2 or h.shape != (e.size - 1,):
            raise ValueError("edges must be 1-D with len(heights) + 1 entries")
        if e[0] != 0.0:
            raise ValueError("support must start at 0")
        if np.any(np.diff(e) <= 0.0):
            raise ValueError("edges must be strictly increasing")
        if np.any(h < 0.0) or not np.any(h > 0.0):
            raise ValueError("heights must be >= 0 with at least one positive")
        mass = float(np.dot(h, np.diff(e)))
        h = h / mass
        cdf = np.concatenate(([0.0], np.cumsum(h * np.diff(e))))
        cdf[-1] = 1.0
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "_cdf", cdf)

    @classmethod
    def from_pieces(cls, pieces) -> "DensitySpec":
        """Build from [(a, b, height), ...]; pieces must tile [0, L] contiguously."""
        pieces = sorted(pieces)
        if not pieces:
            raise ValueError("need at least one density piece")
        edges = [pieces[0][0]]
        heights = []
        for a, b, h in pieces:
            if a != edges[-1]:
                raise ValueError("pieces must be contiguous and non-overlapping")
            edges.append(b)
            heights.append(h)
        return cls(np.asarray(edges), np.asarray(heights))

    @classmethod
    def uniform(cls, length: float) -> "DensitySpec":
        return cls(np.array([0.0, float(length)]), np.array([1.0]))

    @property
    def length(self) -> float:
        return float(self.edges[-1])

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        k = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, self.heights.size - 1)
        base = np.asarray(self._cdf)[k]
        val = base + self.heights[k] * (x - self.edges[k])
        return np.clip(val, 0.0, 1.0)

    def quantile(self, q):
        """Generalized inverse CDF: smallest x with F(x) >= q."""
        q = np.asarray(q, dtype=np.float64)
        if np.any(q < 0.0) or np.any(q > 1.0):
            raise ValueError("quantile levels must lie in [0, 1]")
        cdf = np.asarray(self._cdf)
        k = np.searchsorted(cdf, q, side="left")
        k = np.clip(k, 1, cdf.size - 1)
        piece = k - 1
        h = self.heights[piece]
        off = np.where(h > 0.0, (q - cdf[piece]) / np.where(h > 0.0, h, 1.0), 0.0)
        out = self.edges[piece] + off
        return np.where(q <= 0.0, self.edges[0], out)


def discretize(density: DensitySpec, n: int, rule: str = "midpoint") -> OpinionState:
    """n-agent quantile discretization with weights 1/n.

    ``midpoint`` places agent i at F^{-1}((i - 1/2)/n); ``right`` uses
    F^{-1}(i/n), the construction whose profile dominates the continuum
    profile pointwise.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if rule == "midpoint":
        q = (np.arange(n) + 0.5) / n
    elif rule == "right":
        q = (np.arange(n) + 1.0) / n
    else:
        raise ValueError(f"unknown discretization rule: {rule!r}")
    x = density.quantile(q)
    w = np.full(n, 1.0 / n)
    return OpinionState(x, w)


# ---------------------------------------------------------------------------
# Window operators and quadratic forms.
# ---------------------------------------------------------------------------


def degree(state: OpinionState) -> np.ndarray:
    """Window weight d_i = sum of w_j over the neighbors of i (self included)."""
    x = state.opinions
    lo, hi = kernels.window_bounds(x)
    return kernels.window_sums(x, state.weights, lo, hi)


def adjacency_apply(state: OpinionState, y) -> np.ndarray:
    """(A_x y)_i: window sums of w_j y_j."""
    y = np.asarray(y, dtype=np.float64)
    x = state.opinions
    if y.shape != x.shape:
        raise ValueError("y must match the state length")
    lo, hi = kernels.window_bounds(x)
    return kernels.window_sums(x, state.weights * y, lo, hi)


def laplacian_apply(state: OpinionState, y) -> np.ndarray:
    """(L_x y)_i = d_i y_i - (A_x y)_i."""
    y = np.asarray(y, dtype=np.float64)
    return degree(state) * y - adjacency_apply(state, y)


def laplacian_residual(state: OpinionState) -> np.ndarray:
    """L_x x, the negated update direction scaled by degree.

    Verifies the identity step(x) - x = -(L_x x) / d_x elementwise to 1e-12
    (scaled by max(1, |x|_inf)) before returning.
    """
    x = state.opinions
    res = laplacian_apply(state, x)
    d = degree(state)
    moved = step(state).opinions - x
    tol = 1e-12 * max(1.0, float(np.max(np.abs(x))))
    if np.max(np.abs(moved + res / d)) > tol:
        raise RuntimeError("update direction disagrees with -L_x x / d_x")
    return res


def inner(state: OpinionState, y, z) -> float:
    """Weighted inner product sum_i w_i y_i z_i."""
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    return _seq_sum(state.weights * y * z)


def potential(state: OpinionState) -> float:
    """V(x) = 1/2 sum_{ij} w_i w_j min(1, (x_i - x_j)^2), computed in O(n).

    In-window pairs contribute through the expansion
    x_i^2 S0 - 2 x_i S1 + S2 of window prefix sums of w, w x, w x^2;
    out-of-window pairs contribute their weight product times 1.
    """
    x = state.opinions
    w = state.weights
    lo, hi = kernels.window_bounds(x)
    seg, cum_w = kernels.segmented_cumsum(x, w)
    s0 = kernels.window_sums(x, None, lo, hi, seg, cum_w)
    _, cum_wx = kernels.segmented_cumsum(x, w * x)
    s1 = kernels.window_sums(x, None, lo, hi, seg, cum_wx)
    _, cum_wxx = kernels.segmented_cumsum(x, w * x * x)
    s2 = kernels.window_sums(x, None, lo, hi, seg, cum_wxx)
    total = _seq_sum(w)
    quad = x * x * s0 - 2.0 * x * s1 + s2
    return 0.5 * _seq_sum(w * (quad + (total - s0)))


def lyapunov_decrement(state: OpinionState):
    """(dV, bound) for one step from ``state``.

    dV = V(step(x)) - V(x) and bound = -<dx, (A_x + D_x) dx> with dx the
    update displacement; asserts dV <= bound + 1e-9 * max(1, |V|). At a fixed
    point both are exactly 0.
    """
    x = state.opinions
    w = state.weights
    v0 = potential(state)
    nxt = step(state)
    dv = potential(nxt) - v0
    dx = nxt.opinions - x
    lo, hi = kernels.window_bounds(x)
    seg, cum_w = kernels.segmented_cumsum(x, w)
    s0 = kernels.window_sums(x, None, lo, hi, seg, cum_w)
    _, cum_wd = kernels.segmented_cumsum(x, w * dx)
    s1 = kernels.window_sums(x, None, lo, hi, seg, cum_wd)
    _, cum_wdd = kernels.segmented_cumsum(x, w * dx * dx)
    s2 = kernels.window_sums(x, None, lo, hi, seg, cum_wdd)
    # <dx, (A+D) dx> = 1/2 sum_{window pairs} w_i w_j (dx_i + dx_j)^2
    bound = -0.5 * _seq_sum(w * (dx * dx * s0 + 2.0 * dx * s1 + s2))
    if dv > bound + 1e-9 * max(1.0, abs(v0)):
        raise RuntimeError("Lyapunov decrement bound violated")
    return dv, bound


def psd_check(state: OpinionState, y) -> float:
    """<y, L_x y> via the operators; asserted >= -1e-12 and cross-checked
    against the pair form 1/2 sum_{window} w_i w_j (y_i - y_j)^2."""
    y = np.asarray(y, dtype=np.float64)
    x = state.opinions
    w = state.weights
    val = inner(state, y, laplacian_apply(state, y))
    lo, hi = kernels.window_bounds(x)
    seg, cum_w = kernels.segmented_cumsum(x, w)
    s0 = kernels.window_sums(x, None, lo, hi, seg, cum_w)
    _, cum_wy = kernels.segmented_cumsum(x, w * y)
    s1 = kernels.window_sums(x, None, lo, hi, seg, cum_wy)
    _, cum_wyy = kernels.segmented_cumsum(x, w * y * y)
    s2 = kernels.window_sums(x, None, lo, hi, seg, cum_wyy)
    pair_form = 0.5 * _seq_sum(w * (y * y * s0 - 2.0 * y * s1 + s2))
    scale = max(1.0, float(inner(state, y, degree(state) * y)))
    if abs(val - pair_form) > 1e-12 * scale:
        raise RuntimeError("quadratic form disagrees with its pair expansion")
    if val < -1e-12 * scale:
        raise RuntimeError("laplacian quadratic form is negative")
    return val


# ---------------------------------------------------------------------------
# Regularity and the mu-metric.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularityBounds:
    """Empirical density bounds at a fixed interval width.

    m_hat * window <= mass of any width-``window`` interval inside the span
    <= M_hat * window (open intervals for the lower bound, closed for the
    upper, so atoms are handled conservatively).
    """

    m_hat: float
    M_hat: float
    window: float

    @property
    def ratio(self) -> float:
        return self.M_hat / self.m_hat if self.m_hat > 0.0 else np.inf


def regularity_bounds(state: OpinionState, window: float) -> RegularityBounds:
    """Extremal interval masses of width ``window`` over the opinion span."""
    if window <= 0.0:
        raise ValueError("window must be positive")
    x = state.opinions
    if state.span < window:
        raise ValueError("opinion span is smaller than the probe window")
    cw = np.concatenate(([0.0], np.cumsum(state.weights)))
    left_min = x[0]
    left_max = x[-1] - window
    events = np.unique(np.concatenate((x, x - window)))
    events = np.clip(events, left_min, left_max)
    mids = 0.5 * (events[:-1] + events[1:])
    cand = np.unique(np.concatenate((events, mids)))

    def closed_mass(p):
        return cw[np.searchsorted(x, p + window, side="right")] - cw[
            np.searchsorted(x, p, side="left")
        ]

    def open_mass(p):
        return cw[np.searchsorted(x, p + window, side="left")] - cw[
            np.searchsorted(x, p, side="right")
        ]

    m_hat = float(np.min(open_mass(cand))) / window
    M_hat = float(np.max(closed_mass(cand))) / window
    return RegularityBounds(m_hat, M_hat, float(window))


@dataclass(frozen=True)
class MuMetricReport:
    """Distance from a profile to the set of >= 1-separated cluster profiles.

    ``epsilon`` is an upper bound on the true minimal mu-ball radius (the
    witness centers are greedily anchored at data positions). ``witness``
    lists (center position, assigned mass).
    """

    epsilon: float
    witness: tuple


def distance_to_F(state: OpinionState, tol: float = 1e-9) -> MuMetricReport:
    """Smallest eps (to ``tol``) with mass{|x - s| >= eps} < eps for greedy s.

    The witness profile s maps every agent to its nearest center; centers are
    chosen greedily at local mass maxima (mass within +-1/2), constrained to
    pairwise separation >= 1. Requires total mass <= 1 (the mu-metric
    compares masses to lengths).
    """
    x = state.opinions
    w = state.weights
    if state.total_weight > 1.0 + 1e-9:
        raise ValueError("mu-metric requires total mass <= 1")
    cw = np.concatenate(([0.0], np.cumsum(w)))
    local = (
        cw[np.searchsorted(x, x + 0.5, side="right")]
        - cw[np.searchsorted(x, x - 0.5, side="left")]
    )
    available = np.ones(x.size, dtype=bool)
    centers = []
    while available.any():
        cand = np.flatnonzero(available)
        best = cand[np.argmax(local[cand])]  # argmax takes the first (leftmost) max
        centers.append(x[best])
        available &= np.abs(x - x[best]) >= 1.0
    centers = np.sort(np.asarray(centers))
    if centers.size > 1:
        cuts = 0.5 * (centers[:-1] + centers[1:])
        assign = np.searchsorted(cuts, x, side="right")
    else:
        assign = np.zeros(x.size, dtype=np.int64)
    dev = np.abs(x - centers[assign])
    masses = np.bincount(assign, weights=w, minlength=centers.size)
    order = np.argsort(dev, kind="stable")
    dev_sorted = dev[order]
    suffix = np.concatenate((np.cumsum(w[order][::-1])[::-1], [0.0]))

    def tail_mass(eps):
        return suffix[np.searchsorted(dev_sorted, eps, side="left")]

    lo_eps, hi_eps = 0.0, float(dev_sorted[-1]) + 1.0
    while hi_eps - lo_eps > tol:
        mid = 0.5 * (lo_eps + hi_eps)
        if tail_mass(mid) < mid:
            hi_eps = mid
        else:
            lo_eps = mid
    witness = tuple((float(c), float(m)) for c, m in zip(centers, masses))
    return MuMetricReport(float(hi_eps), witness)


# ---------------------------------------------------------------------------
# Continuity and refinement probes.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuityReport:
    delta: float
    trials: int
    max_response: float
    bound: float
    m_hat: float
    M_hat: float


def continuity_probe(
    state: OpinionState,
    delta: float,
    trials: int = 20,
    seed: int = 0,
    window: float = 0.5,
) -> ContinuityReport:
    """Sup-norm response of one step to order-preserving perturbations <= delta.

    Perturbs the profile by iid uniform noise, re-sorts (an L-inf contraction
    toward the sorted profile, so the perturbed state stays within delta),
    applies one step to both, and asserts the response stays below
    (1 + 24 * M_hat / m_hat) * delta. Requires equal weights (the comparison
    matches quantile levels by index) and an everywhere-positive empirical
    density (m_hat > 0).
    """
    if delta <= 0.0 or delta > 0.25:
        raise ValueError("delta must lie in (0, 0.25]")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    w = state.weights
    if not np.all(w == w[0]):
        raise ValueError("continuity probe requires equal weights")
    reg = regularity_bounds(state, window)
    if reg.m_hat <= 0.0:
        raise ValueError("state is not regular: empty width-%g interval found" % window)
    bound = (1.0 + 24.0 * reg.M_hat / reg.m_hat) * delta
    rng = np.random.default_rng(seed)
    base = step(state).opinions
    worst = 0.0
    for _ in range(trials):
        eta = rng.uniform(-delta, delta, state.n)
        y = np.sort(state.opinions + eta)
        resp = float(np.max(np.abs(step(OpinionState(y, w)).opinions - base)))
        worst = max(worst, resp)
    if worst > bound:
        raise RuntimeError("one-step response exceeded the regularity bound")
    return ContinuityReport(float(delta), int(trials), worst, float(bound), reg.m_hat, reg.M_hat)


@dataclass(frozen=True)
class RefineReport:
    """Sup-norm discretization errors against the finest run after ``horizon`` steps.

    ``errors[k]`` compares ns[k] to ns[-1] by evaluating the finest state's
    empirical quantile function at the coarse quantile levels. ``applicable``
    is False when some intermediate state's span was <= 2, outside the regime
    where refinement agreement is guaranteed.
    """

    ns: tuple
    horizon: int
    errors: np.ndarray
    applicable: bool


def refine_compare(density: DensitySpec, ns, horizon: int) -> RefineReport:
    """Evolve several discretization sizes and compare against the finest."""
    ns = sorted(int(n) for n in ns)
    if len(ns) < 2:
        raise ValueError("need at least two discretization sizes")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    finals = {}
    applicable = True
    for n in ns:
        s = discretize(density, n)
        for _ in range(horizon):
            if s.span <= 2.0:
                applicable = False
            s = step(s)
        if s.span <= 2.0:
            applicable = False
        finals[n] = s.opinions
    fine = finals[ns[-1]]
    big = ns[-1]
    errors = []
    for n in ns[:-1]:
        q = (np.arange(n) + 0.5) / n
        idx = np.clip(np.ceil(q * big).astype(np.int64) - 1, 0, big - 1)
        errors.append(float(np.max(np.abs(finals[n] - fine[idx]))))
    return RefineReport(tuple(ns), int(horizon), np.asarray(errors), applicable)
