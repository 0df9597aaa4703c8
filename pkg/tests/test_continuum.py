"""Density handling, interaction operators, potential, and measure metrics."""

import numpy as np
import pytest

import hksim
from hksim import continuum as cont

from conftest import random_state


def brute_potential(state):
    x, w = state.opinions, state.weights
    d = x[None, :] - x[:, None]
    return 0.5 * float(np.sum(w[:, None] * w[None, :] * np.minimum(1.0, d * d)))


def brute_adjacency(state, y):
    x, w = state.opinions, state.weights
    mask = np.abs(x[None, :] - x[:, None]) < 1.0
    return (mask * (w * y)[None, :]).sum(axis=1)


# ---------------------------------------------------------------------------
# densities and discretization
# ---------------------------------------------------------------------------


def test_density_validation():
    with pytest.raises(ValueError):
        cont.DensitySpec.from_pieces([])
    with pytest.raises(ValueError):
        cont.DensitySpec.from_pieces([(0.0, 1.0, 0.0)])  # zero total mass
    with pytest.raises(ValueError):
        cont.DensitySpec.from_pieces([(0.0, 1.0, 1.0), (1.5, 2.0, 1.0)])  # gap
    with pytest.raises(ValueError):
        cont.DensitySpec.from_pieces([(0.5, 1.0, 1.0)])  # support must start at 0
    d = cont.DensitySpec.from_pieces([(0.0, 1.0, 2.0), (1.0, 3.0, 1.0)])
    assert d.cdf(d.edges[-1]) == 1.0


def test_quantile_inverts_cdf():
    d = cont.DensitySpec.from_pieces([(0.0, 1.0, 3.0), (1.0, 2.0, 0.0), (2.0, 4.0, 1.0)])
    rng = np.random.default_rng(5)
    q = rng.uniform(0.0, 1.0, 500)
    x = d.quantile(q)
    np.testing.assert_allclose(d.cdf(x), q, atol=1e-12)
    # mass 0.6 sits below 1.0; the zero piece maps the quantile to its left edge
    assert d.quantile(0.6) == pytest.approx(1.0)
    assert d.quantile(0.0) == 0.0
    assert d.quantile(1.0) == pytest.approx(4.0)


def test_discretize_uniform_midpoints():
    st = cont.discretize(cont.DensitySpec.uniform(10.0), 5)
    np.testing.assert_allclose(st.opinions, [1.0, 3.0, 5.0, 7.0, 9.0], atol=1e-12)
    assert st.weights.tolist() == [0.2] * 5
    st2 = cont.discretize(cont.DensitySpec.uniform(10.0), 5, rule="right")
    np.testing.assert_allclose(st2.opinions, [2.0, 4.0, 6.0, 8.0, 10.0], atol=1e-12)
    with pytest.raises(ValueError):
        cont.discretize(cont.DensitySpec.uniform(1.0), 5, rule="left")


def test_discretize_two_level_split_proportions():
    # mass ratio 1:2 across the two bands shows up in agent counts
    d = cont.DensitySpec.from_pieces([(0.0, 2.5, 1.0), (2.5, 3.0, 10.0)])
    st = cont.discretize(d, 751)
    below = int(np.sum(st.opinions < 2.5))
    assert abs(below - 251) <= 1


def test_inverse_cdf_sampling_tracks_density():
    d = cont.DensitySpec.uniform(10.0)
    rng = np.random.default_rng(11)
    x = d.quantile(rng.random(10_000))
    hist, _ = np.histogram(x, bins=10, range=(0.0, 10.0))
    np.testing.assert_allclose(hist / 10_000.0, 0.1, atol=0.012)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def test_degree_and_adjacency_small_case():
    st = cont.discretize(cont.DensitySpec.uniform(2.0), 3)
    np.testing.assert_allclose(st.opinions, [1 / 3, 1.0, 5 / 3], atol=1e-15)
    np.testing.assert_allclose(cont.degree(st), [2 / 3, 1.0, 2 / 3], atol=1e-15)
    lx = cont.laplacian_apply(st, st.opinions)
    np.testing.assert_allclose(lx, [-2 / 9, 0.0, 2 / 9], atol=1e-15)


def test_adjacency_matches_brute_force():
    rng = np.random.default_rng(13)
    for _ in range(100):
        st = random_state(rng, max_n=60, span=4.0)
        y = rng.normal(size=st.n)
        np.testing.assert_allclose(
            cont.adjacency_apply(st, y), brute_adjacency(st, y), rtol=1e-12, atol=1e-12
        )


def test_operator_symmetry_and_psd():
    rng = np.random.default_rng(17)
    for _ in range(200):
        st = random_state(rng, max_n=80, span=5.0)
        y = rng.normal(size=st.n)
        z = rng.normal(size=st.n)
        ay = cont.adjacency_apply(st, y)
        az = cont.adjacency_apply(st, z)
        s1 = cont.inner(st, y, az)
        s2 = cont.inner(st, z, ay)
        scale = max(1.0, abs(s1))
        assert abs(s1 - s2) <= 1e-12 * scale
        cont.psd_check(st, y)  # raises if <y,(D-A)y> < -tol or forms disagree


def test_update_direction_identity():
    rng = np.random.default_rng(19)
    for _ in range(200):
        st = random_state(rng, max_n=80, span=5.0)
        cont.laplacian_residual(st)  # raises if step(x)-x != -Lx/d to 1e-12


# ---------------------------------------------------------------------------
# potential
# ---------------------------------------------------------------------------


def test_potential_pinned_values():
    half = np.array([0.5, 0.5])
    far = hksim.OpinionState(np.array([0.0, 2.0]), half)
    assert cont.potential(far) == pytest.approx(0.25, abs=1e-15)
    near = hksim.OpinionState(np.array([0.0, 0.5]), half)
    assert cont.potential(near) == pytest.approx(1 / 16, abs=1e-15)
    single = hksim.OpinionState(np.array([1.3]), np.array([2.0]))
    assert cont.potential(single) == 0.0


def test_potential_matches_quadratic_oracle():
    rng = np.random.default_rng(23)
    for _ in range(150):
        st = random_state(rng, max_n=70, span=6.0)
        v = cont.potential(st)
        ref = brute_potential(st)
        assert abs(v - ref) <= 1e-12 * max(1.0, abs(ref))


def test_lyapunov_decrement_along_trajectories():
    rng = np.random.default_rng(29)
    for _ in range(100):
        st = random_state(rng, max_n=50, span=5.0)
        for _ in range(50):
            dv, bound = cont.lyapunov_decrement(st)  # raises if dv > bound + tol
            assert dv <= 1e-12
            assert bound <= 1e-12
            st = hksim.step(st)
            if hksim.is_fixed_point(st):
                break


def test_potential_constant_at_fixed_points():
    st = hksim.OpinionState(np.array([0.0, 0.0, 1.5, 1.5]), np.array([1.0, 2.0, 1.0, 1.0]))
    dv, bound = cont.lyapunov_decrement(st)
    assert dv == 0.0
    assert bound == 0.0


# ---------------------------------------------------------------------------
# measure metric and regularity
# ---------------------------------------------------------------------------


def test_distance_to_fixed_set_pinned():
    halves = hksim.OpinionState(np.array([0.0, 0.5]), np.array([0.5, 0.5]))
    rep = cont.distance_to_F(halves)
    assert rep.epsilon == pytest.approx(0.5, abs=1e-8)
    assert rep.witness[0][0] == 0.0

    eq = hksim.OpinionState(np.array([0.0, 1.5]), np.array([0.5, 0.5]))
    assert cont.distance_to_F(eq).epsilon <= 1e-8

    # weight mass must be normalized for a measure-style distance
    with pytest.raises(ValueError):
        cont.distance_to_F(hksim.OpinionState(np.array([0.0]), np.array([2.0])))


def test_distance_to_fixed_set_decreases_along_run():
    st = cont.discretize(cont.DensitySpec.uniform(2.0), 101)
    first = cont.distance_to_F(st).epsilon
    res = hksim.run_to_fixed_point(st)
    last = cont.distance_to_F(res.final_state).epsilon
    assert last <= 1e-8
    assert first > 0.1


def test_regularity_bounds_uniform_density():
    st = cont.discretize(cont.DensitySpec.uniform(6.0), 600)
    rb = cont.regularity_bounds(st, 0.5)
    # windows of width 0.5 hold about 1/12 of the mass on each side
    assert rb.m_hat == pytest.approx(1 / 6, abs=0.01)
    assert rb.M_hat == pytest.approx(1 / 6, abs=0.01)
    assert rb.m_hat <= rb.M_hat
    with pytest.raises(ValueError):
        cont.regularity_bounds(st, 0.0)
    with pytest.raises(ValueError):
        cont.regularity_bounds(st, 7.0)  # wider than the span


def test_continuity_probe_within_bound():
    st = cont.discretize(cont.DensitySpec.uniform(6.0), 400)
    rep = cont.continuity_probe(st, 0.05, trials=15, seed=3)
    assert rep.max_response <= rep.bound
    assert rep.bound == pytest.approx((1 + 24 * rep.M_hat / rep.m_hat) * 0.05)
    with pytest.raises(ValueError):
        cont.continuity_probe(st, 0.3)  # delta too large for the regime
    uneven = hksim.OpinionState(np.array([0.0, 0.4]), np.array([0.3, 0.7]))
    with pytest.raises(ValueError):
        cont.continuity_probe(uneven, 0.05)


def test_refine_compare_narrow_density_flagged():
    rep = cont.refine_compare(cont.DensitySpec.uniform(1.5), (50, 500), 5)
    assert not rep.applicable  # span never exceeds two units
    rep2 = cont.refine_compare(cont.DensitySpec.uniform(6.0), (50, 200, 800), 5)
    assert rep2.applicable
    assert len(rep2.errors) == 2
    with pytest.raises(ValueError):
        cont.refine_compare(cont.DensitySpec.uniform(6.0), (100,), 5)
    with pytest.raises(ValueError):
        cont.refine_compare(cont.DensitySpec.uniform(6.0), (100, 200), 0)
