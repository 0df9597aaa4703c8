"""Cluster detection and equilibrium certification."""

import numpy as np
import pytest

import hksim


def test_detect_clusters_grouping_and_positions():
    x = np.array([0.0, 0.1, 0.2, 2.0, 2.0, 5.5])
    w = np.array([1.0, 1.0, 2.0, 1.0, 3.0, 1.0])
    cs = hksim.detect_clusters(hksim.OpinionState(x, w))
    assert [c.members.tolist() for c in cs] == [[0, 1, 2], [3, 4], [5]]
    assert cs[0].weight == 4.0
    assert cs[0].position == pytest.approx((0.1 + 0.2 * 2) / 4.0)
    assert cs[1].position == 2.0
    assert [c.weight for c in cs] == [4.0, 4.0, 1.0]


def test_detect_clusters_threshold_validation():
    st = hksim.OpinionState(np.array([0.0, 1.0]))
    for bad in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            hksim.detect_clusters(st, gap_threshold=bad)
    assert len(hksim.detect_clusters(st, gap_threshold=0.99)) == 2


def test_decoupled_groups_split_at_unit_gaps():
    x = np.array([0.0, 0.5, 1.49, 2.5, 4.0])
    groups = hksim.decoupled_groups(hksim.OpinionState(x))
    # 2.5 - 1.49 >= 1 separates; 1.49 - 0.5 < 1 does not
    assert groups == [(0, 2), (3, 3), (4, 4)]


def test_certify_equilibrium_requires_convergence():
    state = hksim.OpinionState(np.linspace(0.0, 2.0, 21))
    res, _ = hksim.simulate(state, hksim.SimParams(max_steps=1))
    with pytest.raises(ValueError):
        hksim.certify_equilibrium(res)
    full = hksim.run_to_fixed_point(state)
    eq = hksim.certify_equilibrium(full)
    assert len(eq.clusters) == 1
    assert eq.positions[0] == pytest.approx(1.0, abs=1e-12)
    assert eq.weights[0] == 21.0


def test_equilibrium_separation_enforced():
    with pytest.raises(ValueError):
        hksim.equilibrium_from_clusters([0.0, 0.8], [1.0, 1.0])
    eq = hksim.equilibrium_from_clusters([0.0, 1.0], [1.0, 2.0])
    assert eq.positions.tolist() == [0.0, 1.0]
    assert eq.state.weights.tolist() == [1.0, 2.0]


def test_convergence_time_from_trajectory():
    state = hksim.OpinionState(np.array([0.1, 0.1, 1.0, 1.9, 1.9]))
    _, traj = hksim.simulate(state, hksim.SimParams())
    assert hksim.convergence_time(traj, 1e-12) == 3
