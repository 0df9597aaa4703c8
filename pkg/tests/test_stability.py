"""Analytic and empirical equilibrium stability."""

import numpy as np
import pytest

import hksim
from hksim import stability as stab


def test_pair_condition_pinned_cases():
    V = stab.Verdict
    assert stab.pair_condition(1.0, 1.0, 2.0) is V.STABLE
    assert stab.pair_condition(1.0, 1.0, 1.9) is V.UNSTABLE
    assert stab.pair_condition(153.0, 598.0, 1.6138) is V.STABLE
    assert stab.pair_condition(152.0, 349.0, 1.399) is V.UNSTABLE
    # knife edge: distance exactly at the unequal-weight bound
    assert stab.pair_condition(1.0, 2.0, 1.5) is V.BOUNDARY
    assert stab.pair_condition(2.0, 1.0, 1.5) is V.BOUNDARY
    assert stab.pair_condition(1.0, 2.0, np.nextafter(1.5, 2.0)) is V.STABLE
    assert stab.pair_condition(1.0, 2.0, np.nextafter(1.5, 0.0)) is V.UNSTABLE
    # equal weights have no boundary verdict: 2 is already stable
    assert stab.pair_condition(3.0, 3.0, 2.0) is V.STABLE
    assert stab.pair_bound(1.0, 2.0) == 1.5
    assert stab.pair_bound(5.0, 5.0) == 2.0


def test_pair_condition_validation():
    with pytest.raises(ValueError):
        stab.pair_condition(0.0, 1.0, 1.5)
    with pytest.raises(ValueError):
        stab.pair_condition(1.0, 1.0, -0.1)


def test_center_of_mass_equivalence_exact():
    # the two stability formulations agree exactly, including at the boundary
    rng = np.random.default_rng(59)
    for _ in range(10_000):
        wa, wb = rng.uniform(0.01, 5.0, 2)
        d = float(rng.uniform(0.0, 3.0))
        xa = float(rng.uniform(-2.0, 2.0))
        m = (wa * xa + wb * (xa + d)) / (wa + wb)
        com = max(abs(m - xa), abs(m - (xa + d))) > 1.0
        cond = stab.center_of_mass_test(xa, xa + d, wa, wb)
        assert com == cond
        if wa != wb:
            verdict = stab.pair_condition(wa, wb, d)
            if cond:
                assert verdict is stab.Verdict.STABLE
            else:
                assert verdict in (stab.Verdict.UNSTABLE, stab.Verdict.BOUNDARY)


def test_classify_skips_distant_pairs():
    eq = hksim.equilibrium_from_clusters([0.0, 2.5, 4.0], [1.0, 5.0, 1.0])
    v = stab.classify(eq)
    assert v.status is stab.Verdict.STABLE
    checked = {(c.i, c.j) for c in v.checks}
    assert (0, 1) not in checked  # distance 2.5 >= 2 needs no weights
    assert (1, 2) in checked  # distance 1.5 > 1 + 1/5: stable by weight ratio


def test_classify_verdict_aggregation():
    eq = hksim.equilibrium_from_clusters([0.0, 1.2], [1.0, 1.0])
    v = stab.classify(eq)
    assert v.status is stab.Verdict.UNSTABLE
    assert v.violations and not v.boundary_pairs

    eqb = hksim.equilibrium_from_clusters([0.0, 1.5], [2.0, 1.0])
    vb = stab.classify(eqb)
    assert vb.status is stab.Verdict.BOUNDARY
    assert vb.boundary_pairs and not vb.violations

    single = hksim.equilibrium_from_clusters([4.2], [3.0])
    assert stab.classify(single).status is stab.Verdict.STABLE


def test_perturbation_displacement_closed_form():
    # probe of mass d joining a cluster of weight W at distance r moves the
    # weighted profile by exactly W * (r d / (W + d))
    eq = hksim.equilibrium_from_clusters([0.0], [1.0])
    for delta in (1e-1, 1e-2, 1e-3):
        for x0 in (0.5, -0.25, 0.99):
            r = stab.perturb_and_measure(eq, x0, delta)
            expect = abs(x0) * delta / (1.0 + delta)
            assert r.displacement == pytest.approx(expect, rel=1e-9)
            assert not r.merged


def test_perturbation_merge_is_delta_independent():
    # equal half-weight clusters 1.5 apart collapse onto their midpoint once
    # any probe bridges them: displacement 2 * (1/2) * (1.5/2) = 0.75
    eq = hksim.equilibrium_from_clusters([0.0, 1.5], [0.5, 0.5])
    for delta in (1e-2, 1e-3, 1e-4):
        r = stab.perturb_and_measure(eq, 0.75, delta)
        assert r.merged
        assert r.displacement == pytest.approx(0.75, abs=1e-6)


def test_probe_outside_reach_changes_nothing():
    eq = hksim.equilibrium_from_clusters([0.0, 2.0], [1.0, 1.0])
    r = stab.perturb_and_measure(eq, 4.5, 1e-3)
    assert r.displacement == 0.0
    assert not r.merged


def test_empirical_stability_verdicts():
    stable = hksim.equilibrium_from_clusters([0.0, 2.0], [0.5, 0.5])
    rep = stab.empirical_stability(stable)
    assert rep.verdict is stab.EmpiricalVerdict.STABLE
    assert rep.sups[0] < 1e-2
    assert all(a >= b for a, b in zip(rep.sups, rep.sups[1:]))

    unstable = hksim.equilibrium_from_clusters([0.0, 1.5], [0.5, 0.5])
    rep2 = stab.empirical_stability(unstable)
    assert rep2.verdict is stab.EmpiricalVerdict.UNSTABLE
    assert rep2.sups[-1] == pytest.approx(0.75, abs=1e-6)


def test_metastable_scan_flags_two_group_phase():
    r = hksim.preset("metastable")
    assert r.final_cluster_count == 1
    assert r.phases, "long two-group phase expected"
    phase = r.phases[0]
    assert phase.end - phase.start >= 50
    assert 1.0 < phase.gap < 2.0


def test_metastable_scan_ignores_short_lived_structure():
    state = hksim.OpinionState(np.array([0.1, 0.1, 1.0, 1.9, 1.9]))
    _, traj = hksim.simulate(state, hksim.SimParams())
    assert hksim.metastable_scan(traj) == []
