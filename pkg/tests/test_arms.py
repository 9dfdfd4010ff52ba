"""Annulus arm counting, the coarse six-arm event, and probability scans."""

import numpy as np
import pytest

from tricross.arms import (
    ArmSpec,
    arm_event,
    arm_probability_scan,
    coarse_six_arm,
    five_arm_probability_scan,
)
from tricross.geometry import LatticeGraph, MeshSpec
from tricross.randomness import Configuration, sample


def _graph(R, mode="site", half=False):
    return LatticeGraph(MeshSpec(2, mode), -R, R, 0 if half else -R, R)


def _const(graph, value):
    return Configuration(
        graph, np.full(graph.n_states(), value, dtype=bool), 0.5, 0, 0
    )


def test_spec_validation():
    with pytest.raises(ValueError):
        ArmSpec(4, 4, 1, 0)
    with pytest.raises(ValueError):
        ArmSpec(0, 4, 1, 0)
    with pytest.raises(ValueError):
        ArmSpec(2, 4, 0, 0)
    with pytest.raises(ValueError):
        ArmSpec(2, 4, -1, 2)
    with pytest.raises(ValueError):
        ArmSpec(2, 4, 1, 1, geometry="diagonal-plane")


def test_window_checked():
    g = _graph(4)
    with pytest.raises(ValueError, match="does not fit"):
        arm_event(_const(g, True), ArmSpec(2, 8, 1, 0))


@pytest.mark.parametrize("mode", ["site", "bond"])
def test_trivial_states(mode):
    g = _graph(8, mode)
    assert arm_event(_const(g, True), ArmSpec(2, 8, 1, 0))
    assert not arm_event(_const(g, True), ArmSpec(2, 8, 1, 1))
    assert not arm_event(_const(g, True), ArmSpec(2, 8, 0, 1))
    assert arm_event(_const(g, False), ArmSpec(2, 8, 0, 1))
    assert not arm_event(_const(g, False), ArmSpec(2, 8, 1, 0))


@pytest.mark.parametrize("mode", ["site", "bond"])
def test_monotone_in_outer_radius(mode):
    # longer arms contain shorter ones
    g = _graph(12, mode)
    for t in range(120):
        config = sample(g, 0.5, seed=3, replicate=t)
        for i, j in ((1, 0), (1, 1), (2, 1)):
            if arm_event(config, ArmSpec(2, 12, i, j)):
                assert arm_event(config, ArmSpec(2, 8, i, j))
                assert arm_event(config, ArmSpec(2, 4, i, j))


@pytest.mark.parametrize("mode", ["site", "bond"])
def test_monotone_in_required_counts(mode):
    g = _graph(8, mode)
    for t in range(150):
        config = sample(g, 0.5, seed=5, replicate=t)
        for i, j in ((2, 1), (1, 2), (2, 2)):
            if arm_event(config, ArmSpec(2, 8, i, j)):
                assert arm_event(config, ArmSpec(2, 8, i - 1, j))
                assert arm_event(config, ArmSpec(2, 8, i, j - 1))


def test_half_plane_stays_in_upper_half():
    # a config whose lower half is all open still needs upper-half arms
    g = _graph(6, "site")
    states = np.zeros(g.n_states(), dtype=bool)
    for vid in range(g.n_vertices):
        i, j = g.vertex_at(vid)
        if j < 0:
            states[vid] = True
    config = Configuration(g, states, 0.5, 0, 0)
    assert arm_event(config, ArmSpec(2, 6, 1, 0))  # whole plane sees them
    # a half-plane window never sees the lower-half spokes
    gh = _graph(6, "site", half=True)
    upper = np.zeros(gh.n_states(), dtype=bool)
    assert not arm_event(Configuration(gh, upper, 0.5, 0, 0),
                         ArmSpec(2, 6, 1, 0, geometry="half-plane"))
    assert arm_event(Configuration(gh, ~upper, 0.5, 0, 0),
                     ArmSpec(2, 6, 1, 0, geometry="half-plane"))


def test_constructed_six_arm_witness():
    # three open spokes split the closed complement into three sectors, giving
    # three open and three closed crossing clusters from the square [0,2]^2
    R, r = 4, 2
    g = _graph(R, "site")
    states = np.zeros(g.n_states(), dtype=bool)
    spokes = (
        [(i, 1) for i in range(2, R + 1)]     # east
        + [(i, 1) for i in range(-R, 1)]      # west, enters the box at (0,1)
        + [(1, j) for j in range(2, R + 1)]   # north
    )
    for i, j in spokes:
        states[g.vertex_id(i, j)] = True
    config = Configuration(g, states, 0.5, 0, 0)
    assert coarse_six_arm(config, r, R, c=0.9)
    assert not coarse_six_arm(_const(g, True), r, R, c=0.9)
    assert not coarse_six_arm(_const(g, False), r, R, c=0.9)


def test_coarse_six_arm_validation():
    g = _graph(8, "site")
    with pytest.raises(ValueError, match="divide"):
        coarse_six_arm(_const(g, True), 3, 8, 0.5)
    with pytest.raises(ValueError):
        coarse_six_arm(_const(g, True), 2, 8, 1.5)


def test_six_arm_rarer_than_five_arm():
    # six-arm from a square implies five arms from it: P-hat must not exceed
    g = _graph(16, "bond")
    n = 400
    six = five = 0
    for t in range(n):
        config = sample(g, 0.5, seed=7, replicate=t)
        if coarse_six_arm(config, 2, 16, 0.5):
            six += 1
        if arm_event(config, ArmSpec(2, 16, 3, 2)):
            five += 1
    assert six <= five


def test_color_exchange_bond_duality():
    # at p = 1/2 bond, exchanging open and closed arm counts is a duality
    # symmetry up to the half-step offset of the dual face rings; tested at a
    # scale where that offset sits inside the confidence intervals
    g = _graph(16, "bond")
    rows_a = arm_probability_scan(g, [(4, 16)], 500, 0.5, 2, 1, seed=11)
    rows_b = arm_probability_scan(g, [(4, 16)], 500, 0.5, 1, 2, seed=11)
    (_, _, _, ea), (_, _, _, eb) = rows_a[0], rows_b[0]
    assert ea.ci_low <= eb.ci_high and eb.ci_low <= ea.ci_high


def test_scan_shares_replicates_and_sorts():
    g = _graph(8, "bond")
    rows = arm_probability_scan(g, [(4, 8), (2, 8)], 500, 0.5, 1, 0, seed=1)
    ratios = [row[0] for row in rows]
    assert ratios == sorted(ratios)
    # inner box monotonicity: a crossing from the larger box is easier
    assert rows[0][3].p_hat <= rows[1][3].p_hat


def test_scan_worker_invariance():
    g = _graph(8, "bond")
    a = arm_probability_scan(g, [(2, 8), (4, 8)], 300, 0.5, 2, 1, seed=13,
                             workers=1)
    b = arm_probability_scan(g, [(2, 8), (4, 8)], 300, 0.5, 2, 1, seed=13,
                             workers=3)
    assert [(r, e.successes) for r, _, _, e in a] == \
        [(r, e.successes) for r, _, _, e in b]


def test_five_arm_scan_variants():
    g = _graph(8, "bond")
    rows = five_arm_probability_scan(g, [(2, 8), (4, 8)], 200, 0.5, seed=2)
    assert len(rows) == 2
    rows41 = five_arm_probability_scan(g, [(2, 8)], 200, 0.5, seed=2,
                                       variant_4_1=True)
    # (4,1) asks for strictly more open clusters than (3,2): rarer or equal
    rows32 = five_arm_probability_scan(g, [(2, 8)], 200, 0.5, seed=2)
    assert rows41[0][3].successes <= rows32[0][3].successes
