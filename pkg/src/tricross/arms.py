"""Multi-arm annulus events and the coarse-grained six-arm event.

An arm count is the number of distinct clusters of one color that touch both
the inner and the outer boundary of the annulus; separation in cyclic order
is not enforced, so this is the distinct-crossing-cluster surrogate for arm
events.  Closed arms use circle adjacency in site mode and the dual lattice
in bond mode.  Half-plane events keep only vertices (or faces) with
nonnegative vertical coordinate.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .estimators import Estimate, _ranges
from .geometry import SITE, LatticeGraph
from .randomness import uniforms

WHOLE_PLANE = "whole-plane"
HALF_PLANE = "half-plane"


@dataclass(frozen=True)
class ArmSpec:
    """Annulus between [-r,r]^2 and [-R,R]^2 with required arm counts."""

    r: int
    R: int
    open_arms: int
    closed_arms: int
    geometry: str = WHOLE_PLANE

    def __post_init__(self):
        if not 1 <= self.r < self.R:
            raise ValueError("radii must satisfy 1 <= r < R")
        if self.open_arms < 0 or self.closed_arms < 0:
            raise ValueError("arm counts must be nonnegative")
        if self.open_arms + self.closed_arms < 1:
            raise ValueError("at least one arm is required")
        if self.geometry not in (WHOLE_PLANE, HALF_PLANE):
            raise ValueError(f"unknown geometry {self.geometry!r}")


class _ArmCounter:
    """Clusters of an annulus region touching both boundary rings."""

    def __init__(self, n_nodes, eu, ev, edge_vars, node_vars, inner, outer,
                 invert, gated_nodes):
        self.n_nodes = n_nodes
        self.eu = eu
        self.ev = ev
        self.edge_vars = edge_vars  # None in site mode
        self.node_vars = node_vars  # None in bond-dual mode
        self.inner = inner
        self.outer = outer
        self.invert = invert
        self.gated = gated_nodes  # node states gate activity (site mode)

    def count(self, states) -> int:
        s = ~states if self.invert else states
        if self.gated:
            act = s[self.node_vars]
            inner = self.inner & act
            outer = self.outer & act
            emask = act[self.eu] & act[self.ev]
        else:
            inner, outer = self.inner, self.outer
            emask = s[self.edge_vars]
        if not inner.any() or not outer.any():
            return 0
        keep = np.flatnonzero(emask)
        if keep.size == 0:
            return int(np.count_nonzero(inner & outer))
        graph = coo_matrix(
            (np.ones(keep.size, dtype=np.int8),
             (self.eu[keep], self.ev[keep])),
            shape=(self.n_nodes, self.n_nodes),
        )
        _, labels = connected_components(graph, directed=False)
        return int(np.intersect1d(labels[inner], labels[outer]).size)


def _check_window(graph: LatticeGraph, R: int, half: bool) -> None:
    jlo = 0 if half else -R
    if not (graph.i_min <= -R and graph.i_max >= R
            and graph.j_min <= jlo and graph.j_max >= R):
        raise ValueError(
            f"annulus of outer radius {R} does not fit the window {graph!r}"
        )


def _in_rect(i, j, x0, x1, y0, y1):
    return x0 <= i <= x1 and y0 <= j <= y1


@lru_cache(maxsize=None)
def _primal_counter(graph: LatticeGraph, box, R: int, half: bool,
                    relation: str, invert: bool) -> _ArmCounter:
    """box = (x0, x1, y0, y1) inner rectangle in lattice units."""
    x0, x1, y0, y1 = box
    jlo = 0 if half else -R
    node_vars, inner, outer = [], [], []
    pos = {}
    for j in range(jlo, R + 1):
        for i in range(-R, R + 1):
            if x0 < i < x1 and y0 < j < y1:
                continue  # strictly inside the inner rectangle
            if not graph.in_window(i, j):
                continue
            vid = graph.vertex_id(i, j)
            pos[(i, j)] = len(node_vars)
            node_vars.append(vid)
            inner.append(_in_rect(i, j, x0, x1, y0, y1))
            outer.append(max(abs(i), abs(j)) == R)
    offs = (graph.mesh.bullet_offsets() if relation == "bullet"
            else graph.mesh.circle_offsets())
    offs = tuple(d for d in offs if d > (-d[0], -d[1]))
    eu, ev = [], []
    for (i, j), d in pos.items():
        for di, dj in offs:
            e = pos.get((i + di, j + dj))
            if e is not None:
                eu.append(d)
                ev.append(e)
    return _ArmCounter(
        n_nodes=len(node_vars),
        eu=np.asarray(eu, np.int64), ev=np.asarray(ev, np.int64),
        edge_vars=None,
        node_vars=np.asarray(node_vars, np.int64),
        inner=np.asarray(inner, bool), outer=np.asarray(outer, bool),
        invert=invert, gated_nodes=True,
    )


@lru_cache(maxsize=None)
def _bond_open_counter(graph: LatticeGraph, box, R: int, half: bool) -> _ArmCounter:
    x0, x1, y0, y1 = box
    jlo = 0 if half else -R
    pos = {}
    inner, outer = [], []
    for j in range(jlo, R + 1):
        for i in range(-R, R + 1):
            if x0 < i < x1 and y0 < j < y1:
                continue
            pos[(i, j)] = len(pos)
            inner.append(_in_rect(i, j, x0, x1, y0, y1))
            outer.append(max(abs(i), abs(j)) == R)
    eu, ev, evar = [], [], []
    for (i, j), d in pos.items():
        for di, dj in ((1, 0), (0, 1)):
            e = pos.get((i + di, j + dj))
            if e is not None:
                eu.append(d)
                ev.append(e)
                evar.append(graph.edge_id(graph.vertex_id(i, j),
                                          graph.vertex_id(i + di, j + dj)))
    counter = _ArmCounter(
        n_nodes=len(pos),
        eu=np.asarray(eu, np.int64), ev=np.asarray(ev, np.int64),
        edge_vars=np.asarray(evar, np.int64), node_vars=None,
        inner=np.asarray(inner, bool), outer=np.asarray(outer, bool),
        invert=False, gated_nodes=False,
    )
    return counter


@lru_cache(maxsize=None)
def _bond_closed_counter(graph: LatticeGraph, box, R: int, half: bool) -> _ArmCounter:
    """Dual-lattice arm counter; face (i,j) has center (i+1/2, j+1/2)."""
    x0, x1, y0, y1 = box
    jlo = 0 if half else -R
    pos = {}
    inner, outer = [], []
    for j in range(jlo, R):
        for i in range(-R, R):
            # face (i,j) spans [i,i+1] x [j,j+1]
            if x0 < i and i + 1 < x1 and y0 < j and j + 1 < y1:
                continue  # strictly inside the inner rectangle
            pos[(i, j)] = len(pos)
            inner.append(x0 <= i and i + 1 <= x1 and y0 <= j and j + 1 <= y1)
            outer.append(i == -R or i + 1 == R or j + 1 == R or j == -R)
    eu, ev, evar = [], [], []
    for (i, j), d in pos.items():
        for di, dj in ((1, 0), (0, 1)):
            e = pos.get((i + di, j + dj))
            if e is not None:
                eu.append(d)
                ev.append(e)
                evar.append(graph.crossed_bond((i, j), (i + di, j + dj)))
    return _ArmCounter(
        n_nodes=len(pos),
        eu=np.asarray(eu, np.int64), ev=np.asarray(ev, np.int64),
        edge_vars=np.asarray(evar, np.int64), node_vars=None,
        inner=np.asarray(inner, bool), outer=np.asarray(outer, bool),
        invert=True, gated_nodes=False,
    )


def _counters(graph: LatticeGraph, box, R: int, half: bool):
    """(open counter, closed counter) for one inner rectangle."""
    if graph.mesh.mode == SITE:
        return (
            _primal_counter(graph, box, R, half, "bullet", False),
            _primal_counter(graph, box, R, half, "circle", True),
        )
    return (
        _bond_open_counter(graph, box, R, half),
        _bond_closed_counter(graph, box, R, half),
    )


def arm_event(config, spec: ArmSpec) -> bool:
    """At least the required open and closed arms across the annulus."""
    graph = config.graph
    half = spec.geometry == HALF_PLANE
    _check_window(graph, spec.R, half)
    box = (-spec.r, spec.r, 0 if half else -spec.r, spec.r)
    open_counter, closed_counter = _counters(graph, box, spec.R, half)
    if spec.open_arms and open_counter.count(config.states) < spec.open_arms:
        return False
    if spec.closed_arms and closed_counter.count(config.states) < spec.closed_arms:
        return False
    return True


def coarse_six_arm(config, r: int, R: int, c: float) -> bool:
    """Some r-grid square inside [-cR, cR]^2 sends out 3 open and 3 closed arms."""
    if R % r != 0:
        raise ValueError("r must divide R")
    if not 0 < c < 1:
        raise ValueError("c must be in (0,1)")
    graph = config.graph
    _check_window(graph, R, half=False)
    bound = c * R
    for a in range(-R, R, r):
        for b in range(-R, R, r):
            if not (-bound <= a and a + r <= bound
                    and -bound <= b and b + r <= bound):
                continue
            box = (a, a + r, b, b + r)
            open_counter, closed_counter = _counters(graph, box, R, half=False)
            if (open_counter.count(config.states) >= 3
                    and closed_counter.count(config.states) >= 3):
                return True
    return False


def _scan_counts(graph: LatticeGraph, specs, p: float, seed: int,
                 start: int, stop: int) -> np.ndarray:
    half = specs[0].geometry == HALF_PLANE
    pairs = []
    for spec in specs:
        box = (-spec.r, spec.r, 0 if half else -spec.r, spec.r)
        pairs.append((spec, *_counters(graph, box, spec.R, half)))
    counts = np.zeros(len(specs), dtype=np.int64)
    n_states = graph.n_states()
    for t in range(start, stop):
        states = uniforms(seed, t, n_states) < p
        for idx, (spec, oc, cc) in enumerate(pairs):
            if spec.open_arms and oc.count(states) < spec.open_arms:
                continue
            if spec.closed_arms and cc.count(states) < spec.closed_arms:
                continue
            counts[idx] += 1
    return counts


def arm_probability_scan(graph: LatticeGraph, radii, n: int, p,
                         open_arms: int, closed_arms: int,
                         geometry: str = WHOLE_PLANE, seed: int = 0,
                         workers: int = 1):
    """P-hat of the (open_arms, closed_arms) event at each (r, R) pair.

    All pairs are evaluated on the same replicates; returns a list of
    (ratio, r, R, Estimate) rows sorted by ratio, duplicates pooled by
    exponent_fit downstream.
    """
    specs = tuple(
        ArmSpec(r, R, open_arms, closed_arms, geometry) for r, R in radii
    )
    half = geometry == HALF_PLANE
    for spec in specs:
        _check_window(graph, spec.R, half)
    p = float(p)
    if workers <= 1:
        counts = _scan_counts(graph, specs, p, seed, 0, n)
    else:
        chunks = _ranges(n, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = sum(pool.map(
                _scan_counts,
                [graph] * len(chunks), [specs] * len(chunks),
                [p] * len(chunks), [seed] * len(chunks),
                [a for a, _ in chunks], [b for _, b in chunks],
            ))
    rows = []
    for spec, hits in zip(specs, counts):
        est = Estimate.from_counts(
            int(hits), n, seed,
            f"arms(i={spec.open_arms},j={spec.closed_arms},r={spec.r},"
            f"R={spec.R},{spec.geometry})")
        rows.append((spec.r / spec.R, spec.r, spec.R, est))
    rows.sort(key=lambda row: (row[0], row[1]))
    return rows


def five_arm_probability_scan(graph: LatticeGraph, radii, n: int, p,
                              seed: int = 0, workers: int = 1,
                              variant_4_1: bool = False):
    """Five-arm (3 open + 2 closed, or 4+1) probabilities across radii."""
    i, j = (4, 1) if variant_4_1 else (3, 2)
    return arm_probability_scan(graph, radii, n, p, i, j, WHOLE_PLANE,
                                seed, workers)
