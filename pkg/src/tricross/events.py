"""Path-event detection inside percolation configurations.

A crossing is a lattice path v0 ... vn whose inner vertices v1 ... v(n-1) are
strictly inside the triangle and correctly colored (open for bullet paths,
closed for circle paths), whose endpoints v0, vn are not interior, and whose
first and last edges meet the source and target arcs.  Paths with n = 1, a
single edge between two non-interior vertices meeting both arcs, are included.
In site mode the states of v0 and vn are irrelevant; in bond mode every edge
of the path, including the first and last, carries the path's color.

Two-arm events anchor the open arm at the lattice vertex directly above Z and
the closed arm at the vertex directly above Zbar; only the vertical entry edge
is admitted for the closed arm, and the closed arm is trivially satisfied when
Zbar coincides with corner A (which lies on the closure of the target arc CA).
These conventions, including the degenerate single-edge paths, are the unique
variant found to satisfy in site mode, configuration by configuration on
exhaustively enumerated small meshes, both

    separating(Z) and not separating(Zbar)  ==  two_arm(Zbar, Z)
    separating(Z)  xor  dual_blocking(Z)

for every lattice Z on AB; the test suite re-verifies both by enumeration.
In bond mode closed paths run on the dual lattice: one dual vertex per face
center, a dual edge closed exactly when the bond it crosses is closed.  The
dual discretization near the boundary is coarser than the primal one, so the
two identities above are site-mode facts; bond-mode closed-path queries are
answered on the dual lattice as a documented convention without a matching
exact complementation at finite l.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .geometry import (
    BOND,
    SITE,
    Arc,
    LatticeGraph,
    Point,
    TriangleDomain,
    arc_meets_segment,
    point_on_segment,
)

OPEN_BULLET = "open-bullet"
CLOSED_CIRCLE = "closed-circle"

_EMPTY = np.empty(0, dtype=np.int64)
_EMPTY.setflags(write=False)


def _check_on_ab(domain: TriangleDomain, z: Point, name: str) -> None:
    if not point_on_segment(domain.a, domain.b, z):
        raise ValueError(f"{name} must lie on the closed segment AB")


@dataclass(frozen=True)
class CrossingQuery:
    """Arc-to-arc crossing in a stated color."""

    domain: TriangleDomain
    source: str = "AX"
    target: str = "BC"
    color: str = OPEN_BULLET

    def __post_init__(self):
        names = self.domain.arcs().keys()
        if self.source not in names or self.target not in names:
            raise ValueError(f"arcs must be among {sorted(names)}")
        if self.source == self.target:
            raise ValueError("source and target arcs must differ")
        if self.color not in (OPEN_BULLET, CLOSED_CIRCLE):
            raise ValueError(f"unknown path color {self.color!r}")


@dataclass(frozen=True)
class SeparatingQuery:
    """Open crossing from BC to the sub-arc [A, Z] of AB."""

    domain: TriangleDomain
    z: Point

    def __post_init__(self):
        _check_on_ab(self.domain, self.z, "Z")


@dataclass(frozen=True)
class BlockingQuery:
    """Closed crossing from the sub-arc (Z, B] to CA."""

    domain: TriangleDomain
    z: Point

    def __post_init__(self):
        _check_on_ab(self.domain, self.z, "Z")


@dataclass(frozen=True)
class TwoArmQuery:
    """Open arm from Z to BC plus closed arm from Zbar to CA."""

    domain: TriangleDomain
    zbar: Point
    z: Point

    def __post_init__(self):
        _check_on_ab(self.domain, self.zbar, "Zbar")
        _check_on_ab(self.domain, self.z, "Z")
        if not (self.zbar[0] < self.z[0] and self.zbar[1] == self.z[1]):
            raise ValueError("Zbar must lie strictly left of Z on AB")


# --- compiled geometry, cached per (graph, triangle) ---


def _tri(domain: TriangleDomain):
    return (domain.a, domain.b, domain.c)


def _as_domain(tri) -> TriangleDomain:
    return TriangleDomain(tri[0], tri[1], tri[2], tri[0])


def _forward(offsets):
    return tuple(d for d in offsets if d > (-d[0], -d[1]))


@lru_cache(maxsize=None)
def _interior_flags(graph: LatticeGraph, tri) -> np.ndarray:
    dom = _as_domain(tri)
    x0, x1, y0, y1 = dom.bounding_box()
    l = graph.mesh.l
    flags = np.zeros(graph.n_vertices, dtype=bool)
    for vid in range(graph.n_vertices):
        i, j = graph.vertex_at(vid)
        if x0 * l < i < x1 * l and y0 * l < j < y1 * l:
            flags[vid] = dom.contains_interior(graph.point_of(i, j))
    flags.setflags(write=False)
    return flags


@lru_cache(maxsize=None)
def _site_skeleton(graph: LatticeGraph, tri, relation: str):
    """Interior vertex ids plus interior-interior edges of one relation."""
    flags = _interior_flags(graph, tri)
    ids = np.flatnonzero(flags).astype(np.int64)
    pos = np.full(graph.n_vertices, -1, dtype=np.int64)
    pos[ids] = np.arange(len(ids))
    offs = _forward(
        graph.mesh.bullet_offsets() if relation == "bullet"
        else graph.mesh.circle_offsets()
    )
    eu, ev = [], []
    for d, vid in enumerate(ids):
        i, j = graph.vertex_at(int(vid))
        for di, dj in offs:
            if graph.in_window(i + di, j + dj):
                w = graph.vertex_id(i + di, j + dj)
                if flags[w]:
                    eu.append(d)
                    ev.append(pos[w])
    return ids, pos, np.asarray(eu, np.int64), np.asarray(ev, np.int64)


def _offsets_for(graph, relation):
    return (graph.mesh.bullet_offsets() if relation == "bullet"
            else graph.mesh.circle_offsets())


@lru_cache(maxsize=None)
def _site_attach(graph, tri, arc: Arc, relation: str, vertical_only: bool):
    """Per interior vertex: has an edge to a non-interior vertex meeting arc."""
    flags = _interior_flags(graph, tri)
    ids, _, _, _ = _site_skeleton(graph, tri, relation)
    out = np.zeros(len(ids), dtype=bool)
    offs = _offsets_for(graph, relation)
    for d, vid in enumerate(ids):
        i, j = graph.vertex_at(int(vid))
        p = graph.point_of(i, j)
        for di, dj in offs:
            if vertical_only and di != 0:
                continue
            if not graph.in_window(i + di, j + dj):
                continue
            w = graph.vertex_id(i + di, j + dj)
            if flags[w]:
                continue
            if arc_meets_segment(arc, p, graph.point_of(i + di, j + dj)):
                out[d] = True
                break
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _site_degenerate(graph, tri, src: Arc, tgt: Arc, relation: str,
                     src_vertical_only: bool) -> bool:
    """Is there a single edge between non-interior vertices meeting both arcs?"""
    flags = _interior_flags(graph, tri)
    offs = _forward(_offsets_for(graph, relation))
    for vid in range(graph.n_vertices):
        if flags[vid]:
            continue
        i, j = graph.vertex_at(vid)
        p = graph.point_of(i, j)
        for di, dj in offs:
            if src_vertical_only and di != 0:
                continue
            if not graph.in_window(i + di, j + dj):
                continue
            w = graph.vertex_id(i + di, j + dj)
            if flags[w]:
                continue
            q = graph.point_of(i + di, j + dj)
            if arc_meets_segment(src, p, q) and arc_meets_segment(tgt, p, q):
                return True
    return False


@lru_cache(maxsize=None)
def _bond_skeleton(graph: LatticeGraph, tri):
    """Interior vertices plus interior-interior bonds (bond ids attached)."""
    flags = _interior_flags(graph, tri)
    ids = np.flatnonzero(flags).astype(np.int64)
    pos = np.full(graph.n_vertices, -1, dtype=np.int64)
    pos[ids] = np.arange(len(ids))
    eu, ev, evar = [], [], []
    for d, vid in enumerate(ids):
        i, j = graph.vertex_at(int(vid))
        for di, dj in ((1, 0), (0, 1)):
            if graph.in_window(i + di, j + dj):
                w = graph.vertex_id(i + di, j + dj)
                if flags[w]:
                    eu.append(d)
                    ev.append(pos[w])
                    evar.append(graph.edge_id(int(vid), w))
    return (ids, pos, np.asarray(eu, np.int64), np.asarray(ev, np.int64),
            np.asarray(evar, np.int64))


@lru_cache(maxsize=None)
def _bond_attach(graph, tri, arc: Arc, vertical_only: bool):
    """(interior node index, bond id) pairs whose bond meets the arc."""
    flags = _interior_flags(graph, tri)
    ids, _, _, _, _ = _bond_skeleton(graph, tri)
    nodes, evars = [], []
    for d, vid in enumerate(ids):
        i, j = graph.vertex_at(int(vid))
        p = graph.point_of(i, j)
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            if vertical_only and di != 0:
                continue
            if not graph.in_window(i + di, j + dj):
                continue
            w = graph.vertex_id(i + di, j + dj)
            if flags[w]:
                continue
            if arc_meets_segment(arc, p, graph.point_of(i + di, j + dj)):
                nodes.append(d)
                evars.append(graph.edge_id(int(vid), w))
    return np.asarray(nodes, np.int64), np.asarray(evars, np.int64)


@lru_cache(maxsize=None)
def _bond_degenerate(graph, tri, src: Arc, tgt: Arc,
                     src_vertical_only: bool) -> np.ndarray:
    """Bond ids between non-interior vertices meeting both arcs."""
    flags = _interior_flags(graph, tri)
    out = []
    for vid in range(graph.n_vertices):
        if flags[vid]:
            continue
        i, j = graph.vertex_at(vid)
        p = graph.point_of(i, j)
        for di, dj in ((1, 0), (0, 1)):
            if src_vertical_only and di != 0:
                continue
            if not graph.in_window(i + di, j + dj):
                continue
            w = graph.vertex_id(i + di, j + dj)
            if flags[w]:
                continue
            q = graph.point_of(i + di, j + dj)
            if arc_meets_segment(src, p, q) and arc_meets_segment(tgt, p, q):
                out.append(graph.edge_id(vid, w))
    return np.asarray(sorted(set(out)), np.int64)


@lru_cache(maxsize=None)
def _dual_inside(graph: LatticeGraph, tri) -> np.ndarray:
    dom = _as_domain(tri)
    flags = np.zeros(graph.n_faces, dtype=bool)
    for fid in range(graph.n_faces):
        i, j = graph.face_at(fid)
        flags[fid] = dom.contains_interior(graph.face_center(i, j))
    flags.setflags(write=False)
    return flags


@lru_cache(maxsize=None)
def _dual_skeleton(graph: LatticeGraph, tri):
    """Inside dual vertices plus inside-inside dual edges (crossed bond ids)."""
    flags = _dual_inside(graph, tri)
    ids = np.flatnonzero(flags).astype(np.int64)
    pos = np.full(graph.n_faces, -1, dtype=np.int64)
    pos[ids] = np.arange(len(ids))
    eu, ev, evar = [], [], []
    for d, fid in enumerate(ids):
        i, j = graph.face_at(int(fid))
        for di, dj in ((1, 0), (0, 1)):
            i2, j2 = i + di, j + dj
            if i2 > graph.i_max - 1 or j2 > graph.j_max - 1:
                continue
            g = graph.face_id(i2, j2)
            if flags[g]:
                eu.append(d)
                ev.append(pos[g])
                evar.append(graph.crossed_bond((i, j), (i2, j2)))
    return (ids, pos, np.asarray(eu, np.int64), np.asarray(ev, np.int64),
            np.asarray(evar, np.int64))


def _face_in_range(graph, i, j):
    return graph.i_min <= i <= graph.i_max - 1 and graph.j_min <= j <= graph.j_max - 1


@lru_cache(maxsize=None)
def _dual_attach(graph, tri, arc: Arc, vertical_only: bool):
    """(inside face index, crossed bond id) pairs whose dual step meets the arc."""
    flags = _dual_inside(graph, tri)
    ids, _, _, _, _ = _dual_skeleton(graph, tri)
    nodes, evars = [], []
    for d, fid in enumerate(ids):
        i, j = graph.face_at(int(fid))
        p = graph.face_center(i, j)
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            if vertical_only and di != 0:
                continue
            i2, j2 = i + di, j + dj
            if not _face_in_range(graph, i2, j2):
                continue
            g = graph.face_id(i2, j2)
            if flags[g]:
                continue
            if arc_meets_segment(arc, p, graph.face_center(i2, j2)):
                nodes.append(d)
                evars.append(graph.crossed_bond((i, j), (i2, j2)))
    return np.asarray(nodes, np.int64), np.asarray(evars, np.int64)


@lru_cache(maxsize=None)
def _dual_degenerate(graph, tri, src: Arc, tgt: Arc,
                     src_vertical_only: bool) -> np.ndarray:
    """Crossed bond ids of dual edges between outside faces meeting both arcs."""
    flags = _dual_inside(graph, tri)
    out = []
    for fid in range(graph.n_faces):
        if flags[fid]:
            continue
        i, j = graph.face_at(fid)
        p = graph.face_center(i, j)
        for di, dj in ((1, 0), (0, 1)):
            if src_vertical_only and di != 0:
                continue
            i2, j2 = i + di, j + dj
            if not _face_in_range(graph, i2, j2):
                continue
            g = graph.face_id(i2, j2)
            if flags[g]:
                continue
            q = graph.face_center(i2, j2)
            if arc_meets_segment(src, p, q) and arc_meets_segment(tgt, p, q):
                out.append(graph.crossed_bond((i, j), (i2, j2)))
    return np.asarray(sorted(set(out)), np.int64)


# --- detectors ---


class _Constant:
    def __init__(self, value: bool):
        self.value = value
        self.region = _EMPTY

    def evaluate(self, states) -> bool:
        return self.value


class _Both:
    def __init__(self, first, second):
        self.first = first
        self.second = second
        self.region = np.unique(np.concatenate([first.region, second.region]))
        self.region.setflags(write=False)

    def evaluate(self, states) -> bool:
        return self.first.evaluate(states) and self.second.evaluate(states)


class _ClusterCrossing:
    """Compiled crossing detector: attachments, inner edges, degenerate edges.

    `invert` selects closed paths (the detector then reads negated states);
    `site` selects vertex variables (attachments are state-free) versus edge
    variables (attachment and degenerate edges must carry the path color).
    """

    def __init__(self, site, invert, n_nodes, node_vars, eu, ev, edge_vars,
                 src, tgt, degenerate):
        self.site = site
        self.invert = invert
        self.n_nodes = n_nodes
        self.node_vars = node_vars
        self.eu = eu
        self.ev = ev
        self.edge_vars = edge_vars
        if site:
            self.src_flags, self.tgt_flags = src, tgt
            self.always = bool(degenerate)
            self.region = np.unique(node_vars)
        else:
            self.src_nodes, self.src_vars = src
            self.tgt_nodes, self.tgt_vars = tgt
            self.deg_vars = degenerate
            self.region = np.unique(np.concatenate(
                [edge_vars, self.src_vars, self.tgt_vars, degenerate]))
        self.region.setflags(write=False)

    def evaluate(self, states) -> bool:
        s = ~states if self.invert else states
        if self.site:
            if self.always:
                return True
            act = s[self.node_vars]
            src = act & self.src_flags
            tgt = act & self.tgt_flags
        else:
            if self.deg_vars.size and s[self.deg_vars].any():
                return True
            src = np.zeros(self.n_nodes, dtype=bool)
            src[self.src_nodes[s[self.src_vars]]] = True
            tgt = np.zeros(self.n_nodes, dtype=bool)
            tgt[self.tgt_nodes[s[self.tgt_vars]]] = True
        if not src.any() or not tgt.any():
            return False
        if (src & tgt).any():
            return True
        emask = (act[self.eu] & act[self.ev]) if self.site else s[self.edge_vars]
        keep = np.flatnonzero(emask)
        if keep.size == 0:
            return False
        graph = coo_matrix(
            (np.ones(keep.size, dtype=np.int8),
             (self.eu[keep], self.ev[keep])),
            shape=(self.n_nodes, self.n_nodes),
        )
        _, labels = connected_components(graph, directed=False)
        return bool(np.isin(labels[src], labels[tgt]).any())


@lru_cache(maxsize=None)
def _cluster_crossing(graph: LatticeGraph, domain: TriangleDomain,
                      src: Arc, tgt: Arc, color: str,
                      src_vertical_only: bool = False):
    tri = _tri(domain)
    mode = graph.mesh.mode
    if mode == SITE:
        relation = "bullet" if color == OPEN_BULLET else "circle"
        invert = color == CLOSED_CIRCLE
        ids, _, eu, ev = _site_skeleton(graph, tri, relation)
        return _ClusterCrossing(
            site=True, invert=invert, n_nodes=len(ids), node_vars=ids,
            eu=eu, ev=ev, edge_vars=None,
            src=_site_attach(graph, tri, src, relation, src_vertical_only),
            tgt=_site_attach(graph, tri, tgt, relation, False),
            degenerate=_site_degenerate(graph, tri, src, tgt, relation,
                                        src_vertical_only),
        )
    if color == OPEN_BULLET:
        ids, _, eu, ev, evar = _bond_skeleton(graph, tri)
        return _ClusterCrossing(
            site=False, invert=False, n_nodes=len(ids), node_vars=ids,
            eu=eu, ev=ev, edge_vars=evar,
            src=_bond_attach(graph, tri, src, src_vertical_only),
            tgt=_bond_attach(graph, tri, tgt, False),
            degenerate=_bond_degenerate(graph, tri, src, tgt, src_vertical_only),
        )
    ids, _, eu, ev, evar = _dual_skeleton(graph, tri)
    return _ClusterCrossing(
        site=False, invert=True, n_nodes=len(ids), node_vars=ids,
        eu=eu, ev=ev, edge_vars=evar,
        src=_dual_attach(graph, tri, src, src_vertical_only),
        tgt=_dual_attach(graph, tri, tgt, False),
        degenerate=_dual_degenerate(graph, tri, src, tgt, src_vertical_only),
    )


def build_detector(graph: LatticeGraph, query):
    """Compile a query into a detector with .evaluate(states) and .region."""
    if isinstance(query, CrossingQuery):
        arcs = query.domain.arcs()
        return _cluster_crossing(graph, query.domain, arcs[query.source],
                                 arcs[query.target], query.color)
    if isinstance(query, SeparatingQuery):
        return _cluster_crossing(graph, query.domain,
                                 query.domain.arcs()["BC"],
                                 query.domain.sub_arc_az(query.z), OPEN_BULLET)
    if isinstance(query, BlockingQuery):
        return _cluster_crossing(graph, query.domain,
                                 query.domain.sub_arc_zb(query.z),
                                 query.domain.arcs()["CA"], CLOSED_CIRCLE)
    if isinstance(query, TwoArmQuery):
        return _two_arm_detector(graph, query)
    raise TypeError(f"unknown query type {type(query).__name__}")


@lru_cache(maxsize=None)
def _two_arm_detector(graph: LatticeGraph, query: TwoArmQuery):
    domain = query.domain
    delta = graph.mesh.delta
    if query.z[0] - query.zbar[0] != delta:
        raise ValueError("Zbar and Z must be adjacent lattice points on AB")
    open_arm = _cluster_crossing(graph, domain, domain.point_arc(query.z),
                                 domain.arcs()["BC"], OPEN_BULLET)
    if query.zbar == domain.a:
        closed_arm = _Constant(True)
    elif graph.mesh.mode == SITE:
        closed_arm = _cluster_crossing(graph, domain,
                                       domain.point_arc(query.zbar),
                                       domain.arcs()["CA"], CLOSED_CIRCLE,
                                       src_vertical_only=True)
    else:
        half = delta / 2
        entry = Arc((query.zbar[0] - half, query.zbar[1]),
                    (query.zbar[0] + half, query.zbar[1]))
        closed_arm = _cluster_crossing(graph, domain, entry,
                                       domain.arcs()["CA"], CLOSED_CIRCLE)
    return _Both(open_arm, closed_arm)


# --- per-configuration API ---


def crossing_event(config, query: CrossingQuery) -> bool:
    """Does the configuration contain the queried arc-to-arc crossing?"""
    return build_detector(config.graph, query).evaluate(config.states)


def separating_event(config, domain: TriangleDomain, z: Point) -> bool:
    """Open crossing from BC to [A, Z]: Z is cut off from CA."""
    return build_detector(config.graph,
                          SeparatingQuery(domain, z)).evaluate(config.states)


def two_arm_event(config, query: TwoArmQuery) -> bool:
    """Open arm from Z to BC together with a closed arm from Zbar to CA."""
    return build_detector(config.graph, query).evaluate(config.states)


def dual_blocking_event(config, domain: TriangleDomain, z: Point) -> bool:
    """Closed crossing from (Z, B] to CA; the complement of separating(Z).

    In bond mode the closed path runs on the dual lattice.
    """
    return build_detector(config.graph,
                          BlockingQuery(domain, z)).evaluate(config.states)


def event_region(graph: LatticeGraph, query) -> np.ndarray:
    """Variable ids (vertices or bonds) the event can depend on."""
    return build_detector(graph, query).region
