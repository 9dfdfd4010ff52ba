"""Lattice and triangle-domain geometry in exact rational arithmetic.

The mesh lattice is Z^2 scaled by 1/l.  All vertex coordinates are kept in
integer "lattice units" (the point of vertex (i, j) is (i/l, j/l)); domain
corners and arc endpoints are Fractions, so every interior / edge-meets-arc
decision below is exact.  Floats never enter this module.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from math import ceil, floor

import numpy as np

Point = tuple[Fraction, Fraction]

SITE = "site"
BOND = "bond"
SQUARE = "square"
TRIANGULAR = "triangular"

ARC_NAMES = ("AX", "XB", "BC", "CA")

_BULLET_SQUARE = ((1, 0), (-1, 0), (0, 1), (0, -1))
_BULLET_TRIANGULAR = _BULLET_SQUARE + ((1, 1), (-1, -1))
_CIRCLE = tuple(
    (di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)
)


class WindowBudgetError(ValueError):
    """Domain window exceeds the configured vertex budget."""


def _pt(x, y) -> Point:
    return (Fraction(x), Fraction(y))


@dataclass(frozen=True)
class MeshSpec:
    """Mesh parameter l (spacing 1/l), percolation mode and lattice variant."""

    l: int
    mode: str = SITE
    variant: str = SQUARE

    def __post_init__(self):
        if self.l < 2:
            raise ValueError(f"mesh parameter l must be >= 2, got {self.l}")
        if self.mode not in (SITE, BOND):
            raise ValueError(f"mode must be 'site' or 'bond', got {self.mode!r}")
        if self.variant not in (SQUARE, TRIANGULAR):
            raise ValueError(f"unknown lattice variant {self.variant!r}")
        if self.variant == TRIANGULAR and self.mode != SITE:
            raise ValueError("the triangular variant is a site model")

    @property
    def delta(self) -> Fraction:
        return Fraction(1, self.l)

    def bullet_offsets(self):
        return _BULLET_TRIANGULAR if self.variant == TRIANGULAR else _BULLET_SQUARE

    def circle_offsets(self):
        return _CIRCLE


def snap_to_lattice(x: Fraction, l: int) -> int:
    """Nearest integer to x*l, ties rounded up (toward B)."""
    return floor(Fraction(x) * l + Fraction(1, 2))


@dataclass(frozen=True)
class Arc:
    """A boundary arc: a closed, half-open or open segment (or a point).

    ``start == end`` with both endpoints included is a point arc; with either
    endpoint excluded it is empty.
    """

    start: Point
    end: Point
    include_start: bool = True
    include_end: bool = True

    @property
    def is_point(self) -> bool:
        return self.start == self.end

    @property
    def is_empty(self) -> bool:
        return self.is_point and not (self.include_start and self.include_end)


def _orient(a: Point, b: Point, c: Point) -> Fraction:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _in_box(a: Point, b: Point, c: Point) -> bool:
    return (
        min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
    )


def point_on_segment(a: Point, b: Point, c: Point) -> bool:
    """Is c on the closed segment [a,b]?"""
    return _orient(a, b, c) == 0 and _in_box(a, b, c)


def segment_intersection(p: Point, q: Point, u: Point, v: Point):
    """Exact intersection of closed segments [p,q] and [u,v].

    Returns None, ("point", P) or ("segment", P1, P2).
    """
    if (
        max(p[0], q[0]) < min(u[0], v[0]) or max(u[0], v[0]) < min(p[0], q[0])
        or max(p[1], q[1]) < min(u[1], v[1]) or max(u[1], v[1]) < min(p[1], q[1])
    ):
        return None
    if u == v:
        if _orient(p, q, u) == 0 and _in_box(p, q, u):
            return ("point", u)
        return None
    if p == q:
        if _orient(u, v, p) == 0 and _in_box(u, v, p):
            return ("point", p)
        return None
    d1 = _orient(u, v, p)
    d2 = _orient(u, v, q)
    d3 = _orient(p, q, u)
    d4 = _orient(p, q, v)
    if d1 == 0 and d2 == 0:
        # collinear: overlap interval along the dominant axis
        axis = 0 if u[0] != v[0] else 1
        lo1, hi1 = sorted((p[axis], q[axis]))
        lo2, hi2 = sorted((u[axis], v[axis]))
        lo, hi = max(lo1, lo2), min(hi1, hi2)
        if lo > hi:
            return None
        pts = {p, q, u, v}
        at = {w[axis]: w for w in pts}
        p_lo = at.get(lo) or next(w for w in pts if w[axis] == lo)
        p_hi = at.get(hi) or next(w for w in pts if w[axis] == hi)
        if lo == hi:
            return ("point", p_lo)
        return ("segment", p_lo, p_hi)
    # endpoint touches
    if d1 == 0 and _in_box(u, v, p):
        return ("point", p)
    if d2 == 0 and _in_box(u, v, q):
        return ("point", q)
    if d3 == 0 and _in_box(p, q, u):
        return ("point", u)
    if d4 == 0 and _in_box(p, q, v):
        return ("point", v)
    if (d1 > 0) != (d2 > 0) and (d3 > 0) != (d4 > 0):
        t = d1 / (d1 - d2)
        return ("point", (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return None


def arc_meets_segment(arc: Arc, p: Point, q: Point) -> bool:
    """Does the closed segment [p,q] meet the arc (honoring excluded ends)?"""
    if arc.is_empty:
        return False
    res = segment_intersection(p, q, arc.start, arc.end)
    if res is None:
        return False
    if res[0] == "segment":
        return True
    pt = res[1]
    if pt == arc.start and not arc.include_start:
        return False
    if pt == arc.end and not arc.include_end:
        return False
    return True


@dataclass(frozen=True)
class TriangleDomain:
    """The triangle with marked boundary points A, X, B, C.

    Arcs partition the boundary exactly once.  Ties: a corner belongs to the
    first arc listing it in the order AX, XB, BC, CA, so AX = [A, X],
    XB = (X, B], BC = (B, C], CA = (C, A) open at both ends.
    """

    a: Point
    b: Point
    c: Point
    x: Point
    shift: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if _orient(self.a, self.b, self.c) == 0:
            raise ValueError("degenerate triangle")
        if _orient(self.a, self.b, self.x) != 0 or not _in_box(self.a, self.b, self.x):
            raise ValueError("X must lie on the closed segment AB")

    @classmethod
    def isosceles(cls, x=Fraction(1, 2)) -> "TriangleDomain":
        """The default triangle A=(0,0), B=(1,0), C=(1/2,1/2)."""
        return cls(_pt(0, 0), _pt(1, 0), _pt(Fraction(1, 2), Fraction(1, 2)),
                   (_pt(x, 0)[0], Fraction(0)))

    # continued-fraction convergent of sqrt(3), |x^2 - 3| < 1e-45; the ~1e22
    # denominator keeps every practical lattice point off the slanted arcs
    _SQRT3 = Fraction(103124220135120334842385, 59538796254981950751153)

    @classmethod
    def equilateral(cls, x=Fraction(1, 2)) -> "TriangleDomain":
        """Unit equilateral triangle; C's height uses a rational sqrt(3)/2."""
        cy = cls._SQRT3 / 2
        return cls(_pt(0, 0), _pt(1, 0), (Fraction(1, 2), cy), (Fraction(x), Fraction(0)))

    def with_x(self, x: Fraction) -> "TriangleDomain":
        """Same triangle with the split point moved to (x, a_y) on AB."""
        t = Fraction(x)
        # X on AB at horizontal coordinate x of the *unshifted* description is
        # ambiguous for tilted AB; we only support horizontal AB here.
        if self.a[1] != self.b[1]:
            raise ValueError("with_x requires a horizontal AB")
        return replace(self, x=(t, self.a[1]))

    def arcs(self) -> dict[str, Arc]:
        return {
            "AX": Arc(self.a, self.x, True, True),
            "XB": Arc(self.x, self.b, False, True),
            "BC": Arc(self.b, self.c, False, True),
            "CA": Arc(self.c, self.a, False, False),
        }

    def sub_arc_az(self, z: Point) -> Arc:
        """[A, Z] on AB (degenerate {A} allowed)."""
        return Arc(self.a, z, True, True)

    def sub_arc_zb(self, z: Point) -> Arc:
        """(Z, B] on AB."""
        return Arc(z, self.b, False, True)

    def point_arc(self, p: Point) -> Arc:
        return Arc(p, p, True, True)

    def contains_interior(self, p: Point) -> bool:
        """Strictly inside the open triangle (points on the boundary are out)."""
        s = 1 if _orient(self.a, self.b, self.c) > 0 else -1
        return (
            s * _orient(self.a, self.b, p) > 0
            and s * _orient(self.b, self.c, p) > 0
            and s * _orient(self.c, self.a, p) > 0
        )

    def bounding_box(self):
        xs = [self.a[0], self.b[0], self.c[0]]
        ys = [self.a[1], self.b[1], self.c[1]]
        return min(xs), max(xs), min(ys), max(ys)

    def translated(self, dx: Fraction, dy: Fraction, dshift=(0, 0)) -> "TriangleDomain":
        def mv(p: Point) -> Point:
            return (p[0] + dx, p[1] + dy)

        return TriangleDomain(
            mv(self.a), mv(self.b), mv(self.c), mv(self.x),
            (self.shift[0] + dshift[0], self.shift[1] + dshift[1]),
        )

    def ab_lattice_point(self, k: int, l: int) -> Point:
        """The point A + (k/l, 0); valid when AB is horizontal."""
        return (self.a[0] + Fraction(k, l), self.a[1])


SHIFT_OPS = ("tau+", "tau-", "rho+", "rho-")


def shift_domain(domain: TriangleDomain, op: str, mesh: MeshSpec) -> TriangleDomain:
    """Translate the domain by one lattice step: tau horizontal, rho vertical."""
    d = mesh.delta
    moves = {
        "tau+": (d, Fraction(0), (1, 0)),
        "tau-": (-d, Fraction(0), (-1, 0)),
        "rho+": (Fraction(0), d, (0, 1)),
        "rho-": (Fraction(0), -d, (0, -1)),
    }
    if op not in moves:
        raise ValueError(f"unknown shift {op!r}; expected one of {SHIFT_OPS}")
    dx, dy, ds = moves[op]
    return domain.translated(dx, dy, ds)


class LatticeGraph:
    """A rectangular window of the mesh lattice with dense vertex/edge ids.

    Vertex ids are row-major over (j, i); bond-mode edge ids enumerate, per
    vertex in id order, the east then the north edge that stays in-window.
    """

    def __init__(self, mesh: MeshSpec, i_min: int, i_max: int, j_min: int, j_max: int):
        if i_max < i_min or j_max < j_min:
            raise ValueError("empty window")
        self.mesh = mesh
        self.i_min, self.i_max = i_min, i_max
        self.j_min, self.j_max = j_min, j_max
        self.n_cols = i_max - i_min + 1
        self.n_rows = j_max - j_min + 1
        self.n_vertices = self.n_cols * self.n_rows
        self._edges = None
        self._edge_lookup = None

    def __repr__(self):
        return (f"LatticeGraph(l={self.mesh.l}, i=[{self.i_min},{self.i_max}], "
                f"j=[{self.j_min},{self.j_max}])")

    def _key(self):
        return (self.mesh, self.i_min, self.i_max, self.j_min, self.j_max)

    def __eq__(self, other):
        return isinstance(other, LatticeGraph) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def in_window(self, i: int, j: int) -> bool:
        return self.i_min <= i <= self.i_max and self.j_min <= j <= self.j_max

    def vertex_id(self, i: int, j: int) -> int:
        if not self.in_window(i, j):
            raise KeyError(f"vertex ({i},{j}) outside window")
        return (j - self.j_min) * self.n_cols + (i - self.i_min)

    def vertex_at(self, vid: int) -> tuple[int, int]:
        j, i = divmod(vid, self.n_cols)
        return (i + self.i_min, j + self.j_min)

    def point_of(self, i: int, j: int) -> Point:
        l = self.mesh.l
        return (Fraction(i, l), Fraction(j, l))

    def neighbors(self, vid: int, relation: str) -> list[int]:
        i, j = self.vertex_at(vid)
        if relation == "bullet":
            offs = self.mesh.bullet_offsets()
        elif relation == "circle":
            offs = self.mesh.circle_offsets()
        else:
            raise ValueError(f"unknown relation {relation!r}")
        return [
            self.vertex_id(i + di, j + dj)
            for di, dj in offs
            if self.in_window(i + di, j + dj)
        ]

    # --- bond-mode edges (square-lattice bonds: east/north) ---

    def _build_edges(self):
        us, vs = [], []
        for vid in range(self.n_vertices):
            i, j = self.vertex_at(vid)
            if i + 1 <= self.i_max:
                us.append(vid)
                vs.append(self.vertex_id(i + 1, j))
            if j + 1 <= self.j_max:
                us.append(vid)
                vs.append(self.vertex_id(i, j + 1))
        self._edges = (np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64))
        self._edge_lookup = {
            (int(u), int(v)): eid
            for eid, (u, v) in enumerate(zip(self._edges[0], self._edges[1]))
        }

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        if self._edges is None:
            self._build_edges()
        return self._edges

    @property
    def n_edges(self) -> int:
        return len(self.edges[0])

    def edge_id(self, u: int, v: int) -> int:
        if self._edge_lookup is None:
            self._build_edges()
        key = (u, v) if u < v else (v, u)
        eid = self._edge_lookup.get(key)
        if eid is None:
            raise KeyError(f"no lattice bond between vertices {u} and {v}")
        return eid

    def n_states(self) -> int:
        """Number of percolation variables: vertices (site) or bonds (bond)."""
        return self.n_edges if self.mesh.mode == BOND else self.n_vertices

    # --- dual faces (bond mode): face (i,j) has corners (i,j)..(i+1,j+1) ---

    @property
    def n_face_cols(self) -> int:
        return self.n_cols - 1

    @property
    def n_face_rows(self) -> int:
        return self.n_rows - 1

    @property
    def n_faces(self) -> int:
        return self.n_face_cols * self.n_face_rows

    def face_id(self, i: int, j: int) -> int:
        if not (self.i_min <= i <= self.i_max - 1 and self.j_min <= j <= self.j_max - 1):
            raise KeyError(f"face ({i},{j}) outside window")
        return (j - self.j_min) * self.n_face_cols + (i - self.i_min)

    def face_at(self, fid: int) -> tuple[int, int]:
        j, i = divmod(fid, self.n_face_cols)
        return (i + self.i_min, j + self.j_min)

    def face_center(self, i: int, j: int) -> Point:
        l = self.mesh.l
        return (Fraction(2 * i + 1, 2 * l), Fraction(2 * j + 1, 2 * l))

    def crossed_bond(self, f1: tuple[int, int], f2: tuple[int, int]) -> int:
        """Edge id of the primal bond a dual step between adjacent faces crosses."""
        (i1, j1), (i2, j2) = f1, f2
        if abs(i1 - i2) + abs(j1 - j2) != 1:
            raise ValueError("faces are not adjacent")
        if j1 == j2:  # horizontal dual step crosses a vertical bond
            i = max(i1, i2)
            u = self.vertex_id(i, j1)
            v = self.vertex_id(i, j1 + 1)
        else:  # vertical dual step crosses a horizontal bond
            j = max(j1, j2)
            u = self.vertex_id(i1, j)
            v = self.vertex_id(i1 + 1, j)
        return self.edge_id(u, v)


DEFAULT_WINDOW_BUDGET = 4_000_000


def build_lattice(mesh: MeshSpec, domain: TriangleDomain,
                  budget: int = DEFAULT_WINDOW_BUDGET) -> LatticeGraph:
    """Window covering the domain plus a one-lattice-step margin on all sides."""
    x0, x1, y0, y1 = domain.bounding_box()
    l = mesh.l
    i_min = floor(x0 * l) - 1
    i_max = ceil(x1 * l) + 1
    j_min = floor(y0 * l) - 1
    j_max = ceil(y1 * l) + 1
    n = (i_max - i_min + 1) * (j_max - j_min + 1)
    if n > budget:
        raise WindowBudgetError(
            f"window needs {n} vertices, exceeding the budget of {budget}"
        )
    return LatticeGraph(mesh, i_min, i_max, j_min, j_max)


class BoundaryMap:
    """Interior flags per vertex and arc incidences per lattice edge."""

    def __init__(self, graph: LatticeGraph, domain: TriangleDomain,
                 interior: np.ndarray, edge_arcs: dict):
        self.graph = graph
        self.domain = domain
        self.interior = interior
        self._edge_arcs = edge_arcs

    def is_interior(self, vid: int) -> bool:
        return bool(self.interior[vid])

    def arcs_met(self, u: int, v: int) -> frozenset:
        key = (u, v) if u < v else (v, u)
        return self._edge_arcs.get(key, frozenset())


def _edge_pairs(graph: LatticeGraph):
    """All distinct lattice edges (bullet plus circle diagonals), canonical order."""
    offs = set(graph.mesh.bullet_offsets()) | set(graph.mesh.circle_offsets())
    fwd = [(di, dj) for di, dj in offs if (di, dj) > (-di, -dj)]
    for vid in range(graph.n_vertices):
        i, j = graph.vertex_at(vid)
        for di, dj in fwd:
            if graph.in_window(i + di, j + dj):
                w = graph.vertex_id(i + di, j + dj)
                yield (vid, w) if vid < w else (w, vid)


def classify_boundary(mesh: MeshSpec, domain: TriangleDomain,
                      graph: LatticeGraph | None = None) -> BoundaryMap:
    """Exact interior status per vertex and arc incidence per edge.

    Pure: identical inputs yield identical maps.  An edge endpoint lying
    exactly on an arc counts as meeting it.
    """
    if graph is None:
        graph = build_lattice(mesh, domain)
    interior = np.zeros(graph.n_vertices, dtype=bool)
    pts = {}
    for vid in range(graph.n_vertices):
        i, j = graph.vertex_at(vid)
        p = graph.point_of(i, j)
        pts[vid] = p
        interior[vid] = domain.contains_interior(p)
    arcs = domain.arcs()
    edge_arcs = {}
    for u, v in _edge_pairs(graph):
        if interior[u] and interior[v]:
            continue  # convexity: an interior-interior edge meets no arc
        met = frozenset(
            name for name, arc in arcs.items()
            if arc_meets_segment(arc, pts[u], pts[v])
        )
        if met:
            edge_arcs[(u, v)] = met
    return BoundaryMap(graph, domain, interior, edge_arcs)
