"""Puzzle graphs for bounded-type Siegel polynomials.

The depth-0 graph is the union of the rotation disk boundary, an invariant
bubble chain hanging off the boundary critical point, a joint closing the
chain onto the fixed point it converges to, the external rays landing there,
and a level-2 equipotential loop.  Deeper graphs are preimages: every
depth-(n+1) arc is one of the d lifts of a depth-n arc, pulled back vertex
by vertex along a tracked inverse branch, so the image of an arc is again an
arc and the piece dynamics stays exact on the symbolic layer.

Pieces are the bounded complementary faces of the graph carrying an
equipotential side; faces bounded by disk and bubble arcs alone are Fatou
components.  Faces are recovered combinatorially by walking the rotation
system of the graph, which also certifies that each boundary is a simple
closed loop of arcs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .dynamics import (
    NumericalError,
    SiegelPolynomial,
    equipotential_loop,
    external_ray,
    grow_bubble_ray,
    newton_fixed_point,
    pull_point,
    ray_grid_offset,
)


class PuzzleError(Exception):
    """A structural failure while building or querying a puzzle."""


class OnGraphError(PuzzleError):
    """The queried point lies within guard distance of the graph."""


class ExteriorError(PuzzleError):
    """The queried point lies on the unbounded side of the equipotential."""


class MixedTowerError(PuzzleError):
    """Pieces from different refinement towers were combined."""


class BudgetError(PuzzleError):
    """A bounded search ran out of budget before reaching a verdict."""


EQUI_POTENTIAL = math.log(2.0)
MERGE_TOL = 1e-9
CRIT_SNAP = 1e-9
GUARD_RATIO = 0.75
DEGEN_DIAM = 1e-6  # faces smaller than this carry no usable orientation


# ---------------------------------------------------------------------------
# arcs and vertices


@dataclass
class Arc:
    """One edge of a puzzle graph: an oriented polyline between two vertices.

    Depth-0 arcs have no image; deeper arcs record the arc they map onto and
    the index each of their vertices maps to, so residuals of the Markov
    property can be evaluated pointwise."""

    aid: int
    kind: str  # 'siegel' | 'bubble' | 'ray' | 'joint' | 'equi'
    depth: int
    points: np.ndarray
    start: int = -1  # vertex ids, filled at registration
    end: int = -1
    image: Optional[int] = None
    image_index: Optional[np.ndarray] = None
    label: str = ""


class _VertexPool:
    """Canonical vertices of one graph level, merged within tolerance."""

    def __init__(self, tol: float = MERGE_TOL):
        self.tol = tol
        self.values: List[complex] = []
        self._buckets: Dict[Tuple[int, int], List[int]] = {}

    def _keys(self, z: complex):
        h = max(self.tol * 1e2, 1e-7)
        bx, by = math.floor(z.real / h), math.floor(z.imag / h)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                yield (bx + dx, by + dy)

    def find_or_add(self, z: complex) -> int:
        z = complex(z)
        scale = max(1.0, abs(z))
        best = None
        for key in self._keys(z):
            for vid in self._buckets.get(key, ()):
                if abs(self.values[vid] - z) <= self.tol * scale:
                    if best is None or abs(self.values[vid] - z) < abs(
                        self.values[best] - z
                    ):
                        best = vid
        if best is not None:
            return best
        vid = len(self.values)
        self.values.append(z)
        h = max(self.tol * 1e2, 1e-7)
        self._buckets.setdefault(
            (math.floor(z.real / h), math.floor(z.imag / h)), []
        ).append(vid)
        return vid


@dataclass
class Face:
    """A complementary face of one graph level.

    kind 'piece' marks puzzle pieces; 'siegel' and 'bubble' mark Fatou
    faces; exactly one face per level is 'outer'.  The cycle lists arcs with
    +1 when traversed forward, and the face interior lies on the left."""

    fid: int
    depth: int
    cycle: Tuple[Tuple[int, int], ...]
    area: float
    kind: str = ""
    outline: Optional[np.ndarray] = None
    locator: Optional[complex] = None
    parent: Optional[int] = None
    image: Optional[int] = None
    criticals: Tuple[int, ...] = ()
    touches_siegel: bool = False
    bbox: Optional[Tuple[float, float, float, float]] = None
    degenerate: bool = False

    @property
    def arc_ids(self) -> Tuple[int, ...]:
        return tuple(a for a, _ in self.cycle)


PuzzlePiece = Face


@dataclass
class _Level:
    depth: int
    arcs: Dict[int, Arc]
    vertices: _VertexPool
    vertex_image: Dict[int, int]
    faces: List[Face] = field(default_factory=list)
    outer: int = -1
    arc_faces: Dict[int, Tuple[int, int]] = field(default_factory=dict)
    vertex_faces: Dict[int, Set[int]] = field(default_factory=dict)
    segidx: Optional["_SegIndex"] = None
    face_boxes: Optional[Tuple[np.ndarray, ...]] = None

    def pieces(self) -> List[Face]:
        return [fc for fc in self.faces if fc.kind == "piece"]


# ---------------------------------------------------------------------------
# small geometry helpers


class _SegIndex:
    """Grid-bucketed polyline segments for near-graph distance queries.

    Levels hold up to a few hundred thousand segments; bucketing them on a
    uniform grid keeps point-to-graph queries local.  Segments spanning many
    cells land in an always-checked overflow list."""

    def __init__(self, arcs: Dict[int, Arc], cells: int = 128):
        starts, ends, owners = [], [], []
        for aid in sorted(arcs):
            p = arcs[aid].points
            starts.append(p[:-1])
            ends.append(p[1:])
            owners.append(np.full(len(p) - 1, aid, dtype=int))
        self.a = np.concatenate(starts)
        self.b = np.concatenate(ends)
        self.owner = np.concatenate(owners)
        lo_re = float(min(self.a.real.min(), self.b.real.min()))
        lo_im = float(min(self.a.imag.min(), self.b.imag.min()))
        hi_re = float(max(self.a.real.max(), self.b.real.max()))
        hi_im = float(max(self.a.imag.max(), self.b.imag.max()))
        self.lo = complex(lo_re, lo_im)
        self.span = max(hi_re - lo_re, hi_im - lo_im, 1e-9)
        self.h = self.span / cells
        i0 = np.floor((np.minimum(self.a.real, self.b.real) - lo_re) / self.h).astype(int)
        i1 = np.floor((np.maximum(self.a.real, self.b.real) - lo_re) / self.h).astype(int)
        j0 = np.floor((np.minimum(self.a.imag, self.b.imag) - lo_im) / self.h).astype(int)
        j1 = np.floor((np.maximum(self.a.imag, self.b.imag) - lo_im) / self.h).astype(int)
        self.buckets: Dict[Tuple[int, int], List[int]] = {}
        overflow: List[int] = []
        for s in range(len(self.a)):
            if (i1[s] - i0[s] + 1) * (j1[s] - j0[s] + 1) > 16:
                overflow.append(s)
                continue
            for i in range(i0[s], i1[s] + 1):
                for j in range(j0[s], j1[s] + 1):
                    self.buckets.setdefault((i, j), []).append(s)
        self.overflow = np.array(overflow, dtype=int)

    def _near(self, z: complex, r: float) -> np.ndarray:
        i0 = int((z.real - r - self.lo.real) // self.h)
        i1 = int((z.real + r - self.lo.real) // self.h)
        j0 = int((z.imag - r - self.lo.imag) // self.h)
        j1 = int((z.imag + r - self.lo.imag) // self.h)
        idx: List[int] = list(self.overflow)
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                idx.extend(self.buckets.get((i, j), ()))
        return np.asarray(idx, dtype=int)

    def _dist(self, z: complex, idx: np.ndarray) -> float:
        if len(idx) == 0:
            return math.inf
        a = self.a[idx]
        d = self.b[idx] - a
        L2 = np.abs(d) ** 2
        L2[L2 == 0] = 1.0
        t = np.clip(((z - a) * np.conj(d)).real / L2, 0.0, 1.0)
        return float(np.abs(z - (a + t * d)).min())

    def distance_below(self, z: complex, thr: float) -> bool:
        return self._dist(z, self._near(z, thr)) < thr

    def min_distance(self, z: complex) -> float:
        r = self.h
        while True:
            d = self._dist(z, self._near(z, r))
            # candidates cover everything within r, so a hit below r is exact
            if d <= r:
                return d
            if r > 2.0 * self.span + abs(z - self.lo):
                return d
            r *= 4.0


def _seg_index(level: _Level) -> _SegIndex:
    if level.segidx is None:
        level.segidx = _SegIndex(level.arcs)
    return level.segidx


def _face_boxes(level: _Level) -> Tuple[np.ndarray, ...]:
    """Vectorized bbox arrays over locatable (bounded, full-scale) faces."""
    if level.face_boxes is None:
        rows = [
            fc
            for fc in level.faces
            if fc.fid != level.outer and not fc.degenerate
        ]
        level.face_boxes = (
            np.array([fc.bbox[0] for fc in rows]),
            np.array([fc.bbox[1] for fc in rows]),
            np.array([fc.bbox[2] for fc in rows]),
            np.array([fc.bbox[3] for fc in rows]),
            np.array([fc.fid for fc in rows], dtype=int),
        )
    return level.face_boxes


def _dedupe(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=complex)
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.abs(np.diff(pts)) > 0
    return pts[keep]


def winding_number(outline: np.ndarray, z: complex) -> int:
    """Winding of a closed polyline (first point repeated last) around z."""
    v = outline - z
    if float(np.min(np.abs(v))) == 0.0:
        raise OnGraphError("winding undefined on the curve itself")
    ang = np.angle(v[1:] / v[:-1])
    return int(round(float(ang.sum()) / (2.0 * math.pi)))


def _segment_distance(points: np.ndarray, z: complex) -> float:
    """Distance from z to a polyline, segment-accurate."""
    a = points[:-1]
    b = points[1:]
    ab = b - a
    denom = np.abs(ab) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.clip(((z - a) * np.conj(ab)).real / np.where(denom > 0, denom, 1), 0, 1)
    proj = a + t * ab
    d = float(np.min(np.abs(z - proj))) if len(proj) else math.inf
    dv = float(np.min(np.abs(points - z)))
    return min(d, dv)


def _shoelace(points: np.ndarray) -> float:
    x, y = points.real, points.imag
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def _crosses(a: np.ndarray, b: np.ndarray) -> bool:
    """Whether two polylines cross properly (shared endpoints do not count)."""
    cross = lambda u, v: u.real * v.imag - u.imag * v.real
    q1, q2 = b[:-1], b[1:]
    for p1, p2 in zip(a[:-1], a[1:]):
        d1 = cross(p2 - p1, q1 - p1)
        d2 = cross(p2 - p1, q2 - p1)
        d3 = cross(q2 - q1, p1 - q1)
        d4 = cross(q2 - q1, p2 - q1)
        if np.any((d1 * d2 < 0) & (d3 * d4 < 0)):
            return True
    return False


# ---------------------------------------------------------------------------
# face extraction: rotation-system walk

_HalfEdge = Tuple[int, int]  # (aid, +1 forward | -1 backward)


def _first_direction(arc: Arc, sign: int) -> complex:
    pts = arc.points if sign > 0 else arc.points[::-1]
    base = pts[0]
    for p in pts[1:]:
        if p != base:
            return p - base
    raise NumericalError(f"arc {arc.aid} has no extent")


def _walk_faces(level: _Level) -> None:
    """Recover the complementary faces of the graph from its rotation system.

    Outgoing half-edges at each vertex are sorted counterclockwise by the
    direction of their first polyline step; following the predecessor of the
    twin traverses each face with its interior on the left, so bounded faces
    come out positively oriented and the unbounded face negatively."""
    arcs = level.arcs
    outgoing: Dict[int, List[_HalfEdge]] = {}
    tail: Dict[_HalfEdge, int] = {}
    head: Dict[_HalfEdge, int] = {}
    for arc in arcs.values():
        for sign in (1, -1):
            h = (arc.aid, sign)
            tail[h] = arc.start if sign > 0 else arc.end
            head[h] = arc.end if sign > 0 else arc.start
            outgoing.setdefault(tail[h], []).append(h)

    ring_pos: Dict[_HalfEdge, Tuple[int, int]] = {}
    for vid, ring in outgoing.items():
        ring.sort(key=lambda h: math.atan2(*(lambda w: (w.imag, w.real))(
            _first_direction(arcs[h[0]], h[1]))))
        angles = [
            math.atan2(_first_direction(arcs[h[0]], h[1]).imag,
                       _first_direction(arcs[h[0]], h[1]).real)
            for h in ring
        ]
        for i in range(len(ring)):
            if angles[i] == angles[(i + 1) % len(ring)] and len(ring) > 1:
                raise NumericalError(
                    f"degenerate tangency at vertex {vid}: "
                    "two arcs leave in the same direction"
                )
            ring_pos[ring[i]] = (vid, i)

    faces: List[Face] = []
    seen: Set[_HalfEdge] = set()
    for h0 in tail:
        if h0 in seen:
            continue
        cycle: List[_HalfEdge] = []
        h = h0
        while True:
            cycle.append(h)
            seen.add(h)
            twin = (h[0], -h[1])
            vid, i = ring_pos[twin]
            ring = outgoing[vid]
            h = ring[(i - 1) % len(ring)]
            if h == h0:
                break
            if h in seen:
                raise NumericalError("face walk collapsed onto a visited edge")
        parts = []
        for aid, sign in cycle:
            pts = arcs[aid].points if sign > 0 else arcs[aid].points[::-1]
            parts.append(pts[:-1])
        outline = np.concatenate(parts + [parts[0][:1]])
        faces.append(
            Face(
                fid=len(faces),
                depth=level.depth,
                cycle=tuple(cycle),
                area=_shoelace(outline),
                outline=outline,
                bbox=(
                    float(outline.real.min()),
                    float(outline.real.max()),
                    float(outline.imag.min()),
                    float(outline.imag.max()),
                ),
            )
        )

    # Deep in the tower some lifted loops shrink below sampling resolution;
    # their traversal order, and hence area sign, is numerical noise.  Flag
    # them instead of trusting their orientation.  The outer face is the
    # negatively-oriented one at full scale, and it must be unique.
    for fc in faces:
        b = fc.bbox
        if math.hypot(b[1] - b[0], b[3] - b[2]) < DEGEN_DIAM:
            fc.degenerate = True
    negatives = [fc for fc in faces if fc.area < 0 and not fc.degenerate]
    if len(negatives) != 1:
        raise NumericalError(
            f"face walk found {len(negatives)} unbounded faces at depth "
            f"{level.depth}"
        )
    level.faces = faces
    level.outer = negatives[0].fid

    # Euler characteristic of the sphere certifies the embedding closed up:
    # V - E + F = 2, faces including the outer one.
    n_v = len({tail[h] for h in tail})
    n_e = len(arcs)
    if n_v - n_e + len(faces) != 2:
        raise NumericalError(
            f"depth-{level.depth} graph is not a connected plane graph: "
            f"V={n_v} E={n_e} F={len(faces)}"
        )

    side: Dict[int, List[int]] = {}
    for fc in faces:
        for aid, sign in fc.cycle:
            side.setdefault(aid, [0, 0])[0 if sign > 0 else 1] = fc.fid
        for h in fc.cycle:
            level.vertex_faces.setdefault(tail[h], set()).add(fc.fid)
    level.arc_faces = {aid: (lr[0], lr[1]) for aid, lr in side.items()}


def _face_locator(face: Face, clear_of_graph) -> complex:
    """An interior point of a bounded face, certified by winding number."""
    outline = face.outline
    seg = np.abs(np.diff(outline))
    order = np.argsort(seg)[::-1][:8]
    for i in order:
        a, b = outline[i], outline[i + 1]
        u = (b - a) / abs(b - a)
        normal = 1j * u  # interior is on the left of the oriented boundary
        for eps in (0.3, 0.1, 0.03, 0.01):
            z = (a + b) / 2 + normal * eps * abs(b - a)
            try:
                if winding_number(outline, z) != 1:
                    continue
            except OnGraphError:
                continue
            if clear_of_graph(z, 0.2 * eps * abs(b - a)):
                return complex(z)
    raise NumericalError(
        f"no interior locator found for face {face.fid} at depth {face.depth}"
    )


# ---------------------------------------------------------------------------
# the complex


@dataclass
class Location:
    """Result of point location: the face class and, for pieces, its id."""

    kind: str  # 'piece' | 'siegel' | 'bubble'
    depth: int
    fid: int

    @property
    def pid(self) -> Tuple[int, int]:
        return (self.depth, self.fid)


class PuzzleComplex:
    """A tower of puzzle graphs Z_0, ..., Z_n and their pieces.

    Arc geometry lives per level; the piece dynamics (image and parent
    pointers, critical flags) is exact on ids and drives all the symbolic
    machinery: niceness, landings, children, protected pieces, extraction."""

    def __init__(self, f: SiegelPolynomial, config: Dict):
        self.f = f
        self.config = dict(config)
        self.levels: List[_Level] = []
        self._hub = 0.0  # the rotation fixed point; the disk surrounds it
        self._crit = list(f.critical_points())
        self._crit_vals = [f(c) for c in self._crit]
        self._orbit_pts: Dict[int, List[complex]] = {}
        self._orbit_loc: Dict[Tuple[int, int, int], object] = {}

    # -- bookkeeping ------------------------------------------------------

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def level(self, depth: int) -> _Level:
        if not 0 <= depth < len(self.levels):
            raise PuzzleError(f"depth {depth} is not materialized")
        return self.levels[depth]

    def pieces(self, depth: int) -> List[Face]:
        return self.level(depth).pieces()

    def face(self, pid: Tuple[int, int]) -> Face:
        depth, fid = pid
        faces = self.level(depth).faces
        if not 0 <= fid < len(faces):
            raise PuzzleError(f"no face {pid}")
        return faces[fid]

    def piece(self, pid: Tuple[int, int]) -> Face:
        fc = self.face(pid)
        if fc.kind != "piece":
            raise PuzzleError(f"face {pid} is {fc.kind}, not a piece")
        return fc

    def graph_distance(self, z: complex, depth: int) -> float:
        return _seg_index(self.level(depth)).min_distance(complex(z))

    # -- queries ----------------------------------------------------------

    def locate(self, z: complex, depth: int, guard: float = 1e-7) -> Location:
        """The face containing z at the given depth.

        Raises OnGraphError within guard distance of the graph and
        ExteriorError on the unbounded side."""
        z = complex(z)
        level = self.level(depth)
        lo_re, hi_re, lo_im, hi_im, fids = _face_boxes(level)
        hits = np.nonzero(
            (z.real >= lo_re - guard)
            & (z.real <= hi_re + guard)
            & (z.imag >= lo_im - guard)
            & (z.imag <= hi_im + guard)
        )[0]
        # Faces tile the bounded region, so for an interior point the graph
        # distance equals the distance to the containing face's boundary.
        for i in hits:
            fc = level.faces[int(fids[i])]
            if winding_number(fc.outline, z) == 1:
                if guard > 0 and _segment_distance(fc.outline, z) < guard:
                    raise OnGraphError(
                        f"point {z} is on the depth-{depth} graph"
                    )
                return Location(kind=fc.kind, depth=depth, fid=fc.fid)
        if guard > 0 and _seg_index(level).distance_below(z, guard):
            raise OnGraphError(f"point {z} is on the depth-{depth} graph")
        raise ExteriorError(f"point {z} is outside the depth-{depth} graph")

    def ancestor(self, pid: Tuple[int, int], depth: int) -> Optional[Tuple[int, int]]:
        """The face of the given shallower depth containing this face."""
        d, fid = pid
        if depth > d:
            return None
        while d > depth:
            parent = self.face((d, fid)).parent
            if parent is None:
                return None
            d, fid = d - 1, parent
        return (d, fid)

    def image_pid(self, pid: Tuple[int, int]) -> Optional[Tuple[int, int]]:
        d, fid = pid
        img = self.face(pid).image
        if img is None:
            return None
        return (d - 1, img)

    def critical_points(self) -> List[complex]:
        return list(self._crit)

    def on_graph_criticals(self, depth: int, tol: float = 1e-6) -> List[int]:
        return [
            i
            for i, c in enumerate(self._crit)
            if self.graph_distance(c, depth) < tol
        ]

    def critical_piece(self, ci: int, depth: int) -> Optional[Tuple[int, int]]:
        """The depth-n piece containing critical point ci, None if on-graph."""
        loc = self.orbit_location(ci, 0, depth)
        if isinstance(loc, Location) and loc.kind == "piece":
            return loc.pid
        return None

    # -- critical orbits ----------------------------------------------------

    def orbit_point(self, ci: int, j: int) -> complex:
        """f^j of critical point ci, cached across calls."""
        pts = self._orbit_pts.setdefault(ci, [self._crit[ci]])
        while len(pts) <= j:
            z = pts[-1]
            # freeze far-escaped orbits instead of overflowing
            pts.append(z if abs(z) > 1e100 else self.f(z))
        return pts[j]

    def orbit_location(self, ci: int, j: int, depth: int):
        """Where f^j(c_i) sits at the given depth.

        Returns a Location, or "graph" / "exterior".  Cached per
        (ci, j, depth); materialized levels are immutable, so refinement
        never invalidates entries.  A deeper cached face location yields
        shallower ones through the parent chain for free."""
        key = (ci, j, depth)
        if key in self._orbit_loc:
            return self._orbit_loc[key]
        out = None
        for dd in range(self.depth, depth, -1):
            prior = self._orbit_loc.get((ci, j, dd))
            if isinstance(prior, Location):
                anc = self.ancestor(prior.pid, depth)
                if anc is not None:
                    out = Location(
                        kind=self.face(anc).kind, depth=depth, fid=anc[1]
                    )
                break
        if out is None:
            z = self.orbit_point(ci, j)
            try:
                out = self.locate(z, depth, guard=1e-9)
            except OnGraphError:
                out = "graph"
            except ExteriorError:
                out = "exterior"
        self._orbit_loc[key] = out
        return out

    def orbit_piece(self, ci: int, j: int, depth: int):
        """Face id holding f^j(c_i), or "graph" / "exterior"."""
        loc = self.orbit_location(ci, j, depth)
        return loc.pid if isinstance(loc, Location) else loc

    # -- construction -----------------------------------------------------

    def _register_arcs(self, depth: int, raw: List[Arc]) -> _Level:
        pool = _VertexPool()
        for arc in raw:
            arc.points = _dedupe(arc.points)
            if len(arc.points) < 2:
                raise NumericalError(f"arc {arc.aid} degenerated to a point")
            arc.start = pool.find_or_add(arc.points[0])
            arc.end = pool.find_or_add(arc.points[-1])
            # snap the endpoints so shared vertices match bit for bit
            arc.points = arc.points.copy()
            arc.points[0] = pool.values[arc.start]
            arc.points[-1] = pool.values[arc.end]
        level = _Level(
            depth=depth,
            arcs={a.aid: a for a in raw},
            vertices=pool,
            vertex_image={},
        )
        return level

    def _classify_level(self, level: _Level) -> None:
        _walk_faces(level)
        idx = _seg_index(level)

        def clear(z: complex, thr: float) -> bool:
            return not idx.distance_below(z, thr)
        for fc in level.faces:
            if fc.fid == level.outer:
                fc.kind = "outer"
                continue
            kinds = {level.arcs[aid].kind for aid in fc.arc_ids}
            if fc.degenerate:
                # sub-resolution loop: no orientation, no certified interior
                if "equi" in kinds:
                    raise NumericalError(
                        f"depth-{level.depth} potential boundary degenerated"
                    )
                fc.kind = "bubble"
                fc.locator = complex(fc.outline.mean())
                continue
            if "equi" in kinds:
                fc.kind = "piece"
            elif winding_number(fc.outline, self._hub) == 1:
                fc.kind = "siegel"
            else:
                fc.kind = "bubble"
            fc.locator = _face_locator(fc, clear)
        # Lifting the disk boundary produces one branch on the boundary
        # itself and d-1 branches on bubble boundaries, so the kind tag of
        # lifted arcs over-reports: the true disk arcs are exactly the cycle
        # of the face containing the disk center.  Demote the rest.
        disk_faces = [fc for fc in level.faces if fc.kind == "siegel"]
        if len(disk_faces) != 1:
            raise NumericalError(
                f"depth-{level.depth} graph bounds {len(disk_faces)} faces "
                f"around the rotation disk center"
            )
        on_disk = set(disk_faces[0].arc_ids)
        for arc in level.arcs.values():
            if arc.kind == "siegel" and arc.aid not in on_disk:
                arc.kind = "bubble"
        for fc in level.faces:
            if fc.fid != level.outer:
                fc.touches_siegel = any(a in on_disk for a in fc.arc_ids)
        # critical content, skipping points that ride on the graph
        for ci, c in enumerate(self._crit):
            if idx.distance_below(c, 1e-6):
                continue
            for fc in level.faces:
                if fc.degenerate:
                    continue
                if fc.kind in ("piece", "siegel", "bubble") and winding_number(
                    fc.outline, c
                ) == 1:
                    fc.criticals = fc.criticals + (ci,)
                    break

    def _link_level(self, level: _Level) -> None:
        """Attach parent and image pointers by locating marker points."""
        if level.depth == 0:
            return
        for fc in level.faces:
            if fc.kind == "outer":
                continue
            if fc.kind != "piece":
                # Fatou faces: links are informational, and a tiny bubble (or
                # its image, squeezed through a critical point) can sit too
                # close to the coarser graph for its links to resolve
                try:
                    fc.parent = self.locate(fc.locator, level.depth - 1,
                                            guard=0.0).fid
                    fc.image = self.locate(self.f(fc.locator),
                                           level.depth - 1, guard=0.0).fid
                except PuzzleError:
                    pass
                continue
            here = self.locate(fc.locator, level.depth - 1, guard=0.0)
            fc.parent = here.fid
            img = self.locate(self.f(fc.locator), level.depth - 1, guard=0.0)
            fc.image = img.fid
            if fc.kind == "piece":
                if here.kind != "piece" or img.kind != "piece":
                    raise NumericalError(
                        f"piece {(level.depth, fc.fid)} has a non-piece "
                        f"parent or image"
                    )
                image_arcs = set(self.face((level.depth - 1, img.fid)).arc_ids)
                for aid in fc.arc_ids:
                    if level.arcs[aid].image not in image_arcs:
                        raise NumericalError(
                            f"arc {aid} of piece {(level.depth, fc.fid)} maps "
                            f"outside the recorded image piece"
                        )

    # -- refinement -------------------------------------------------------

    def _pull_vertex(self, target: complex, anchor: complex) -> complex:
        """One inverse-branch step, aware of critical values: at a critical
        value the collapsed pair of roots is replaced by the critical point
        itself, so lifts through the branch point stay deterministic."""
        f = self.f
        scale = max(1.0, abs(target))
        hits = [
            c
            for c, v in zip(self._crit, self._crit_vals)
            if abs(v - target) <= CRIT_SNAP * scale
        ]
        if not hits:
            return pull_point(f, target, anchor)
        cands = list(hits) + [
            r
            for r in f.preimages(target)
            if all(abs(r - c) > 1e-6 for c in hits)
        ]
        cands.sort(key=lambda r: abs(r - anchor))
        if len(cands) > 1:
            d0, d1 = abs(cands[0] - anchor), abs(cands[1] - anchor)
            if d0 > 1e-14 and d1 - d0 < GUARD_RATIO * d0:
                raise NumericalError(
                    f"ambiguous branch at critical value {target}"
                )
        return cands[0]

    def _lift_arc(
        self, pts: np.ndarray, seed_idx: int, seed: complex, aid: int
    ) -> np.ndarray:
        out = np.empty(len(pts), dtype=complex)
        out[seed_idx] = seed
        try:
            for i in range(seed_idx + 1, len(pts)):
                out[i] = self._pull_vertex(pts[i], out[i - 1])
            for i in range(seed_idx - 1, -1, -1):
                out[i] = self._pull_vertex(pts[i], out[i + 1])
        except NumericalError as exc:
            raise NumericalError(f"lifting arc {aid}: {exc}") from exc
        return out

    def _distinct_preimages(self, value: complex) -> List[complex]:
        roots = sorted(self.f.preimages(value), key=lambda r: (r.real, r.imag))
        reps: List[complex] = []
        for r in roots:
            if all(abs(r - s) > 1e-7 * max(1.0, abs(r)) for s in reps):
                reps.append(r)
        return reps

    def _is_critical_value(self, z: complex) -> bool:
        scale = max(1.0, abs(z))
        return any(abs(z - v) <= CRIT_SNAP * scale for v in self._crit_vals)

    def _stride_indices(self, n: int, stride: int) -> np.ndarray:
        if stride <= 1 or n <= 16:
            return np.arange(n)
        idx = list(range(0, n - 1, stride)) + [n - 1]
        return np.array(idx, dtype=int)

    def refine(self) -> "PuzzleComplex":
        """Materialize depth n+1 by lifting every depth-n arc d times.

        Every critical value sitting on the graph must be an arc endpoint;
        the initial graph pre-splits the disk boundary along the critical
        orbit to make that hold up to the configured maximum depth, and the
        check fails honestly beyond it."""
        parent = self.levels[-1]
        d = self.f.degree

        pidx = _seg_index(parent)
        for v in self._crit_vals:
            near = {int(a) for a in pidx.owner[pidx._near(v, 1e-7)]}
            for aid in near:
                arc = parent.arcs[aid]
                if _segment_distance(arc.points, v) > 1e-7:
                    continue
                scale = max(1.0, abs(v))
                at_start = abs(arc.points[0] - v) <= CRIT_SNAP * scale
                at_end = abs(arc.points[-1] - v) <= CRIT_SNAP * scale
                if not (at_start or at_end):
                    raise PuzzleError(
                        f"critical value {v} lies inside arc {arc.aid} at "
                        f"depth {parent.depth}: the refinement horizon of the "
                        f"initial graph is exhausted; rebuild with a larger "
                        f"max_depth"
                    )

        total = sum(len(a.points) for a in parent.arcs.values())
        budget = int(self.config.get("point_budget", 150_000))
        stride = max(1, -(-total * d // budget))

        raw: List[Arc] = []
        next_aid = 0
        for arc in parent.arcs.values():
            take = self._stride_indices(len(arc.points), stride)
            pts = arc.points[take]
            if self._is_critical_value(pts[0]) and not self._is_critical_value(
                pts[-1]
            ):
                seed_idx = len(pts) - 1
            elif self._is_critical_value(pts[-1]) and self._is_critical_value(
                pts[0]
            ):
                seed_idx = len(pts) // 2
                if self._is_critical_value(pts[seed_idx]):
                    raise NumericalError(
                        f"arc {arc.aid} runs through critical values at "
                        f"both ends and its midpoint"
                    )
            else:
                seed_idx = 0
            seeds = self._distinct_preimages(complex(pts[seed_idx]))
            if len(seeds) != d:
                raise NumericalError(
                    f"expected {d} distinct branches over arc {arc.aid}, "
                    f"got {len(seeds)}"
                )
            for seed in seeds:
                lifted = self._lift_arc(pts, seed_idx, seed, arc.aid)
                raw.append(
                    Arc(
                        aid=next_aid,
                        kind=arc.kind,
                        depth=parent.depth + 1,
                        points=lifted,
                        image=arc.aid,
                        image_index=take.copy(),
                        label=arc.label,
                    )
                )
                next_aid += 1

        level = self._register_arcs(parent.depth + 1, raw)
        for arc in level.arcs.values():
            src = parent.arcs[arc.image]
            for vid, wid in ((arc.start, src.start), (arc.end, src.end)):
                prev = level.vertex_image.setdefault(vid, wid)
                if prev != wid and (
                    abs(parent.vertices.values[prev] - parent.vertices.values[wid])
                    > 1e-7
                ):
                    # endpoints merged by the vertex pool are fine as long
                    # as their recorded images agree geometrically
                    raise NumericalError(
                        f"vertex {vid} at depth {level.depth} has conflicting "
                        f"image vertices"
                    )
        self._classify_level(level)
        self.levels.append(level)
        try:
            self._link_level(level)
        except Exception:
            self.levels.pop()
            self._orbit_loc = {
                k: v for k, v in self._orbit_loc.items() if k[2] != level.depth
            }
            raise
        return self


def _split_closed(
    points: np.ndarray, cut_indices: Sequence[int]
) -> List[np.ndarray]:
    """Split a closed polyline (first point repeated last) at the given
    vertex indices of its open part, returning the chained open arcs."""
    cuts = sorted(set(int(i) for i in cut_indices))
    n = len(points) - 1
    if not cuts:
        raise ValueError("need at least one cut to open a closed polyline")
    out = []
    for a, b in zip(cuts, cuts[1:] + [cuts[0] + n]):
        if b <= n:
            seg = points[a : b + 1]
        else:
            seg = np.concatenate([points[a:n], points[: b - n + 1]])
        out.append(seg)
    return out


def build_initial_puzzle(
    f: SiegelPolynomial,
    samples: int = 987,
    chain: int = 12,
    ray_depth: int = 16,
    max_depth: int = 8,
    equi_samples: int = 8,
    landing_tol: float = 1e-3,
    point_budget: int = 150_000,
) -> PuzzleComplex:
    """Assemble the depth-0 puzzle graph.

    The graph is the disk boundary split along the critical orbit, the first
    `chain` bubbles of the invariant bubble chain, a straight joint from the
    chain tip to the fixed point the chain converges to, every degree-fixed
    external ray landing at that fixed point, and the potential-log(2)
    equipotential.  Ray tops coincide with equipotential vertices exactly,
    and all attaching points are shared polyline vertices, so the graph
    closes up without stitching tolerances."""
    if chain < 1:
        raise PuzzleError("the graph cannot close without a bubble chain")
    if max_depth + 1 >= samples:
        raise PuzzleError("not enough boundary samples for the requested depth")
    d = f.degree
    puzzle = PuzzleComplex(
        f,
        config=dict(
            samples=samples,
            chain=chain,
            ray_depth=ray_depth,
            max_depth=max_depth,
            equi_samples=equi_samples,
            point_budget=point_budget,
        ),
    )

    bubbles = grow_bubble_ray(f, count=chain + 1, samples=samples)
    tip = bubbles[chain].attach  # attaching point of the first bubble dropped
    beta = newton_fixed_point(f, tip)
    if abs(beta - tip) > landing_tol:
        raise PuzzleError(
            f"unresolved landing: bubble chain tip {tip} is {abs(beta - tip):.2e} "
            f"from the nearest fixed point; grow a longer chain"
        )

    # external rays with degree-fixed angles that land at the same point
    sub = 8
    top = ray_grid_offset(f, sub)
    rays: List[Tuple[Fraction, np.ndarray]] = []
    for k in range(d - 1):
        t = Fraction(k, d - 1)
        grid = external_ray(f, t, depth=ray_depth, samples_per_level=sub)
        land = newton_fixed_point(f, grid[-1])
        if abs(land - beta) <= landing_tol and abs(land - grid[-1]) <= landing_tol:
            rays.append((t, np.append(grid[top:], beta)))
    if not rays:
        raise PuzzleError(
            f"unresolved landing: no degree-fixed external ray lands at {beta}"
        )

    loop = equipotential_loop(f, EQUI_POTENTIAL, samples=equi_samples)
    n_loop = len(loop) - 1
    ray_cuts = []
    for t, pts in rays:
        j = int(t * n_loop)
        if Fraction(t * n_loop).denominator != 1:
            raise PuzzleError("equipotential sampling does not resolve ray angles")
        if abs(loop[j] - pts[0]) > MERGE_TOL:
            raise NumericalError(
                f"ray at angle {t} misses its equipotential vertex by "
                f"{abs(loop[j] - pts[0]):.2e}"
            )
        loop = loop.copy()
        loop[j] = pts[0]
        if j == 0:
            loop[-1] = pts[0]
        ray_cuts.append(j)

    raw: List[Arc] = []

    def add(kind: str, pts: np.ndarray, label: str) -> None:
        raw.append(
            Arc(aid=len(raw), kind=kind, depth=0, points=np.asarray(pts), label=label)
        )

    # disk boundary, split along the critical orbit up to the depth horizon
    disk = _disk_arcs(f, samples, max_depth)
    for i, seg in enumerate(disk):
        add("siegel", seg, f"disk{i}")

    # bubbles, each split at its own and the next attaching point
    for k in range(chain):
        boundary = bubbles[k].boundary
        nxt = bubbles[k + 1].attach
        j = int(np.argmin(np.abs(boundary[:-1] - nxt)))
        if abs(boundary[j] - nxt) > MERGE_TOL:
            raise NumericalError(
                f"bubble {k + 1} attaching point misses the boundary of "
                f"bubble {k} by {abs(boundary[j] - nxt):.2e}"
            )
        if j == 0:
            raise NumericalError(f"bubble {k + 2} attaches at the base vertex")
        for i, seg in enumerate(_split_closed(boundary, [0, j])):
            add("bubble", seg, f"bubble{k + 1}.{i}")

    # the joint closing the chain onto its landing fixed point; the chain
    # spirals into that point, so a straight segment from the truncation
    # tip can in principle clip a retained bubble -- refuse rather than
    # hand the face walk a self-crossing graph
    joint = tip + (beta - tip) * np.linspace(0.0, 1.0, 9)
    joint[-1] = beta
    for other in raw:
        if _crosses(joint, other.points):
            raise PuzzleError(
                f"the joint crosses arc {other.label}; grow a longer chain"
            )
    add("joint", joint, "joint")

    for t, pts in rays:
        add("ray", pts, f"ray{t}")

    if len(ray_cuts) == 1:
        j = ray_cuts[0]
        rolled = np.append(np.roll(loop[:-1], -j), loop[j])
        add("equi", rolled, "equi0")
    else:
        for i, seg in enumerate(_split_closed(loop, ray_cuts)):
            add("equi", seg, f"equi{i}")

    level = puzzle._register_arcs(0, raw)
    puzzle._classify_level(level)
    puzzle.levels.append(level)

    n_pieces = len(level.pieces())
    if n_pieces < 1:
        raise PuzzleError("the initial graph bounds no puzzle piece")
    return puzzle


def _disk_arcs(f: SiegelPolynomial, samples: int, max_depth: int) -> List[np.ndarray]:
    """The disk boundary as arcs cut at the critical orbit points
    z_0, ..., z_{max_depth}: every lift of the graph then keeps the critical
    value z_1 at an arc endpoint for max_depth rounds of refinement."""
    from .dynamics import _disk_loop

    loop, idx, _ = _disk_loop(f, samples)
    cuts = []
    for m in range(max_depth + 1):
        where = np.where(idx == m)[0]
        if len(where) != 1:
            raise PuzzleError(f"orbit point {m} is not a disk sample")
        cuts.append(int(where[0]))
    return _split_closed(loop, cuts)


# ---------------------------------------------------------------------------
# vectorized winding/distance for the sampled Markov checks


def _winding_many(outline: np.ndarray, zs: np.ndarray) -> np.ndarray:
    out = np.empty(len(zs), dtype=int)
    for i0 in range(0, len(zs), 64):
        chunk = zs[i0 : i0 + 64]
        v = outline[:, None] - chunk[None, :]
        ang = np.angle(v[1:] / v[:-1])
        out[i0 : i0 + 64] = np.rint(ang.sum(axis=0) / (2.0 * math.pi)).astype(int)
    return out


def _distance_many(points: np.ndarray, zs: np.ndarray) -> np.ndarray:
    a, b = points[:-1], points[1:]
    ab = b - a
    denom = np.abs(ab) ** 2
    denom = np.where(denom > 0, denom, 1.0)
    out = np.empty(len(zs), dtype=float)
    for i0 in range(0, len(zs), 64):
        chunk = zs[i0 : i0 + 64]
        t = ((chunk[None, :] - a[:, None]) * np.conj(ab)[:, None]).real / denom[:, None]
        t = np.clip(t, 0.0, 1.0)
        proj = a[:, None] + t * ab[:, None]
        out[i0 : i0 + 64] = np.abs(chunk[None, :] - proj).min(axis=0)
    return out


def _strided(points: np.ndarray, cap: int) -> np.ndarray:
    if len(points) <= cap:
        return points
    idx = np.linspace(0, len(points) - 1, cap).astype(int)
    return points[np.unique(idx)]


def piece_diameter(face: Face) -> float:
    o = face.outline
    return float(
        math.hypot(
            o.real.max() - o.real.min(),
            o.imag.max() - o.imag.min(),
        )
    )


def nested_margin(
    puz: PuzzleComplex,
    inner: Tuple[int, int],
    outer: Tuple[int, int],
    samples: int = 256,
) -> Tuple[bool, float]:
    """Certify compact containment on samples: every sampled boundary point
    of the inner piece winds once around in the outer piece and keeps a
    positive distance to its boundary.  Returns (strictly inside, margin)."""
    fin = puz.face(inner)
    fout = puz.face(outer)
    zs = _strided(fin.outline[:-1], samples)
    dz = _distance_many(fout.outline, zs)
    margin = float(dz.min())
    if margin <= 0.0:
        return False, 0.0
    wn = _winding_many(fout.outline, zs)
    return bool(np.all(wn == 1)), margin


# ---------------------------------------------------------------------------
# Markov verification suite


def markov_report(
    puz: PuzzleComplex,
    max_depth: Optional[int] = None,
    samples: int = 256,
    delta_ratio: float = 1e-4,
) -> Dict:
    """Sampled verification of the Markov property across materialized depths.

    Checks, per the piece tower: (a) boundary samples of each piece land on
    the recorded image piece's boundary, exactly at the tracked vertex
    images; (b) every ordered pair of pieces classifies as nested or
    disjoint, tolerating only samples within delta of the shallower
    boundary (pieces legitimately share arcs), and the verdict agrees with
    the symbolic ancestor relation; (c) local degrees over each piece sum
    to the polynomial degree."""
    top = puz.depth if max_depth is None else min(max_depth, puz.depth)
    report: Dict = {
        "depths": list(range(top + 1)),
        "image_residual_max": 0.0,
        "pairs": 0,
        "nested": 0,
        "disjoint": 0,
        "violations": [],
        "parent_ok": True,
        "degree_sums": {},
        "degree_ok": True,
    }

    # (a) pointwise image residuals against the tracked vertex images
    worst = 0.0
    for n in range(1, top + 1):
        level = puz.level(n)
        parent = puz.level(n - 1)
        for fc in level.pieces():
            for aid in set(fc.arc_ids):
                arc = level.arcs[aid]
                tgt = parent.arcs[arc.image].points[arc.image_index]
                idx = np.unique(np.linspace(0, len(arc.points) - 1, samples).astype(int))
                res = np.abs(puz.f(arc.points[idx]) - tgt[idx])
                worst = max(worst, float(res.max()))
    report["image_residual_max"] = worst

    # (b) pairwise nested-or-disjoint classification vs symbolic ancestry
    all_pieces = [
        (n, fc) for n in range(top + 1) for fc in puz.pieces(n)
    ]
    for n, fin in all_pieces:
        zs = _strided(fin.outline[:-1], samples)
        for m, fout in all_pieces:
            if m > n or (m == n and fout.fid == fin.fid):
                continue
            pid_in, pid_out = (n, fin.fid), (m, fout.fid)
            expect = "nested" if puz.ancestor(pid_in, m) == pid_out else "disjoint"
            delta = delta_ratio * piece_diameter(fout)
            dz = _distance_many(fout.outline, zs)
            decisive = dz > delta
            if not np.any(decisive):
                verdict = expect  # fully boundary-aligned at this resolution
            else:
                wn = _winding_many(fout.outline, zs[decisive])
                inside = int(np.sum(wn == 1))
                outside = int(np.sum(wn != 1))
                if inside and outside:
                    verdict = "violation"
                else:
                    verdict = "nested" if inside else "disjoint"
            report["pairs"] += 1
            if verdict == expect:
                report[verdict] += 1
            else:
                report["violations"].append(
                    {
                        "inner": pid_in,
                        "outer": pid_out,
                        "expected": expect,
                        "observed": verdict,
                        "delta": delta,
                    }
                )
            if m == n - 1 and fin.parent == fout.fid and verdict != "nested":
                report["parent_ok"] = False

    # (c) local degrees over each piece sum to d
    d = puz.f.degree
    for n in range(1, top + 1):
        for fc in puz.pieces(n - 1):
            total = 0
            for child in puz.pieces(n):
                if child.image == fc.fid:
                    total += 1 + len(child.criticals)
            key = f"{n - 1}:{fc.fid}"
            report["degree_sums"][key] = total
            if total != d:
                report["degree_ok"] = False
    report["ok"] = (
        not report["violations"]
        and report["parent_ok"]
        and report["degree_ok"]
    )
    return report


# ---------------------------------------------------------------------------
# the symbolic layer: nice sets, landings, children, protection, extraction


@dataclass(frozen=True)
class NiceSet:
    """A verified-nice finite union of puzzle pieces of one tower."""

    complex: PuzzleComplex
    members: Tuple[Tuple[int, int], ...]

    def __contains__(self, pid: Tuple[int, int]) -> bool:
        return tuple(pid) in self.members

    def min_depth(self) -> int:
        return min(d for d, _ in self.members)

    def max_depth(self) -> int:
        return max(d for d, _ in self.members)


def _check_tower(puz: PuzzleComplex, pids: Iterable[Tuple[int, int]]) -> List[Tuple[int, int]]:
    out = []
    for pid in pids:
        if isinstance(pid, NiceSet):
            raise PuzzleError("expected piece ids, got a NiceSet")
        d, fid = pid
        puz.piece((d, fid))
        out.append((d, fid))
    return out


def contains_piece(
    puz: PuzzleComplex, outer: Tuple[int, int], inner: Tuple[int, int]
) -> bool:
    """Symbolic containment: the inner piece refines the outer one."""
    if inner[0] < outer[0]:
        return False
    return puz.ancestor(inner, outer[0]) == tuple(outer)


def arc_in_interior(
    puz: PuzzleComplex, depth: int, aid: int, member: Tuple[int, int]
) -> bool:
    """Whether a depth-n arc lies in the interior of the given piece,
    decided on the face complex: both adjacent faces refine the piece."""
    if depth < member[0]:
        return False
    level = puz.level(depth)
    left, right = level.arc_faces[aid]
    for fid in (left, right):
        if fid == level.outer:
            return False
        if puz.ancestor((depth, fid), member[0]) != tuple(member):
            return False
    return True


def is_nice(
    puz: PuzzleComplex, pids: Iterable[Tuple[int, int]]
) -> Tuple[bool, Optional[Dict]]:
    """Symbolic niceness: no forward iterate of any boundary arc of the
    union enters the interior of any member.

    Arc orbits are tracked through the recorded image pointers, so the scan
    is exact on the symbolic layer and bounded by the arc depth.  Returns
    (verdict, witness); the witness names the offending arc, iterate and
    member."""
    members = _check_tower(puz, pids)
    if not members:
        return True, None
    for src in members:
        level = puz.level(src[0])
        for aid in set(puz.face(src).arc_ids):
            # points interior to another member are not on the union boundary
            if any(
                m != src and arc_in_interior(puz, src[0], aid, m) for m in members
            ):
                continue
            depth, cur = src[0], aid
            k = 0
            while depth > 0:
                arc = puz.level(depth).arcs[cur]
                if arc.image is None:
                    break
                depth, cur, k = depth - 1, arc.image, k + 1
                for m in members:
                    if arc_in_interior(puz, depth, cur, m):
                        return False, {
                            "member": src,
                            "arc": aid,
                            "iterate": k,
                            "enters": m,
                            "image_arc": cur,
                        }
    return True, None


def _first_landing(
    puz: PuzzleComplex,
    pid: Tuple[int, int],
    members: Sequence[Tuple[int, int]],
    budget: int,
    min_time: int = 0,
) -> Optional[Tuple[int, Tuple[int, int], Tuple[int, int]]]:
    """Smallest k >= min_time with f^k(piece) inside a member, tracked on
    image pointers.  Returns (k, member, f^k(piece)) or None."""
    depth_floor = min(d for d, _ in members)
    cur = tuple(pid)
    k = 0
    while cur[0] >= depth_floor and k <= budget:
        if k >= min_time:
            for m in members:
                if contains_piece(puz, m, cur):
                    return k, m, cur
        nxt = puz.image_pid(cur)
        if nxt is None:
            break
        cur, k = nxt, k + 1
    return None


def union_nice(
    puz: PuzzleComplex, pids: Iterable[Tuple[int, int]], budget: int = 10_000
) -> NiceSet:
    """Build a NiceSet, certifying the union lemma hypotheses.

    Same-depth pieces are pairwise disjoint faces, so their union is nice
    outright.  Deeper pieces are added one at a time; each addition must
    not be strictly contained in a component of the first entry domain of
    the set built so far.  The result is re-verified symbolically."""
    members = sorted(set(_check_tower(puz, pids)))
    if not members:
        return NiceSet(complex=puz, members=())
    depths = sorted({d for d, _ in members})
    base = [m for m in members if m[0] == depths[0]]
    acc: List[Tuple[int, int]] = list(base)
    for m in members:
        if m in acc:
            continue
        if any(contains_piece(puz, a, m) or contains_piece(puz, m, a) for a in acc):
            raise PuzzleError(
                f"piece {m} overlaps the union; members must be disjoint"
            )
        if m[0] < max(d for d, _ in acc):
            raise PuzzleError(
                f"piece {m} is shallower than an existing member; add pieces "
                f"in depth order"
            )
        landing = _first_landing(puz, m, acc, budget, min_time=1)
        if landing is not None:
            k, tgt, img = landing
            comp_depth = tgt[0] + k
            if m[0] > comp_depth:
                raise PuzzleError(
                    f"piece {m} is strictly inside a first-entry component "
                    f"(entry time {k} into {tgt}); the union would not be nice"
                )
        acc.append(m)
    ok, witness = is_nice(puz, acc)
    if not ok:
        raise PuzzleError(f"union failed the symbolic niceness scan: {witness}")
    return NiceSet(complex=puz, members=tuple(sorted(acc)))


def first_return_structure(
    puz: PuzzleComplex, nice: NiceSet, budget: int = 10_000
) -> Dict:
    """Landing and return tables for a nice union of pieces.

    The landing table records, for every piece of the tower that lands, the
    first time k >= 0 and the member hit; the entry set is the landing
    domain minus the members themselves; the returns table lists the exact
    components of the first return domain (pieces mapping onto a member
    with no earlier entry of the piece orbit)."""
    if nice.complex is not puz:
        raise MixedTowerError("the nice set belongs to a different tower")
    members = list(nice.members)
    landing: Dict[Tuple[int, int], Dict] = {}
    absent: List[Tuple[int, int]] = []
    for n in range(puz.depth + 1):
        for fc in puz.pieces(n):
            pid = (n, fc.fid)
            hit = _first_landing(puz, pid, members, budget)
            if hit is None:
                absent.append(pid)
                continue
            k, m, img = hit
            landing[pid] = {"time": k, "member": m, "image": img}
    entry = sorted(pid for pid in landing if landing[pid]["time"] >= 1)
    returns: Dict[Tuple[int, int], Dict] = {}
    for n in range(puz.depth + 1):
        for fc in puz.pieces(n):
            pid = (n, fc.fid)
            host = next((a for a in members if contains_piece(puz, a, pid)), None)
            if host is None:
                continue
            hit = _first_landing(puz, pid, members, budget, min_time=1)
            if hit is None:
                continue
            k, m, img = hit
            if pid[0] == m[0] + k:  # maps exactly onto the member: a component
                returns[pid] = {"time": k, "target": m, "host": host}
    return {
        "members": members,
        "landing": landing,
        "entry": entry,
        "returns": returns,
        "absent": absent,
    }


# ---------------------------------------------------------------------------
# children of critical pieces


def _is_child(
    puz: PuzzleComplex,
    parent: Tuple[int, int],
    piece: Tuple[int, int],
    k: int,
) -> bool:
    """f^k maps the piece onto the parent and no earlier image re-enters it."""
    n = parent[0]
    img = piece
    for i in range(1, k + 1):
        img = puz.image_pid(img)
        if img is None:
            return False
        # the image is shallower, so meeting the piece means containing it
        if i < k and puz.ancestor(piece, n + k - i) == img:
            return False
    return img == parent


def children(
    puz: PuzzleComplex, ci: int, n: int, budget: int = 10_000
) -> List[Tuple[int, Tuple[int, int]]]:
    """All materialized children of the depth-n piece around critical point ci.

    A child k generations down maps onto the parent under f^k while its
    earlier images stay off it.  Only pieces down to the materialized
    bottom of the tower can be inspected, so the list is complete relative
    to that horizon."""
    parent = puz.critical_piece(ci, n)
    if parent is None:
        raise PuzzleError(
            f"critical point {ci} is not interior to a piece at depth {n}"
        )
    out: List[Tuple[int, Tuple[int, int]]] = []
    for k in range(1, min(budget, puz.depth - n) + 1):
        piece = puz.critical_piece(ci, n + k)
        if piece is None:
            raise PuzzleError(
                f"critical point {ci} is not interior to a piece at depth {n + k}"
            )
        if _is_child(puz, parent, piece, k):
            out.append((k, piece))
    return out


def first_child(
    puz: PuzzleComplex, ci: int, n: int, budget: int = 10_000
) -> Tuple[int, Tuple[int, int]]:
    """The component of the first return domain holding the critical point.

    k1 is the first time the critical orbit re-enters its depth-n piece;
    the child is the depth-(n + k1) piece around the critical point."""
    parent = puz.critical_piece(ci, n)
    if parent is None:
        raise PuzzleError(
            f"critical point {ci} is not interior to a piece at depth {n}"
        )
    for k in range(1, budget + 1):
        if puz.orbit_piece(ci, k, n) != parent:
            continue
        if n + k > puz.depth:
            raise BudgetError(
                f"first child of the depth-{n} piece needs depth {n + k}; "
                f"the tower stops at {puz.depth}"
            )
        piece = puz.critical_piece(ci, n + k)
        if piece is None or not _is_child(puz, parent, piece, k):
            raise PuzzleError(
                f"return of critical point {ci} at time {k} does not close "
                f"into a child piece"
            )
        return k, piece
    raise BudgetError(
        f"critical point {ci} does not return to its depth-{n} piece "
        f"within {budget} iterates"
    )


def second_child(
    puz: PuzzleComplex, ci: int, n: int, budget: int = 10_000
) -> Tuple[int, Tuple[int, int]]:
    """The child after the orbit first leaves the first-child block.

    With k1 the first return time, take the smallest m whose multiple
    m * k1 throws the critical orbit out of the first child's own piece,
    then the first later re-entry into the depth-n piece; that return time
    k2 = m * k1 + l yields a child distinct from the first one."""
    k1, first = first_child(puz, ci, n, budget)
    parent = puz.critical_piece(ci, n)
    m = None
    for j in range(1, budget // k1 + 1):
        if puz.orbit_piece(ci, j * k1, n + k1) != first:
            m = j
            break
    if m is None:
        raise BudgetError(
            f"critical orbit of {ci} stays in its first child along "
            f"{k1}-blocks within {budget} iterates"
        )
    k2 = None
    for t in range(1, budget - m * k1 + 1):
        if puz.orbit_piece(ci, m * k1 + t, n) == parent:
            k2 = m * k1 + t
            break
    if k2 is None:
        raise BudgetError(
            f"critical orbit of {ci} does not re-enter its depth-{n} piece "
            f"after leaving the first child, within {budget} iterates"
        )
    if n + k2 > puz.depth:
        raise BudgetError(
            f"second child of the depth-{n} piece needs depth {n + k2}; "
            f"the tower stops at {puz.depth}"
        )
    piece = puz.critical_piece(ci, n + k2)
    if piece is None or not _is_child(puz, parent, piece, k2):
        raise PuzzleError(
            f"second return of critical point {ci} at time {k2} does not "
            f"close into a child piece"
        )
    return k2, piece


def find_protected_child(
    puz: PuzzleComplex,
    ci: int,
    start_depth: int,
    budget: int = 10_000,
    delta_ratio: float = 1e-4,
    samples: int = 256,
) -> Tuple[int, int, Dict]:
    """Walk successive second children until a pair nests with margin.

    Starting from the given depth, each step replaces the current depth n
    by n + k2 where k2 is the second-child return time.  The walk stops at
    the first pair whose child sits strictly inside the parent piece with
    clearance above delta_ratio times the parent diameter, and returns
    (n, k2, report).  The report records the visited cascade, the
    generation gaps (each expected to exceed the depth it departs from),
    and the measured margins."""
    if start_depth > puz.depth:
        raise BudgetError(
            f"start depth {start_depth} exceeds the materialized depth "
            f"{puz.depth}"
        )
    depths = [start_depth]
    gaps: List[int] = []
    margins: List[float] = []
    while True:
        n = depths[-1]
        k, child = second_child(puz, ci, n, budget)
        parent = puz.critical_piece(ci, n)
        ok, margin = nested_margin(puz, child, parent, samples=samples)
        delta = delta_ratio * piece_diameter(puz.face(parent))
        gaps.append(k)
        margins.append(margin)
        depths.append(n + k)
        if ok and margin > delta:
            return n, k, {
                "critical": ci,
                "cascade": list(depths),
                "gaps": list(gaps),
                "margins": list(margins),
                "margin": margin,
                "delta": delta,
                "gap_growth": [g > d for g, d in zip(gaps, depths)],
            }


# ---------------------------------------------------------------------------
# protected unions and the return structure they guarantee


def _pieces_disjoint(
    puz: PuzzleComplex, a: Tuple[int, int], b: Tuple[int, int]
) -> bool:
    """Pieces are nested or disjoint; disjoint means neither refines the other."""
    if a == b:
        return False
    if a[0] >= b[0]:
        return puz.ancestor(a, b[0]) != b
    return puz.ancestor(b, a[0]) != a


def protected_return_report(
    puz: PuzzleComplex,
    inner: Sequence[Tuple[int, int]],
    outer: Sequence[Tuple[int, int]],
    landing_members: Sequence[Tuple[int, int]] = (),
    budget: int = 10_000,
    delta_ratio: float = 1e-4,
    samples: int = 256,
) -> Dict:
    """Check a protected pair of piece unions and its first-return shape.

    The hypotheses: both unions are nice, every inner component sits
    strictly inside an outer component with positive sampled margin, and
    whenever a forward image of an inner component has boundary meeting
    the open outer union, the intermediate image pieces stay disjoint
    from the inner union.  Image pieces are tracked down to depth zero;
    from there on the boundary lies in the initial graph, which never
    meets the interior of any piece, so the scan is complete.

    The conclusion: every first-return component of inner united with the
    given landing members is one of those members or compactly inside the
    inner union."""
    xs = sorted(set(map(tuple, inner)))
    ys = sorted(set(map(tuple, outer)))
    report: Dict = {"inner": xs, "outer": ys, "ok": True}

    nice_x, wit_x = is_nice(puz, xs)
    nice_y, wit_y = is_nice(puz, ys)
    report["inner_nice"] = nice_x
    report["outer_nice"] = nice_y
    if not (nice_x and nice_y):
        report["ok"] = False
        report["nice_witness"] = wit_x or wit_y

    pairs = []
    for x in xs:
        host = next(
            (y for y in ys if y != x and contains_piece(puz, y, x)), None
        )
        if host is None:
            report["ok"] = False
            pairs.append({"inner": x, "outer": None, "ok": False})
            continue
        good, margin = nested_margin(puz, x, host, samples=samples)
        delta = delta_ratio * piece_diameter(puz.face(host))
        entry = {
            "inner": x,
            "outer": host,
            "margin": margin,
            "delta": delta,
            "ok": bool(good and margin > delta),
        }
        if not entry["ok"]:
            report["ok"] = False
        pairs.append(entry)
    report["containment"] = pairs

    # disjointedness hypothesis on the symbolic layer
    events = []
    disjoint_ok = True
    for x in xs:
        img = x
        for k in range(1, x[0] + 1):
            img = puz.image_pid(img)
            if img is None:
                break
            touches = any(
                arc_in_interior(puz, img[0], aid, y)
                for aid in puz.face(img).arc_ids
                for y in ys
            )
            if not touches:
                continue
            bad = [
                (j, xc)
                for j, im in enumerate(_image_chain(puz, x, k), start=1)
                for xc in xs
                if not _pieces_disjoint(puz, im, xc)
            ]
            events.append({"component": x, "time": k, "violations": bad})
            if bad:
                disjoint_ok = False
    report["disjointedness_events"] = events
    report["disjointedness_ok"] = disjoint_ok
    if not disjoint_ok:
        report["ok"] = False

    # conclusion: shape of the first return domain of inner + landing members
    members = sorted(set(xs) | set(map(tuple, landing_members)))
    conclusion = []
    try:
        nice = union_nice(puz, members, budget=budget)
    except PuzzleError as err:
        report["ok"] = False
        report["conclusion_error"] = str(err)
        return report
    structure = first_return_structure(puz, nice, budget=budget)
    for pid, row in sorted(structure["returns"].items()):
        if pid in landing_members:
            conclusion.append({"component": pid, "kind": "landing-member"})
            continue
        host = next(
            (x for x in xs if x != pid and contains_piece(puz, x, pid)), None
        )
        good = False
        margin = 0.0
        if host is not None:
            good, margin = nested_margin(puz, pid, host, samples=samples)
        conclusion.append(
            {
                "component": pid,
                "kind": "compact-in-inner",
                "host": host,
                "margin": margin,
                "ok": bool(good and margin > 0.0),
            }
        )
        if not (good and margin > 0.0):
            report["ok"] = False
    report["returns"] = conclusion
    return report


def _image_chain(
    puz: PuzzleComplex, pid: Tuple[int, int], k: int
) -> List[Tuple[int, int]]:
    out = []
    img = pid
    for _ in range(k):
        img = puz.image_pid(img)
        if img is None:
            break
        out.append(img)
    return out


# ---------------------------------------------------------------------------
# box-structure extraction


def _critical_classes(
    puz: PuzzleComplex, budget: int, boundary_tol: Optional[float] = None
) -> Dict[int, Dict]:
    """Sort critical points by where their orbits end up.

    "boundary": the orbit comes within tolerance of the invariant disk
    boundary (the tolerance defaults to twice the largest sampling gap of
    the boundary polyline, so a true boundary point between samples is
    still caught).  "disk": the orbit enters the open disk.  "escaping":
    it leaves the escape radius.  "free" otherwise, relative to the
    budget."""
    disk = next(fc for fc in puz.level(0).faces if fc.kind == "siegel")
    if boundary_tol is None:
        boundary_tol = 2.0 * float(np.abs(np.diff(disk.outline)).max())
    out: Dict[int, Dict] = {}
    for ci in range(len(puz.critical_points())):
        kind = "free"
        time = None
        closest = math.inf
        for j in range(budget + 1):
            z = puz.orbit_point(ci, j)
            if abs(z) > puz.f.escape_radius():
                kind, time = "escaping", j
                break
            d = _segment_distance(disk.outline, z)
            closest = min(closest, d)
            if d < boundary_tol:
                kind, time = "boundary", j
                break
            if winding_number(disk.outline, z) == 1:
                kind, time = "disk", j
                break
        out[ci] = {
            "kind": kind,
            "time": time,
            "min_boundary_distance": closest,
            "tolerance": boundary_tol,
        }
    return out


def _orbit_meets(
    puz: PuzzleComplex,
    ci: int,
    members: Sequence[Tuple[int, int]],
    budget: int,
    start: int = 0,
) -> Optional[Tuple[int, Tuple[int, int]]]:
    """First (time, member) at which the critical orbit sits in a member."""
    for j in range(start, budget + 1):
        for m in members:
            if puz.orbit_piece(ci, j, m[0]) == m:
                return j, m
    return None


def _certify_start_depth(
    puz: PuzzleComplex,
    star: Sequence[int],
    recurrent: Dict[int, bool],
    budget: int,
) -> Tuple[int, Dict]:
    """Smallest depth where the critical separation assumptions hold.

    Distinct free criticals must sit in different pieces at the chosen
    depth (sharing a piece is only tolerated when they still share it at
    the materialized bottom, which the budget cannot tell apart from a
    shared fiber).  When one orbit visits the depth-s piece of another
    critical, it must also visit the deepest materialized piece around
    that critical; a non-recurrent critical must not re-enter its own
    depth-s piece at all within the budget."""
    deepest = puz.depth
    notes: List[str] = []
    for s in range(deepest + 1):
        ok = True
        for ci in star:
            own_s = puz.critical_piece(ci, s)
            own_deep = puz.critical_piece(ci, deepest)
            if own_s is None or own_deep is None:
                raise PuzzleError(
                    f"critical point {ci} is not interior to pieces at "
                    f"depth {s} and {deepest}"
                )
            if not recurrent[ci]:
                t = next(
                    (
                        j
                        for j in range(1, budget + 1)
                        if puz.orbit_piece(ci, j, s) == own_s
                    ),
                    None,
                )
                if t is not None:
                    notes.append(
                        f"depth {s}: non-recurrent critical {ci} re-enters "
                        f"its piece at time {t}"
                    )
                    ok = False
                    break
            for cj in star:
                if cj == ci:
                    continue
                other_s = puz.critical_piece(cj, s)
                other_deep = puz.critical_piece(cj, deepest)
                if other_s == own_s and other_deep != own_deep:
                    notes.append(
                        f"depth {s}: criticals {ci},{cj} share the piece "
                        f"but separate deeper"
                    )
                    ok = False
                    break
                enters = any(
                    puz.orbit_piece(ci, j, s) == other_s
                    for j in range(1, budget + 1)
                )
                if enters and not any(
                    puz.orbit_piece(ci, j, deepest) == other_deep
                    for j in range(1, budget + 1)
                ):
                    notes.append(
                        f"depth {s}: orbit of {ci} enters the piece of {cj} "
                        f"without reaching its deepest piece"
                    )
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return s, {"notes": notes}
    raise PuzzleError(
        "no start depth within the materialized tower supports the "
        "critical separation assumptions: " + "; ".join(notes[-3:])
    )


def _critical_multiplicity(f, c: complex, tol: float = 1e-7) -> int:
    """Order of the critical point: 1 when f'' does not vanish there."""
    # ascending coefficients of f, constant term zero
    asc = [0j] + [complex(a) for a in f.coeffs]
    scale = max(1.0, abs(c)) ** len(asc) * max(abs(a) for a in asc)
    order = 0
    for _ in range(len(asc)):
        asc = [k * asc[k] for k in range(1, len(asc))]  # differentiate
        val = sum(a * c ** k for k, a in enumerate(asc))
        order += 1
        if abs(val) > tol * scale:
            break
    return max(1, order - 1)


def extract_box_mapping(
    puz: PuzzleComplex,
    budget: int = 10_000,
    delta_ratio: float = 1e-4,
    samples: int = 256,
    boundary_tol: Optional[float] = None,
):
    """Build the first-return box structure over the free critical points.

    Free criticals (orbits staying off the invariant disk and its
    boundary, not escaping, all relative to the budget) are enclosed in
    protected piece pairs: recurrent ones through the second-child
    cascade, the rest through a one-step-deeper enclosure.  The range
    union is the inner pieces plus the landing components of criticals
    that fall into them; the domain is its first-return table.  Raises
    BudgetError when the materialized tower is too shallow and
    PuzzleError when the structure cannot be certified.  With no free
    criticals the returned mapping is empty and vacuously valid."""
    from . import boxmap

    classes = _critical_classes(puz, budget, boundary_tol)
    star = sorted(ci for ci, c in classes.items() if c["kind"] == "free")
    report: Dict = {"criticals": classes, "budget": budget, "star": star}

    if not star:
        report["note"] = "no free critical points: empty box structure"
        mapping = boxmap.from_puzzle(puz, [], {}, [], report)
        mapping.report["validation"] = boxmap.validate_box_mapping(
            mapping, budget=budget
        )
        return mapping

    deepest = puz.depth
    recurrent = {
        ci: any(
            puz.orbit_piece(ci, j, deepest) == puz.critical_piece(ci, deepest)
            for j in range(1, budget + 1)
        )
        for ci in star
    }
    report["recurrent"] = recurrent
    s, cert = _certify_start_depth(puz, star, recurrent, budget)
    report["start_depth"] = s
    report["start_depth_notes"] = cert["notes"]

    # induction over recurrent criticals not yet falling into the outer union
    x_comps: List[Tuple[int, int]] = []
    y_comps: List[Tuple[int, int]] = []
    trace: List[Dict] = []
    while True:
        remaining = [
            ci
            for ci in star
            if recurrent[ci] and _orbit_meets(puz, ci, y_comps, budget) is None
        ]
        if not remaining:
            break
        ci = remaining[0]
        start = max([s] + [x[0] + 1 for x in x_comps])
        n, k, cascade = find_protected_child(
            puz, ci, start, budget, delta_ratio, samples
        )
        outer_piece = puz.critical_piece(ci, n)
        inner_piece = puz.critical_piece(ci, n + k)
        for m in y_comps:
            if not _pieces_disjoint(puz, outer_piece, m):
                raise PuzzleError(
                    f"protected piece of critical {ci} overlaps an earlier "
                    f"outer component {m}"
                )
        x_comps.append(inner_piece)
        y_comps.append(outer_piece)
        union_nice(puz, x_comps, budget=budget)
        union_nice(puz, y_comps, budget=budget)
        trace.append(
            {"critical": ci, "outer": outer_piece, "inner": inner_piece,
             "cascade": cascade}
        )

    # remaining free criticals whose orbits never reach the inner union
    leftovers = [
        ci
        for ci in star
        if _orbit_meets(puz, ci, x_comps, budget) is None
    ]
    if leftovers:
        ell = max((y[0] for y in y_comps), default=s)
        if ell + 1 > deepest:
            raise BudgetError(
                f"enclosures for stray criticals need depth {ell + 1}; "
                f"the tower stops at {deepest}"
            )
        for ci in leftovers:
            outer_piece = puz.critical_piece(ci, ell + 1)
            if outer_piece is None:
                raise PuzzleError(
                    f"critical point {ci} is not interior to a piece at "
                    f"depth {ell + 1}"
                )
            inner_piece = None
            margin_rec = None
            for p in range(ell + 2, deepest + 1):
                cand = puz.critical_piece(ci, p)
                if cand is None:
                    raise PuzzleError(
                        f"critical point {ci} is not interior to a piece "
                        f"at depth {p}"
                    )
                good, margin = nested_margin(
                    puz, cand, outer_piece, samples=samples
                )
                if good and margin > delta_ratio * piece_diameter(
                    puz.face(outer_piece)
                ):
                    inner_piece = cand
                    margin_rec = margin
                    break
            if inner_piece is None:
                raise BudgetError(
                    f"no certified enclosure for critical {ci} inside its "
                    f"depth-{ell + 1} piece down to depth {deepest}"
                )
            x_comps.append(inner_piece)
            y_comps.append(outer_piece)
            trace.append(
                {"critical": ci, "outer": outer_piece, "inner": inner_piece,
                 "cascade": None, "margin": margin_rec}
            )
        union_nice(puz, x_comps, budget=budget)
        union_nice(puz, y_comps, budget=budget)
    report["protection_trace"] = trace

    # range: inner pieces plus critical landing components into them
    v_comps = list(x_comps)
    landing_members: List[Tuple[int, int]] = []
    for ci in star:
        if any(puz.critical_piece(ci, x[0]) == x for x in x_comps):
            continue
        hit = _orbit_meets(puz, ci, x_comps, budget, start=1)
        if hit is None:
            raise PuzzleError(
                f"free critical point {ci} neither sits in nor reaches the "
                f"protected union within the budget"
            )
        j, m = hit
        if m[0] + j > deepest:
            raise BudgetError(
                f"landing component of critical {ci} needs depth {m[0] + j}; "
                f"the tower stops at {deepest}"
            )
        comp = puz.critical_piece(ci, m[0] + j)
        chain = _image_chain(puz, comp, j)
        if comp is None or not chain or chain[-1] != m:
            raise PuzzleError(
                f"landing component of critical {ci} does not map exactly "
                f"onto its target"
            )
        if comp not in v_comps:
            v_comps.append(comp)
            landing_members.append(comp)
    report["landing_members"] = landing_members

    protection = protected_return_report(
        puz, x_comps, y_comps, landing_members, budget, delta_ratio, samples
    )
    report["protection"] = protection

    for v in v_comps:
        stray = [ci for ci in puz.face(v).criticals if ci not in star]
        if stray:
            raise PuzzleError(
                f"non-free critical points {stray} sit inside range "
                f"component {v}"
            )

    v_nice = union_nice(puz, v_comps, budget=budget)
    structure = first_return_structure(puz, v_nice, budget=budget)
    mult = {ci: _critical_multiplicity(puz.f, puz.critical_points()[ci])
            for ci in star}
    branches: Dict[Tuple[int, int], Dict] = {}
    for upid, row in sorted(structure["returns"].items()):
        k = row["time"]
        degree = 1
        img = upid
        for _ in range(k):
            fc = puz.face(img)
            stray = [ci for ci in fc.criticals if ci not in star]
            if stray:
                raise PuzzleError(
                    f"non-free critical points {stray} sit inside a return "
                    f"branch through {img}"
                )
            degree *= 1 + sum(mult[ci] for ci in fc.criticals)
            img = puz.image_pid(img)
        if img != row["target"]:
            raise PuzzleError(
                f"return branch from {upid} does not land on its target"
            )
        branches[upid] = {
            "time": k,
            "target": row["target"],
            "host": row["host"],
            "degree": degree,
        }

    crit_rows = []
    for ci in star:
        vc = next(
            (v for v in v_comps if puz.critical_piece(ci, v[0]) == v), None
        )
        uc = next(
            (u for u in branches if puz.critical_piece(ci, u[0]) == u), None
        )
        crit_rows.append(
            {
                "index": ci,
                "point": puz.critical_points()[ci],
                "multiplicity": mult[ci],
                "v_component": vc,
                "u_component": uc,
            }
        )
    mapping = boxmap.from_puzzle(puz, v_comps, branches, crit_rows, report)
    mapping.report["validation"] = boxmap.validate_box_mapping(
        mapping, budget=budget
    )
    return mapping


# ---------------------------------------------------------------------------
# serialization helpers


def piece_table(puz: PuzzleComplex) -> List[Dict]:
    """JSON-ready summary of every bounded face of the tower."""
    rows = []
    for n in range(puz.depth + 1):
        level = puz.level(n)
        for fc in level.faces:
            if fc.fid == level.outer:
                continue
            rows.append(
                {
                    "depth": n,
                    "id": fc.fid,
                    "kind": fc.kind,
                    "parent": fc.parent,
                    "image": fc.image,
                    "criticals": list(fc.criticals),
                    "touches_siegel": fc.touches_siegel,
                    "area": fc.area,
                }
            )
    return rows


def arc_rows(puz: PuzzleComplex, depth: int) -> List[Tuple]:
    """CSV-ready sample rows (arc id, kind, label, index, re, im)."""
    level = puz.level(depth)
    rows = []
    for aid in sorted(level.arcs):
        arc = level.arcs[aid]
        for i, z in enumerate(arc.points):
            rows.append(
                (aid, arc.kind, arc.label, i, float(z.real), float(z.imag))
            )
    return rows
