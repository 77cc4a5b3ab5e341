"""Tower combinatorics for nested families of tree branched covers.

A tower stacks finitely many levels.  Level 0 is a boundary circle carrying
either an irrational rotation or an angle-multiplying power map; each level
n >= 1 is a tree branched cover whose root vertex is the closure of the whole
level below.  Every non-loop edge is tagged with the address of its attachment
point on the parent vertex's boundary, and those tags are the glue between
levels: a tag at level n is an address one level down, bottoming out in exact
circle angles.

The module computes recursive point addresses, boundary-angle lifts through
iterated covers, root-vertex selection inside branched preimages, and a
depth-bounded combinatorial-equivalence verdict between two towers with a
verified conjugacy or a localized obstruction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

from .exact import (
    ExactArithmeticError,
    RhoAngle,
    RotationNumber,
    ccw_distance,
    cyclic_between,
)
from .treecore import (
    ExtensionError,
    InvalidTreeError,
    OrientedTree,
    TreeBranchedCover,
    TreeIso,
    extend_conjugacy,
    generation,
    validate_branched_cover,
)


class TowerError(ValueError):
    """Malformed tower data or an underspecified point descriptor."""


AngleInput = Union[RhoAngle, Fraction, int, str]


def _as_angle(t: AngleInput) -> RhoAngle:
    if isinstance(t, RhoAngle):
        return t
    return RhoAngle.rational(Fraction(t))


# ---------------------------------------------------------------------------
# addresses


@dataclass(frozen=True)
class Address:
    """Recursive coordinate of a point in a tower.

    A level-0 address is a single exact circle angle (``angle`` is None for
    the marker "interior of the level-0 disk").  A level-n address records the
    rooted path to the vertex carrying the point -- ``joints`` lists the
    level-(n-1) addresses of the joint edges along that path -- followed by
    the point's address ``point`` one level down within that vertex, or None
    for its interior.  ``cut`` marks a truncation stub; two addresses agree to
    depth k exactly when their k-truncations are equal.
    """

    level: int
    joints: Tuple["Address", ...] = ()
    point: Optional["Address"] = None
    angle: Optional[RhoAngle] = None
    cut: bool = False

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        if self.cut:
            if self.joints or self.point is not None or self.angle is not None:
                raise TowerError("truncation stub carries no payload")
            return
        if self.level == 0:
            if self.joints or self.point is not None:
                raise TowerError("a level-0 address is a bare angle")
        else:
            if self.angle is not None:
                raise TowerError("only level-0 addresses carry an angle")
            for j in self.joints:
                if j.level != self.level - 1:
                    raise TowerError("joint address at the wrong level")
            if self.point is not None and self.point.level != self.level - 1:
                raise TowerError("point address at the wrong level")

    def __str__(self) -> str:
        if self.cut:
            return "..."
        if self.level == 0:
            return str(self.angle) if self.angle is not None else "*"
        inner = ",".join(str(j) for j in self.joints)
        pt = str(self.point) if self.point is not None else "*"
        return f"([{inner}];{pt})"


def angle_address(t: AngleInput) -> Address:
    return Address(0, angle=_as_angle(t))


def truncate_address(adr: Address, depth: int) -> Address:
    """Cut the recursion below ``depth`` nesting levels.

    Truncation commutes with itself (cutting at depth k then k' <= k equals
    cutting at k' directly), which is what makes per-depth verdicts monotone.
    """
    if adr.cut:
        return adr
    if depth <= 0:
        return Address(adr.level, cut=True)
    if adr.level == 0:
        return adr
    return Address(
        adr.level,
        tuple(truncate_address(j, depth - 1) for j in adr.joints),
        truncate_address(adr.point, depth - 1) if adr.point is not None else None,
        None,
    )


# ---------------------------------------------------------------------------
# tower data


@dataclass(frozen=True)
class RootDynamics:
    """Level-0 boundary dynamics: an exact rotation or a power map."""

    kind: str
    rho: Optional[RotationNumber] = None
    degree: int = 1

    def __post_init__(self):
        if self.kind not in ("rotation", "power"):
            raise TowerError(f"unknown root dynamics kind {self.kind!r}")
        if self.kind == "rotation":
            if self.rho is None or self.rho.is_rational:
                raise TowerError("rotation dynamics needs an irrational rotation number")
        else:
            if self.degree < 2:
                raise TowerError("power dynamics needs degree >= 2")

    def boundary_step(self, t: AngleInput) -> RhoAngle:
        t = _as_angle(t)
        if self.kind == "rotation":
            return t + RhoAngle.of_rho(1, self.rho)
        return t.scale(self.degree)


@dataclass(frozen=True)
class VertexInternals:
    """Materialized interior of one tower vertex, for root selection.

    ``tree`` is the copy of the level below carried inside the vertex;
    ``params`` gives each interior vertex's anchor parameter on the host
    boundary; ``image_vertex`` names the interior image of each interior
    vertex inside the host's image; ``joint_lift`` is the parameter of the
    host's own joint (None when the host is the root of its level).
    """

    tree: OrientedTree
    params: Mapping[str, RhoAngle]
    image_vertex: Mapping[str, str]
    degree: int = 1
    joint_lift: Optional[RhoAngle] = None


@dataclass(frozen=True)
class TowerLevel:
    cover: TreeBranchedCover
    attach: Mapping[int, Address]
    labels: Mapping[str, str] = field(default_factory=dict)
    internals: Mapping[str, VertexInternals] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "attach", dict(self.attach))
        object.__setattr__(self, "labels", dict(self.labels))
        object.__setattr__(self, "internals", dict(self.internals))


@dataclass(frozen=True)
class FatouTowerSpec:
    root: RootDynamics
    levels: Tuple[TowerLevel, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))

    @property
    def height(self) -> int:
        return len(self.levels)

    def level(self, n: int) -> TowerLevel:
        if not 1 <= n <= len(self.levels):
            raise TowerError(f"tower has no level {n}")
        return self.levels[n - 1]


def _leaf_angles(adr: Address) -> List[RhoAngle]:
    if adr.cut:
        return []
    if adr.level == 0:
        return [adr.angle] if adr.angle is not None else []
    out: List[RhoAngle] = []
    for j in adr.joints:
        out.extend(_leaf_angles(j))
    if adr.point is not None:
        out.extend(_leaf_angles(adr.point))
    return out


def _edge_parent(tree: OrientedTree, i: int, heights: Mapping[str, int]) -> str:
    u, v = tree.edges[i]
    return u if heights[u] <= heights[v] else v


def validate_tower(spec: FatouTowerSpec) -> List[str]:
    """Violation report; empty means the tower is admissible."""
    errs: List[str] = []
    for n, lvl in enumerate(spec.levels, start=1):
        for msg in validate_branched_cover(lvl.cover):
            errs.append(f"level {n}: {msg}")
        tree = lvl.cover.tree
        if tree.validate():
            continue  # already reported above
        heights = tree.heights()
        if set(lvl.attach) != set(range(len(tree.edges))):
            errs.append(f"level {n}: attachment tags must cover every edge")
            continue
        by_parent: Dict[str, List[Address]] = {}
        for i, adr in lvl.attach.items():
            if adr.cut:
                errs.append(f"level {n}: edge {i} tagged with a truncation stub")
                continue
            if adr.level != n - 1:
                errs.append(f"level {n}: edge {i} tag is not a level-{n - 1} address")
                continue
            by_parent.setdefault(_edge_parent(tree, i, heights), []).append(adr)
            for t in _leaf_angles(adr):
                if spec.root.kind == "power" and t.b != 0:
                    errs.append(f"level {n}: edge {i} angle has an irrational part")
                if t.rho is not None and spec.root.rho is not None and t.rho != spec.root.rho:
                    errs.append(f"level {n}: edge {i} angle built over a foreign rotation number")
        for parent, tags in by_parent.items():
            for a in range(len(tags)):
                for b in range(a + 1, len(tags)):
                    if tags[a] == tags[b]:
                        errs.append(
                            f"level {n}: vertex {parent!r} has two edges attached at {tags[a]}"
                        )
        for key in lvl.labels:
            if key.startswith("e"):
                continue
            if key not in tree.vertices:
                errs.append(f"level {n}: label for unknown vertex {key!r}")
        for v, itn in lvl.internals.items():
            if v not in tree.vertices:
                errs.append(f"level {n}: internals for unknown vertex {v!r}")
                continue
            if set(itn.params) != set(itn.tree.vertices):
                errs.append(f"level {n}: internals of {v!r} miss anchor parameters")
            if itn.degree < 1:
                errs.append(f"level {n}: internals of {v!r} declare degree < 1")
    return errs


# ---------------------------------------------------------------------------
# addresses of tower points


def path_word(spec: FatouTowerSpec, n: int, v: str) -> Tuple[Address, ...]:
    """Tags of the joint edges along the rooted path to vertex v at level n."""
    lvl = spec.level(n)
    path = lvl.cover.tree.rooted_path(v)
    try:
        return tuple(lvl.attach[i] for i in path.edges)
    except KeyError as e:
        raise TowerError(f"level {n}: edge {e} has no attachment tag") from None


def vertex_address(spec: FatouTowerSpec, n: int, v: str) -> Address:
    return Address(n, path_word(spec, n, v), None, None)


def edge_address(spec: FatouTowerSpec, n: int, i: int) -> Address:
    """Address of the attachment point of edge i, carried by its parent vertex.

    Loops are marked points; their carrier is the vertex they decorate.
    """
    lvl = spec.level(n)
    tree = lvl.cover.tree
    parent = _edge_parent(tree, i, tree.heights())
    if i not in lvl.attach:
        raise TowerError(f"level {n}: edge {i} has no attachment tag")
    return Address(n, path_word(spec, n, parent), lvl.attach[i], None)


def joint_angle(spec: FatouTowerSpec, n: int, v: str) -> Optional[RhoAngle]:
    """Level-0 angle of the joint of vertex v, cascading through the tags.

    Descends one level per step: a nonempty path word delegates to its first
    joint, an empty one to the point itself.  Root vertices ride up to the
    enclosing root and so have no joint; None is returned for them.
    """
    lvl = spec.level(n)
    ji = lvl.cover.tree.joint(v)
    if ji is None:
        return None
    cur = lvl.attach.get(ji)
    if cur is None:
        raise TowerError(f"level {n}: joint edge {ji} has no attachment tag")
    while cur.level > 0:
        if cur.cut:
            raise TowerError("joint cascade hit a truncation stub")
        if cur.joints:
            cur = cur.joints[0]
        elif cur.point is not None:
            cur = cur.point
        else:
            raise TowerError("joint cascade hit an interior marker")
    if cur.angle is None:
        raise TowerError("joint cascade hit an interior marker")
    return cur.angle


def address(spec: FatouTowerSpec, x, depth: int = 32) -> Address:
    """Address of a described tower point, truncated to ``depth`` levels.

    Descriptors:
      ("angle", t)           point at circle angle t on the level-0 boundary
      ("vertex", n, v)       interior of vertex v at level n
      ("edge", n, i)         attachment point of edge i at level n
      ("boundary", n, v, a)  point on the boundary of v addressed by a below
      ("joint", n, v)        cascaded joint angle of vertex v
    """
    if not isinstance(x, tuple) or not x:
        raise TowerError("point descriptor must be a non-empty tuple")
    kind = x[0]
    if kind == "angle" and len(x) == 2:
        adr = angle_address(x[1])
    elif kind == "vertex" and len(x) == 3:
        adr = vertex_address(spec, x[1], x[2])
    elif kind == "edge" and len(x) == 3:
        adr = edge_address(spec, x[1], x[2])
    elif kind == "boundary" and len(x) == 4:
        n, v, sub = x[1], x[2], x[3]
        if not isinstance(sub, Address):
            sub = angle_address(sub)
        if sub.level != n - 1:
            raise TowerError("boundary sub-address at the wrong level")
        adr = Address(n, path_word(spec, n, v), sub, None)
    elif kind == "joint" and len(x) == 3:
        t = joint_angle(spec, x[1], x[2])
        if t is None:
            raise TowerError(f"vertex {x[2]!r} is a root and has no joint")
        adr = angle_address(t)
    else:
        raise TowerError(f"underspecified point descriptor {x!r}")
    return truncate_address(adr, depth)


# ---------------------------------------------------------------------------
# boundary-angle lifts


def vertex_cover_degree(spec: FatouTowerSpec, n: int, v: str) -> int:
    """Degree of the iterated level map carrying v onto the level root."""
    cov = spec.level(n).cover
    try:
        gen = generation(cov, v)
    except InvalidTreeError as e:
        raise TowerError(str(e)) from None
    d, cur = 1, v
    for _ in range(gen):
        d *= cov.degree.get(cur, 1)
        cur = cov.vertex_map[cur]
    return d


def _joint_image_angle(spec: FatouTowerSpec, n: int, v: str) -> RhoAngle:
    """Angle on the root boundary of the iterated image of v's joint edge."""
    lvl = spec.level(n)
    cov = lvl.cover
    ei = cov.tree.joint(v)
    if ei is None:
        raise TowerError(f"vertex {v!r} is a root and has no joint")
    gen = generation(cov, v)
    for _ in range(gen):
        nxt = cov.edge_map.get(ei)
        if nxt is None:
            raise TowerError(f"level {n}: joint image of {v!r} is not materialized")
        ei = nxt
    tag = lvl.attach.get(ei)
    if tag is None:
        raise TowerError(f"level {n}: edge {ei} has no attachment tag")
    cur = tag
    while cur.level > 0:
        if cur.joints:
            raise TowerError(
                f"level {n}: joint image of {v!r} attaches inside a deeper subtree; "
                "its root-boundary angle is not determined by the tags"
            )
        if cur.point is None:
            raise TowerError("joint image address is an interior marker")
        cur = cur.point
    if cur.angle is None:
        raise TowerError("joint image address is an interior marker")
    return cur.angle


def boundary_angle_lift(spec: FatouTowerSpec, n: int, v: str, t: AngleInput) -> RhoAngle:
    """Parameter on the boundary of v of the point over root angle t.

    The boundary parameterization of v multiplies angles by the degree d of
    the iterated cover onto the level root, so a lift picks one of d branches;
    the branch is anchored by the joint: the returned parameter lies in the
    half-open window of length 1/d starting at the joint's own parameter.
    Multiplying the result by d recovers t exactly.  The root of the top level
    has no joint and lifts angles identically.
    """
    t = _as_angle(t)
    tree = spec.level(n).cover.tree
    if v not in tree.vertices:
        raise TowerError(f"level {n} has no vertex {v!r}")
    if v == tree.root:
        return t
    d = vertex_cover_degree(spec, n, v)
    if d == 1:
        return t
    tj = _joint_image_angle(spec, n, v)
    lo = tj.divide(d, 0)
    hi = lo + RhoAngle.rational(Fraction(1, d))
    for k in range(d):
        s = t.divide(d, k)
        if cyclic_between(lo, s, hi):
            return s
    raise ExactArithmeticError("no lift branch fell in the joint window")


# ---------------------------------------------------------------------------
# root selection


@dataclass(frozen=True)
class RootProblem:
    """One step of root selection inside a branched preimage.

    ``candidates`` maps the boundary preimages of the image root to their
    parameters on the host boundary; ``joint_lift`` anchors the scan.
    """

    degree: int
    candidates: Mapping[str, RhoAngle]
    joint_lift: Optional[RhoAngle] = None

    def __post_init__(self):
        object.__setattr__(self, "candidates", dict(self.candidates))


def choose_root(problem: RootProblem) -> str:
    """First root preimage met counterclockwise from the joint."""
    if not problem.candidates:
        raise TowerError("no root preimages supplied")
    if problem.degree == 1:
        if len(problem.candidates) != 1:
            raise TowerError("a degree-1 vertex has a unique root preimage")
        return next(iter(problem.candidates))
    if problem.joint_lift is None:
        raise TowerError("missing induction data: no joint parameter to anchor the scan")
    best: Optional[str] = None
    best_d: Optional[RhoAngle] = None
    for name in sorted(problem.candidates):
        dist = ccw_distance(problem.joint_lift, problem.candidates[name])
        if best_d is None or dist < best_d:
            best, best_d = name, dist
    return best


def assign_root(spec: FatouTowerSpec, n: int, v: str, _memo: Optional[Dict] = None) -> str:
    """Interior vertex of v chosen as its root, by induction on generation.

    Needs materialized internals along the iterated-image chain of v; the
    chain ends at the level root, whose interior root is its own tree root.
    """
    lvl = spec.level(n)
    tree = lvl.cover.tree
    if v not in tree.vertices:
        raise TowerError(f"level {n} has no vertex {v!r}")
    itn = lvl.internals.get(v)
    if itn is None:
        raise TowerError(f"missing induction data: vertex {v!r} has no internals")
    if v == tree.root:
        return itn.tree.root
    memo = _memo if _memo is not None else {}
    if v in memo:
        return memo[v]
    memo[v] = None  # cycle guard; generations strictly decrease along images
    image = lvl.cover.vertex_map[v]
    image_root = assign_root(spec, n, image, memo)
    if image_root is None:
        raise TowerError("root selection cycled; vertex map is not generation-graded")
    candidates = {
        w: itn.params[w] for w, im in itn.image_vertex.items() if im == image_root
    }
    if not candidates:
        raise TowerError(f"no interior preimage of {image_root!r} inside {v!r}")
    if itn.degree == 1:
        if len(candidates) != 1:
            raise TowerError(f"degree-1 vertex {v!r} has several root preimages")
        choice = next(iter(candidates))
    else:
        choice = choose_root(RootProblem(itn.degree, candidates, itn.joint_lift))
    memo[v] = choice
    return choice


# ---------------------------------------------------------------------------
# critical addresses


def critical_addresses(
    spec: FatouTowerSpec, depth: int = 32
) -> FrozenSet[Tuple[Address, int]]:
    """Addresses of all branch data in the tower, with local degrees.

    Critical vertices contribute their interior address; critical edges (the
    collapsing attachments) contribute the attachment-point address with fold
    degree 2.
    """
    out = set()
    for n in range(1, spec.height + 1):
        cov = spec.level(n).cover
        for v in cov.critical_vertices():
            out.add((truncate_address(vertex_address(spec, n, v), depth), cov.degree[v]))
        for i in sorted(cov.critical_edges):
            out.add((truncate_address(edge_address(spec, n, i), depth), 2))
    return frozenset(out)


def _critical_labels(spec: FatouTowerSpec) -> Dict[str, str]:
    """Conformal-position labels keyed by critical address string."""
    out: Dict[str, str] = {}
    for n in range(1, spec.height + 1):
        lvl = spec.level(n)
        cov = lvl.cover
        for v in cov.critical_vertices():
            out[str(vertex_address(spec, n, v))] = lvl.labels.get(v, "std")
        for i in sorted(cov.critical_edges):
            out[str(edge_address(spec, n, i))] = lvl.labels.get(f"e{i}", "std")
    return out


# ---------------------------------------------------------------------------
# equivalence decision


def _match_level(
    la: TowerLevel, lb: TowerLevel, n: int
) -> Union[TreeIso, Dict]:
    """Tag-driven candidate isomorphism between two level trees.

    Children of matched vertices pair up by exact attachment tags; loops pair
    by cyclic position around an anchored child.  Returns a witness dict with
    the first obstruction when no candidate exists.
    """
    ta, tb = la.cover.tree, lb.cover.tree
    ha, hb = ta.heights(), tb.heights()
    mv: Dict[str, str] = {ta.root: tb.root}
    me: Dict[int, int] = {}
    queue = [(ta.root, tb.root)]
    while queue:
        u, w = queue.pop(0)
        # every edge carried by u (children and marked-point loops) pairs with
        # the edge of w carrying the same tag; the joint arrived already matched
        mine_a = [i for i in ta.order[u] if _edge_parent(ta, i, ha) == u]
        mine_b = {lb.attach[j]: j for j in tb.order[w] if _edge_parent(tb, j, hb) == w}
        for i in mine_a:
            tag = la.attach[i]
            j = mine_b.get(tag)
            if j is None:
                return {
                    "kind": "attachment",
                    "level": n,
                    "vertex": u,
                    "tag": str(tag),
                    "missing_in": "B",
                }
            if ta.is_loop(i) != tb.is_loop(j):
                return {"kind": "valence", "level": n, "vertex": u}
            me[i] = j
            if not ta.is_loop(i):
                child_a, child_b = ta.other_end(i, u), tb.other_end(j, w)
                mv[child_a] = child_b
                queue.append((child_a, child_b))
        if len(mine_b) > len(mine_a):
            extra = sorted(str(t) for t in set(mine_b) - {la.attach[i] for i in mine_a})
            return {
                "kind": "attachment",
                "level": n,
                "vertex": u,
                "tag": extra[0],
                "missing_in": "A",
            }
    if len(mv) != len(ta.vertices) or len(mv) != len(tb.vertices):
        return {"kind": "valence", "level": n, "vertex": "<unreached>"}
    return TreeIso(mv, me)


def decide_equivalence(a: FatouTowerSpec, b: FatouTowerSpec, depth: int = 6) -> Dict:
    """Depth-bounded combinatorial-equivalence verdict between two towers.

    YES requires matching root dynamics, equal critical address sets (with
    equal conformal-position labels) after truncation to ``depth``, and a
    tag-respecting tree isomorphism at every level that conjugates the level
    maps; the verified per-level maps are returned as the witness.  NO comes
    with the first localized obstruction.  A NO at some depth persists at all
    larger depths.
    """
    for name, spec in (("A", a), ("B", b)):
        errs = validate_tower(spec)
        if errs:
            raise TowerError(f"tower {name} is malformed: {errs[0]}")

    def no(witness: Dict) -> Dict:
        return {"verdict": "NO", "depth": depth, "witness": witness}

    if a.root.kind != b.root.kind:
        return no({"kind": "root_dynamics", "a": a.root.kind, "b": b.root.kind})
    if a.root.kind == "rotation":
        if a.root.rho != b.root.rho:
            return no({"kind": "root_dynamics", "detail": "rotation numbers differ"})
    elif a.root.degree != b.root.degree:
        return no({"kind": "root_dynamics", "detail": "power degrees differ"})
    if a.height != b.height:
        return no({"kind": "levels", "a": a.height, "b": b.height})

    ca, cb = critical_addresses(a, depth), critical_addresses(b, depth)
    if ca != cb:
        only = sorted(
            (str(adr), adr.level, d, side)
            for side, diff in (("A", ca - cb), ("B", cb - ca))
            for adr, d in diff
        )
        text, lvl, d, side = only[0]
        return no(
            {
                "kind": "critical_address",
                "address": text,
                "level": lvl,
                "degree": d,
                "only_in": side,
            }
        )
    la_labels, lb_labels = _critical_labels(a), _critical_labels(b)
    for key in sorted(la_labels):
        if la_labels[key] != lb_labels.get(key, "std"):
            return no(
                {
                    "kind": "conformal_label",
                    "address": key,
                    "a": la_labels[key],
                    "b": lb_labels.get(key, "std"),
                }
            )

    witness_levels: List[Dict] = []
    for n in range(1, a.height + 1):
        la, lb = a.level(n), b.level(n)
        cand = _match_level(la, lb, n)
        if isinstance(cand, dict):
            return no(cand)
        try:
            iso = extend_conjugacy(la.cover, lb.cover, cand)
        except (ExtensionError, InvalidTreeError) as e:
            return no({"kind": "conjugacy", "level": n, "reason": str(e)})
        witness_levels.append(
            {
                "level": n,
                "vertices": dict(sorted(iso.vertex_map.items())),
                "edges": {str(i): j for i, j in sorted(iso.edge_map.items())},
            }
        )
    return {"verdict": "YES", "depth": depth, "witness": {"levels": witness_levels}}


# ---------------------------------------------------------------------------
# random towers and perturbations


def _random_angle(rng: random.Random, root: RootDynamics) -> RhoAngle:
    q = rng.choice([5, 7, 8, 9, 11, 13])
    a = Fraction(rng.randrange(q), q)
    if root.kind == "rotation" and rng.random() < 0.5:
        return RhoAngle(a, Fraction(rng.randint(1, 3)), root.rho)
    return RhoAngle.rational(a)


def _random_tag(
    rng: random.Random, root: RootDynamics, level: int, taken: Sequence[Address]
) -> Address:
    for _ in range(64):
        adr = angle_address(_random_angle(rng, root))
        for m in range(1, level):
            # chain through interior-root boundaries; path words stay empty
            adr = Address(m, (), adr, None)
        if adr not in taken:
            return adr
    raise TowerError("could not draw a fresh attachment tag")


def random_tower_spec(
    rng: random.Random, levels: int = 2, kind: Optional[str] = None
) -> FatouTowerSpec:
    """Admissible random tower: random level covers with fresh exact tags."""
    from .generate import random_branched_cover

    if kind is None:
        kind = rng.choice(["rotation", "power"])
    if kind == "rotation":
        terms = tuple(rng.randint(1, 3) for _ in range(rng.randint(1, 4)))
        root = RootDynamics("rotation", rho=RotationNumber(terms + (1,), repeat=1))
    else:
        root = RootDynamics("power", degree=rng.randint(2, 4))
    out: List[TowerLevel] = []
    for n in range(1, levels + 1):
        cov = random_branched_cover(rng)
        tree = cov.tree
        heights = tree.heights()
        attach: Dict[int, Address] = {}
        per_parent: Dict[str, List[Address]] = {}
        for i in range(len(tree.edges)):
            parent = _edge_parent(tree, i, heights)
            taken = per_parent.setdefault(parent, [])
            tag = _random_tag(rng, root, n, taken)
            taken.append(tag)
            attach[i] = tag
        labels = {v: "std" for v in cov.critical_vertices()}
        labels.update({f"e{i}": "std" for i in cov.critical_edges})
        out.append(TowerLevel(cov, attach, labels))
    spec = FatouTowerSpec(root, tuple(out))
    errs = validate_tower(spec)
    if errs:
        raise TowerError(f"generator produced a malformed tower: {errs[0]}")
    return spec


def perturb_attachment(
    spec: FatouTowerSpec, rng: random.Random
) -> Tuple[FatouTowerSpec, Tuple[int, int]]:
    """Copy of the tower with one attachment angle changed, plus its location."""
    n = rng.randint(1, spec.height)
    lvl = spec.level(n)
    tree = lvl.cover.tree
    choices = sorted(lvl.attach)
    i = choices[rng.randrange(len(choices))]
    heights = tree.heights()
    parent = _edge_parent(tree, i, heights)
    siblings = [
        lvl.attach[j]
        for j in range(len(tree.edges))
        if j != i and _edge_parent(tree, j, heights) == parent
    ]
    old = lvl.attach[i]
    new = _random_tag(rng, spec.root, n, list(siblings) + [old])
    attach = dict(lvl.attach)
    attach[i] = new
    levels = list(spec.levels)
    levels[n - 1] = TowerLevel(lvl.cover, attach, lvl.labels, lvl.internals)
    return FatouTowerSpec(spec.root, tuple(levels)), (n, i)
