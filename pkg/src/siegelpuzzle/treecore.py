"""Oriented trees, tree covers, and tree branched covers.

Trees carry a root, an edge list indexed by position (self-loop entries are
legal and distinct marked points give distinct entries), and a cyclic order of
incident edge indices per vertex.  Covers map a source tree onto a target tree
with a local degree per vertex; branched covers are self-maps with a finite
critical edge set.  Infinite branched covers are handled as finite prefixes:
``complete`` lists the vertices whose incident edge sets are fully
materialized, and checks that would need unmaterialized data are skipped.

Isomorphism extension (between two covers over a common target, or conjugating
two branched covers) is done by forced constraint propagation outward from the
critical data: crossing matched edges determines endpoint images, and a single
matched edge at a vertex pins the whole cyclic alignment there.  Whatever the
propagation produces is the only candidate, so uniqueness comes for free and a
final verification pass decides existence.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

Edge = Tuple[str, str]


class InvalidTreeError(ValueError):
    pass


class ExtensionError(ValueError):
    """No extension compatible with the given critical data exists."""


@dataclass(frozen=True, eq=False)
class OrientedTree:
    vertices: Tuple[str, ...]
    root: str
    edges: Tuple[Edge, ...]
    order: Mapping[str, Tuple[int, ...]]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple((u, v) for u, v in self.edges))
        object.__setattr__(
            self, "order", {v: tuple(ix) for v, ix in dict(self.order).items()}
        )

    # -- basic structure ---------------------------------------------------

    def is_loop(self, i: int) -> bool:
        u, v = self.edges[i]
        return u == v

    def incident(self, v: str) -> Tuple[int, ...]:
        return self.order[v]

    def valence(self, v: str) -> int:
        return len(self.order[v])

    def other_end(self, i: int, v: str) -> str:
        u, w = self.edges[i]
        if v == u:
            return w
        if v == w:
            return u
        raise InvalidTreeError(f"edge {i} is not incident to {v!r}")

    def nonloop_edges(self) -> List[int]:
        return [i for i in range(len(self.edges)) if not self.is_loop(i)]

    def validate(self) -> List[str]:
        """Structural violations; empty list means the tree is well formed."""
        errs: List[str] = []
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            errs.append("duplicate vertex ids")
        if self.root not in vs:
            errs.append("root is not a vertex")
        for i, (u, v) in enumerate(self.edges):
            if u not in vs or v not in vs:
                errs.append(f"edge {i} touches unknown vertex")
        if errs:
            return errs
        if set(self.order) != vs:
            errs.append("cyclic order keys differ from vertex set")
            return errs
        # each edge appears exactly once at each endpoint (loops once)
        for v in self.vertices:
            seen = list(self.order[v])
            if len(seen) != len(set(seen)):
                errs.append(f"repeated edge index in cyclic order at {v!r}")
            for i in seen:
                if not (0 <= i < len(self.edges)) or v not in self.edges[i]:
                    errs.append(f"cyclic order at {v!r} lists non-incident edge {i}")
        expected = {
            v: sorted(
                i for i, e in enumerate(self.edges) if v in e
            )
            for v in self.vertices
        }
        for v in self.vertices:
            if sorted(self.order[v]) != expected[v]:
                errs.append(f"cyclic order at {v!r} misses incident edges")
        # the non-loop edges must form a tree on the vertex set
        nonloop = self.nonloop_edges()
        if len(nonloop) != len(self.vertices) - 1:
            errs.append("non-loop edge count is not |V| - 1")
        parent, _, _ = self._bfs()
        if len(parent) != len(self.vertices):
            errs.append("tree is not connected")
        return errs

    def _bfs(self):
        """Parent vertex, entering edge index, and height per reachable vertex."""
        parent: Dict[str, Optional[str]] = {self.root: None}
        via: Dict[str, Optional[int]] = {self.root: None}
        height: Dict[str, int] = {self.root: 0}
        dq = deque([self.root])
        while dq:
            v = dq.popleft()
            for i in self.order[v]:
                if self.is_loop(i):
                    continue
                w = self.other_end(i, v)
                if w not in parent:
                    parent[w] = v
                    via[w] = i
                    height[w] = height[v] + 1
                    dq.append(w)
        return parent, via, height

    def heights(self) -> Dict[str, int]:
        _, _, height = self._bfs()
        return height

    def rooted_path(self, v: str) -> "TreePath":
        return rooted_path(self, v)

    def joint(self, v: str) -> Optional[int]:
        """Edge at which v hangs toward the root; None for the root itself."""
        if v == self.root:
            return None
        _, via, _ = self._bfs()
        if v not in via:
            raise InvalidTreeError(f"vertex {v!r} not reachable from root")
        return via[v]

    def equals(self, other: "OrientedTree") -> bool:
        return (
            self.vertices == other.vertices
            and self.root == other.root
            and self.edges == other.edges
            and self.order == other.order
        )


@dataclass(frozen=True)
class TreePath:
    """Rooted path: vertex sequence from the root, with the edges between."""

    vertices: Tuple[str, ...]
    edges: Tuple[int, ...]

    @property
    def height(self) -> int:
        return len(self.vertices) - 1

    @property
    def joint(self) -> Optional[int]:
        return self.edges[-1] if self.edges else None


def rooted_path(tree: OrientedTree, v: str) -> TreePath:
    parent, via, _ = tree._bfs()
    if v not in parent:
        raise InvalidTreeError(f"vertex {v!r} not reachable from root")
    verts = [v]
    eds: List[int] = []
    while parent[verts[-1]] is not None:
        eds.append(via[verts[-1]])
        verts.append(parent[verts[-1]])
    return TreePath(tuple(reversed(verts)), tuple(reversed(eds)))


def _rotations_equal(a: Sequence[int], b: Sequence[int]) -> bool:
    """Circular sequence equality (some rotation of a equals b)."""
    if len(a) != len(b):
        return False
    if not a:
        return True
    bb = list(b) + list(b)
    la = list(a)
    n = len(a)
    for s in range(n):
        if bb[s : s + n] == la:
            return True
    return False


# ---------------------------------------------------------------------------
# tree covers


@dataclass(frozen=True, eq=False)
class TreeCover:
    """A cover g: source -> target with local degree per source vertex."""

    source: OrientedTree
    target: OrientedTree
    vertex_map: Dict[str, str]
    edge_map: Dict[int, int]
    degree: Dict[str, int]

    def critical_vertices(self) -> List[str]:
        return [v for v in self.source.vertices if self.degree.get(v, 1) >= 2]


def validate_cover(cover: TreeCover) -> List[str]:
    """Violation report for the cover axioms; empty list means admissible."""
    errs = cover.source.validate()
    errs += [f"target: {m}" for m in cover.target.validate()]
    if errs:
        return errs
    src, tgt = cover.source, cover.target
    vm, em, deg = cover.vertex_map, cover.edge_map, cover.degree
    for v in src.vertices:
        if v not in vm or vm[v] not in set(tgt.vertices):
            errs.append(f"vertex map missing or out of range at {v!r}")
        if deg.get(v, 0) < 1:
            errs.append(f"degree at {v!r} must be >= 1")
    if vm.get(src.root) != tgt.root:
        errs.append("root does not map to root")
    for i in range(len(src.edges)):
        if i not in em or not (0 <= em[i] < len(tgt.edges)):
            errs.append(f"edge map missing or out of range at edge {i}")
    if errs:
        return errs
    for i, (u, v) in enumerate(src.edges):
        iu, iv = tgt.edges[em[i]]
        if {vm[u], vm[v]} != {iu, iv}:
            errs.append(f"edge {i} endpoints do not commute with the maps")
        if u != v and vm[u] == vm[v]:
            errs.append(f"non-loop edge {i} collapses under the cover")
    for v in src.vertices:
        w = vm[v]
        d = deg[v]
        ev, ew = src.order[v], tgt.order[w]
        if len(ev) != d * len(ew):
            errs.append(f"valence at {v!r} is not degree * image valence")
            continue
        for j in ew:
            hits = sum(1 for i in ev if em[i] == j)
            if hits != d:
                errs.append(f"edge {j} has {hits} preimages at {v!r}, expected {d}")
        if not _rotations_equal([em[i] for i in ev], list(ew) * d):
            errs.append(f"cyclic order at {v!r} is not orientation compatible")
    return errs


def cover_critical_subtree(cover: TreeCover) -> Tuple[List[str], List[int]]:
    """Vertices of the minimal subtree containing all critical vertices, plus
    every edge incident to them.  Empty critical set gives ({}, {})."""
    crit = cover.critical_vertices()
    if not crit:
        return [], []
    verts = _steiner_hull(cover.source, crit)
    edges = sorted({i for v in verts for i in cover.source.order[v]})
    return verts, edges


def _steiner_hull(tree: OrientedTree, seed: Iterable[str]) -> List[str]:
    """Minimal connected vertex hull of seed inside the tree: union the rooted
    paths, then prune non-seed leaves until none remain."""
    need = set(seed)
    hull = set()
    for v in need:
        hull.update(rooted_path(tree, v).vertices)
    changed = True
    while changed:
        changed = False
        for v in list(hull):
            if v in need:
                continue
            inside = sum(
                1
                for i in tree.order[v]
                if not tree.is_loop(i) and tree.other_end(i, v) in hull
            )
            if inside <= 1:
                hull.discard(v)
                changed = True
    return sorted(hull)


# ---------------------------------------------------------------------------
# tree branched covers


@dataclass(frozen=True, eq=False)
class TreeBranchedCover:
    """Self-map of an oriented tree with finite critical data.

    ``edge_map`` may omit images for frontier self-loops when the value is a
    finite prefix of an infinite tree; ``complete`` then lists the vertices
    whose incident edge sets are fully materialized (None means everything is).
    """

    tree: OrientedTree
    vertex_map: Dict[str, str]
    edge_map: Dict[int, int]
    degree: Dict[str, int]
    critical_edges: FrozenSet[int] = frozenset()
    complete: Optional[FrozenSet[str]] = None

    def __post_init__(self):
        object.__setattr__(self, "critical_edges", frozenset(self.critical_edges))
        if self.complete is not None:
            object.__setattr__(self, "complete", frozenset(self.complete))

    def is_complete(self, v: str) -> bool:
        return self.complete is None or v in self.complete

    def critical_vertices(self) -> List[str]:
        return [v for v in self.tree.vertices if self.degree.get(v, 1) >= 2]


def generation(bc: TreeBranchedCover, v: str, budget: Optional[int] = None) -> int:
    """Smallest n with h^n(v) = root."""
    cap = budget if budget is not None else len(bc.tree.vertices) + 1
    cur = v
    for n in range(cap + 1):
        if cur == bc.tree.root:
            return n
        cur = bc.vertex_map[cur]
    raise InvalidTreeError(f"vertex {v!r} does not reach the root within {cap} steps")


def branched_critical_subtree(bc: TreeBranchedCover) -> Tuple[List[str], List[int]]:
    """Minimal forward-invariant subtree holding the critical vertices, with
    all incident edges.  Falls back to the root alone when there are none."""
    tree = bc.tree
    seed = set(bc.critical_vertices())
    seed.add(tree.root)
    hull = set(_steiner_hull(tree, sorted(seed)))
    while True:
        grown = set(hull)
        grown.update(bc.vertex_map[v] for v in hull)
        grown = set(_steiner_hull(tree, sorted(grown)))
        if grown == hull:
            break
        hull = grown
    verts = sorted(hull)
    edges = sorted({i for v in verts for i in tree.order[v]})
    return verts, edges


def validate_branched_cover(bc: TreeBranchedCover) -> List[str]:
    """Violation report for the branched cover axioms on a (possibly partial)
    materialization; empty list means admissible as far as the data reaches."""
    errs = bc.tree.validate()
    if errs:
        return errs
    tree = bc.tree
    vm, em, deg = bc.vertex_map, bc.edge_map, bc.degree
    prefix_mode = bc.complete is not None
    vs = set(tree.vertices)
    for v in tree.vertices:
        if vm.get(v) not in vs:
            errs.append(f"vertex map missing or out of range at {v!r}")
        if deg.get(v, 0) < 1:
            errs.append(f"degree at {v!r} must be >= 1")
    if vm.get(tree.root) != tree.root:
        errs.append("root is not fixed")
    if errs:
        return errs

    for i, (u, v) in enumerate(tree.edges):
        img = em.get(i)
        if img is None:
            # only frontier self-loops may lack images, and only in prefixes
            if not (prefix_mode and u == v):
                errs.append(f"edge map missing at edge {i}")
            continue
        if not (0 <= img < len(tree.edges)):
            errs.append(f"edge map out of range at edge {i}")
            continue
        iu, iv = tree.edges[img]
        if {vm[u], vm[v]} != {iu, iv}:
            errs.append(f"edge {i} endpoints do not commute with the maps")

    # collapse exactly on the declared critical edges
    for i, (u, v) in enumerate(tree.edges):
        if u == v:
            if i in bc.critical_edges:
                errs.append(f"self-loop {i} declared critical")
            continue
        collapses = vm[u] == vm[v]
        if collapses != (i in bc.critical_edges):
            errs.append(
                f"edge {i} {'collapses without being' if collapses else 'is'}"
                " critical"
            )

    # local degree counting and orientation, where both edge sets are known
    for v in tree.vertices:
        w = vm[v]
        if not (bc.is_complete(v) and bc.is_complete(w)):
            continue
        ev, ew = tree.order[v], tree.order[w]
        if any(em.get(i) is None for i in ev):
            errs.append(f"complete vertex {v!r} has unmapped incident edges")
            continue
        d = deg[v]
        if len(ev) != d * len(ew):
            errs.append(f"valence at {v!r} is not degree * image valence")
            continue
        for j in ew:
            hits = sum(1 for i in ev if em[i] == j)
            if hits != d:
                errs.append(f"edge {j} has {hits} preimages at {v!r}, expected {d}")
        if not _rotations_equal([em[i] for i in ev], list(ew) * d):
            errs.append(f"cyclic order at {v!r} is not orientation compatible")

    # every materialized self-loop is a forward image of a critical edge
    reachable = set()
    for c in bc.critical_edges:
        cur = em.get(c)
        seen_guard = 0
        while cur is not None and seen_guard <= len(tree.edges):
            reachable.add(cur)
            cur = em.get(cur)
            seen_guard += 1
    for i, (u, v) in enumerate(tree.edges):
        if u == v and i not in reachable:
            errs.append(f"self-loop {i} is not a forward image of a critical edge")

    # every non-loop edge falls into the critical set under iteration
    for i in range(len(tree.edges)):
        if tree.is_loop(i):
            continue
        cur, steps = i, 0
        while cur is not None and cur not in bc.critical_edges:
            cur = em.get(cur)
            steps += 1
            if steps > len(tree.edges):
                errs.append(f"edge {i} never reaches a critical edge")
                break
            if cur is not None and tree.is_loop(cur):
                errs.append(f"non-critical orbit of edge {i} hit a self-loop")
                break
    return errs


# ---------------------------------------------------------------------------
# isomorphism extension by forced propagation


@dataclass
class TreeIso:
    vertex_map: Dict[str, str]
    edge_map: Dict[int, int]

    def restricted(self, verts: Iterable[str], edges: Iterable[int]) -> "TreeIso":
        return TreeIso(
            {v: self.vertex_map[v] for v in verts},
            {i: self.edge_map[i] for i in edges},
        )


def _propagate(
    t1: OrientedTree,
    t2: OrientedTree,
    seed: TreeIso,
    *,
    cover_images: Optional[Tuple[Dict[int, int], Dict[int, int], Dict[str, int]]] = None,
) -> TreeIso:
    """Grow the unique structure-compatible matching outward from the seed.

    cover_images, when given, is (g1 edge map, g2 edge map, g1 degrees) and
    enables matching by image edge at local degree one vertices, which is the
    only extra rule covers need when there is no critical anchor at all.
    """
    mv: Dict[str, str] = dict(seed.vertex_map)
    me: Dict[int, int] = dict(seed.edge_map)
    used_v = set(mv.values())
    used_e = set(me.values())
    if len(used_v) != len(mv) or len(used_e) != len(me):
        raise ExtensionError("seed is not injective")

    def set_v(a: str, b: str):
        if a in mv:
            if mv[a] != b:
                raise ExtensionError(f"conflicting images for vertex {a!r}")
            return False
        if b in used_v:
            raise ExtensionError(f"vertex image {b!r} used twice")
        mv[a] = b
        used_v.add(b)
        return True

    def set_e(i: int, j: int):
        if i in me:
            if me[i] != j:
                raise ExtensionError(f"conflicting images for edge {i}")
            return False
        if j in used_e:
            raise ExtensionError(f"edge image {j} used twice")
        me[i] = j
        used_e.add(j)
        return True

    progress = True
    while progress:
        progress = False
        # rule A: cross matched edges
        for i, j in list(me.items()):
            (u, v), (x, y) = t1.edges[i], t2.edges[j]
            for a, b in ((u, v), (v, u)):
                if a in mv:
                    if mv[a] == x:
                        progress |= set_v(b, y)
                    elif mv[a] == y:
                        progress |= set_v(b, x)
                    else:
                        raise ExtensionError(f"edge {i} endpoints disagree with vertex map")
        # rule B: cyclic alignment at anchored vertices
        for v, w in list(mv.items()):
            L1, L2 = t1.order[v], t2.order[w]
            anchor = next((i for i in L1 if i in me), None)
            if anchor is None:
                continue
            if len(L1) != len(L2):
                raise ExtensionError(f"valence mismatch at {v!r}")
            p1 = L1.index(anchor)
            p2 = L2.index(me[anchor])
            n = len(L1)
            for k in range(n):
                progress |= set_e(L1[(p1 + k) % n], L2[(p2 + k) % n])
        # rule C: image matching at degree-one vertices of a cover
        if cover_images is not None:
            g1e, g2e, deg1 = cover_images
            for v, w in list(mv.items()):
                if deg1.get(v, 1) != 1:
                    continue
                L1, L2 = t1.order[v], t2.order[w]
                by_image = {}
                for j in L2:
                    if g2e[j] in by_image:
                        raise ExtensionError(f"cover not injective on edges at {w!r}")
                    by_image[g2e[j]] = j
                for i in L1:
                    if i in me:
                        continue
                    j = by_image.get(g1e[i])
                    if j is None:
                        raise ExtensionError(f"edge {i} has no image-compatible match at {w!r}")
                    progress |= set_e(i, j)
    return TreeIso(mv, me)


def _verify_iso(t1: OrientedTree, t2: OrientedTree, iso: TreeIso) -> List[str]:
    errs: List[str] = []
    if set(iso.vertex_map) != set(t1.vertices) or set(iso.vertex_map.values()) != set(
        t2.vertices
    ):
        errs.append("vertex map is not a bijection onto the target vertices")
        return errs
    if set(iso.edge_map) != set(range(len(t1.edges))) or set(
        iso.edge_map.values()
    ) != set(range(len(t2.edges))):
        errs.append("edge map is not a bijection onto the target edges")
        return errs
    if iso.vertex_map[t1.root] != t2.root:
        errs.append("root is not preserved")
    for i, (u, v) in enumerate(t1.edges):
        x, y = t2.edges[iso.edge_map[i]]
        if {iso.vertex_map[u], iso.vertex_map[v]} != {x, y}:
            errs.append(f"edge {i} endpoints not preserved")
    for v in t1.vertices:
        seq = [iso.edge_map[i] for i in t1.order[v]]
        if not _rotations_equal(seq, list(t2.order[iso.vertex_map[v]])):
            errs.append(f"cyclic order not preserved at {v!r}")
    return errs


def _check_seed_domain(
    tree: OrientedTree,
    seed: TreeIso,
    verts: Sequence[str],
    edges: Sequence[int],
) -> None:
    if not set(verts) <= set(seed.vertex_map):
        missing = sorted(set(verts) - set(seed.vertex_map))
        raise ExtensionError(f"critical data misses vertices {missing}")
    if not set(edges) <= set(seed.edge_map):
        missing2 = sorted(set(edges) - set(seed.edge_map))
        raise ExtensionError(f"critical data misses edges {missing2}")


def extend_cover_isomorphism(
    g1: TreeCover, g2: TreeCover, phi_crit: TreeIso
) -> TreeIso:
    """Extend an isomorphism of critical subtrees to a full isomorphism phi
    with g1 = g2 o phi.  Raises ExtensionError when impossible."""
    if not g1.target.equals(g2.target):
        raise ExtensionError("covers do not share a target tree")
    verts, edges = cover_critical_subtree(g1)
    _check_seed_domain(g1.source, phi_crit, verts, edges)
    for v in verts:
        w = phi_crit.vertex_map[v]
        if g1.vertex_map[v] != g2.vertex_map[w]:
            raise ExtensionError(f"critical data does not commute at vertex {v!r}")
        if g1.degree[v] != g2.degree[w]:
            raise ExtensionError(f"degree mismatch at critical vertex {v!r}")
    for i in edges:
        if g1.edge_map[i] != g2.edge_map[phi_crit.edge_map[i]]:
            raise ExtensionError(f"critical data does not commute at edge {i}")

    seed = TreeIso(dict(phi_crit.vertex_map), dict(phi_crit.edge_map))
    seed.vertex_map.setdefault(g1.source.root, g2.source.root)
    iso = _propagate(
        g1.source,
        g2.source,
        seed,
        cover_images=(g1.edge_map, g2.edge_map, g1.degree),
    )
    errs = _verify_iso(g1.source, g2.source, iso)
    for v in g1.source.vertices:
        if g1.vertex_map[v] != g2.vertex_map[iso.vertex_map[v]]:
            errs.append(f"cover equation fails at vertex {v!r}")
        if g1.degree[v] != g2.degree[iso.vertex_map[v]]:
            errs.append(f"cover degree differs at {v!r}")
    for i in range(len(g1.source.edges)):
        if g1.edge_map[i] != g2.edge_map[iso.edge_map[i]]:
            errs.append(f"cover equation fails at edge {i}")
    if errs:
        raise ExtensionError("; ".join(errs))
    return iso


def extend_conjugacy(
    h1: TreeBranchedCover, h2: TreeBranchedCover, phi_crit: TreeIso
) -> TreeIso:
    """Extend critical data to the unique tree isomorphism phi with
    phi o h1 = h2 o phi on the materialized prefix."""
    verts, edges = branched_critical_subtree(h1)
    _check_seed_domain(h1.tree, phi_crit, verts, edges)
    for v in verts:
        w = phi_crit.vertex_map[v]
        if h1.degree[v] != h2.degree[w]:
            raise ExtensionError(f"degree mismatch at critical vertex {v!r}")
    for i in edges:
        j = phi_crit.edge_map[i]
        if (i in h1.critical_edges) != (j in h2.critical_edges):
            raise ExtensionError(f"criticality of edge {i} not preserved")

    seed = TreeIso(dict(phi_crit.vertex_map), dict(phi_crit.edge_map))
    seed.vertex_map.setdefault(h1.tree.root, h2.tree.root)
    iso = _propagate(h1.tree, h2.tree, seed)
    errs = _verify_iso(h1.tree, h2.tree, iso)
    for v in h1.tree.vertices:
        if iso.vertex_map[h1.vertex_map[v]] != h2.vertex_map[iso.vertex_map[v]]:
            errs.append(f"conjugacy fails at vertex {v!r}")
        if h1.degree[v] != h2.degree[iso.vertex_map[v]]:
            errs.append(f"degree differs at {v!r}")
    for i in range(len(h1.tree.edges)):
        img1 = h1.edge_map.get(i)
        img2 = h2.edge_map.get(iso.edge_map[i])
        if img1 is None and img2 is None:
            continue
        if img1 is None or img2 is None:
            errs.append(f"materialization frontier differs at edge {i}")
            continue
        if iso.edge_map[img1] != img2:
            errs.append(f"conjugacy fails at edge {i}")
        if (i in h1.critical_edges) != (iso.edge_map[i] in h2.critical_edges):
            errs.append(f"criticality differs at edge {i}")
    if errs:
        raise ExtensionError("; ".join(errs))
    return iso


# ---------------------------------------------------------------------------
# lazy wrappers for generator-backed trees


class LazyIsomorphism:
    """Conjugacy between two prefix generators, materialized on demand.

    ``source`` is a callable depth -> (TreeBranchedCover, TreeBranchedCover,
    TreeIso) producing matching prefixes with the critical data.  Queries
    deepen until the asked vertex or edge is covered; answers are stable under
    deepening because the extension at each depth is unique.
    """

    def __init__(self, source, start_depth: int = 1, max_depth: int = 16):
        self._source = source
        self._depth = start_depth
        self._max_depth = max_depth
        self._iso: Optional[TreeIso] = None
        self._materialize(start_depth)

    def _materialize(self, depth: int):
        h1, h2, phi_crit = self._source(depth)
        self._iso = extend_conjugacy(h1, h2, phi_crit)
        self._depth = depth

    def vertex_image(self, v: str) -> str:
        while v not in self._iso.vertex_map:
            if self._depth >= self._max_depth:
                raise ExtensionError(f"vertex {v!r} outside materialization budget")
            self._materialize(self._depth + 1)
        return self._iso.vertex_map[v]

    def edge_image(self, i: int) -> int:
        while i not in self._iso.edge_map:
            if self._depth >= self._max_depth:
                raise ExtensionError(f"edge {i} outside materialization budget")
            self._materialize(self._depth + 1)
        return self._iso.edge_map[i]

    @property
    def prefix_iso(self) -> TreeIso:
        return self._iso
