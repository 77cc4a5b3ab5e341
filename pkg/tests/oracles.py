"""Independent brute-force oracles used by the unit and acceptance tests.

These deliberately avoid the library's constructive algorithms: isomorphisms
are found by exhaustive backtracking over vertex assignments followed by
explicit filtering, so agreement with the propagation-based extenders is a
real cross-check.
"""

from __future__ import annotations

from collections import deque
from itertools import permutations
from typing import Callable, Dict, Iterator, List, Optional

from siegelpuzzle.treecore import (
    OrientedTree,
    TreeBranchedCover,
    TreeCover,
    TreeIso,
    _rotations_equal,
)


def bfs_path_oracle(tree: OrientedTree, v: str) -> List[str]:
    """Shortest root-to-v vertex path by plain BFS over non-loop edges."""
    prev: Dict[str, Optional[str]] = {tree.root: None}
    dq = deque([tree.root])
    while dq:
        u = dq.popleft()
        for i in tree.order[u]:
            if tree.is_loop(i):
                continue
            w = tree.other_end(i, u)
            if w not in prev:
                prev[w] = u
                dq.append(w)
    path = [v]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return list(reversed(path))


def _vertex_bijections(t1: OrientedTree, t2: OrientedTree) -> Iterator[Dict[str, str]]:
    if len(t1.vertices) != len(t2.vertices):
        return
    order: List[str] = []
    parent: Dict[str, Optional[str]] = {t1.root: None}
    dq = deque([t1.root])
    while dq:
        u = dq.popleft()
        order.append(u)
        for i in t1.order[u]:
            if t1.is_loop(i):
                continue
            w = t1.other_end(i, u)
            if w not in parent:
                parent[w] = u
                dq.append(w)
    if len(order) != len(t1.vertices):
        return

    def neighbors2(w: str) -> List[str]:
        out = []
        for i in t2.order[w]:
            if not t2.is_loop(i):
                out.append(t2.other_end(i, w))
        return out

    def rec(i: int, vmap: Dict[str, str], used: set) -> Iterator[Dict[str, str]]:
        if i == len(order):
            yield dict(vmap)
            return
        v = order[i]
        cands = [t2.root] if parent[v] is None else neighbors2(vmap[parent[v]])
        for w in cands:
            if w in used or len(t1.order[v]) != len(t2.order[w]):
                continue
            vmap[v] = w
            used.add(w)
            yield from rec(i + 1, vmap, used)
            del vmap[v]
            used.discard(w)

    yield from rec(0, {}, set())


def _edge_maps_for(
    t1: OrientedTree, t2: OrientedTree, vmap: Dict[str, str]
) -> Iterator[Dict[int, int]]:
    by_pair = {}
    loops2: Dict[str, List[int]] = {}
    for j, (x, y) in enumerate(t2.edges):
        if x == y:
            loops2.setdefault(x, []).append(j)
        else:
            by_pair[frozenset((x, y))] = j
    base: Dict[int, int] = {}
    loops1: Dict[str, List[int]] = {}
    for i, (u, v) in enumerate(t1.edges):
        if u == v:
            loops1.setdefault(u, []).append(i)
            continue
        j = by_pair.get(frozenset((vmap[u], vmap[v])))
        if j is None:
            return
        base[i] = j
    keys = sorted(loops1)
    choices: List[List[Dict[int, int]]] = []
    for v in keys:
        l1 = loops1[v]
        l2 = loops2.get(vmap[v], [])
        if len(l1) != len(l2):
            return
        choices.append([dict(zip(l1, perm)) for perm in permutations(l2)])

    def rec(k: int, acc: Dict[int, int]) -> Iterator[Dict[int, int]]:
        if k == len(choices):
            yield dict(acc)
            return
        for assign in choices[k]:
            acc.update(assign)
            yield from rec(k + 1, acc)
            for i in assign:
                del acc[i]

    yield from rec(0, dict(base))


def enumerate_isomorphisms(
    t1: OrientedTree,
    t2: OrientedTree,
    accept: Callable[[TreeIso], bool],
) -> List[TreeIso]:
    """All root- and orientation-preserving isomorphisms passing `accept`."""
    found: List[TreeIso] = []
    for vmap in _vertex_bijections(t1, t2):
        for emap in _edge_maps_for(t1, t2, vmap):
            ok = True
            for v in t1.vertices:
                seq = [emap[i] for i in t1.order[v]]
                if not _rotations_equal(seq, list(t2.order[vmap[v]])):
                    ok = False
                    break
            if not ok:
                continue
            iso = TreeIso(dict(vmap), dict(emap))
            if accept(iso):
                found.append(iso)
    return found


def _respects_seed(iso: TreeIso, phi_crit: TreeIso) -> bool:
    return all(iso.vertex_map.get(v) == w for v, w in phi_crit.vertex_map.items()) and all(
        iso.edge_map.get(i) == j for i, j in phi_crit.edge_map.items()
    )


def cover_isomorphisms_oracle(
    g1: TreeCover, g2: TreeCover, phi_crit: TreeIso
) -> List[TreeIso]:
    def accept(iso: TreeIso) -> bool:
        if not _respects_seed(iso, phi_crit):
            return False
        for v in g1.source.vertices:
            if g1.vertex_map[v] != g2.vertex_map[iso.vertex_map[v]]:
                return False
            if g1.degree[v] != g2.degree[iso.vertex_map[v]]:
                return False
        for i in range(len(g1.source.edges)):
            if g1.edge_map[i] != g2.edge_map[iso.edge_map[i]]:
                return False
        return True

    return enumerate_isomorphisms(g1.source, g2.source, accept)


def conjugacy_oracle(
    h1: TreeBranchedCover, h2: TreeBranchedCover, phi_crit: TreeIso
) -> List[TreeIso]:
    def accept(iso: TreeIso) -> bool:
        if not _respects_seed(iso, phi_crit):
            return False
        for v in h1.tree.vertices:
            if iso.vertex_map[h1.vertex_map[v]] != h2.vertex_map[iso.vertex_map[v]]:
                return False
            if h1.degree[v] != h2.degree[iso.vertex_map[v]]:
                return False
        for i in range(len(h1.tree.edges)):
            a = h1.edge_map.get(i)
            b = h2.edge_map.get(iso.edge_map[i])
            if (a is None) != (b is None):
                return False
            if a is not None and iso.edge_map[a] != b:
                return False
            if (i in h1.critical_edges) != (iso.edge_map[i] in h2.critical_edges):
                return False
        return True

    return enumerate_isomorphisms(h1.tree, h2.tree, accept)
