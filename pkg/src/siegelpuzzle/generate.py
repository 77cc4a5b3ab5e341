"""Random admissible covers and branched cover prefixes, with ground truth.

The cover generator pulls a random source back over a random target, so the
cover axioms hold by construction.  The branched cover generator assembles a
prefix from legal moves (critical edge at the root, marked-point chains,
backward preimage chains, twin branches, optional second critical edge and
critical leaf) and marks complete exactly the vertices whose incident lists
are final.  ``scrambled_copy`` relabels, permutes edge indices, and rotates
the cyclic orders, returning the copy together with the ground-truth
isomorphism, which is what the extension algorithms are tested against.
"""

from __future__ import annotations

import random
from typing import Dict, List, Optional, Tuple

from .treecore import (
    OrientedTree,
    TreeBranchedCover,
    TreeCover,
    TreeIso,
    branched_critical_subtree,
    cover_critical_subtree,
    validate_branched_cover,
    validate_cover,
)


class _Overflow(Exception):
    pass


def random_target_tree(rng: random.Random, max_vertices: int = 4) -> OrientedTree:
    n = rng.randint(2, max_vertices)
    vertices = [f"t{i}" for i in range(n)]
    edges: List[Tuple[str, str]] = []
    for i in range(1, n):
        parent = vertices[rng.randrange(i)]
        edges.append((parent, vertices[i]))
    if rng.random() < 0.3:
        edges.append((vertices[0], vertices[0]))  # marked point at the root
    order = {}
    for v in vertices:
        inc = [i for i, e in enumerate(edges) if v in e]
        rng.shuffle(inc)
        order[v] = tuple(inc)
    return OrientedTree(tuple(vertices), vertices[0], tuple(edges), order)


def random_tree_cover(
    rng: random.Random, max_vertices: int = 12, max_critical: int = 2
) -> TreeCover:
    """An admissible cover with at most max_vertices source vertices."""
    while True:
        target = random_target_tree(rng)
        try:
            cover = _pullback_cover(rng, target, max_vertices, max_critical)
        except _Overflow:
            continue
        assert validate_cover(cover) == [], "generator produced an invalid cover"
        return cover


def _pullback_cover(
    rng: random.Random, tgt: OrientedTree, max_v: int, max_crit: int
) -> TreeCover:
    src_edges: List[Tuple[str, str]] = []
    edge_img: List[int] = []
    order: Dict[str, List[int]] = {}
    vmap: Dict[str, str] = {}
    deg: Dict[str, int] = {}
    counter = [0]
    crit_left = [max_crit]

    def fresh(image: str) -> str:
        name = f"s{counter[0]}"
        counter[0] += 1
        if counter[0] > max_v:
            raise _Overflow
        vmap[name] = image
        return name

    def choose_degree() -> int:
        if crit_left[0] > 0 and rng.random() < 0.25:
            crit_left[0] -= 1
            return 2
        return 1

    root = fresh(tgt.root)
    deg[root] = choose_degree()
    work = [(root, None)]  # (source vertex, entry source edge)
    while work:
        v, entry = work.pop()
        w = vmap[v]
        tlist = list(tgt.order[w])
        if entry is not None:
            j_entry = edge_img[entry]
            k = tlist.index(j_entry)
            tlist = tlist[k:] + tlist[:k]
        slots: List[int] = []
        for copy in range(deg[v]):
            for pos, j in enumerate(tlist):
                if copy == 0 and pos == 0 and entry is not None:
                    slots.append(entry)
                    continue
                ju, jv = tgt.edges[j]
                if ju == jv:
                    src_edges.append((v, v))
                    edge_img.append(j)
                    slots.append(len(src_edges) - 1)
                else:
                    far = tgt.edges[j][1] if tgt.edges[j][0] == w else tgt.edges[j][0]
                    u = fresh(far)
                    deg[u] = choose_degree()
                    src_edges.append((v, u))
                    edge_img.append(j)
                    e_new = len(src_edges) - 1
                    slots.append(e_new)
                    work.append((u, e_new))
        order[v] = slots
    vertices = tuple(sorted(vmap, key=lambda s: int(s[1:])))
    src = OrientedTree(
        vertices, root, tuple(src_edges), {v: tuple(order[v]) for v in vertices}
    )
    return TreeCover(
        source=src,
        target=tgt,
        vertex_map=vmap,
        edge_map={i: j for i, j in enumerate(edge_img)},
        degree=deg,
    )


def random_branched_cover(
    rng: random.Random, max_vertices: int = 12
) -> TreeBranchedCover:
    """An admissible branched cover prefix built from legal structural moves."""
    root_critical = rng.random() < 0.25
    loop_mode = rng.choice(["open", "cycle"])
    n_loops = 1 if root_critical else rng.randint(1, 3)
    back = rng.randint(0, 2)
    twin = rng.random() < 0.6
    second_crit = twin and rng.random() < 0.35
    complete_pair = twin and not second_crit and rng.random() < 0.6
    deep = back >= 1 and rng.random() < 0.4

    vertices: List[str] = []
    edges: List[Tuple[str, str]] = []
    vmap: Dict[str, str] = {}
    emap: Dict[int, int] = {}
    degree: Dict[str, int] = {}
    crit: set = set()
    complete: set = set()

    def add_vertex(name: str, image: str, d: int = 1) -> str:
        vertices.append(name)
        vmap[name] = image
        degree[name] = d
        return name

    def add_edge(u: str, v: str) -> int:
        edges.append((u, v))
        return len(edges) - 1

    r = add_vertex("r", "r", 2 if root_critical else 1)
    b0 = add_vertex("b0", "r")
    e0 = add_edge(r, b0)
    crit.add(e0)

    loops = [add_edge(r, r) for _ in range(n_loops)]
    emap[e0] = loops[0]
    for k in range(n_loops - 1):
        emap[loops[k]] = loops[k + 1]
    if root_critical:
        emap[loops[0]] = loops[0]  # fixed marked point, power-map style
    elif loop_mode == "cycle":
        emap[loops[-1]] = loops[rng.randrange(n_loops)]
    # open mode leaves the last marked point on the frontier

    prev = b0
    prev_edge = e0
    for k in range(back):
        bk = add_vertex(f"b{k + 1}", prev)
        ek = add_edge(r, bk)
        emap[ek] = prev_edge
        prev, prev_edge = bk, ek

    if twin:
        w = add_vertex("w", "b0")
        tw = add_edge("b0", w)
        emap[tw] = e0
        if second_crit:
            y = add_vertex("y", "b0")
            cr2 = add_edge(w, y)
            crit.add(cr2)
            sigma = add_edge("b0", "b0")
            emap[cr2] = sigma
            emap[sigma] = loops[0]
        if complete_pair:
            z = add_vertex("z", w)
            wz = add_edge(w, z)
            emap[wz] = tw
            complete.update(["b0", w])

    if deep:
        x = add_vertex("x", "r")
        dp = add_edge("b1", x)
        emap[dp] = e0

    if rng.random() < 0.3:
        # a critical leaf: extra local degree on some non-root vertex
        leaf = rng.choice([v for v in vertices if v != "r"])
        if leaf not in complete and vmap[leaf] not in complete:
            degree[leaf] = 2

    order: Dict[str, Tuple[int, ...]] = {}
    for v in vertices:
        inc = [i for i, e in enumerate(edges) if v in e]
        rng.shuffle(inc)
        order[v] = tuple(inc)
    tree = OrientedTree(tuple(vertices), "r", tuple(edges), order)
    bc = TreeBranchedCover(
        tree=tree,
        vertex_map=vmap,
        edge_map=emap,
        degree=degree,
        critical_edges=frozenset(crit),
        complete=frozenset(complete),
    )
    report = validate_branched_cover(bc)
    assert report == [], f"generator produced an invalid branched cover: {report}"
    assert len(vertices) <= max_vertices
    return bc


# ---------------------------------------------------------------------------
# scrambled isomorphic copies


def _scramble_tree(
    tree: OrientedTree, rng: random.Random, tag: str
) -> Tuple[OrientedTree, Dict[str, str], Dict[int, int]]:
    names = list(tree.vertices)
    new_names = [f"{tag}{i}" for i in range(len(names))]
    rng.shuffle(new_names)
    vtruth = dict(zip(names, new_names))
    perm = list(range(len(tree.edges)))
    rng.shuffle(perm)
    etruth = {i: perm[i] for i in range(len(tree.edges))}
    new_edges: List[Tuple[str, str]] = [("", "")] * len(tree.edges)
    for i, (u, v) in enumerate(tree.edges):
        new_edges[etruth[i]] = (vtruth[u], vtruth[v])
    new_order = {}
    for v in tree.vertices:
        seq = [etruth[i] for i in tree.order[v]]
        if seq:
            k = rng.randrange(len(seq))
            seq = seq[k:] + seq[:k]
        new_order[vtruth[v]] = tuple(seq)
    shuffled_vertices = [vtruth[v] for v in tree.vertices]
    rng.shuffle(shuffled_vertices)
    copy = OrientedTree(
        tuple(shuffled_vertices), vtruth[tree.root], tuple(new_edges), new_order
    )
    return copy, vtruth, etruth


def scrambled_cover_copy(
    cover: TreeCover, rng: random.Random
) -> Tuple[TreeCover, TreeIso]:
    """Isomorphic copy over the same target, plus the ground-truth iso."""
    copy, vtruth, etruth = _scramble_tree(cover.source, rng, "c")
    g2 = TreeCover(
        source=copy,
        target=cover.target,
        vertex_map={vtruth[v]: cover.vertex_map[v] for v in cover.source.vertices},
        edge_map={etruth[i]: cover.edge_map[i] for i in range(len(cover.source.edges))},
        degree={vtruth[v]: cover.degree[v] for v in cover.source.vertices},
    )
    return g2, TreeIso(vtruth, etruth)


def scrambled_branched_copy(
    bc: TreeBranchedCover, rng: random.Random
) -> Tuple[TreeBranchedCover, TreeIso]:
    copy, vtruth, etruth = _scramble_tree(bc.tree, rng, "c")
    h2 = TreeBranchedCover(
        tree=copy,
        vertex_map={vtruth[v]: vtruth[bc.vertex_map[v]] for v in bc.tree.vertices},
        edge_map={etruth[i]: etruth[j] for i, j in bc.edge_map.items()},
        degree={vtruth[v]: bc.degree[v] for v in bc.tree.vertices},
        critical_edges=frozenset(etruth[i] for i in bc.critical_edges),
        complete=(
            frozenset(vtruth[v] for v in bc.complete)
            if bc.complete is not None
            else None
        ),
    )
    return h2, TreeIso(vtruth, etruth)


def cover_phi_crit(g1: TreeCover, truth: TreeIso) -> TreeIso:
    verts, eds = cover_critical_subtree(g1)
    return truth.restricted(verts, eds)


def branched_phi_crit(h1: TreeBranchedCover, truth: TreeIso) -> TreeIso:
    verts, eds = branched_critical_subtree(h1)
    return truth.restricted(verts, eds)
