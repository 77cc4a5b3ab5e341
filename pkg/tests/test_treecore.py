"""Oriented trees, covers, branched covers, and isomorphism extension."""

import random

import pytest

from oracles import (
    bfs_path_oracle,
    conjugacy_oracle,
    cover_isomorphisms_oracle,
)
from siegelpuzzle.generate import (
    branched_phi_crit,
    cover_phi_crit,
    random_branched_cover,
    random_tree_cover,
    scrambled_branched_copy,
    scrambled_cover_copy,
)
from siegelpuzzle.treecore import (
    ExtensionError,
    InvalidTreeError,
    LazyIsomorphism,
    OrientedTree,
    TreeBranchedCover,
    TreeCover,
    TreeIso,
    _rotations_equal,
    branched_critical_subtree,
    cover_critical_subtree,
    extend_conjugacy,
    extend_cover_isomorphism,
    generation,
    rooted_path,
    validate_branched_cover,
    validate_cover,
)


def star_tree():
    # root with three children, one carrying a self-loop
    return OrientedTree(
        vertices=("r", "a", "b", "c"),
        root="r",
        edges=(("r", "a"), ("r", "b"), ("r", "c"), ("c", "c")),
        order={"r": (0, 1, 2), "a": (0,), "b": (1,), "c": (2, 3)},
    )


def test_tree_validate_happy():
    assert star_tree().validate() == []


def test_tree_accessors():
    t = star_tree()
    assert t.is_loop(3) and not t.is_loop(0)
    assert t.valence("r") == 3
    assert t.other_end(1, "r") == "b"
    assert t.nonloop_edges() == [0, 1, 2]
    assert t.heights() == {"r": 0, "a": 1, "b": 1, "c": 1}
    assert t.joint("c") == 2
    assert t.joint("r") is None


def test_tree_validate_catches_structural_errors():
    t = OrientedTree(("r", "a"), "r", (("r", "a"), ("r", "a")), {"r": (0, 1), "a": (0, 1)})
    assert any("non-loop edge count" in m for m in t.validate())
    t2 = OrientedTree(("r", "a"), "x", (("r", "a"),), {"r": (0,), "a": (0,)})
    assert any("root" in m for m in t2.validate())
    t3 = OrientedTree(("r", "a", "b"), "r", (("r", "a"),), {"r": (0,), "a": (0,), "b": ()})
    assert any("non-loop edge count" in m for m in t3.validate())
    t4 = OrientedTree(("r", "a"), "r", (("r", "a"),), {"r": (0, 0), "a": (0,)})
    assert any("repeated edge index" in m for m in t4.validate())


def test_rooted_path_matches_bfs_oracle():
    rng = random.Random(3)
    for _ in range(40):
        cover = random_tree_cover(rng)
        t = cover.source
        for v in t.vertices:
            p = rooted_path(t, v)
            assert list(p.vertices) == bfs_path_oracle(t, v)
            assert p.height == len(p.vertices) - 1
            for e, (x, y) in zip(p.edges, zip(p.vertices, p.vertices[1:])):
                assert set(t.edges[e]) == {x, y}


def test_rotations_equal():
    assert _rotations_equal([1, 2, 3], [3, 1, 2])
    assert not _rotations_equal([1, 2, 3], [3, 2, 1])
    assert _rotations_equal([], [])
    assert not _rotations_equal([1], [1, 1])


# -- covers ------------------------------------------------------------------


def test_random_covers_validate_clean():
    rng = random.Random(5)
    for _ in range(50):
        assert validate_cover(random_tree_cover(rng)) == []


def interval_fold():
    """Degree-two cover of an edge by a folded path, critical midpoint."""
    target = OrientedTree(("A", "B"), "A", (("A", "B"),), {"A": (0,), "B": (0,)})

    def source(names):
        u0, u1, u2 = names
        tree = OrientedTree(
            (u0, u1, u2), u0, ((u0, u1), (u1, u2)), {u0: (0,), u1: (0, 1), u2: (1,)}
        )
        return TreeCover(
            source=tree,
            target=target,
            vertex_map={u0: "A", u1: "B", u2: "A"},
            edge_map={0: 0, 1: 0},
            degree={u0: 1, u1: 2, u2: 1},
        )

    return source(("u0", "u1", "u2")), source(("w0", "w1", "w2"))


def test_interval_fold_is_admissible():
    g1, g2 = interval_fold()
    assert validate_cover(g1) == []
    assert cover_critical_subtree(g1) == (["u1"], [0, 1])


def test_cover_validation_catches_orientation_and_counting():
    g1, _ = interval_fold()
    tgt = g1.target
    src = OrientedTree(
        ("u0", "u1", "u2", "u3"),
        "u0",
        (("u0", "u1"), ("u1", "u2"), ("u1", "u3")),
        {"u0": (0,), "u1": (0, 1, 2), "u2": (1,), "u3": (2,)},
    )
    bad = TreeCover(
        source=src,
        target=tgt,
        vertex_map={"u0": "A", "u1": "B", "u2": "A", "u3": "A"},
        edge_map={0: 0, 1: 0, 2: 0},
        degree={"u0": 1, "u1": 3, "u2": 1, "u3": 1},
    )
    # valence 3 = 3 * 1 and counts match, so this one is actually fine
    assert validate_cover(bad) == []
    worse = TreeCover(
        source=src,
        target=tgt,
        vertex_map={"u0": "A", "u1": "B", "u2": "A", "u3": "A"},
        edge_map={0: 0, 1: 0, 2: 0},
        degree={"u0": 1, "u1": 2, "u2": 1, "u3": 1},
    )
    assert any("valence" in m for m in validate_cover(worse))
    collapsing = TreeCover(
        source=src,
        target=tgt,
        vertex_map={"u0": "A", "u1": "B", "u2": "B", "u3": "A"},
        edge_map={0: 0, 1: 0, 2: 0},
        degree={"u0": 1, "u1": 3, "u2": 1, "u3": 1},
    )
    msgs = validate_cover(collapsing)
    assert any("collapses" in m or "commute" in m for m in msgs)


def test_cover_extension_and_uniqueness_match_oracle():
    rng = random.Random(17)
    for _ in range(60):
        g1 = random_tree_cover(rng)
        g2, truth = scrambled_cover_copy(g1, rng)
        phi_crit = cover_phi_crit(g1, truth)
        got = extend_cover_isomorphism(g1, g2, phi_crit)
        assert got.vertex_map == truth.vertex_map
        assert got.edge_map == truth.edge_map
        sols = cover_isomorphisms_oracle(g1, g2, phi_crit)
        assert len(sols) == 1
        assert sols[0].vertex_map == truth.vertex_map
        assert sols[0].edge_map == truth.edge_map


def test_cover_extension_rejects_misaligned_critical_data():
    g1, g2 = interval_fold()
    good = extend_cover_isomorphism(
        g1, g2, TreeIso({"u1": "w1"}, {0: 0, 1: 1})
    )
    assert good.vertex_map == {"u0": "w0", "u1": "w1", "u2": "w2"}
    # crossing the fold: commutes with the covers but forces root onto a leaf
    with pytest.raises(ExtensionError):
        extend_cover_isomorphism(g1, g2, TreeIso({"u1": "w1"}, {0: 1, 1: 0}))
    assert cover_isomorphisms_oracle(g1, g2, TreeIso({"u1": "w1"}, {0: 1, 1: 0})) == []


def test_cover_extension_requires_shared_target():
    g1, g2 = interval_fold()
    other_target = OrientedTree(("A", "B"), "B", (("A", "B"),), {"A": (0,), "B": (0,)})
    g3 = TreeCover(g2.source, other_target, g2.vertex_map, g2.edge_map, g2.degree)
    with pytest.raises(ExtensionError):
        extend_cover_isomorphism(g1, g3, TreeIso({"u1": "w1"}, {0: 0, 1: 1}))


# -- branched covers ----------------------------------------------------------


def chain_prefix(n_loops, *, close_cycle=False, complete=()):
    """Root plus one bubble, critical edge feeding a chain of marked points."""
    vertices = ("r", "b0")
    edges = [("r", "b0")] + [("r", "r")] * n_loops
    emap = {0: 1}
    for k in range(1, n_loops):
        emap[k] = k + 1
    if close_cycle:
        emap[n_loops] = 1
    order = {
        "r": tuple(range(n_loops + 1)),
        "b0": (0,),
    }
    return TreeBranchedCover(
        tree=OrientedTree(vertices, "r", tuple(edges), order),
        vertex_map={"r": "r", "b0": "r"},
        edge_map=emap,
        degree={"r": 1, "b0": 1},
        critical_edges=frozenset({0}),
        complete=frozenset(complete),
    )


def test_chain_prefix_is_admissible():
    assert validate_branched_cover(chain_prefix(2)) == []
    assert validate_branched_cover(chain_prefix(3, close_cycle=True)) == []


def test_random_branched_covers_validate_clean():
    rng = random.Random(23)
    for _ in range(50):
        assert validate_branched_cover(random_branched_cover(rng)) == []


def test_branched_validation_catches_violations():
    bc = chain_prefix(2)
    undeclared = TreeBranchedCover(
        bc.tree, bc.vertex_map, bc.edge_map, bc.degree, frozenset(), bc.complete
    )
    assert any("collapses without being" in m for m in validate_branched_cover(undeclared))
    moved_root = TreeBranchedCover(
        bc.tree, {"r": "r", "b0": "b0"}, bc.edge_map, bc.degree,
        bc.critical_edges, bc.complete,
    )
    assert validate_branched_cover(moved_root) != []
    # a self-loop nobody maps onto violates the pullback origin condition
    orphan_tree = OrientedTree(
        ("r", "b0"),
        "r",
        (("r", "b0"), ("r", "r"), ("r", "r")),
        {"r": (0, 1, 2), "b0": (0,)},
    )
    orphan = TreeBranchedCover(
        orphan_tree,
        {"r": "r", "b0": "r"},
        {0: 1},
        {"r": 1, "b0": 1},
        frozenset({0}),
        frozenset(),
    )
    assert any("not a forward image" in m for m in validate_branched_cover(orphan))
    # a non-loop edge whose orbit dodges the critical set is rejected
    stuck_tree = OrientedTree(
        ("r", "b0", "c"),
        "r",
        (("r", "b0"), ("r", "r"), ("r", "c")),
        {"r": (0, 1, 2), "b0": (0,), "c": (2,)},
    )
    stuck = TreeBranchedCover(
        stuck_tree,
        {"r": "r", "b0": "r", "c": "c"},
        {0: 1, 2: 2},
        {"r": 1, "b0": 1, "c": 1},
        frozenset({0}),
        frozenset(),
    )
    assert any("never reaches" in m for m in validate_branched_cover(stuck))


def test_generation_counts_steps_to_root():
    tree = OrientedTree(
        ("r", "b0", "b1", "b2"),
        "r",
        (("r", "b0"), ("r", "b1"), ("r", "b2"), ("r", "r")),
        {"r": (0, 1, 2, 3), "b0": (0,), "b1": (1,), "b2": (2,)},
    )
    bc = TreeBranchedCover(
        tree,
        {"r": "r", "b0": "r", "b1": "b0", "b2": "b1"},
        {0: 3, 1: 0, 2: 1},
        {v: 1 for v in tree.vertices},
        frozenset({0}),
        frozenset(),
    )
    assert validate_branched_cover(bc) == []
    assert generation(bc, "r") == 0
    assert generation(bc, "b0") == 1
    assert generation(bc, "b2") == 3
    crooked = TreeBranchedCover(
        tree,
        {"r": "r", "b0": "b1", "b1": "b0", "b2": "b1"},
        {0: 3, 1: 0, 2: 1},
        bc.degree,
        frozenset({0}),
        frozenset(),
    )
    with pytest.raises(InvalidTreeError):
        generation(crooked, "b0")


def test_branched_critical_subtree_contains_root_and_is_forward_invariant():
    rng = random.Random(29)
    for _ in range(40):
        bc = random_branched_cover(rng)
        verts, edges = branched_critical_subtree(bc)
        assert bc.tree.root in verts
        assert set(bc.vertex_map[v] for v in verts) <= set(verts)
        for v in verts:
            assert set(bc.tree.order[v]) <= set(edges)


def test_conjugacy_extension_and_uniqueness_match_oracle():
    rng = random.Random(31)
    for _ in range(60):
        h1 = random_branched_cover(rng)
        h2, truth = scrambled_branched_copy(h1, rng)
        phi_crit = branched_phi_crit(h1, truth)
        got = extend_conjugacy(h1, h2, phi_crit)
        assert got.vertex_map == truth.vertex_map
        assert got.edge_map == truth.edge_map
        sols = conjugacy_oracle(h1, h2, phi_crit)
        assert len(sols) == 1
        assert sols[0].vertex_map == truth.vertex_map
        assert sols[0].edge_map == truth.edge_map


def test_conjugacy_rejects_distinct_materialization_frontiers():
    h1 = chain_prefix(2)                      # last marked point unmapped
    h2 = chain_prefix(2, close_cycle=True)    # same tree, fully mapped
    phi = TreeIso({"r": "r"}, {0: 0, 1: 1, 2: 2})
    with pytest.raises(ExtensionError, match="frontier"):
        extend_conjugacy(h1, h2, phi)


def test_conjugacy_rejects_criticality_mismatch():
    h1 = chain_prefix(2)
    bad = TreeBranchedCover(
        h1.tree, h1.vertex_map, dict(h1.edge_map), h1.degree,
        frozenset({0, 1}), h1.complete,
    )
    phi = TreeIso({"r": "r"}, {0: 0, 1: 1, 2: 2})
    with pytest.raises(ExtensionError):
        extend_conjugacy(h1, bad, phi)


def test_conjugacy_requires_seed_on_whole_critical_subtree():
    h1 = chain_prefix(2)
    with pytest.raises(ExtensionError, match="misses"):
        extend_conjugacy(h1, chain_prefix(2), TreeIso({"r": "r"}, {0: 0}))


# -- lazy isomorphism ----------------------------------------------------------


def lazy_family(depth):
    h1 = chain_prefix(depth + 1)
    relabel = {"r": "R", "b0": "B"}
    t = h1.tree
    tree2 = OrientedTree(
        tuple(relabel[v] for v in t.vertices),
        "R",
        tuple((relabel[u], relabel[v]) for u, v in t.edges),
        {relabel[v]: ix for v, ix in t.order.items()},
    )
    h2 = TreeBranchedCover(
        tree2,
        {relabel[v]: relabel[w] for v, w in h1.vertex_map.items()},
        dict(h1.edge_map),
        {relabel[v]: d for v, d in h1.degree.items()},
        h1.critical_edges,
        frozenset(),
    )
    truth = TreeIso(dict(relabel), {i: i for i in range(len(t.edges))})
    return h1, h2, branched_phi_crit(h1, truth)


def test_lazy_isomorphism_deepens_on_demand():
    lazy = LazyIsomorphism(lazy_family, start_depth=1, max_depth=8)
    assert lazy.vertex_image("b0") == "B"
    assert lazy.edge_image(0) == 0
    start_edges = len(lazy.prefix_iso.edge_map)
    assert lazy.edge_image(7) == 7          # forces deepening
    assert len(lazy.prefix_iso.edge_map) > start_edges
    # earlier answers survive the deepening
    assert lazy.vertex_image("b0") == "B"
    assert lazy.edge_image(0) == 0
    with pytest.raises(ExtensionError, match="budget"):
        lazy.edge_image(99)
