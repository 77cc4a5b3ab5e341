"""Tower addresses, angle lifts, root selection, and equivalence decisions."""

import json
import random
from fractions import Fraction

import pytest

from siegelpuzzle.exact import RhoAngle, RotationNumber, ccw_distance
from siegelpuzzle.fatou import (
    Address,
    FatouTowerSpec,
    RootDynamics,
    RootProblem,
    TowerError,
    TowerLevel,
    VertexInternals,
    address,
    angle_address,
    assign_root,
    boundary_angle_lift,
    choose_root,
    critical_addresses,
    decide_equivalence,
    edge_address,
    joint_angle,
    path_word,
    perturb_attachment,
    random_tower_spec,
    truncate_address,
    validate_tower,
    vertex_address,
    vertex_cover_degree,
)
from siegelpuzzle.generate import scrambled_branched_copy
from siegelpuzzle.treecore import OrientedTree, TreeBranchedCover
from siegelpuzzle.treeio import canonical_json, tower_from_dict, tower_to_dict

GOLDEN = RotationNumber.golden()


def ang(x) -> RhoAngle:
    return RhoAngle.rational(Fraction(x))


def adr0(x) -> Address:
    return angle_address(Fraction(x))


def chain_tag(level, x) -> Address:
    """Tag attaching at the given angle on k nested interior-root boundaries."""
    cur = adr0(x)
    for m in range(1, level):
        cur = Address(m, (), cur, None)
    return cur


def minimal_cover(extra_degree=None):
    """Root, one marked loop, a critical child, and a depth-two grandchild."""
    tree = OrientedTree(
        vertices=("r", "b0", "w"),
        root="r",
        edges=(("r", "b0"), ("r", "r"), ("b0", "w")),
        order={"r": (0, 1), "b0": (0, 2), "w": (2,)},
    )
    degree = {"r": 1, "b0": 1, "w": 1}
    if extra_degree:
        degree.update(extra_degree)
    return TreeBranchedCover(
        tree=tree,
        vertex_map={"r": "r", "b0": "r", "w": "b0"},
        edge_map={0: 1, 1: 1, 2: 0},
        degree=degree,
        critical_edges=frozenset({0}),
        complete=frozenset(),
    )


def one_level_tower(extra_degree=None, tags=None):
    cov = minimal_cover(extra_degree)
    attach = {0: adr0("1/5"), 1: adr0("2/5"), 2: adr0("3/5")}
    if tags:
        attach.update(tags)
    spec = FatouTowerSpec(
        RootDynamics("rotation", rho=GOLDEN),
        (TowerLevel(cov, attach, {"e0": "std"}),),
    )
    assert validate_tower(spec) == []
    return spec


# ---------------------------------------------------------------------------
# addresses


class TestAddress:
    def test_level_zero_is_bare_angle(self):
        with pytest.raises(TowerError):
            Address(0, joints=(adr0("1/2"),))
        with pytest.raises(TowerError):
            Address(2, angle=ang("1/2"))

    def test_joint_levels_checked(self):
        with pytest.raises(TowerError):
            Address(2, joints=(adr0("1/2"),))  # needs level-1 joints

    def test_canonical_text(self):
        a = Address(1, (adr0("1/3"),), adr0("1/2"))
        assert str(a) == "([1/3];1/2)"
        assert str(Address(1, (), None)) == "([];*)"
        assert str(angle_address(RhoAngle.of_rho(2, GOLDEN))) == "-1+2r"

    def test_truncation_composes(self):
        rng = random.Random(5)
        spec = random_tower_spec(rng, levels=3)
        pool = [
            edge_address(spec, n, i)
            for n in range(1, 4)
            for i in sorted(spec.level(n).attach)
        ]
        for adr in pool:
            for k in range(0, 4):
                assert truncate_address(truncate_address(adr, k + 1), k) == truncate_address(adr, k)

    def test_marked_root_point_has_level_zero_address(self):
        spec = one_level_tower()
        assert address(spec, ("angle", 0)) == adr0(0)

    def test_interior_vertex_one_step_path(self):
        # a vertex hanging by a single joint: the address is that joint's tag
        spec = one_level_tower()
        got = address(spec, ("vertex", 1, "b0"))
        assert got == Address(1, (adr0("1/5"),), None)
        deep = address(spec, ("vertex", 1, "w"))
        assert deep == Address(1, (adr0("1/5"), adr0("3/5")), None)

    def test_edge_and_loop_addresses(self):
        spec = one_level_tower()
        assert edge_address(spec, 1, 0) == Address(1, (), adr0("1/5"))
        # the marked loop is carried by the root
        assert edge_address(spec, 1, 1) == Address(1, (), adr0("2/5"))
        assert edge_address(spec, 1, 2) == Address(1, (adr0("1/5"),), adr0("3/5"))

    def test_underspecified_descriptor(self):
        spec = one_level_tower()
        with pytest.raises(TowerError):
            address(spec, ("mystery", 1))
        with pytest.raises(TowerError):
            address(spec, ("boundary", 1, "r", Address(1, (), adr0(0))))


class TestJointCascade:
    def test_direct_tag(self):
        spec = one_level_tower()
        assert joint_angle(spec, 1, "b0") == ang("1/5")
        assert joint_angle(spec, 1, "w") == ang("3/5")
        assert joint_angle(spec, 1, "r") is None

    def test_cascade_matches_step_by_step_recursion(self):
        # tags that attach on nested interior-root boundaries force the
        # cascade through several point descents and one path-word descent
        rng = random.Random(11)
        spec = random_tower_spec(rng, levels=3)
        lvl = spec.level(3)
        tree = lvl.cover.tree
        v = next(u for u in tree.vertices if u != tree.root)

        def recursion_oracle(adr):
            # one step of the pull-down rule per loop turn
            while adr.level > 0:
                adr = adr.joints[0] if adr.joints else adr.point
            return adr.angle

        ji = tree.joint(v)
        assert joint_angle(spec, 3, v) == recursion_oracle(lvl.attach[ji])

    def test_cascade_through_mixed_words(self):
        word = Address(1, (chain_tag(1, "1/7"),), chain_tag(1, "2/7"))
        spec2 = one_level_tower()
        lvl2 = TowerLevel(
            minimal_cover(),
            {0: word, 1: Address(1, (), chain_tag(1, "3/7")), 2: Address(1, (), chain_tag(1, "4/7"))},
        )
        spec = FatouTowerSpec(spec2.root, (spec2.levels[0], lvl2))
        assert validate_tower(spec) == []
        # nonempty path word descends into its first joint
        assert joint_angle(spec, 2, "b0") == ang("1/7")


# ---------------------------------------------------------------------------
# boundary angle lifts


class TestBoundaryAngleLift:
    def test_tower_root_is_identity(self):
        spec = one_level_tower()
        t = RhoAngle.of_rho(3, GOLDEN)
        assert boundary_angle_lift(spec, 1, "r", t) == t

    def test_degree_one_is_identity(self):
        spec = one_level_tower()
        assert boundary_angle_lift(spec, 1, "b0", ang("1/2")) == ang("1/2")

    def test_doubling_picks_joint_window(self):
        # w has degree 2 over the root; its joint's iterated image is the
        # marked loop at angle 2/5, so the window is [1/5, 7/10)
        spec = one_level_tower(extra_degree={"w": 2})
        s = boundary_angle_lift(spec, 1, "w", ang("1/2"))
        assert s in (ang("1/4"), ang("3/4"))
        assert s == ang("1/4")
        # moving the marked point past 1/2 flips the branch
        spec2 = one_level_tower(extra_degree={"w": 2}, tags={1: adr0("4/5")})
        assert boundary_angle_lift(spec2, 1, "w", ang("1/2")) == ang("3/4")

    def test_lift_times_degree_is_identity(self):
        rng = random.Random(23)
        hits = branched = 0
        for _ in range(25):
            spec = random_tower_spec(rng, levels=rng.randint(1, 3))
            for n in range(1, spec.height + 1):
                for v in spec.level(n).cover.tree.vertices:
                    if spec.root.kind == "rotation":
                        t = RhoAngle(Fraction(1, 9), Fraction(rng.randint(0, 2)), spec.root.rho)
                    else:
                        t = ang(Fraction(rng.randint(0, 8), 9))
                    try:
                        s = boundary_angle_lift(spec, n, v, t)
                    except TowerError:
                        continue  # joint image not materialized for this vertex
                    d = vertex_cover_degree(spec, n, v)
                    assert s.scale(d) == t
                    hits += 1
                    branched += d >= 2
        assert hits > 50 and branched > 5


# ---------------------------------------------------------------------------
# root selection


class TestChooseRoot:
    def test_degree_one_unique_preimage(self):
        assert choose_root(RootProblem(1, {"p": ang("1/3")})) == "p"
        with pytest.raises(TowerError):
            choose_root(RootProblem(1, {"p": ang("1/3"), "q": ang("2/3")}))

    def test_counterclockwise_first_from_joint(self):
        prob = RootProblem(
            2, {"x0": ang("1/10"), "x1": ang("3/5")}, joint_lift=ang("1/2")
        )
        assert choose_root(prob) == "x1"
        prob2 = RootProblem(
            2, {"x0": ang("1/10"), "x1": ang("3/5")}, joint_lift=ang("7/10")
        )
        assert choose_root(prob2) == "x0"

    def test_missing_joint_data(self):
        with pytest.raises(TowerError):
            choose_root(RootProblem(2, {"x0": ang(0), "x1": ang("1/2")}))


def three_stage_tower():
    """Internals along a generation chain r -> b0 -> w, with w branched."""
    cov = minimal_cover(extra_degree={"w": 2})
    attach = {0: adr0("1/5"), 1: adr0("2/5"), 2: adr0("3/5")}
    internals = {
        "r": VertexInternals(
            tree=OrientedTree(("R", "S"), "R", (("R", "S"),), {"R": (0,), "S": (0,)}),
            params={"R": ang(0), "S": ang("1/2")},
            image_vertex={"R": "R", "S": "S"},
            degree=1,
        ),
        "b0": VertexInternals(
            tree=OrientedTree(("p", "q"), "p", (("p", "q"),), {"p": (0,), "q": (0,)}),
            params={"p": ang(0), "q": ang("1/3")},
            image_vertex={"p": "R", "q": "S"},
            degree=1,
        ),
        "w": VertexInternals(
            tree=OrientedTree(
                ("x0", "x1", "y0", "y1"),
                "x0",
                (("x0", "x1"), ("x0", "y0"), ("x0", "y1")),
                {"x0": (0, 1, 2), "x1": (0,), "y0": (1,), "y1": (2,)},
            ),
            params={
                "x0": ang("1/10"),
                "x1": ang("3/5"),
                "y0": ang("7/20"),
                "y1": ang("17/20"),
            },
            image_vertex={"x0": "p", "x1": "p", "y0": "q", "y1": "q"},
            degree=2,
            joint_lift=ang("1/2"),
        ),
    }
    level = TowerLevel(minimal_cover(extra_degree={"w": 2}), attach, internals=internals)
    spec = FatouTowerSpec(RootDynamics("rotation", rho=GOLDEN), (level,))
    assert validate_tower(spec) == []
    return spec


class TestAssignRoot:
    def test_level_root_keeps_interior_root(self):
        spec = three_stage_tower()
        assert assign_root(spec, 1, "r") == "R"

    def test_degree_one_pulls_back(self):
        spec = three_stage_tower()
        assert assign_root(spec, 1, "b0") == "p"

    def test_branched_vertex_matches_trace_oracle(self):
        spec = three_stage_tower()
        got = assign_root(spec, 1, "w")

        # oracle: walk every anchored interior point counterclockwise from
        # the joint and report the first preimage of the image root
        itn = spec.level(1).internals["w"]
        image_root = assign_root(spec, 1, "b0")
        order = sorted(
            itn.params,
            key=lambda name: ccw_distance(itn.joint_lift, itn.params[name]).value(),
        )
        first = next(w for w in order if itn.image_vertex[w] == image_root)
        assert got == first == "x1"

    def test_recomputation_agrees(self):
        spec = three_stage_tower()
        assert assign_root(spec, 1, "w") == assign_root(spec, 1, "w")

    def test_missing_internals(self):
        spec = one_level_tower()
        with pytest.raises(TowerError, match="induction data"):
            assign_root(spec, 1, "b0")


# ---------------------------------------------------------------------------
# critical addresses and equivalence


class TestDecideEquivalence:
    def test_reflexive_with_identity_witness(self):
        spec = random_tower_spec(random.Random(1), levels=2)
        rep = decide_equivalence(spec, spec, depth=6)
        assert rep["verdict"] == "YES"
        for lw in rep["witness"]["levels"]:
            assert all(k == v for k, v in lw["vertices"].items())

    def test_single_angle_perturbation_is_localized(self):
        rng = random.Random(2)
        for _ in range(20):
            spec = random_tower_spec(rng, levels=rng.randint(1, 3))
            pert, (n, i) = perturb_attachment(spec, rng)
            rep = decide_equivalence(spec, pert, depth=6)
            assert rep["verdict"] == "NO"
            w = rep["witness"]
            assert w["kind"] in ("critical_address", "attachment")
            assert w["level"] == n

    def test_scrambled_copy_with_transported_tags(self):
        rng = random.Random(3)
        for _ in range(10):
            a = random_tower_spec(rng, levels=2)
            levels = []
            for lvl in a.levels:
                cov2, truth = scrambled_branched_copy(lvl.cover, rng)
                attach2 = {truth.edge_map[i]: adr for i, adr in lvl.attach.items()}
                labels2 = {}
                for key, val in lvl.labels.items():
                    if key.startswith("e") and key[1:].isdigit():
                        labels2[f"e{truth.edge_map[int(key[1:])]}"] = val
                    else:
                        labels2[truth.vertex_map.get(key, key)] = val
                levels.append(TowerLevel(cov2, attach2, labels2))
            b = FatouTowerSpec(a.root, tuple(levels))
            assert validate_tower(b) == []
            rep = decide_equivalence(a, b, depth=6)
            assert rep["verdict"] == "YES", rep
            # the witness really conjugates every materialized level
            for n, lw in enumerate(rep["witness"]["levels"], start=1):
                ca, cb = a.level(n).cover, b.level(n).cover
                phi_v = lw["vertices"]
                phi_e = {int(i): j for i, j in lw["edges"].items()}
                for v in ca.tree.vertices:
                    assert phi_v[ca.vertex_map[v]] == cb.vertex_map[phi_v[v]]
                for i, img in ca.edge_map.items():
                    if cb.edge_map.get(phi_e[i]) is not None:
                        assert phi_e[img] == cb.edge_map[phi_e[i]]
                for i, adr in a.level(n).attach.items():
                    assert b.level(n).attach[phi_e[i]] == adr

    def test_symmetric(self):
        rng = random.Random(4)
        a = random_tower_spec(rng, levels=2)
        b, _ = perturb_attachment(a, rng)
        assert decide_equivalence(a, b, 6)["verdict"] == decide_equivalence(b, a, 6)["verdict"]
        assert decide_equivalence(a, a, 3)["verdict"] == "YES"

    def test_no_is_monotone_in_depth(self):
        rng = random.Random(6)
        for _ in range(10):
            a = random_tower_spec(rng, levels=rng.randint(1, 3))
            b, _ = perturb_attachment(a, rng)
            verdicts = [decide_equivalence(a, b, d)["verdict"] for d in range(1, 8)]
            seen_no = False
            for v in verdicts:
                if seen_no:
                    assert v == "NO"
                seen_no = seen_no or v == "NO"
            assert seen_no

    def test_root_tag_mismatch(self):
        a = random_tower_spec(random.Random(8), levels=1, kind="rotation")
        b = random_tower_spec(random.Random(8), levels=1, kind="power")
        rep = decide_equivalence(a, b, 6)
        assert rep["verdict"] == "NO"
        assert rep["witness"]["kind"] == "root_dynamics"

    def test_conformal_label_mismatch(self):
        a = one_level_tower()
        lvl = a.levels[0]
        b = FatouTowerSpec(a.root, (TowerLevel(lvl.cover, lvl.attach, {"e0": "flip"}),))
        rep = decide_equivalence(a, b, 6)
        assert rep["verdict"] == "NO"
        assert rep["witness"]["kind"] == "conformal_label"

    def test_malformed_spec_raises(self):
        a = one_level_tower()
        lvl = a.levels[0]
        broken = FatouTowerSpec(a.root, (TowerLevel(lvl.cover, {0: adr0("1/5")}),))
        with pytest.raises(TowerError, match="malformed"):
            decide_equivalence(broken, a, 6)

    def test_duplicate_attachments_rejected(self):
        a = one_level_tower()
        lvl = a.levels[0]
        dup = dict(lvl.attach)
        dup[1] = dup[0]  # two boundary points at the same angle on the root
        errs = validate_tower(FatouTowerSpec(a.root, (TowerLevel(lvl.cover, dup),)))
        assert any("two edges attached" in e for e in errs)


class TestCriticalAddresses:
    def test_minimal_tower_critical_set(self):
        spec = one_level_tower()
        got = critical_addresses(spec)
        assert got == frozenset({(Address(1, (), adr0("1/5")), 2)})

    def test_degrees_recorded(self):
        spec = one_level_tower(extra_degree={"w": 3})
        got = dict(critical_addresses(spec))
        assert got[Address(1, (adr0("1/5"), adr0("3/5")), None)] == 3


class TestTowerJson:
    def test_round_trip_is_byte_stable(self):
        rng = random.Random(9)
        for _ in range(10):
            spec = random_tower_spec(rng, levels=rng.randint(1, 3))
            blob = canonical_json(tower_to_dict(spec))
            back = tower_from_dict(json.loads(blob))
            assert canonical_json(tower_to_dict(back)) == blob
            assert decide_equivalence(spec, back, 6)["verdict"] == "YES"

    def test_rejects_foreign_documents(self):
        with pytest.raises(TowerError):
            tower_from_dict({"format": "something-else"})
