"""Complex box mappings as first-class values.

A box mapping F: U -> V is stored combinatorially: labeled range disks
(V components), a branch table for the domain disks (U components) with
host, target, degree and an equality flag for domain disks that coincide
with their host, plus the symbolic orbits of the critical points through
the domain disks.  Geometry (closed boundary polylines per component) is
optional; when the mapping was extracted from a puzzle tower the branch
times and the tower itself are kept so branches can be evaluated.

Validation covers the box-mapping axioms: finitely many criticals,
range disks with disjoint closures, domain disks per range disk either
equal to it or compactly inside with disjoint closures, proper branches
with recorded degrees, and the no-cycle condition that every domain disk
eventually escapes the domain.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .puzzle import PuzzleError, winding_number


class BoxMapError(PuzzleError):
    pass


def _poly_distance(outline: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """Distance from each query point to a polyline, vectorized."""
    a = outline[:-1]
    d = outline[1:] - a
    L2 = np.abs(d) ** 2
    L2[L2 == 0] = 1.0
    out = np.empty(len(zs))
    for i, z in enumerate(zs):
        t = np.clip(((z - a) * np.conj(d)).real / L2, 0.0, 1.0)
        out[i] = np.abs(z - (a + t * d)).min()
    return out


def _strided(points: np.ndarray, cap: int) -> np.ndarray:
    if len(points) <= cap:
        return points
    idx = np.linspace(0, len(points) - 1, cap).astype(int)
    return points[idx]


# ---------------------------------------------------------------------------
# the mapping value


@dataclass(frozen=True)
class Branch:
    """One domain disk: where it sits, where it maps, with what degree."""

    host: str
    target: str
    degree: int = 1
    equal: bool = False
    time: Optional[int] = None  # puzzle-backed: the branch is f^time


@dataclass
class BoxMapping:
    v_components: Tuple[str, ...]
    branches: Dict[str, Branch]
    criticals: Tuple[Dict, ...]
    routes: Dict[str, Tuple[str, ...]]
    v_routes: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    outlines: Dict[str, np.ndarray] = field(default_factory=dict)
    pids: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    report: Dict = field(default_factory=dict)
    puzzle: Optional[object] = None

    @property
    def u_components(self) -> Tuple[str, ...]:
        return tuple(sorted(self.branches))

    def hosted(self, v_label: str) -> List[str]:
        return [u for u, b in sorted(self.branches.items()) if b.host == v_label]

    def critical_map(self) -> Dict[str, Dict]:
        return {c["label"]: c for c in self.criticals}


def from_puzzle(
    puz,
    v_comps: Sequence[Tuple[int, int]],
    branch_rows: Dict[Tuple[int, int], Dict],
    crit_rows: Sequence[Dict],
    report: Dict,
) -> BoxMapping:
    """Package extraction output; labels follow sorted piece ids."""
    v_sorted = sorted(map(tuple, v_comps))
    v_label = {pid: f"V{i}" for i, pid in enumerate(v_sorted)}
    u_sorted = sorted(map(tuple, branch_rows))
    u_label = {pid: f"U{i}" for i, pid in enumerate(u_sorted)}

    branches: Dict[str, Branch] = {}
    for pid in u_sorted:
        row = branch_rows[pid]
        branches[u_label[pid]] = Branch(
            host=v_label[tuple(row["host"])],
            target=v_label[tuple(row["target"])],
            degree=int(row["degree"]),
            equal=tuple(row["host"]) == pid,
            time=int(row["time"]),
        )

    budget = int(report.get("budget", 10_000))
    routes: Dict[str, Tuple[str, ...]] = {}
    v_routes: Dict[str, Tuple[str, ...]] = {}
    crits = []
    for row in crit_rows:
        ci = row["index"]
        label = f"c{ci}"
        route: List[str] = []
        vroute: List[str] = []
        t = 0  # accumulated iterate count of the underlying polynomial
        while t <= budget:
            vpid = next(
                (p for p in v_sorted if puz.orbit_piece(ci, t, p[0]) == p),
                None,
            )
            if vpid is None:
                break
            vroute.append(v_label[vpid])
            upid = next(
                (p for p in u_sorted if puz.orbit_piece(ci, t, p[0]) == p),
                None,
            )
            if upid is None:
                break
            route.append(u_label[upid])
            t += branch_rows[upid]["time"]
        routes[label] = tuple(route)
        v_routes[label] = tuple(vroute)
        crits.append(
            {
                "label": label,
                "index": ci,
                "point": row["point"],
                "multiplicity": row["multiplicity"],
                "u_component": u_label.get(
                    tuple(row["u_component"]) if row["u_component"] else None
                ),
                "v_component": v_label.get(
                    tuple(row["v_component"]) if row["v_component"] else None
                ),
            }
        )

    outlines = {}
    pids = {}
    for pid, label in list(v_label.items()) + list(u_label.items()):
        outlines[label] = puz.face(pid).outline.copy()
        pids[label] = pid
    return BoxMapping(
        v_components=tuple(v_label[p] for p in v_sorted),
        branches=branches,
        criticals=tuple(crits),
        routes=routes,
        v_routes=v_routes,
        outlines=outlines,
        pids=pids,
        report=dict(report),
        puzzle=puz,
    )


def to_json_dict(mapping: BoxMapping) -> Dict:
    """JSON-ready form; the tower back-reference is dropped."""
    return {
        "v_components": list(mapping.v_components),
        "branches": {
            u: {
                "host": b.host,
                "target": b.target,
                "degree": b.degree,
                "equal": b.equal,
                "time": b.time,
            }
            for u, b in sorted(mapping.branches.items())
        },
        "criticals": [
            {
                **c,
                "point": [c["point"].real, c["point"].imag]
                if isinstance(c.get("point"), complex)
                else c.get("point"),
            }
            for c in mapping.criticals
        ],
        "routes": {k: list(v) for k, v in sorted(mapping.routes.items())},
        "v_routes": {k: list(v) for k, v in sorted(mapping.v_routes.items())},
        "outlines": {
            k: [[z.real, z.imag] for z in v]
            for k, v in sorted(mapping.outlines.items())
        },
        "pids": {k: list(v) for k, v in sorted(mapping.pids.items())},
    }


def from_json_dict(data: Dict) -> BoxMapping:
    crits = []
    for c in data.get("criticals", []):
        c = dict(c)
        if isinstance(c.get("point"), list):
            c["point"] = complex(c["point"][0], c["point"][1])
        crits.append(c)
    return BoxMapping(
        v_components=tuple(data["v_components"]),
        branches={
            u: Branch(
                host=b["host"],
                target=b["target"],
                degree=int(b["degree"]),
                equal=bool(b["equal"]),
                time=b.get("time"),
            )
            for u, b in data.get("branches", {}).items()
        },
        criticals=tuple(crits),
        routes={k: tuple(v) for k, v in data.get("routes", {}).items()},
        v_routes={k: tuple(v) for k, v in data.get("v_routes", {}).items()},
        outlines={
            k: np.array([complex(p[0], p[1]) for p in v])
            for k, v in data.get("outlines", {}).items()
        },
        pids={k: tuple(v) for k, v in data.get("pids", {}).items()},
    )


def dump_json(mapping: BoxMapping) -> str:
    return json.dumps(to_json_dict(mapping), sort_keys=True, indent=1)


def load_json(text: str) -> BoxMapping:
    return from_json_dict(json.loads(text))


# ---------------------------------------------------------------------------
# validation


def validate_box_mapping(
    mapping: BoxMapping,
    budget: int = 10_000,
    samples: int = 256,
    residual_tol: float = 1e-6,
) -> Dict:
    """Per-axiom verdicts for the box-mapping structure.

    Geometric clauses (disjoint closures, compact containment, branch
    boundary consistency) run on outline samples when geometry is
    present and fall back to the symbolic tables otherwise.  The escape
    clause is a scan of the domain-disk graph: following a domain disk
    through range disks that are themselves domain disks must reach, in
    at most budget steps, a range disk that is not fully covered."""
    rep: Dict = {"conditions": {}, "ok": True}

    def fail(key: str, info):
        rep["conditions"][key] = {"ok": False, **info}
        rep["ok"] = False

    # (1) finitely many critical points, each on a domain disk
    bad = [
        c["label"]
        for c in mapping.criticals
        if c.get("u_component") not in mapping.branches
    ]
    if bad:
        fail("finitely_many_criticals", {"unplaced": bad})
    else:
        rep["conditions"]["finitely_many_criticals"] = {
            "ok": True,
            "count": len(mapping.criticals),
        }

    # structural sanity of the tables
    struct_bad = []
    for u, b in mapping.branches.items():
        if b.host not in mapping.v_components:
            struct_bad.append(f"{u}: unknown host {b.host}")
        if b.target not in mapping.v_components:
            struct_bad.append(f"{u}: unknown target {b.target}")
        if b.degree < 1:
            struct_bad.append(f"{u}: degree {b.degree}")
        if b.equal and mapping.hosted(b.host) != [u]:
            struct_bad.append(
                f"{u}: equals its host but shares it with "
                f"{[x for x in mapping.hosted(b.host) if x != u]}"
            )

    # (2) range disks with disjoint closures
    geom = all(v in mapping.outlines for v in mapping.v_components)
    pairs = []
    ok2 = True
    if geom:
        for i, a in enumerate(mapping.v_components):
            za = _strided(mapping.outlines[a][:-1], samples)
            for bl in mapping.v_components[i + 1:]:
                dist = float(
                    _poly_distance(mapping.outlines[bl], za).min()
                )
                pairs.append({"pair": [a, bl], "distance": dist})
                if dist <= 0.0:
                    ok2 = False
    rep["conditions"]["range_disjoint_closures"] = {
        "ok": ok2,
        "geometric": geom,
        "pairs": pairs,
    }
    if not ok2:
        rep["ok"] = False

    # (3) domain disks per range disk: equal, or compact with disjoint closures
    ok3 = True
    detail3 = []
    for v in mapping.v_components:
        inside = mapping.hosted(v)
        eq = [u for u in inside if mapping.branches[u].equal]
        if eq and len(inside) > 1:
            ok3 = False
            detail3.append({"component": v, "error": "equal plus siblings"})
            continue
        if eq or not inside:
            continue
        if geom and all(u in mapping.outlines for u in inside):
            vo = mapping.outlines[v]
            for i, u in enumerate(inside):
                zu = _strided(mapping.outlines[u][:-1], samples)
                margin = float(_poly_distance(vo, zu).min())
                wn = all(winding_number(vo, z) == 1 for z in zu[:8])
                if not wn or margin <= 0.0:
                    ok3 = False
                detail3.append(
                    {"component": v, "domain": u, "margin": margin}
                )
                for u2 in inside[i + 1:]:
                    gap = float(
                        _poly_distance(mapping.outlines[u2], zu).min()
                    )
                    if gap <= 0.0:
                        ok3 = False
                    detail3.append(
                        {"component": v, "pair": [u, u2], "gap": gap}
                    )
    rep["conditions"]["domain_compact_or_equal"] = {
        "ok": ok3,
        "geometric": geom,
        "detail": detail3,
    }
    if not ok3:
        rep["ok"] = False

    # (4) branches proper with recorded degree
    residuals = []
    ok4 = not struct_bad
    backed = mapping.puzzle is not None
    if backed:
        f = mapping.puzzle.f
        for u, b in sorted(mapping.branches.items()):
            if u not in mapping.outlines or b.target not in mapping.outlines:
                continue
            zs = _strided(mapping.outlines[u][:-1], 64)
            w = zs.copy()
            for _ in range(b.time or 0):
                w = f(w)
            res = float(_poly_distance(mapping.outlines[b.target], w).max())
            residuals.append({"branch": u, "residual": res})
            if res > residual_tol:
                ok4 = False
    rep["conditions"]["branches_proper"] = {
        "ok": ok4,
        "structural_errors": struct_bad,
        "residuals": residuals,
        "geometric": backed,
    }
    if not ok4:
        rep["ok"] = False

    # (5) every domain disk escapes the domain eventually
    ok5 = True
    escapes = {}
    equal_map = {
        mapping.branches[u].host: u
        for u in mapping.branches
        if mapping.branches[u].equal
    }
    for u in mapping.u_components:
        cur = u
        seen = []
        verdict = None
        for _ in range(min(budget, len(mapping.branches) + 1)):
            seen.append(cur)
            tgt = mapping.branches[cur].target
            if tgt not in equal_map:
                verdict = {"ok": True, "steps": len(seen), "exit": tgt}
                break
            cur = equal_map[tgt]
            if cur in seen:
                cyc = seen[seen.index(cur):]
                verdict = {"ok": False, "cycle": cyc}
                break
        if verdict is None:
            verdict = {"ok": False, "cycle": seen[-3:], "note": "budget"}
        escapes[u] = verdict
        if not verdict["ok"]:
            ok5 = False
    rep["conditions"]["every_domain_disk_escapes"] = {
        "ok": ok5,
        "per_component": escapes,
    }
    if not ok5:
        rep["ok"] = False
    return rep


# ---------------------------------------------------------------------------
# fibers


def fiber(mapping: BoxMapping, x: complex, depth: int) -> List[Dict]:
    """Nested chain of return-map puzzle pieces around a point.

    Depth 0 is the range disk holding x; depth m + 1 refines through the
    branch the orbit takes.  The chain stops early (shorter than asked)
    as soon as the orbit leaves the domain: an escaping point has empty
    fiber.  Piece geometry and diameters are reported when the mapping
    is backed by a tower."""
    chain: List[Dict] = []
    v0 = next(
        (
            v
            for v in mapping.v_components
            if v in mapping.outlines
            and winding_number(mapping.outlines[v], x) == 1
        ),
        None,
    )
    if v0 is None:
        return chain
    row: Dict = {"depth": 0, "component": v0}
    if mapping.puzzle is not None:
        pid = mapping.pids[v0]
        row["pid"] = pid
        row["diameter"] = _outline_diameter(mapping.outlines[v0])
    chain.append(row)
    if depth == 0 or mapping.puzzle is None:
        return chain

    puz = mapping.puzzle
    f = puz.f
    z = complex(x)
    total = 0
    host = v0
    for m in range(1, depth + 1):
        u = next(
            (
                u
                for u in mapping.hosted(host)
                if winding_number(mapping.outlines[u], z) == 1
            ),
            None,
        )
        if u is None:
            break  # the orbit escapes: the deeper fiber pieces are empty
        b = mapping.branches[u]
        total += b.time
        target_pid = mapping.pids[b.target]
        d = target_pid[0] + total
        if d > puz.depth:
            chain.append({"depth": m, "component": u, "truncated": True})
            break
        loc = puz.locate(z, d, guard=0.0)
        face = puz.face(loc.pid)
        chain.append(
            {
                "depth": m,
                "component": u,
                "pid": loc.pid,
                "diameter": _outline_diameter(face.outline),
            }
        )
        z = z if b.time == 0 else _iterate(f, z, b.time)
        host = b.target
    return chain


def _iterate(f, z: complex, n: int) -> complex:
    for _ in range(n):
        z = f(z)
    return z


def _outline_diameter(outline: np.ndarray) -> float:
    return float(
        math.hypot(
            outline.real.max() - outline.real.min(),
            outline.imag.max() - outline.imag.min(),
        )
    )


# ---------------------------------------------------------------------------
# naturality diagnostics


def _annulus_bound(inner: np.ndarray, outer: np.ndarray) -> float:
    """Modulus lower bound from a round annulus between the boundaries."""
    z0 = complex(inner[:-1].mean())
    r = float(np.abs(inner - z0).max())
    R = float(np.abs(outer - z0).min())
    if R <= r:
        return 0.0
    return math.log(R / r) / (2.0 * math.pi)


def naturality_report(
    mapping: BoxMapping, grid: int = 12, budget: int = 200
) -> Dict:
    """Sampled lower bounds for the separation moduli, plus an escape census.

    For every hosted domain disk the round-annulus bound for the modulus
    of (range disk minus domain-disk closure) is reported, and the bounds
    are tracked along the critical routes.  A deterministic grid over the
    range is iterated through the branches to estimate what fraction of
    points avoids the critical domain disks forever (budget-relative).
    All values are diagnostics, not certificates."""
    if not mapping.outlines:
        raise BoxMapError("naturality diagnostics need component geometry")
    table = {}
    for u, b in sorted(mapping.branches.items()):
        if b.equal:
            table[u] = 0.0
            continue
        if u in mapping.outlines and b.host in mapping.outlines:
            table[u] = _annulus_bound(
                mapping.outlines[u], mapping.outlines[b.host]
            )
    out: Dict = {"component_bounds": table}

    routes = {}
    for c in mapping.criticals:
        bounds = [table.get(u) for u in mapping.routes.get(c["label"], ())]
        bounds = [b for b in bounds if b is not None]
        routes[c["label"]] = {
            "bounds": bounds,
            "min": min(bounds) if bounds else None,
        }
    out["critical_routes"] = routes
    vals = [r["min"] for r in routes.values() if r["min"] is not None]
    out["min_over_criticals"] = min(vals) if vals else None

    if mapping.puzzle is not None:
        f = mapping.puzzle.f
        crit_disks = [
            c["u_component"]
            for c in mapping.criticals
            if c.get("u_component")
        ]
        xs = []
        for v in mapping.v_components:
            o = mapping.outlines[v]
            re = np.linspace(o.real.min(), o.real.max(), grid)
            im = np.linspace(o.imag.min(), o.imag.max(), grid)
            for zr in re:
                for zi in im:
                    z = complex(zr, zi)
                    if winding_number(o, z) == 1:
                        xs.append((z, v))
        avoid = 0
        tracked = 0
        for z, host in xs:
            tracked += 1
            hit = False
            for _ in range(budget):
                u = next(
                    (
                        u
                        for u in mapping.hosted(host)
                        if winding_number(mapping.outlines[u], z) == 1
                    ),
                    None,
                )
                if u is None:
                    break  # escaped: never meets the critical disks
                if u in crit_disks:
                    hit = True
                    break
                b = mapping.branches[u]
                z = _iterate(f, z, b.time or 0)
                host = b.target
            if not hit:
                avoid += 1
        out["off_critical_fraction"] = {
            "grid_points": tracked,
            "avoiding": avoid,
            "fraction": (avoid / tracked) if tracked else None,
        }
    return out


# ---------------------------------------------------------------------------
# itineraries and combinatorial equivalence


@dataclass(frozen=True)
class ItineraryFamily:
    """One marked boundary point per range disk and one connecting curve
    per boundary preimage of the marked points (indexed per branch sheet).
    Curves are combinatorial labels here; a domain disk equal to its host
    carries boundary curves."""

    marked: Tuple[str, ...]
    curves: Dict[Tuple[str, int], Dict]


def default_family(mapping: BoxMapping) -> ItineraryFamily:
    curves = {}
    for u, b in sorted(mapping.branches.items()):
        for j in range(b.degree):
            curves[(u, j)] = {"on_boundary": bool(b.equal)}
    return ItineraryFamily(marked=tuple(mapping.v_components), curves=curves)


def gamma_itinerary(
    mapping: BoxMapping,
    family: ItineraryFamily,
    route: Sequence[str],
) -> Tuple[Tuple[str, int], ...]:
    """The curve word for a depth-(n+1) domain component given as the
    sequence of domain disks its images run through (length n+1).

    Members of the word are curve labels (domain disk, sheet index); the
    sheet choice is not determined combinatorially, so the
    lexicographically least valid word (all sheet indices zero) is
    returned."""
    if not route:
        raise BoxMapError("a component route must list at least one disk")
    for v in mapping.v_components:
        if v not in family.marked:
            raise BoxMapError(f"family misses a marked point for {v}")
    word = []
    for k, u in enumerate(route):
        if u not in mapping.branches:
            raise BoxMapError(f"unknown domain disk {u}")
        if k > 0:
            prev = mapping.branches[route[k - 1]]
            if mapping.branches[u].host != prev.target:
                raise BoxMapError(
                    f"route breaks at step {k}: {u} does not sit in "
                    f"{prev.target}"
                )
        if (u, 0) not in family.curves:
            raise BoxMapError(f"family misses the curves of {u}")
        word.append((u, 0))
    return tuple(word)


def check_boxmap_equivalence(
    left: BoxMapping,
    right: BoxMapping,
    correspondence: Dict,
    family: Optional[ItineraryFamily],
    depth: int,
) -> Dict:
    """Combinatorial equivalence to finite depth.

    The correspondence carries the combinatorial shadow of the conjugating
    boundary map: bijections of range disks, domain disks, and critical
    points, preserving hosts and the equal-to-host flag.  The verdict is
    YES when, for all k and n at most depth with both critical orbits
    still defined, the curve words of the depth-n pieces around the k-th
    orbit points agree under the correspondence.  The witness of a NO is
    the first mismatch."""
    cv = dict(correspondence.get("v", {}))
    cu = dict(correspondence.get("u", {}))
    cc = dict(correspondence.get("criticals", {}))
    if sorted(cv) != sorted(left.v_components) or sorted(
        cv.values()
    ) != sorted(right.v_components):
        raise BoxMapError("range-disk correspondence is not a bijection")
    if sorted(cu) != sorted(left.u_components) or sorted(
        cu.values()
    ) != sorted(right.u_components):
        raise BoxMapError("domain-disk correspondence is not a bijection")
    lc = sorted(left.routes)
    rc = sorted(right.routes)
    if sorted(cc) != lc or sorted(cc.values()) != rc:
        raise BoxMapError("critical-point correspondence is not a bijection")
    for u, b in left.branches.items():
        bb = right.branches[cu[u]]
        if bb.host != cv[b.host] or bb.equal != b.equal:
            raise BoxMapError(
                f"correspondence does not preserve the containment "
                f"structure at {u}"
            )

    fam = family or default_family(left)
    for c in lc:
        r_l = left.routes[c]
        v_l = left.v_routes.get(c, ())
        r_r = right.routes[cc[c]]
        v_r = right.v_routes.get(cc[c], ())
        for k in range(depth + 1):
            # depth-0 pieces: the range disks around the k-th orbit points
            if k < len(v_l) and k < len(v_r):
                if cv[v_l[k]] != v_r[k]:
                    return {
                        "verdict": "NO",
                        "witness": {
                            "critical": c,
                            "k": k,
                            "n": 0,
                            "expected": cv[v_l[k]],
                            "found": v_r[k],
                        },
                    }
            for n in range(1, depth + 1):
                if k + n > len(r_l) or k + n > len(r_r):
                    continue
                wl = gamma_itinerary(left, fam, r_l[k:k + n])
                wr_expect = tuple((cu[u], j) for u, j in wl)
                wr = gamma_itinerary(
                    right, default_family(right), r_r[k:k + n]
                )
                if wr != wr_expect:
                    pos = next(
                        i for i, (a, b) in enumerate(zip(wr_expect, wr))
                        if a != b
                    )
                    return {
                        "verdict": "NO",
                        "witness": {
                            "critical": c,
                            "k": k,
                            "n": n,
                            "position": pos,
                            "expected": wr_expect[pos],
                            "found": wr[pos],
                        },
                    }
    return {"verdict": "YES", "witness": None}


# ---------------------------------------------------------------------------
# renormalization scan


def renormalizable(mapping: BoxMapping, budget: int = 10_000) -> Dict:
    """Budget-relative scan for periodic critical returns.

    YES when some critical route visits a fixed domain disk (or range
    disk) along all observed multiples of a period, with at least two
    observed returns; the witness names the critical point, the period,
    and the disk.  Escaped or short routes cannot witness, and NO only
    means no period was seen within the budget."""
    for c in sorted(mapping.routes):
        route = mapping.routes[c][: budget + 1]
        vroute = mapping.v_routes.get(c, ())[: budget + 1]
        for seq, kind in ((route, "domain"), (vroute, "range")):
            if len(seq) < 3:
                continue
            for s in range(1, len(seq) // 2 + 1):
                marks = seq[::s]
                if len(marks) >= 3 and all(m == seq[0] for m in marks):
                    return {
                        "verdict": "YES",
                        "witness": {
                            "critical": c,
                            "period": s,
                            "component": seq[0],
                            "kind": kind,
                            "observed_returns": len(marks) - 1,
                        },
                    }
    return {"verdict": "NO", "witness": None}
