"""Stable JSON formats for trees, tree covers, branched covers, and towers.

All dumps are canonical (sorted keys, fixed separators) so reruns are byte
identical.  Exact angles serialize as fraction strings, never floats.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Dict, Optional

from .exact import RhoAngle, RotationNumber
from .treecore import OrientedTree, TreeBranchedCover, TreeCover


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def tree_to_dict(tree: OrientedTree) -> Dict:
    return {
        "vertices": list(tree.vertices),
        "root": tree.root,
        "edges": [[u, v] for u, v in tree.edges],
        "order": {v: list(ix) for v, ix in tree.order.items()},
    }


def tree_from_dict(d: Dict) -> OrientedTree:
    return OrientedTree(
        vertices=tuple(d["vertices"]),
        root=d["root"],
        edges=tuple((u, v) for u, v in d["edges"]),
        order={v: tuple(ix) for v, ix in d["order"].items()},
    )


def cover_to_dict(cover: TreeCover) -> Dict:
    return {
        "source": tree_to_dict(cover.source),
        "target": tree_to_dict(cover.target),
        "map": {
            "vertices": dict(cover.vertex_map),
            "edges": {str(i): j for i, j in cover.edge_map.items()},
        },
        "degrees": dict(cover.degree),
    }


def cover_from_dict(d: Dict) -> TreeCover:
    return TreeCover(
        source=tree_from_dict(d["source"]),
        target=tree_from_dict(d["target"]),
        vertex_map=dict(d["map"]["vertices"]),
        edge_map={int(i): int(j) for i, j in d["map"]["edges"].items()},
        degree={v: int(k) for v, k in d["degrees"].items()},
    )


def branched_cover_to_dict(bc: TreeBranchedCover) -> Dict:
    d = tree_to_dict(bc.tree)
    d["map"] = {
        "vertices": dict(bc.vertex_map),
        "edges": {str(i): j for i, j in bc.edge_map.items()},
    }
    d["degrees"] = dict(bc.degree)
    d["critical_edges"] = sorted(bc.critical_edges)
    d["complete"] = sorted(bc.complete) if bc.complete is not None else None
    return d


def branched_cover_from_dict(d: Dict) -> TreeBranchedCover:
    return TreeBranchedCover(
        tree=tree_from_dict(d),
        vertex_map=dict(d["map"]["vertices"]),
        edge_map={int(i): int(j) for i, j in d["map"]["edges"].items()},
        degree={v: int(k) for v, k in d["degrees"].items()},
        critical_edges=frozenset(d.get("critical_edges", [])),
        complete=(
            frozenset(d["complete"]) if d.get("complete") is not None else None
        ),
    )


# ---------------------------------------------------------------------------
# towers


def rotation_to_dict(rho: RotationNumber) -> Dict:
    return {"terms": list(rho.terms), "repeat": rho.repeat}


def rotation_from_dict(d: Dict) -> RotationNumber:
    return RotationNumber(tuple(int(a) for a in d["terms"]), int(d.get("repeat", 0)))


def angle_to_dict(t: RhoAngle, rho: Optional[RotationNumber] = None) -> Dict:
    out: Dict = {"a": str(t.a)}
    if t.b != 0:
        out["b"] = str(t.b)
    return out


def angle_from_dict(d: Dict, rho: Optional[RotationNumber]) -> RhoAngle:
    b = Fraction(d["b"]) if "b" in d else Fraction(0)
    return RhoAngle(Fraction(d["a"]), b, rho if b != 0 else None)


def address_to_dict(adr) -> Dict:
    out: Dict = {"level": adr.level}
    if adr.cut:
        out["cut"] = True
        return out
    if adr.level == 0:
        out["angle"] = angle_to_dict(adr.angle) if adr.angle is not None else None
        return out
    out["joints"] = [address_to_dict(j) for j in adr.joints]
    out["point"] = address_to_dict(adr.point) if adr.point is not None else None
    return out


def address_from_dict(d: Dict, rho: Optional[RotationNumber]):
    from .fatou import Address

    level = int(d["level"])
    if d.get("cut"):
        return Address(level, cut=True)
    if level == 0:
        raw = d.get("angle")
        return Address(0, angle=angle_from_dict(raw, rho) if raw is not None else None)
    return Address(
        level,
        tuple(address_from_dict(j, rho) for j in d.get("joints", [])),
        address_from_dict(d["point"], rho) if d.get("point") is not None else None,
        None,
    )


def tower_to_dict(spec) -> Dict:
    root = spec.root
    if root.kind == "rotation":
        tag = {"kind": "rotation", "rho": rotation_to_dict(root.rho)}
    else:
        tag = {"kind": "power", "degree": root.degree}
    levels = []
    for lvl in spec.levels:
        entry = {
            "cover": branched_cover_to_dict(lvl.cover),
            "attach": {str(i): address_to_dict(adr) for i, adr in lvl.attach.items()},
        }
        if lvl.labels:
            entry["labels"] = dict(lvl.labels)
        levels.append(entry)
    return {"format": "fatou-tower", "version": 1, "root": tag, "levels": levels}


def tower_from_dict(d: Dict):
    from .fatou import FatouTowerSpec, RootDynamics, TowerError, TowerLevel

    if d.get("format") != "fatou-tower":
        raise TowerError("not a tower spec document")
    tag = d["root"]
    if tag["kind"] == "rotation":
        root = RootDynamics("rotation", rho=rotation_from_dict(tag["rho"]))
    else:
        root = RootDynamics("power", degree=int(tag["degree"]))
    levels = []
    for entry in d["levels"]:
        levels.append(
            TowerLevel(
                cover=branched_cover_from_dict(entry["cover"]),
                attach={
                    int(i): address_from_dict(a, root.rho)
                    for i, a in entry["attach"].items()
                },
                labels=dict(entry.get("labels", {})),
            )
        )
    return FatouTowerSpec(root, tuple(levels))
