"""Immutable in-memory scene graphs loaded from GQA-layout JSON.

Source files store boxes as (x, y, w, h); they are converted to corner
form (x1, y1, x2, y2) at load time and clamped to the image bounds.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

log = logging.getLogger(__name__)


class SceneGraphError(Exception):
    pass


class DanglingRelationError(SceneGraphError):
    pass


class BadBBoxError(SceneGraphError):
    pass


class Direction(enum.Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


@dataclass(frozen=True)
class BBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class SGObject:
    id: str
    name: str
    bbox: BBox
    attributes: tuple[str, ...] = ()


@dataclass(frozen=True)
class SGRelation:
    subject: str
    predicate: str
    object: str


@dataclass(frozen=True)
class SceneGraph:
    image_id: str
    width: float
    height: float
    objects: dict[str, SGObject]
    relations: tuple[SGRelation, ...]
    name_index: dict[str, frozenset[str]] = field(default_factory=dict)
    attr_index: dict[str, frozenset[str]] = field(default_factory=dict)

    def object_order(self, ids: set[str] | frozenset[str]) -> list[str]:
        """Deterministic ordering used for all set-valued results."""
        return [oid for oid in self.objects if oid in ids]


def _clamp_bbox(image_id, obj_id, x, y, w, h, width, height) -> BBox:
    if w < 0 or h < 0:
        raise BadBBoxError(
            f"{image_id}/{obj_id}: negative box size ({w}, {h})"
        )
    x1, y1, x2, y2 = float(x), float(y), float(x + w), float(y + h)
    cx1 = min(max(x1, 0.0), float(width))
    cy1 = min(max(y1, 0.0), float(height))
    cx2 = min(max(x2, 0.0), float(width))
    cy2 = min(max(y2, 0.0), float(height))
    if (cx1, cy1, cx2, cy2) != (x1, y1, x2, y2):
        log.warning(
            "%s/%s: box (%s, %s, %s, %s) exceeds %sx%s image; clamped",
            image_id, obj_id, x1, y1, x2, y2, width, height,
        )
    return BBox(cx1, cy1, cx2, cy2)


def scene_graph_from_dict(image_id: str, data: dict) -> SceneGraph:
    """Build and validate one graph from its GQA JSON entry."""
    width = float(data["width"])
    height = float(data["height"])
    raw_objects = data.get("objects", {})

    objects: dict[str, SGObject] = {}
    for obj_id in sorted(raw_objects):
        entry = raw_objects[obj_id]
        name = str(entry["name"]).strip().lower()
        if not name:
            raise SceneGraphError(f"{image_id}/{obj_id}: empty object name")
        bbox = _clamp_bbox(
            image_id, obj_id,
            entry["x"], entry["y"], entry["w"], entry["h"],
            width, height,
        )
        attrs = []
        for attr in entry.get("attributes", []):
            attr = str(attr).strip().lower()
            if attr and attr not in attrs:
                attrs.append(attr)
        objects[obj_id] = SGObject(obj_id, name, bbox, tuple(attrs))

    relations: list[SGRelation] = []
    for obj_id in sorted(raw_objects):
        for rel in raw_objects[obj_id].get("relations", []):
            target = str(rel["object"])
            if target not in objects:
                raise DanglingRelationError(
                    f"{image_id}: relation from {obj_id} targets missing "
                    f"object {target}"
                )
            if target == obj_id:
                log.warning(
                    "%s/%s: dropping self-relation %r", image_id, obj_id,
                    rel["name"],
                )
                continue
            predicate = str(rel["name"]).strip().lower()
            relations.append(SGRelation(obj_id, predicate, target))

    name_index: dict[str, set[str]] = {}
    attr_index: dict[str, set[str]] = {}
    for obj in objects.values():
        name_index.setdefault(obj.name, set()).add(obj.id)
        for attr in obj.attributes:
            attr_index.setdefault(attr, set()).add(obj.id)

    return SceneGraph(
        image_id=image_id,
        width=width,
        height=height,
        objects=objects,
        relations=tuple(relations),
        name_index={k: frozenset(v) for k, v in name_index.items()},
        attr_index={k: frozenset(v) for k, v in attr_index.items()},
    )


def load_scene_graphs(path: str | Path) -> dict[str, SceneGraph]:
    """Load a GQA scene-graph JSON file into validated graphs keyed by image id."""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise SceneGraphError(f"{path}: expected a JSON object at top level")
    return {
        image_id: scene_graph_from_dict(image_id, entry)
        for image_id, entry in data.items()
    }


def scene_graph_to_dict(g: SceneGraph) -> dict:
    """Inverse of :func:`scene_graph_from_dict` (boxes back to x/y/w/h)."""
    by_subject: dict[str, list[dict]] = {}
    for rel in g.relations:
        by_subject.setdefault(rel.subject, []).append(
            {"name": rel.predicate, "object": rel.object}
        )
    return {
        "width": g.width,
        "height": g.height,
        "objects": {
            obj.id: {
                "name": obj.name,
                "x": obj.bbox.x1,
                "y": obj.bbox.y1,
                "w": obj.bbox.x2 - obj.bbox.x1,
                "h": obj.bbox.y2 - obj.bbox.y1,
                "attributes": list(obj.attributes),
                "relations": by_subject.get(obj.id, []),
            }
            for obj in g.objects.values()
        },
    }


def objects_by_name(g: SceneGraph, name: str) -> frozenset[str]:
    """Ids of objects whose name exactly matches (after lowercasing)."""
    return g.name_index.get(name.strip().lower(), frozenset())


def related(
    g: SceneGraph,
    source_ids: frozenset[str] | set[str],
    predicate: str,
    direction: Direction = Direction.FORWARD,
) -> frozenset[str]:
    """Objects reachable from ``source_ids`` over ``predicate`` edges."""
    predicate = predicate.strip().lower()
    out: set[str] = set()
    for rel in g.relations:
        if rel.predicate != predicate:
            continue
        if direction is Direction.FORWARD and rel.subject in source_ids:
            out.add(rel.object)
        elif direction is Direction.INVERSE and rel.object in source_ids:
            out.add(rel.subject)
    return frozenset(out)
