"""Rule-based execution of program trees over scene graphs.

Each node is evaluated by the rule attached to its function subtype,
consuming the results of its referenced nodes. Every member of an
object-set result is kept, never a single representative.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .programs import ProgramTree, FunctionSpec, ResultKind, topological_layers
from .scenegraph import (
    BBox,
    Direction,
    SceneGraph,
    objects_by_name,
    related,
)

log = logging.getLogger(__name__)


class ExecutionError(Exception):
    pass


class RuleTypeMismatchError(ExecutionError):
    pass


class UnknownPredicateCategoryError(ExecutionError):
    pass


class EmptyInputToQueryError(ExecutionError):
    pass


class NonAnswerRootError(ExecutionError):
    pass


@dataclass(frozen=True)
class ObjectItem:
    bbox: BBox
    id: str | None = None
    name: str | None = None


@dataclass(frozen=True)
class Objects:
    items: tuple[ObjectItem, ...] = ()

    @property
    def ids(self) -> tuple[str | None, ...]:
        return tuple(item.id for item in self.items)


@dataclass(frozen=True)
class Boolean:
    value: bool


@dataclass(frozen=True)
class Answer:
    value: str


StepResult = Objects | Boolean | Answer

RESULT_TAGS = {Objects: ResultKind.OBJECTS, Boolean: ResultKind.BOOLEAN,
               Answer: ResultKind.ANSWER}


@dataclass
class ExecutionTrace:
    question_id: str
    image_id: str
    per_node: list[StepResult]
    final_answer: str
    warnings: list[str] = field(default_factory=list)


_DEFAULT_CATEGORIES: dict[str, tuple[str, ...]] | None = None


def load_categories(path: str | Path | None = None) -> dict[str, tuple[str, ...]]:
    """Attribute category table (color, material, ...). Bundled by default."""
    global _DEFAULT_CATEGORIES
    if path is None:
        if _DEFAULT_CATEGORIES is None:
            text = (
                resources.files("sgqa") / "data" / "attribute_categories.json"
            ).read_text(encoding="utf-8")
            _DEFAULT_CATEGORIES = {
                k: tuple(v) for k, v in json.loads(text).items()
            }
        return _DEFAULT_CATEGORIES
    with open(path, encoding="utf-8") as f:
        return {k: tuple(v) for k, v in json.load(f).items()}


def _objects_from_ids(g: SceneGraph, ids: frozenset[str] | set[str]) -> Objects:
    return Objects(tuple(
        ObjectItem(g.objects[oid].bbox, oid, g.objects[oid].name)
        for oid in g.object_order(set(ids))
    ))


def _want_objects(result: StepResult, subtype: str) -> Objects:
    if not isinstance(result, Objects):
        raise RuleTypeMismatchError(
            f"{subtype}: expected an object set, got {type(result).__name__}"
        )
    return result


def _want_boolean(result: StepResult, subtype: str) -> bool:
    if not isinstance(result, Boolean):
        raise RuleTypeMismatchError(
            f"{subtype}: expected a boolean, got {type(result).__name__}"
        )
    return result.value


def _first_object(objs: Objects, subtype: str, g: SceneGraph,
                  warnings: list[str] | None = None):
    if not objs.items:
        raise EmptyInputToQueryError(f"{subtype}: empty object set")
    if len(objs.items) > 1 and warnings is not None:
        warnings.append(
            f"{subtype}: {len(objs.items)} candidates, using first"
        )
    return g.objects[objs.items[0].id]


def _category_value(obj, category: str,
                    categories: dict[str, tuple[str, ...]]) -> str:
    if category not in categories:
        raise UnknownPredicateCategoryError(
            f"unknown attribute category {category!r}"
        )
    members = categories[category]
    for attr in obj.attributes:
        if attr in members:
            return attr
    raise EmptyInputToQueryError(
        f"object {obj.id!r} has no {category} attribute"
    )


def eval_node(
    spec: FunctionSpec,
    inputs: list[StepResult],
    text_args: list[str] | tuple[str, ...],
    g: SceneGraph,
    categories: dict[str, tuple[str, ...]] | None = None,
    warnings: list[str] | None = None,
) -> StepResult:
    """Apply one function rule. ``inputs`` follow the order of the ref slots."""
    if categories is None:
        categories = load_categories()
    st = spec.subtype
    text = list(text_args)

    if st == "select":
        return _objects_from_ids(g, objects_by_name(g, text[0]))
    if st == "filter_attr":
        src = _want_objects(inputs[0], st)
        attr = text[0]
        return Objects(tuple(
            item for item in src.items
            if attr in g.objects[item.id].attributes
        ))
    if st in ("relate_name", "relate_inv_name", "relate_attr"):
        src = _want_objects(inputs[0], st)
        predicate = text[0]
        direction = (
            Direction.INVERSE if st == "relate_inv_name" else Direction.FORWARD
        )
        reached = related(g, set(src.ids), predicate, direction)
        if st == "relate_attr":
            attr = text[1]
            reached = frozenset(
                oid for oid in reached if attr in g.objects[oid].attributes
            )
        else:
            name = text[1]
            reached = frozenset(
                oid for oid in reached if g.objects[oid].name == name
            )
        return _objects_from_ids(g, reached)
    if st == "verify_attr":
        src = _want_objects(inputs[0], st)
        attr = text[0]
        return Boolean(any(
            attr in g.objects[item.id].attributes for item in src.items
        ))
    if st == "verify_rel":
        src = _want_objects(inputs[0], st)
        predicate, name = text
        reached = related(g, set(src.ids), predicate, Direction.FORWARD)
        return Boolean(any(g.objects[oid].name == name for oid in reached))
    if st == "exist":
        return Boolean(bool(_want_objects(inputs[0], st).items))
    if st == "and":
        return Boolean(_want_boolean(inputs[0], st)
                       and _want_boolean(inputs[1], st))
    if st == "or":
        return Boolean(_want_boolean(inputs[0], st)
                       or _want_boolean(inputs[1], st))
    if st == "query_name":
        obj = _first_object(_want_objects(inputs[0], st), st, g, warnings)
        return Answer(obj.name)
    if st == "query_attr":
        obj = _first_object(_want_objects(inputs[0], st), st, g, warnings)
        return Answer(_category_value(obj, text[0], categories))
    if st == "choose_attr":
        obj = _first_object(_want_objects(inputs[0], st), st, g, warnings)
        category, a, b = text
        if category not in categories:
            raise UnknownPredicateCategoryError(
                f"unknown attribute category {category!r}"
            )
        return Answer(a if a in obj.attributes else b)
    if st == "choose_name":
        src = _want_objects(inputs[0], st)
        if not src.items:
            raise EmptyInputToQueryError(f"{st}: empty object set")
        a, b = text
        names = {g.objects[item.id].name for item in src.items}
        return Answer(a if a in names else b)
    if st in ("compare_same", "compare_diff"):
        left = _first_object(_want_objects(inputs[0], st), st, g, warnings)
        right = _first_object(_want_objects(inputs[1], st), st, g, warnings)
        same = (_category_value(left, text[0], categories)
                == _category_value(right, text[0], categories))
        return Boolean(same if st == "compare_same" else not same)
    if st == "compare_common":
        left = _first_object(_want_objects(inputs[0], st), st, g, warnings)
        right = _first_object(_want_objects(inputs[1], st), st, g, warnings)
        for attr in left.attributes:
            if attr in right.attributes:
                return Answer(attr)
        raise EmptyInputToQueryError(
            f"objects {left.id!r} and {right.id!r} share no attribute"
        )
    raise ExecutionError(f"no rule for subtype {st!r}")


def normalize_answer(result: StepResult) -> str:
    if isinstance(result, Boolean):
        return "yes" if result.value else "no"
    if isinstance(result, Answer):
        return result.value
    raise NonAnswerRootError("root node yields an object set, not an answer")


def execute(
    tree: ProgramTree,
    g: SceneGraph,
    question_id: str = "",
    categories: dict[str, tuple[str, ...]] | None = None,
) -> ExecutionTrace:
    """Evaluate every node in topological-layer order and return the trace."""
    if categories is None:
        categories = load_categories()
    per_node: list[StepResult | None] = [None] * len(tree.nodes)
    warnings: list[str] = []
    for layer in topological_layers(tree):
        for index in layer:
            node = tree.nodes[index]
            inputs = [per_node[r] for r in node.ref_args]
            result = eval_node(
                node.spec, inputs, node.text_args, g, categories, warnings
            )
            if RESULT_TAGS[type(result)] is not node.spec.result_kind:
                raise RuleTypeMismatchError(
                    f"node {index}: rule produced {type(result).__name__}, "
                    f"spec says {node.spec.result_kind.value}"
                )
            per_node[index] = result
    final = normalize_answer(per_node[tree.root])
    return ExecutionTrace(question_id, g.image_id, list(per_node), final,
                          warnings)


def step_to_dict(result: StepResult) -> dict:
    if isinstance(result, Objects):
        return {
            "tag": "objects",
            "items": [
                {"id": item.id, "bbox": list(item.bbox.as_tuple())}
                for item in result.items
            ],
        }
    if isinstance(result, Boolean):
        return {"tag": "bool", "value": result.value}
    return {"tag": "answer", "value": result.value}


def trace_to_dict(trace: ExecutionTrace) -> dict:
    return {
        "qid": trace.question_id,
        "image": trace.image_id,
        "steps": [step_to_dict(step) for step in trace.per_node],
        "answer": trace.final_answer,
    }
