"""Naive reference evaluator used as an independent oracle.

Works directly on the raw GQA-layout dict with plain recursion and linear
scans: no indices, no topological layers, no shared helpers from the
executor under test. Only the exception classes are shared so outcomes
can be compared by type.
"""

from __future__ import annotations

from sgqa.executor import (
    EmptyInputToQueryError,
    NonAnswerRootError,
    UnknownPredicateCategoryError,
    load_categories,
)
from sgqa.programs import ProgramTree


def _clamped_box(entry, width, height):
    x1 = min(max(float(entry["x"]), 0.0), float(width))
    y1 = min(max(float(entry["y"]), 0.0), float(height))
    x2 = min(max(float(entry["x"] + entry["w"]), 0.0), float(width))
    y2 = min(max(float(entry["y"] + entry["h"]), 0.0), float(height))
    return (x1, y1, x2, y2)


def _attrs(entry):
    seen = []
    for a in entry.get("attributes", []):
        a = str(a).strip().lower()
        if a and a not in seen:
            seen.append(a)
    return seen


def _first(ids):
    if not ids:
        raise EmptyInputToQueryError("oracle: empty object set")
    return min(ids)


def _category_value(entry, category, categories):
    if category not in categories:
        raise UnknownPredicateCategoryError(category)
    for attr in _attrs(entry):
        if attr in categories[category]:
            return attr
    raise EmptyInputToQueryError("oracle: missing category value")


def oracle_execute(tree: ProgramTree, raw_graph: dict):
    """Evaluate recursively from the root; returns (per_node, final_answer).

    Object-set results are reported as sorted id lists.
    """
    objects = raw_graph["objects"]
    categories = load_categories()

    def edges():
        for subj in objects:
            for rel in objects[subj].get("relations", []):
                if str(rel["object"]) != subj:
                    yield subj, str(rel["name"]).strip().lower(), str(rel["object"])

    def name_of(oid):
        return str(objects[oid]["name"]).strip().lower()

    def evaluate(index):
        node = tree.nodes[index]
        st = node.spec.subtype
        text = list(node.text_args)
        refs = list(node.ref_args)

        if st == "select":
            return sorted(o for o in objects if name_of(o) == text[0])
        if st == "filter_attr":
            return sorted(o for o in evaluate(refs[0])
                          if text[0] in _attrs(objects[o]))
        if st == "relate_name":
            src = evaluate(refs[0])
            return sorted({o for s, p, o in edges()
                           if s in src and p == text[0]
                           and name_of(o) == text[1]})
        if st == "relate_inv_name":
            src = evaluate(refs[0])
            return sorted({s for s, p, o in edges()
                           if o in src and p == text[0]
                           and name_of(s) == text[1]})
        if st == "relate_attr":
            src = evaluate(refs[0])
            return sorted({o for s, p, o in edges()
                           if s in src and p == text[0]
                           and text[1] in _attrs(objects[o])})
        if st == "verify_attr":
            return any(text[0] in _attrs(objects[o]) for o in evaluate(refs[0]))
        if st == "verify_rel":
            src = evaluate(refs[0])
            return any(s in src and p == text[0] and name_of(o) == text[1]
                       for s, p, o in edges())
        if st == "exist":
            return len(evaluate(refs[0])) > 0
        if st == "and":
            return evaluate(refs[0]) and evaluate(refs[1])
        if st == "or":
            return evaluate(refs[0]) or evaluate(refs[1])
        if st == "query_name":
            return name_of(_first(evaluate(refs[0])))
        if st == "query_attr":
            oid = _first(evaluate(refs[0]))
            return _category_value(objects[oid], text[0], categories)
        if st == "choose_attr":
            oid = _first(evaluate(refs[0]))
            if text[0] not in categories:
                raise UnknownPredicateCategoryError(text[0])
            return text[1] if text[1] in _attrs(objects[oid]) else text[2]
        if st == "choose_name":
            src = evaluate(refs[0])
            if not src:
                raise EmptyInputToQueryError("oracle: empty object set")
            return text[0] if any(name_of(o) == text[0] for o in src) else text[1]
        if st in ("compare_same", "compare_diff"):
            left = _category_value(
                objects[_first(evaluate(refs[0]))], text[0], categories)
            right = _category_value(
                objects[_first(evaluate(refs[1]))], text[0], categories)
            same = left == right
            return same if st == "compare_same" else not same
        if st == "compare_common":
            left = objects[_first(evaluate(refs[0]))]
            right = objects[_first(evaluate(refs[1]))]
            right_attrs = _attrs(right)
            for attr in _attrs(left):
                if attr in right_attrs:
                    return attr
            raise EmptyInputToQueryError("oracle: no common attribute")
        raise AssertionError(f"oracle has no rule for {st}")

    per_node = [evaluate(i) for i in range(len(tree.nodes))]
    final = per_node[tree.root]
    if isinstance(final, bool):
        answer = "yes" if final else "no"
    elif isinstance(final, str):
        answer = final
    else:
        raise NonAnswerRootError("oracle: root is an object set")
    return per_node, answer


def step_key(result):
    """Canonical comparison key for an executor StepResult."""
    from sgqa.executor import Answer, Boolean, Objects

    if isinstance(result, Objects):
        return ("objects", sorted(item.id for item in result.items))
    if isinstance(result, Boolean):
        return ("bool", result.value)
    if isinstance(result, Answer):
        return ("answer", result.value)
    raise AssertionError(result)


def oracle_key(result):
    """Comparison key for an oracle per-node value."""
    if isinstance(result, list):
        return ("objects", sorted(result))
    if isinstance(result, bool):
        return ("bool", result)
    if isinstance(result, str):
        return ("answer", result)
    raise AssertionError(result)
