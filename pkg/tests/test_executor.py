import random

import pytest

from sgqa.executor import (
    Answer,
    Boolean,
    EmptyInputToQueryError,
    NonAnswerRootError,
    Objects,
    RuleTypeMismatchError,
    UnknownPredicateCategoryError,
    eval_node,
    execute,
    load_categories,
    trace_to_dict,
)
from sgqa.programs import FUNCTION_CATALOG, parse_program
from sgqa.scenegraph import scene_graph_from_dict

from generators import random_program, random_scene_graph
from oracle import oracle_execute, oracle_key, step_key


def ids_of(result):
    assert isinstance(result, Objects)
    return [item.id for item in result.items]


def test_exist_chain(sg_a):
    trace = execute(parse_program("select(pillow);exist([0])"), sg_a, "q")
    assert ids_of(trace.per_node[0]) == ["o1", "o2"]
    assert trace.per_node[1] == Boolean(True)
    assert trace.final_answer == "yes"


def test_filter_chain(sg_a):
    trace = execute(
        parse_program("select(pillow);filter_attr([0],white);exist([1])"),
        sg_a, "q",
    )
    assert ids_of(trace.per_node[0]) == ["o1", "o2"]
    assert ids_of(trace.per_node[1]) == ["o1"]
    assert trace.per_node[2] == Boolean(True)
    assert trace.final_answer == "yes"


def test_empty_select_forces_no(sg_a):
    trace = execute(parse_program("select(dog);exist([0])"), sg_a, "q")
    assert ids_of(trace.per_node[0]) == []
    assert trace.per_node[1] == Boolean(False)
    assert trace.final_answer == "no"


def test_objects_root_rejected(sg_a):
    with pytest.raises(NonAnswerRootError):
        execute(parse_program("select(pillow)"), sg_a, "q")


def test_eval_node_cases(sg_a):
    catalog = FUNCTION_CATALOG
    pillow_set = execute(
        parse_program("select(pillow);exist([0])"), sg_a, "q"
    ).per_node[0]
    one = Objects(pillow_set.items[:1])
    assert eval_node(catalog["exist"], [one], [], sg_a) == Boolean(True)
    couch = execute(
        parse_program("select(couch);exist([0])"), sg_a, "q"
    ).per_node[0]
    inv = eval_node(
        catalog["relate_inv_name"], [couch], ["on", "pillow"], sg_a
    )
    assert ids_of(inv) == ["o1", "o2"]
    assert eval_node(catalog["query_name"], [one], [], sg_a) == Answer("pillow")


def test_query_attr_and_categories(sg_a):
    trace = execute(
        parse_program("select(pillow);query_attr([0],color)"), sg_a, "q"
    )
    assert trace.final_answer == "white"  # first pillow by id order
    assert trace.warnings  # multi-object set hit a query


def test_unknown_category(sg_a):
    with pytest.raises(UnknownPredicateCategoryError):
        execute(
            parse_program("select(pillow);query_attr([0],flavor)"), sg_a, "q"
        )


def test_query_on_empty_set(sg_a):
    with pytest.raises(EmptyInputToQueryError):
        execute(parse_program("select(dog);query_name([0])"), sg_a, "q")


def test_type_mismatch():
    spec = FUNCTION_CATALOG["and"]
    g = scene_graph_from_dict("img", {"width": 10, "height": 10, "objects": {}})
    with pytest.raises(RuleTypeMismatchError):
        eval_node(spec, [Objects(()), Boolean(True)], [], g)


def test_compare_and_choose(sg_a):
    trace = execute(
        parse_program(
            "select(pillow);filter_attr([0],white);select(couch);"
            "relate_inv_name([2],on,pillow);filter_attr([3],blue);"
            "compare_same([1],[4],color)"
        ),
        sg_a, "q",
    )
    assert trace.final_answer == "no"
    trace = execute(
        parse_program("select(pillow);choose_attr([0],color,white,blue)"),
        sg_a, "q",
    )
    assert trace.final_answer == "white"
    trace = execute(
        parse_program("select(pillow);choose_name([0],pillow,dog)"), sg_a, "q"
    )
    assert trace.final_answer == "pillow"


def test_empty_set_propagation(sg_a):
    trace = execute(
        parse_program("select(dog);filter_attr([0],white);exist([1])"),
        sg_a, "q",
    )
    assert ids_of(trace.per_node[1]) == []
    assert trace.final_answer == "no"


def test_result_tags_match_spec(sg_a):
    from sgqa.executor import RESULT_TAGS

    rng = random.Random(3)
    for _ in range(30):
        raw = random_scene_graph(rng)
        g = scene_graph_from_dict("img", raw)
        tree = parse_program(random_program(rng))
        try:
            trace = execute(tree, g, "q")
        except Exception:
            continue
        for node, result in zip(tree.nodes, trace.per_node):
            assert RESULT_TAGS[type(result)] is node.spec.result_kind


def test_trace_dump_shape(sg_a):
    trace = execute(
        parse_program("select(pillow);filter_attr([0],white);exist([1])"),
        sg_a, "q2",
    )
    d = trace_to_dict(trace)
    assert d["qid"] == "q2"
    assert d["image"] == "img_a"
    assert d["answer"] == "yes"
    assert d["steps"][0]["tag"] == "objects"
    assert d["steps"][0]["items"][0]["bbox"] == [50, 100, 120, 160]
    assert d["steps"][2] == {"tag": "bool", "value": True}


def test_matches_oracle_on_fixture(sg_a):
    from conftest import SG_A_RAW

    rng = random.Random(9)
    for _ in range(100):
        tree = parse_program(random_program(rng))
        compare_with_oracle(tree, sg_a, SG_A_RAW)


def compare_with_oracle(tree, g, raw):
    from sgqa.executor import ExecutionError

    try:
        trace = execute(tree, g, "q")
        got = ("ok", [step_key(s) for s in trace.per_node], trace.final_answer)
    except ExecutionError as exc:
        got = ("err", type(exc).__name__)
    try:
        per_node, answer = oracle_execute(tree, raw)
        want = ("ok", [oracle_key(s) for s in per_node], answer)
    except ExecutionError as exc:
        want = ("err", type(exc).__name__)
    assert got == want, f"divergence on {tree.render()!r}"


def test_matches_oracle_randomized():
    rng = random.Random(42)
    for _ in range(200):
        raw = random_scene_graph(rng)
        g = scene_graph_from_dict("img", raw)
        tree = parse_program(random_program(rng))
        compare_with_oracle(tree, g, raw)


def test_determinism(sg_a):
    tree = parse_program("select(pillow);query_attr([0],color)")
    assert execute(tree, sg_a, "q") == execute(tree, sg_a, "q")


def test_custom_category_table(tmp_path, sg_a):
    import json

    path = tmp_path / "cats.json"
    path.write_text(json.dumps({"hue": ["white", "blue"]}))
    cats = load_categories(path)
    trace = execute(
        parse_program("select(pillow);query_attr([0],hue)"),
        sg_a, "q", categories=cats,
    )
    assert trace.final_answer == "white"
