import json

import pytest

from sgqa.scenegraph import scene_graph_from_dict

# Hand-built fixture: 500x400 image, two pillows on a couch.
SG_A_RAW = {
    "width": 500,
    "height": 400,
    "objects": {
        "o1": {
            "name": "pillow",
            "x": 50, "y": 100, "w": 70, "h": 60,
            "attributes": ["white"],
            "relations": [{"name": "on", "object": "o3"}],
        },
        "o2": {
            "name": "pillow",
            "x": 200, "y": 110, "w": 80, "h": 60,
            "attributes": ["blue"],
            "relations": [{"name": "on", "object": "o3"}],
        },
        "o3": {
            "name": "couch",
            "x": 30, "y": 80, "w": 320, "h": 220,
            "attributes": [],
            "relations": [],
        },
    },
}

FIXTURE_QUESTIONS = [
    {"qid": "q1", "image": "img_a",
     "program": "select(pillow);exist([0])"},
    {"qid": "q2", "image": "img_a",
     "program": "select(pillow);filter_attr([0],white);exist([1])"},
    {"qid": "q3", "image": "img_a",
     "program": "select(couch);relate_inv_name([0],on,pillow);query_name([1])"},
]


@pytest.fixture
def sg_a():
    return scene_graph_from_dict("img_a", SG_A_RAW)


@pytest.fixture
def sg_file(tmp_path):
    path = tmp_path / "scene_graphs.json"
    path.write_text(json.dumps({"img_a": SG_A_RAW}), encoding="utf-8")
    return path


@pytest.fixture
def programs_file(tmp_path):
    path = tmp_path / "programs.jsonl"
    path.write_text(
        "".join(json.dumps(q) + "\n" for q in FIXTURE_QUESTIONS),
        encoding="utf-8",
    )
    return path
