"""Scene-graph program execution, supervision-sequence encoding, and
consistency metrics for compositional visual question answering."""

from .programs import (
    FUNCTION_CATALOG,
    ProgramError,
    ProgramTree,
    parse_program,
    topological_layers,
    tree_depth,
)
from .scenegraph import (
    BBox,
    Direction,
    SceneGraph,
    load_scene_graphs,
    objects_by_name,
    related,
)
from .executor import (
    Answer,
    Boolean,
    ExecutionError,
    ExecutionTrace,
    Objects,
    eval_node,
    execute,
)
from .codec import (
    CodecConfig,
    SequenceFormat,
    SupervisionSequence,
    decode,
    dequantize,
    encode,
    quantize,
    vocab_layout,
)
from .metrics import (
    ConsistencyReport,
    PredictionRecord,
    accuracy,
    consistency_report,
    rc_k,
)

__all__ = [
    "FUNCTION_CATALOG",
    "ProgramError",
    "ProgramTree",
    "parse_program",
    "topological_layers",
    "tree_depth",
    "BBox",
    "Direction",
    "SceneGraph",
    "load_scene_graphs",
    "objects_by_name",
    "related",
    "Answer",
    "Boolean",
    "ExecutionError",
    "ExecutionTrace",
    "Objects",
    "eval_node",
    "execute",
    "CodecConfig",
    "SequenceFormat",
    "SupervisionSequence",
    "decode",
    "dequantize",
    "encode",
    "quantize",
    "vocab_layout",
    "ConsistencyReport",
    "PredictionRecord",
    "accuracy",
    "consistency_report",
    "rc_k",
]

__version__ = "0.1.0"
