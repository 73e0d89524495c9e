"""Command-line driver: compile supervision corpora, evaluate prediction
files, and inspect individual questions.

Exit codes: 0 ok, 1 input error, 2 link error, 3 not found.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .codec import CodecConfig, SequenceFormat, encode, vocab_layout
from .executor import ExecutionError, execute
from .metrics import (
    DanglingParentError,
    PredictionRecord,
    QClass,
    consistency_report,
)
from .pipeline import (
    ProgramFileError,
    compile_corpus,
    derive_vocabs,
    load_questions,
    question_seed,
)
from .programs import ProgramError, parse_program
from .scenegraph import SceneGraphError, load_scene_graphs

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_LINK = 2
EXIT_NOT_FOUND = 3

_FORMATS = {f.value: f for f in SequenceFormat}


def _load_config_file(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def _read_vocab(path: str | None) -> tuple[str, ...]:
    if path is None:
        return ()
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return tuple(line.strip() for line in lines if line.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgqa",
        description="Compile scene-graph supervision corpora and evaluate "
        "predictions.",
    )
    parser.add_argument("--config", help="JSON or TOML key-value defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io_flags(p):
        p.add_argument("--scene-graphs", help="GQA scene-graph JSON file")
        p.add_argument("--programs", help="question/program JSONL file")

    def add_codec_flags(p):
        p.add_argument("--bins", type=int, default=None)
        p.add_argument("--max-objects", type=int, default=None)
        p.add_argument(
            "--format", choices=sorted(_FORMATS), default=None
        )
        shuffle = p.add_mutually_exclusive_group()
        shuffle.add_argument("--shuffle", dest="shuffle", action="store_true",
                             default=None)
        shuffle.add_argument("--no-shuffle", dest="shuffle",
                             action="store_false")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--answer-vocab", help="newline-delimited vocab file")
        p.add_argument("--name-vocab", help="newline-delimited vocab file")

    p = sub.add_parser("compile", help="compile a supervision corpus")
    add_io_flags(p)
    add_codec_flags(p)
    p.add_argument("--out", help="corpus JSONL output path")
    p.add_argument("--strict", action="store_true", default=None)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("eval", help="score a predictions file")
    p.add_argument("--predictions", help="predictions JSONL file")
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--out", help="optional JSON report path")

    p = sub.add_parser("inspect", help="trace one question")
    add_io_flags(p)
    add_codec_flags(p)
    p.add_argument("--qid", required=True)
    return parser


_DEFAULTS = {
    "bins": 256,
    "max_objects": 4,
    "format": "coords",
    "shuffle": True,
    "seed": 0,
    "strict": False,
    "workers": 1,
    "k_max": 3,
}


def _resolve(args: argparse.Namespace, key: str, config: dict):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return _DEFAULTS.get(key)


def _codec_config(args, config) -> CodecConfig:
    return CodecConfig(
        bins=int(_resolve(args, "bins", config)),
        max_objects=int(_resolve(args, "max_objects", config)),
        shuffle=bool(_resolve(args, "shuffle", config)),
        seed=int(_resolve(args, "seed", config)),
        format=_FORMATS[str(_resolve(args, "format", config))],
        answer_vocab=_read_vocab(_resolve(args, "answer_vocab", config)),
        name_vocab=_read_vocab(_resolve(args, "name_vocab", config)),
    )


def _load_inputs(args, config):
    sg_path = _resolve(args, "scene_graphs", config)
    prog_path = _resolve(args, "programs", config)
    if not sg_path or not prog_path:
        raise ProgramFileError("--scene-graphs and --programs are required")
    return load_scene_graphs(sg_path), load_questions(prog_path)


def cmd_compile(args, config) -> int:
    try:
        graphs, questions = _load_inputs(args, config)
        cfg = _codec_config(args, config)
    except (OSError, json.JSONDecodeError, SceneGraphError,
            ProgramFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not questions:
        log.warning("program file is empty; writing empty corpus")
    seed = int(_resolve(args, "seed", config))
    workers = int(_resolve(args, "workers", config))
    strict = bool(_resolve(args, "strict", config))
    try:
        lines, summary = compile_corpus(
            graphs, questions, cfg, seed=seed, workers=workers, strict=strict
        )
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    out_path = _resolve(args, "out", config)
    text = "".join(line + "\n" for line in lines)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(json.dumps(summary.to_dict(), indent=2), file=sys.stderr)
    return EXIT_OK


def _parse_prediction_line(lineno: int, line: str) -> PredictionRecord:
    try:
        obj = json.loads(line)
        q_class = obj.get("class")
        return PredictionRecord(
            qid=str(obj["qid"]),
            predicted=str(obj["predicted"]),
            gold=str(obj["gold"]),
            q_class=QClass(q_class.lower()) if q_class else None,
            parent_qid=obj.get("parent"),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ProgramFileError(f"line {lineno}: {exc}") from exc


def _format_fraction(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def cmd_eval(args, config) -> int:
    pred_path = _resolve(args, "predictions", config)
    if not pred_path:
        print("error: --predictions is required", file=sys.stderr)
        return EXIT_INPUT
    records = []
    try:
        with open(pred_path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if line.strip():
                    records.append(_parse_prediction_line(lineno, line))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ProgramFileError as exc:
        print(f"error: {pred_path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not records:
        print("error: no prediction records", file=sys.stderr)
        return EXIT_INPUT
    k_max = int(_resolve(args, "k_max", config))
    try:
        report = consistency_report(records, k_max=k_max)
    except DanglingParentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LINK

    rows = [
        ("acc", report.acc),
        ("acc_sub", report.acc_sub),
        ("binary_acc", report.binary_acc),
        ("open_acc", report.open_acc),
    ] + [(f"rc({k})", report.rc[k]) for k in sorted(report.rc)]
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        print(f"{name:<{width}}  {_format_fraction(value)}")

    out_path = _resolve(args, "out", config)
    if out_path:
        Path(out_path).write_text(
            json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    return EXIT_OK


def cmd_inspect(args, config) -> int:
    try:
        graphs, questions = _load_inputs(args, config)
        cfg = _codec_config(args, config)
    except (OSError, json.JSONDecodeError, SceneGraphError,
            ProgramFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    entry = next((q for q in questions if q.qid == args.qid), None)
    if entry is None:
        print(f"error: qid {args.qid!r} not found", file=sys.stderr)
        return EXIT_NOT_FOUND
    g = graphs.get(entry.image)
    if g is None:
        print(f"error: no scene graph for image {entry.image!r}",
              file=sys.stderr)
        return EXIT_NOT_FOUND
    try:
        tree = parse_program(entry.program)
        trace = execute(tree, g, question_id=entry.qid)
    except (ProgramError, ExecutionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if not cfg.answer_vocab or not cfg.name_vocab:
        answer_vocab, name_vocab = derive_vocabs(graphs, [trace])
        cfg = CodecConfig(
            bins=cfg.bins, max_objects=cfg.max_objects, shuffle=cfg.shuffle,
            seed=cfg.seed, format=cfg.format,
            answer_vocab=cfg.answer_vocab or answer_vocab,
            name_vocab=cfg.name_vocab or name_vocab,
        )
    layout = vocab_layout(cfg)
    qseed = question_seed(cfg.seed, entry.qid)

    print(f"qid: {entry.qid}  image: {entry.image}  "
          f"({g.width:g}x{g.height:g})")
    for node in tree.nodes:
        result = trace.per_node[node.index]
        seq = encode(result, (g.width, g.height), cfg, seed=qseed)
        meanings = " ".join(layout[t] for t in seq.token_ids)
        print(f"[{node.index}] {node.render()}")
        print(f"    result: {result}")
        print(f"    tokens: {list(seq.token_ids)}")
        print(f"    meaning: {meanings}")
    print(f"answer: {trace.final_answer}")
    for warning in trace.warnings:
        print(f"warning: {warning}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    config = {}
    if args.config:
        try:
            config = _load_config_file(args.config)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    handler = {
        "compile": cmd_compile,
        "eval": cmd_eval,
        "inspect": cmd_inspect,
    }[args.command]
    return handler(args, config)


if __name__ == "__main__":
    sys.exit(main())
