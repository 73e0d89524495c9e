"""Corpus compilation: execute programs over scene graphs and encode
per-step supervision sequences into a deterministic JSONL corpus.
"""

from __future__ import annotations

import json
import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .codec import CodecConfig, SequenceFormat, encode
from .executor import (
    Answer,
    ExecutionError,
    ExecutionTrace,
    execute,
    trace_to_dict,
)
from .programs import ProgramError, ProgramTree, parse_program
from .scenegraph import SceneGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuestionEntry:
    qid: str
    image: str
    program: str
    answer: str | None = None


class ProgramFileError(Exception):
    pass


def load_questions(path: str | Path) -> list[QuestionEntry]:
    """Read a JSONL question file: {"qid", "image", "program", "answer"?}."""
    entries = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                entries.append(QuestionEntry(
                    qid=str(obj["qid"]),
                    image=str(obj["image"]),
                    program=str(obj["program"]),
                    answer=obj.get("answer"),
                ))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ProgramFileError(f"{path}:{lineno}: {exc}") from exc
    return entries


def question_seed(global_seed: int, qid: str) -> int:
    """Stable per-question shuffle seed, independent of worker scheduling."""
    return zlib.crc32(f"{global_seed}:{qid}".encode("utf-8"))


def derive_vocabs(
    graphs: dict[str, SceneGraph], traces: list[ExecutionTrace]
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Deterministic vocabularies from the data itself (sorted, deduped)."""
    answers = {"yes", "no"}
    for trace in traces:
        answers.add(trace.final_answer)
        for step in trace.per_node:
            if isinstance(step, Answer):
                answers.add(step.value)
    names = {obj.name for g in graphs.values() for obj in g.objects.values()}
    return tuple(sorted(answers)), tuple(sorted(names))


@dataclass
class CompileSummary:
    total: int = 0
    compiled: int = 0
    skipped: dict[str, int] = field(default_factory=dict)
    sequence_count: int = 0
    token_count: int = 0
    min_tokens: int | None = None
    max_tokens: int | None = None

    def skip(self, reason: str):
        self.skipped[reason] = self.skipped.get(reason, 0) + 1

    def observe_sequence(self, length: int):
        self.sequence_count += 1
        self.token_count += length
        self.min_tokens = (
            length if self.min_tokens is None else min(self.min_tokens, length)
        )
        self.max_tokens = (
            length if self.max_tokens is None else max(self.max_tokens, length)
        )

    def to_dict(self) -> dict:
        mean = self.token_count / self.sequence_count if self.sequence_count else None
        return {
            "total": self.total,
            "compiled": self.compiled,
            "skipped": dict(sorted(self.skipped.items())),
            "sequences": self.sequence_count,
            "tokens": {
                "min": self.min_tokens,
                "max": self.max_tokens,
                "mean": mean,
            },
        }


@dataclass
class CompileError(Exception):
    qid: str
    reason: str
    detail: str

    def __str__(self) -> str:
        return f"{self.qid}: {self.reason}: {self.detail}"


def _run_question(
    entry: QuestionEntry, graphs: dict[str, SceneGraph]
) -> tuple[ProgramTree, ExecutionTrace]:
    g = graphs.get(entry.image)
    if g is None:
        raise CompileError(entry.qid, "missing_scene_graph", entry.image)
    try:
        tree = parse_program(entry.program)
    except ProgramError as exc:
        raise CompileError(entry.qid, type(exc).__name__, str(exc)) from exc
    try:
        trace = execute(tree, g, question_id=entry.qid)
    except ExecutionError as exc:
        raise CompileError(entry.qid, type(exc).__name__, str(exc)) from exc
    return tree, trace


def compile_corpus(
    graphs: dict[str, SceneGraph],
    questions: list[QuestionEntry],
    cfg: CodecConfig,
    seed: int = 0,
    workers: int = 1,
    strict: bool = False,
) -> tuple[list[str], CompileSummary]:
    """Compile questions into corpus JSONL lines, sorted by question id.

    Output is byte-identical for a fixed seed regardless of ``workers``.
    If the config carries empty vocabularies they are derived from the
    inputs after execution.
    """
    summary = CompileSummary(total=len(questions))
    executed: dict[str, tuple[QuestionEntry, ProgramTree, ExecutionTrace]] = {}

    def run(entry: QuestionEntry):
        return entry, _run_question(entry, graphs)

    failures: list[CompileError] = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = []
            for entry in questions:
                outcomes.append(pool.submit(run, entry))
            results = []
            for fut in outcomes:
                try:
                    results.append(fut.result())
                except CompileError as exc:
                    failures.append(exc)
    else:
        results = []
        for entry in questions:
            try:
                results.append(run(entry))
            except CompileError as exc:
                failures.append(exc)

    for exc in failures:
        if strict:
            raise exc
        log.warning("skipping %s", exc)
        summary.skip(exc.reason)
    for entry, (tree, trace) in results:
        executed[entry.qid] = (entry, tree, trace)

    if not cfg.answer_vocab or not cfg.name_vocab:
        answer_vocab, name_vocab = derive_vocabs(
            graphs, [trace for _, _, trace in executed.values()]
        )
        cfg = CodecConfig(
            bins=cfg.bins,
            max_objects=cfg.max_objects,
            shuffle=cfg.shuffle,
            seed=cfg.seed,
            format=cfg.format,
            answer_vocab=cfg.answer_vocab or answer_vocab,
            name_vocab=cfg.name_vocab or name_vocab,
        )

    lines: list[str] = []
    for qid in sorted(executed):
        entry, tree, trace = executed[qid]
        g = graphs[entry.image]
        qseed = question_seed(seed, qid)
        try:
            steps = []
            lengths = []
            for step in trace.per_node:
                seq = encode(step, (g.width, g.height), cfg, seed=qseed)
                lengths.append(len(seq))
                steps.append(list(seq.token_ids))
        except Exception as exc:
            err = CompileError(qid, type(exc).__name__, str(exc))
            if strict:
                raise err from exc
            log.warning("skipping %s", err)
            summary.skip(err.reason)
            continue
        for length in lengths:
            summary.observe_sequence(length)
        record = {
            "qid": qid,
            "image": entry.image,
            "program": tree.render(),
            "answer": entry.answer if entry.answer is not None
            else trace.final_answer,
            "steps": steps,
            "cfg": {
                "bins": cfg.bins,
                "max_objects": cfg.max_objects,
                "format": cfg.format.value,
                "shuffle_seed": qseed if cfg.shuffle else None,
            },
        }
        lines.append(json.dumps(record, sort_keys=False, separators=(",", ":")))
        summary.compiled += 1
    return lines, summary


def dump_traces(traces: list[ExecutionTrace]) -> list[str]:
    return [
        json.dumps(trace_to_dict(t), separators=(",", ":")) for t in traces
    ]
