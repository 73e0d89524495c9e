"""Token-sequence encoding of intermediate results.

Object sets become quantized-coordinate token runs separated by [SEP];
booleans and answers become single word tokens. The id layout is
contiguous: coordinate bins first, then special tokens, then the answer
and name vocabularies.
"""

from __future__ import annotations

import enum
import logging
import math
import random
from dataclasses import dataclass, field

from .executor import Answer, Boolean, ObjectItem, Objects, StepResult
from .scenegraph import BBox

log = logging.getLogger(__name__)


class CodecError(Exception):
    pass


class BadExtentError(CodecError):
    pass


class BadBinError(CodecError):
    pass


class OutOfVocabError(CodecError):
    pass


class MalformedSequenceError(CodecError):
    pass


class SequenceFormat(enum.Enum):
    COORDS_ONLY = "coords"
    NAME_FIRST = "name-first"
    NAME_LAST = "name-last"


def quantize(coord: float, extent: float, bins: int) -> int:
    """Map a pixel coordinate to its bin index: floor(coord/extent*bins)."""
    if extent <= 0:
        raise BadExtentError(f"extent must be positive, got {extent}")
    return min(max(int(math.floor(coord / extent * bins)), 0), bins - 1)


def dequantize(bin_index: int, extent: float, bins: int) -> float:
    """Map a bin index back to the center of its pixel range."""
    if extent <= 0:
        raise BadExtentError(f"extent must be positive, got {extent}")
    if not 0 <= bin_index < bins:
        raise BadBinError(f"bin {bin_index} out of range [0, {bins})")
    return (bin_index + 0.5) / bins * extent


@dataclass(frozen=True)
class CodecConfig:
    bins: int = 256
    max_objects: int = 4
    shuffle: bool = True
    seed: int = 0
    format: SequenceFormat = SequenceFormat.COORDS_ONLY
    answer_vocab: tuple[str, ...] = ()
    name_vocab: tuple[str, ...] = ()

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        if self.max_objects < 1:
            raise ValueError(
                f"max_objects must be >= 1, got {self.max_objects}"
            )
        if len(set(self.answer_vocab)) != len(self.answer_vocab):
            raise ValueError("answer_vocab contains duplicates")
        if len(set(self.name_vocab)) != len(self.name_vocab):
            raise ValueError("name_vocab contains duplicates")

    @property
    def beg(self) -> int:
        return self.bins

    @property
    def sep(self) -> int:
        return self.bins + 1

    @property
    def end(self) -> int:
        return self.bins + 2

    @property
    def true(self) -> int:
        return self.bins + 3

    @property
    def false(self) -> int:
        return self.bins + 4

    @property
    def answer_base(self) -> int:
        return self.bins + 5

    @property
    def name_base(self) -> int:
        return self.answer_base + len(self.answer_vocab)

    @property
    def vocab_size(self) -> int:
        return self.name_base + len(self.name_vocab)


@dataclass(frozen=True)
class SupervisionSequence:
    token_ids: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.token_ids)


def vocab_layout(cfg: CodecConfig) -> dict[int, str]:
    """Token id -> human-readable meaning, for the whole id space."""
    layout = {i: f"bin:{i}" for i in range(cfg.bins)}
    layout[cfg.beg] = "[BEG]"
    layout[cfg.sep] = "[SEP]"
    layout[cfg.end] = "[END]"
    layout[cfg.true] = "TRUE"
    layout[cfg.false] = "FALSE"
    for i, word in enumerate(cfg.answer_vocab):
        layout[cfg.answer_base + i] = f"answer:{word}"
    for i, word in enumerate(cfg.name_vocab):
        layout[cfg.name_base + i] = f"name:{word}"
    return layout


def _encode_object(
    item: ObjectItem, dims: tuple[float, float], cfg: CodecConfig
) -> list[int]:
    width, height = dims
    coords = [
        quantize(item.bbox.x1, width, cfg.bins),
        quantize(item.bbox.y1, height, cfg.bins),
        quantize(item.bbox.x2, width, cfg.bins),
        quantize(item.bbox.y2, height, cfg.bins),
    ]
    if cfg.format is SequenceFormat.COORDS_ONLY:
        return coords
    if item.name is None:
        raise OutOfVocabError("object has no name but format requires one")
    try:
        name_id = cfg.name_base + cfg.name_vocab.index(item.name)
    except ValueError:
        raise OutOfVocabError(f"name {item.name!r} not in name_vocab") from None
    if cfg.format is SequenceFormat.NAME_FIRST:
        return [name_id] + coords
    return coords + [name_id]


def encode(
    result: StepResult,
    dims: tuple[float, float],
    cfg: CodecConfig,
    seed: int | None = None,
) -> SupervisionSequence:
    """Encode one step result as a token sequence under ``cfg``.

    ``seed`` overrides ``cfg.seed`` for the object shuffle; truncation to
    ``cfg.max_objects`` happens after the shuffle.
    """
    tokens = [cfg.beg]
    if isinstance(result, Boolean):
        tokens.append(cfg.true if result.value else cfg.false)
    elif isinstance(result, Answer):
        try:
            tokens.append(cfg.answer_base + cfg.answer_vocab.index(result.value))
        except ValueError:
            raise OutOfVocabError(
                f"answer {result.value!r} not in answer_vocab"
            ) from None
    elif isinstance(result, Objects):
        items = list(result.items)
        if not items:
            log.warning("encoding empty object set as [BEG][END]")
        if cfg.shuffle:
            rng = random.Random(cfg.seed if seed is None else seed)
            rng.shuffle(items)
        items = items[: cfg.max_objects]
        for i, item in enumerate(items):
            if i:
                tokens.append(cfg.sep)
            tokens.extend(_encode_object(item, dims, cfg))
    else:
        raise CodecError(f"cannot encode {type(result).__name__}")
    tokens.append(cfg.end)
    return SupervisionSequence(tuple(tokens))


def _decode_object(
    group: list[int], dims: tuple[float, float], cfg: CodecConfig
) -> ObjectItem:
    width, height = dims
    name = None
    if cfg.format is SequenceFormat.COORDS_ONLY:
        coords = group
        if len(group) != 4:
            raise MalformedSequenceError(
                f"object group has {len(group)} tokens, expected 4"
            )
    else:
        if len(group) != 5:
            raise MalformedSequenceError(
                f"object group has {len(group)} tokens, expected 5"
            )
        name_id = group[0] if cfg.format is SequenceFormat.NAME_FIRST else group[-1]
        coords = group[1:] if cfg.format is SequenceFormat.NAME_FIRST else group[:-1]
        idx = name_id - cfg.name_base
        if not 0 <= idx < len(cfg.name_vocab):
            raise MalformedSequenceError(f"token {name_id} is not a name token")
        name = cfg.name_vocab[idx]
    if any(not 0 <= t < cfg.bins for t in coords):
        raise MalformedSequenceError("coordinate slot holds a non-bin token")
    x1 = dequantize(coords[0], width, cfg.bins)
    y1 = dequantize(coords[1], height, cfg.bins)
    x2 = dequantize(coords[2], width, cfg.bins)
    y2 = dequantize(coords[3], height, cfg.bins)
    return ObjectItem(BBox(x1, y1, x2, y2), None, name)


def decode(
    seq: SupervisionSequence, dims: tuple[float, float], cfg: CodecConfig
) -> StepResult:
    """Inverse of :func:`encode`, up to quantization error and object order."""
    ids = list(seq.token_ids)
    if len(ids) < 2 or ids[0] != cfg.beg or ids[-1] != cfg.end:
        raise MalformedSequenceError("sequence must be [BEG] ... [END]")
    body = ids[1:-1]
    if not body:
        return Objects(())
    if len(body) == 1:
        tok = body[0]
        if tok == cfg.true:
            return Boolean(True)
        if tok == cfg.false:
            return Boolean(False)
        if cfg.answer_base <= tok < cfg.name_base:
            return Answer(cfg.answer_vocab[tok - cfg.answer_base])
        if tok >= cfg.vocab_size:
            raise MalformedSequenceError(f"token {tok} outside vocabulary")
    groups: list[list[int]] = [[]]
    for tok in body:
        if tok == cfg.sep:
            groups.append([])
        else:
            groups[-1].append(tok)
    items = tuple(_decode_object(group, dims, cfg) for group in groups)
    return Objects(items)
