"""Functional program DSL: lexing, parsing, and dependency-checked trees.

A program is a semicolon-separated list of statements of the form
``subtype(arg, ...)`` where an argument is either free text or a back
reference ``[N]`` to the result of an earlier statement.
"""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

MAX_NODES = 9
MAX_TEXT_TOKENS = 8


class AbstractType(enum.Enum):
    SELECT = "select"
    FILTER = "filter"
    RELATE = "relate"
    VERIFY = "verify"
    QUERY = "query"
    CHOOSE = "choose"
    EXIST = "exist"
    AND = "and"
    OR = "or"
    COMPARE = "compare"


class ArgKind(enum.Enum):
    REF = "ref"
    TEXT = "text"


class ResultKind(enum.Enum):
    OBJECTS = "objects"
    BOOLEAN = "boolean"
    ANSWER = "answer"


class ProgramError(Exception):
    """Base class for all parse/validation failures."""


class ProgramSyntaxError(ProgramError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class UnknownFunctionError(ProgramError):
    pass


class ArityError(ProgramError):
    pass


class ForwardRefError(ProgramError):
    pass


class TooManyNodesError(ProgramError):
    pass


class MultipleRootsError(ProgramError):
    pass


@dataclass(frozen=True)
class FunctionSpec:
    subtype: str
    abstract_type: AbstractType
    arg_kinds: tuple[ArgKind, ...]
    result_kind: ResultKind

    @property
    def arity(self) -> int:
        return len(self.arg_kinds)


_R = ArgKind.REF
_T = ArgKind.TEXT

_CATALOG_ROWS = [
    ("select", AbstractType.SELECT, (_T,), ResultKind.OBJECTS),
    ("filter_attr", AbstractType.FILTER, (_R, _T), ResultKind.OBJECTS),
    ("relate_name", AbstractType.RELATE, (_R, _T, _T), ResultKind.OBJECTS),
    ("relate_inv_name", AbstractType.RELATE, (_R, _T, _T), ResultKind.OBJECTS),
    ("relate_attr", AbstractType.RELATE, (_R, _T, _T), ResultKind.OBJECTS),
    ("verify_attr", AbstractType.VERIFY, (_R, _T), ResultKind.BOOLEAN),
    ("verify_rel", AbstractType.VERIFY, (_R, _T, _T), ResultKind.BOOLEAN),
    ("exist", AbstractType.EXIST, (_R,), ResultKind.BOOLEAN),
    ("and", AbstractType.AND, (_R, _R), ResultKind.BOOLEAN),
    ("or", AbstractType.OR, (_R, _R), ResultKind.BOOLEAN),
    ("query_name", AbstractType.QUERY, (_R,), ResultKind.ANSWER),
    ("query_attr", AbstractType.QUERY, (_R, _T), ResultKind.ANSWER),
    ("choose_attr", AbstractType.CHOOSE, (_R, _T, _T, _T), ResultKind.ANSWER),
    ("choose_name", AbstractType.CHOOSE, (_R, _T, _T), ResultKind.ANSWER),
    ("compare_same", AbstractType.COMPARE, (_R, _R, _T), ResultKind.BOOLEAN),
    ("compare_diff", AbstractType.COMPARE, (_R, _R, _T), ResultKind.BOOLEAN),
    ("compare_common", AbstractType.COMPARE, (_R, _R), ResultKind.ANSWER),
]

FUNCTION_CATALOG: dict[str, FunctionSpec] = {
    name: FunctionSpec(name, abst, kinds, result)
    for name, abst, kinds, result in _CATALOG_ROWS
}


def normalize_text(text: str) -> str:
    """Lowercase, trim, and collapse internal whitespace."""
    return re.sub(r"\s+", " ", text.strip().lower())


@dataclass(frozen=True)
class ProgramNode:
    index: int
    spec: FunctionSpec
    text_args: tuple[str, ...]
    ref_args: tuple[int, ...]

    def render(self) -> str:
        texts = iter(self.text_args)
        refs = iter(self.ref_args)
        args = [
            f"[{next(refs)}]" if kind is ArgKind.REF else next(texts)
            for kind in self.spec.arg_kinds
        ]
        return f"{self.spec.subtype}({','.join(args)})"


@dataclass(frozen=True)
class ProgramTree:
    nodes: tuple[ProgramNode, ...] = field(default_factory=tuple)

    @property
    def root(self) -> int:
        return len(self.nodes) - 1

    @property
    def root_node(self) -> ProgramNode:
        return self.nodes[self.root]

    def yields_answer(self) -> bool:
        return self.root_node.spec.result_kind in (
            ResultKind.BOOLEAN,
            ResultKind.ANSWER,
        )

    def render(self) -> str:
        return ";".join(node.render() for node in self.nodes)


_TOKEN_RE = re.compile(
    r"""
    (?P<ref>\[\s*(?P<refnum>\d+)\s*\])
    | (?P<punct>[(),;])
    | (?P<text>[a-z0-9_\-\s]+)
    """,
    re.VERBOSE,
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ProgramSyntaxError(f"unexpected character {src[pos]!r}", pos)
        if m.lastgroup == "ref" or m.group("ref"):
            tokens.append(("ref", m.group("refnum"), pos))
        elif m.group("punct"):
            tokens.append((m.group("punct"), m.group("punct"), pos))
        else:
            text = normalize_text(m.group("text"))
            if text:
                tokens.append(("text", text, pos))
        pos = m.end()
    return tokens


def _truncate_text_arg(text: str) -> str:
    words = text.split()
    if len(words) > MAX_TEXT_TOKENS:
        log.warning(
            "text argument %r exceeds %d tokens; truncating", text, MAX_TEXT_TOKENS
        )
        words = words[:MAX_TEXT_TOKENS]
    return " ".join(words)


def parse_program(src: str) -> ProgramTree:
    """Parse a program string into a validated :class:`ProgramTree`.

    Raises a :class:`ProgramError` subclass on any malformed input; never
    raises anything else, regardless of input bytes.
    """
    if not isinstance(src, str):
        raise ProgramSyntaxError("program source must be a string", 0)
    src = src.lower()
    tokens = _tokenize(src)
    if not tokens:
        raise ProgramSyntaxError("empty program", 0)

    nodes: list[ProgramNode] = []
    referenced: set[int] = set()
    i = 0
    while i < len(tokens):
        kind, value, pos = tokens[i]
        if kind != "text":
            raise ProgramSyntaxError("expected function name", pos)
        subtype = value
        i += 1
        if i >= len(tokens) or tokens[i][0] != "(":
            raise ProgramSyntaxError("expected '(' after function name", pos)
        i += 1

        args: list[tuple[str, str]] = []
        while True:
            if i >= len(tokens):
                raise ProgramSyntaxError("unterminated argument list", pos)
            kind, value, apos = tokens[i]
            if kind == "text" or kind == "ref":
                args.append((kind, value))
                i += 1
            else:
                raise ProgramSyntaxError("expected argument", apos)
            if i >= len(tokens):
                raise ProgramSyntaxError("unterminated argument list", pos)
            kind, value, apos = tokens[i]
            if kind == ",":
                i += 1
                continue
            if kind == ")":
                i += 1
                break
            raise ProgramSyntaxError("expected ',' or ')'", apos)

        index = len(nodes)
        spec = FUNCTION_CATALOG.get(subtype)
        if spec is None:
            raise UnknownFunctionError(f"unknown function {subtype!r}")
        if len(args) != spec.arity:
            raise ArityError(
                f"{subtype} takes {spec.arity} arguments, got {len(args)}"
            )
        text_args: list[str] = []
        ref_args: list[int] = []
        for (kind, value), want in zip(args, spec.arg_kinds):
            if kind == "ref" and int(value) >= index:
                raise ForwardRefError(
                    f"node {index} references [{value}] before it is defined"
                )
            if want is ArgKind.REF:
                if kind != "ref":
                    raise ArityError(
                        f"{subtype}: expected a [N] reference, got text {value!r}"
                    )
                ref = int(value)
                ref_args.append(ref)
                referenced.add(ref)
            else:
                if kind != "text":
                    raise ArityError(
                        f"{subtype}: expected text, got reference [{value}]"
                    )
                text_args.append(_truncate_text_arg(value))
        nodes.append(ProgramNode(index, spec, tuple(text_args), tuple(ref_args)))
        if len(nodes) > MAX_NODES:
            raise TooManyNodesError(f"program exceeds {MAX_NODES} nodes")

        if i < len(tokens):
            kind, value, pos = tokens[i]
            if kind != ";":
                raise ProgramSyntaxError("expected ';' between statements", pos)
            i += 1
            if i >= len(tokens):
                raise ProgramSyntaxError("trailing ';'", pos)

    roots = [n.index for n in nodes if n.index not in referenced]
    if len(roots) != 1:
        raise MultipleRootsError(
            f"program has {len(roots)} unreferenced nodes, expected exactly 1"
        )
    return ProgramTree(tuple(nodes))


def tree_depth(tree: ProgramTree) -> int:
    """Length of the longest dependency chain; a single node has depth 1."""
    depth = [0] * len(tree.nodes)
    for node in tree.nodes:
        depth[node.index] = 1 + max(
            (depth[r] for r in node.ref_args), default=0
        )
    return max(depth)


def topological_layers(tree: ProgramTree) -> list[list[int]]:
    """Group node indices into layers; a node's refs all lie in earlier layers."""
    depth = [0] * len(tree.nodes)
    for node in tree.nodes:
        depth[node.index] = 1 + max(
            (depth[r] for r in node.ref_args), default=0
        )
    layers: list[list[int]] = [[] for _ in range(max(depth))]
    for index, d in enumerate(depth):
        layers[d - 1].append(index)
    return layers
