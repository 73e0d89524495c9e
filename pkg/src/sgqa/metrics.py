"""Answer accuracy (overall / binary / open) and reasoning consistency RC(k).

RC(k) restricts attention to parent questions that have at least k
sub-questions and were themselves answered correctly, and measures how
often all of their sub-questions are also correct.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass


class MetricsError(Exception):
    pass


class EmptyInputError(MetricsError):
    pass


class DanglingParentError(MetricsError):
    pass


class QClass(enum.Enum):
    BINARY = "binary"
    OPEN = "open"


def normalize_answer(answer: str) -> str:
    return re.sub(r"\s+", " ", answer.strip().lower())


@dataclass(frozen=True)
class PredictionRecord:
    qid: str
    predicted: str
    gold: str
    q_class: QClass | None = None
    parent_qid: str | None = None

    @property
    def correct(self) -> bool:
        return normalize_answer(self.predicted) == normalize_answer(self.gold)

    def effective_class(self) -> QClass:
        if self.q_class is not None:
            return self.q_class
        if normalize_answer(self.gold) in ("yes", "no"):
            return QClass.BINARY
        return QClass.OPEN


@dataclass
class ConsistencyReport:
    acc: float
    acc_sub: float | None
    binary_acc: float | None
    open_acc: float | None
    rc: dict[int, float | None]

    def to_dict(self) -> dict:
        return {
            "acc": self.acc,
            "acc_sub": self.acc_sub,
            "binary_acc": self.binary_acc,
            "open_acc": self.open_acc,
            "rc": {str(k): v for k, v in sorted(self.rc.items())},
        }


def _mean_correct(records: list[PredictionRecord]) -> float | None:
    if not records:
        return None
    return sum(r.correct for r in records) / len(records)


def accuracy(
    records: list[PredictionRecord],
) -> tuple[float, float | None, float | None]:
    """Overall, binary, and open accuracy; class slices may be None if empty."""
    if not records:
        raise EmptyInputError("no prediction records")
    binary = [r for r in records if r.effective_class() is QClass.BINARY]
    open_ = [r for r in records if r.effective_class() is QClass.OPEN]
    return (
        sum(r.correct for r in records) / len(records),
        _mean_correct(binary),
        _mean_correct(open_),
    )


def _families(
    records: list[PredictionRecord],
) -> dict[str, tuple[PredictionRecord, list[PredictionRecord]]]:
    by_qid = {r.qid: r for r in records}
    families: dict[str, tuple[PredictionRecord, list[PredictionRecord]]] = {}
    for r in records:
        if r.parent_qid is None:
            families.setdefault(r.qid, (r, []))
    for r in records:
        if r.parent_qid is not None:
            if r.parent_qid not in by_qid:
                raise DanglingParentError(
                    f"sub-question {r.qid} references unknown parent "
                    f"{r.parent_qid}"
                )
            families.setdefault(
                r.parent_qid, (by_qid[r.parent_qid], [])
            )[1].append(r)
    return families


def rc_k(records: list[PredictionRecord], k: int) -> float | None:
    """Reasoning consistency at level k; None when no parent qualifies."""
    if k < 1:
        raise MetricsError(f"k must be >= 1, got {k}")
    numerator = 0
    denominator = 0
    for parent, subs in _families(records).values():
        if len(subs) < k or not parent.correct:
            continue
        denominator += 1
        if all(s.correct for s in subs):
            numerator += 1
    if denominator == 0:
        return None
    return numerator / denominator


def consistency_report(
    records: list[PredictionRecord], k_max: int = 3
) -> ConsistencyReport:
    """Full report: accuracies over parents and subs, plus RC(1..k_max)."""
    if not records:
        raise EmptyInputError("no prediction records")
    parents = [r for r in records if r.parent_qid is None]
    subs = [r for r in records if r.parent_qid is not None]
    acc, binary_acc, open_acc = accuracy(parents if parents else records)
    return ConsistencyReport(
        acc=acc,
        acc_sub=_mean_correct(subs),
        binary_acc=binary_acc,
        open_acc=open_acc,
        rc={k: rc_k(records, k) for k in range(1, k_max + 1)},
    )
