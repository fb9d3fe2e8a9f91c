"""Levenshtein alignment with full edit scripts, and the WER/CER
metrics built on it.

Unit edit costs throughout. Backtrace tie-breaking is deterministic so
golden-file tests stay stable: diagonal (MATCH/SUB) is preferred over
DEL, and DEL over INS.
"""
from __future__ import annotations

import operator
import unicodedata
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

from .errors import EmptyReferenceError, SequenceTooLongError

# Quadratic DP guard; raise the limit explicitly for unusually long inputs.
DEFAULT_MAX_TOKENS = 10_000

_MATCH, _SUB, _DEL, _INS = 0, 1, 2, 3


class EditKind(str, Enum):
    MATCH = "match"
    SUB = "sub"
    INS = "ins"
    DEL = "del"


@dataclass(frozen=True)
class EditOp:
    """One alignment step. ``ref_item`` is None for INS, ``hyp_item``
    is None for DEL."""

    kind: EditKind
    ref_item: object
    hyp_item: object


@dataclass(frozen=True)
class EditScript:
    """Minimum-cost alignment of a hypothesis against a reference."""

    ops: tuple[EditOp, ...]
    distance: int
    matches: int
    substitutions: int
    insertions: int
    deletions: int

    def __post_init__(self):
        assert self.distance == self.substitutions + self.insertions + self.deletions
        assert self.matches + self.substitutions + self.insertions + self.deletions == len(self.ops)

    def apply(self, ref: Sequence) -> list:
        """Replay the script against ``ref``; yields the hypothesis.

        MATCH also emits the hypothesis item: under a relaxed equality
        predicate the matched tokens need not be identical.
        """
        out, i = [], 0
        for op in self.ops:
            if op.kind is EditKind.INS:
                out.append(op.hyp_item)
            elif op.kind is EditKind.DEL:
                i += 1
            else:
                out.append(op.hyp_item)
                i += 1
        return out


@dataclass(frozen=True)
class ErrorRate:
    """Edit distance over reference length; may exceed 1.0."""

    value: float
    numerator: int
    denominator: int


def levenshtein(
    ref: Sequence,
    hyp: Sequence,
    eq: Callable[[object, object], bool] = operator.eq,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> EditScript:
    """Align ``hyp`` against ``ref`` under unit edit costs.

    ``eq`` decides token equality (exact equality by default). The
    returned script attains the minimum distance and replays ``ref``
    into ``hyp``.
    """
    n, m = len(ref), len(hyp)
    if n > max_tokens or m > max_tokens:
        raise SequenceTooLongError(
            f"sequence lengths {n}/{m} exceed max_tokens={max_tokens}"
        )

    # Rolling cost row plus a full byte matrix of chosen moves.
    prev = list(range(m + 1))
    moves: list[bytes] = [b""] * (n + 1)  # moves[i][j-1] is the move into (i, j)
    for i in range(1, n + 1):
        row_moves = bytearray(m)
        cur = [i] + [0] * m
        ref_item = ref[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] if eq(ref_item, hyp[j - 1]) else prev[j - 1] + 1
            up = prev[j] + 1
            left = cur[j - 1] + 1
            if diag <= up and diag <= left:
                cur[j] = diag
                row_moves[j - 1] = _MATCH if diag == prev[j - 1] else _SUB
            elif up <= left:
                cur[j] = up
                row_moves[j - 1] = _DEL
            else:
                cur[j] = left
                row_moves[j - 1] = _INS
        moves[i] = bytes(row_moves)
        prev = cur

    distance = prev[m]
    ops: list[EditOp] = []
    counts = [0, 0, 0, 0]
    i, j = n, m
    while i > 0 and j > 0:
        move = moves[i][j - 1]
        counts[move] += 1
        if move == _MATCH or move == _SUB:
            kind = EditKind.MATCH if move == _MATCH else EditKind.SUB
            ops.append(EditOp(kind, ref[i - 1], hyp[j - 1]))
            i -= 1
            j -= 1
        elif move == _DEL:
            ops.append(EditOp(EditKind.DEL, ref[i - 1], None))
            i -= 1
        else:
            ops.append(EditOp(EditKind.INS, None, hyp[j - 1]))
            j -= 1
    while i > 0:
        counts[_DEL] += 1
        ops.append(EditOp(EditKind.DEL, ref[i - 1], None))
        i -= 1
    while j > 0:
        counts[_INS] += 1
        ops.append(EditOp(EditKind.INS, None, hyp[j - 1]))
        j -= 1
    ops.reverse()

    return EditScript(
        ops=tuple(ops),
        distance=distance,
        matches=counts[_MATCH],
        substitutions=counts[_SUB],
        insertions=counts[_INS],
        deletions=counts[_DEL],
    )


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize_text(text: str) -> str:
    """Case-fold, strip leading/trailing punctuation per word, collapse
    whitespace. The common ASR scoring convention; disable via the
    ``normalize`` flag on wer/cer where raw comparison is wanted."""
    words = []
    for word in text.casefold().split():
        start, end = 0, len(word)
        while start < end and _is_punct(word[start]):
            start += 1
        while end > start and _is_punct(word[end - 1]):
            end -= 1
        if start < end:
            words.append(word[start:end])
    return " ".join(words)


def wer(ref_text: str, hyp_text: str, normalize: bool = True) -> ErrorRate:
    """Word error rate: word-level edit distance over reference word
    count. Raises EmptyReferenceError when the reference has no words
    after normalization."""
    if normalize:
        ref_text, hyp_text = normalize_text(ref_text), normalize_text(hyp_text)
    ref_words, hyp_words = ref_text.split(), hyp_text.split()
    if not ref_words:
        raise EmptyReferenceError("reference is empty after normalization")
    distance = levenshtein(ref_words, hyp_words).distance
    return ErrorRate(value=distance / len(ref_words), numerator=distance,
                     denominator=len(ref_words))


def cer(ref_text: str, hyp_text: str, normalize: bool = True) -> ErrorRate:
    """Character error rate over the normalized strings; spaces count
    as characters."""
    if normalize:
        ref_text, hyp_text = normalize_text(ref_text), normalize_text(hyp_text)
    if not ref_text:
        raise EmptyReferenceError("reference is empty after normalization")
    distance = levenshtein(ref_text, hyp_text).distance
    return ErrorRate(value=distance / len(ref_text), numerator=distance,
                     denominator=len(ref_text))
