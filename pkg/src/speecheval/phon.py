"""IPA normalization, tokenization, and consonant extraction.

Transcriptions arrive as plain strings from external phonemizers and
phone recognizers. This module turns them into phone tokens (base
character plus attached diacritics, with tie-barred affricates fused
into single tokens) and projects out the consonant subsequence that the
clinical consonant-accuracy metric aligns.

The consonant inventory ships as ``data/consonants.txt`` (one base per
line) so it can be audited or extended without code changes.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .errors import IpaTokenError

TIE_BARS = frozenset({"͡", "͜"})

# Spacing modifier letters that attach to the preceding base like
# combining marks: aspiration, secondary articulation, releases,
# ejective apostrophe, rhotic hook.
MODIFIER_LETTERS = frozenset("ʰʱʲʷˠˤⁿˡˢˣʼˀʴʵʶᵊ˞")

# Stripped by normalize_ipa: transcription delimiters, stress marks,
# length marks, syllable dots.
_STRIPPED = frozenset("/[]ˈˌːˑ.")

VOWELS = frozenset("iyɨʉɯuɪʏʊeøɘɵɤoəɛœɜɞʌɔæɐaɶɑɒɚɝ")


@lru_cache(maxsize=None)
def consonant_inventory() -> frozenset[str]:
    """Consonant base characters loaded from the bundled data file."""
    text = (resources.files("speecheval") / "data" / "consonants.txt").read_text(
        encoding="utf-8"
    )
    bases = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            bases.add(line)
    return frozenset(bases)


@dataclass(frozen=True)
class IpaToken:
    """One phone: ``base`` is a single character, or two characters for
    a tie-fused affricate. ``text`` is the exact input slice (including
    any tie bar), so concatenating token texts reproduces the input."""

    text: str
    base: str
    diacritics: tuple[str, ...]
    is_consonant: bool
    is_unknown: bool = False


@dataclass(frozen=True)
class IpaSequence:
    tokens: tuple[IpaToken, ...]
    raw: str

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def unknown_count(self) -> int:
        return sum(1 for t in self.tokens if t.is_unknown)


def normalize_ipa(text: str) -> str:
    """Strip annotation characters and NFC-normalize.

    Removes slash/bracket delimiters, stress and length marks, and
    syllable dots; collapses whitespace runs to single spaces. NFC runs
    after the removals: stripping can reunite a combining mark with its
    base, and the pair must compose canonically for the result to be
    idempotent. Total on valid text.
    """
    text = "".join(ch for ch in text if ch not in _STRIPPED)
    text = " ".join(text.split())
    return unicodedata.normalize("NFC", text)


def _classify(base: str, inventory: frozenset[str]) -> tuple[bool, bool]:
    """(is_consonant, is_unknown) for a token base. Tie-fused bases are
    consonants when every component is; precomposed characters fall back
    to their canonical decomposition."""
    consonant = True
    unknown = False
    for ch in base:
        if ch in inventory:
            continue
        if ch in VOWELS:
            consonant = False
            continue
        decomposed = unicodedata.normalize("NFD", ch)[0]
        if decomposed != ch and decomposed in inventory:
            continue
        if decomposed != ch and decomposed in VOWELS:
            consonant = False
            continue
        consonant = False
        unknown = True
    return consonant, unknown


class _TokenBuilder:
    __slots__ = ("chars", "base", "diacritics", "pending_tie")

    def __init__(self, ch: str):
        self.chars = [ch]
        self.base = ch
        self.diacritics: list[str] = []
        self.pending_tie = False


def tokenize_ipa(text: str, inventory: frozenset[str] | None = None) -> IpaSequence:
    """Segment a normalized IPA string into phone tokens.

    Combining marks and recognized modifier letters attach to the
    preceding base; a tie bar fuses the next base into the same token;
    whitespace separates tokens without producing one.

    Raises IpaTokenError (with string offset) when a combining or
    modifier character has no base to attach to.
    """
    if inventory is None:
        inventory = consonant_inventory()

    builders: list[_TokenBuilder] = []
    current: _TokenBuilder | None = None
    for offset, ch in enumerate(text):
        if ch.isspace():
            current = None
            continue
        if ch in TIE_BARS:
            if current is None:
                raise IpaTokenError(f"tie bar {ch!r} has no base", offset)
            current.chars.append(ch)
            current.pending_tie = True
            continue
        if unicodedata.category(ch).startswith("M") or ch in MODIFIER_LETTERS:
            if current is None:
                raise IpaTokenError(
                    f"combining character {ch!r} has no base", offset
                )
            current.chars.append(ch)
            current.diacritics.append(ch)
            continue
        if current is not None and current.pending_tie:
            current.chars.append(ch)
            current.base += ch
            current.pending_tie = False
            continue
        current = _TokenBuilder(ch)
        builders.append(current)

    tokens = []
    for b in builders:
        consonant, unknown = _classify(b.base, inventory)
        tokens.append(
            IpaToken(
                text="".join(b.chars),
                base=b.base,
                diacritics=tuple(b.diacritics),
                is_consonant=consonant,
                is_unknown=unknown,
            )
        )
    return IpaSequence(tokens=tuple(tokens), raw=text)


def extract_consonants(seq: IpaSequence) -> IpaSequence:
    """Consonant subsequence of ``seq``, order and diacritics preserved.

    A projection: applying it twice equals applying it once.
    """
    kept = tuple(t for t in seq.tokens if t.is_consonant)
    return IpaSequence(tokens=kept, raw="".join(t.text for t in kept))


def parse_ipa(text: str, inventory: frozenset[str] | None = None) -> IpaSequence:
    """normalize_ipa followed by tokenize_ipa."""
    return tokenize_ipa(normalize_ipa(text), inventory)
