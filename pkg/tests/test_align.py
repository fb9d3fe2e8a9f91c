import pytest
from hypothesis import given, settings, strategies as st

from helpers import brute_levenshtein
from speecheval.align import (
    EditKind,
    cer,
    levenshtein,
    normalize_text,
    wer,
)
from speecheval.errors import EmptyReferenceError, SequenceTooLongError

token_seqs = st.lists(st.sampled_from("abcde"), max_size=12)


def test_kitten_sitting():
    script = levenshtein("kitten", "sitting")
    assert script.distance == 3 == brute_levenshtein("kitten", "sitting")
    assert script.substitutions == 2 and script.insertions == 1
    assert script.matches == 4 and script.deletions == 0


def test_identity():
    script = levenshtein("abc", "abc")
    assert script.distance == 0
    assert all(op.kind is EditKind.MATCH for op in script.ops)


def test_empty_reference():
    script = levenshtein("", "abc")
    assert script.distance == 3
    assert [op.kind for op in script.ops] == [EditKind.INS] * 3


def test_empty_hypothesis():
    script = levenshtein("ab", "")
    assert script.distance == 2
    assert [op.kind for op in script.ops] == [EditKind.DEL] * 2


def test_deterministic_tiebreak_prefers_substitution():
    # "ab" -> "ba" admits (INS, MATCH, DEL) at cost 2; the documented
    # priority picks two substitutions.
    script = levenshtein("ab", "ba")
    assert script.distance == 2
    assert [op.kind for op in script.ops] == [EditKind.SUB, EditKind.SUB]


def test_custom_equality():
    script = levenshtein(["A", "b"], ["a", "B"], eq=lambda x, y: x.lower() == y.lower())
    assert script.distance == 0
    assert script.matches == 2


def test_max_tokens_guard():
    with pytest.raises(SequenceTooLongError):
        levenshtein("a" * 11, "b", max_tokens=10)


@settings(max_examples=300)
@given(ref=token_seqs, hyp=token_seqs)
def test_distance_matches_brute_force(ref, hyp):
    assert levenshtein(ref, hyp).distance == brute_levenshtein(ref, hyp)


@settings(max_examples=200)
@given(ref=token_seqs, hyp=token_seqs)
def test_metric_axioms(ref, hyp):
    d = levenshtein(ref, hyp).distance
    assert d >= 0
    assert (d == 0) == (ref == hyp)
    assert d == levenshtein(hyp, ref).distance
    assert d <= max(len(ref), len(hyp))


@settings(max_examples=100)
@given(a=token_seqs, b=token_seqs, c=token_seqs)
def test_triangle_inequality(a, b, c):
    dab = levenshtein(a, b).distance
    dbc = levenshtein(b, c).distance
    dac = levenshtein(a, c).distance
    assert dac <= dab + dbc


@settings(max_examples=200)
@given(ref=token_seqs, hyp=token_seqs)
def test_replay_soundness(ref, hyp):
    script = levenshtein(ref, hyp)
    assert script.apply(ref) == hyp
    assert script.distance == (script.substitutions + script.insertions
                               + script.deletions)
    assert script.matches + script.substitutions == sum(
        1 for op in script.ops if op.kind in (EditKind.MATCH, EditKind.SUB)
    )


def test_wer_identity():
    assert wer("the cat sat", "the cat sat").value == 0.0


def test_wer_fixture():
    rate = wer("the cat sat on the mat", "the cat sat mat")
    assert rate.numerator == 2
    assert rate.denominator == 6
    assert rate.value == pytest.approx(2 / 6)


def test_wer_empty_reference():
    with pytest.raises(EmptyReferenceError):
        wer("", "hi")
    with pytest.raises(EmptyReferenceError):
        wer("...", "hi")  # pure punctuation normalizes away


def test_wer_normalization():
    assert wer("The CAT, sat!", "the cat sat").value == 0.0
    # normalization off: casing counts
    assert wer("The cat", "the cat", normalize=False).numerator == 1


def test_wer_can_exceed_one():
    rate = wer("a", "b c d")
    assert rate.value == 3.0


def test_cer_identity():
    assert cer("abc", "abc").value == 0.0


def test_cer_single_substitution():
    rate = cer("abc", "abd")
    assert (rate.numerator, rate.denominator) == (1, 3)


def test_cer_fixture():
    rate = cer("speech", "peach")
    assert rate.numerator == brute_levenshtein("speech", "peach") == 2
    assert rate.denominator == 6


def test_cer_counts_spaces():
    rate = cer("a b", "ab")
    assert (rate.numerator, rate.denominator) == (1, 3)


def test_cer_empty_reference():
    with pytest.raises(EmptyReferenceError):
        cer("", "x")


def test_normalize_text():
    assert normalize_text("  The CAT, sat!  ") == "the cat sat"
    assert normalize_text("“quoted” word…") == "quoted word"
    assert normalize_text("...") == ""
    # interior punctuation survives (only edges are stripped)
    assert normalize_text("don't stop") == "don't stop"
