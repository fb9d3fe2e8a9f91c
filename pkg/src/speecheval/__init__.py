"""Evaluation toolkit for reconstructed clinical speech.

Computes speaker-identity metrics (YIN pitch comparison, embedding
cosine similarity), lexical accuracy (WER/CER), an automated percentage
of correct consonants from IPA transcriptions, and the statistics used
to validate them (Pearson correlation, Welch t-tests), driven by a
declarative manifest of externally produced inputs.
"""

from . import errors
from .align import (
    EditKind,
    EditOp,
    EditScript,
    ErrorRate,
    cer,
    levenshtein,
    normalize_text,
    wer,
)
from .audio import AudioClip, FrameSpec, frame_signal, load_wav, save_wav
from .harness import (
    EvaluationReport,
    MetricRow,
    ToolkitConfig,
    UtteranceRecord,
    aggregate,
    compare_methods,
    emit_report,
    evaluate_pair,
    evaluate_single,
    load_manifest,
    run_evaluation,
)
from .phon import (
    IpaSequence,
    IpaToken,
    consonant_inventory,
    extract_consonants,
    normalize_ipa,
    parse_ipa,
    tokenize_ipa,
)
from .pitch import (
    PitchComparison,
    PitchFrame,
    PitchTrack,
    YinConfig,
    aggregate_f0,
    compare_pitch,
    yin_f0_track,
)
from .stats import (
    CorrelationResult,
    EmbeddingVector,
    PccResult,
    TTestResult,
    consonant_accuracy,
    cosine_similarity,
    load_embedding,
    pcc_from_counts,
    pearson,
    pooled_pcc,
    student_t_cdf,
    welch_t_test,
)

__version__ = "0.1.0"
