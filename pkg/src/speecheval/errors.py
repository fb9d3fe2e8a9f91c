"""Exception types raised by the toolkit.

Every distinct failure mode named in the module contracts gets its own
class so callers can branch on type rather than parse messages. Missing
input files raise the builtin ``FileNotFoundError``.
"""


class SpeechEvalError(Exception):
    """Base class for all toolkit errors."""


# audio ----------------------------------------------------------------

class AudioError(SpeechEvalError):
    pass


class UnsupportedWavError(AudioError):
    """Codec, bit depth, or header field the decoder does not accept."""


class TruncatedWavError(AudioError):
    """Header declares more payload than the file contains, or the
    header itself is structurally incomplete."""


class EmptyWavError(AudioError):
    """Zero-length audio payload."""


class ClipTooShortError(AudioError):
    """Clip shorter than a single analysis frame."""


# pitch ----------------------------------------------------------------

class PitchError(SpeechEvalError):
    pass


class InvalidFrequencyError(PitchError):
    """Non-positive frequency, or f0 bounds inconsistent with the
    sample rate."""


class UnvoicedClipError(PitchError):
    """Pitch aggregation requested on a track with zero voiced frames."""


# phon -----------------------------------------------------------------

class IpaError(SpeechEvalError):
    pass


class IpaTokenError(IpaError):
    """Tokenization failure; ``offset`` is the scalar-value index into
    the input string."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


# align ----------------------------------------------------------------

class AlignError(SpeechEvalError):
    pass


class EmptyReferenceError(AlignError):
    """Error rate undefined: the reference is empty after normalization."""


class SequenceTooLongError(AlignError):
    """Alignment input exceeds the configured token limit."""


# stats ----------------------------------------------------------------

class StatsError(SpeechEvalError):
    pass


class EmbeddingError(StatsError):
    """Unusable embedding vector: length mismatch, zero norm,
    non-finite values, or a malformed embedding file."""


class UndefinedPccError(StatsError):
    """PCC undefined: the reference contains no consonants, or the
    count total is zero."""


class InsufficientDataError(StatsError):
    """Too few observations for the requested statistic."""


class ZeroVarianceError(StatsError):
    """Statistic undefined on constant input."""


# harness --------------------------------------------------------------

class ManifestError(SpeechEvalError):
    """Manifest validation failure. ``diagnostics`` lists every problem
    found, one human-readable line each."""

    def __init__(self, diagnostics: list[str]):
        super().__init__(
            "manifest validation failed:\n  " + "\n  ".join(diagnostics)
        )
        self.diagnostics = list(diagnostics)
