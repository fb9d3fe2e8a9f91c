"""Manifest-driven batch evaluation.

A manifest binds, per utterance and method, the externally produced
inputs the metrics consume: audio files, ASR hypotheses and word
confidences, predicted and target IPA strings, speaker embeddings, and
clinician consonant counts. The harness pairs every non-original method
row with the original row of the same utterance, computes each metric
wherever its inputs are present, and assembles a deterministic report
(per-utterance rows, grouped aggregates, method comparisons,
correlations against clinician annotations).

Missing inputs never become silent zeros: every uncomputed metric
carries an explicit reason in the row's ``not_computed`` map, and
aggregates skip those rows while counting them.
"""
from __future__ import annotations

import csv
import functools
import io
import json
import math
from concurrent import futures
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import stats
from .align import cer, wer
from .audio import load_wav
from .errors import (
    AlignError,
    AudioError,
    EmbeddingError,
    InsufficientDataError,
    IpaError,
    InvalidFrequencyError,
    ManifestError,
    UndefinedPccError,
    UnvoicedClipError,
    ZeroVarianceError,
)
from .phon import parse_ipa
from .pitch import YinConfig, aggregate_f0, compare_pitch, yin_f0_track

# Metrics that participate in grouped aggregation and method
# comparisons, in report column order.
AGGREGATE_METRICS = (
    "cer",
    "wer",
    "confidence",
    "similarity",
    "f0_diff_pct",
    "semitone_diff",
    "pcc_percent",
    "clinician_pcc",
)

_GROUP_BY_CHOICES = ("method", "speaker", "group")
_PCC_REFERENCE_CHOICES = ("reconstructed", "target")
_IPA_MATCH_CHOICES = ("strict", "base")
_F0_AGGREGATE_CHOICES = ("mean", "median")

# Report floats are serialized to this many significant digits.
FLOAT_DIGITS = 6


@dataclass(frozen=True)
class ToolkitConfig:
    """Every knob that affects report content. The report echoes this
    verbatim, so a run can be reproduced from its own output.

    ``similarity_threshold_annotation`` is informational only (a
    commonly cited acceptability threshold for speaker verification);
    it never gates anything.
    """

    yin: YinConfig = YinConfig()
    f0_aggregate: str = "mean"
    ipa_match: str = "strict"
    pcc_reference: str = "reconstructed"
    group_by: str = "method"
    normalize_asr_text: bool = True
    original_method: str = "original"
    similarity_threshold_annotation: float = 0.6

    def __post_init__(self):
        for name, value, choices in (
            ("f0_aggregate", self.f0_aggregate, _F0_AGGREGATE_CHOICES),
            ("ipa_match", self.ipa_match, _IPA_MATCH_CHOICES),
            ("pcc_reference", self.pcc_reference, _PCC_REFERENCE_CHOICES),
            ("group_by", self.group_by, _GROUP_BY_CHOICES),
        ):
            if value not in choices:
                raise ValueError(f"{name} must be one of {choices}, got {value!r}")
        if not self.original_method:
            raise ValueError("original_method must be non-empty")

    def to_echo(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ToolkitConfig":
        data = dict(mapping)
        yin = data.pop("yin", None)
        known = {f.name for f in fields(cls)} - {"yin"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if yin is not None:
            data["yin"] = YinConfig(**yin)
        return cls(**data)


@dataclass(frozen=True)
class UtteranceRecord:
    """One manifest entry: an utterance as realized by one method.

    All metric inputs are optional; a metric is computed only when its
    inputs are present. ``embedding_format`` defaults by file extension
    (``.json`` -> JSON array, anything else -> raw float32);
    ``embedding_dim`` declares an expected length to validate against.
    """

    utterance_id: str
    speaker_id: str
    method: str
    group: str | None = None
    audio_path: str | None = None
    target_text: str | None = None
    asr_hypothesis: str | None = None
    asr_word_confidences: tuple[float, ...] | None = None
    ipa_predicted: str | None = None
    ipa_target: str | None = None
    embedding_ref: str | None = None
    embedding_format: str | None = None
    embedding_dim: int | None = None
    clinician_correct: int | None = None
    clinician_total: int | None = None


_REQUIRED_FIELDS = ("utterance_id", "speaker_id", "method")
_STRING_FIELDS = (
    "utterance_id", "speaker_id", "method", "group", "audio_path",
    "target_text", "asr_hypothesis", "ipa_predicted", "ipa_target",
    "embedding_ref", "embedding_format",
)
_INT_FIELDS = ("clinician_correct", "clinician_total", "embedding_dim")
_PATH_FIELDS = ("audio_path", "embedding_ref")
_ALL_FIELDS = {f.name for f in fields(UtteranceRecord)}


def _validate_raw_record(where: str, raw: dict,
                         diags: list[str]) -> tuple[dict, bool]:
    """Type- and invariant-check one raw record dict; returns the
    cleaned field values and whether the record is usable, appending
    one diagnostic per problem found."""
    clean: dict = {}
    ok = True
    unknown = set(raw) - _ALL_FIELDS
    for name in sorted(unknown):
        diags.append(f"{where}.{name}: unknown field")
        ok = False
    for name in _REQUIRED_FIELDS:
        value = raw.get(name)
        if not isinstance(value, str) or not value:
            diags.append(f"{where}.{name}: required non-empty string")
            ok = False
        else:
            clean[name] = value
    for name in _STRING_FIELDS:
        if name in _REQUIRED_FIELDS:
            continue
        value = raw.get(name)
        if value is None:
            continue
        if not isinstance(value, str):
            diags.append(f"{where}.{name}: expected string, got {type(value).__name__}")
            ok = False
        else:
            clean[name] = value
    for name in _INT_FIELDS:
        value = raw.get(name)
        if value is None:
            continue
        if isinstance(value, bool) or not isinstance(value, int):
            diags.append(f"{where}.{name}: expected integer, got {value!r}")
            ok = False
        elif value < 0:
            diags.append(f"{where}.{name}: must be non-negative, got {value}")
            ok = False
        else:
            clean[name] = value
    conf = raw.get("asr_word_confidences")
    if conf is not None:
        if not isinstance(conf, (list, tuple)) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in conf
        ):
            diags.append(f"{where}.asr_word_confidences: expected a list of reals")
            ok = False
        elif any(not 0.0 <= float(v) <= 1.0 for v in conf):
            diags.append(f"{where}.asr_word_confidences: values must lie in [0, 1]")
            ok = False
        else:
            clean["asr_word_confidences"] = tuple(float(v) for v in conf)

    correct, total = clean.get("clinician_correct"), clean.get("clinician_total")
    if (correct is None) != (total is None):
        diags.append(f"{where}: clinician_correct and clinician_total must appear together")
        ok = False
    elif correct is not None and correct > total:
        diags.append(
            f"{where}: clinician_correct {correct} exceeds clinician_total {total}"
        )
        ok = False
    emb_fmt = clean.get("embedding_format")
    if emb_fmt is not None and emb_fmt not in ("json", "float32"):
        diags.append(f"{where}.embedding_format: must be 'json' or 'float32'")
        ok = False
    if clean.get("embedding_dim") == 0:
        diags.append(f"{where}.embedding_dim: must be positive")
        ok = False
    return clean, ok


def _csv_raw_records(path: Path) -> list[tuple[str, dict]]:
    out = []
    # utf-8-sig: spreadsheet exports often prepend a BOM that would
    # otherwise corrupt the first column name
    with path.open(newline="", encoding="utf-8-sig") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            raw: dict = {}
            for key, value in row.items():
                if key is None or value is None or value == "":
                    continue
                key = key.strip()
                if key in _INT_FIELDS:
                    try:
                        raw[key] = int(value)
                    except ValueError:
                        raw[key] = value  # let validation report it
                elif key == "asr_word_confidences":
                    try:
                        raw[key] = [float(v) for v in value.split(";") if v.strip()]
                    except ValueError:
                        raw[key] = value
                else:
                    raw[key] = value
            out.append((f"line {reader.line_num}", raw))
    return out


def load_manifest(path: str | Path) -> list[UtteranceRecord]:
    """Load and validate a manifest.

    JSON manifests are a single document ``{"records": [...]}``; files
    ending in ``.csv`` are read as a CSV convenience format with the
    same fields (lists semicolon-separated). Relative path fields are
    resolved against the manifest's directory, and every referenced
    file must exist.

    Raises ManifestError carrying one diagnostic per problem found
    (schema violations, duplicate (utterance_id, method) keys, dangling
    file references are all collected before failing).
    """
    path = Path(path)
    diags: list[str] = []
    if path.suffix.lower() == ".csv":
        raw_records = _csv_raw_records(path)
    else:
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ManifestError([f"invalid JSON: {exc}"]) from exc
        if not isinstance(doc, dict) or not isinstance(doc.get("records"), list):
            raise ManifestError(['expected a JSON object {"records": [...]}'])
        raw_records = []
        for i, raw in enumerate(doc["records"]):
            where = f"records[{i}]"
            if not isinstance(raw, dict):
                diags.append(f"{where}: expected an object")
                continue
            raw_records.append((where, raw))

    base = path.resolve().parent
    records: list[UtteranceRecord] = []
    seen: dict[tuple[str, str], str] = {}
    for where, raw in raw_records:
        clean, ok = _validate_raw_record(where, raw, diags)
        for name in _PATH_FIELDS:
            if name in clean:
                resolved = Path(clean[name])
                if not resolved.is_absolute():
                    resolved = base / resolved
                if not resolved.is_file():
                    diags.append(f"{where}.{name}: file not found: {resolved}")
                    continue
                clean[name] = str(resolved)
        if not ok:
            continue
        key = (clean["utterance_id"], clean["method"])
        if key in seen:
            diags.append(
                f"{where}: duplicate (utterance_id, method) {key}, "
                f"first seen at {seen[key]}"
            )
        else:
            seen[key] = where
        records.append(UtteranceRecord(**clean))
    if diags:
        raise ManifestError(diags)
    return records


# --- per-utterance evaluation -----------------------------------------


@dataclass
class MetricRow:
    """All metrics for one (utterance, method) evaluation, with
    explicit reasons for whatever could not be computed.

    Pair rows (method != original) carry the original side's lexical
    metrics and clinician counts in the ``*_ref`` fields.
    """

    utterance_id: str
    speaker_id: str
    group: str | None
    method: str
    similarity: float | None = None
    f0_ref_mean: float | None = None
    f0_rec_mean: float | None = None
    semitone_diff: float | None = None
    f0_diff_pct: float | None = None
    wer: float | None = None
    cer: float | None = None
    confidence: float | None = None
    wer_ref: float | None = None
    cer_ref: float | None = None
    confidence_ref: float | None = None
    pcc_percent: float | None = None
    pcc_matches: int | None = None
    pcc_total: int | None = None
    consonant_distance: int | None = None
    pcc_reference: str | None = None
    ipa_unknown_symbols: int | None = None
    clinician_correct: int | None = None
    clinician_total: int | None = None
    clinician_pcc: float | None = None
    clinician_correct_ref: int | None = None
    clinician_total_ref: int | None = None
    not_computed: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["not_computed"] = dict(sorted(self.not_computed.items()))
        return out


ROW_FIELDS = tuple(f.name for f in fields(MetricRow))


@functools.lru_cache(maxsize=512)
def _cached_mean_f0(path: str, mtime_ns: int, size: int, cfg: YinConfig,
                    method: str) -> float:
    track = yin_f0_track(load_wav(path), cfg)
    return aggregate_f0(track, method=method)


def _mean_f0(path: str, cfg: ToolkitConfig) -> float:
    st = Path(path).stat()
    return _cached_mean_f0(path, st.st_mtime_ns, st.st_size, cfg.yin,
                           cfg.f0_aggregate)


def _lexical_metrics(row: MetricRow, record: UtteranceRecord,
                     fallback_target: str | None, cfg: ToolkitConfig,
                     suffix: str = "") -> None:
    """Fill wer/cer/confidence (optionally the ``_ref`` variants) for
    one record side."""
    target = record.target_text or fallback_target
    side = f"{record.method} side"
    if target is None:
        reason = f"missing target_text on {side}"
        row.not_computed[f"wer{suffix}"] = reason
        row.not_computed[f"cer{suffix}"] = reason
    elif record.asr_hypothesis is None:
        reason = f"missing asr_hypothesis on {side}"
        row.not_computed[f"wer{suffix}"] = reason
        row.not_computed[f"cer{suffix}"] = reason
    else:
        try:
            setattr(row, f"wer{suffix}",
                    wer(target, record.asr_hypothesis,
                        normalize=cfg.normalize_asr_text).value)
            setattr(row, f"cer{suffix}",
                    cer(target, record.asr_hypothesis,
                        normalize=cfg.normalize_asr_text).value)
        except AlignError as exc:
            reason = f"{exc} ({side})"
            row.not_computed[f"wer{suffix}"] = reason
            row.not_computed[f"cer{suffix}"] = reason
    conf = record.asr_word_confidences
    if conf is None:
        row.not_computed[f"confidence{suffix}"] = (
            f"missing asr_word_confidences on {side}"
        )
    elif len(conf) == 0:
        row.not_computed[f"confidence{suffix}"] = (
            f"empty asr_word_confidences on {side}"
        )
    else:
        setattr(row, f"confidence{suffix}", math.fsum(conf) / len(conf))


def _clinician_metrics(row: MetricRow, record: UtteranceRecord) -> None:
    if record.clinician_correct is None or record.clinician_total is None:
        row.not_computed["clinician_pcc"] = (
            f"missing clinician counts on {record.method} side"
        )
        return
    try:
        row.clinician_pcc = stats.pcc_from_counts(
            record.clinician_correct, record.clinician_total
        )
        row.clinician_correct = record.clinician_correct
        row.clinician_total = record.clinician_total
    except UndefinedPccError as exc:
        row.not_computed["clinician_pcc"] = str(exc)


def _pcc_metrics(row: MetricRow, ref_text: str | None, ref_desc: str,
                 produced_text: str | None, produced_desc: str,
                 cfg: ToolkitConfig) -> None:
    if ref_text is None:
        row.not_computed["pcc"] = f"missing {ref_desc}"
        return
    if produced_text is None:
        row.not_computed["pcc"] = f"missing {produced_desc}"
        return
    try:
        ref_seq = parse_ipa(ref_text)
        produced_seq = parse_ipa(produced_text)
    except IpaError as exc:
        row.not_computed["pcc"] = f"invalid IPA: {exc}"
        return
    row.ipa_unknown_symbols = ref_seq.unknown_count + produced_seq.unknown_count
    try:
        result = stats.consonant_accuracy(
            ref_seq, produced_seq, strict=cfg.ipa_match == "strict"
        )
    except UndefinedPccError:
        row.not_computed["pcc"] = f"no consonants in {ref_desc}"
        return
    row.pcc_percent = result.pcc_percent
    row.pcc_matches = result.matches
    row.pcc_total = result.total_ref_consonants
    row.consonant_distance = result.consonant_distance
    row.pcc_reference = cfg.pcc_reference


def evaluate_pair(original: UtteranceRecord, reconstructed: UtteranceRecord,
                  cfg: ToolkitConfig = ToolkitConfig()) -> MetricRow:
    """Compute every metric available for one (original, reconstructed)
    record pair sharing an utterance_id.

    Pitch comparison and speaker similarity need inputs on both sides;
    lexical metrics are computed per side against the utterance's
    target text; the automated-PCC reference follows
    ``cfg.pcc_reference`` (the reconstruction's predicted IPA as a
    corrected proxy, or the ground-truth target IPA).
    """
    if original.utterance_id != reconstructed.utterance_id:
        raise ValueError(
            f"utterance_id mismatch: {original.utterance_id!r} vs "
            f"{reconstructed.utterance_id!r}"
        )
    if original.method == reconstructed.method:
        raise ValueError(f"cannot pair method {original.method!r} with itself")
    if not _pair_has_metric_inputs(original, reconstructed, cfg):
        raise InsufficientDataError(
            f"records for utterance {original.utterance_id!r} "
            f"({original.method}/{reconstructed.method}) carry no metric inputs"
        )
    row = MetricRow(
        utterance_id=reconstructed.utterance_id,
        speaker_id=reconstructed.speaker_id,
        group=reconstructed.group or original.group,
        method=reconstructed.method,
    )

    # pitch: aggregated F0 per side, then absolute differences
    missing_audio = [
        r.method for r in (original, reconstructed) if r.audio_path is None
    ]
    if missing_audio:
        row.not_computed["pitch_comparison"] = (
            f"missing audio_path on {', '.join(missing_audio)} side"
        )
    else:
        try:
            f0_ref = _mean_f0(original.audio_path, cfg)
            f0_rec = _mean_f0(reconstructed.audio_path, cfg)
            comparison = compare_pitch(f0_ref, f0_rec)
            row.f0_ref_mean = comparison.f0_ref_mean
            row.f0_rec_mean = comparison.f0_rec_mean
            row.semitone_diff = comparison.semitone_diff
            row.f0_diff_pct = comparison.relative_deviation_pct
        except (AudioError, UnvoicedClipError, InvalidFrequencyError,
                FileNotFoundError) as exc:
            row.not_computed["pitch_comparison"] = str(exc)

    # speaker similarity
    missing_emb = [
        r.method for r in (original, reconstructed) if r.embedding_ref is None
    ]
    if missing_emb:
        row.not_computed["similarity"] = (
            f"missing embedding_ref on {', '.join(missing_emb)} side"
        )
    else:
        try:
            row.similarity = stats.cosine_similarity(
                _load_record_embedding(original),
                _load_record_embedding(reconstructed),
            )
        except (EmbeddingError, FileNotFoundError) as exc:
            row.not_computed["similarity"] = str(exc)

    # lexical accuracy, both sides
    _lexical_metrics(row, reconstructed, original.target_text, cfg)
    _lexical_metrics(row, original, reconstructed.target_text, cfg, suffix="_ref")

    # automated consonant accuracy
    if cfg.pcc_reference == "reconstructed":
        _pcc_metrics(
            row,
            reconstructed.ipa_predicted,
            f"ipa_predicted on {reconstructed.method} side",
            original.ipa_predicted,
            f"ipa_predicted on {original.method} side",
            cfg,
        )
    else:
        _pcc_metrics(
            row,
            reconstructed.ipa_target or original.ipa_target,
            "ipa_target",
            reconstructed.ipa_predicted,
            f"ipa_predicted on {reconstructed.method} side",
            cfg,
        )

    _clinician_metrics(row, reconstructed)
    row.clinician_correct_ref = original.clinician_correct
    row.clinician_total_ref = original.clinician_total
    return row


def _pair_has_metric_inputs(original: UtteranceRecord,
                            reconstructed: UtteranceRecord,
                            cfg: ToolkitConfig) -> bool:
    """True when at least one metric has its inputs present on the pair
    (whether its computation then succeeds is a separate matter)."""
    target = original.target_text or reconstructed.target_text
    if cfg.pcc_reference == "reconstructed":
        pcc_ready = (original.ipa_predicted is not None
                     and reconstructed.ipa_predicted is not None)
    else:
        pcc_ready = ((reconstructed.ipa_target or original.ipa_target) is not None
                     and reconstructed.ipa_predicted is not None)
    return any((
        original.audio_path is not None and reconstructed.audio_path is not None,
        original.embedding_ref is not None and reconstructed.embedding_ref is not None,
        target is not None and reconstructed.asr_hypothesis is not None,
        target is not None and original.asr_hypothesis is not None,
        reconstructed.asr_word_confidences is not None,
        original.asr_word_confidences is not None,
        pcc_ready,
        reconstructed.clinician_correct is not None,
        original.clinician_correct is not None,
    ))


def evaluate_single(record: UtteranceRecord, cfg: ToolkitConfig = ToolkitConfig(),
                    pair_reason: str = "self-comparison omitted") -> MetricRow:
    """Metrics computable from one record alone (used for the original
    method's rows, and for method rows with no original to pair with).
    Pair metrics carry ``pair_reason`` as their not-computed marker."""
    row = MetricRow(
        utterance_id=record.utterance_id,
        speaker_id=record.speaker_id,
        group=record.group,
        method=record.method,
    )
    row.not_computed["pitch_comparison"] = pair_reason
    row.not_computed["similarity"] = pair_reason
    _lexical_metrics(row, record, None, cfg)
    if cfg.pcc_reference == "target":
        _pcc_metrics(
            row,
            record.ipa_target,
            "ipa_target",
            record.ipa_predicted,
            f"ipa_predicted on {record.method} side",
            cfg,
        )
    else:
        row.not_computed["pcc"] = (
            "reconstructed-reference PCC is defined on reconstruction rows"
        )
    _clinician_metrics(row, record)
    return row


def _load_record_embedding(record: UtteranceRecord) -> stats.EmbeddingVector:
    fmt = record.embedding_format
    if fmt is None:
        fmt = "json" if record.embedding_ref.endswith(".json") else "float32"
    return stats.load_embedding(record.embedding_ref, fmt=fmt,
                                expected_dim=record.embedding_dim)


# --- aggregation and comparisons --------------------------------------


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values)


def aggregate(rows: list[MetricRow], group_by: str,
              original_method: str = "original") -> list[dict]:
    """Per-(group, method) arithmetic means of every aggregable metric,
    with pooled PCC (sum of matches over sum of totals) next to the
    mean of per-utterance PCC, and per-metric missing-row counts.

    ``group_by`` is ``"method"`` (one group spanning the corpus),
    ``"speaker"``, or ``"group"`` (e.g. severity). The original method
    sorts first within each group.
    """
    if not rows:
        raise InsufficientDataError("no rows to aggregate")
    if group_by not in _GROUP_BY_CHOICES:
        raise ValueError(f"group_by must be one of {_GROUP_BY_CHOICES}")

    def group_key(row: MetricRow) -> str:
        if group_by == "speaker":
            return row.speaker_id
        if group_by == "group":
            return row.group if row.group is not None else "(ungrouped)"
        return "(all)"

    cells: dict[tuple[str, str], list[MetricRow]] = {}
    for row in rows:
        cells.setdefault((group_key(row), row.method), []).append(row)

    def cell_order(key: tuple[str, str]):
        group, method = key
        return (group, method != original_method, method)

    out = []
    for group, method in sorted(cells, key=cell_order):
        cell = cells[(group, method)]
        metrics = {}
        for name in AGGREGATE_METRICS:
            values = [getattr(r, name) for r in cell if getattr(r, name) is not None]
            metrics[name] = {
                "mean": _mean(values) if values else None,
                "n": len(values),
                "missing": len(cell) - len(values),
            }
        pcc_counts = [
            (r.pcc_matches, r.pcc_total) for r in cell if r.pcc_matches is not None
        ]
        clin_counts = [
            (r.clinician_correct, r.clinician_total)
            for r in cell
            if r.clinician_correct is not None
        ]
        out.append({
            "group": group,
            "method": method,
            "n_rows": len(cell),
            "metrics": metrics,
            "pcc_pooled": stats.pooled_pcc(pcc_counts) if pcc_counts else None,
            "clinician_pcc_pooled": (
                stats.pooled_pcc(clin_counts) if clin_counts else None
            ),
        })
    return out


@dataclass(frozen=True)
class MethodComparison:
    metric: str
    method_a: str
    method_b: str
    n: int
    mean_a: float
    mean_b: float
    delta: float
    ttest: stats.TTestResult

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "method_a": self.method_a,
            "method_b": self.method_b,
            "n": self.n,
            "mean_a": self.mean_a,
            "mean_b": self.mean_b,
            "delta": self.delta,
            "t_stat": self.ttest.t_stat,
            "dof": self.ttest.dof,
            "p_value": self.ttest.p_value,
            "significant_at_05": self.ttest.significant_at_05,
        }


def compare_methods(rows: list[MetricRow], metric: str, method_a: str,
                    method_b: str) -> MethodComparison:
    """Welch t-test between two methods' per-utterance values of one
    metric, over the utterances where both methods have the value.

    Raises InsufficientDataError when fewer than two utterances
    overlap, and ZeroVarianceError when both value lists are constant.
    """
    if metric not in ROW_FIELDS:
        raise ValueError(f"unknown metric {metric!r}")

    def values_of(method: str) -> dict[str, float]:
        return {
            r.utterance_id: getattr(r, metric)
            for r in rows
            if r.method == method and getattr(r, metric) is not None
        }

    values_a, values_b = values_of(method_a), values_of(method_b)
    common = sorted(set(values_a) & set(values_b))
    if len(common) < 2:
        raise InsufficientDataError(
            f"insufficient overlap of utterance ids for {metric!r} between "
            f"{method_a!r} and {method_b!r}: {len(common)} in common"
        )
    sample_a = [values_a[u] for u in common]
    sample_b = [values_b[u] for u in common]
    ttest = stats.welch_t_test(sample_a, sample_b)
    return MethodComparison(
        metric=metric,
        method_a=method_a,
        method_b=method_b,
        n=len(common),
        mean_a=_mean(sample_a),
        mean_b=_mean(sample_b),
        delta=_mean(sample_a) - _mean(sample_b),
        ttest=ttest,
    )


def _build_comparisons(rows: list[MetricRow], cfg: ToolkitConfig) -> list[dict]:
    methods = sorted({r.method for r in rows})
    non_original = [m for m in methods if m != cfg.original_method]
    pairs = [(m, cfg.original_method) for m in non_original
             if cfg.original_method in methods]
    pairs += [
        (a, b)
        for i, a in enumerate(non_original)
        for b in non_original[i + 1:]
    ]
    out = []
    for method_a, method_b in pairs:
        for metric in AGGREGATE_METRICS:
            try:
                out.append(compare_methods(rows, metric, method_a, method_b).to_dict())
            except (InsufficientDataError, ZeroVarianceError) as exc:
                out.append({
                    "metric": metric,
                    "method_a": method_a,
                    "method_b": method_b,
                    "skipped": str(exc),
                })
    return out


def _build_correlations(rows: list[MetricRow], cfg: ToolkitConfig) -> list[dict]:
    """Automatic-vs-clinician correlations.

    The primary series couples each row's consonant edit distance with
    the clinician's error count (total - correct) for the sample the
    distance describes: the original side in reconstructed-reference
    mode, the row's own side in target-reference mode. The secondary
    series correlates the PCC percentages the same way.
    """
    distance_x, distance_y = [], []
    pcc_x, pcc_y = [], []
    for row in rows:
        if cfg.pcc_reference == "reconstructed":
            correct, total = row.clinician_correct_ref, row.clinician_total_ref
        else:
            correct, total = row.clinician_correct, row.clinician_total
        if correct is None or total is None or total == 0:
            continue
        if row.consonant_distance is not None:
            distance_x.append(float(row.consonant_distance))
            distance_y.append(float(total - correct))
        if row.pcc_percent is not None:
            pcc_x.append(row.pcc_percent)
            pcc_y.append(100.0 * correct / total)

    out = []
    for name, x, y in (
        ("consonant_distance_vs_clinician_errors", distance_x, distance_y),
        ("pcc_percent_vs_clinician_pcc", pcc_x, pcc_y),
    ):
        try:
            result = stats.pearson(x, y)
            out.append({"name": name, "rho": result.rho, "n": result.n})
        except (InsufficientDataError, ZeroVarianceError) as exc:
            out.append({"name": name, "skipped": str(exc)})
    return out


# --- report assembly and emission -------------------------------------


@dataclass
class EvaluationReport:
    """The four report sections plus the configuration echo. Every
    aggregate is reproducible from the per-utterance rows, and the
    config echo is sufficient to re-run bit-identically."""

    config: dict
    per_utterance: list[dict]
    aggregates: list[dict]
    method_comparisons: list[dict]
    correlations: list[dict]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "per_utterance": self.per_utterance,
            "aggregates": self.aggregates,
            "method_comparisons": self.method_comparisons,
            "correlations": self.correlations,
        }


def run_evaluation(records: list[UtteranceRecord],
                   cfg: ToolkitConfig = ToolkitConfig(),
                   jobs: int = 1) -> EvaluationReport:
    """Evaluate a validated record list into a full report.

    Utterances may be evaluated concurrently (``jobs`` > 1); results
    are folded in sorted (utterance_id, method) order, so the report is
    byte-identical regardless of parallelism.
    """
    by_utterance: dict[str, list[UtteranceRecord]] = {}
    for record in records:
        by_utterance.setdefault(record.utterance_id, []).append(record)

    tasks = []
    for utterance_id in sorted(by_utterance):
        group = by_utterance[utterance_id]
        original = next(
            (r for r in group if r.method == cfg.original_method), None
        )
        if original is not None:
            tasks.append(functools.partial(evaluate_single, original, cfg))
        for record in sorted(group, key=lambda r: r.method):
            if record.method == cfg.original_method:
                continue
            if original is None:
                tasks.append(functools.partial(
                    evaluate_single, record, cfg,
                    pair_reason=f"no {cfg.original_method!r} record for utterance",
                ))
            else:
                tasks.append(functools.partial(evaluate_pair, original, record, cfg))

    if jobs > 1:
        with futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda task: task(), tasks))
    else:
        rows = [task() for task in tasks]
    rows.sort(key=lambda r: (r.utterance_id, r.method))

    return EvaluationReport(
        config=cfg.to_echo(),
        per_utterance=[r.to_dict() for r in rows],
        aggregates=aggregate(rows, cfg.group_by, cfg.original_method),
        method_comparisons=_build_comparisons(rows, cfg),
        correlations=_build_correlations(rows, cfg),
    )


def _round_floats(value):
    """Recursively shorten floats to FLOAT_DIGITS significant digits
    for stable serialization."""
    if isinstance(value, float):
        return float(f"{value:.{FLOAT_DIGITS}g}")
    if isinstance(value, dict):
        return {k: _round_floats(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_round_floats(v) for v in value]
    return value


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.{FLOAT_DIGITS}g}"
    if isinstance(value, dict):
        return "; ".join(f"{k}={v}" for k, v in sorted(value.items()))
    return str(value)


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c)) for c in columns])
    path.write_text(buffer.getvalue(), encoding="utf-8")


def _flatten_config(config: dict, prefix: str = "") -> list[tuple[str, object]]:
    items: list[tuple[str, object]] = []
    for key, value in config.items():
        if isinstance(value, dict):
            items.extend(_flatten_config(value, f"{prefix}{key}."))
        else:
            items.append((f"{prefix}{key}", value))
    return items


def emit_report(report: EvaluationReport, fmt: str, out_dir: str | Path) -> list[Path]:
    """Write the report under ``out_dir`` and return the paths written.

    ``fmt="json"`` emits one ``report.json`` document; ``fmt="csv"``
    emits one file per section plus ``config.csv``. Floats are
    serialized with 6 significant digits, and re-emitting the same
    report is byte-identical.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        target = out_dir / "report.json"
        payload = json.dumps(_round_floats(report.to_dict()), indent=2,
                             ensure_ascii=False, allow_nan=False) + "\n"
        target.write_text(payload, encoding="utf-8")
        return [target]
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")

    written = []

    def emit_section(name: str, columns: list[str], rows: list[dict]) -> None:
        target = out_dir / f"{name}.csv"
        _write_csv(target, columns, rows)
        written.append(target)

    emit_section("per_utterance", list(ROW_FIELDS), report.per_utterance)

    agg_columns = ["group", "method", "n_rows"]
    for metric in AGGREGATE_METRICS:
        agg_columns += [f"{metric}_mean", f"{metric}_n", f"{metric}_missing"]
    agg_columns += ["pcc_pooled", "clinician_pcc_pooled"]
    agg_rows = []
    for row in report.aggregates:
        flat = {k: row[k] for k in ("group", "method", "n_rows")}
        for metric in AGGREGATE_METRICS:
            cell = row["metrics"][metric]
            flat[f"{metric}_mean"] = cell["mean"]
            flat[f"{metric}_n"] = cell["n"]
            flat[f"{metric}_missing"] = cell["missing"]
        flat["pcc_pooled"] = row["pcc_pooled"]
        flat["clinician_pcc_pooled"] = row["clinician_pcc_pooled"]
        agg_rows.append(flat)
    emit_section("aggregates", agg_columns, agg_rows)

    emit_section(
        "method_comparisons",
        ["metric", "method_a", "method_b", "n", "mean_a", "mean_b", "delta",
         "t_stat", "dof", "p_value", "significant_at_05", "skipped"],
        report.method_comparisons,
    )
    emit_section("correlations", ["name", "rho", "n", "skipped"],
                 report.correlations)

    config_rows = [
        {"key": key, "value": value}
        for key, value in _flatten_config(_round_floats(report.config))
    ]
    emit_section("config", ["key", "value"], config_rows)
    return written
