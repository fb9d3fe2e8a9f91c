"""Speaker-embedding similarity, automated consonant accuracy (PCC),
Pearson correlation, and Welch's t-test.

The t-test p-value comes from the Student-t CDF evaluated through the
regularized incomplete beta function (continued-fraction expansion), so
the toolkit has no runtime dependency on a statistics library; the test
suite cross-checks it against an independent reference implementation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import align, phon
from .errors import (
    EmbeddingError,
    InsufficientDataError,
    UndefinedPccError,
    ZeroVarianceError,
)

# Dimensionality of the speaker embeddings the manifests are expected
# to reference (a convention, not an enforced limit).
EXPECTED_EMBEDDING_DIM = 256


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-length real vector summarizing voice identity."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise EmbeddingError("embedding must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise EmbeddingError("embedding contains non-finite values")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def load_embedding(path: str | Path, fmt: str = "json",
                   expected_dim: int | None = None) -> EmbeddingVector:
    """Read an embedding from a JSON real array (``fmt="json"``) or a
    raw little-endian float32 file (``fmt="float32"``).

    ``expected_dim``, when given, is validated against the stored
    length (speaker embeddings are conventionally
    ``EXPECTED_EMBEDDING_DIM`` = 256 values)."""
    path = Path(path)
    if fmt == "json":
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise EmbeddingError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, list) or not all(
            isinstance(v, (int, float)) for v in data
        ):
            raise EmbeddingError(f"{path}: expected a JSON array of reals")
        values = np.asarray(data, dtype=np.float64)
    elif fmt == "float32":
        raw = path.read_bytes()
        if len(raw) % 4:
            raise EmbeddingError(
                f"{path}: size {len(raw)} is not a whole number of float32s"
            )
        values = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    else:
        raise ValueError(f"unknown embedding format {fmt!r}")
    if expected_dim is not None and len(values) != expected_dim:
        raise EmbeddingError(
            f"{path}: expected {expected_dim} values, found {len(values)}"
        )
    return EmbeddingVector(values=values)


def cosine_similarity(a, b) -> float:
    """dot(a, b) / (|a|*|b|), clamped to [-1, 1] against rounding.

    Accepts EmbeddingVector or any real sequence. Raises EmbeddingError
    on length mismatch or a zero-norm input.
    """
    va = a.values if isinstance(a, EmbeddingVector) else np.asarray(a, dtype=np.float64)
    vb = b.values if isinstance(b, EmbeddingVector) else np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape or va.ndim != 1:
        raise EmbeddingError(f"length mismatch: {va.shape} vs {vb.shape}")
    if not (np.all(np.isfinite(va)) and np.all(np.isfinite(vb))):
        raise EmbeddingError("embedding contains non-finite values")
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise EmbeddingError("zero-norm embedding")
    sim = float(np.dot(va, vb)) / (norm_a * norm_b)
    return min(max(sim, -1.0), 1.0)


@dataclass(frozen=True)
class PccResult:
    """Automated percentage of correct consonants and the consonant
    edit distance it derives from."""

    matches: int
    total_ref_consonants: int
    pcc_percent: float
    consonant_distance: int


def consonant_accuracy(ref_ipa: phon.IpaSequence, produced_ipa: phon.IpaSequence,
                       strict: bool = True) -> PccResult:
    """Align the consonant subsequences of two IPA token sequences and
    report match count, PCC percent, and edit distance.

    ``strict`` compares base plus diacritics exactly (distortions count
    as errors); otherwise only the base characters must agree.

    Raises UndefinedPccError when the reference has no consonants; the
    caller flags and excludes the utterance with a recorded reason.
    """
    ref_cons = phon.extract_consonants(ref_ipa).tokens
    prod_cons = phon.extract_consonants(produced_ipa).tokens
    total = len(ref_cons)
    if total == 0:
        raise UndefinedPccError("reference IPA contains no consonants")
    if strict:
        eq = lambda a, b: a.text == b.text
    else:
        eq = lambda a, b: a.base == b.base
    script = align.levenshtein(ref_cons, prod_cons, eq=eq)
    return PccResult(
        matches=script.matches,
        total_ref_consonants=total,
        pcc_percent=100.0 * script.matches / total,
        consonant_distance=script.distance,
    )


def pcc_from_counts(correct: int, total: int) -> float:
    """PCC percent from clinician-style counts: 100 * correct / total."""
    if total <= 0:
        raise UndefinedPccError(f"total must be positive, got {total}")
    if not 0 <= correct <= total:
        raise ValueError(f"need 0 <= correct <= total, got {correct}/{total}")
    return 100.0 * correct / total


def pooled_pcc(counts: list[tuple[int, int]]) -> float:
    """Corpus-level PCC: 100 * sum(correct) / sum(total)."""
    if not counts:
        raise UndefinedPccError("no counts to pool")
    total = sum(t for _, t in counts)
    if total <= 0:
        raise UndefinedPccError("pooled total is zero")
    return 100.0 * sum(c for c, _ in counts) / total


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    n: int


def pearson(x, y) -> CorrelationResult:
    """Sample Pearson correlation coefficient.

    r = sum((x-mx)(y-my)) / sqrt(sum((x-mx)^2) * sum((y-my)^2))
    """
    x, y = list(map(float, x)), list(map(float, y))
    if len(x) != len(y):
        raise InsufficientDataError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise InsufficientDataError(f"need at least 2 points, got {n}")
    mx, my = math.fsum(x) / n, math.fsum(y) / n
    sxx = math.fsum((xi - mx) ** 2 for xi in x)
    syy = math.fsum((yi - my) ** 2 for yi in y)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVarianceError("zero variance in an input sequence")
    sxy = math.fsum((xi - mx) * (yi - my) for xi, yi in zip(x, y))
    return CorrelationResult(rho=sxy / math.sqrt(sxx * syy), n=n)


@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    dof: float
    p_value: float
    significant_at_05: bool


def welch_t_test(sample_a, sample_b) -> TTestResult:
    """Two-sided Welch's t-test (unequal variances).

    t = (mean_a - mean_b) / sqrt(var_a/n_a + var_b/n_b), with
    Welch-Satterthwaite degrees of freedom and the p-value from the
    Student-t CDF.
    """
    a, b = list(map(float, sample_a)), list(map(float, sample_b))
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise InsufficientDataError(
            f"each sample needs at least 2 values, got {na}/{nb}"
        )
    ma, mb = math.fsum(a) / na, math.fsum(b) / nb
    va = math.fsum((x - ma) ** 2 for x in a) / (na - 1)
    vb = math.fsum((x - mb) ** 2 for x in b) / (nb - 1)
    if va == 0.0 and vb == 0.0:
        raise ZeroVarianceError("zero variance in both samples")
    sa, sb = va / na, vb / nb
    t = (ma - mb) / math.sqrt(sa + sb)
    dof = (sa + sb) ** 2 / (
        (sa**2 / (na - 1) if sa else 0.0) + (sb**2 / (nb - 1) if sb else 0.0)
    )
    p = two_sided_t_p_value(t, dof)
    return TTestResult(t_stat=t, dof=dof, p_value=p,
                       significant_at_05=p < 0.05)


def two_sided_t_p_value(t: float, dof: float) -> float:
    """P(|T| >= |t|) for T ~ Student-t(dof), via the identity
    p = I_x(dof/2, 1/2) with x = dof / (dof + t^2)."""
    if dof <= 0:
        raise ValueError(f"dof must be positive, got {dof}")
    if t == 0.0:
        return 1.0
    x = dof / (dof + t * t)
    return regularized_incomplete_beta(dof / 2.0, 0.5, x)


def student_t_cdf(t: float, dof: float) -> float:
    """CDF of the Student-t distribution with ``dof`` degrees of
    freedom. Approaches the normal CDF as dof grows."""
    half_p = 0.5 * two_sided_t_p_value(t, dof)
    return 1.0 - half_p if t >= 0 else half_p


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), computed with the standard continued-fraction
    expansion (Lentz's method), switching tails at the symmetry point
    for convergence."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    max_iter = 300
    eps = 1e-16
    tiny = 1e-300

    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        # even step
        coeff = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + coeff * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coeff / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        # odd step
        coeff = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + coeff * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coeff / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(
        f"incomplete beta did not converge for a={a}, b={b}, x={x}"
    )
