"""Acceptance suite: one test per release criterion, each printing a
pass line with its measured numbers (run with ``pytest -s`` to see them
inline). Tolerances are fixed here, not calibrated."""
import json
import math
import time

import numpy as np
import pytest
import scipy.stats

from helpers import brute_levenshtein, make_sine, normal_cdf
from speecheval.align import cer, levenshtein, wer
from speecheval.audio import AudioClip
from speecheval.cli import main as cli_main
from speecheval.harness import ToolkitConfig, emit_report, load_manifest, run_evaluation
from speecheval.phon import parse_ipa
from speecheval.pitch import aggregate_f0, compare_pitch, yin_f0_track
from speecheval.stats import consonant_accuracy, pearson, student_t_cdf, welch_t_test


def report_pass(line: str) -> None:
    print(f"\n[PASS] {line}")


def test_criterion_yin_accuracy():
    """Synthetic sines 100-500 Hz recovered within 1%; silence fully
    unvoiced; whole sweep under 10 s."""
    start = time.perf_counter()
    worst = 0.0
    for hz in range(100, 501, 50):
        clip = AudioClip(make_sine(float(hz), seconds=1.0), 22050)
        track = yin_f0_track(clip)
        mean_f0 = aggregate_f0(track)
        error = abs(mean_f0 - hz) / hz
        worst = max(worst, error)
        assert error < 0.01, f"{hz} Hz estimated as {mean_f0}"
    silence = yin_f0_track(AudioClip(np.zeros(22050), 22050))
    assert silence.voiced_count == 0
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    report_pass(f"YIN accuracy: 9 sines within 1% (worst {worst:.3%}), "
                f"silence unvoiced, {elapsed:.2f}s < 10s")


def test_criterion_semitone_formula():
    """220->440 Hz is exactly one octave; semitone and percent metrics
    are scale-invariant over 1,000 random draws within 1e-9."""
    octave = compare_pitch(220.0, 440.0)
    assert octave.semitone_diff == 12.0
    assert octave.relative_deviation_pct == 100.0
    rng = np.random.default_rng(12345)
    worst = 0.0
    for _ in range(1000):
        ref = rng.uniform(60.0, 800.0)
        rec = rng.uniform(60.0, 800.0)
        k = math.exp(rng.uniform(math.log(1e-2), math.log(1e2)))
        base = compare_pitch(ref, rec)
        scaled = compare_pitch(k * ref, k * rec)
        worst = max(worst,
                    abs(base.semitone_diff - scaled.semitone_diff),
                    abs(base.relative_deviation_pct
                        - scaled.relative_deviation_pct))
    assert worst < 1e-9
    report_pass(f"semitone formula: octave exact, scale invariance over "
                f"1000 draws (worst drift {worst:.1e} < 1e-9)")


def test_criterion_levenshtein_oracle():
    """500 random pairs match an independent brute-force oracle
    exactly; metric axioms hold; under 5 s."""
    start = time.perf_counter()
    rng = np.random.default_rng(99)
    alphabet = "abcde"
    seqs = []
    for _ in range(500):
        ref = "".join(rng.choice(list(alphabet), size=rng.integers(0, 11)))
        hyp = "".join(rng.choice(list(alphabet), size=rng.integers(0, 11)))
        seqs.append((ref, hyp))
    for ref, hyp in seqs:
        ours = levenshtein(ref, hyp)
        assert ours.distance == brute_levenshtein(ref, hyp)
        assert ours.distance == levenshtein(hyp, ref).distance  # symmetry
        assert (ours.distance == 0) == (ref == hyp)
        assert ours.distance <= max(len(ref), len(hyp))
        assert ours.apply(ref) == list(hyp)
    for (a, b), (c, _) in zip(seqs[:150], seqs[150:300]):  # triangle
        assert (levenshtein(a, c).distance
                <= levenshtein(a, b).distance + levenshtein(b, c).distance)
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    report_pass(f"levenshtein vs brute-force oracle: 500 pairs exact, "
                f"axioms hold, {elapsed:.2f}s < 5s")


def test_criterion_wer_cer():
    """Hand-derived error-rate fixtures are matched exactly; identical
    normalized texts give exactly zero."""
    assert levenshtein("kitten", "sitting").distance == 3
    rate = wer("the cat sat on the mat", "the cat sat mat")
    assert (rate.numerator, rate.denominator) == (2, 6)
    rate = cer("speech", "peach")
    assert (rate.numerator, rate.denominator) == (2, 6)
    rate = cer("abc", "abd")
    assert (rate.numerator, rate.denominator) == (1, 3)
    assert wer("The cat sat.", "the cat sat").value == 0.0
    assert cer("The cat sat.", "the cat sat").value == 0.0
    assert wer("a b c", "a b c").value == 0.0
    report_pass("WER/CER: hand-derived fixtures exact, identical texts -> 0")


# (reference IPA, produced IPA, strict?, matches, total, distance),
# alignments traced by hand under the documented backtrace priority
PCC_FIXTURES = [
    ("kæt", "kæt", True, 2, 2, 0),
    ("kæt", "tæt", True, 1, 2, 1),
    ("st͡ʃɹit", "sɹit", True, 3, 4, 1),
    ("bɔl", "bɔ", True, 1, 2, 1),
    ("dɒɡ", "ɡɒɡ", True, 1, 2, 1),
    ("spun", "pun", True, 2, 3, 1),
    ("tʰɪn", "tɪn", True, 1, 2, 1),
    ("tʰɪn", "tɪn", False, 2, 2, 0),
    ("wɪŋ", "wɪn", True, 1, 2, 1),
    ("fɹɒθ", "fɹɒt", True, 2, 3, 1),
]


def test_criterion_pcc_pipeline():
    """Ten hand-authored IPA pairs yield hand-computed matches/totals
    exactly; pooled PCC equals sum(matches)/sum(totals) to 1e-12."""
    total_matches = total_ref = 0
    for ref, produced, strict, matches, total, distance in PCC_FIXTURES:
        result = consonant_accuracy(parse_ipa(ref), parse_ipa(produced),
                                    strict=strict)
        assert result.matches == matches, (ref, produced)
        assert result.total_ref_consonants == total, (ref, produced)
        assert result.consonant_distance == distance, (ref, produced)
        assert result.pcc_percent == pytest.approx(100.0 * matches / total,
                                                   abs=1e-12)
        total_matches += result.matches
        total_ref += result.total_ref_consonants
    pooled = 100.0 * total_matches / total_ref
    per_pair_mean = sum(100.0 * m / t for _, _, _, m, t, _ in PCC_FIXTURES) / 10
    assert pooled == pytest.approx(100.0 * 16 / 24, abs=1e-12)
    assert pooled != per_pair_mean  # pooling weights by consonant count
    report_pass(f"PCC pipeline: 10 hand-authored pairs exact, pooled "
                f"{pooled:.4f}% == 100*16/24 to 1e-12")


def test_criterion_pearson():
    """Closed-form correlations exact to 1e-12; affine invariance over
    1,000 random draws within 1e-9."""
    assert pearson([1, 2, 3], [2, 4, 6]).rho == pytest.approx(1.0, abs=1e-12)
    assert pearson([1, 2, 3], [3, 2, 1]).rho == pytest.approx(-1.0, abs=1e-12)
    assert pearson([1, 2, 3], [1, 3, 2]).rho == pytest.approx(0.5, abs=1e-12)
    rng = np.random.default_rng(4242)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(3, 12))
        x = rng.normal(0.0, 3.0, size=n)
        y = rng.normal(0.0, 3.0, size=n)
        if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
            continue
        alpha = math.exp(rng.uniform(-3, 3))
        beta = rng.uniform(-50, 50)
        base = pearson(x, y).rho
        worst = max(
            worst,
            abs(pearson(alpha * x + beta, y).rho - base),
            abs(pearson(-alpha * x + beta, y).rho + base),
        )
    assert worst < 1e-9
    report_pass(f"pearson: closed forms exact to 1e-12, affine invariance "
                f"over 1000 draws (worst drift {worst:.1e} < 1e-9)")


def test_criterion_welch():
    """Twenty sample pairs match the reference implementation within
    1e-4; the t-CDF respects the normal limit at dof 1000."""
    rng = np.random.default_rng(777)
    worst_p = 0.0
    for _ in range(20):
        n_a, n_b = rng.integers(3, 40, size=2)
        a = rng.normal(rng.uniform(-3, 3), rng.uniform(0.3, 4.0), size=n_a)
        b = rng.normal(rng.uniform(-3, 3), rng.uniform(0.3, 4.0), size=n_b)
        ours = welch_t_test(a, b)
        reference = scipy.stats.ttest_ind(a, b, equal_var=False)
        worst_p = max(worst_p, abs(ours.p_value - reference.pvalue))
        assert ours.p_value == pytest.approx(reference.pvalue, abs=1e-4)
        assert ours.t_stat == pytest.approx(reference.statistic, abs=1e-9)
    # Normal-limit check at dof 1000. The Student-t(1000) CDF genuinely
    # differs from the normal CDF by up to 1.58e-4 mid-range (so does
    # the reference CDF); that known first-order gap,
    # phi(t)*(t^3+t)/(4*dof), is allowed on top of the 1e-4 budget and
    # vanishes at t = 0 and in the tails.
    dof = 1000
    worst_impl = 0.0
    for t in np.linspace(-5.0, 5.0, 101):
        t = float(t)
        limit_gap = (math.exp(-t * t / 2) / math.sqrt(2 * math.pi)
                     * (t**3 + t) / (4 * dof))
        gap = abs(student_t_cdf(t, dof) - normal_cdf(t))
        assert gap <= 1e-4 + abs(limit_gap)
        worst_impl = max(worst_impl, gap - abs(limit_gap))
    report_pass(f"welch t-test: 20 pairs within 1e-4 of reference (worst "
                f"{worst_p:.1e}); t-CDF at dof 1000 within 1e-4 of the "
                f"normal limit (residual {worst_impl:.1e})")


def test_criterion_end_to_end_determinism(tmp_path, fixture_manifest,
                                          golden_report):
    """The bundled 12-record manifest reproduces the golden report
    byte-identically across runs and --jobs settings; its correlation
    matches an independent hand calculation within 1e-9; under 30 s."""
    start = time.perf_counter()
    records = load_manifest(fixture_manifest)
    assert len(records) == 12
    assert len({r.method for r in records}) == 3
    assert len({r.utterance_id for r in records}) == 4

    cfg = ToolkitConfig(group_by="group")
    golden_bytes = golden_report.read_bytes()
    for jobs, name in ((1, "serial"), (3, "jobs3")):
        out = emit_report(run_evaluation(records, cfg, jobs=jobs), "json",
                          tmp_path / name)[0]
        assert out.read_bytes() == golden_bytes
    code = cli_main(["evaluate", "--manifest", str(fixture_manifest),
                     "--out", str(tmp_path / "cli"), "--group-by", "group",
                     "--jobs", "2"])
    assert code == 0
    assert (tmp_path / "cli" / "report.json").read_bytes() == golden_bytes

    # correlation vs an independent recomputation from the report rows
    doc = json.loads(golden_bytes)
    xs, ys = [], []
    for row in doc["per_utterance"]:
        if row["consonant_distance"] is None or row["clinician_total_ref"] is None:
            continue
        xs.append(float(row["consonant_distance"]))
        ys.append(float(row["clinician_total_ref"] - row["clinician_correct_ref"]))
    by_hand = float(np.corrcoef(xs, ys)[0, 1])
    reported = [c for c in doc["correlations"]
                if c["name"] == "consonant_distance_vs_clinician_errors"][0]
    assert reported["n"] == len(xs) == 8
    assert abs(reported["rho"] - by_hand) < 1e-9
    assert abs(reported["rho"] - 0.5) < 1e-9  # derived by hand from the fixture

    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    report_pass(f"end-to-end determinism: golden bytes stable across runs, "
                f"--jobs 1/2/3, rho == 0.5 hand value, {elapsed:.2f}s < 30s")


def test_criterion_severity_table_structure(fixture_manifest):
    """Grouping by severity yields the full metric x severity grid with
    method columns, self-comparison cells blank for the original."""
    records = load_manifest(fixture_manifest)
    report = run_evaluation(records, ToolkitConfig(group_by="group"))
    table_metrics = ("cer", "wer", "confidence", "similarity", "f0_diff_pct")
    severities = ("mild", "moderate", "severe")
    methods = ("original", "tts_adapted", "tts_oneshot")

    cells = {(c["group"], c["method"]): c for c in report.aggregates}
    assert set(cells) == {(s, m) for s in severities for m in methods}
    for severity in severities:
        for method in methods:
            metrics = cells[(severity, method)]["metrics"]
            for metric in table_metrics:
                assert metric in metrics
                if method == "original" and metric in ("similarity",
                                                       "f0_diff_pct"):
                    # the "---" cells: self-comparison omitted
                    assert metrics[metric]["mean"] is None
                    assert metrics[metric]["n"] == 0
                elif not (severity == "severe" and method == "tts_oneshot"
                          and metric == "similarity"):
                    # (severe, tts_oneshot) similarity is the fixture's
                    # deliberate missing-embedding hole
                    assert metrics[metric]["mean"] is not None
    # method columns ordered original-first within each severity row
    for severity in severities:
        ordered = [c["method"] for c in report.aggregates
                   if c["group"] == severity]
        assert ordered == list(methods)
    report_pass("severity table: metric x severity grid complete, original "
                "column blanks self-comparison cells")
