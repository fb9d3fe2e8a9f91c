"""YIN fundamental-frequency tracking and pitch-comparison metrics.

The tracker follows the classic YIN recipe: per-frame difference
function, cumulative mean normalized difference (CMNDF), absolute
threshold with local-minimum search, and parabolic refinement of the
selected lag. Defaults cover child speech, whose F0 commonly exceeds
the ranges adult-speech trackers assume.
"""
from __future__ import annotations

import math
import statistics
import warnings
from dataclasses import dataclass

import numpy as np

from .audio import AudioClip, FrameSpec, frame_signal
from .errors import InvalidFrequencyError, UnvoicedClipError


class YinFrameLengthWarning(UserWarning):
    """frame_len shorter than two periods of f0_min; estimates for the
    lowest pitches may be unreliable."""


@dataclass(frozen=True)
class YinConfig:
    """YIN parameters. Defaults: 50-600 Hz search range, absolute
    threshold 0.15, 2048-sample frames with 256-sample hop. Frames whose
    RMS falls below ``silence_floor`` are unvoiced regardless of
    periodicity."""

    f0_min: float = 50.0
    f0_max: float = 600.0
    threshold: float = 0.15
    frame_len: int = 2048
    hop: int = 256
    silence_floor: float = 0.01

    def __post_init__(self):
        if not 0 < self.f0_min < self.f0_max:
            raise ValueError(f"need 0 < f0_min < f0_max, got "
                             f"{self.f0_min}/{self.f0_max}")
        if not 0 < self.threshold < 1:
            raise ValueError(f"threshold must be in (0, 1), got {self.threshold}")
        if self.frame_len <= 0:
            raise ValueError("frame_len must be positive")
        if not 0 < self.hop <= self.frame_len:
            raise ValueError("hop must be in (0, frame_len]")
        if self.silence_floor < 0:
            raise ValueError("silence_floor must be non-negative")


@dataclass(frozen=True)
class PitchFrame:
    """One analysis frame: center time, F0 in Hz (None when unvoiced),
    and confidence = 1 - min(CMNDF), clamped to [0, 1]."""

    time_s: float
    f0: float | None
    confidence: float


@dataclass(frozen=True)
class PitchTrack:
    frames: tuple[PitchFrame, ...]

    def voiced_f0(self) -> list[float]:
        return [f.f0 for f in self.frames if f.f0 is not None]

    @property
    def voiced_count(self) -> int:
        return sum(1 for f in self.frames if f.f0 is not None)


@dataclass(frozen=True)
class PitchComparison:
    """Absolute pitch differences between a reference and a
    reconstructed clip, from per-clip aggregated F0."""

    f0_ref_mean: float
    f0_rec_mean: float
    semitone_diff: float
    relative_deviation_pct: float


def _difference_function(frames: np.ndarray, tau_max: int) -> np.ndarray:
    """Exact YIN difference function d(tau) for tau in [0, tau_max],
    over the shrinking window of each frame:

        d(tau) = sum_{j=0}^{W-1-tau} (x[j] - x[j+tau])^2

    Expanded into two energy terms plus a cross term computed with an
    FFT autocorrelation; shape (n_frames, tau_max + 1).
    """
    n_frames, frame_len = frames.shape
    fft_size = 1 << int(frame_len + tau_max).bit_length()
    spectra = np.fft.rfft(frames, fft_size, axis=1)
    acf = np.fft.irfft(spectra * np.conj(spectra), fft_size, axis=1)
    acf = acf[:, : tau_max + 1]

    taus = np.arange(tau_max + 1)
    cumsq = np.cumsum(frames * frames, axis=1)
    total = cumsq[:, -1:]
    head = cumsq[:, frame_len - 1 - taus]            # energy of x[0 : W-tau]
    tail = total - np.where(taus > 0, cumsq[:, taus - 1], 0.0)  # x[tau : W]

    d = head + tail - 2.0 * acf
    np.maximum(d, 0.0, out=d)  # guard FFT rounding
    d[:, 0] = 0.0
    return d


def _cmndf(d: np.ndarray) -> np.ndarray:
    """Cumulative mean normalized difference; d'(0) = 1, and 1 wherever
    the running sum is zero (digital silence)."""
    out = np.ones_like(d)
    cumsum = np.cumsum(d[:, 1:], axis=1)
    taus = np.arange(1, d.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = d[:, 1:] * taus / cumsum
    out[:, 1:] = np.where(cumsum > 0, ratio, 1.0)
    return out


def _parabolic_refine(curve: np.ndarray, idx: int, lo: int, hi: int) -> float:
    """Sub-sample minimum location of ``curve`` around ``idx``, clamped
    to [lo, hi]. Falls back to ``idx`` at range edges."""
    if idx <= lo or idx >= hi:
        return float(idx)
    left, mid, right = curve[idx - 1], curve[idx], curve[idx + 1]
    denom = left - 2.0 * mid + right
    if denom == 0.0:
        return float(idx)
    refined = idx + 0.5 * (left - right) / denom
    return float(min(max(refined, lo), hi))


def yin_f0_track(clip: AudioClip, cfg: YinConfig = YinConfig()) -> PitchTrack:
    """Track F0 per frame with YIN.

    A frame is unvoiced when its RMS is below ``cfg.silence_floor`` or
    when no lag brings the CMNDF under ``cfg.threshold``. Voiced frames
    take the first local CMNDF minimum below the threshold, refined by
    parabolic interpolation and inverted to Hz; unvoiced frames still
    report confidence from the global CMNDF minimum.
    """
    sr = clip.sample_rate
    if cfg.f0_max >= sr / 2:
        raise InvalidFrequencyError(
            f"f0_max {cfg.f0_max} must be below the Nyquist rate {sr / 2}"
        )
    min_frame = 2 * math.ceil(sr / cfg.f0_min)
    if cfg.frame_len < min_frame:
        warnings.warn(
            f"frame_len {cfg.frame_len} < {min_frame} (two periods of "
            f"f0_min at {sr} Hz)",
            YinFrameLengthWarning,
            stacklevel=2,
        )

    tau_min = max(1, math.ceil(sr / cfg.f0_max))
    tau_max = min(int(sr // cfg.f0_min), cfg.frame_len - 2)
    if tau_max <= tau_min:
        raise InvalidFrequencyError(
            f"f0 range {cfg.f0_min}-{cfg.f0_max} Hz leaves no usable lags "
            f"at sample rate {sr} with frame_len {cfg.frame_len}"
        )

    frames = frame_signal(clip, FrameSpec(cfg.frame_len, cfg.hop))
    frames = np.ascontiguousarray(frames, dtype=np.float64)
    rms = np.sqrt(np.mean(frames * frames, axis=1))
    diff = _difference_function(frames, tau_max)
    cmndf = _cmndf(diff)

    out = []
    for k in range(frames.shape[0]):
        time_s = (k * cfg.hop + cfg.frame_len / 2) / sr
        row = cmndf[k]
        below = np.nonzero(row[tau_min : tau_max + 1] < cfg.threshold)[0]
        if below.size:
            tau = tau_min + int(below[0])
            while tau + 1 <= tau_max and row[tau + 1] < row[tau]:
                tau += 1
            voiced = rms[k] >= cfg.silence_floor
        else:
            tau = tau_min + int(np.argmin(row[tau_min : tau_max + 1]))
            voiced = False
        confidence = min(max(1.0 - float(row[tau]), 0.0), 1.0)
        if voiced:
            # Refine on the raw difference function: the cumulative
            # normalization tilts the CMNDF around its dips and would
            # bias the sub-sample estimate.
            tau_refined = _parabolic_refine(diff[k], tau, tau_min, tau_max)
            f0 = min(max(sr / tau_refined, cfg.f0_min), cfg.f0_max)
        else:
            f0 = None
        out.append(PitchFrame(time_s=time_s, f0=f0, confidence=confidence))
    return PitchTrack(frames=tuple(out))


def aggregate_f0(track: PitchTrack, method: str = "mean") -> float:
    """Collapse a track to one F0 value over its voiced frames
    (``mean`` or ``median``).

    Raises UnvoicedClipError when no frame is voiced; callers exclude
    such clips from aggregation with a recorded reason.
    """
    voiced = track.voiced_f0()
    if not voiced:
        raise UnvoicedClipError("no voiced frames in track")
    if method == "mean":
        return statistics.fmean(voiced)
    if method == "median":
        return float(statistics.median(voiced))
    raise ValueError(f"unknown aggregation method {method!r}")


def compare_pitch(f0_ref: float, f0_rec: float) -> PitchComparison:
    """Absolute semitone difference 12*log2(f0_rec/f0_ref) and relative
    deviation 100*|f0_rec - f0_ref|/f0_ref between two F0 values."""
    if f0_ref <= 0 or f0_rec <= 0:
        raise InvalidFrequencyError(
            f"frequencies must be positive, got {f0_ref}/{f0_rec}"
        )
    return PitchComparison(
        f0_ref_mean=f0_ref,
        f0_rec_mean=f0_rec,
        semitone_diff=abs(12.0 * math.log2(f0_rec / f0_ref)),
        relative_deviation_pct=100.0 * abs(f0_rec - f0_ref) / f0_ref,
    )
