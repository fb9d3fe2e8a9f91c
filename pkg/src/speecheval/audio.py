"""WAV decoding and overlapping frame extraction.

Supports RIFF/WAVE containers with PCM 16-bit or IEEE float 32-bit
payloads, mono or multi-channel. Multi-channel input is downmixed to
mono by arithmetic mean. No resampling is performed; downstream pitch
analysis is parameterized by the native sample rate.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ClipTooShortError,
    EmptyWavError,
    TruncatedWavError,
    UnsupportedWavError,
)

_FORMAT_PCM = 1
_FORMAT_IEEE_FLOAT = 3

# 16-bit quantization step; also the int -> float scaling divisor.
PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class AudioClip:
    """Mono sample buffer in [-1.0, 1.0] with its sample rate."""

    samples: np.ndarray
    sample_rate: int
    source_path: str = ""

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional (mono)")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise ValueError("samples exceed [-1.0, 1.0]")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FrameSpec:
    """Analysis framing: frame length and hop, both in samples."""

    frame_len: int
    hop: int

    def __post_init__(self):
        if self.frame_len <= 0:
            raise ValueError(f"frame_len must be positive, got {self.frame_len}")
        if not 0 < self.hop <= self.frame_len:
            raise ValueError(f"hop must be in (0, frame_len], got {self.hop}")


def _parse_riff_chunks(data: bytes) -> dict[bytes, tuple[int, int]]:
    """Map chunk id -> (payload offset, payload size) for the top-level
    chunks of a RIFF/WAVE container. First occurrence wins."""
    if len(data) < 12:
        raise TruncatedWavError("file too short for a RIFF header")
    if data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedWavError("not a RIFF/WAVE container")
    chunks: dict[bytes, tuple[int, int]] = {}
    offset = 12
    while offset + 8 <= len(data):
        chunk_id, size = struct.unpack_from("<4sI", data, offset)
        payload = offset + 8
        if payload + size > len(data):
            raise TruncatedWavError(
                f"chunk {chunk_id!r} declares {size} bytes but only "
                f"{len(data) - payload} remain"
            )
        chunks.setdefault(chunk_id, (payload, size))
        offset = payload + size + (size & 1)  # chunks are word-aligned
    return chunks


def load_wav(path: str | Path) -> AudioClip:
    """Decode a WAV file into a mono ``AudioClip``.

    Integer samples are scaled by 1/32768; multi-channel audio is
    averaged across channels. Float payloads are clipped to [-1, 1].

    Raises:
        FileNotFoundError: missing file.
        UnsupportedWavError: codec other than PCM16/float32, or
            malformed header fields.
        TruncatedWavError: header declares more bytes than present.
        EmptyWavError: zero-length payload.
    """
    path = Path(path)
    data = path.read_bytes()  # FileNotFoundError propagates

    chunks = _parse_riff_chunks(data)
    if b"fmt " not in chunks:
        raise TruncatedWavError("missing fmt chunk")
    if b"data" not in chunks:
        raise TruncatedWavError("missing data chunk")

    fmt_off, fmt_size = chunks[b"fmt "]
    if fmt_size < 16:
        raise TruncatedWavError(f"fmt chunk too short ({fmt_size} bytes)")
    audio_format, n_channels, sample_rate, _, _, bits = struct.unpack_from(
        "<HHIIHH", data, fmt_off
    )
    if n_channels < 1:
        raise UnsupportedWavError("zero channels declared")
    if sample_rate <= 0:
        raise UnsupportedWavError(f"invalid sample rate {sample_rate}")
    if audio_format == _FORMAT_PCM:
        if bits != 16:
            raise UnsupportedWavError(f"unsupported PCM bit depth {bits}")
        dtype = np.dtype("<i2")
    elif audio_format == _FORMAT_IEEE_FLOAT:
        if bits != 32:
            raise UnsupportedWavError(f"unsupported float bit depth {bits}")
        dtype = np.dtype("<f4")
    else:
        raise UnsupportedWavError(f"unsupported codec (format tag {audio_format})")

    data_off, data_size = chunks[b"data"]
    if data_size == 0:
        raise EmptyWavError(f"{path}: zero-length data payload")
    frame_bytes = dtype.itemsize * n_channels
    if data_size % frame_bytes:
        raise TruncatedWavError(
            f"data size {data_size} is not a whole number of sample frames"
        )

    raw = np.frombuffer(data, dtype=dtype, count=data_size // dtype.itemsize,
                        offset=data_off)
    samples = raw.reshape(-1, n_channels).mean(axis=1, dtype=np.float64)
    if audio_format == _FORMAT_PCM:
        samples /= PCM16_SCALE
    else:
        if not np.all(np.isfinite(samples)):
            raise UnsupportedWavError(f"{path}: non-finite sample values")
        np.clip(samples, -1.0, 1.0, out=samples)
    return AudioClip(samples=samples, sample_rate=sample_rate,
                     source_path=str(path))


def save_wav(path: str | Path, samples: np.ndarray, sample_rate: int,
             encoding: str = "pcm16") -> None:
    """Write samples (shape ``(n,)`` mono or ``(n, channels)``) as a WAV
    file. ``encoding`` is ``"pcm16"`` or ``"float32"``.

    Exists for fixture generation and round-trip testing; reconstruction
    itself is out of scope for the toolkit.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.ndim != 2:
        raise ValueError("samples must have shape (n,) or (n, channels)")
    n_channels = samples.shape[1]

    if encoding == "pcm16":
        fmt, bits = _FORMAT_PCM, 16
        quantized = np.round(samples * PCM16_SCALE)
        payload = np.clip(quantized, -32768, 32767).astype("<i2").tobytes()
    elif encoding == "float32":
        fmt, bits = _FORMAT_IEEE_FLOAT, 32
        payload = samples.astype("<f4").tobytes()
    else:
        raise ValueError(f"unknown encoding {encoding!r}")

    block_align = n_channels * bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, fmt, n_channels, sample_rate,
        sample_rate * block_align, block_align, bits,
        b"data", len(payload),
    )
    Path(path).write_bytes(header + payload)


def frame_signal(clip: AudioClip, spec: FrameSpec) -> np.ndarray:
    """Slice a clip into overlapping frames.

    Frame ``k`` covers samples ``[k*hop, k*hop + frame_len)``; trailing
    samples that cannot fill a frame are dropped. Returns a read-only
    array of shape ``(n_frames, frame_len)``.
    """
    n = len(clip.samples)
    if n < spec.frame_len:
        raise ClipTooShortError(
            f"clip has {n} samples, need at least {spec.frame_len}"
        )
    windows = np.lib.stride_tricks.sliding_window_view(clip.samples,
                                                       spec.frame_len)
    return windows[:: spec.hop]
