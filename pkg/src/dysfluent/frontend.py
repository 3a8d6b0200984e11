"""Multi-scale acoustic frontend.

All feature extractors share one frame grid: frame ``i`` covers samples
``[i * hop, i * hop + n_fft)`` and the frame rate is ``sample_rate / hop``.
Channels extracted separately can therefore be concatenated frame-for-frame.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    ChannelMismatch,
    CorruptFile,
    FrameCountMismatch,
    MissingChannels,
    TooShort,
    UnsupportedFormat,
)

LOG_FLOOR = float(np.log(1e-10))

# Normalized autocorrelation peak below this is treated as unvoiced.
VOICING_THRESHOLD = 0.3

# RMS floor keeping the dB contour finite on silence: 20*log10(1e-5) = -100.
_RMS_FLOOR = 1e-5


@dataclass
class FrontendConfig:
    n_fft: int = 2048
    hop: int = 256
    f_min: float = 75.0
    f_max: float = 500.0
    win_size: int = 1024
    n_mels: int = 80
    n_coef: int = 13
    log_floor: float = LOG_FLOOR


@dataclass
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class FeatureMatrix:
    """A (frames, channels) matrix plus the naming needed to interpret it."""

    data: np.ndarray
    channel_labels: list[str]
    frame_rate: float

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    def channel(self, label: str) -> np.ndarray:
        try:
            return self.data[:, self.channel_labels.index(label)]
        except ValueError:
            raise MissingChannels(f"no channel {label!r}") from None

    def channels(self, prefix: str) -> np.ndarray:
        cols = [i for i, c in enumerate(self.channel_labels) if c.startswith(prefix)]
        if not cols:
            raise MissingChannels(f"no channels with prefix {prefix!r}")
        return self.data[:, cols]


def load_audio(path: str) -> AudioBuffer:
    """Read a RIFF/WAVE file holding mono 16-bit PCM.

    Samples are scaled to [-1, 1) by /32768.  Anything the pipeline does
    not handle (other containers, codecs, channel counts, rates below
    8 kHz) raises UnsupportedFormat; structurally broken WAV files raise
    CorruptFile.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedFormat("not a RIFF/WAVE file")
    pos = 12
    fmt = None
    pcm = None
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_len,) = struct.unpack("<I", data[pos + 4 : pos + 8])
        body = data[pos + 8 : pos + 8 + chunk_len]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise CorruptFile("fmt chunk too short")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif chunk_id == b"data":
            if len(body) < chunk_len:
                raise CorruptFile("data chunk truncated")
            pcm = body
        pos += 8 + chunk_len + (chunk_len & 1)
    if fmt is None or pcm is None:
        raise CorruptFile("missing fmt or data chunk")
    audio_format, channels, rate, _byte_rate, _align, bits = fmt
    if audio_format != 1 or bits != 16:
        raise UnsupportedFormat(f"only PCM16 is supported, got format={audio_format} bits={bits}")
    if channels != 1:
        raise UnsupportedFormat(f"only mono is supported, got {channels} channels")
    if rate < 8000:
        raise UnsupportedFormat(f"sample rate {rate} below 8 kHz")
    if len(pcm) % 2:
        raise CorruptFile("odd PCM byte count")
    samples = np.frombuffer(pcm, dtype="<i2").astype(np.float64) / 32768.0
    return AudioBuffer(samples, rate)


def save_audio(path: str, samples: np.ndarray, sample_rate: int) -> None:
    """Write mono PCM16, the format load_audio reads back."""
    pcm = np.clip(np.round(samples * 32768.0), -32768, 32767).astype("<i2").tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(pcm)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, sample_rate, sample_rate * 2, 2, 16)
    header += b"data" + struct.pack("<I", len(pcm))
    with open(path, "wb") as fh:
        fh.write(header + pcm)


def frame_count(n_samples: int, config: FrontendConfig) -> int:
    if n_samples < config.n_fft:
        raise TooShort(f"{n_samples} samples, need at least {config.n_fft}")
    return (n_samples - config.n_fft) // config.hop + 1


def _frames(samples: np.ndarray, config: FrontendConfig) -> np.ndarray:
    n = frame_count(len(samples), config)
    idx = np.arange(config.n_fft)[None, :] + config.hop * np.arange(n)[:, None]
    return samples[idx]


def mel_filterbank(sample_rate: int, n_fft: int, n_mels: int) -> np.ndarray:
    """Peak-one triangular filters on a mel grid spanning 0..Nyquist."""
    hz_to_mel = lambda f: 2595.0 * np.log10(1.0 + f / 700.0)
    mel_to_hz = lambda m: 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    points = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    bins = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    bank = np.zeros((n_mels, len(bins)))
    for m in range(n_mels):
        lo, mid, hi = points[m], points[m + 1], points[m + 2]
        up = (bins - lo) / (mid - lo)
        down = (hi - bins) / (hi - mid)
        bank[m] = np.maximum(0.0, np.minimum(up, down))
    return bank


def mel_spectrogram(audio: AudioBuffer, config: FrontendConfig) -> FeatureMatrix:
    frames = _frames(audio.samples, config)
    window = np.hanning(config.n_fft)
    power = np.abs(np.fft.rfft(frames * window, axis=1)) ** 2
    mel = power @ mel_filterbank(audio.sample_rate, config.n_fft, config.n_mels).T
    data = np.maximum(np.log(np.maximum(mel, 1e-300)), config.log_floor)
    labels = [f"mel_{i}" for i in range(config.n_mels)]
    return FeatureMatrix(data, labels, audio.sample_rate / config.hop)


def pitch_track(audio: AudioBuffer, config: FrontendConfig) -> FeatureMatrix:
    """Autocorrelation pitch with parabolic lag refinement.

    Frames whose normalized peak falls under VOICING_THRESHOLD get pitch 0
    and voiced_flag 0.  The frame mean is removed first so DC offsets do
    not register as voicing.
    """
    frames = _frames(audio.samples, config)
    sr = audio.sample_rate
    lag_min = int(np.ceil(sr / config.f_max))
    lag_max = int(np.floor(sr / config.f_min))
    data = np.zeros((frames.shape[0], 2))
    for i, frame in enumerate(frames):
        x = frame - frame.mean()
        spectrum = np.fft.rfft(x, 2 * config.n_fft)
        r = np.fft.irfft(np.abs(spectrum) ** 2)[: lag_max + 2]
        # Below the silence floor the residue is cancellation noise from the
        # mean removal, which would otherwise self-correlate perfectly.
        if r[0] <= x.size * _RMS_FLOOR**2:
            continue
        r = r / r[0]
        lag = lag_min + int(np.argmax(r[lag_min : lag_max + 1]))
        if r[lag] < VOICING_THRESHOLD:
            continue
        denom = r[lag - 1] - 2.0 * r[lag] + r[lag + 1]
        shift = 0.0 if denom >= 0.0 else 0.5 * (r[lag - 1] - r[lag + 1]) / denom
        pitch = sr / (lag + float(np.clip(shift, -0.5, 0.5)))
        data[i, 0] = float(np.clip(pitch, config.f_min, config.f_max))
        data[i, 1] = 1.0
    return FeatureMatrix(data, ["pitch_hz", "voiced_flag"], sr / config.hop)


def energy_contour(audio: AudioBuffer, config: FrontendConfig) -> FeatureMatrix:
    """RMS level in dBFS over a win_size slice centered in each frame."""
    if len(audio.samples) < config.win_size:
        raise TooShort(f"{len(audio.samples)} samples, need at least {config.win_size}")
    n = frame_count(len(audio.samples), config)
    centers = config.hop * np.arange(n) + config.n_fft // 2
    data = np.empty((n, 1))
    half = config.win_size // 2
    for i, c in enumerate(centers):
        lo = max(0, c - half)
        hi = min(len(audio.samples), c + half)
        rms = np.sqrt(np.mean(audio.samples[lo:hi] ** 2)) if hi > lo else 0.0
        data[i, 0] = 20.0 * np.log10(max(rms, _RMS_FLOOR))
    return FeatureMatrix(data, ["energy_db"], audio.sample_rate / config.hop)


def mfcc(mel: FeatureMatrix, config: FrontendConfig) -> FeatureMatrix:
    """Orthonormal DCT-II over each log-mel frame, first n_coef kept."""
    from scipy.fftpack import dct

    if mel.data.shape[1] != config.n_mels:
        raise ChannelMismatch(f"expected {config.n_mels} mel channels, got {mel.data.shape[1]}")
    data = dct(mel.data, type=2, norm="ortho", axis=1)[:, : config.n_coef]
    labels = [f"mfcc_{i}" for i in range(config.n_coef)]
    return FeatureMatrix(data, labels, mel.frame_rate)


def combine_features(parts: list[FeatureMatrix]) -> FeatureMatrix:
    if not parts:
        raise FrameCountMismatch("nothing to combine")
    counts = {p.n_frames for p in parts}
    if len(counts) > 1:
        raise FrameCountMismatch(f"frame counts differ: {sorted(counts)}")
    rates = {p.frame_rate for p in parts}
    if len(rates) > 1:
        raise FrameCountMismatch(f"frame rates differ: {sorted(rates)}")
    data = np.concatenate([p.data for p in parts], axis=1)
    labels = [label for p in parts for label in p.channel_labels]
    return FeatureMatrix(data, labels, parts[0].frame_rate)


def extract_features(audio: AudioBuffer, config: FrontendConfig | None = None) -> FeatureMatrix:
    """Full channel stack in canonical order: mels, pitch, energy, MFCCs."""
    config = config or FrontendConfig()
    mels = mel_spectrogram(audio, config)
    return combine_features(
        [mels, pitch_track(audio, config), energy_contour(audio, config), mfcc(mels, config)]
    )
