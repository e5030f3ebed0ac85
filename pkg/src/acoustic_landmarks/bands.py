"""Six-band short-time energies and their two-pass smoothed derivatives."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .audio_io import AudioBuffer

# Hz; bands 2 and 3 overlap (0.8-1.5 / 1.2-2.0 kHz) and are kept that way.
BAND_EDGES: tuple[tuple[float, float], ...] = (
    (0.0, 400.0),
    (800.0, 1500.0),
    (1200.0, 2000.0),
    (2000.0, 3500.0),
    (3500.0, 5000.0),
    (5000.0, 8000.0),
)
N_BANDS = len(BAND_EDGES)

SILENCE_FLOOR = 1e-10


class AudioTooShort(ValueError):
    pass


class Pass(str, Enum):
    COARSE = "coarse"
    FINE = "fine"


def odd(n: int) -> int:
    n = max(1, int(n))
    return n if n % 2 else n + 1


def to_db(power) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(power, SILENCE_FLOOR))


@dataclass(frozen=True)
class FrameConfig:
    frame_len: int = 256  # 16 ms at 16 kHz
    hop: int = 16  # 1 ms at 16 kHz
    window: str = "hann"

    def __post_init__(self):
        if not 0 < self.hop <= self.frame_len:
            raise ValueError(f"need 0 < hop <= frame_len, got hop={self.hop} frame_len={self.frame_len}")
        if self.window not in ("hann", "rect"):
            raise ValueError(f"unknown window {self.window!r}")

    @classmethod
    def from_ms(cls, frame_ms: float, hop_ms: float, rate: int, window: str = "hann") -> "FrameConfig":
        return cls(int(round(frame_ms * rate / 1000)), int(round(hop_ms * rate / 1000)), window)

    def taper(self) -> np.ndarray:
        if self.window == "rect":
            return np.ones(self.frame_len)
        return np.hanning(self.frame_len + 2)[1:-1]


@dataclass(frozen=True)
class SmoothingConfig:
    """Two-pass smoothing and differencing scales, in milliseconds."""

    cp_sm_ms: float = 20.0
    fp_sm_ms: float = 10.0
    cp_dt_ms: float = 50.0
    fp_dt_ms: float = 26.0

    def frames(self, frame_rate: float) -> dict[str, int]:
        to_f = lambda ms: max(1, int(round(ms * frame_rate / 1000.0)))  # noqa: E731
        return {
            "cp_sm": odd(to_f(self.cp_sm_ms)),
            "fp_sm": odd(to_f(self.fp_sm_ms)),
            "cp_dt": to_f(self.cp_dt_ms),
            "fp_dt": to_f(self.fp_dt_ms),
        }


@dataclass
class BandEnergyTrack:
    """Per-frame band powers.

    ``power`` holds linear power floored at :data:`SILENCE_FLOOR`, shape
    (6, n_frames); :attr:`bands` gives the same values in dB.
    """

    power: np.ndarray
    sample_rate: int
    frame: FrameConfig
    band_edges: tuple = BAND_EDGES

    @property
    def bands(self) -> np.ndarray:
        return to_db(self.power)

    @property
    def n_frames(self) -> int:
        return self.power.shape[1]

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.frame.hop

    def frame_time(self, n) -> np.ndarray | float:
        """Centre time (s) of frame ``n``."""
        return (np.asarray(n) * self.frame.hop + self.frame.frame_len / 2) / self.sample_rate

    def time_to_frame(self, t: float) -> float:
        return (t * self.sample_rate - self.frame.frame_len / 2) / self.frame.hop


@dataclass
class SmoothedTrack:
    values: np.ndarray
    pass_: Pass
    window: int


@dataclass
class DerivativeTrack:
    values: np.ndarray
    dt: int
    pass_: Pass


def band_bin_masks(nfft: int, rate: int) -> np.ndarray:
    freqs = np.fft.rfftfreq(nfft, 1.0 / rate)
    masks = np.zeros((N_BANDS, len(freqs)), dtype=bool)
    for b, (lo, hi) in enumerate(BAND_EDGES):
        upper = freqs <= hi if b == N_BANDS - 1 else freqs < hi
        masks[b] = (freqs >= lo) & upper
    return masks


def compute_band_energies(audio: AudioBuffer, cfg: FrameConfig | None = None) -> BandEnergyTrack:
    cfg = cfg or FrameConfig()
    rate = audio.sample_rate
    if rate < 2 * BAND_EDGES[-1][1]:
        raise ValueError(f"sample rate {rate} Hz cannot resolve band 6 (up to 8 kHz); resample to 16 kHz")
    if cfg.frame_len < 2 * rate / 400:
        raise ValueError(f"frame_len {cfg.frame_len} too short to resolve band 1 at {rate} Hz")
    x = audio.samples
    if len(x) < cfg.frame_len:
        raise AudioTooShort(f"{len(x)} samples is shorter than one frame ({cfg.frame_len})")

    w = cfg.taper()
    frames = np.lib.stride_tricks.sliding_window_view(x, cfg.frame_len)[:: cfg.hop]
    spec = np.fft.rfft(frames * w, axis=1)
    pspec = (spec.real**2 + spec.imag**2) / np.sum(w**2)
    masks = band_bin_masks(cfg.frame_len, rate)
    power = masks.astype(float) @ pspec.T
    return BandEnergyTrack(np.maximum(power, SILENCE_FLOOR), rate, cfg)


def moving_average(x, window: int) -> np.ndarray:
    """Centred mean over [n-N, n+N], N=(window-1)//2, truncated at the edges."""
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    x = np.asarray(x, dtype=float)
    if window == 1:
        return x.copy()
    kernel = np.ones(window)
    total = np.convolve(x, kernel, mode="same")
    count = np.convolve(np.ones(len(x)), kernel, mode="same")
    return total / count


def smooth(track, window: int, pass_: Pass | str = Pass.COARSE) -> SmoothedTrack:
    """Moving average of linear band power, returned in dB."""
    mean = moving_average(track, window)
    return SmoothedTrack(to_db(mean), Pass(pass_), window)


def differentiate(track: SmoothedTrack | np.ndarray, dt: int) -> DerivativeTrack:
    """Lag-``dt`` forward difference, shifted right by dt//2 to centre it.

    out[n] = L[n - h + dt] - L[n - h] with h = dt // 2; zero wherever either
    operand falls outside the track.
    """
    if dt < 1:
        raise ValueError(f"dt must be >= 1, got {dt}")
    values = track.values if isinstance(track, SmoothedTrack) else np.asarray(track, dtype=float)
    pass_ = track.pass_ if isinstance(track, SmoothedTrack) else Pass.COARSE
    n = len(values)
    raw = np.zeros(n)
    if n > dt:
        raw[: n - dt] = values[dt:] - values[: n - dt]
    h = dt // 2
    out = np.zeros(n)
    if h < n:
        out[h:] = raw[: n - h]
    return DerivativeTrack(out, dt, pass_)


@dataclass
class BandAnalysis:
    """Band track with both smoothing passes and their derivatives, shape (6, n)."""

    track: BandEnergyTrack
    scales: dict[str, int]
    coarse: np.ndarray = field(repr=False)
    fine: np.ndarray = field(repr=False)
    d_coarse: np.ndarray = field(repr=False)
    d_fine: np.ndarray = field(repr=False)

    def derivative(self, pass_: Pass | str) -> np.ndarray:
        return self.d_coarse if Pass(pass_) is Pass.COARSE else self.d_fine


def analyze_bands(track: BandEnergyTrack, smoothing: SmoothingConfig | None = None) -> BandAnalysis:
    scales = (smoothing or SmoothingConfig()).frames(track.frame_rate)
    coarse = np.vstack([smooth(track.power[b], scales["cp_sm"], Pass.COARSE).values for b in range(N_BANDS)])
    fine = np.vstack([smooth(track.power[b], scales["fp_sm"], Pass.FINE).values for b in range(N_BANDS)])
    d_coarse = np.vstack([differentiate(row, scales["cp_dt"]).values for row in coarse])
    d_fine = np.vstack([differentiate(row, scales["fp_dt"]).values for row in fine])
    return BandAnalysis(track, scales, coarse, fine, d_coarse, d_fine)


def write_band_csv(track: BandEnergyTrack, path) -> None:
    db = track.bands
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_index"] + [f"b{b + 1}" for b in range(N_BANDS)])
        for n in range(track.n_frames):
            w.writerow([n] + [f"{v:.6f}" for v in db[:, n]])
