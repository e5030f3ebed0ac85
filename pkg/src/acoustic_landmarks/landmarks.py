"""Landmark detection: g, b, s, f/v from band-energy derivatives, p from autocorrelation.

Band indices in this module are 0-based (band 1 in the usual numbering is
row 0 of the analysis arrays).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .audio_io import CANONICAL_RATE, AudioBuffer, Dialogue, Speaker, resample
from .bands import (
    AudioTooShort,
    BandAnalysis,
    FrameConfig,
    SmoothingConfig,
    analyze_bands,
    compute_band_energies,
    moving_average,
    odd,
)
from .peaks import detect_peaks

KINDS = ("g", "b", "s", "v", "p", "f")
KIND_ORDER = {k: i for i, k in enumerate(KINDS)}
POLARITIES = ("+", "-")
SYMBOLS = tuple(k + p for k in KINDS for p in POLARITIES)

GLOTTAL_BAND = 0
BURST_BANDS = (1, 2, 3, 4, 5)
HIGH_BANDS = (3, 4, 5)
LOW_BANDS = (1, 2)


@dataclass(frozen=True)
class Landmark:
    kind: str
    polarity: str
    time_s: float
    strength: float = 0.0

    def __post_init__(self):
        if self.kind not in KIND_ORDER:
            raise ValueError(f"unknown landmark kind {self.kind!r}")
        if self.polarity not in POLARITIES:
            raise ValueError(f"polarity must be '+' or '-', got {self.polarity!r}")

    @property
    def symbol(self) -> str:
        return self.kind + self.polarity

    def sort_key(self):
        return (self.time_s, KIND_ORDER[self.kind], POLARITIES.index(self.polarity))

    def shifted(self, dt: float) -> "Landmark":
        return Landmark(self.kind, self.polarity, self.time_s + dt, self.strength)


@dataclass
class VoicingSegments:
    intervals: list[tuple[float, float]] = field(default_factory=list)

    def contains(self, t: float) -> bool:
        return any(a <= t <= b for a, b in self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)


@dataclass
class LandmarkSequence:
    landmarks: list[Landmark]
    source_id: str = ""
    span: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.landmarks = sorted(self.landmarks, key=Landmark.sort_key)

    def __len__(self):
        return len(self.landmarks)

    def __iter__(self):
        return iter(self.landmarks)

    def symbols(self) -> list[str]:
        return [lm.symbol for lm in self.landmarks]

    def token_string(self) -> str:
        return " ".join(self.symbols())

    def of_kind(self, kind: str) -> list[Landmark]:
        return [lm for lm in self.landmarks if lm.kind == kind]

    def to_jsonl(self) -> str:
        return "".join(json.dumps({"t": round(lm.time_s, 6), "lm": lm.symbol}) + "\n" for lm in self.landmarks)

    def to_records(self) -> list[dict]:
        return [{"t": round(lm.time_s, 6), "lm": lm.symbol} for lm in self.landmarks]

    @classmethod
    def from_records(cls, records: Iterable[dict], source_id: str = "") -> "LandmarkSequence":
        lms = [Landmark(r["lm"][0], r["lm"][1], float(r["t"])) for r in records]
        span = (lms[0].time_s, lms[-1].time_s) if lms else (0.0, 0.0)
        return cls(lms, source_id, span)


@dataclass(frozen=True)
class DetectorConfig:
    coarse_threshold_db: float = 8.0
    fine_threshold_db: float = 5.0
    fv_threshold_db: float = 6.0
    fv_low_drop_db: float = 0.0
    min_bands: int = 3
    coincidence_ms: float = 20.0
    peak_min_distance_ms: float = 20.0
    p_frame_ms: float = 25.0
    p_hop_ms: float = 10.0
    p_binarize_theta: float = 0.1
    sample_rate: int = CANONICAL_RATE
    frame: FrameConfig = field(default_factory=FrameConfig)
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)

    def __post_init__(self):
        for name in ("coarse_threshold_db", "fine_threshold_db", "fv_threshold_db",
                     "coincidence_ms", "p_frame_ms", "p_hop_ms", "p_binarize_theta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.fv_low_drop_db < 0:
            raise ValueError("fv_low_drop_db must be >= 0")

    def ms_to_frames(self, ms: float) -> int:
        return int(round(ms * self.sample_rate / 1000.0 / self.frame.hop))


# -- shared peak helpers ------------------------------------------------------

def _peaks(x, thr, min_dist):
    if len(x) < 3:
        return []
    return detect_peaks(x, min_height=thr, min_prominence=thr, min_distance=min_dist)


def two_pass_events(an: BandAnalysis, band: int, sign: int, coarse_thr: float, fine_thr: float,
                    cfg: DetectorConfig) -> list[tuple[int, float]]:
    """Frames where fine and coarse derivative peaks of one band coincide.

    Returns (fine-peak frame, fine-peak height) pairs.
    """
    win = cfg.ms_to_frames(cfg.coincidence_ms)
    dist = cfg.ms_to_frames(cfg.peak_min_distance_ms)
    fine = _peaks(sign * an.d_fine[band], fine_thr, dist)
    coarse = np.array([p.index for p in _peaks(sign * an.d_coarse[band], coarse_thr, dist)], dtype=int)
    if not len(coarse):
        return []
    return [(p.index, p.height) for p in fine if np.min(np.abs(coarse - p.index)) <= win]


def _pol(sign: int) -> str:
    return "+" if sign > 0 else "-"


# -- g ---------------------------------------------------------------------------

def detect_g(an: BandAnalysis, cfg: DetectorConfig | None = None) -> list[Landmark]:
    """Glottal candidates: coincident coarse and fine peaks in band 1."""
    cfg = cfg or DetectorConfig()
    out = []
    for sign in (1, -1):
        for frame, height in two_pass_events(an, GLOTTAL_BAND, sign, cfg.coarse_threshold_db,
                                             cfg.fine_threshold_db, cfg):
            out.append(Landmark("g", _pol(sign), float(an.track.frame_time(frame)), height))
    return sorted(out, key=Landmark.sort_key)


def pair_g(candidates: Sequence[Landmark]) -> tuple[list[Landmark], VoicingSegments]:
    """Choose an alternating g+/g- subsequence.

    Maximises the number of complete pairs, then the summed strength of the
    retained candidates. Ties keep the earlier-found solution. Dynamic
    programme over two states: last kept candidate is a g- (closed, or
    nothing kept yet) or a g+ (open).
    """
    cands = sorted(candidates, key=Landmark.sort_key)
    # state: (score=(pairs, strength), chain) with chain a linked list (item, rest)
    closed = ((0, 0.0), None)
    opened = None
    for lm in cands:
        if lm.kind != "g":
            raise ValueError("pair_g expects g candidates only")
        if lm.polarity == "+":
            (pairs, s), chain = closed
            option = ((pairs, s + lm.strength), (lm, chain))
            if opened is None or option[0] > opened[0]:
                opened = option
        elif opened is not None:
            (pairs, s), chain = opened
            option = ((pairs + 1, s + lm.strength), (lm, chain))
            if option[0] > closed[0]:
                closed = option
    kept = []
    chain = closed[1]
    while chain is not None:
        kept.append(chain[0])
        chain = chain[1]
    kept.reverse()
    segs = VoicingSegments([(a.time_s, b.time_s) for a, b in zip(kept[::2], kept[1::2])])
    return kept, segs


# -- multi-band events ---------------------------------------------------------

def _cluster(events: dict[int, list[tuple[int, float]]], min_bands: int, win: int):
    """Group per-band events that fall within ``win`` frames of a common anchor.

    Yields (anchor frame, {band: (frame, height)}) with at least ``min_bands``
    bands; each per-band event is used at most once. Anchors are taken greedily
    by band count, then total height, then time.
    """
    anchors = sorted({f for evs in events.values() for f, _ in evs})
    options = []
    for a in anchors:
        chosen = {}
        for band, evs in events.items():
            near = [(abs(f - a), f, h) for f, h in evs if abs(f - a) <= win]
            if near:
                _, f, h = min(near)
                chosen[band] = (f, h)
        if len(chosen) >= min_bands:
            options.append((-len(chosen), -sum(h for _, h in chosen.values()), a, chosen))
    used = set()
    out = []
    for _, _, a, chosen in sorted(options, key=lambda o: o[:3]):
        keys = {(b, f) for b, (f, _) in chosen.items()}
        if keys & used:
            continue
        used |= keys
        frame = int(round(np.mean([f for f, _ in chosen.values()])))
        out.append((frame, chosen))
    return sorted(out, key=lambda o: o[0])


def _multiband(an: BandAnalysis, bands, thr: float, min_bands: int, cfg: DetectorConfig, sign: int):
    events = {b: two_pass_events(an, b, sign, thr, thr, cfg) for b in bands}
    return _cluster(events, min_bands, cfg.ms_to_frames(cfg.coincidence_ms))


def _near(lms: Iterable[Landmark], t: float, polarity: str, tol: float) -> bool:
    return any(lm.polarity == polarity and abs(lm.time_s - t) <= tol for lm in lms)


def _abrupt(an, segments, cfg, kind, voiced, exclude):
    cfg = cfg or DetectorConfig()
    tol = cfg.coincidence_ms / 1000.0
    out = []
    for sign in (1, -1):
        for frame, chosen in _multiband(an, BURST_BANDS, cfg.fv_threshold_db, cfg.min_bands, cfg, sign):
            t = float(an.track.frame_time(frame))
            if segments.contains(t) != voiced:
                continue
            if exclude and _near(exclude, t, _pol(sign), tol):
                continue
            strength = float(np.mean([h for _, h in chosen.values()]))
            out.append(Landmark(kind, _pol(sign), t, strength))
    return sorted(out, key=Landmark.sort_key)


def detect_b(an: BandAnalysis, segments: VoicingSegments, cfg: DetectorConfig | None = None,
             exclude: Sequence[Landmark] | None = None) -> list[Landmark]:
    """Bursts: >= min_bands of bands 2-6 jump together, outside voicing.

    Events within the coincidence window of a same-polarity landmark in
    ``exclude`` (normally the f/v output) are dropped.
    """
    return _abrupt(an, segments, cfg, "b", False, exclude)


def detect_s(an: BandAnalysis, segments: VoicingSegments, cfg: DetectorConfig | None = None,
             exclude: Sequence[Landmark] | None = None) -> list[Landmark]:
    """Same multi-band test as :func:`detect_b`, inside voiced segments."""
    return _abrupt(an, segments, cfg, "s", True, exclude)


def detect_f_v(an: BandAnalysis, segments: VoicingSegments, cfg: DetectorConfig | None = None) -> list[Landmark]:
    cfg = cfg or DetectorConfig()
    out = []
    for sign in (1, -1):
        for frame, chosen in _multiband(an, HIGH_BANDS, cfg.fv_threshold_db, len(HIGH_BANDS), cfg, sign):
            # low bands must move the other way in both passes
            low_ok = all(
                -sign * an.d_coarse[b][frame] > cfg.fv_low_drop_db
                and -sign * an.d_fine[b][frame] > cfg.fv_low_drop_db
                for b in LOW_BANDS
            )
            if not low_ok:
                continue
            t = float(an.track.frame_time(frame))
            kind = "v" if segments.contains(t) else "f"
            out.append(Landmark(kind, _pol(sign), t, float(np.mean([h for _, h in chosen.values()]))))
    return sorted(out, key=Landmark.sort_key)


# -- p ---------------------------------------------------------------------------

def frame_autocorrelation(frames: np.ndarray) -> np.ndarray:
    """R(k) = 1/(N-k) * sum_n y(n) y(n+k) for k = 0..N-1, row-wise."""
    n = frames.shape[1]
    nfft = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(frames, nfft, axis=1)
    raw = np.fft.irfft(spec.real**2 + spec.imag**2, nfft, axis=1)[:, :n]
    return raw / (n - np.arange(n))


def periodicity_energy(audio: AudioBuffer, frame_len: int, hop: int) -> np.ndarray:
    x = audio.samples
    if len(x) < frame_len:
        raise AudioTooShort(f"{len(x)} samples is shorter than one p frame ({frame_len})")
    frames = np.lib.stride_tricks.sliding_window_view(x, frame_len)[::hop]
    r = frame_autocorrelation(frames)
    return np.mean(r**2, axis=1)


def detect_p(audio: AudioBuffer, cfg: DetectorConfig | None = None) -> list[Landmark]:
    """Periodicity landmarks from framewise autocorrelation energy.

    The energy is held per sample around each frame centre, smoothed with the
    fine window, and thresholded at ``p_binarize_theta`` times its maximum.
    Rising edges are p+, falling edges p-. The binary track is treated as 0
    outside the file, so the counts of p+ and p- always match.
    """
    cfg = cfg or DetectorConfig()
    rate = audio.sample_rate
    n_frame = int(round(cfg.p_frame_ms * rate / 1000))
    hop = max(1, int(round(cfg.p_hop_ms * rate / 1000)))
    energy = periodicity_energy(audio, n_frame, hop)
    peak = float(energy.max())
    if not peak > 0:
        return []
    n = len(audio.samples)
    idx = np.clip(np.round((np.arange(n) - n_frame / 2) / hop), 0, len(energy) - 1).astype(int)
    window = odd(int(round(cfg.smoothing.fp_sm_ms * rate / 1000)))
    held = moving_average(energy[idx], window)
    binary = np.concatenate([[0], (held >= cfg.p_binarize_theta * peak).astype(np.int8), [0]])
    jumps = np.diff(binary)
    ups = np.flatnonzero(jumps == 1)
    downs = np.flatnonzero(jumps == -1)
    out = []
    thr = cfg.p_binarize_theta * peak
    for a, b in zip(ups, downs):
        strength = float(10 * np.log10(held[a:b].max() / thr))
        out.append(Landmark("p", "+", float(a) / rate, strength))
        out.append(Landmark("p", "-", float(b) / rate, strength))
    return out


# -- pipeline --------------------------------------------------------------------

@dataclass
class Detection:
    """All intermediate products of one extraction run."""

    analysis: BandAnalysis
    g_candidates: list[Landmark]
    g: list[Landmark]
    segments: VoicingSegments
    b: list[Landmark]
    s: list[Landmark]
    fv: list[Landmark]
    p: list[Landmark]

    def all(self) -> list[Landmark]:
        return self.g + self.b + self.s + self.fv + self.p


def run_detectors(audio: AudioBuffer, cfg: DetectorConfig | None = None) -> Detection:
    cfg = cfg or DetectorConfig()
    if audio.sample_rate != cfg.sample_rate:
        audio = resample(audio, cfg.sample_rate)
    track = compute_band_energies(audio, cfg.frame)
    an = analyze_bands(track, cfg.smoothing)
    cands = detect_g(an, cfg)
    g, segs = pair_g(cands)
    fv = detect_f_v(an, segs, cfg)
    b = detect_b(an, segs, cfg, exclude=fv)
    s = detect_s(an, segs, cfg, exclude=fv)
    p = detect_p(audio, cfg)
    return Detection(an, cands, g, segs, b, s, fv, p)


def extract_landmarks(audio: AudioBuffer, cfg: DetectorConfig | None = None, source_id: str = "") -> LandmarkSequence:
    det = run_detectors(audio, cfg)
    return LandmarkSequence(det.all(), source_id, (0.0, audio.duration))


def extract_dialogue_landmarks(audio: AudioBuffer, dialogue: Dialogue, cfg: DetectorConfig | None = None,
                               speakers: Iterable[Speaker] = (Speaker.PARTICIPANT,)) -> dict[int, LandmarkSequence]:
    """Landmarks per utterance span, keyed by utterance index.

    Times are absolute (seconds from the start of ``audio``). Utterances too
    short for one analysis frame get an empty sequence.
    """
    cfg = cfg or DetectorConfig()
    if audio.sample_rate != cfg.sample_rate:
        audio = resample(audio, cfg.sample_rate)
    wanted = set(speakers)
    out = {}
    for i, utt in enumerate(dialogue.utterances):
        if utt.speaker not in wanted:
            continue
        piece = audio.slice(utt.start_s, utt.end_s)
        try:
            seq = extract_landmarks(piece, cfg)
            lms = [lm.shifted(utt.start_s) for lm in seq]
        except AudioTooShort:
            lms = []
        out[i] = LandmarkSequence(lms, f"{dialogue.id}:{i}", (utt.start_s, utt.end_s))
    return out
