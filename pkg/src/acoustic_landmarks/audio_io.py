"""Audio and transcript ingestion.

Everything downstream consumes :class:`AudioBuffer` and :class:`Dialogue`;
this module is the only place that touches WAV and transcript files.
"""

from __future__ import annotations

import csv
import logging
import math
import re
import struct
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

log = logging.getLogger(__name__)

CANONICAL_RATE = 16000


class AudioError(Exception):
    pass


class UnsupportedEncoding(AudioError):
    pass


class CorruptHeader(AudioError):
    pass


class EmptyAudio(AudioError):
    pass


class TranscriptError(Exception):
    pass


class MissingColumn(TranscriptError):
    pass


class UnparseableTimestamp(TranscriptError):
    pass


class OverlapWarning(UserWarning):
    pass


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioBuffer holds mono samples only")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self):
        return len(self.samples)

    def slice(self, start_s: float, end_s: float) -> "AudioBuffer":
        lo = max(0, int(round(start_s * self.sample_rate)))
        hi = min(len(self.samples), int(round(end_s * self.sample_rate)))
        return AudioBuffer(self.samples[lo:hi], self.sample_rate)

    def scaled(self, gain: float) -> "AudioBuffer":
        return AudioBuffer(self.samples * gain, self.sample_rate)


class Speaker(str, Enum):
    PARTICIPANT = "participant"
    INTERVIEWER = "interviewer"


class Label(str, Enum):
    DEPRESSED = "depressed"
    HEALTHY = "healthy"
    UNLABELED = "unlabeled"


_NONVERBAL = re.compile(r"^\s*[<\[].*[>\]]\s*$")


@dataclass(frozen=True)
class Utterance:
    speaker: Speaker
    text: str
    start_s: float
    end_s: float
    nonverbal: bool = False

    def __post_init__(self):
        if not self.end_s > self.start_s:
            raise ValueError(f"utterance end {self.end_s} must exceed start {self.start_s}")
        if self.start_s < 0:
            raise ValueError("utterance start must be >= 0")
        if not self.text.strip() and not self.nonverbal:
            raise ValueError("empty utterance text must be flagged nonverbal")


@dataclass
class Dialogue:
    id: str
    utterances: list[Utterance] = field(default_factory=list)
    label: Label = Label.UNLABELED

    def __post_init__(self):
        self.utterances = sorted(self.utterances, key=lambda u: u.start_s)

    def __len__(self):
        return len(self.utterances)


# -- WAV -------------------------------------------------------------------

def _check_riff(path: Path) -> None:
    with open(path, "rb") as fh:
        head = fh.read(12)
    if len(head) < 12 or head[:4] not in (b"RIFF", b"RIFX") or head[8:12] != b"WAVE":
        raise CorruptHeader(f"{path}: not a RIFF/WAVE file")


def read_wav(path) -> AudioBuffer:
    """Read a PCM WAV file as a mono buffer normalized to [-1, 1].

    Integer PCM is divided by its full-scale value; float files are clipped.
    Multichannel files are averaged across channels.
    """
    path = Path(path)
    _check_riff(path)
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        msg = str(exc)
        if "Unknown wave file format" in msg or "Unsupported" in msg:
            raise UnsupportedEncoding(f"{path}: {msg}") from exc
        raise CorruptHeader(f"{path}: {msg}") from exc
    except (struct.error, EOFError) as exc:
        raise CorruptHeader(f"{path}: {exc}") from exc

    if data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.integer):
        x = data.astype(np.float64) / float(-np.iinfo(data.dtype).min)
    elif np.issubdtype(data.dtype, np.floating):
        x = np.clip(data.astype(np.float64), -1.0, 1.0)
    else:
        raise UnsupportedEncoding(f"{path}: dtype {data.dtype}")

    if x.ndim == 2:
        x = x.mean(axis=1)
    if x.size == 0:
        raise EmptyAudio(f"{path}: no samples")
    return AudioBuffer(x, int(rate))


def write_wav(path, buffer: AudioBuffer) -> None:
    """Write 16-bit PCM on the same 32768 full scale that :func:`read_wav` divides by."""
    pcm = np.clip(np.round(buffer.samples * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(Path(path), buffer.sample_rate, pcm)


def resample(buffer: AudioBuffer, target_rate: int) -> AudioBuffer:
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == buffer.sample_rate:
        return buffer
    g = math.gcd(int(target_rate), buffer.sample_rate)
    up, down = int(target_rate) // g, buffer.sample_rate // g
    y = resample_poly(buffer.samples, up, down)
    return AudioBuffer(np.clip(y, -1.0, 1.0), int(target_rate))


def load_audio(path, rate: int = CANONICAL_RATE) -> AudioBuffer:
    return resample(read_wav(path), rate)


# -- transcripts -----------------------------------------------------------

TRANSCRIPT_COLUMNS = ("start_time", "stop_time", "speaker", "value")

_SPEAKERS = {
    "participant": Speaker.PARTICIPANT,
    "p": Speaker.PARTICIPANT,
    "interviewer": Speaker.INTERVIEWER,
    "ellie": Speaker.INTERVIEWER,
    "i": Speaker.INTERVIEWER,
}


def _sniff_delimiter(header: str) -> str:
    return "\t" if header.count("\t") >= header.count(",") else ","


def parse_speaker(raw: str) -> Speaker:
    try:
        return _SPEAKERS[raw.strip().lower()]
    except KeyError:
        raise TranscriptError(f"unknown speaker {raw!r}") from None


def read_transcript(path, dialogue_id: str | None = None) -> Dialogue:
    """Parse an interview transcript (CSV or TSV).

    Rows are sorted by start time. Overlapping utterances are kept and
    logged; rows whose stop time does not exceed the start time raise
    :class:`UnparseableTimestamp`.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8-sig")
    lines = text.splitlines()
    if not lines:
        raise MissingColumn(f"{path}: empty file, expected header {','.join(TRANSCRIPT_COLUMNS)}")
    reader = csv.DictReader(lines, delimiter=_sniff_delimiter(lines[0]))
    fields = [f.strip() for f in (reader.fieldnames or [])]
    reader.fieldnames = fields
    missing = [c for c in TRANSCRIPT_COLUMNS if c not in fields]
    if missing:
        raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")

    utts = []
    for rowno, row in enumerate(reader, start=2):
        try:
            start = float(row["start_time"])
            stop = float(row["stop_time"])
        except (TypeError, ValueError):
            raise UnparseableTimestamp(f"{path}: row {rowno}: cannot parse timestamps") from None
        if not (math.isfinite(start) and math.isfinite(stop)) or start < 0 or stop <= start:
            raise UnparseableTimestamp(
                f"{path}: row {rowno}: stop_time {stop} must exceed start_time {start}"
            )
        value = (row["value"] or "").strip()
        utts.append(
            Utterance(
                speaker=parse_speaker(row["speaker"] or ""),
                text=value,
                start_s=start,
                end_s=stop,
                nonverbal=not value or bool(_NONVERBAL.match(value)),
            )
        )

    dlg = Dialogue(dialogue_id or dialogue_id_from_path(path), utts)
    for a, b in zip(dlg.utterances, dlg.utterances[1:]):
        if b.start_s < a.end_s:
            msg = f"{path}: utterances overlap at {b.start_s:.3f}s"
            log.warning(msg)
            warnings.warn(msg, OverlapWarning, stacklevel=2)
    return dlg


def dialogue_id_from_path(path) -> str:
    stem = Path(path).stem
    return re.sub(r"_(TRANSCRIPT|AUDIO|P)$", "", stem, flags=re.IGNORECASE)


def read_labels(path) -> dict[str, Label]:
    """Read an ``id,label`` file where label 1 means depressed."""
    out = {}
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        cols = [c.strip() for c in (reader.fieldnames or [])]
        reader.fieldnames = cols
        if "id" not in cols or "label" not in cols:
            raise MissingColumn(f"{path}: expected columns id,label")
        for row in reader:
            raw = row["label"].strip()
            if raw not in ("0", "1"):
                raise ValueError(f"{path}: label must be 0 or 1, got {raw!r}")
            out[row["id"].strip()] = Label.DEPRESSED if raw == "1" else Label.HEALTHY
    return out
