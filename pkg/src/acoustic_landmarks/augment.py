"""Sub-dialogue shuffling: class-balanced random contiguous slices of dialogues."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .audio_io import Dialogue, Label, Utterance


class AugmentError(ValueError):
    pass


class ZeroClass(AugmentError):
    pass


class UnlabeledDialogue(AugmentError):
    pass


class DialogueTooShort(AugmentError):
    pass


@dataclass(frozen=True)
class AugmentConfig:
    m_plus: int = 1000
    eps_low: float = 0.5
    eps_high: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.eps_low < self.eps_high <= 1:
            raise ValueError(f"need 0 < eps_low < eps_high <= 1, got {self.eps_low}, {self.eps_high}")
        if self.m_plus < 1:
            raise ValueError("m_plus must be >= 1")


@dataclass(frozen=True)
class SubDialogue:
    parent_id: str
    start_idx: int
    end_idx: int
    label: Label
    index: int = 0

    @property
    def id(self) -> str:
        return f"{self.parent_id}_{self.index:05d}"

    def __len__(self):
        return self.end_idx - self.start_idx + 1

    def utterances(self, parent: Dialogue) -> list[Utterance]:
        return parent.utterances[self.start_idx:self.end_idx + 1]

    def to_json(self) -> dict:
        return {"id": self.id, "parent_id": self.parent_id, "start_idx": self.start_idx,
                "end_idx": self.end_idx, "label": self.label.value}

    @classmethod
    def from_json(cls, rec: dict) -> "SubDialogue":
        index = int(rec["id"].rsplit("_", 1)[1]) if "id" in rec else 0
        return cls(rec["parent_id"], int(rec["start_idx"]), int(rec["end_idx"]), Label(rec["label"]), index)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def compute_m_minus(n_plus: int, n_minus: int, m_plus: int) -> int:
    """Sub-dialogues per negative dialogue so both classes total about the same.

    n_plus * m_plus ~= n_minus * m_minus, rounded half up.
    """
    if n_plus <= 0 or n_minus <= 0:
        raise ZeroClass(f"both classes need dialogues (positive={n_plus}, negative={n_minus})")
    if m_plus <= 0:
        raise ValueError("m_plus must be positive")
    return round_half_up(m_plus * n_plus / n_minus)


def dialogue_seed(seed: int, dialogue_id: str) -> list[int]:
    digest = hashlib.sha256(dialogue_id.encode("utf-8")).digest()
    return [int(seed), int.from_bytes(digest[:8], "little")]


def sample_span(rng: np.random.Generator, T: int, eps_low: float, eps_high: float) -> tuple[int, int]:
    """Draw one (start, end) pair, inclusive indices, for a dialogue of T utterances."""
    eps = rng.uniform(eps_low, eps_high)
    d = min(max(round_half_up(eps * T - 1), 1), T - 1)
    s = int(rng.integers(0, T - d))
    return s, s + d


def class_counts(dialogues: Sequence[Dialogue]) -> tuple[int, int]:
    n_plus = sum(d.label is Label.DEPRESSED for d in dialogues)
    n_minus = sum(d.label is Label.HEALTHY for d in dialogues)
    return n_plus, n_minus


def shuffle_dialogue(dialogue: Dialogue, m: int, cfg: AugmentConfig) -> list[SubDialogue]:
    T = len(dialogue)
    if T < 2:
        raise DialogueTooShort(f"dialogue {dialogue.id} has {T} utterance(s); need at least 2")
    rng = np.random.default_rng(dialogue_seed(cfg.rng_seed, dialogue.id))
    out = []
    for k in range(m):
        s, e = sample_span(rng, T, cfg.eps_low, cfg.eps_high)
        out.append(SubDialogue(dialogue.id, s, e, dialogue.label, k))
    return out


def shuffle_subdialogues(dialogues: Sequence[Dialogue], cfg: AugmentConfig | None = None) -> list[SubDialogue]:
    """Balanced augmentation: m_plus slices per depressed dialogue, m_minus per healthy one.

    Each dialogue draws from its own generator seeded by (rng_seed, id), so
    the output does not depend on the order dialogues are processed in.
    """
    cfg = cfg or AugmentConfig()
    for d in dialogues:
        if d.label is Label.UNLABELED:
            raise UnlabeledDialogue(f"dialogue {d.id} has no label")
        if len(d) < 2:
            raise DialogueTooShort(f"dialogue {d.id} has {len(d)} utterance(s); need at least 2")
    n_plus, n_minus = class_counts(dialogues)
    m_minus = compute_m_minus(n_plus, n_minus, cfg.m_plus)
    out = []
    for d in dialogues:
        m = cfg.m_plus if d.label is Label.DEPRESSED else m_minus
        out.extend(shuffle_dialogue(d, m, cfg))
    return out


def write_subdialogues(subs: Iterable[SubDialogue], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sub in subs:
            fh.write(json.dumps(sub.to_json(), sort_keys=True) + "\n")


def read_subdialogues(path) -> list[SubDialogue]:
    with open(path, encoding="utf-8") as fh:
        return [SubDialogue.from_json(json.loads(line)) for line in fh if line.strip()]


def manifest(cfg: AugmentConfig, dialogues: Sequence[Dialogue]) -> dict:
    n_plus, n_minus = class_counts(dialogues)
    return {
        "config": asdict(cfg),
        "n_plus": n_plus,
        "n_minus": n_minus,
        "m_plus": cfg.m_plus,
        "m_minus": compute_m_minus(n_plus, n_minus, cfg.m_plus),
        "dialogues": [d.id for d in dialogues],
    }
