"""Instruction-tuning prompt records: landmark-prediction hints and detection prompts."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .audio_io import Dialogue, Label, Speaker
from .augment import SubDialogue, UnlabeledDialogue
from .tokens import merge_bigrams, render_token_string

_HINT = (
    "Below are the speech transcripts from {who}.\n"
    "Please try to predict the concatenated acoustic landmarks\n"
    "corresponding to these transcripts.\n"
    "\n"
    "### Transcript:\n"
    "{transcript}\n"
    "\n"
    "### Acoustic Landmark:\n"
    "{landmark}"
)

HINT_TEMPLATES = {
    Label.DEPRESSED: _HINT.replace("{who}", "a person with depression"),
    Label.HEALTHY: _HINT.replace("{who}", "a healthy person"),
}

DETECT_TEMPLATES = {
    "text": (
        "Categorize these dialogues as either depression or healthy based on its transcripts.\n"
        "\n"
        "### transcript:{transcript}\n"
        "\n"
        "### Response:"
    ),
    "landmark": (
        "Categorize these dialogues as either depression or healthy based on its acoustic landmarks.\n"
        "\n"
        "### acoustic landmarks:{landmarks}\n"
        "\n"
        "### Response:"
    ),
    "multimodal": (
        "Categorize these dialogues as either depression or healthy based on its transcripts and acoustic landmarks.\n"
        "\n"
        "### Transcript:{transcript}\n"
        "\n"
        "### Acoustic Landmark:{landmarks}\n"
        "\n"
        "### Response:\n"
    ),
}

RESPONSE_WORDS = {Label.DEPRESSED: "depression", Label.HEALTHY: "healthy"}


class TemplateKind(str, Enum):
    HINT_DEPRESSED = "hint_depressed"
    HINT_HEALTHY = "hint_healthy"
    DETECT_TEXT = "detect_text"
    DETECT_LANDMARK = "detect_landmark"
    DETECT_MULTIMODAL = "detect_multimodal"


@dataclass(frozen=True)
class PromptRecord:
    template_kind: TemplateKind
    transcript: str
    landmarks: str
    rendered: str
    prompt: str
    response: str = ""
    id: str = ""
    label: Label = Label.UNLABELED

    def to_json(self) -> dict:
        return {"id": self.id, "kind": self.template_kind.value, "prompt": self.prompt,
                "response": self.response, "label": self.label.value}


_SLOT = re.compile(r"\{(transcript|landmarks|landmark)\}")


def _fill(template: str, **slots: str) -> str:
    # single pass: braces inside a transcript are never re-substituted
    return _SLOT.sub(lambda m: slots.get(m.group(1), m.group(0)), template)


def emit_hint_record(sub: SubDialogue, transcript: str, landmarks: str) -> PromptRecord:
    """Landmark-prediction record that tells the model the speaker's diagnosis.

    ``prompt`` is everything up to the landmark slot and ``response`` the
    landmark string, so prompt + response == rendered.
    """
    if sub.label not in HINT_TEMPLATES:
        raise UnlabeledDialogue(f"{sub.parent_id}: hint records need a depressed/healthy label")
    template = HINT_TEMPLATES[sub.label]
    rendered = _fill(template, transcript=transcript, landmark=landmarks)
    prompt = _fill(template.split("{landmark}")[0], transcript=transcript)
    kind = TemplateKind.HINT_DEPRESSED if sub.label is Label.DEPRESSED else TemplateKind.HINT_HEALTHY
    return PromptRecord(kind, transcript, landmarks, rendered, prompt, landmarks, sub.id, sub.label)


def emit_detect_record(sub: SubDialogue, transcript: str, landmarks: str, mode: str = "multimodal",
                       training: bool = False) -> PromptRecord:
    if mode not in DETECT_TEMPLATES:
        raise ValueError(f"mode must be one of {sorted(DETECT_TEMPLATES)}, got {mode!r}")
    rendered = _fill(DETECT_TEMPLATES[mode], transcript=transcript, landmarks=landmarks)
    response = RESPONSE_WORDS.get(sub.label, "") if training else ""
    return PromptRecord(TemplateKind("detect_" + mode), transcript, landmarks, rendered, rendered,
                        response, sub.id, sub.label)


def template_for(kind: TemplateKind) -> str:
    if kind is TemplateKind.HINT_DEPRESSED:
        return HINT_TEMPLATES[Label.DEPRESSED]
    if kind is TemplateKind.HINT_HEALTHY:
        return HINT_TEMPLATES[Label.HEALTHY]
    return DETECT_TEMPLATES[kind.value.removeprefix("detect_")]


def parse_prompt(rendered: str, kind: TemplateKind) -> dict[str, str]:
    """Recover the substituted fields of a rendered prompt."""
    pattern = re.escape(template_for(kind))
    for slot in ("transcript", "landmarks", "landmark"):
        pattern = pattern.replace(re.escape("{" + slot + "}"), f"(?P<{slot}>.*)")
    m = re.fullmatch(pattern, rendered, flags=re.DOTALL)
    if not m:
        raise ValueError(f"text does not match the {kind.value} template")
    fields = m.groupdict()
    if "landmark" in fields:
        fields["landmarks"] = fields.pop("landmark")
    return fields


# -- sub-dialogue text -------------------------------------------------------------

def subdialogue_transcript(sub: SubDialogue, parent: Dialogue, style: str = "participant") -> str:
    """Participant turns joined by newlines, or every turn tagged with its speaker."""
    utts = sub.utterances(parent)
    if style == "participant":
        return "\n".join(u.text for u in utts if u.speaker is Speaker.PARTICIPANT)
    if style == "tagged":
        return "\n".join(f"{u.speaker.value.capitalize()}: {u.text}" for u in utts)
    raise ValueError(f"unknown transcript style {style!r}")


def subdialogue_landmarks(sub: SubDialogue, per_utterance: dict[int, Sequence[str]]) -> str:
    """Bigram token string over the concatenated landmarks of the slice's utterances."""
    syms = [s for i in range(sub.start_idx, sub.end_idx + 1) for s in per_utterance.get(i, ())]
    return render_token_string(merge_bigrams(syms))


def write_records(records: Iterable[PromptRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False) + "\n")
