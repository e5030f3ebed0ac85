"""Bigram landmark tokens and the vocabulary they add to a language model."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .landmarks import SYMBOLS, LandmarkSequence

SPECIAL_TOKENS: tuple[str, ...] = ()
MAX_VOCAB = len(SYMBOLS) ** 2 + len(SYMBOLS)

_SYMBOL_SET = frozenset(SYMBOLS)
_SURFACE = re.compile(r"^\(([gbsvpf][+-])([gbsvpf][+-])?\)$")


class UnknownToken(ValueError):
    pass


@dataclass(frozen=True)
class BigramToken:
    first: str
    second: str | None = None

    def __post_init__(self):
        for sym in (self.first, self.second):
            if sym is not None and sym not in _SYMBOL_SET:
                raise UnknownToken(f"unknown landmark symbol {sym!r}")

    @property
    def surface(self) -> str:
        return f"({self.first}{self.second or ''})"

    @property
    def symbols(self) -> tuple[str, ...]:
        return (self.first,) if self.second is None else (self.first, self.second)

    def __str__(self):
        return self.surface

    @classmethod
    def parse(cls, surface: str) -> "BigramToken":
        m = _SURFACE.match(surface)
        if not m:
            raise UnknownToken(f"cannot parse token {surface!r}")
        return cls(m.group(1), m.group(2))


def merge_bigrams(seq: LandmarkSequence | Sequence[str]) -> list[BigramToken]:
    """Pair consecutive landmarks (1,2), (3,4), ...; an odd tail stays a unigram."""
    syms = seq.symbols() if isinstance(seq, LandmarkSequence) else list(seq)
    out = [BigramToken(syms[i], syms[i + 1]) for i in range(0, len(syms) - 1, 2)]
    if len(syms) % 2:
        out.append(BigramToken(syms[-1]))
    return out


def unmerge(tokens: Iterable[BigramToken]) -> list[str]:
    return [s for tok in tokens for s in tok.symbols]


def render_token_string(tokens: Iterable[BigramToken]) -> str:
    return " ".join(t.surface for t in tokens)


def parse_token_string(text: str) -> list[BigramToken]:
    return [BigramToken.parse(part) for part in text.split()]


@dataclass
class Vocabulary:
    """Token surfaces in first-appearance order with occurrence counts."""

    counts: dict[str, int] = field(default_factory=dict)

    @property
    def tokens(self) -> list[str]:
        return list(self.counts)

    def __len__(self):
        return len(self.counts)

    def __contains__(self, surface):
        return surface in self.counts

    def add(self, tokens: Iterable[BigramToken | str]) -> None:
        for tok in tokens:
            key = tok if isinstance(tok, str) else tok.surface
            self.counts[key] = self.counts.get(key, 0) + 1

    def merge(self, other: "Vocabulary") -> "Vocabulary":
        out = Vocabulary(dict(self.counts))
        for key, n in other.counts.items():
            out.counts[key] = out.counts.get(key, 0) + n
        return out

    def dumps(self) -> str:
        return "".join(f"{tok}\t{n}\n" for tok, n in self.counts.items())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "Vocabulary":
        counts = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    tok, n = line.rstrip("\n").split("\t")
                    BigramToken.parse(tok)
                    counts[tok] = int(n)
        return cls(counts)


def build_vocabulary(corpus: Iterable[Iterable[BigramToken | str]]) -> Vocabulary:
    vocab = Vocabulary()
    for tokens in corpus:
        vocab.add(tokens)
    return vocab

