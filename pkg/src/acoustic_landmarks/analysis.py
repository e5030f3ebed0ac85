"""Adapter-matrix contribution scores, majority-vote ensembling and F1."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class EvenEnsemble(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


@dataclass
class MatrixDump:
    layer_name: str
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.atleast_2d(np.asarray(self.entries, dtype=np.float64))
        if self.entries.ndim != 2 or min(self.entries.shape) < 1:
            raise ValueError(f"{self.layer_name}: need a non-empty 2-D matrix")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError(f"{self.layer_name}: entries must be finite")

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]


def contribution_score(m: MatrixDump) -> float:
    """Mean absolute entry: sum |L(j,k)| / (a*b)."""
    return float(np.abs(m.entries).sum() / m.entries.size)


@dataclass(frozen=True)
class Ranked:
    layer_name: str
    score: float
    rank: int


def rank_all(ms: Sequence[MatrixDump]) -> list[Ranked]:
    scored = sorted(((-contribution_score(m), m.layer_name) for m in ms))
    return [Ranked(name, -neg, i + 1) for i, (neg, name) in enumerate(scored)]


def rank_contributions(ms: Sequence[MatrixDump], top_k: int = 10, bottom_k: int = 10):
    """Top-k and bottom-k layers by score.

    Both lists come from one descending order (ties by layer name); the
    bottom list is read from the end, lowest score first.
    """
    if top_k > len(ms) or bottom_k > len(ms):
        raise ValueError(f"k exceeds the {len(ms)} matrices available")
    ranked = rank_all(ms)
    return ranked[:top_k], ranked[::-1][:bottom_k]


def write_contributions(ranked: Sequence[Ranked], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["layer_name", "score", "rank"])
        for r in ranked:
            w.writerow([r.layer_name, repr(r.score), r.rank])


# Dump format: a JSON manifest next to one flat binary blob.
#   {"data": "weights.bin", "dtype": "<f4",
#    "layers": [{"name": ..., "offset": <bytes>, "shape": [a, b]}, ...]}

def save_matrix_dump(ms: Sequence[MatrixDump], manifest_path, dtype: str = "<f4") -> None:
    manifest_path = Path(manifest_path)
    data_name = manifest_path.with_suffix(".bin").name
    layers, offset = [], 0
    with open(manifest_path.parent / data_name, "wb") as fh:
        for m in ms:
            buf = np.ascontiguousarray(m.entries, dtype=np.dtype(dtype)).tobytes()
            fh.write(buf)
            layers.append({"name": m.layer_name, "offset": offset, "shape": list(m.entries.shape)})
            offset += len(buf)
    manifest_path.write_text(json.dumps({"data": data_name, "dtype": dtype, "layers": layers}, indent=1))


def load_matrix_dump(manifest_path) -> list[MatrixDump]:
    manifest_path = Path(manifest_path)
    meta = json.loads(manifest_path.read_text())
    dtype = np.dtype(meta.get("dtype", "<f4"))
    blob = (manifest_path.parent / meta["data"]).read_bytes()
    out = []
    for layer in meta["layers"]:
        a, b = layer["shape"]
        count = a * b
        start = int(layer["offset"])
        if start + count * dtype.itemsize > len(blob):
            raise ValueError(f"{layer['name']}: offset/shape run past the end of {meta['data']}")
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=start).reshape(a, b)
        out.append(MatrixDump(layer["name"], arr))
    return out


# -- predictions ---------------------------------------------------------------

@dataclass
class PredictionSet:
    ids: list[str]
    votes: np.ndarray  # (n_models, n_ids) of 0/1
    truth: np.ndarray | None = None

    def __post_init__(self):
        self.votes = np.atleast_2d(np.asarray(self.votes, dtype=int))
        if self.votes.shape[1] != len(self.ids):
            raise LengthMismatch(f"{self.votes.shape[1]} votes per model for {len(self.ids)} ids")
        if not np.isin(self.votes, (0, 1)).all():
            raise ValueError("votes must be 0 or 1")
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=int)
            if len(self.truth) != len(self.ids):
                raise LengthMismatch("truth length differs from ids")


def majority_vote(p: PredictionSet) -> np.ndarray:
    n_models = p.votes.shape[0]
    if n_models % 2 == 0:
        raise EvenEnsemble(f"majority vote needs an odd number of models, got {n_models}")
    return (2 * p.votes.sum(axis=0) > n_models).astype(int)


def f1_score(pred, truth) -> float:
    """F1 of the positive class; 0.0 (with a warning) when there are no true positives."""
    pred = np.asarray(pred, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if pred.shape != truth.shape:
        raise LengthMismatch(f"pred has {pred.size} labels, truth has {truth.size}")
    tp = int(np.sum((pred == 1) & (truth == 1)))
    fp = int(np.sum((pred == 1) & (truth == 0)))
    fn = int(np.sum((pred == 0) & (truth == 1)))
    if tp == 0:
        warnings.warn("no true positives; F1 set to 0.0", RuntimeWarning, stacklevel=2)
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)


def read_predictions(pred_path, truth_path=None) -> PredictionSet:
    """Predictions CSV ``id,model_1..model_k`` (a ``vote`` column is ignored)."""
    with open(pred_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return PredictionSet([], np.zeros((1, 0), dtype=int))
    models = [c for c in rows[0] if c.startswith("model_")]
    if not models:
        raise ValueError(f"{pred_path}: no model_* columns")
    models.sort(key=lambda c: int(c.split("_", 1)[1]))
    ids = [r["id"] for r in rows]
    votes = np.array([[int(r[m]) for r in rows] for m in models])
    truth = None
    if truth_path is not None:
        with open(truth_path, newline="") as fh:
            lab = {r["id"]: int(r["label"]) for r in csv.DictReader(fh)}
        missing = [i for i in ids if i not in lab]
        if missing:
            raise LengthMismatch(f"truth file lacks ids: {', '.join(missing[:5])}")
        truth = np.array([lab[i] for i in ids])
    return PredictionSet(ids, votes, truth)


def write_predictions(p: PredictionSet, vote, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"model_{k + 1}" for k in range(p.votes.shape[0])] + ["vote"])
        for j, id_ in enumerate(p.ids):
            w.writerow([id_] + [int(v) for v in p.votes[:, j]] + [int(vote[j])])
