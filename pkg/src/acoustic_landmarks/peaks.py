"""Local-maximum peak picking with height, prominence and separation rules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Peak:
    index: int
    height: float
    prominence: float
    width: int


def local_maxima(x: np.ndarray) -> np.ndarray:
    """Indices n with x[n] > x[n-1] and x[n] > x[n+1] (strict, no plateaus)."""
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        return np.empty(0, dtype=int)
    mask = (x[1:-1] > x[:-2]) & (x[1:-1] > x[2:])
    return np.flatnonzero(mask) + 1


def prominence(x: np.ndarray, i: int) -> float:
    # lowest point on each side before the signal climbs strictly above x[i]
    xi = x[i]
    left = x[:i][::-1]
    stop = np.flatnonzero(left > xi)
    v_l = left[: stop[0]].min() if len(stop) else left.min()
    right = x[i + 1:]
    stop = np.flatnonzero(right > xi)
    v_r = right[: stop[0]].min() if len(stop) else right.min()
    return float(xi - max(v_l, v_r))


def width(x: np.ndarray, i: int, prom: float) -> int:
    level = x[i] - prom
    below_l = np.flatnonzero(x[:i] < level)
    below_r = np.flatnonzero(x[i + 1:] < level)
    left = below_l[-1] if len(below_l) else 0
    right = i + 1 + below_r[0] if len(below_r) else len(x) - 1
    return int(right - left)


def select_by_distance(indices, heights, min_distance: int) -> list[int]:
    """Keep the tallest peaks so that kept indices differ by more than min_distance.

    Ties in height go to the earlier index.
    """
    order = sorted(range(len(indices)), key=lambda k: (-heights[k], indices[k]))
    kept: list[int] = []
    for k in order:
        i = indices[k]
        if all(abs(i - j) > min_distance for j in kept):
            kept.append(i)
    return sorted(kept)


def detect_peaks(signal, min_height=None, min_prominence=None, min_distance=0) -> list[Peak]:
    """Find significant peaks in ``signal``.

    A peak is a strict local maximum whose height exceeds ``min_height`` and
    whose prominence exceeds ``min_prominence`` (either may be None to skip the
    test). Survivors are then thinned so that any two kept peaks are more than
    ``min_distance`` samples apart, taller first.
    """
    x = np.asarray(signal, dtype=float)
    if len(x) < 3:
        raise ValueError("detect_peaks needs at least 3 samples")
    cands = []
    for i in local_maxima(x):
        if min_height is not None and not x[i] > min_height:
            continue
        p = prominence(x, i)
        if min_prominence is not None and not p > min_prominence:
            continue
        cands.append((int(i), p))
    if min_distance and min_distance > 0 and len(cands) > 1:
        kept = set(select_by_distance([c[0] for c in cands], [x[c[0]] for c in cands], min_distance))
        cands = [c for c in cands if c[0] in kept]
    return [Peak(i, float(x[i]), p, width(x, i, p)) for i, p in cands]
