"""Synthetic signals with known landmark ground truth.

Every fixture sits on a low-level white-noise background rather than
digital zero: at the silence floor any spectral leakage would register as
a huge dB jump in every band.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .audio_io import CANONICAL_RATE, AudioBuffer

BACKGROUND_RMS = 1e-3


@dataclass
class Fixture:
    name: str
    audio: AudioBuffer
    # landmark symbol -> list of true event times (s)
    truth: dict[str, list[float]] = field(default_factory=dict)

    @property
    def expected_kinds(self) -> list[str]:
        return sorted(self.truth)


def silence(duration: float, rate: int = CANONICAL_RATE) -> AudioBuffer:
    return AudioBuffer(np.zeros(int(round(duration * rate))), rate)


def sine(freq: float, duration: float, amp: float = 0.5, rate: int = CANONICAL_RATE, phase: float = 0.0) -> np.ndarray:
    t = np.arange(int(round(duration * rate))) / rate
    return amp * np.sin(2 * np.pi * freq * t + phase)


def background(n: int, rng: np.random.Generator, rms: float = BACKGROUND_RMS) -> np.ndarray:
    return rms * rng.standard_normal(n)


def envelope(n: int, start: int, stop: int, ramp: int) -> np.ndarray:
    """0/1 gate over [start, stop) with raised-cosine ramps of ``ramp`` samples."""
    env = np.zeros(n)
    env[start:stop] = 1.0
    if ramp > 0:
        r = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp) / ramp)
        lo = min(ramp, stop - start)
        env[start:start + lo] = r[:lo]
        env[max(start, stop - ramp):stop] = r[::-1][-(stop - max(start, stop - ramp)):]
    return env


def bandpass(x: np.ndarray, lo: float, hi: float, rate: int = CANONICAL_RATE, order: int = 8) -> np.ndarray:
    nyq = rate / 2
    if hi >= nyq:
        sos = butter(order, lo / nyq, btype="highpass", output="sos")
    else:
        sos = butter(order, [lo / nyq, hi / nyq], btype="bandpass", output="sos")
    return sosfiltfilt(sos, x)


def _idx(t: float, rate: int) -> int:
    return int(round(t * rate))


def tone_burst(freq, start, stop, total, amp=0.3, ramp_s=0.010, rate=CANONICAL_RATE) -> np.ndarray:
    n = _idx(total, rate)
    t = np.arange(n) / rate
    return amp * np.sin(2 * np.pi * freq * t) * envelope(n, _idx(start, rate), _idx(stop, rate), _idx(ramp_s, rate))


def noise_burst(lo, hi, start, stop, total, rms=0.05, ramp_s=0.002, rate=CANONICAL_RATE, seed=1) -> np.ndarray:
    """Band-limited Gaussian noise gated on [start, stop).

    The gate is applied before filtering so the edge splatter is removed from
    the bands the noise is not meant to excite.
    """
    n = _idx(total, rate)
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal(n) * envelope(n, _idx(start, rate), _idx(stop, rate), _idx(ramp_s, rate))
    y = bandpass(raw, lo, hi, rate)
    seg = y[_idx(start, rate):_idx(stop, rate)]
    return y * (rms / np.sqrt(np.mean(seg**2)))


def _mix(*parts, seed=0, rate=CANONICAL_RATE) -> AudioBuffer:
    n = len(parts[0])
    x = background(n, np.random.default_rng(seed)) + sum(parts)
    return AudioBuffer(np.clip(x, -1, 1), rate)


def glottal_fixture(onset=0.5, offset=1.0, total=1.5, amp=0.3, freq=150.0, seed=0) -> Fixture:
    """A 150 Hz tone with 10 ms raised-cosine ramps: one voiced region."""
    audio = _mix(tone_burst(freq, onset, offset, total, amp), seed=seed)
    truth = {"g+": [onset], "g-": [offset], "p+": [onset], "p-": [offset]}
    return Fixture("glottal", audio, truth)


def weak_glottal_fixture(rise_db=3.0, total=1.5, seed=0) -> Fixture:
    """Same tone, scaled so band 1 rises only ``rise_db`` over the background."""
    probe = _mix(np.zeros(_idx(total, CANONICAL_RATE)), seed=seed)
    from .bands import compute_band_energies

    base = float(np.median(compute_band_energies(probe).power[0]))
    # mean band-1 power of the unit-amplitude tone under the same framing
    unit = compute_band_energies(AudioBuffer(sine(150.0, 0.3, amp=1.0), CANONICAL_RATE)).power[0]
    target = base * (10 ** (rise_db / 10) - 1)
    amp = float(np.sqrt(target / np.mean(unit)))
    audio = _mix(tone_burst(150.0, 0.5, 1.0, total, amp), seed=seed)
    return Fixture("weak_glottal", audio, {})


def periodicity_fixture(onset=0.5, offset=1.5, total=2.0, amp=0.3, noise_rms=0.01, seed=0) -> Fixture:
    """1 s of 150 Hz tone flanked by 0.5 s of low-level white noise."""
    n = _idx(total, CANONICAL_RATE)
    rng = np.random.default_rng(seed + 100)
    noise = noise_rms * rng.standard_normal(n)
    audio = _mix(tone_burst(150.0, onset, offset, total, amp), noise, seed=seed)
    truth = {"g+": [onset], "g-": [offset], "p+": [onset], "p-": [offset]}
    return Fixture("periodicity", audio, truth)


def two_tone_fixture(total=2.0, seed=0) -> Fixture:
    bursts = [(0.3, 0.8), (1.2, 1.7)]
    x = sum(tone_burst(150.0, a, b, total) for a, b in bursts)
    audio = _mix(x, seed=seed)
    truth = {
        "g+": [a for a, _ in bursts], "g-": [b for _, b in bursts],
        "p+": [a for a, _ in bursts], "p-": [b for _, b in bursts],
    }
    return Fixture("two_tones", audio, truth)


# The burst fixtures carry one voiced tone so the file has a voicing
# segmentation; the burst lands either outside or inside it.
VOICED = (0.3, 0.9)
BURST_OUT = (1.2, 1.4)
BURST_IN = (0.5, 0.7)
TOTAL = 1.7


def _voiced_tone(total=TOTAL):
    return tone_burst(150.0, VOICED[0], VOICED[1], total)


def _voicing_truth():
    return {"g+": [VOICED[0]], "g-": [VOICED[1]], "p+": [VOICED[0]], "p-": [VOICED[1]]}


def excited_bands(lo: float, hi: float) -> list[int]:
    """1-based indices of bands 2-6 that overlap [lo, hi] Hz."""
    from .bands import BAND_EDGES

    return [b + 1 for b, (blo, bhi) in enumerate(BAND_EDGES) if b > 0 and blo < hi and bhi > lo]


def burst_fixture(inside_voicing=False, lo=800.0, hi=8000.0, seed=0) -> Fixture:
    """A 200 ms band-limited noise burst next to (or inside) a voiced tone.

    The default 0.8-8 kHz burst excites all of bands 2-6. A burst starting at
    2.4 kHz is the frication noise with no mid-band tone to hand over from.
    """
    a, b = BURST_IN if inside_voicing else BURST_OUT
    x = _voiced_tone() + noise_burst(lo, hi, a, b, TOTAL, seed=seed + 7)
    truth = _voicing_truth()
    if len(excited_bands(lo, hi)) >= 3:
        kind = "s" if inside_voicing else "b"
        truth.update({f"{kind}+": [a], f"{kind}-": [b]})
    name = f"burst_{'in' if inside_voicing else 'out'}_{int(lo)}_{int(hi)}"
    return Fixture(name, _mix(x, seed=seed), truth)


# The tone sits where bands 2 and 3 overlap so both lose power at the
# hand-over; the noise starts above band 3 so band 3 does not gain any.
FRIC_TONE = 1350.0
FRIC_LO = 2400.0


def frication_fixture(inside_voicing=False, seed=0) -> Fixture:
    """Mid-frequency tone handing over to high-band noise and back.

    Tone on [t0, t1), noise on [t1, t2), tone again on [t2, t3). The first
    hand-over is a frication onset, the second an offset.
    """
    if inside_voicing:
        t0, t1, t2, t3, total = 0.45, 0.6, 0.8, 0.95, 1.4
        voiced = (0.3, 1.1)
    else:
        t0, t1, t2, t3, total = 0.35, 0.6, 0.8, 1.05, 1.4
        voiced = None
    x = noise_burst(FRIC_LO, 8000.0, t1, t2, total, rms=0.05, seed=seed + 11)
    x = x + sum(tone_burst(FRIC_TONE, a, b, total, amp=0.2, ramp_s=0.002) for a, b in ((t0, t1), (t2, t3)))
    if voiced:
        x = x + tone_burst(150.0, voiced[0], voiced[1], total)
        truth = {"g+": [voiced[0]], "g-": [voiced[1]], "p+": [voiced[0]], "p-": [voiced[1]],
                 "v+": [t1], "v-": [t2]}
    else:
        truth = {"f+": [t1], "f-": [t2], "p+": [t0, t2], "p-": [t1, t3]}
    name = f"frication_{'in' if inside_voicing else 'out'}"
    return Fixture(name, _mix(x, seed=seed), truth)


def prepend_quiet(audio: AudioBuffer, seconds: float, seed: int = 99, probe_s: float = 0.05) -> AudioBuffer:
    """Prefix ``seconds`` of noise at the RMS of the file's own opening ``probe_s``.

    Digital zero would make the junction itself an onset; matching the
    existing floor leaves the signal content unchanged.
    """
    rate = audio.sample_rate
    head = audio.samples[: _idx(probe_s, rate)]
    rms = float(np.sqrt(np.mean(head**2))) if len(head) else 0.0
    pre = background(_idx(seconds, rate), np.random.default_rng(seed), rms)
    return AudioBuffer(np.concatenate([pre, audio.samples]), rate)


def all_fixtures() -> list[Fixture]:
    return [
        glottal_fixture(),
        periodicity_fixture(),
        two_tone_fixture(),
        burst_fixture(False),
        burst_fixture(True),
        burst_fixture(False, lo=5500.0, hi=8000.0),
        burst_fixture(False, lo=FRIC_LO, hi=8000.0),
        burst_fixture(True, lo=FRIC_LO, hi=8000.0),
        burst_fixture(True, lo=5500.0, hi=8000.0),
        frication_fixture(False),
        frication_fixture(True),
    ]
