"""Acoustic-landmark speech tokens and the corpus tooling built on them."""

from .audio_io import AudioBuffer, Dialogue, Label, Speaker, Utterance, read_transcript, read_wav, resample, write_wav
from .bands import BandEnergyTrack, FrameConfig, compute_band_energies, differentiate, smooth
from .landmarks import DetectorConfig, Landmark, LandmarkSequence, extract_landmarks
from .peaks import Peak, detect_peaks
from .tokens import BigramToken, Vocabulary, build_vocabulary, merge_bigrams

__all__ = [
    "AudioBuffer", "Dialogue", "Label", "Speaker", "Utterance", "read_transcript", "read_wav",
    "resample", "write_wav", "BandEnergyTrack", "FrameConfig", "compute_band_energies",
    "differentiate", "smooth", "DetectorConfig", "Landmark", "LandmarkSequence",
    "extract_landmarks", "Peak", "detect_peaks", "BigramToken", "Vocabulary",
    "build_vocabulary", "merge_bigrams",
]
