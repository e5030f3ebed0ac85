import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.io import wavfile

from acoustic_landmarks.audio_io import (
    AudioBuffer, CorruptHeader, Dialogue, EmptyAudio, Label, MissingColumn, OverlapWarning, Speaker,
    UnparseableTimestamp, Utterance, dialogue_id_from_path, load_audio, read_labels, read_transcript,
    read_wav, resample, write_wav,
)
from acoustic_landmarks.synth import sine

HEADER = "start_time\tstop_time\tspeaker\tvalue\n"


def test_silence_round_trip(tmp_path):
    p = tmp_path / "s.wav"
    write_wav(p, AudioBuffer(np.zeros(1600), 16000))
    buf = read_wav(p)
    assert buf.sample_rate == 16000 and np.all(buf.samples == 0)


def test_sine_round_trip_within_one_lsb(tmp_path):
    x = sine(440.0, 0.1, amp=0.7)
    p = tmp_path / "t.wav"
    write_wav(p, AudioBuffer(x, 16000))
    assert np.max(np.abs(read_wav(p).samples - x)) <= 1 / 32767


def test_stereo_is_channel_mean(tmp_path):
    left = (sine(200.0, 0.05) * 32767).astype(np.int16)
    p = tmp_path / "st.wav"
    wavfile.write(p, 16000, np.stack([left, left], axis=1))
    mono = tmp_path / "mono.wav"
    wavfile.write(mono, 16000, left)
    assert np.array_equal(read_wav(p).samples, read_wav(mono).samples)


def test_uint8_and_float(tmp_path):
    p = tmp_path / "u8.wav"
    wavfile.write(p, 8000, np.array([128, 255, 0], dtype=np.uint8))
    assert read_wav(p).samples == pytest.approx([0.0, 127 / 128, -1.0])
    p = tmp_path / "f.wav"
    wavfile.write(p, 8000, np.array([0.5, 2.0], dtype=np.float32))
    assert read_wav(p).samples.tolist() == [0.5, 1.0]


def test_bad_files(tmp_path):
    p = tmp_path / "junk.wav"
    p.write_bytes(b"not a wave file at all")
    with pytest.raises(CorruptHeader):
        read_wav(p)
    p = tmp_path / "empty.wav"
    wavfile.write(p, 16000, np.zeros(0, dtype=np.int16))
    with pytest.raises(EmptyAudio):
        read_wav(p)


def test_resample_identity_and_length():
    buf = AudioBuffer(sine(300.0, 0.5, rate=44100), 44100)
    assert resample(buf, 44100) is buf
    out = resample(buf, 16000)
    assert len(out) == int(np.ceil(len(buf) * 16000 / 44100))


def test_resample_keeps_spectral_peak():
    out = resample(AudioBuffer(sine(1000.0, 1.0, rate=48000), 48000), 16000)
    spec = np.abs(np.fft.rfft(out.samples))
    freqs = np.fft.rfftfreq(len(out), 1 / 16000)
    assert abs(freqs[spec.argmax()] - 1000.0) <= 1.0


def test_load_audio_resamples(tmp_path):
    p = tmp_path / "a.wav"
    write_wav(p, AudioBuffer(sine(300.0, 0.2, rate=8000), 8000))
    assert load_audio(p).sample_rate == 16000


def test_transcript_empty_and_sorted(tmp_path):
    p = tmp_path / "300_TRANSCRIPT.csv"
    p.write_text(HEADER)
    d = read_transcript(p)
    assert d.id == "300" and len(d) == 0
    p.write_text(HEADER + "5.0\t6.0\tParticipant\tlater\n1.0\t2.0\tEllie\thi\n")
    d = read_transcript(p)
    assert [u.text for u in d.utterances] == ["hi", "later"]
    assert [u.speaker for u in d.utterances] == [Speaker.INTERVIEWER, Speaker.PARTICIPANT]


def test_transcript_comma_and_nonverbal(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("start_time,stop_time,speaker,value\n0,1,Participant,<laughter>\n")
    (u,) = read_transcript(p).utterances
    assert u.nonverbal


def test_transcript_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("start_time\tspeaker\tvalue\n")
    with pytest.raises(MissingColumn):
        read_transcript(p)
    p.write_text(HEADER + "2.0\t1.0\tParticipant\tx\n")
    with pytest.raises(UnparseableTimestamp, match="row 2"):
        read_transcript(p)
    p.write_text(HEADER + "abc\t1.0\tParticipant\tx\n")
    with pytest.raises(UnparseableTimestamp):
        read_transcript(p)


def test_overlap_warns_but_keeps(tmp_path):
    p = tmp_path / "o.csv"
    p.write_text(HEADER + "0\t2\tEllie\ta\n1\t3\tParticipant\tb\n")
    with pytest.warns(OverlapWarning):
        d = read_transcript(p)
    assert len(d) == 2


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0.01, 5)), max_size=20))
def test_dialogue_utterances_sorted(spans):
    utts = [Utterance(Speaker.PARTICIPANT, "x", s, s + d) for s, d in spans]
    d = Dialogue("d", utts)
    starts = [u.start_s for u in d.utterances]
    assert starts == sorted(starts)


def test_ids_and_labels(tmp_path):
    assert dialogue_id_from_path("/a/301_TRANSCRIPT.csv") == "301"
    assert dialogue_id_from_path("302_AUDIO.wav") == "302"
    p = tmp_path / "labels.csv"
    p.write_text("id,label\n301,1\n302,0\n")
    assert read_labels(p) == {"301": Label.DEPRESSED, "302": Label.HEALTHY}
    p.write_text("id,label\n301,2\n")
    with pytest.raises(ValueError):
        read_labels(p)


def test_buffer_slice_and_gain():
    buf = AudioBuffer(np.linspace(-0.5, 0.5, 16000), 16000)
    assert len(buf.slice(0.25, 0.5)) == 4000
    assert np.allclose(buf.scaled(0.5).samples, buf.samples * 0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert buf.duration == 1.0
