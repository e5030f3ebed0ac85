import hashlib
import json

import numpy as np
import pytest

from acoustic_landmarks import synth
from acoustic_landmarks.analysis import MatrixDump, save_matrix_dump
from acoustic_landmarks.audio_io import write_wav
from acoustic_landmarks.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def wav_dir(tmp_path):
    d = tmp_path / "audio"
    d.mkdir()
    for name, fx in [("300", synth.glottal_fixture()), ("301", synth.two_tone_fixture()),
                     ("302", synth.burst_fixture(False))]:
        write_wav(d / f"{name}_AUDIO.wav", fx.audio)
    return d


def _transcript(path, n_turns, seed):
    rng = np.random.default_rng(seed)
    lines = ["start_time\tstop_time\tspeaker\tvalue"]
    t = 0.0
    for k in range(n_turns):
        dur = float(rng.uniform(0.1, 0.3))
        who = "Participant" if k % 2 else "Ellie"
        lines.append(f"{t:.3f}\t{t + dur:.3f}\t{who}\tturn {k}")
        t += dur + 0.01
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture
def corpus(tmp_path):
    d = tmp_path / "transcripts"
    d.mkdir()
    ids = ["300", "301", "302", "303"]
    for k, id_ in enumerate(ids):
        _transcript(d / f"{id_}_TRANSCRIPT.csv", 6 + k, k)
    labels = tmp_path / "labels.csv"
    labels.write_text("id,label\n300,1\n301,0\n302,0\n303,0\n")
    return d, labels


def test_extract_empty_dir(tmp_path, caplog):
    (tmp_path / "empty").mkdir()
    out = tmp_path / "lm.jsonl"
    assert main(["extract", "--audio", str(tmp_path / "empty"), "--out", str(out)]) == EXIT_OK
    assert out.read_text() == ""
    assert "no .wav files" in caplog.text


def test_extract_three_files(wav_dir, tmp_path):
    out = tmp_path / "lm.jsonl"
    assert main(["extract", "--audio", str(wav_dir), "--out", str(out)]) == EXIT_OK
    recs = [json.loads(line) for line in out.read_text().splitlines()]
    assert [r["id"] for r in recs] == ["300", "301", "302"]
    assert recs[0]["token_string"].split().count("g+") == 1


def test_extract_rerun_and_jobs_are_byte_identical(wav_dir, tmp_path):
    outs = [tmp_path / f"lm{k}.jsonl" for k in range(3)]
    assert main(["extract", "--audio", str(wav_dir), "--out", str(outs[0])]) == EXIT_OK
    assert main(["extract", "--audio", str(wav_dir), "--out", str(outs[1])]) == EXIT_OK
    assert main(["extract", "--audio", str(wav_dir), "--out", str(outs[2]), "--jobs", "2"]) == EXIT_OK
    assert _sha(outs[0]) == _sha(outs[1]) == _sha(outs[2])


def test_extract_bad_file(wav_dir, tmp_path):
    (wav_dir / "999.wav").write_bytes(b"garbage")
    out = tmp_path / "lm.jsonl"
    assert main(["extract", "--audio", str(wav_dir), "--out", str(out)]) == EXIT_DATA
    assert main(["extract", "--audio", str(wav_dir), "--out", str(out), "--keep-going"]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 3


def test_extract_with_transcripts(tmp_path):
    adir = tmp_path / "a"
    adir.mkdir()
    write_wav(adir / "300_AUDIO.wav", synth.glottal_fixture().audio)
    tdir = tmp_path / "t"
    tdir.mkdir()
    (tdir / "300_TRANSCRIPT.csv").write_text(
        "start_time\tstop_time\tspeaker\tvalue\n0.0\t0.2\tEllie\thi\n0.2\t1.4\tParticipant\tyes\n")
    out = tmp_path / "lm.jsonl"
    assert main(["extract", "--audio", str(adir), "--transcripts", str(tdir), "--out", str(out)]) == EXIT_OK
    (rec,) = [json.loads(line) for line in out.read_text().splitlines()]
    assert [u["index"] for u in rec["utterances"]] == [1]
    assert rec["token_string"].split()[0] == "g+"


def test_tokenize(tmp_path):
    inp = tmp_path / "lm.jsonl"
    inp.write_text(json.dumps({"id": "a", "token_string": "g+ p- s+ p+ p+ p- g- b-"}) + "\n"
                   + json.dumps({"id": "b", "token_string": "g+"}) + "\n")
    out, vocab = tmp_path / "tok.jsonl", tmp_path / "vocab.txt"
    assert main(["tokenize", "--in", str(inp), "--out", str(out), "--vocab", str(vocab)]) == EXIT_OK
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert rows[0]["tokens"] == "(g+p-) (s+p+) (p+p-) (g-b-)"
    assert rows[1]["tokens"] == "(g+)"
    assert vocab.read_text() == "(g+p-)\t1\n(s+p+)\t1\n(p+p-)\t1\n(g-b-)\t1\n(g+)\t1\n"


def test_tokenize_parse_failure(tmp_path):
    inp = tmp_path / "lm.jsonl"
    inp.write_text(json.dumps({"id": "a", "token_string": "zz"}) + "\n")
    assert main(["tokenize", "--in", str(inp), "--out", str(tmp_path / "o")]) == EXIT_USAGE
    inp.write_text("{not json\n")
    assert main(["tokenize", "--in", str(inp), "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_augment_counts_and_hash(corpus, tmp_path):
    d, labels = corpus
    outs = [tmp_path / f"subs{k}.jsonl" for k in range(2)]
    for out in outs:
        assert main(["augment", "--dialogues", str(d), "--labels", str(labels), "--m-plus", "9",
                     "--out", str(out), "--seed", "4"]) == EXIT_OK
    assert _sha(outs[0]) == _sha(outs[1])
    rows = [json.loads(line) for line in outs[0].read_text().splitlines()]
    assert sum(r["label"] == "depressed" for r in rows) == 9
    assert sum(r["label"] == "healthy" for r in rows) == 3 * 3
    man = json.loads((tmp_path / "subs0.jsonl.manifest.json").read_text())
    assert man["m_minus"] == 3 and man["config"]["rng_seed"] == 4


def test_augment_short_dialogue(corpus, tmp_path):
    d, labels = corpus
    (d / "304_TRANSCRIPT.csv").write_text("start_time\tstop_time\tspeaker\tvalue\n0\t1\tParticipant\tonly\n")
    labels.write_text(labels.read_text() + "304,1\n")
    assert main(["augment", "--dialogues", str(d), "--labels", str(labels),
                 "--out", str(tmp_path / "s.jsonl")]) == EXIT_DATA


def _emit(tmp_path, d, *extra):
    subs = tmp_path / "subs.jsonl"
    subs.write_text(json.dumps({"id": "300_00000", "parent_id": "300", "start_idx": 0, "end_idx": 3,
                                "label": "depressed"}) + "\n")
    out = tmp_path / "rec.jsonl"
    code = main(["emit", "--subdialogues", str(subs), "--dialogues", str(d), "--out", str(out), *extra])
    return code, out


def test_emit_hint_matches_golden(corpus, tmp_path, golden):
    d, _ = corpus
    tok = tmp_path / "tok.jsonl"
    tok.write_text(json.dumps({"id": "300", "tokens": "(g+p-)"}) + "\n")
    code, out = _emit(tmp_path, d, "--template", "hint", "--tokens", str(tok))
    assert code == EXIT_OK
    (rec,) = [json.loads(line) for line in out.read_text().splitlines()]
    transcript = "turn 1\nturn 3"
    expected = golden("hint_depressed.txt").replace("{transcript}", transcript).replace("{landmark}", "(g+p-)")
    assert rec["prompt"] + rec["response"] == expected
    assert rec["kind"] == "hint_depressed"


@pytest.mark.parametrize("mode", ["text", "landmark", "multimodal"])
def test_emit_detect_matches_golden(corpus, tmp_path, golden, mode):
    d, _ = corpus
    code, out = _emit(tmp_path, d, "--template", "detect", "--mode", mode, "--training")
    assert code == EXIT_OK
    (rec,) = [json.loads(line) for line in out.read_text().splitlines()]
    expected = golden(f"detect_{mode}.txt").replace("{transcript}", "turn 1\nturn 3").replace("{landmarks}", "")
    assert rec["prompt"] == expected and rec["response"] == "depression"


def test_emit_empty_and_bad_mode(corpus, tmp_path):
    d, _ = corpus
    subs = tmp_path / "empty.jsonl"
    subs.write_text("")
    out = tmp_path / "rec.jsonl"
    assert main(["emit", "--subdialogues", str(subs), "--dialogues", str(d), "--template", "detect",
                 "--out", str(out)]) == EXIT_OK
    assert out.read_text() == ""
    with pytest.raises(SystemExit) as exc:
        main(["emit", "--subdialogues", str(subs), "--dialogues", str(d), "--template", "detect",
              "--mode", "audio", "--out", str(out)])
    assert exc.value.code == EXIT_USAGE


def test_analyze(tmp_path, capsys):
    ms = [MatrixDump(n, np.full((2, 3), s)) for n, s in [("a", 1.0), ("b", 0.5), ("c", 0.1)]]
    save_matrix_dump(ms, tmp_path / "m.json")
    out = tmp_path / "contrib.csv"
    assert main(["analyze", "--matrices", str(tmp_path / "m.json"), "--top", "2", "--bottom", "2",
                 "--out", str(out)]) == EXIT_OK
    printed = capsys.readouterr().out.splitlines()
    assert printed[0].split()[1:] == ["a=1", "b=0.5"]
    assert printed[1].split()[1:] == ["c=0.1", "b=0.5"]
    assert out.read_text().splitlines()[1:] == ["a,1.0,1", "b,0.5,2", "c,0.10000000149011612,3"]


def test_score(tmp_path, capsys):
    pred = tmp_path / "pred.csv"
    pred.write_text("id,model_1,model_2,model_3\na,1,1,0\nb,1,0,1\nc,0,0,0\nd,1,1,1\n")
    truth = tmp_path / "truth.csv"
    truth.write_text("id,label\na,1\nb,1\nc,1\nd,0\n")
    out = tmp_path / "vote.csv"
    assert main(["score", "--pred", str(pred), "--truth", str(truth), "--ensemble", "--out", str(out)]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[-1] == f"vote\tF1={2 / 3:.6f}"
    assert [line.rsplit(",", 1)[1] for line in out.read_text().splitlines()[1:]] == ["1", "1", "0", "1"]
    pred.write_text("id,model_1,model_2\na,1,0\n")
    assert main(["score", "--pred", str(pred), "--ensemble"]) == EXIT_DATA


def test_config_file(corpus, tmp_path):
    d, labels = corpus
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# augmentation\nm-plus = 2\neps_low = 0.6\n")
    out = tmp_path / "s.jsonl"
    assert main(["augment", "--dialogues", str(d), "--labels", str(labels), "--out", str(out),
                 "--config", str(cfg)]) == EXIT_OK
    assert sum(1 for _ in out.read_text().splitlines()) == 2 + 3 * 1
    # an explicit flag wins over the file
    assert main(["augment", "--dialogues", str(d), "--labels", str(labels), "--out", str(out),
                 "--config", str(cfg), "--m-plus", "3"]) == EXIT_OK
    assert sum(1 for _ in out.read_text().splitlines()) == 3 + 3 * 1
    cfg.write_text("bogus = 1\n")
    assert main(["augment", "--dialogues", str(d), "--labels", str(labels), "--out", str(out),
                 "--config", str(cfg)]) == EXIT_USAGE
