"""End-to-end run on a small synthetic corpus: extract, tokenize, augment, emit, score.

Each "dialogue" is a string of synthetic fixtures laid end to end, with a
transcript whose participant turns cover them. Labels are arbitrary; the
point is to exercise every subcommand on files shaped like the real corpus.

    python3 scripts/build_demo_corpus.py --work /tmp/demo
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from acoustic_landmarks import synth
from acoustic_landmarks.analysis import MatrixDump, save_matrix_dump
from acoustic_landmarks.audio_io import AudioBuffer, write_wav
from acoustic_landmarks.cli import main as cli


def make_dialogue(rng, n_turns):
    pieces = synth.all_fixtures()
    audio, rows, t = [], ["start_time\tstop_time\tspeaker\tvalue"], 0.0
    for k in range(n_turns):
        fx = pieces[int(rng.integers(len(pieces)))]
        x = fx.audio.samples
        dur = len(x) / fx.audio.sample_rate
        who = "Participant" if k % 2 else "Ellie"
        rows.append(f"{t:.4f}\t{t + dur:.4f}\t{who}\t{fx.name.replace('_', ' ')}")
        audio.append(x)
        t += dur
    return AudioBuffer(np.concatenate(audio), 16000), "\n".join(rows) + "\n"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--work", default="demo_corpus")
    ap.add_argument("--dialogues", type=int, default=6)
    ap.add_argument("--m-plus", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    work = Path(args.work)
    adir, tdir = work / "audio", work / "transcripts"
    adir.mkdir(parents=True, exist_ok=True)
    tdir.mkdir(exist_ok=True)
    rng = np.random.default_rng(args.seed)
    labels = ["id,label"]
    for k in range(args.dialogues):
        did = f"{400 + k}"
        audio, transcript = make_dialogue(rng, int(rng.integers(4, 9)))
        write_wav(adir / f"{did}_AUDIO.wav", audio)
        (tdir / f"{did}_TRANSCRIPT.csv").write_text(transcript)
        labels.append(f"{did},{1 if k % 3 == 0 else 0}")
    (work / "labels.csv").write_text("\n".join(labels) + "\n")

    seed = ["--seed", str(args.seed)]
    steps = [
        ["extract", "--audio", str(adir), "--transcripts", str(tdir), "--out", str(work / "landmarks.jsonl"),
         "--jobs", str(args.jobs)],
        ["tokenize", "--in", str(work / "landmarks.jsonl"), "--out", str(work / "tokens.jsonl"),
         "--vocab", str(work / "vocab.txt")],
        ["augment", "--dialogues", str(tdir), "--labels", str(work / "labels.csv"),
         "--m-plus", str(args.m_plus), "--out", str(work / "subdialogues.jsonl")] + seed,
        ["emit", "--subdialogues", str(work / "subdialogues.jsonl"), "--dialogues", str(tdir),
         "--tokens", str(work / "tokens.jsonl"), "--template", "hint", "--out", str(work / "hint.jsonl")] + seed,
        ["emit", "--subdialogues", str(work / "subdialogues.jsonl"), "--dialogues", str(tdir),
         "--tokens", str(work / "tokens.jsonl"), "--template", "detect", "--mode", "multimodal",
         "--training", "--out", str(work / "detect.jsonl")],
    ]

    # stand-ins for adapter weights and model outputs, to exercise the last two commands
    ms = [MatrixDump(f"layers.{k}.q_proj", rng.normal(scale=0.01 * (1 + k % 5), size=(8, 64))) for k in range(24)]
    save_matrix_dump(ms, work / "adapters.json")
    ids = [line.split(",")[0] for line in labels[1:]]
    truth = [int(line.split(",")[1]) for line in labels[1:]]
    votes = [[t if rng.random() < 0.8 else 1 - t for t in truth] for _ in range(3)]
    (work / "pred.csv").write_text("id,model_1,model_2,model_3\n" + "".join(
        f"{i},{votes[0][j]},{votes[1][j]},{votes[2][j]}\n" for j, i in enumerate(ids)))
    steps += [
        ["analyze", "--matrices", str(work / "adapters.json"), "--out", str(work / "contributions.csv")],
        ["score", "--pred", str(work / "pred.csv"), "--truth", str(work / "labels.csv"), "--ensemble",
         "--out", str(work / "vote.csv")],
    ]
    for step in steps:
        print("$ landmarks", step[0])
        code = cli(step)
        if code:
            print(f"{step[0]} exited with {code}", file=sys.stderr)
            return code
    print(f"outputs in {work}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
