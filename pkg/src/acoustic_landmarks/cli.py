"""Command-line entry point: ``landmarks <subcommand> ...``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, augment, prompts
from .audio_io import (
    AudioError,
    Label,
    TranscriptError,
    dialogue_id_from_path,
    load_audio,
    read_labels,
    read_transcript,
)
from .bands import AudioTooShort
from .landmarks import DetectorConfig, extract_dialogue_landmarks, extract_landmarks
from .tokens import UnknownToken, build_vocabulary, merge_bigrams, render_token_string

log = logging.getLogger("acoustic_landmarks")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- config file -------------------------------------------------------------------

def read_config(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys use flag spelling or dest names."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value.strip("\"'")
    return out


def apply_config(parser: argparse.ArgumentParser, values: dict[str, str]) -> None:
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, raw in values.items():
        act = actions.get(key)
        if act is None:
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(act, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = act.type(raw) if act.type else raw
    parser.set_defaults(**defaults)


# -- subcommand: extract --------------------------------------------------------------

def detector_config(args) -> DetectorConfig:
    return DetectorConfig(
        coarse_threshold_db=args.coarse_db,
        fine_threshold_db=args.fine_db,
        fv_threshold_db=args.fv_db,
        fv_low_drop_db=args.fv_low_drop_db,
        coincidence_ms=args.coincidence_ms,
        peak_min_distance_ms=args.min_distance_ms,
        p_binarize_theta=args.p_theta,
    )


def _extract_one(job):
    path, transcript, cfg = job
    audio = load_audio(path, cfg.sample_rate)
    rec = {"id": dialogue_id_from_path(path)}
    if transcript is None:
        seq = extract_landmarks(audio, cfg, rec["id"])
        rec["landmarks"] = seq.to_records()
        rec["token_string"] = seq.token_string()
        return rec
    dlg = read_transcript(transcript, rec["id"])
    per_utt = extract_dialogue_landmarks(audio, dlg, cfg)
    all_lms = [lm for seq in per_utt.values() for lm in seq]
    rec["landmarks"] = [{"t": round(lm.time_s, 6), "lm": lm.symbol} for lm in all_lms]
    rec["token_string"] = " ".join(lm.symbol for lm in all_lms)
    rec["utterances"] = [{"index": i, "landmarks": seq.token_string()} for i, seq in sorted(per_utt.items())]
    return rec


def _find_transcript(tdir: Path, stem_id: str) -> Path | None:
    for pat in (f"{stem_id}_TRANSCRIPT.csv", f"{stem_id}.csv", f"{stem_id}.tsv", f"{stem_id}_TRANSCRIPT.tsv"):
        if (tdir / pat).exists():
            return tdir / pat
    return None


def cmd_extract(args) -> int:
    src = Path(args.audio)
    if not src.exists():
        raise UsageError(f"{src} does not exist")
    files = sorted(src.glob("*.wav")) if src.is_dir() else [src]
    if not files:
        log.warning("no .wav files under %s", src)
    cfg = detector_config(args)
    tdir = Path(args.transcripts) if args.transcripts else None
    jobs = []
    for f in files:
        t = _find_transcript(tdir, dialogue_id_from_path(f)) if tdir else None
        if tdir and t is None:
            log.warning("%s: no transcript found, using the whole file", f.name)
        jobs.append((f, t, cfg))

    records, failed = [], 0
    for (f, _, _), result in zip(jobs, _map(_safe_extract, jobs, args.jobs)):
        if isinstance(result, str):
            failed += 1
            log.error("%s: %s", f.name, result)
            if not args.keep_going:
                raise DataError(f"{f.name}: {result}")
            continue
        records.append(result)
    _write_jsonl(args.out, records)
    log.info("wrote %d record(s) to %s (%d failed)", len(records), args.out, failed)
    return EXIT_OK


def _safe_extract(job):
    try:
        return _extract_one(job)
    except (AudioError, AudioTooShort, TranscriptError, ValueError) as exc:
        return f"{type(exc).__name__}: {exc}"


def _map(fn, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _write_jsonl(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def _read_jsonl(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{n}: {exc}") from None
    return out


# -- subcommand: tokenize --------------------------------------------------------------

def cmd_tokenize(args) -> int:
    # an unreadable landmark file is reported like a bad flag (exit 1)
    try:
        records = _read_jsonl(args.inp)
    except DataError as exc:
        raise UsageError(str(exc)) from None
    out, corpus = [], []
    try:
        for rec in records:
            tokens = merge_bigrams(rec.get("token_string", "").split())
            corpus.append(tokens)
            row = {"id": rec["id"], "tokens": render_token_string(tokens)}
            if "utterances" in rec:
                row["utterances"] = [
                    {"index": u["index"], "landmarks": u["landmarks"],
                     "tokens": render_token_string(merge_bigrams(u["landmarks"].split()))}
                    for u in rec["utterances"]
                ]
            out.append(row)
    except (UnknownToken, KeyError) as exc:
        raise UsageError(f"{args.inp}: cannot parse {exc}") from None
    _write_jsonl(args.out, out)
    if args.vocab:
        build_vocabulary(corpus).save(args.vocab)
    return EXIT_OK


# -- subcommand: augment ---------------------------------------------------------------

def load_dialogues(ddir, labels=None) -> list:
    ddir = Path(ddir)
    if not ddir.is_dir():
        raise UsageError(f"{ddir} is not a directory")
    files = sorted(p for p in ddir.iterdir() if p.suffix.lower() in (".csv", ".tsv"))
    dialogues = []
    for f in files:
        dlg = read_transcript(f)
        if labels is not None:
            dlg.label = labels.get(dlg.id, Label.UNLABELED)
        dialogues.append(dlg)
    return dialogues


def cmd_augment(args) -> int:
    try:
        cfg = augment.AugmentConfig(args.m_plus, args.eps_low, args.eps_high, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    labels = read_labels(args.labels)
    dialogues = [d for d in load_dialogues(args.dialogues, labels) if d.id in labels]
    if not dialogues:
        log.warning("no labelled dialogues found")
    subs = augment.shuffle_subdialogues(dialogues, cfg) if dialogues else []
    augment.write_subdialogues(subs, args.out)
    man = Path(args.manifest) if args.manifest else Path(str(args.out) + ".manifest.json")
    if dialogues:
        man.write_text(json.dumps(augment.manifest(cfg, dialogues), indent=1, sort_keys=True) + "\n")
    log.info("wrote %d sub-dialogue(s)", len(subs))
    return EXIT_OK


# -- subcommand: emit -------------------------------------------------------------------

def cmd_emit(args) -> int:
    subs = augment.read_subdialogues(args.subdialogues)
    dialogues = {d.id: d for d in load_dialogues(args.dialogues)}
    tokens = {r["id"]: r for r in _read_jsonl(args.tokens)} if args.tokens else {}
    records = []
    for sub in subs:
        parent = dialogues.get(sub.parent_id)
        if parent is None:
            raise DataError(f"no transcript for dialogue {sub.parent_id}")
        if sub.end_idx >= len(parent):
            raise DataError(f"{sub.id}: slice runs past the end of {sub.parent_id}")
        transcript = prompts.subdialogue_transcript(sub, parent, args.transcript_style)
        tok = tokens.get(sub.parent_id)
        if tok is None:
            lm = ""
        elif "utterances" in tok:
            per_utt = {u["index"]: u["landmarks"].split() for u in tok["utterances"]}
            lm = prompts.subdialogue_landmarks(sub, per_utt)
        else:
            lm = tok["tokens"]
        if args.template == "hint":
            records.append(prompts.emit_hint_record(sub, transcript, lm))
        else:
            records.append(prompts.emit_detect_record(sub, transcript, lm, args.mode, args.training))
    if args.template == "hint":
        order = np.random.default_rng(args.seed).permutation(len(records))
        records = [records[i] for i in order]
    prompts.write_records(records, args.out)
    return EXIT_OK


# -- subcommands: analyze / score ----------------------------------------------------------

def cmd_analyze(args) -> int:
    ms = analysis.load_matrix_dump(args.matrices)
    if not ms:
        raise DataError("manifest lists no matrices")
    top_k, bottom_k = min(args.top, len(ms)), min(args.bottom, len(ms))
    top, bottom = analysis.rank_contributions(ms, top_k, bottom_k)
    analysis.write_contributions(analysis.rank_all(ms), args.out)
    print("top:", " ".join(f"{r.layer_name}={r.score:.6g}" for r in top))
    print("bottom:", " ".join(f"{r.layer_name}={r.score:.6g}" for r in bottom))
    return EXIT_OK


def cmd_score(args) -> int:
    p = analysis.read_predictions(args.pred, args.truth)
    vote = analysis.majority_vote(p) if args.ensemble else p.votes[0]
    if args.out:
        analysis.write_predictions(p, vote, args.out)
    if p.truth is not None:
        for k in range(p.votes.shape[0]):
            print(f"model_{k + 1}\tF1={analysis.f1_score(p.votes[k], p.truth):.6f}")
        if args.ensemble:
            print(f"vote\tF1={analysis.f1_score(vote, p.truth):.6f}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value file; explicit flags win")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--verbose", "-v", action="store_true")

    parser = _Parser(prog="landmarks", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = DetectorConfig()
    p = sub.add_parser("extract", parents=[common], help="audio -> landmark JSONL")
    p.add_argument("--audio", required=True, help="WAV file or directory of WAV files")
    p.add_argument("--out", required=True)
    p.add_argument("--transcripts", help="directory of transcripts; restricts extraction to participant turns")
    p.add_argument("--keep-going", action="store_true", help="skip files that fail instead of stopping")
    p.add_argument("--coarse-db", type=float, default=d.coarse_threshold_db)
    p.add_argument("--fine-db", type=float, default=d.fine_threshold_db)
    p.add_argument("--fv-db", type=float, default=d.fv_threshold_db)
    p.add_argument("--fv-low-drop-db", type=float, default=d.fv_low_drop_db)
    p.add_argument("--coincidence-ms", type=float, default=d.coincidence_ms)
    p.add_argument("--min-distance-ms", type=float, default=d.peak_min_distance_ms)
    p.add_argument("--p-theta", type=float, default=d.p_binarize_theta)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("tokenize", parents=[common], help="landmark JSONL -> bigram tokens + vocabulary")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--vocab")
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("augment", parents=[common], help="balanced sub-dialogue shuffling")
    p.add_argument("--dialogues", required=True, help="directory of transcripts")
    p.add_argument("--labels", required=True, help="id,label CSV (1 = depressed)")
    p.add_argument("--m-plus", type=int, default=1000)
    p.add_argument("--eps-low", type=float, default=0.5)
    p.add_argument("--eps-high", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("emit", parents=[common], help="sub-dialogues -> prompt records")
    p.add_argument("--subdialogues", required=True)
    p.add_argument("--dialogues", required=True, help="directory of transcripts")
    p.add_argument("--tokens", help="tokenize output; landmarks are empty without it")
    p.add_argument("--template", choices=("hint", "detect"), required=True)
    p.add_argument("--mode", choices=tuple(prompts.DETECT_TEMPLATES), default="multimodal")
    p.add_argument("--training", action="store_true", help="fill the response with the label word")
    p.add_argument("--transcript-style", choices=("participant", "tagged"), default="participant")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("analyze", parents=[common], help="rank adapter matrices by mean |entry|")
    p.add_argument("--matrices", required=True, help="JSON manifest of a matrix dump")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--bottom", type=int, default=10)
    p.add_argument("--out", default="contributions.csv")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("score", parents=[common], help="F1 per model and for the majority vote")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth")
    p.add_argument("--ensemble", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)
    return parser


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        try:
            apply_config(subparser, read_config(args.config))
        except (OSError, ValueError) as exc:
            raise UsageError(f"config {args.config}: {exc}") from None
        args = parser.parse_args(argv)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"landmarks: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (DataError, AudioError, TranscriptError, augment.AugmentError, UnknownToken,
            analysis.EvenEnsemble, analysis.LengthMismatch) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
