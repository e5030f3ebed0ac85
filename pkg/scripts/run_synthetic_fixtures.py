"""Run the detector over every synthetic fixture and report hits, misses and timing errors.

    python3 scripts/run_synthetic_fixtures.py [--csv out.csv] [--bands-dir dir]
"""

import argparse
import csv
import sys
import time
from pathlib import Path

from acoustic_landmarks import synth
from acoustic_landmarks.bands import write_band_csv
from acoustic_landmarks.landmarks import DetectorConfig, run_detectors


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--csv", help="write one row per expected landmark")
    ap.add_argument("--bands-dir", help="dump per-fixture band energies (dB) here")
    ap.add_argument("--coarse-db", type=float, default=DetectorConfig.coarse_threshold_db)
    ap.add_argument("--fine-db", type=float, default=DetectorConfig.fine_threshold_db)
    args = ap.parse_args(argv)
    cfg = DetectorConfig(coarse_threshold_db=args.coarse_db, fine_threshold_db=args.fine_db)

    rows, all_ok = [], True
    for fx in synth.all_fixtures():
        t0 = time.perf_counter()
        det = run_detectors(fx.audio, cfg)
        took = time.perf_counter() - t0
        got = sorted(det.all(), key=lambda lm: lm.sort_key())
        expected = sorted(s for s, ts in fx.truth.items() for _ in ts)
        ok = sorted(lm.symbol for lm in got) == expected
        all_ok &= ok
        print(f"{'ok ' if ok else 'BAD'} {fx.name:<22} {took * 1000:6.1f} ms  "
              + " ".join(f"{lm.symbol}@{lm.time_s:.3f}" for lm in got))
        for sym, ts in sorted(fx.truth.items()):
            found = sorted(lm.time_s for lm in got if lm.symbol == sym)
            for k, t in enumerate(sorted(ts)):
                err = found[k] - t if k < len(found) else float("nan")
                rows.append({"fixture": fx.name, "symbol": sym, "true_s": t, "error_ms": round(err * 1000, 2)})
        if args.bands_dir:
            Path(args.bands_dir).mkdir(parents=True, exist_ok=True)
            write_band_csv(det.analysis.track, Path(args.bands_dir) / f"{fx.name}.csv")

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
