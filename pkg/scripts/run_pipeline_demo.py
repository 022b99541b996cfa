#!/usr/bin/env python3
"""End-to-end pipeline walkthrough on synthetic data.

Generates demo pairs, builds labels and records, fills descriptions,
sweeps tau, scores every sample as if reviewed, draws the balanced split,
and evaluates a perfect predictor against the fresh ground truth.
"""

import argparse
import json
import shutil
import subprocess
import sys
from pathlib import Path

HERE = Path(__file__).parent


def run(args):
    print("+", " ".join(str(a) for a in args))
    subprocess.run([str(a) for a in args], check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="demo_run")
    parser.add_argument("--n-pairs", type=int, default=6)
    parser.add_argument("--warp", action="store_true")
    args = parser.parse_args()

    work = Path(args.workdir)
    if work.exists():
        shutil.rmtree(work)
    data, out = work / "data", work / "out"

    gen_cmd = [
        sys.executable, HERE / "make_demo_pairs.py",
        "--out", data, "--n-pairs", str(args.n_pairs),
    ]
    if args.warp:
        gen_cmd.append("--warp")
    run(gen_cmd)

    run(["tamperlab", "label", data / "pairs.tsv", "--out", out, "--workers", "2"])
    records = out / "records.jsonl"
    run(["tamperlab", "describe", records])
    run(["tamperlab", "sweep-tau", data / "pairs.tsv", "--taus", "0.05,0.1,0.2"])

    # stand in for the human reviewers: accept everything
    from tamperlab.service import ReviewStore, ScoreSubmission

    store = ReviewStore(records)
    for rec_id in sorted(store._records):
        store.submit(ScoreSubmission(id=rec_id, score=5, reviewer="demo"))
    store._rewrite_records()
    print(f"scored {len(store._records)} records")

    run(["tamperlab", "split", records, "--out", work / "split_ids.txt"])

    # a perfect predictor: feed the ground-truth labels back as probabilities
    preds = work / "preds"
    preds.mkdir()
    from tamperlab.raster import FloatMap, load_image, save_float_map
    from tamperlab.records import read_records

    for rec in read_records(records):
        gt = load_image(rec.paths.pixel_label)
        save_float_map(FloatMap(gt.data[:, :, 0]), preds / f"{rec.id}.png")
        (preds / f"{rec.id}.scores.json").write_text(
            json.dumps({"classes": ["block", "other"], "scores": [0.9, 0.1]})
        )
    run(["tamperlab", "eval", preds, records, "--out", work / "report.json"])
    print("\ndemo artifacts in", work)


if __name__ == "__main__":
    main()
