"""Command-line entry points.

Subcommands: label (build diff/label PNGs + records from a pairs
manifest), eval (score detector outputs), sweep-tau (per-threshold size
statistics), split (balanced test selection), describe (fill description
text), serve (human review service), losses (loss kernels on serialized
arrays).  Exit codes: 0 success, 1 usage error, 2 fatal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FATAL = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="plain-text key = value config file")
    p.add_argument("--tau", type=float, help="difference threshold in (0, 1)")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--workers", type=int, help="parallel worker count")


def _load_cfg(args):
    from .config import load_config

    return load_config(
        path=getattr(args, "config", None),
        tau=getattr(args, "tau", None),
        seed=getattr(args, "seed", None),
        workers=getattr(args, "workers", None),
    )


def cmd_label(args) -> int:
    from .pipeline import parse_manifest, run_label_pipeline, write_records_if_changed
    from .pipeline import RECORDS_FILE

    cfg = _load_cfg(args)
    pairs = parse_manifest(args.manifest)
    out_dir = Path(args.out)
    summary = run_label_pipeline(pairs, cfg, out_dir, force=args.force)
    write_records_if_changed(summary.records, out_dir / RECORDS_FILE)
    retained = sum(r.retained for r in summary.records)
    print(
        f"labeled {len(summary.records)}/{len(pairs)} pairs"
        f" ({retained} retained, {len(summary.errors)} errors)"
    )
    for pair_id, msg in sorted(summary.errors.items()):
        print(f"  error {pair_id}: {msg}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluate import build_report
    from .records import read_records

    records = read_records(args.records)
    report, missing = build_report(records, args.pred_dir)
    if missing:
        print(f"missing predictions for {len(missing)} sample(s):", file=sys.stderr)
        for sample_id in missing:
            print(f"  {sample_id}", file=sys.stderr)
    payload = report.to_json()
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    print(report.table())
    print(payload)
    return EXIT_OK


def cmd_sweep_tau(args) -> int:
    from .labeling import diff_map, threshold_label
    from .pipeline import parse_manifest, pair_seed, quantize_16bit
    from .raster import load_image
    from .rectify import rectify_pair

    taus = [float(t) for t in args.taus.split(",")]
    if taus != sorted(taus):
        raise SystemExit(EXIT_USAGE)
    cfg = _load_cfg(args)
    pairs = parse_manifest(args.manifest)
    sizes: dict[float, list[int]] = {t: [] for t in taus}
    errors = 0
    for pair in pairs:
        try:
            orig = load_image(pair.original)
            gen = load_image(pair.tampered)
            rect_cfg = dataclasses.replace(
                cfg.rectify, seed=pair_seed(cfg.rectify.seed, pair.id)
            )
            aligned = rectify_pair(orig, gen, rect_cfg).aligned
            diff = quantize_16bit(diff_map(orig, aligned, cfg.diff_reduce))
        except Exception as exc:  # noqa: BLE001 - per-pair isolation
            logger.error("pair %s failed: %s", pair.id, exc)
            errors += 1
            continue
        for t in taus:
            sizes[t].append(threshold_label(diff, t).count())
    lines = ["tau\tn\ttotal\tmean\tmedian\tmin\tmax"]
    for t in taus:
        vals = sizes[t]
        if vals:
            arr = np.array(vals)
            lines.append(
                f"{t}\t{len(vals)}\t{arr.sum()}\t{arr.mean():.1f}"
                f"\t{np.median(arr):.1f}\t{arr.min()}\t{arr.max()}"
            )
        else:
            lines.append(f"{t}\t0\t0\t0\t0\t0\t0")
    table = "\n".join(lines)
    if args.out:
        Path(args.out).write_text(table + "\n", encoding="utf-8")
    print(table)
    if errors:
        print(f"{errors} pair(s) failed", file=sys.stderr)
    return EXIT_OK


def cmd_split(args) -> int:
    from .curation import SplitTargets, balanced_split
    from .records import read_records

    ratio = tuple(float(p) for p in args.ratio.split(":"))
    if len(ratio) != 3:
        raise SystemExit(EXIT_USAGE)
    targets = SplitTargets(size_ratio=ratio, per_class_cap=args.per_class_cap)
    records = [r for r in read_records(args.records) if r.retained]
    ids = balanced_split(records, targets, seed=args.seed or 0)
    out = Path(args.out)
    out.write_text("".join(i + "\n" for i in ids), encoding="utf-8")
    print(f"selected {len(ids)} of {len(records)} retained records -> {out}")
    return EXIT_OK


def cmd_describe(args) -> int:
    from .curation import describe_record
    from .records import read_records, write_records

    records = read_records(args.records)
    updated = [
        dataclasses.replace(rec, description=describe_record(rec)) for rec in records
    ]
    write_records(updated, args.out or args.records)
    print(f"described {len(updated)} records")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.records, scores_log=args.scores_log)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_losses(args) -> int:
    from . import losses

    data = np.load(args.arrays)
    weights = losses.LossWeights(
        lambda_sem=args.lambda_sem,
        lambda_bce=args.lambda_bce,
        lambda_dice=args.lambda_dice,
        lambda_text=args.lambda_text,
        lambda_cls=args.lambda_cls,
    )
    from .raster import BinaryLabel, FloatMap

    out: dict[str, float] = {}
    grads: dict[str, np.ndarray] = {}
    if "sem_logits" in data:
        res = losses.loss_sem(data["sem_logits"], data["sem_targets"])
        out["sem"], grads["sem"] = res.value, res.gradient
    if "bce_pred" in data:
        res = losses.loss_bce_pixel(
            FloatMap(data["bce_pred"]), BinaryLabel(data["bce_label"])
        )
        out["bce"], grads["bce"] = res.value, res.gradient
    if "dice_pred" in data:
        res = losses.loss_dice(
            FloatMap(data["dice_pred"]), BinaryLabel(data["dice_label"])
        )
        out["dice"], grads["dice"] = res.value, res.gradient
    if "text_logits" in data:
        res = losses.loss_text(data["text_logits"], data["text_targets"])
        out["text"], grads["text"] = res.value, res.gradient
    if "cls_logits" in data:
        res = losses.loss_cls(data["cls_logits"], data["cls_target"])
        out["cls"], grads["cls"] = res.value, res.gradient
    if set(out) == {"sem", "bce", "dice", "text", "cls"}:
        out["total"] = losses.loss_total(
            out["sem"], out["bce"], out["dice"], out["text"], out["cls"], weights
        )
    if args.grad_out:
        np.savez(args.grad_out, **grads)
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tamperlab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("label", parents=[], help="build labels from a pairs manifest")
    p.add_argument("manifest", help="TSV: original, tampered, [guide-mask], [key=value]")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true", help="recompute existing outputs")
    _add_common(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("eval", help="evaluate detector outputs against records")
    p.add_argument("pred_dir", help="directory of per-id prediction PNGs")
    p.add_argument("records", help="records.jsonl with ground-truth label paths")
    p.add_argument("--out", help="write the report JSON here")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-tau", help="tampered-size statistics per threshold")
    p.add_argument("manifest")
    p.add_argument("--taus", required=True, help="ascending comma-separated thresholds")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_sweep_tau)

    p = sub.add_parser("split", help="balanced test split over retained records")
    p.add_argument("records")
    p.add_argument("--out", required=True, help="output id list file")
    p.add_argument("--ratio", default="4:3:3", help="small:medium:large ratio")
    p.add_argument("--per-class-cap", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("describe", help="fill template descriptions into records")
    p.add_argument("records")
    p.add_argument("--out", help="write here instead of in place")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("serve", help="run the human review service")
    p.add_argument("records")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--scores-log", help="append-only score log path")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("losses", help="evaluate loss kernels on an .npz of arrays")
    p.add_argument("arrays", help=".npz with e.g. sem_logits/sem_targets, bce_pred/bce_label")
    p.add_argument("--grad-out", help="write gradients to this .npz")
    p.add_argument("--lambda-sem", type=float, default=0.5)
    p.add_argument("--lambda-bce", type=float, default=1.0)
    p.add_argument("--lambda-dice", type=float, default=1.0)
    p.add_argument("--lambda-text", type=float, default=3.0)
    p.add_argument("--lambda-cls", type=float, default=1.0)
    p.set_defaults(func=cmd_losses)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (FileNotFoundError, ValueError) as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except Exception as exc:  # noqa: BLE001 - last-resort fatal handler
        logger.exception("unhandled failure")
        print(f"fatal: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
