#!/usr/bin/env python3
"""Planted-burst recovery experiment: train on one synthetic stream, evaluate
precision/recall on a disjoint one, write the trained model and a metrics
report.

The defaults reproduce the acceptance-scale setup: 20 h streams at 100
background tweets/hour over a 40-word uniform vocabulary, 30 training and 50
evaluation bursts, detection stepping every 15 minutes.

  python scripts/planted_eval.py --workdir /tmp/planted \
      --model /tmp/planted/model.json --metrics /tmp/planted/metrics.json
"""

import argparse
import json
import os
import time

from georadar.config import EngineConfig
from georadar.evaluation import evaluate_detection, train_burst_model
from georadar.synth import SynthConfig, generate_stream, write_stream, write_truth


def _make(cfg: SynthConfig, path: str, truth_path: str):
    records, truth = generate_stream(cfg)
    write_stream(path, records)
    write_truth(truth_path, truth)
    return records, truth


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", required=True, help="where streams/outputs go")
    ap.add_argument("--model", default=None, help="trained model .json (default workdir/model.json)")
    ap.add_argument("--metrics", default=None, help="metrics .json (default workdir/metrics.json)")
    ap.add_argument("--train-seed", type=int, default=101)
    ap.add_argument("--eval-seed", type=int, default=202)
    ap.add_argument("--train-bursts", type=int, default=30)
    ap.add_argument("--eval-bursts", type=int, default=50)
    ap.add_argument("--hours", type=float, default=20.0)
    ap.add_argument("--rate", type=float, default=100.0)
    ap.add_argument("--step-s", type=int, default=900)
    args = ap.parse_args()

    os.makedirs(args.workdir, exist_ok=True)
    model_path = args.model or os.path.join(args.workdir, "model.json")
    metrics_path = args.metrics or os.path.join(args.workdir, "metrics.json")

    base = dict(
        duration_s=int(args.hours * 3600),
        bg_rate_per_h=args.rate,
        vocab_size=40,
        zipf_exponent=0.0,
        burst_warmup_s=int(7 * 3600),
    )
    train_cfg = SynthConfig(seed=args.train_seed, n_bursts=args.train_bursts, **base)
    eval_cfg = SynthConfig(seed=args.eval_seed, n_bursts=args.eval_bursts, **base)
    if args.train_seed == args.eval_seed:
        ap.error("train and eval streams must be disjoint; pick different seeds")

    train_path = os.path.join(args.workdir, "train.jsonl")
    eval_path = os.path.join(args.workdir, "eval.jsonl")
    train_records, train_truth = _make(
        train_cfg, train_path, os.path.join(args.workdir, "train.truth.json")
    )
    eval_records, eval_truth = _make(
        eval_cfg, eval_path, os.path.join(args.workdir, "eval.truth.json")
    )
    print(
        f"train: {len(train_records)} tweets, {len(train_truth)} bursts; "
        f"eval: {len(eval_records)} tweets, {len(eval_truth)} bursts"
    )

    cfg = EngineConfig(step_s=args.step_s)
    t0 = time.perf_counter()
    model = train_burst_model(train_path, train_truth, cfg)
    t1 = time.perf_counter()
    report = evaluate_detection(eval_path, eval_truth, cfg, model)
    t2 = time.perf_counter()

    with open(model_path, "w", encoding="utf-8") as fh:
        json.dump(model.to_payload(), fh, indent=2)
    metrics = {
        "train_seconds": round(t1 - t0, 3),
        "eval_seconds": round(t2 - t1, 3),
        **report.to_payload(),
    }
    with open(metrics_path, "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=2)

    print(
        f"precision={report.precision:.4f} recall={report.recall:.4f} "
        f"events={report.n_events} missed={list(report.missed)}"
    )
    print(f"model -> {model_path}")
    print(f"metrics -> {metrics_path}")
    return 0 if (report.precision >= 0.9 and report.recall >= 0.9) else 1


if __name__ == "__main__":
    raise SystemExit(main())
