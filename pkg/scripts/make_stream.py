#!/usr/bin/env python3
"""Generate a synthetic geo-text stream (and ground truth) for experiments.

Examples:
  python scripts/make_stream.py --out /tmp/bg.jsonl --hours 12 --rate 200
  python scripts/make_stream.py --out /tmp/ev.jsonl --truth /tmp/ev.truth.json \
      --hours 20 --rate 100 --bursts 50 --vocab 40 --zipf 0.0 --warmup-h 7
"""

import argparse

from georadar.synth import SynthConfig, generate_stream, write_stream, write_truth


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True, help="stream .jsonl path")
    ap.add_argument("--truth", default=None, help="ground-truth .json path")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--hours", type=float, default=36.0)
    ap.add_argument("--rate", type=float, default=110.0, help="background tweets/hour")
    ap.add_argument("--bursts", type=int, default=0)
    ap.add_argument("--vocab", type=int, default=300)
    ap.add_argument("--zipf", type=float, default=0.8)
    ap.add_argument("--words", type=int, default=4, help="words per tweet")
    ap.add_argument("--warmup-h", type=float, default=14.0)
    ap.add_argument("--even", action="store_true", help="evenly spaced arrivals")
    args = ap.parse_args()

    cfg = SynthConfig(
        seed=args.seed,
        duration_s=int(args.hours * 3600),
        bg_rate_per_h=args.rate,
        vocab_size=args.vocab,
        words_per_tweet=args.words,
        zipf_exponent=args.zipf,
        even_arrivals=args.even,
        n_bursts=args.bursts,
        burst_warmup_s=int(args.warmup_h * 3600),
    )
    records, truth = generate_stream(cfg)
    write_stream(args.out, records)
    print(f"{len(records)} records -> {args.out}")
    if args.truth:
        write_truth(args.truth, truth)
        print(f"{len(truth)} planted bursts -> {args.truth}")
    elif truth:
        print(f"note: {len(truth)} planted bursts generated but --truth not given")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
