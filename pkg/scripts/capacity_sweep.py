#!/usr/bin/env python3
"""Compare split body/hand codebooks against one joint codebook.

For each seed, trains a body codebook and a hand codebook of size K plus a
joint body+hand codebook of size 2K (same total entries), then reports
dimension-weighted held-out reconstruction error for both arrangements.
The split arrangement should win on most seeds: it spends its capacity on
two streams whose code combinations multiply instead of sharing one
codebook across the concatenated frames.

    python3 scripts/capacity_sweep.py --sizes 64 128 --seeds 5
"""

import argparse
import json
import time

from speechmotion.corpus import CorpusConfig, synth_corpus
from speechmotion.motion import segment
from speechmotion.vq import VqConfig, reconstruction_error, train_vqvae, windows_to_tensor

BODY_DIM, HAND_DIM = 63, 90


def windows_for(corpus, ids, stride):
    by_id = {s.id: s for s in corpus.samples}
    return [w for i in ids for w in segment(by_id[i].motion, None, 88, stride)]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[64, 128])
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--hidden", type=int, default=48)
    parser.add_argument("--corpus-seed", type=int, default=1234)
    parser.add_argument("--out", default=None, help="optional JSON results path")
    args = parser.parse_args()

    corpus = synth_corpus(CorpusConfig(seed=args.corpus_seed))
    train = windows_for(corpus, corpus.split.train, stride=44)
    val = windows_for(corpus, corpus.split.val, stride=44)
    print(f"{len(train)} train windows, {len(val)} val windows")

    results = []
    for k in args.sizes:
        wins = 0
        for seed in range(args.seeds):
            t0 = time.monotonic()
            errs = {}
            for part, size in (("body", k), ("hand", k), ("joint", 2 * k)):
                cfg = VqConfig(part=part, codebook_size=size, hidden=args.hidden,
                               epochs=args.epochs, seed=seed)
                model, _ = train_vqvae(train, cfg)
                errs[part] = reconstruction_error(model, windows_to_tensor(val, part))
            split = (BODY_DIM * errs["body"] + HAND_DIM * errs["hand"]) / (BODY_DIM + HAND_DIM)
            won = split < errs["joint"]
            wins += won
            results.append({"k": k, "seed": seed, "split": split,
                            "joint": errs["joint"], "split_wins": bool(won)})
            print(f"K={k} seed={seed}: split {split:.4f} vs joint {errs['joint']:.4f} "
                  f"({'split' if won else 'joint'} wins, {time.monotonic() - t0:.0f}s)")
        print(f"K={k}: split wins {wins}/{args.seeds} seeds")

    if args.out:
        with open(args.out, "w") as fh:
            json.dump(results, fh, indent=2)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
