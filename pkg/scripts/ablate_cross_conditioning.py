#!/usr/bin/env python3
"""Ablate the hand stream's view of the body stream in the prior.

Trains the autoregressive code prior twice per seed with equal capacity:
once with cross-conditioning (each trunk reads both streams' pasts and the
hand head additionally sees the current body code) and once with fully
independent streams. Reports held-out perplexity per code for both. The
corpus couples hand prototypes to body prototypes, so the cross variant
should match or beat the independent one on most seeds.

    python3 scripts/ablate_cross_conditioning.py --seeds 5
"""

import argparse
import json
import time

import numpy as np
import torch

from speechmotion.audio import align_to_frames, mfcc
from speechmotion.corpus import CorpusConfig, synth_corpus
from speechmotion.motion import segment
from speechmotion.prior import ArConfig, ar_train, perplexity
from speechmotion.vq import VqConfig, encode_indices, train_vqvae, windows_to_tensor


def entries_for(corpus, ids, vq_body, vq_hand, stride):
    by_id = {s.id: s for s in corpus.samples}
    wins, speakers = [], []
    for i in ids:
        sample = by_id[i]
        feats = align_to_frames(mfcc(sample.waveform, sample.motion.fps),
                                sample.motion.num_frames)
        for w in segment(sample.motion, feats, 88, stride):
            wins.append(w)
            speakers.append(sample.speaker.index)
    return {
        "body": encode_indices(vq_body, windows_to_tensor(wins, "body")),
        "hand": encode_indices(vq_hand, windows_to_tensor(wins, "hand")),
        "audio": torch.from_numpy(
            np.stack([w.audio.frames.T for w in wins]).astype(np.float32)
        ),
        "speaker": torch.from_numpy(np.asarray(speakers, dtype=np.int64)),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--codebook-size", type=int, default=64)
    parser.add_argument("--layers", type=int, default=8)
    parser.add_argument("--channels", type=int, default=64)
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--lr", type=float, default=3e-4)
    parser.add_argument("--corpus-seed", type=int, default=1234)
    parser.add_argument("--out", default=None, help="optional JSON results path")
    args = parser.parse_args()

    corpus = synth_corpus(CorpusConfig(seed=args.corpus_seed))
    by_id = {s.id: s for s in corpus.samples}
    train_wins = [w for i in corpus.split.train
                  for w in segment(by_id[i].motion, None, 88, 44)]
    vq = {}
    for part in ("body", "hand"):
        vq[part], _ = train_vqvae(
            train_wins,
            VqConfig(part=part, codebook_size=args.codebook_size, hidden=48, epochs=30),
        )
    # denser training windows than validation: more optimizer steps per epoch
    train = entries_for(corpus, corpus.split.train, vq["body"], vq["hand"], stride=22)
    val = entries_for(corpus, corpus.split.val, vq["body"], vq["hand"], stride=44)
    print(f"{train['body'].shape[0]} train entries, {val['body'].shape[0]} val entries")

    results, wins = [], 0
    for seed in range(args.seeds):
        t0 = time.monotonic()
        ppl = {}
        for cross in (True, False):
            cfg = ArConfig(
                codebook_size=args.codebook_size,
                n_speakers=corpus.samples[0].speaker.n_speakers,
                layers=args.layers,
                channels=args.channels,
                epochs=args.epochs,
                lr=args.lr,
                seed=seed,
                cross_cond=cross,
            )
            model, _ = ar_train(train, cfg)
            ppl[cross] = perplexity(model, val)
        won = ppl[True] <= ppl[False]
        wins += won
        results.append({"seed": seed, "cross": ppl[True], "independent": ppl[False]})
        print(f"seed={seed}: cross {ppl[True]:.4f} vs independent {ppl[False]:.4f} "
              f"({'cross' if won else 'independent'} wins, {time.monotonic() - t0:.0f}s)")
    print(f"cross-conditioning wins {wins}/{args.seeds} seeds")

    if args.out:
        with open(args.out, "w") as fh:
            json.dump(results, fh, indent=2)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
