"""Command-line pipeline: synth-data, train-*, generate, evaluate, plot.

Artifacts live under one output root (flag --out-root, falling back to the
SPEECHMOTION_OUT environment variable, then ./runs):

    corpus/          wavs, motion containers, corpus manifest
    checkpoints/     face.ckpt, vq_body.ckpt, vq_hand.ckpt, prior.ckpt, ...
    logs/            per-stage training history CSVs
    generated/       sampled motion containers
    metrics/         report.json
    plots/           training curves and metric summary
    manifests/       per-stage input/output digests

Exit codes: 0 success, 2 bad config or invalid data, 3 missing
prerequisite artifact, 4 malformed file, 1 anything unexpected.
"""

import argparse
import csv
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import torch

from .audio import align_to_frames, mfcc
from .checkpoint import load_checkpoint, save_checkpoint
from .config import config_hash, load_config
from .corpus import load_corpus, synth_corpus, write_corpus
from .errors import (
    ConfigError,
    FormatError,
    MissingPrerequisiteError,
    ValidationError,
)
from .face import face_eval_mse, face_train
from .generate import GeneratorBundle, generate_motion
from .manifest import write_manifest
from .metrics import (
    MetricReport,
    l2_landmark,
    lvd,
    mean_variation,
    realism_score,
    train_discriminator,
)
from .motion import segment
from .motionfile import write_motion
from .prior import ar_train, perplexity
from .vq import encode_indices, reconstruction_error, train_vqvae, windows_to_tensor


def _out_root(args):
    root = args.out_root or os.environ.get("SPEECHMOTION_OUT") or "runs"
    return Path(root)


def _require(path, command):
    if not Path(path).exists():
        raise MissingPrerequisiteError(path, command)
    return Path(path)


def _write_history(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    return path


def _featurize(corpus, ids):
    """Aligned per-clip audio features keyed by sample id."""
    by_id = {s.id: s for s in corpus.samples}
    feats = {}
    for sample_id in ids:
        sample = by_id[sample_id]
        f = mfcc(sample.waveform, sample.motion.fps)
        feats[sample_id] = align_to_frames(f, sample.motion.num_frames)
    return feats


def _windows(corpus, ids, length, stride, feats=None):
    by_id = {s.id: s for s in corpus.samples}
    wins, speakers = [], []
    for sample_id in ids:
        sample = by_id[sample_id]
        audio = feats[sample_id] if feats is not None else None
        for w in segment(sample.motion, audio, length, stride):
            wins.append(w)
            speakers.append(sample.speaker.index)
    if not wins:
        raise ValidationError(f"no windows of length {length} in {len(ids)} clips")
    return wins, np.asarray(speakers, dtype=np.int64)


def _ar_entries(corpus, ids, vq_body, vq_hand, window, stride):
    feats = _featurize(corpus, ids)
    wins, speakers = _windows(corpus, ids, window, stride, feats)
    xb = windows_to_tensor(wins, "body")
    xh = windows_to_tensor(wins, "hand")
    audio = torch.from_numpy(
        np.stack([w.audio.frames.T for w in wins]).astype(np.float32)
    )
    return {
        "body": encode_indices(vq_body, xb),
        "hand": encode_indices(vq_hand, xh),
        "audio": audio,
        "speaker": torch.from_numpy(speakers),
    }


def cmd_synth_data(args):
    cfg = load_config(args.config, args.overrides)
    root = _out_root(args)
    corpus = synth_corpus(cfg.corpus)
    write_corpus(corpus, root / "corpus")
    write_manifest(
        root / "manifests" / "synth-data.json",
        "synth-data",
        config_hash(cfg),
        {},
        {"corpus.json": root / "corpus" / "corpus.json"},
    )
    print(f"wrote {len(corpus.samples)} clips to {root / 'corpus'}")
    return 0


def cmd_train_face(args):
    cfg = load_config(args.config, args.overrides)
    root = _out_root(args)
    corpus = load_corpus(_require(root / "corpus", "speechmotion synth-data"))
    feats = _featurize(corpus, corpus.split.train + corpus.split.val)
    by_id = {s.id: s for s in corpus.samples}

    def pairs(ids):
        return [(feats[i].frames, by_id[i].motion.face) for i in ids]

    model, history = face_train(pairs(corpus.split.train), pairs(corpus.split.val), cfg.face)
    ckpt = save_checkpoint(root / "checkpoints" / "face.ckpt", model)
    _write_history(root / "logs" / "face_history.csv", history)
    write_manifest(
        root / "manifests" / "train-face.json",
        "train-face",
        config_hash(cfg),
        {"corpus.json": root / "corpus" / "corpus.json"},
        {"face.ckpt": ckpt},
    )
    best = min(h["val_mse"] for h in history)
    print(f"face model saved to {ckpt} (best val mse {best:.6f})")
    return 0


def cmd_train_vq(args):
    cfg = load_config(args.config, args.overrides)
    root = _out_root(args)
    corpus = load_corpus(_require(root / "corpus", "speechmotion synth-data"))
    section = cfg.vq_hand if args.part == "hand" else cfg.vq_body
    vq_cfg = replace(section, part=args.part)
    wins, _ = _windows(corpus, corpus.split.train, vq_cfg.window, vq_cfg.stride)
    model, history = train_vqvae(wins, vq_cfg)
    ckpt = save_checkpoint(root / "checkpoints" / f"vq_{args.part}.ckpt", model)
    _write_history(
        root / "logs" / f"vq_{args.part}_history.csv",
        [{"epoch": i, **row} for i, row in enumerate(history)],
    )
    write_manifest(
        root / "manifests" / f"train-vq-{args.part}.json",
        f"train-vq-{args.part}",
        config_hash(cfg),
        {"corpus.json": root / "corpus" / "corpus.json"},
        {f"vq_{args.part}.ckpt": ckpt},
    )
    print(f"{args.part} codebook saved to {ckpt} (final recon {history[-1]['recon']:.6f})")
    return 0


def cmd_train_ar(args):
    cfg = load_config(args.config, args.overrides)
    root = _out_root(args)
    corpus = load_corpus(_require(root / "corpus", "speechmotion synth-data"))
    vq_body, _ = load_checkpoint(
        _require(root / "checkpoints" / "vq_body.ckpt", "speechmotion train-vq --part body")
    )
    vq_hand, _ = load_checkpoint(
        _require(root / "checkpoints" / "vq_hand.ckpt", "speechmotion train-vq --part hand")
    )
    ar_cfg = cfg.prior if not args.no_cross_cond else replace(cfg.prior, cross_cond=False)
    entries = _ar_entries(
        corpus, corpus.split.train, vq_body, vq_hand, ar_cfg.window, cfg.vq_body.stride
    )
    model, history = ar_train(entries, ar_cfg)
    name = "prior.ckpt" if ar_cfg.cross_cond else "prior_independent.ckpt"
    ckpt = save_checkpoint(root / "checkpoints" / name, model)
    _write_history(
        root / "logs" / f"{Path(name).stem}_history.csv",
        [{"epoch": i, **row} for i, row in enumerate(history)],
    )
    write_manifest(
        root / "manifests" / f"train-ar-{Path(name).stem}.json",
        "train-ar",
        config_hash(cfg),
        {"corpus.json": root / "corpus" / "corpus.json"},
        {name: ckpt},
    )
    print(f"prior saved to {ckpt} (final nll/code {history[-1]['nll_per_code']:.4f})")
    return 0


def _load_bundle(root):
    face, _ = load_checkpoint(
        _require(root / "checkpoints" / "face.ckpt", "speechmotion train-face")
    )
    vq_body, _ = load_checkpoint(
        _require(root / "checkpoints" / "vq_body.ckpt", "speechmotion train-vq --part body")
    )
    vq_hand, _ = load_checkpoint(
        _require(root / "checkpoints" / "vq_hand.ckpt", "speechmotion train-vq --part hand")
    )
    prior, _ = load_checkpoint(
        _require(root / "checkpoints" / "prior.ckpt", "speechmotion train-ar")
    )
    return GeneratorBundle(face=face, vq_body=vq_body, vq_hand=vq_hand, prior=prior)


def cmd_generate(args):
    cfg = load_config(args.config, args.overrides)
    gen = replace(
        cfg.generate,
        speaker=args.speaker if args.speaker is not None else cfg.generate.speaker,
        seed=args.seed if args.seed is not None else cfg.generate.seed,
        samples=args.samples if args.samples is not None else cfg.generate.samples,
        temperature=(
            args.temperature if args.temperature is not None else cfg.generate.temperature
        ),
    )
    root = _out_root(args)
    corpus = load_corpus(_require(root / "corpus", "speechmotion synth-data"))
    bundle = _load_bundle(root)
    by_id = {s.id: s for s in corpus.samples}
    clips = [i for i in corpus.split.test if by_id[i].speaker.index == gen.speaker]
    if not clips:
        raise ValidationError(f"no test clips for speaker {gen.speaker}")
    greedy = gen.temperature == 0.0
    out_dir = root / "generated" / f"speaker{gen.speaker}"
    outputs = {}
    for i in range(gen.samples):
        sample = by_id[clips[i % len(clips)]]
        seed = gen.seed + i
        motion = generate_motion(
            bundle,
            sample.waveform,
            sample.speaker,
            seed=seed,
            temperature=gen.temperature if not greedy else 1.0,
            greedy=greedy,
        )
        path = out_dir / f"{sample.id}_seed{seed:04d}.hm1"
        write_motion(
            path,
            motion,
            sample.speaker,
            {"source": sample.id, "seed": seed, "temperature": gen.temperature},
        )
        outputs[path.name] = path
    write_manifest(
        root / "manifests" / f"generate-speaker{gen.speaker}.json",
        "generate",
        config_hash(cfg),
        {"corpus.json": root / "corpus" / "corpus.json"},
        outputs,
    )
    print(f"wrote {gen.samples} samples to {out_dir}")
    return 0


def cmd_evaluate(args):
    cfg = load_config(args.config, args.overrides)
    root = _out_root(args)
    corpus = load_corpus(_require(root / "corpus", "speechmotion synth-data"))
    bundle = _load_bundle(root)
    by_id = {s.id: s for s in corpus.samples}
    test_ids = list(corpus.split.test)

    generated = {}
    for sample_id in test_ids:
        sample = by_id[sample_id]
        generated[sample_id] = generate_motion(
            bundle,
            sample.waveform,
            sample.speaker,
            seed=cfg.generate.seed,
            temperature=cfg.generate.temperature,
        )

    l2s, lvds = [], []
    gen_body, gen_hand, real_body, real_hand = [], [], [], []
    for sample_id in test_ids:
        real = by_id[sample_id].motion
        fake = generated[sample_id]
        l2s.append(l2_landmark(fake.face, real.face))
        lvds.append(lvd(fake.face, real.face))
        gen_body.append(fake.body)
        gen_hand.append(fake.hand)
        real_body.append(real.body)
        real_hand.append(real.hand)

    window = cfg.vq_body.window
    real_wins = [
        w.motion.body_hand()
        for sample_id in test_ids
        for w in segment(by_id[sample_id].motion, None, window, window)
    ]
    fake_wins = [
        w.motion.body_hand()
        for sample_id in test_ids
        for w in segment(generated[sample_id], None, window, window)
    ]
    n_fit = min(len(real_wins), len(fake_wins)) // 2
    disc = train_discriminator(real_wins[:n_fit], fake_wins[:n_fit], seed=cfg.generate.seed)
    rs_generated = realism_score(disc, fake_wins[n_fit:])
    rs_real = realism_score(disc, real_wins[n_fit:])

    test_wins, _ = _windows(corpus, test_ids, window, cfg.vq_body.stride)
    re_body = reconstruction_error(bundle.vq_body, windows_to_tensor(test_wins, "body"))
    re_hand = reconstruction_error(bundle.vq_hand, windows_to_tensor(test_wins, "hand"))
    entries = _ar_entries(
        corpus, test_ids, bundle.vq_body, bundle.vq_hand, window, cfg.vq_body.stride
    )
    ppl = perplexity(bundle.prior, entries)

    feats = _featurize(corpus, test_ids)
    face_pairs = [(feats[i].frames, by_id[i].motion.face) for i in test_ids]
    face_mse = face_eval_mse(bundle.face, face_pairs)

    report = MetricReport(
        values={
            "l2": float(np.mean(l2s)),
            "lvd": float(np.mean(lvds)),
            "face_mse": face_mse,
            "variation_body": mean_variation(gen_body),
            "variation_hand": mean_variation(gen_hand),
            "variation_body_real": mean_variation(real_body),
            "variation_hand_real": mean_variation(real_hand),
            "realism_generated": rs_generated,
            "realism_real": rs_real,
            "re_body": re_body,
            "re_hand": re_hand,
            "perplexity": ppl,
        },
        context={
            "config_hash": config_hash(cfg),
            "n_test_clips": len(test_ids),
            "seed": cfg.generate.seed,
            "temperature": cfg.generate.temperature,
        },
    )
    path = report.save(root / "metrics" / "report.json")
    write_manifest(
        root / "manifests" / "evaluate.json",
        "evaluate",
        config_hash(cfg),
        {"corpus.json": root / "corpus" / "corpus.json"},
        {"report.json": path},
    )
    for key, value in sorted(report.values.items()):
        print(f"{key}: {value:.6f}")
    return 0


def cmd_plot(args):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    root = _out_root(args)
    report = MetricReport.load(
        _require(root / "metrics" / "report.json", "speechmotion evaluate")
    )
    plots = root / "plots"
    plots.mkdir(parents=True, exist_ok=True)

    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    curves = [
        ("face_history.csv", ["train_mse", "val_mse"], "face mse"),
        ("vq_body_history.csv", ["recon"], "body vq recon"),
        ("prior_history.csv", ["nll_per_code"], "prior nll/code"),
    ]
    for ax, (name, cols, title) in zip(axes, curves):
        path = root / "logs" / name
        if path.exists():
            with open(path) as f:
                rows = list(csv.DictReader(f))
            for col in cols:
                ax.plot([float(r[col]) for r in rows], label=col)
            ax.legend()
        ax.set_title(title)
        ax.set_xlabel("epoch")
    fig.tight_layout()
    fig.savefig(plots / "training_curves.png", dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(8, 4))
    keys = sorted(report.values)
    ax.barh(range(len(keys)), [report.values[k] for k in keys])
    ax.set_yticks(range(len(keys)), keys)
    ax.set_xscale("log")
    ax.set_title("evaluation metrics")
    fig.tight_layout()
    fig.savefig(plots / "metrics.png", dpi=120)
    plt.close(fig)
    print(f"plots written to {plots}")
    return 0


def _add_common(parser):
    parser.add_argument("--config", default=None, help="YAML config path")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one config value (repeatable)",
    )
    parser.add_argument("--out-root", default=None, help="artifact root directory")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="speechmotion", description="speech-driven holistic motion pipeline"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", help="build the synthetic corpus")
    _add_common(p)
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("train-face", help="train the audio-to-face regressor")
    _add_common(p)
    p.set_defaults(func=cmd_train_face)

    p = sub.add_parser("train-vq", help="train one quantized autoencoder")
    _add_common(p)
    p.add_argument("--part", choices=["body", "hand", "joint"], required=True)
    p.set_defaults(func=cmd_train_vq)

    p = sub.add_parser("train-ar", help="train the code prior")
    _add_common(p)
    p.add_argument(
        "--no-cross-cond",
        action="store_true",
        help="train the independent-streams ablation instead",
    )
    p.set_defaults(func=cmd_train_ar)

    p = sub.add_parser("generate", help="sample motion for held-out clips")
    _add_common(p)
    p.add_argument("--speaker", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument(
        "--temperature", type=float, default=None, help="0 selects greedy decoding"
    )
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="metric report on the test split")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot", help="training curves and metric summary")
    _add_common(p)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MissingPrerequisiteError as exc:
        print(f"missing prerequisite: {exc}", file=sys.stderr)
        return 3
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 4
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
