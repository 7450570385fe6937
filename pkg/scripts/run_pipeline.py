#!/usr/bin/env python3
"""Drive the full pipeline end to end into one output root.

Runs synth-data, train-face, both train-vq parts, train-ar, generate,
evaluate, and plot through the package CLI, so the result is identical to
invoking the subcommands by hand. Useful for smoke runs and for producing
a complete artifact tree from a single config.

    python3 scripts/run_pipeline.py --out-root runs/full --config my.yaml
"""

import argparse
import sys
import time

from speechmotion import cli

STAGES = [
    ["synth-data"],
    ["train-face"],
    ["train-vq", "--part", "body"],
    ["train-vq", "--part", "hand"],
    ["train-ar"],
    ["generate"],
    ["evaluate"],
    ["plot"],
]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-root", required=True)
    parser.add_argument("--config", default=None)
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        help="section.key=value override, repeatable")
    parser.add_argument("--skip-plot", action="store_true")
    args = parser.parse_args()

    stages = STAGES[:-1] if args.skip_plot else STAGES
    for stage in stages:
        argv = [*stage, "--out-root", args.out_root]
        if args.config:
            argv += ["--config", args.config]
        for item in args.overrides:
            argv += ["--set", item]
        print(f"==> {' '.join(stage)}", flush=True)
        t0 = time.monotonic()
        code = cli.main(argv)
        if code != 0:
            print(f"stage {stage[0]} failed with exit code {code}", file=sys.stderr)
            return code
        print(f"    done in {time.monotonic() - t0:.1f}s", flush=True)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
