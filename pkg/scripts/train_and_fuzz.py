#!/usr/bin/env python3
"""Train the toy model set, then fuzz it: the full loop in one command.

Stage 1 calls the trainer CLI to synthesize a dataset, train the
classifier, extractor and generator pair, and export everything in the
engine's interchange format.  Stage 2 seeds a campaign from a slice of
the held-out images and runs the engine against the freshly trained
classifier.

The campaign defaults mirror the end-to-end acceptance setup: a 20-image
seed pool, per-input min-max scaled coverage at a 0.7 threshold, and
noise scale 0.15.
"""

import argparse
import os
import shutil
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "trainer", "src"))

from aegtrain import cli as train_cli
from nnfuzz.orchestrator import CampaignConfig, run_campaign


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="work directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--iterations", type=int, default=500)
    parser.add_argument("--seed-images", type=int, default=20,
                        help="held-out images seeding the campaign pool")
    parser.add_argument("--noise-scale", type=float, default=0.15)
    parser.add_argument("--act-threshold", type=float, default=0.7)
    parser.add_argument("--skip-training", action="store_true",
                        help="reuse models already exported under --out")
    args = parser.parse_args()

    models = os.path.join(args.out, "models")
    if not args.skip_training:
        print("== training ==")
        status = train_cli.main(["train-all", "--out", models,
                                 "--seed", str(args.seed)])
        if status != 0:
            return status
    elif not os.path.isdir(models):
        print(f"error: {models} does not exist; run without --skip-training",
              file=sys.stderr)
        return 1

    # campaigns explore more when the pool starts well short of the
    # coverage the full held-out set would already reach
    seeds = os.path.join(args.out, "seeds")
    if os.path.isdir(seeds):
        shutil.rmtree(seeds)
    os.makedirs(seeds)
    dataset = os.path.join(models, "dataset")
    names = sorted(n[: -len(".meta.json")] for n in os.listdir(dataset)
                   if n.endswith(".meta.json"))[: args.seed_images]
    for name in names:
        for suffix in (".meta.json", ".tensor"):
            shutil.copy(os.path.join(dataset, name + suffix), seeds)

    print("== fuzzing ==")
    config = CampaignConfig(
        classifier=os.path.join(models, "classifier.json"),
        extractor=os.path.join(models, "extractor.json"),
        gen_forward=os.path.join(models, "gen_forward.json"),
        gen_backward=os.path.join(models, "gen_backward.json"),
        dataset=seeds,
        corpus=os.path.join(args.out, "corpus"),
        report=os.path.join(args.out, "report.json"),
        iterations=args.iterations,
        act_threshold=args.act_threshold,
        scaling="layer_minmax",
        feedback="parent_relative",
        noise_scale=args.noise_scale,
        seed=args.seed,
    )
    report = run_campaign(config)

    initial, final = report["initial"], report["final"]
    print(f"pool:     {initial['pool_size']} -> {final['pool_size']}")
    print(f"coverage: {initial['nc_ratio']:.4f} -> {final['nc_ratio']:.4f}")
    print(f"findings: {final['findings']}"
          f" ({final['duplicate_findings']} duplicates suppressed)")
    for f in report["findings"][:5]:
        print(f"  {f['id']}: labeled {f['truth']}, classified {f['predicted']}"
              f" at {f['confidence']:.2f} (iteration {f['iteration']})")
    print(f"report:   {os.path.join(args.out, 'report.json')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
