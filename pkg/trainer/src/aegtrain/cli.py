"""Command line entry point: train everything and export the artifact set."""

import argparse
import os
import sys
import time

import numpy as np

from .config import SyntheticDatasetConfig, TrainConfig
from .dataset import LabeledImages, make_synthetic_dataset
from .errors import TrainerError
from .export import ExportableModel, export_model, write_dataset
from .networks import GEN_RANGE
from .training import (
    train_cycle_generators,
    train_feature_extractor,
    train_target_classifier,
)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aegtrain",
        description="Train toy models and export them for the fuzzing engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-all", help="dataset + classifier + extractor +"
                       " generator pair, exported to one directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-class", type=int, default=40,
                   help="training images per class per domain")
    p.add_argument("--test-per-class", type=int, default=25)
    p.add_argument("--epochs", type=int, default=30,
                   help="classifier and extractor epochs")
    p.add_argument("--gan-epochs", type=int, default=120)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--cycle-weight", type=float, default=10.0)
    return parser


def _merge(x, y) -> LabeledImages:
    return LabeledImages(
        images=np.concatenate([x.images, y.images]),
        labels=np.concatenate([x.labels, y.labels]),
    )


def cmd_train_all(args) -> int:
    started = time.monotonic()
    os.makedirs(args.out, exist_ok=True)
    size = 16

    data_cfg = SyntheticDatasetConfig(
        image_size=size, per_class=args.per_class,
        test_per_class=args.test_per_class, seed=args.seed)
    domain_x, domain_y, test = make_synthetic_dataset(data_cfg)
    labeled = _merge(domain_x, domain_y)
    print(f"dataset: {len(domain_x)}+{len(domain_y)} train, {len(test)} test")

    clf_cfg = TrainConfig(epochs=args.epochs, lr=args.lr,
                          batch_size=args.batch_size, seed=args.seed)
    clf = train_target_classifier(labeled, clf_cfg)
    print(f"classifier: held-out accuracy {clf.accuracy:.3f}"
          + (" (degenerate)" if clf.degenerate else ""))

    ext_cfg = TrainConfig(epochs=args.epochs, lr=args.lr,
                          batch_size=args.batch_size, seed=args.seed + 1)
    extractor = train_feature_extractor(labeled, ext_cfg)

    gan_cfg = TrainConfig(epochs=args.gan_epochs, lr=args.lr,
                          cycle_weight=args.cycle_weight,
                          batch_size=args.batch_size, seed=args.seed + 2)
    gens = train_cycle_generators(domain_x, domain_y, gan_cfg)
    print(f"generators: final cycle {gens.final_cycle:.4f} per pixel")

    def path(stem, ext):
        return os.path.join(args.out, f"{stem}.{ext}")

    export_model(ExportableModel(clf.model, "toy-classifier", (size, size, 1),
                                 (0.0, 1.0), append_softmax=True),
                 path("classifier", "json"), path("classifier", "bin"))
    export_model(ExportableModel(extractor, "toy-extractor", (size, size, 1),
                                 (0.0, 1.0), feature_layer="last_dense"),
                 path("extractor", "json"), path("extractor", "bin"))
    export_model(ExportableModel(gens.forward, "gen-forward", (size, size, 1),
                                 GEN_RANGE),
                 path("gen_forward", "json"), path("gen_forward", "bin"))
    export_model(ExportableModel(gens.backward, "gen-backward", (size, size, 1),
                                 GEN_RANGE),
                 path("gen_backward", "json"), path("gen_backward", "bin"))
    write_dataset(os.path.join(args.out, "dataset"), test)

    elapsed = time.monotonic() - started
    print(f"exported classifier, extractor, generator pair and"
          f" {len(test)}-image dataset to {args.out} in {elapsed:.1f}s")
    return 0


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return cmd_train_all(args)
    except (TrainerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
