#!/usr/bin/env python3
"""Regenerate the committed fixture models and seed dataset.

Everything is derived from fixed rng seeds, so rerunning this script
reproduces the files in fixtures/golden/ byte for byte.  The fixture family:

* classifier.json/.bin      small conv classifier on 8x8 grayscale, 4 classes
* extractor.json/.bin       conv feature extractor with a 16-wide feature layer
* gen_identity_fwd.json/.bin  identity generator (1x1 conv, weight 1)
* gen_identity_bwd.json/.bin  identity generator, same architecture
* dataset/                  16 labeled pattern images the classifier gets right

Labels are the classifier's own predictions on the generated patterns, so
every dataset entry is correctly classified by construction and campaign
init keeps all of them.
"""

import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from nnfuzz.inference import forward
from nnfuzz.model_format import (
    LayerSpec,
    Manifest,
    model_from_arrays,
    save_model,
)
from nnfuzz.coverage import activation_profile
from nnfuzz.tensorfile import write_tensor

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "..", "fixtures", "golden")

# Chosen so the classifier spreads the dataset over three classes, leaves
# several seeds near its decision boundary, and lights up a mid-range share
# of neurons at the default activation threshold.
WEIGHT_SEED = 53
PATTERN_SEED = 7


def build_classifier():
    rng = np.random.default_rng(WEIGHT_SEED)
    manifest = Manifest(
        name="golden-classifier",
        input_shape=(8, 8, 1),
        input_range=(0.0, 1.0),
        layers=[
            LayerSpec("conv2d", {"in_ch": 1, "out_ch": 8, "kh": 3, "kw": 3,
                                 "stride": 1, "padding": "same"}, "relu"),
            LayerSpec("maxpool2d", {"kh": 2, "kw": 2, "stride": 2}),
            LayerSpec("flatten"),
            LayerSpec("dense", {"in": 128, "out": 4}, "none"),
            LayerSpec("softmax"),
        ],
    )
    conv_k = rng.normal(0.0, 0.55, size=(8, 1, 3, 3)).astype(np.float32)
    conv_b = rng.uniform(-0.15, 0.15, size=8).astype(np.float32)
    dense_k = rng.normal(0.0, 0.16, size=(4, 128)).astype(np.float32)
    dense_b = rng.uniform(-0.1, 0.1, size=4).astype(np.float32)
    return model_from_arrays(
        manifest, [(conv_k, conv_b), None, None, (dense_k, dense_b), None]
    )


def build_extractor():
    rng = np.random.default_rng(WEIGHT_SEED + 1)
    manifest = Manifest(
        name="golden-extractor",
        input_shape=(8, 8, 1),
        input_range=(0.0, 1.0),
        layers=[
            LayerSpec("conv2d", {"in_ch": 1, "out_ch": 4, "kh": 3, "kw": 3,
                                 "stride": 1, "padding": "same"}, "relu"),
            LayerSpec("flatten"),
            LayerSpec("dense", {"in": 256, "out": 16}, "none"),
        ],
        feature_layer=2,
    )
    conv_k = rng.normal(0.0, 0.5, size=(4, 1, 3, 3)).astype(np.float32)
    conv_b = rng.uniform(-0.1, 0.1, size=4).astype(np.float32)
    dense_k = rng.normal(0.0, 0.12, size=(16, 256)).astype(np.float32)
    dense_b = np.zeros(16, dtype=np.float32)
    return model_from_arrays(
        manifest, [(conv_k, conv_b), None, (dense_k, dense_b)]
    )


def build_identity_generator(name):
    manifest = Manifest(
        name=name,
        input_shape=(8, 8, 1),
        input_range=(0.0, 1.0),
        layers=[
            LayerSpec("conv2d", {"in_ch": 1, "out_ch": 1, "kh": 1, "kw": 1,
                                 "stride": 1, "padding": "same"}, "none"),
        ],
    )
    kernel = np.ones((1, 1, 1, 1), dtype=np.float32)
    bias = np.zeros(1, dtype=np.float32)
    return model_from_arrays(manifest, [(kernel, bias)])


def make_patterns():
    """16 noisy 8x8 pattern images spanning four visual families."""
    rng = np.random.default_rng(PATTERN_SEED)
    images = []
    ys, xs = np.mgrid[0:8, 0:8]
    bases = [
        (xs % 2 == 0).astype(np.float32),                   # vertical stripes
        (ys % 2 == 0).astype(np.float32),                   # horizontal stripes
        ((xs + ys) % 2 == 0).astype(np.float32),            # checkerboard
        (((xs - 3.5) ** 2 + (ys - 3.5) ** 2) < 8).astype(np.float32),  # disk
    ]
    for base in bases:
        for _ in range(4):
            noise = rng.uniform(-0.25, 0.25, size=(8, 8)).astype(np.float32)
            img = np.clip(0.15 + 0.7 * base + noise, 0.0, 1.0)
            images.append(img[..., None].astype(np.float32))
    return images


def main():
    os.makedirs(FIXTURE_DIR, exist_ok=True)
    dataset_dir = os.path.join(FIXTURE_DIR, "dataset")
    os.makedirs(dataset_dir, exist_ok=True)

    classifier = build_classifier()
    extractor = build_extractor()
    gen_fwd = build_identity_generator("identity-forward")
    gen_bwd = build_identity_generator("identity-backward")

    save_model(classifier, os.path.join(FIXTURE_DIR, "classifier.json"),
               os.path.join(FIXTURE_DIR, "classifier.bin"))
    save_model(extractor, os.path.join(FIXTURE_DIR, "extractor.json"),
               os.path.join(FIXTURE_DIR, "extractor.bin"))
    save_model(gen_fwd, os.path.join(FIXTURE_DIR, "gen_identity_fwd.json"),
               os.path.join(FIXTURE_DIR, "gen_identity_fwd.bin"))
    save_model(gen_bwd, os.path.join(FIXTURE_DIR, "gen_identity_bwd.json"),
               os.path.join(FIXTURE_DIR, "gen_identity_bwd.bin"))

    labels = []
    popcounts = []
    margins = []
    for i, image in enumerate(make_patterns()):
        probs, record = forward(classifier, image)
        label = int(np.argmax(probs))
        ordered = np.sort(probs)[::-1]
        margins.append(float(ordered[0] - ordered[1]))
        popcounts.append(activation_profile(record, 0.25, "raw").popcount)
        labels.append(label)
        name = f"img-{i:03d}"
        with open(os.path.join(dataset_dir, f"{name}.meta.json"), "w",
                  encoding="utf-8") as fh:
            json.dump({"id": name, "label": label}, fh, indent=2)
            fh.write("\n")
        write_tensor(os.path.join(dataset_dir, f"{name}.tensor"), image)

    print(f"labels:    {labels}")
    print(f"classes:   {sorted(set(labels))}")
    print(f"popcounts: {popcounts} (of 12 neurons)")
    print(f"margins:   {[round(m, 3) for m in margins]}")


if __name__ == "__main__":
    main()
