"""One fully trained artifact set per test session.

Training the default configuration takes about half a minute, so the
suite does it once and every test reads from the same exported directory.
"""

import os

import numpy as np
import pytest

from aegtrain.config import SyntheticDatasetConfig, TrainConfig
from aegtrain.dataset import LabeledImages, make_synthetic_dataset
from aegtrain.export import ExportableModel, export_model, write_dataset
from aegtrain.networks import GEN_RANGE
from aegtrain.training import (
    train_cycle_generators,
    train_feature_extractor,
    train_target_classifier,
)

from trainer_fixtures import IMAGE_SIZE, SEED, TrainedArtifacts


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory) -> TrainedArtifacts:
    """Train and export the default pipeline, mirroring the CLI defaults."""
    out = str(tmp_path_factory.mktemp("artifacts"))

    data_cfg = SyntheticDatasetConfig(
        image_size=IMAGE_SIZE, per_class=40, test_per_class=25, seed=SEED)
    domain_x, domain_y, test = make_synthetic_dataset(data_cfg)
    labeled = LabeledImages(
        images=np.concatenate([domain_x.images, domain_y.images]),
        labels=np.concatenate([domain_x.labels, domain_y.labels]),
    )

    clf = train_target_classifier(labeled, TrainConfig(epochs=30, seed=SEED))
    extractor = train_feature_extractor(labeled, TrainConfig(epochs=30, seed=SEED + 1))
    gens = train_cycle_generators(
        domain_x, domain_y, TrainConfig(epochs=120, seed=SEED + 2))

    def path(stem, ext):
        return os.path.join(out, f"{stem}.{ext}")

    shape = (IMAGE_SIZE, IMAGE_SIZE, 1)
    export_model(ExportableModel(clf.model, "toy-classifier", shape,
                                 (0.0, 1.0), append_softmax=True),
                 path("classifier", "json"), path("classifier", "bin"))
    export_model(ExportableModel(extractor, "toy-extractor", shape,
                                 (0.0, 1.0), feature_layer="last_dense"),
                 path("extractor", "json"), path("extractor", "bin"))
    export_model(ExportableModel(gens.forward, "gen-forward", shape, GEN_RANGE),
                 path("gen_forward", "json"), path("gen_forward", "bin"))
    export_model(ExportableModel(gens.backward, "gen-backward", shape, GEN_RANGE),
                 path("gen_backward", "json"), path("gen_backward", "bin"))
    write_dataset(os.path.join(out, "dataset"), test)

    return TrainedArtifacts(
        root=out,
        classifier=clf.model,
        extractor=extractor,
        gen_forward=gens.forward,
        gen_backward=gens.backward,
        accuracy=clf.accuracy,
        final_cycle=gens.final_cycle,
        test=test,
    )
