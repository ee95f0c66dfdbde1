"""Session fixtures over the committed golden models."""

import pytest

from nnfuzz.model_format import load_model

from engine_fixtures import fixture_path


@pytest.fixture(scope="session")
def golden():
    """Paths to the committed fixture models and dataset."""
    return {
        "classifier": fixture_path("classifier.json"),
        "extractor": fixture_path("extractor.json"),
        "gen_forward": fixture_path("gen_identity_fwd.json"),
        "gen_backward": fixture_path("gen_identity_bwd.json"),
        "dataset": fixture_path("dataset"),
    }


@pytest.fixture(scope="session")
def golden_classifier():
    return load_model(fixture_path("classifier.json"), fixture_path("classifier.bin"))


@pytest.fixture(scope="session")
def golden_extractor():
    return load_model(fixture_path("extractor.json"), fixture_path("extractor.bin"))


@pytest.fixture(scope="session")
def golden_generator():
    return load_model(
        fixture_path("gen_identity_fwd.json"), fixture_path("gen_identity_fwd.bin")
    )
