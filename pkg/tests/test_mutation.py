"""Reconstruction-based and classical mutators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnfuzz.errors import MagnitudeOutOfRange, ShapeMismatch, UnknownOp
from nnfuzz.model_format import load_model
from nnfuzz.mutation import (
    CLASSICAL_OPS,
    GeneratorPair,
    MutatorConfig,
    aeg_mutate,
    batch_generate,
    classical_mutate,
    map_range,
)

from engine_fixtures import fixture_path, identity_image_model


@pytest.fixture(scope="module")
def identity_pair():
    fwd = load_model(fixture_path("gen_identity_fwd.json"),
                     fixture_path("gen_identity_fwd.bin"))
    bwd = load_model(fixture_path("gen_identity_bwd.json"),
                     fixture_path("gen_identity_bwd.bin"))
    return GeneratorPair(forward=fwd, backward=bwd, source_range=(0.0, 1.0))


def sample_image(seed=0, shape=(8, 8, 1)):
    img = np.random.default_rng(seed).random(shape, dtype=np.float32)
    img.flat[0] = 0.0  # pin both range endpoints into the image
    img.flat[1] = 1.0
    return img


# ---------------------------------------------------------------------------
# map_range


def test_map_range_identity_returns_same_object():
    x = np.array([0.1, 0.9], dtype=np.float32)
    assert map_range(x, (0.0, 1.0), (0.0, 1.0)) is x


def test_map_range_endpoints():
    x = np.array([0.0, 0.5, 1.0], dtype=np.float32)
    out = map_range(x, (0.0, 1.0), (-1.0, 1.0))
    assert out.tolist() == [-1.0, 0.0, 1.0]
    back = map_range(out, (-1.0, 1.0), (0.0, 1.0))
    assert back.tolist() == [0.0, 0.5, 1.0]
    assert out.dtype == np.float32


# ---------------------------------------------------------------------------
# reconstruction mutator


def test_identity_pair_zero_noise_is_bit_exact(identity_pair):
    parent = sample_image()
    child = aeg_mutate(identity_pair, parent, np.random.default_rng(0), 0.0)
    assert child.dtype == np.float32
    assert child.tobytes() == parent.tobytes()


def test_zero_noise_still_consumes_draws(identity_pair):
    # stream position after mutation must not depend on noise_scale
    parent = sample_image()
    rng_a = np.random.default_rng(5)
    rng_b = np.random.default_rng(5)
    aeg_mutate(identity_pair, parent, rng_a, 0.0)
    rng_b.standard_normal(parent.shape)
    assert rng_a.random() == rng_b.random()


def test_mutation_deterministic_for_seed(identity_pair):
    parent = sample_image(3)
    a = aeg_mutate(identity_pair, parent, np.random.default_rng(11), 0.02)
    b = aeg_mutate(identity_pair, parent, np.random.default_rng(11), 0.02)
    assert a.tobytes() == b.tobytes()


def test_mutation_stays_in_range(identity_pair):
    parent = sample_image(4)
    for seed in range(5):
        child = aeg_mutate(identity_pair, parent, np.random.default_rng(seed), 0.3)
        assert child.min() >= 0.0
        assert child.max() <= 1.0


def test_noise_actually_perturbs(identity_pair):
    parent = sample_image(6)
    child = aeg_mutate(identity_pair, parent, np.random.default_rng(0), 0.02)
    assert child.tobytes() != parent.tobytes()
    # perturbation magnitude on the order of the noise scale
    assert float(np.abs(child - parent).mean()) < 0.1


def test_generator_shape_mismatch_rejected(identity_pair):
    with pytest.raises(ShapeMismatch):
        aeg_mutate(identity_pair, np.zeros((4, 4, 1), np.float32),
                   np.random.default_rng(0), 0.0)


def test_pair_internal_shape_mismatch_rejected():
    fwd = identity_image_model((8, 8, 1), name="f")
    bwd = identity_image_model((4, 4, 1), name="b")
    pair = GeneratorPair(forward=fwd, backward=bwd)
    with pytest.raises(ShapeMismatch):
        pair.check_shapes((8, 8, 1))


def test_batch_zero_noise_all_identical(identity_pair):
    parent = sample_image(7)
    config = MutatorConfig(kind="aeg", per_parent=6, noise_scale=0.0)
    batch = batch_generate(parent, config, identity_pair, np.random.default_rng(0))
    assert len(batch) == 6
    assert all(c.tobytes() == parent.tobytes() for c in batch)


def test_batch_with_noise_all_distinct(identity_pair):
    parent = sample_image(8)
    config = MutatorConfig(kind="aeg", per_parent=10, noise_scale=0.02)
    batch = batch_generate(parent, config, identity_pair, np.random.default_rng(0))
    assert len({c.tobytes() for c in batch}) == 10


# ---------------------------------------------------------------------------
# classical mutators


def test_brightness_zero_is_identity():
    img = sample_image(1)
    out = classical_mutate(img, "brightness", 0.0)
    assert np.array_equal(out, img)


def test_brightness_shifts_and_clips():
    img = sample_image(1)
    out = classical_mutate(img, "brightness", 0.4)
    interior = img < 0.6
    assert np.allclose(out[interior], img[interior] + np.float32(0.4))
    assert out.max() <= 1.0


def test_contrast_about_range_midpoint():
    img = np.array([[[0.25]]], dtype=np.float32)
    out = classical_mutate(img, "contrast", 2.0)
    assert out[0, 0, 0] == pytest.approx((0.25 - 0.5) * 2 + 0.5)  # 0.0
    # on a [-1, 1] domain the midpoint moves to 0
    img2 = np.array([[[0.5]]], dtype=np.float32)
    out2 = classical_mutate(img2, "contrast", 2.0, value_range=(-1.0, 1.0))
    assert out2[0, 0, 0] == pytest.approx(1.0)


def test_translate_moves_pixels_by_index():
    img = np.zeros((6, 6, 1), dtype=np.float32)
    img[2, 3, 0] = 1.0
    out = classical_mutate(img, "translate", (1.0, 0.0))
    # dx=1: content moves one column right
    assert out[2, 4, 0] == pytest.approx(1.0)
    assert out[2, 3, 0] == pytest.approx(0.0)
    out = classical_mutate(img, "translate", (0.0, -2.0))
    assert out[0, 3, 0] == pytest.approx(1.0)


def test_translate_fills_zeros_at_border():
    img = np.ones((4, 4, 1), dtype=np.float32)
    out = classical_mutate(img, "translate", (2.0, 0.0))
    assert np.all(out[:, :2, 0] == 0.0)
    assert np.all(out[:, 2:, 0] == 1.0)


def test_scale_one_is_identity():
    img = sample_image(2, (5, 5, 1))
    out = classical_mutate(img, "scale", 1.0)
    assert np.array_equal(out, img)


def test_shear_zero_is_identity():
    img = sample_image(2, (5, 5, 1))
    assert np.array_equal(classical_mutate(img, "shear", 0.0), img)


def test_rotate_full_turn_is_identity():
    img = sample_image(2, (7, 7, 1))
    out = classical_mutate(img, "rotate", 360.0)
    assert np.allclose(out, img, atol=1e-3)


def test_rotate_quarter_turn_moves_corner_mass():
    img = np.zeros((5, 5, 1), dtype=np.float32)
    img[0, 4, 0] = 1.0  # top-right
    out = classical_mutate(img, "rotate", 90.0)
    # quarter turn maps the top-right corner onto the bottom-right
    assert out[4, 4, 0] == pytest.approx(1.0, abs=1e-5)


def test_blur_zero_is_identity_and_blur_smooths():
    img = sample_image(5, (8, 8, 1))
    assert np.array_equal(classical_mutate(img, "blur", 0.0), img)
    blurred = classical_mutate(img, "blur", 1.5)
    assert blurred.std() < img.std()


def test_noise_op_uses_rng():
    img = sample_image(5)
    with pytest.raises(MagnitudeOutOfRange):
        classical_mutate(img, "noise", 0.1, rng=None)
    a = classical_mutate(img, "noise", 0.1, rng=np.random.default_rng(3))
    b = classical_mutate(img, "noise", 0.1, rng=np.random.default_rng(3))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, img)


def test_unknown_op_rejected():
    with pytest.raises(UnknownOp):
        classical_mutate(sample_image(), "posterize", 1.0)


@pytest.mark.parametrize("op, magnitude", [
    ("brightness", 1.5),
    ("contrast", 0.0),
    ("contrast", 5.0),
    ("blur", -1.0),
    ("scale", 0.1),
    ("rotate", 400.0),
    ("translate", (9.0, 0.0)),
])
def test_magnitude_out_of_documented_range(op, magnitude):
    with pytest.raises(MagnitudeOutOfRange):
        classical_mutate(sample_image(), op, magnitude)


def test_classical_batch_shape_and_range():
    parent = sample_image(9)
    config = MutatorConfig(kind="classical", per_parent=40)
    batch = batch_generate(parent, config, None, np.random.default_rng(0))
    assert len(batch) == 40
    for c in batch:
        assert c.shape == parent.shape
        assert c.dtype == np.float32
        assert c.min() >= 0.0 and c.max() <= 1.0


def test_classical_batch_respects_value_range():
    parent = (sample_image(10) * 2 - 1).astype(np.float32)
    config = MutatorConfig(kind="classical", per_parent=30,
                           value_range=(-1.0, 1.0))
    batch = batch_generate(parent, config, None, np.random.default_rng(4))
    for c in batch:
        assert c.min() >= -1.0 and c.max() <= 1.0


def test_batch_unknown_kind_rejected():
    with pytest.raises(UnknownOp):
        batch_generate(sample_image(), MutatorConfig(kind="fancy"), None,
                       np.random.default_rng(0))


def test_aeg_batch_requires_generators():
    with pytest.raises(UnknownOp):
        batch_generate(sample_image(), MutatorConfig(kind="aeg"), None,
                       np.random.default_rng(0))


# ---------------------------------------------------------------------------
# properties


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), noise=st.sampled_from([0.0, 0.01, 0.05]))
def test_aeg_deterministic_and_in_range(identity_pair, seed, noise):
    parent = sample_image(seed % 17)
    rng1 = np.random.default_rng(seed)
    rng2 = np.random.default_rng(seed)
    a = aeg_mutate(identity_pair, parent, rng1, noise)
    b = aeg_mutate(identity_pair, parent, rng2, noise)
    assert a.tobytes() == b.tobytes()
    assert a.min() >= 0.0 and a.max() <= 1.0


@settings(max_examples=25, deadline=None)
@given(
    dx=st.integers(-3, 3),
    dy=st.integers(-3, 3),
    px=st.integers(0, 5),
    py=st.integers(0, 5),
)
def test_integer_translate_index_oracle(dx, dy, px, py):
    img = np.zeros((6, 6, 1), dtype=np.float32)
    img[py, px, 0] = 1.0
    out = classical_mutate(img, "translate", (float(dx), float(dy)))
    tx, ty = px + dx, py + dy
    expected = np.zeros((6, 6, 1), dtype=np.float32)
    if 0 <= tx < 6 and 0 <= ty < 6:
        expected[ty, tx, 0] = 1.0
    assert np.allclose(out, expected, atol=1e-6)
