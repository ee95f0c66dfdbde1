"""Candidate generation: reconstruction-based and classical mutators.

The reconstruction mutator perturbs a seed with small Gaussian noise, pushes
it through a forward generator and back through its inverse-direction twin,
and returns the reconstruction.  The round trip through the generator pair
keeps candidates on the data manifold while the noise explores around the
seed.  Value ranges are adapted at the boundary: the seed lives in the
classifier's range, the generators in their own declared range.

Classical mutators are standard pixel and affine transforms.  Affine ops
resample with bilinear interpolation and zero fill outside the image.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MagnitudeOutOfRange, ShapeMismatch, UnknownOp
from .inference import forward
from .model_format import Model, output_shape


@dataclass
class GeneratorPair:
    """Forward and backward generators plus the image-domain value range.

    Each generator model works inside its manifest's declared input_range,
    both for inputs and outputs.  ``source_range`` is the range images use
    outside the pair, normally the classifier's input_range.
    """

    forward: Model
    backward: Model
    source_range: tuple[float, float] = (0.0, 1.0)

    def check_shapes(self, image_shape: tuple) -> None:
        fwd_in = tuple(self.forward.manifest.input_shape)
        fwd_out = output_shape(self.forward.manifest)
        bwd_in = tuple(self.backward.manifest.input_shape)
        bwd_out = output_shape(self.backward.manifest)
        if fwd_in != tuple(image_shape):
            raise ShapeMismatch(
                f"forward generator takes {fwd_in}, images are {tuple(image_shape)}"
            )
        if fwd_out != bwd_in:
            raise ShapeMismatch(
                f"forward generator emits {fwd_out}, backward takes {bwd_in}"
            )
        if bwd_out != tuple(image_shape):
            raise ShapeMismatch(
                f"backward generator emits {bwd_out}, images are {tuple(image_shape)}"
            )


def map_range(x: np.ndarray, src: tuple[float, float],
              dst: tuple[float, float]) -> np.ndarray:
    """Affine map from value range ``src`` to ``dst``.

    Equal ranges return the input untouched, which keeps identity
    round trips bit-exact.
    """
    if tuple(src) == tuple(dst):
        return x
    scale = np.float32((dst[1] - dst[0]) / (src[1] - src[0]))
    return ((x - np.float32(src[0])) * scale + np.float32(dst[0])).astype(
        np.float32, copy=False
    )


def aeg_mutate(gens: GeneratorPair, parent: np.ndarray,
               rng: np.random.Generator, noise_scale: float = 0.02) -> np.ndarray:
    """One reconstruction-mutated candidate from ``parent``.

    Consumes exactly H*W*C Gaussian draws from ``rng`` regardless of
    ``noise_scale``, so the rng stream position does not depend on the
    noise setting.  With identity generators and noise_scale 0 the result
    equals the parent bit for bit.
    """
    gens.check_shapes(parent.shape)
    lo, hi = gens.source_range

    draws = rng.standard_normal(parent.shape)
    x = np.asarray(parent, dtype=np.float32)
    if noise_scale != 0.0:
        x = x + (noise_scale * draws).astype(np.float32)
    x = np.clip(x, np.float32(lo), np.float32(hi))

    fwd_range = gens.forward.manifest.input_range
    bwd_range = gens.backward.manifest.input_range
    h = map_range(x, gens.source_range, fwd_range)
    h, _ = forward(gens.forward, h)
    h = map_range(h, fwd_range, bwd_range)
    h, _ = forward(gens.backward, h)
    out = map_range(h, bwd_range, gens.source_range)
    return np.clip(out, np.float32(lo), np.float32(hi))


# ---------------------------------------------------------------------------
# classical mutators

CLASSICAL_OPS = (
    "brightness", "contrast", "noise", "blur",
    "translate", "scale", "shear", "rotate",
)

# Documented magnitude range per op.  translate is checked per component.
MAGNITUDE_RANGES = {
    "brightness": (-1.0, 1.0),   # additive shift in value units
    "contrast": (0.1, 4.0),      # gain about the range midpoint; 1.0 is identity
    "noise": (0.0, 1.0),         # stddev of additive Gaussian noise
    "blur": (0.0, 5.0),          # Gaussian blur sigma in pixels; 0 is identity
    "translate": (-8.0, 8.0),    # (dx, dy) shift in pixels
    "scale": (0.5, 2.0),         # zoom about the center; 1.0 is identity
    "shear": (-1.0, 1.0),        # horizontal shear coefficient; 0 is identity
    "rotate": (-360.0, 360.0),   # rotation about the center, degrees
}


def _bilinear_sample(img: np.ndarray, src_x: np.ndarray,
                     src_y: np.ndarray) -> np.ndarray:
    """Sample img at float coords (src_x, src_y) per output pixel, zero outside."""
    h, w = img.shape[0], img.shape[1]
    x0 = np.floor(src_x).astype(np.int64)
    y0 = np.floor(src_y).astype(np.int64)
    fx = (src_x - x0).astype(np.float32)
    fy = (src_y - y0).astype(np.float32)

    def tap(yy, xx):
        inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        vals = img[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
        return np.where(inside[..., None], vals, np.float32(0.0))

    top = tap(y0, x0) * (1 - fx)[..., None] + tap(y0, x0 + 1) * fx[..., None]
    bot = tap(y0 + 1, x0) * (1 - fx)[..., None] + tap(y0 + 1, x0 + 1) * fx[..., None]
    out = top * (1 - fy)[..., None] + bot * fy[..., None]
    return out.astype(np.float32)


def _affine_sample(img: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Apply the inverse-mapping 2x3 ``matrix`` (output coords to input)."""
    h, w = img.shape[0], img.shape[1]
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    src_x = matrix[0, 0] * xs + matrix[0, 1] * ys + matrix[0, 2]
    src_y = matrix[1, 0] * xs + matrix[1, 1] * ys + matrix[1, 2]
    return _bilinear_sample(img, src_x, src_y)


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = max(1, int(np.ceil(3.0 * sigma)))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs ** 2) / (2.0 * sigma ** 2))
    return (k / k.sum()).astype(np.float32)


def _blur(img: np.ndarray, sigma: float) -> np.ndarray:
    if sigma == 0.0:
        return img.copy()
    k = _gaussian_kernel(sigma)
    r = len(k) // 2
    padded = np.pad(img, ((r, r), (0, 0), (0, 0)))
    out = np.zeros_like(img)
    for i, weight in enumerate(k):
        out += weight * padded[i : i + img.shape[0]]
    padded = np.pad(out, ((0, 0), (r, r), (0, 0)))
    final = np.zeros_like(img)
    for i, weight in enumerate(k):
        final += weight * padded[:, i : i + img.shape[1]]
    return final


def _check_magnitude(op: str, value: float) -> None:
    lo, hi = MAGNITUDE_RANGES[op]
    if not (lo <= value <= hi):
        raise MagnitudeOutOfRange(
            f"{op} magnitude {value} outside documented range [{lo}, {hi}]"
        )


def classical_mutate(parent: np.ndarray, op: str, magnitude,
                     rng: np.random.Generator | None = None,
                     value_range: tuple[float, float] = (0.0, 1.0)) -> np.ndarray:
    """Apply one classical mutator and clip back into ``value_range``.

    ``magnitude`` is a scalar except for translate, which takes an
    ``(dx, dy)`` pixel pair.  The noise op draws H*W*C Gaussians from
    ``rng``; every other op leaves the rng untouched.
    """
    if op not in CLASSICAL_OPS:
        raise UnknownOp(f"unknown mutation op {op!r}")
    img = np.asarray(parent, dtype=np.float32)
    lo, hi = value_range

    if op == "translate":
        try:
            dx, dy = (float(magnitude[0]), float(magnitude[1]))
        except (TypeError, IndexError) as exc:
            raise MagnitudeOutOfRange(
                f"translate magnitude must be an (dx, dy) pair, got {magnitude!r}"
            ) from exc
        _check_magnitude(op, dx)
        _check_magnitude(op, dy)
        matrix = np.array([[1.0, 0.0, -dx], [0.0, 1.0, -dy]])
        out = _affine_sample(img, matrix)
    else:
        magnitude = float(magnitude)
        _check_magnitude(op, magnitude)
        cy = (img.shape[0] - 1) / 2.0
        cx = (img.shape[1] - 1) / 2.0
        if op == "brightness":
            out = img + np.float32(magnitude)
        elif op == "contrast":
            mid = np.float32((lo + hi) / 2.0)
            out = (img - mid) * np.float32(magnitude) + mid
        elif op == "noise":
            if rng is None:
                raise MagnitudeOutOfRange("noise op needs an rng")
            draws = rng.standard_normal(img.shape)
            out = img + (magnitude * draws).astype(np.float32)
        elif op == "blur":
            out = _blur(img, magnitude)
        elif op == "scale":
            inv = 1.0 / magnitude
            matrix = np.array([
                [inv, 0.0, cx - inv * cx],
                [0.0, inv, cy - inv * cy],
            ])
            out = _affine_sample(img, matrix)
        elif op == "shear":
            # forward: x' = x + m * (y - cy); inverse subtracts the same term
            matrix = np.array([
                [1.0, -magnitude, magnitude * cy],
                [0.0, 1.0, 0.0],
            ])
            out = _affine_sample(img, matrix)
        else:  # rotate
            theta = np.deg2rad(magnitude)
            c, s = np.cos(theta), np.sin(theta)
            # inverse rotation about the center
            matrix = np.array([
                [c, s, cx - c * cx - s * cy],
                [-s, c, cy + s * cx - c * cy],
            ])
            out = _affine_sample(img, matrix)

    return np.clip(out, np.float32(lo), np.float32(hi))


@dataclass
class MutatorConfig:
    """How candidates are produced from a parent seed."""

    kind: str = "aeg"                      # "aeg" or "classical"
    per_parent: int = 10                   # candidates per selected parent
    noise_scale: float = 0.02              # stddev of pre-generator noise
    classical_ops: tuple = CLASSICAL_OPS   # op menu for kind="classical"
    magnitude_ranges: dict = field(default_factory=lambda: dict(MAGNITUDE_RANGES))
    value_range: tuple = (0.0, 1.0)        # image domain for classical ops


def batch_generate(parent: np.ndarray, config: MutatorConfig,
                   gens: GeneratorPair | None,
                   rng: np.random.Generator) -> list:
    """Produce exactly ``config.per_parent`` candidates in rng-draw order."""
    candidates = []
    for _ in range(config.per_parent):
        if config.kind == "aeg":
            if gens is None:
                raise UnknownOp("aeg mutation requires a generator pair")
            candidates.append(
                aeg_mutate(gens, parent, rng, config.noise_scale)
            )
        elif config.kind == "classical":
            op = config.classical_ops[int(rng.integers(len(config.classical_ops)))]
            lo, hi = config.magnitude_ranges[op]
            if op == "translate":
                magnitude = (rng.uniform(lo, hi), rng.uniform(lo, hi))
            else:
                magnitude = rng.uniform(lo, hi)
            candidates.append(
                classical_mutate(parent, op, magnitude, rng, config.value_range)
            )
        else:
            raise UnknownOp(f"unknown mutator kind {config.kind!r}")
    return candidates
