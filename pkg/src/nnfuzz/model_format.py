"""Model interchange format.

A model on disk is two files: a JSON manifest describing the architecture
and a flat binary blob holding every weight as little-endian IEEE-754
binary32.  The blob is the concatenation, in layer order, of each
parameterized layer's kernel followed by its bias:

* dense kernel is laid out ``[out][in]`` row-major, bias ``[out]``
* conv2d kernel is laid out ``[out_ch][in_ch][kh][kw]`` row-major,
  bias ``[out_ch]``

Layers without parameters contribute nothing to the blob.  The manifest
declares the total float count up front so truncation is detectable without
trusting the architecture description.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IoError,
    MalformedManifest,
    NonFiniteWeight,
    ShapeChainError,
    WeightCountMismatch,
)

FORMAT_VERSION = 1

LAYER_KINDS = ("dense", "conv2d", "maxpool2d", "upsample2d", "flatten", "softmax")
ACTIVATIONS = ("none", "relu", "tanh", "sigmoid")
PADDINGS = ("same", "valid")

# JSON keys per layer kind, in canonical serialization order.
_PARAM_KEYS = {
    "dense": ("in", "out"),
    "conv2d": ("in_ch", "out_ch", "kh", "kw", "stride", "padding"),
    "maxpool2d": ("kh", "kw", "stride"),
    "upsample2d": ("factor",),
    "flatten": (),
    "softmax": (),
}

_ACTIVATED_KINDS = ("dense", "conv2d")


@dataclass
class LayerSpec:
    """One layer of a feed-forward network.

    ``params`` holds the kind-specific integer/string parameters under their
    JSON key names.  ``activation`` is set for dense and conv2d layers only.
    """

    kind: str
    params: dict = field(default_factory=dict)
    activation: str | None = None

    def __getitem__(self, key):
        return self.params[key]


@dataclass
class Manifest:
    """Architecture description loaded from a manifest file."""

    name: str
    input_shape: tuple[int, int, int]
    input_range: tuple[float, float]
    layers: list[LayerSpec]
    feature_layer: int | None = None
    declared_weight_count: int = 0
    format_version: int = FORMAT_VERSION


@dataclass
class Model:
    """A network plus its materialized weights.

    ``flat_weights`` is the raw float32 vector exactly as stored on disk.
    ``layer_weights[i]`` is ``(kernel, bias)`` for parameterized layers and
    None otherwise; the arrays are views into ``flat_weights``.
    """

    manifest: Manifest
    flat_weights: np.ndarray
    layer_weights: list


# ---------------------------------------------------------------------------
# per-layer accounting


def layer_param_count(spec: LayerSpec) -> int:
    """Number of floats the layer contributes to the weight blob."""
    if spec.kind == "dense":
        return spec["in"] * spec["out"] + spec["out"]
    if spec.kind == "conv2d":
        return (
            spec["out_ch"] * spec["in_ch"] * spec["kh"] * spec["kw"]
            + spec["out_ch"]
        )
    return 0


def layer_neuron_count(spec: LayerSpec) -> int:
    """Number of coverage neurons the layer contributes.

    A dense layer exposes one neuron per output unit.  A conv2d layer
    exposes one neuron per output channel (its spatial map is summarized
    by the mean at record time).  Pooling, upsampling, flatten and softmax
    expose none.
    """
    if spec.kind == "dense":
        return spec["out"]
    if spec.kind == "conv2d":
        return spec["out_ch"]
    return 0


def _pool_out(size: int, k: int, stride: int) -> int:
    return (size - k) // stride + 1


def layer_output_shape(spec: LayerSpec, in_shape: tuple, index: int) -> tuple:
    """Output shape of one layer given its input shape.

    ``index`` only decorates error messages.  Raises ShapeChainError when the
    layer cannot accept ``in_shape``.
    """
    kind = spec.kind
    if kind == "dense":
        if len(in_shape) != 1:
            raise ShapeChainError(
                f"layer {index}: dense expects a vector input, got {in_shape}"
            )
        if in_shape[0] != spec["in"]:
            raise ShapeChainError(
                f"layer {index}: dense expects {spec['in']} inputs, got {in_shape[0]}"
            )
        return (spec["out"],)

    if kind == "conv2d":
        if len(in_shape) != 3:
            raise ShapeChainError(
                f"layer {index}: conv2d expects an image input, got {in_shape}"
            )
        h, w, c = in_shape
        if c != spec["in_ch"]:
            raise ShapeChainError(
                f"layer {index}: conv2d expects {spec['in_ch']} channels, got {c}"
            )
        stride = spec["stride"]
        if spec["padding"] == "same":
            out_h = (h - 1) // stride + 1
            out_w = (w - 1) // stride + 1
        else:  # valid
            if h < spec["kh"] or w < spec["kw"]:
                raise ShapeChainError(
                    f"layer {index}: conv2d valid window {spec['kh']}x{spec['kw']}"
                    f" does not fit input {h}x{w}"
                )
            out_h = _pool_out(h, spec["kh"], stride)
            out_w = _pool_out(w, spec["kw"], stride)
        return (out_h, out_w, spec["out_ch"])

    if kind == "maxpool2d":
        if len(in_shape) != 3:
            raise ShapeChainError(
                f"layer {index}: maxpool2d expects an image input, got {in_shape}"
            )
        h, w, c = in_shape
        if h < spec["kh"] or w < spec["kw"]:
            raise ShapeChainError(
                f"layer {index}: maxpool2d window {spec['kh']}x{spec['kw']}"
                f" does not fit input {h}x{w}"
            )
        stride = spec["stride"]
        return (_pool_out(h, spec["kh"], stride), _pool_out(w, spec["kw"], stride), c)

    if kind == "upsample2d":
        if len(in_shape) != 3:
            raise ShapeChainError(
                f"layer {index}: upsample2d expects an image input, got {in_shape}"
            )
        h, w, c = in_shape
        f = spec["factor"]
        return (h * f, w * f, c)

    if kind == "flatten":
        n = 1
        for d in in_shape:
            n *= d
        return (n,)

    if kind == "softmax":
        if len(in_shape) != 1:
            raise ShapeChainError(
                f"layer {index}: softmax expects a vector input, got {in_shape}"
            )
        return in_shape

    raise ShapeChainError(f"layer {index}: unknown kind {kind!r}")


def shape_chain(manifest: Manifest) -> list[tuple]:
    """Output shape after every layer, validating consecutive compatibility."""
    shapes = []
    current: tuple = tuple(manifest.input_shape)
    for i, spec in enumerate(manifest.layers):
        current = layer_output_shape(spec, current, i)
        shapes.append(current)
    return shapes


def output_shape(manifest: Manifest) -> tuple:
    chain = shape_chain(manifest)
    return chain[-1] if chain else tuple(manifest.input_shape)


def manifest_param_count(manifest: Manifest) -> int:
    return sum(layer_param_count(s) for s in manifest.layers)


def neuron_count(model) -> int:
    """Total coverage neurons in a Model or Manifest."""
    manifest = model.manifest if isinstance(model, Model) else model
    return sum(layer_neuron_count(s) for s in manifest.layers)


# ---------------------------------------------------------------------------
# manifest parsing and serialization


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _parse_layer(d, index: int, violations: list) -> LayerSpec | None:
    if not isinstance(d, dict):
        violations.append(f"layer {index}: not an object")
        return None
    kind = d.get("kind")
    if kind not in LAYER_KINDS:
        violations.append(f"layer {index}: unknown kind {kind!r}")
        return None

    allowed = set(_PARAM_KEYS[kind]) | {"kind"}
    if kind in _ACTIVATED_KINDS:
        allowed.add("activation")
    for key in d:
        if key not in allowed:
            violations.append(f"layer {index}: unexpected key {key!r} for {kind}")

    params = {}
    ok = True
    for key in _PARAM_KEYS[kind]:
        if key not in d:
            violations.append(f"layer {index}: {kind} missing {key!r}")
            ok = False
            continue
        value = d[key]
        if key == "padding":
            if value not in PADDINGS:
                violations.append(
                    f"layer {index}: padding must be one of {PADDINGS}, got {value!r}"
                )
                ok = False
                continue
        else:
            if not _is_int(value) or value < 1:
                violations.append(
                    f"layer {index}: {key} must be a positive integer, got {value!r}"
                )
                ok = False
                continue
        params[key] = value

    activation = None
    if kind in _ACTIVATED_KINDS:
        activation = d.get("activation", "none")
        if activation not in ACTIVATIONS:
            violations.append(
                f"layer {index}: activation must be one of {ACTIVATIONS},"
                f" got {activation!r}"
            )
            ok = False
    elif "activation" in d:
        violations.append(f"layer {index}: {kind} does not take an activation")
        ok = False

    if not ok:
        return None
    return LayerSpec(kind=kind, params=params, activation=activation)


_TOP_KEYS = (
    "format_version",
    "name",
    "input_shape",
    "input_range",
    "layers",
    "feature_layer",
    "declared_weight_count",
)


def manifest_from_dict(d: dict) -> Manifest:
    """Parse and schema-check a manifest dictionary.

    Raises MalformedManifest carrying every schema violation found.  Shape
    chain consistency and weight count agreement are checked separately by
    :func:`check_manifest_semantics` because they need the parsed object.
    """
    violations: list[str] = []
    if not isinstance(d, dict):
        raise MalformedManifest("manifest is not a JSON object")

    for key in d:
        if key not in _TOP_KEYS:
            violations.append(f"unexpected manifest key {key!r}")

    if d.get("format_version") != FORMAT_VERSION:
        violations.append(
            f"format_version must be {FORMAT_VERSION}, got {d.get('format_version')!r}"
        )

    name = d.get("name")
    if not isinstance(name, str) or not name:
        violations.append(f"name must be a non-empty string, got {name!r}")
        name = ""

    shape = d.get("input_shape")
    if (
        not isinstance(shape, list)
        or len(shape) != 3
        or not all(_is_int(v) and v >= 1 for v in shape)
    ):
        violations.append(
            f"input_shape must be three positive integers [H, W, C], got {shape!r}"
        )
        shape = [1, 1, 1]

    rng = d.get("input_range")
    if (
        not isinstance(rng, list)
        or len(rng) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in rng)
        or not all(math.isfinite(v) for v in rng)
        or not rng[0] < rng[1]
    ):
        violations.append(
            f"input_range must be two finite numbers [lo, hi] with lo < hi, got {rng!r}"
        )
        rng = [0.0, 1.0]

    raw_layers = d.get("layers")
    layers: list[LayerSpec] = []
    if not isinstance(raw_layers, list):
        violations.append("layers must be a list")
    else:
        for i, layer_dict in enumerate(raw_layers):
            spec = _parse_layer(layer_dict, i, violations)
            if spec is not None:
                layers.append(spec)
        softmax_at = [i for i, ld in enumerate(raw_layers)
                      if isinstance(ld, dict) and ld.get("kind") == "softmax"]
        if softmax_at and (len(softmax_at) > 1 or softmax_at[0] != len(raw_layers) - 1):
            violations.append("softmax may appear at most once and only as the final layer")

    feature_layer = d.get("feature_layer")
    if feature_layer is not None and not _is_int(feature_layer):
        violations.append(f"feature_layer must be an integer or null, got {feature_layer!r}")
        feature_layer = None

    count = d.get("declared_weight_count")
    if not _is_int(count) or count < 0:
        violations.append(
            f"declared_weight_count must be a non-negative integer, got {count!r}"
        )
        count = 0

    if violations:
        raise MalformedManifest(violations)

    return Manifest(
        name=name,
        input_shape=tuple(shape),
        input_range=(float(rng[0]), float(rng[1])),
        layers=layers,
        feature_layer=feature_layer,
        declared_weight_count=count,
    )


def check_manifest_semantics(manifest: Manifest) -> None:
    """Checks that need the whole parsed manifest.

    Validates the shape chain (ShapeChainError), that declared_weight_count
    matches the architecture, and that feature_layer points at a layer whose
    output is a vector (both MalformedManifest).
    """
    chain = shape_chain(manifest)

    violations = []
    expected = manifest_param_count(manifest)
    if manifest.declared_weight_count != expected:
        violations.append(
            f"declared_weight_count is {manifest.declared_weight_count},"
            f" architecture needs {expected}"
        )
    fl = manifest.feature_layer
    if fl is not None:
        if not 0 <= fl < len(manifest.layers):
            violations.append(
                f"feature_layer {fl} out of range for {len(manifest.layers)} layers"
            )
        elif len(chain[fl]) != 1:
            violations.append(
                f"feature_layer {fl} output shape {chain[fl]} is not a vector"
            )
    if violations:
        raise MalformedManifest(violations)


def manifest_to_dict(manifest: Manifest) -> dict:
    """Serialize a manifest to a dictionary with canonical key order."""
    layers = []
    for spec in manifest.layers:
        entry = {"kind": spec.kind}
        for key in _PARAM_KEYS[spec.kind]:
            entry[key] = spec.params[key]
        if spec.kind in _ACTIVATED_KINDS:
            entry["activation"] = spec.activation
        layers.append(entry)
    return {
        "format_version": manifest.format_version,
        "name": manifest.name,
        "input_shape": list(manifest.input_shape),
        "input_range": [float(manifest.input_range[0]), float(manifest.input_range[1])],
        "layers": layers,
        "feature_layer": manifest.feature_layer,
        "declared_weight_count": manifest.declared_weight_count,
    }


def load_manifest(path) -> Manifest:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedManifest(f"manifest {path} is not valid JSON: {exc}") from exc
    return manifest_from_dict(data)


def save_manifest(manifest: Manifest, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest_to_dict(manifest), fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write manifest {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# weight blob handling


def _slice_weights(manifest: Manifest, flat: np.ndarray) -> list:
    """Carve the flat float vector into per-layer (kernel, bias) views."""
    weights = []
    offset = 0
    for spec in manifest.layers:
        if spec.kind == "dense":
            n_in, n_out = spec["in"], spec["out"]
            kernel = flat[offset : offset + n_in * n_out].reshape(n_out, n_in)
            offset += n_in * n_out
            bias = flat[offset : offset + n_out]
            offset += n_out
            weights.append((kernel, bias))
        elif spec.kind == "conv2d":
            oc, ic, kh, kw = spec["out_ch"], spec["in_ch"], spec["kh"], spec["kw"]
            size = oc * ic * kh * kw
            kernel = flat[offset : offset + size].reshape(oc, ic, kh, kw)
            offset += size
            bias = flat[offset : offset + oc]
            offset += oc
            weights.append((kernel, bias))
        else:
            weights.append(None)
    return weights


def load_model(manifest_path, weights_path) -> Model:
    """Load and fully validate a model from its two files."""
    manifest = load_manifest(manifest_path)
    check_manifest_semantics(manifest)

    try:
        with open(weights_path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read weights {weights_path}: {exc}") from exc

    expected_bytes = 4 * manifest.declared_weight_count
    if len(blob) != expected_bytes:
        raise WeightCountMismatch(
            f"weights {weights_path} holds {len(blob)} bytes,"
            f" manifest declares {manifest.declared_weight_count} floats"
            f" ({expected_bytes} bytes)"
        )
    flat = np.frombuffer(blob, dtype="<f4").copy()
    if not np.all(np.isfinite(flat)):
        bad = int(np.flatnonzero(~np.isfinite(flat))[0])
        raise NonFiniteWeight(
            f"weights {weights_path} contains a non-finite value at index {bad}"
        )
    return Model(
        manifest=manifest,
        flat_weights=flat,
        layer_weights=_slice_weights(manifest, flat),
    )


def save_model(model: Model, manifest_path, weights_path) -> None:
    """Write a model back out; weight bytes round-trip unchanged."""
    save_manifest(model.manifest, manifest_path)
    try:
        with open(weights_path, "wb") as fh:
            fh.write(np.ascontiguousarray(model.flat_weights, dtype="<f4").tobytes())
    except OSError as exc:
        raise IoError(f"cannot write weights {weights_path}: {exc}") from exc


def model_from_arrays(manifest: Manifest, layer_arrays: list) -> Model:
    """Build a Model from per-layer (kernel, bias) arrays.

    ``layer_arrays`` has one entry per layer: an (kernel, bias) pair for
    dense/conv2d layers, None otherwise.  Sets declared_weight_count on the
    manifest to match.  Convenient for fixtures and tests.
    """
    parts = []
    for spec, arrays in zip(manifest.layers, layer_arrays):
        if spec.kind in ("dense", "conv2d"):
            kernel, bias = arrays
            parts.append(np.asarray(kernel, dtype="<f4").ravel())
            parts.append(np.asarray(bias, dtype="<f4").ravel())
    flat = np.concatenate(parts) if parts else np.zeros(0, dtype="<f4")
    manifest.declared_weight_count = int(flat.size)
    check_manifest_semantics(manifest)
    return Model(
        manifest=manifest,
        flat_weights=flat,
        layer_weights=_slice_weights(manifest, flat),
    )


def validate_files(manifest_path, weights_path) -> list[str]:
    """Every format violation in the given file pair, one string each.

    Used by the validation CLI; an empty list means the model is valid.
    """
    try:
        manifest = load_manifest(manifest_path)
    except (MalformedManifest,) as exc:
        return list(exc.violations)
    except IoError as exc:
        return [str(exc)]

    violations: list[str] = []
    try:
        check_manifest_semantics(manifest)
    except MalformedManifest as exc:
        violations.extend(exc.violations)
    except ShapeChainError as exc:
        violations.append(str(exc))
        return violations  # weights cannot be interpreted without a valid chain

    try:
        load_model(manifest_path, weights_path)
    except (WeightCountMismatch, NonFiniteWeight, IoError) as exc:
        violations.append(str(exc))
    except MalformedManifest:
        pass  # already collected above
    return violations
