"""Interchange-format export for trained torch models.

Writes the manifest-plus-weight-blob pair and corpus directories that the
fuzzing engine consumes.  This module speaks the file formats directly and
deliberately imports nothing from the engine package: the files are the
contract between the two sides.

Format recap: the manifest is JSON (format_version 1) describing input
shape/range and an ordered layer list; the weight blob is the layers'
kernels and biases concatenated as little-endian float32, kernel before
bias, in layer order.  Tensor files are u32 rank, u32 dims, then
little-endian float32 data.
"""

import json
import os
import struct

import numpy as np
from torch import nn

from .dataset import LabeledImages
from .errors import UnsupportedLayer
from .networks import SameConv2d

FORMAT_VERSION = 1

_ACTIVATION_NAMES = {nn.ReLU: "relu", nn.Tanh: "tanh", nn.Sigmoid: "sigmoid"}


class ExportableModel:
    """A torch module bundled with the metadata its manifest needs."""

    def __init__(self, module: nn.Module, name: str, input_shape: tuple,
                 input_range: tuple = (0.0, 1.0), append_softmax: bool = False,
                 feature_layer=None):
        self.module = module
        self.name = name
        self.input_shape = tuple(input_shape)
        self.input_range = tuple(input_range)
        self.append_softmax = append_softmax
        self.feature_layer = feature_layer  # int index, "last_dense", or None


def _pair(value) -> tuple[int, int]:
    if isinstance(value, (tuple, list)):
        return int(value[0]), int(value[1])
    return int(value), int(value)


def _same_out(size, stride):
    return (size - 1) // stride + 1


def _valid_out(size, k, stride):
    return (size - k) // stride + 1


def _flatten_permutation(h: int, w: int, c: int) -> np.ndarray:
    """Column order mapping torch's (C, H, W) flatten to the format's (H, W, C).

    Entry j holds the torch flat index that lands at format position j, so
    permuting a linear layer's weight columns by it makes the exported dense
    layer agree with the engine's flatten order.
    """
    return np.arange(c * h * w).reshape(c, h, w).transpose(1, 2, 0).ravel()


def _walk(module: nn.Module, input_shape: tuple):
    """Convert a Sequential's children to layer dicts plus weight arrays."""
    shape = tuple(input_shape)  # (H, W, C) through image layers, (n,) after flatten
    layers: list[dict] = []
    arrays: list[np.ndarray] = []
    pending_permute = None  # set right after flatten, consumed by the next dense

    for child in module.children():
        if isinstance(child, SameConv2d):
            conv = child.conv
            h, w, c = shape
            oc = conv.out_channels
            layers.append({
                "kind": "conv2d", "in_ch": c, "out_ch": oc,
                "kh": child.kernel, "kw": child.kernel,
                "stride": child.stride, "padding": "same",
                "activation": "none",
            })
            arrays.append(conv.weight.detach().numpy())
            arrays.append(conv.bias.detach().numpy())
            shape = (_same_out(h, child.stride), _same_out(w, child.stride), oc)
        elif isinstance(child, nn.Conv2d):
            if _pair(child.padding) != (0, 0):
                raise UnsupportedLayer(
                    "Conv2d with built-in padding does not match the format's"
                    " padding rule; use SameConv2d or padding=0"
                )
            kh, kw = _pair(child.kernel_size)
            sh, sw = _pair(child.stride)
            if sh != sw:
                raise UnsupportedLayer("Conv2d stride must match in both dimensions")
            h, w, c = shape
            layers.append({
                "kind": "conv2d", "in_ch": c, "out_ch": child.out_channels,
                "kh": kh, "kw": kw, "stride": sh, "padding": "valid",
                "activation": "none",
            })
            arrays.append(child.weight.detach().numpy())
            arrays.append(child.bias.detach().numpy())
            shape = (_valid_out(h, kh, sh), _valid_out(w, kw, sw),
                     child.out_channels)
        elif isinstance(child, nn.MaxPool2d):
            kh, kw = _pair(child.kernel_size)
            sh, sw = _pair(child.stride if child.stride is not None
                           else child.kernel_size)
            if sh != sw:
                raise UnsupportedLayer("MaxPool2d stride must match in both dimensions")
            h, w, c = shape
            layers.append({"kind": "maxpool2d", "kh": kh, "kw": kw, "stride": sh})
            shape = (_valid_out(h, kh, sh), _valid_out(w, kw, sw), c)
        elif isinstance(child, nn.Upsample):
            if child.mode != "nearest":
                raise UnsupportedLayer(f"Upsample mode {child.mode!r} unsupported")
            factor = int(child.scale_factor)
            h, w, c = shape
            layers.append({"kind": "upsample2d", "factor": factor})
            shape = (h * factor, w * factor, c)
        elif isinstance(child, nn.Flatten):
            h, w, c = shape
            layers.append({"kind": "flatten"})
            pending_permute = _flatten_permutation(h, w, c)
            shape = (h * w * c,)
        elif isinstance(child, nn.Linear):
            weight = child.weight.detach().numpy()
            if pending_permute is not None:
                weight = weight[:, pending_permute]
                pending_permute = None
            layers.append({
                "kind": "dense", "in": child.in_features,
                "out": child.out_features, "activation": "none",
            })
            arrays.append(weight)
            arrays.append(child.bias.detach().numpy())
            shape = (child.out_features,)
        elif type(child) in _ACTIVATION_NAMES:
            if not layers or layers[-1]["kind"] not in ("conv2d", "dense") \
                    or layers[-1]["activation"] != "none":
                raise UnsupportedLayer(
                    "activation must directly follow a conv2d or dense layer"
                )
            layers[-1]["activation"] = _ACTIVATION_NAMES[type(child)]
        elif isinstance(child, nn.Softmax):
            layers.append({"kind": "softmax"})
        else:
            raise UnsupportedLayer(
                f"cannot express {type(child).__name__} in the interchange format"
            )
    return layers, arrays


def export_model(model: ExportableModel, manifest_path, weights_path) -> dict:
    """Write the manifest/weights pair for a trained model.

    Returns the manifest dictionary that was written.
    """
    layers, arrays = _walk(model.module, model.input_shape)
    if model.append_softmax:
        layers.append({"kind": "softmax"})

    feature_layer = model.feature_layer
    if feature_layer == "last_dense":
        dense_at = [i for i, d in enumerate(layers) if d["kind"] == "dense"]
        if not dense_at:
            raise UnsupportedLayer("no dense layer to mark as feature_layer")
        feature_layer = dense_at[-1]

    flat = (np.concatenate([a.ravel() for a in arrays])
            if arrays else np.zeros(0, dtype=np.float32))
    flat = flat.astype("<f4")

    manifest = {
        "format_version": FORMAT_VERSION,
        "name": model.name,
        "input_shape": list(model.input_shape),
        "input_range": [float(model.input_range[0]), float(model.input_range[1])],
        "layers": layers,
        "feature_layer": feature_layer,
        "declared_weight_count": int(flat.size),
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    with open(weights_path, "wb") as fh:
        fh.write(flat.tobytes())
    return manifest


def write_tensor_file(path, array: np.ndarray) -> None:
    """u32 rank, u32 dims, little-endian float32 payload."""
    arr = np.ascontiguousarray(array, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())


def write_dataset(directory, labeled: LabeledImages) -> list[str]:
    """Emit a labeled image set as an engine seed-corpus directory."""
    os.makedirs(directory, exist_ok=True)
    names = []
    for i in range(len(labeled)):
        name = f"img-{i:03d}"
        meta = {"id": name, "label": int(labeled.labels[i])}
        with open(os.path.join(directory, f"{name}.meta.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(meta, fh)
            fh.write("\n")
        write_tensor_file(os.path.join(directory, f"{name}.tensor"),
                          labeled.images[i])
        names.append(name)
    return names
