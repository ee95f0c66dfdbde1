"""Forward execution of interchange-format models.

All math is float32, matching the on-disk weight precision.  Convolution is
cross-correlation (no kernel flip), the convention shared by the training
frameworks this format interoperates with.

While a forward pass runs, each dense and conv2d layer deposits its neuron
values into an ActivationRecord: one scalar per dense output unit, one
scalar per conv output channel (the spatial mean of the post-activation
map).  Coverage profiling consumes those records.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import NotAClassifier, RangeViolation, ShapeMismatch, UnsupportedLayer
from .model_format import Model

_RECORDED_KINDS = ("dense", "conv2d")


@dataclass
class ClipCounter:
    """Counts inputs that needed clipping into the declared range."""

    clipped_inputs: int = 0


@dataclass
class ActivationRecord:
    """Post-activation neuron values from one forward pass.

    ``layers`` holds one float32 vector per recorded layer, in network
    order.  ``values`` concatenates them into the flat neuron vector that
    coverage profiling indexes.
    """

    layers: list = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        if not self.layers:
            return np.zeros(0, dtype=np.float32)
        return np.concatenate([v.ravel() for v in self.layers])

    def __len__(self) -> int:
        return sum(v.size for v in self.layers)


def _apply_activation(h: np.ndarray, activation: str | None) -> np.ndarray:
    if activation in (None, "none"):
        return h
    if activation == "relu":
        return np.maximum(h, np.float32(0.0))
    if activation == "tanh":
        return np.tanh(h)
    if activation == "sigmoid":
        return np.float32(1.0) / (np.float32(1.0) + np.exp(-h))
    raise UnsupportedLayer(f"unknown activation {activation!r}")


def _same_pad(size: int, k: int, stride: int) -> tuple[int, int]:
    out = (size - 1) // stride + 1
    pad = max((out - 1) * stride + k - size, 0)
    return pad // 2, pad - pad // 2


def _conv2d(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray,
            stride: int, padding: str) -> np.ndarray:
    kh, kw = kernel.shape[2], kernel.shape[3]
    if padding == "same":
        top, bottom = _same_pad(x.shape[0], kh, stride)
        left, right = _same_pad(x.shape[1], kw, stride)
        if top or bottom or left or right:
            x = np.pad(x, ((top, bottom), (left, right), (0, 0)))
    windows = sliding_window_view(x, (kh, kw), axis=(0, 1))[::stride, ::stride]
    # windows: (H', W', Cin, kh, kw); kernel: (Cout, Cin, kh, kw)
    y = np.tensordot(windows, kernel, axes=((2, 3, 4), (1, 2, 3)))
    return (y + bias).astype(np.float32, copy=False)


def _maxpool2d(x: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    windows = sliding_window_view(x, (kh, kw), axis=(0, 1))[::stride, ::stride]
    return windows.max(axis=(3, 4))


def _softmax(h: np.ndarray) -> np.ndarray:
    e = np.exp(h - h.max())
    return e / e.sum()


def _run_layer(spec, weights, h: np.ndarray) -> np.ndarray:
    kind = spec.kind
    if kind == "dense":
        kernel, bias = weights
        return _apply_activation(kernel @ h + bias, spec.activation)
    if kind == "conv2d":
        kernel, bias = weights
        y = _conv2d(h, kernel, bias, spec["stride"], spec["padding"])
        return _apply_activation(y, spec.activation)
    if kind == "maxpool2d":
        return _maxpool2d(h, spec["kh"], spec["kw"], spec["stride"])
    if kind == "upsample2d":
        f = spec["factor"]
        return np.repeat(np.repeat(h, f, axis=0), f, axis=1)
    if kind == "flatten":
        return h.reshape(-1)
    if kind == "softmax":
        return _softmax(h)
    raise UnsupportedLayer(f"cannot execute layer kind {kind!r}")


def forward(model: Model, x: np.ndarray, *, strict: bool = False,
            clip_counter: ClipCounter | None = None
            ) -> tuple[np.ndarray, ActivationRecord]:
    """Run ``x`` through the model.

    Args:
        model: loaded interchange model.
        x: float32 input matching the manifest's input_shape.
        strict: when True an out-of-range input raises RangeViolation;
            otherwise it is clipped and the counter incremented.
        clip_counter: optional counter receiving clip events.

    Returns:
        (output, record): the final layer output and the ActivationRecord
        of every dense/conv2d layer passed through.
    """
    expected = tuple(model.manifest.input_shape)
    if tuple(x.shape) != expected:
        raise ShapeMismatch(f"input shape {tuple(x.shape)}, model expects {expected}")
    h = np.asarray(x, dtype=np.float32)

    lo, hi = model.manifest.input_range
    h_min, h_max = float(h.min()), float(h.max())
    if h_min < lo or h_max > hi:
        if strict:
            raise RangeViolation(
                f"input values span [{h_min}, {h_max}], model declares [{lo}, {hi}]"
            )
        h = np.clip(h, np.float32(lo), np.float32(hi))
        if clip_counter is not None:
            clip_counter.clipped_inputs += 1

    record = ActivationRecord()
    for spec, weights in zip(model.manifest.layers, model.layer_weights):
        h = _run_layer(spec, weights, h)
        if spec.kind == "dense":
            record.layers.append(h.astype(np.float32, copy=True))
        elif spec.kind == "conv2d":
            record.layers.append(h.mean(axis=(0, 1), dtype=np.float32))
    return h, record


def layer_output(model: Model, x: np.ndarray, index: int) -> np.ndarray:
    """Post-activation output of layer ``index`` for input ``x``.

    Runs only the prefix of the network up to that layer.
    """
    if not 0 <= index < len(model.manifest.layers):
        raise ShapeMismatch(
            f"layer index {index} out of range for {len(model.manifest.layers)} layers"
        )
    expected = tuple(model.manifest.input_shape)
    if tuple(x.shape) != expected:
        raise ShapeMismatch(f"input shape {tuple(x.shape)}, model expects {expected}")
    h = np.asarray(x, dtype=np.float32)
    lo, hi = model.manifest.input_range
    if float(h.min()) < lo or float(h.max()) > hi:
        h = np.clip(h, np.float32(lo), np.float32(hi))
    for spec, weights in zip(model.manifest.layers[: index + 1],
                             model.layer_weights[: index + 1]):
        h = _run_layer(spec, weights, h)
    return h


def classify(model: Model, x: np.ndarray, *, strict: bool = False,
             clip_counter: ClipCounter | None = None) -> tuple[int, np.ndarray]:
    """Predicted label and probability vector for ``x``.

    The model's final layer must be softmax.  Ties resolve to the lowest
    label index.
    """
    layers = model.manifest.layers
    if not layers or layers[-1].kind != "softmax":
        raise NotAClassifier(
            f"model {model.manifest.name!r} does not end in softmax"
        )
    probs, _ = forward(model, x, strict=strict, clip_counter=clip_counter)
    return int(np.argmax(probs)), probs
