"""Torch building blocks whose trained weights export to the interchange set.

Everything intended for export sticks to conv2d / maxpool2d / upsample2d /
flatten / dense / softmax with relu, tanh or sigmoid activations.  The
discriminators are training-internal and never exported, so they are free
to use whatever layers they like.
"""

import torch
from torch import nn
from torch.nn import functional as F


# Generator working range.  Stopping short of tanh's asymptotes keeps the
# black background off the saturated tail, where L1 gradients die.
GEN_RANGE = (-0.9, 0.9)


def same_pad(size: int, k: int, stride: int) -> tuple[int, int]:
    """Asymmetric same padding: the extra pixel goes to the bottom/right."""
    out = (size - 1) // stride + 1
    pad = max((out - 1) * stride + k - size, 0)
    return pad // 2, pad - pad // 2


class SameConv2d(nn.Module):
    """Conv2d with the interchange format's same-padding rule.

    Torch's built-in padding is symmetric, which disagrees with the
    bottom/right-heavy split the inference engine uses for even overhangs,
    so the padding is applied explicitly ahead of an unpadded convolution.
    """

    def __init__(self, in_ch: int, out_ch: int, kernel: int, stride: int = 1):
        super().__init__()
        self.kernel = kernel
        self.stride = stride
        self.conv = nn.Conv2d(in_ch, out_ch, kernel, stride=stride)

    def forward(self, x):
        top, bottom = same_pad(x.shape[2], self.kernel, self.stride)
        left, right = same_pad(x.shape[3], self.kernel, self.stride)
        if top or bottom or left or right:
            x = F.pad(x, (left, right, top, bottom))
        return self.conv(x)


def build_generator() -> nn.Sequential:
    """Image-to-image translator, [-1, 1] in and out.

    Downsample once, widen, then upsample-and-conv back; tanh keeps the
    output inside the declared range.
    """
    return nn.Sequential(
        SameConv2d(1, 16, 3, stride=2), nn.ReLU(),
        SameConv2d(16, 32, 3), nn.ReLU(),
        nn.Upsample(scale_factor=2, mode="nearest"),
        SameConv2d(32, 16, 3), nn.ReLU(),
        SameConv2d(16, 1, 3), nn.Tanh(),
    )


def build_discriminator() -> nn.Sequential:
    """Real/fake scorer for least-squares adversarial training."""
    return nn.Sequential(
        nn.Conv2d(1, 16, 3, stride=2, padding=1), nn.LeakyReLU(0.2),
        nn.Conv2d(16, 32, 3, stride=2, padding=1), nn.LeakyReLU(0.2),
        nn.Flatten(), nn.Linear(32 * 4 * 4, 1),
    )


def build_classifier(classes: int = 4, size: int = 16) -> nn.Sequential:
    """Small conv classifier emitting logits; softmax is appended at export."""
    if size % 4 != 0:
        raise ValueError(f"size must be divisible by 4, got {size}")
    flat = 16 * (size // 4) ** 2
    return nn.Sequential(
        SameConv2d(1, 8, 3), nn.ReLU(), nn.MaxPool2d(2),
        SameConv2d(8, 16, 3), nn.ReLU(), nn.MaxPool2d(2),
        nn.Flatten(), nn.Linear(flat, 64), nn.ReLU(), nn.Linear(64, classes),
    )


def truncate_to_extractor(classifier: nn.Sequential) -> nn.Sequential:
    """Drop the logits head so the 64-wide hidden layer becomes the output."""
    children = list(classifier.children())
    if not isinstance(children[-1], nn.Linear):
        raise ValueError("classifier does not end in a linear head")
    return nn.Sequential(*children[:-1])


def to_nchw(images) -> torch.Tensor:
    """(N, H, W, C) float arrays to the (N, C, H, W) tensors torch wants."""
    t = torch.as_tensor(images, dtype=torch.float32)
    return t.permute(0, 3, 1, 2).contiguous()
