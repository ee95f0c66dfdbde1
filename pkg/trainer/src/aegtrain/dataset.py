"""Procedural two-domain image dataset.

Four pattern classes on a dark canvas: horizontal bar, vertical bar, ring,
cross.  Every class is drawn in both domains; the only systematic
difference is stroke thickness (domain X thin, domain Y thick), so a
translator between the domains has an actual style to learn while class
identity stays intact.  Images are float32 in [0, 1], shape (H, W, 1).
"""

from dataclasses import dataclass

import numpy as np

from .config import SyntheticDatasetConfig

THIN = 1
THICK = 3


@dataclass
class LabeledImages:
    images: np.ndarray  # (N, H, W, 1) float32 in [0, 1]
    labels: np.ndarray  # (N,) int64

    def __len__(self) -> int:
        return len(self.labels)


def _draw_hbar(canvas, rng, thickness):
    s = canvas.shape[0]
    y0 = int(rng.integers(2, s - 2 - thickness))
    x0 = int(rng.integers(0, 3))
    x1 = int(rng.integers(s - 3, s))
    canvas[y0:y0 + thickness, x0:x1 + 1] = 1.0


def _draw_vbar(canvas, rng, thickness):
    s = canvas.shape[0]
    x0 = int(rng.integers(2, s - 2 - thickness))
    y0 = int(rng.integers(0, 3))
    y1 = int(rng.integers(s - 3, s))
    canvas[y0:y1 + 1, x0:x0 + thickness] = 1.0


def _draw_ring(canvas, rng, thickness):
    s = canvas.shape[0]
    cy = s / 2 + float(rng.uniform(-1.5, 1.5))
    cx = s / 2 + float(rng.uniform(-1.5, 1.5))
    r = float(rng.uniform(s * 0.28, s * 0.34))
    yy, xx = np.mgrid[0:s, 0:s]
    dist = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
    canvas[np.abs(dist - r) <= thickness / 2 + 0.3] = 1.0


def _draw_cross(canvas, rng, thickness):
    s = canvas.shape[0]
    cy = int(rng.integers(s // 2 - 2, s // 2 + 2))
    cx = int(rng.integers(s // 2 - 2, s // 2 + 2))
    arm = s // 2 - 2
    canvas[cy - thickness // 2:cy + (thickness + 1) // 2,
           max(cx - arm, 0):cx + arm + 1] = 1.0
    canvas[max(cy - arm, 0):cy + arm + 1,
           cx - thickness // 2:cx + (thickness + 1) // 2] = 1.0


_DRAWERS = (_draw_hbar, _draw_vbar, _draw_ring, _draw_cross)


def render_image(rng: np.random.Generator, label: int, thickness: int,
                 size: int = 16) -> np.ndarray:
    canvas = np.zeros((size, size), dtype=np.float32)
    _DRAWERS[label](canvas, rng, thickness)
    # usually knock a hole out of the stroke itself so classes overlap:
    # a cross missing an arm segment starts to look like a bar
    if rng.random() < 0.7:
        lit = np.argwhere(canvas > 0)
        cy, cx = lit[rng.integers(0, len(lit))]
        py = int(np.clip(cy - 2, 0, canvas.shape[0] - 4))
        px = int(np.clip(cx - 2, 0, canvas.shape[1] - 4))
        canvas[py:py + 4, px:px + 4] = 0.0
    intensity = float(rng.uniform(0.4, 1.0))
    noise = rng.uniform(0.0, 0.12, size=canvas.shape).astype(np.float32)
    img = np.clip(canvas * intensity + noise, 0.0, 1.0)
    return img[..., None].astype(np.float32)


def _render_set(rng, labels, thicknesses, size) -> LabeledImages:
    images = np.stack([
        render_image(rng, int(lab), thick, size)
        for lab, thick in zip(labels, thicknesses)
    ])
    return LabeledImages(images=images, labels=np.asarray(labels, dtype=np.int64))


def make_synthetic_dataset(cfg: SyntheticDatasetConfig
                           ) -> tuple[LabeledImages, LabeledImages, LabeledImages]:
    """Build (domain_X, domain_Y, labeled_test_set) from one seed.

    X and Y partition the training pool: per class, ``per_class`` thin
    images go to X and ``per_class`` thick ones to Y.  The test set is a
    disjoint draw mixing both stroke styles.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    s = cfg.image_size

    train_labels = np.repeat(np.arange(cfg.classes), cfg.per_class)
    x = _render_set(rng, train_labels, [THIN] * len(train_labels), s)
    y = _render_set(rng, train_labels, [THICK] * len(train_labels), s)

    test_labels = np.repeat(np.arange(cfg.classes), cfg.test_per_class)
    test_thick = [THIN if i % 2 == 0 else THICK for i in range(len(test_labels))]
    test = _render_set(rng, test_labels, test_thick, s)

    for part in (x, y, test):
        order = rng.permutation(len(part))
        part.images = part.images[order]
        part.labels = part.labels[order]
    return x, y, test
