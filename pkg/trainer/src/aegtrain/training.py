"""Training loops: classifier, feature extractor, and the generator pair.

All loops are CPU-friendly and deterministic for a fixed seed (within
torch's own determinism limits).  Any non-finite loss aborts with
DivergenceDetected rather than silently producing garbage weights.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .config import TrainConfig
from .dataset import LabeledImages
from .errors import DivergenceDetected
from .losses import (
    cycle_term,
    discriminator_loss,
    generator_adversarial_loss,
)
from .networks import (
    GEN_RANGE,
    build_classifier,
    build_discriminator,
    build_generator,
    to_nchw,
    truncate_to_extractor,
)


def _ensure_finite(value: float, context: str) -> None:
    if not math.isfinite(value):
        raise DivergenceDetected(f"{context} loss became non-finite ({value})")


@dataclass
class ClassifierResult:
    model: nn.Sequential
    accuracy: float  # held-out accuracy
    degenerate: bool  # fewer than two classes present in the data


@dataclass
class GeneratorResult:
    forward: nn.Sequential
    backward: nn.Sequential
    history: dict = field(default_factory=dict)

    @property
    def final_cycle(self) -> float:
        """Last-epoch X round-trip error, mean per pixel in [-1, 1] units."""
        return self.history["cycle_x"][-1]


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def train_target_classifier(data: LabeledImages, cfg: TrainConfig,
                            classes: int = 4) -> ClassifierResult:
    """Train the softmax classifier; returns the net and held-out accuracy.

    A fifth of the data is held out for the accuracy figure.  A dataset
    with fewer than two distinct labels trains fine but is flagged
    degenerate, since its accuracy says nothing.
    """
    cfg.validate()
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)

    degenerate = len(np.unique(data.labels)) < 2
    order = rng.permutation(len(data))
    n_holdout = max(1, len(data) // 5)
    train_idx, hold_idx = order[n_holdout:], order[:n_holdout]

    x_all = to_nchw(data.images)
    y_all = torch.as_tensor(data.labels, dtype=torch.long)
    model = build_classifier(classes=classes, size=data.images.shape[1])
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    loss_fn = nn.CrossEntropyLoss()

    for _ in range(cfg.epochs):
        for idx in _batches(len(train_idx), cfg.batch_size, rng):
            batch = train_idx[idx]
            optimizer.zero_grad()
            loss = loss_fn(model(x_all[batch]), y_all[batch])
            loss.backward()
            optimizer.step()
            _ensure_finite(loss.item(), "classifier")

    with torch.no_grad():
        predicted = model(x_all[hold_idx]).argmax(dim=1)
        accuracy = float((predicted == y_all[hold_idx]).float().mean())
    return ClassifierResult(model=model, accuracy=accuracy, degenerate=degenerate)


def train_feature_extractor(data: LabeledImages, cfg: TrainConfig,
                            classes: int = 4) -> nn.Sequential:
    """Train a classifier, then truncate it to its 64-wide hidden layer."""
    result = train_target_classifier(data, cfg, classes=classes)
    return truncate_to_extractor(result.model)


def train_cycle_generators(domain_x: LabeledImages, domain_y: LabeledImages,
                           cfg: TrainConfig) -> GeneratorResult:
    """Adversarial training of the translator pair P: X->Y and Q: Y->X.

    Discriminators score each domain with the least-squares objective; the
    generators additionally pay ``cfg.cycle_weight`` times the L1 round-trip
    penalty in both directions.  Images are mapped into GEN_RANGE, the range
    the generators declare.
    """
    cfg.validate()
    if len(domain_x) == 0 or len(domain_y) == 0:
        raise ValueError("both domains must be nonempty")
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)

    lo, hi = GEN_RANGE
    x_all = to_nchw(domain_x.images) * (hi - lo) + lo
    y_all = to_nchw(domain_y.images) * (hi - lo) + lo

    p = build_generator()   # X -> Y
    q = build_generator()   # Y -> X
    d_x = build_discriminator()
    d_y = build_discriminator()

    g_opt = torch.optim.Adam(
        list(p.parameters()) + list(q.parameters()), lr=cfg.lr, betas=(0.5, 0.999))
    d_opt = torch.optim.Adam(
        list(d_x.parameters()) + list(d_y.parameters()), lr=cfg.lr,
        betas=(0.5, 0.999))

    history = {"cycle_x": [], "cycle_y": [], "g_adv": [], "d": []}
    n = min(len(domain_x), len(domain_y))

    for _ in range(cfg.epochs):
        epoch = {"cycle_x": 0.0, "cycle_y": 0.0, "g_adv": 0.0, "d": 0.0, "k": 0}
        x_order = rng.permutation(len(domain_x))[:n]
        y_order = rng.permutation(len(domain_y))[:n]
        for start in range(0, n, cfg.batch_size):
            xb = x_all[x_order[start:start + cfg.batch_size]]
            yb = y_all[y_order[start:start + cfg.batch_size]]

            fake_y = p(xb)
            fake_x = q(yb)

            d_opt.zero_grad()
            d_loss = (discriminator_loss(d_y(yb), d_y(fake_y.detach()))
                      + discriminator_loss(d_x(xb), d_x(fake_x.detach())))
            d_loss.backward()
            d_opt.step()

            g_opt.zero_grad()
            adv = (generator_adversarial_loss(d_y(fake_y))
                   + generator_adversarial_loss(d_x(fake_x)))
            cyc_x = cycle_term(q(fake_y), xb)
            cyc_y = cycle_term(p(fake_x), yb)
            g_loss = adv + cfg.cycle_weight * (cyc_x + cyc_y)
            g_loss.backward()
            g_opt.step()

            _ensure_finite(d_loss.item(), "discriminator")
            _ensure_finite(g_loss.item(), "generator")
            epoch["cycle_x"] += cyc_x.item()
            epoch["cycle_y"] += cyc_y.item()
            epoch["g_adv"] += adv.item()
            epoch["d"] += d_loss.item()
            epoch["k"] += 1

        for key in ("cycle_x", "cycle_y", "g_adv", "d"):
            history[key].append(epoch[key] / max(epoch["k"], 1))

    return GeneratorResult(forward=p, backward=q, history=history)
