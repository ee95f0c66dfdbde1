"""Least-squares adversarial terms and the cycle reconstruction penalty."""

import torch


def least_squares_real(scores: torch.Tensor) -> torch.Tensor:
    """Mean squared distance of discriminator scores from the real target 1."""
    return torch.mean((scores - 1.0) ** 2)


def least_squares_fake(scores: torch.Tensor) -> torch.Tensor:
    """Mean squared distance of discriminator scores from the fake target 0."""
    return torch.mean(scores ** 2)


def discriminator_loss(real_scores, fake_scores) -> torch.Tensor:
    return 0.5 * (least_squares_real(real_scores) + least_squares_fake(fake_scores))


def generator_adversarial_loss(fake_scores) -> torch.Tensor:
    # the generator wants fakes scored as real
    return least_squares_real(fake_scores)


def cycle_term(reconstruction: torch.Tensor, original: torch.Tensor) -> torch.Tensor:
    """Mean per-pixel L1 distance between a round trip and its source."""
    return torch.mean(torch.abs(reconstruction - original))


def cycle_loss(p, q, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Both round-trip penalties: x -> P -> Q -> x and y -> Q -> P -> y."""
    return cycle_term(q(p(x)), x) + cycle_term(p(q(y)), y)
