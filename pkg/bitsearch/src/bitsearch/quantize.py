"""Uniform quantizers with straight-through gradients.

Weights pass through a tanh normalization into [0, 1], are quantized on a
uniform grid of 2^k levels, and are mapped back to [-1, 1]; activations are
clipped to [0, 1] and quantized on the same grid.  Rounding is
straight-through: identity gradient.
"""

from __future__ import annotations

import torch


class _RoundSTE(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x):
        return torch.round(x)

    @staticmethod
    def backward(ctx, grad):
        return grad


def round_ste(x: torch.Tensor) -> torch.Tensor:
    return _RoundSTE.apply(x)


def quantize_unit(x: torch.Tensor, bits: int) -> torch.Tensor:
    """Quantize values in [0, 1] onto the uniform grid m / (2^bits - 1)."""
    levels = (1 << bits) - 1
    return round_ste(x * levels) / levels


def quantize_code(x: float, bits: int) -> int:
    """Integer grid code of a unit-interval value (inference-side helper)."""
    levels = (1 << bits) - 1
    return int(round(x * levels))


def dequantize_code(q: int, bits: int) -> float:
    levels = (1 << bits) - 1
    return q / levels


def quantize_weight(w: torch.Tensor, bits: int) -> torch.Tensor:
    """Tanh-normalized symmetric weight quantization to 2^bits levels."""
    t = torch.tanh(w)
    unit = t / (2 * t.abs().max().clamp_min(1e-8)) + 0.5
    return 2 * quantize_unit(unit, bits) - 1


def quantize_activation(x: torch.Tensor, bits: int) -> torch.Tensor:
    return quantize_unit(x.clamp(0.0, 1.0), bits)
