"""Differentiable complexity objective over selection probabilities.

Each layer's throughput is the probability-weighted expectation over its
candidate bit-width pairs; the complexity loss is the expected total DSP
operations; the training objective adds it to the task loss with weight
eta.
"""

from __future__ import annotations

import torch

from .lut import TableSet, layer_op_mul


def weighted_throughput(layer: dict, pi_w: torch.Tensor, pi_a: torch.Tensor,
                        tables: TableSet) -> torch.Tensor:
    """Expected throughput:  sum_ij  pi_w[i] * pi_a[j] * T(w_i, a_j)."""
    grid = tables.for_layer(layer).grid.to(pi_w.dtype)
    return pi_w @ grid @ pi_a


def loss_comp(layers, pis: dict, tables: TableSet) -> torch.Tensor:
    """Expected total DSP operations, differentiable in every pi.

    ``pis`` maps layer name to (pi_w, pi_a) probability tensors over the
    table's bit-width axis.
    """
    total = None
    for layer in layers:
        pi_w, pi_a = pis[layer["name"]]
        t_bar = weighted_throughput(layer, pi_w, pi_a, tables)
        term = layer_op_mul(layer) / t_bar
        total = term if total is None else total + term
    return total


def total_loss(loss_acc: torch.Tensor, layers, pis, tables,
               eta: float) -> torch.Tensor:
    if eta == 0.0:
        return loss_acc
    return loss_acc + eta * loss_comp(layers, pis, tables)
