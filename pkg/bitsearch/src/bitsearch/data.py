"""Bundled synthetic 10-class image dataset for offline training runs.

Each class is a fixed random prototype in [0, 1]^(3 x H x W); samples are
noisy copies.  Fully seeded, no downloads.
"""

from __future__ import annotations

import torch


def synthetic_dataset(n_train: int, n_val: int, side: int = 32,
                      noise: float = 0.25, n_classes: int = 10,
                      seed: int = 0):
    g = torch.Generator().manual_seed(seed)
    protos = torch.rand((n_classes, 3, side, side), generator=g)

    def draw(n):
        labels = torch.randint(0, n_classes, (n,), generator=g)
        x = protos[labels] + noise * torch.randn(
            (n, 3, side, side), generator=g)
        return x.clamp(0.0, 1.0), labels

    return draw(n_train), draw(n_val)


def batches(data, batch_size: int):
    x, y = data
    for i in range(0, len(y), batch_size):
        yield x[i:i + batch_size], y[i:i + batch_size]
