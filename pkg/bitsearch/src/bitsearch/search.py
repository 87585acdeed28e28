"""The bit-width search: alternating super-net training.

Model weights and selection logits are updated on alternating batches
(weights on even steps, selection on odd), both minimizing task loss plus
eta times the expected DSP-operation count.  After training, each layer's
highest-probability candidate pair becomes the emitted assignment.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import torch

from .data import batches, synthetic_dataset
from .losses import total_loss
from .lut import TableSet, exact_op_dsp
from .supernet import Supernet


@dataclass
class SearchConfig:
    epochs: int = 4
    batch_size: int = 64
    lr_weights: float = 0.05
    lr_select: float = 0.08
    eta: float = 1e-6
    seed: int = 7
    train_samples: int = 512
    val_samples: int = 256
    noise: float = 0.25

    @classmethod
    def from_file(cls, path) -> "SearchConfig":
        """Flat KEY=VALUE config; unknown keys rejected."""
        values = {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, val = line.partition("=")
                key = key.strip()
                if key not in cls.__dataclass_fields__:
                    raise ValueError(f"unknown config key {key!r}")
                kind = cls.__dataclass_fields__[key].type
                values[key] = int(val) if kind == "int" else float(val)
        cfg = cls(**values)
        for int_key in ("epochs", "batch_size", "seed", "train_samples",
                        "val_samples"):
            setattr(cfg, int_key, int(getattr(cfg, int_key)))
        return cfg


@dataclass
class SearchResult:
    assignment: dict
    loss_acc: float
    loss_comp: Fraction
    trace: list = field(default_factory=list)
    seconds: float = 0.0


def run_search(layers: list[dict], tables: TableSet, config: SearchConfig,
               eta: float | None = None) -> SearchResult:
    """Train the super-net and extract the bit-width assignment."""
    eta = config.eta if eta is None else eta
    torch.manual_seed(config.seed)
    widths = tables.by_shape[next(iter(tables.by_shape))].widths
    for t in tables.by_shape.values():
        if t.widths != widths:
            raise ValueError("tables disagree on the bit-width grid")
    net = Supernet(layers, widths)

    train, val = synthetic_dataset(config.train_samples, config.val_samples,
                                   noise=config.noise, seed=config.seed)
    opt_w = torch.optim.Adam(net.weight_parameters(), lr=config.lr_weights)
    sel_params = list(net.selection_parameters())
    opt_s = torch.optim.Adam(sel_params, lr=config.lr_select) if sel_params else None

    ce = torch.nn.CrossEntropyLoss()
    trace = []
    t0 = time.monotonic()
    step = 0
    for epoch in range(config.epochs):
        net.train()
        for x, y in batches(train, config.batch_size):
            update_selection = opt_s is not None and step % 2 == 1
            opt = opt_s if update_selection else opt_w
            opt.zero_grad()
            acc_loss = ce(net(x), y)
            loss = total_loss(acc_loss.double(), net.layer_docs,
                              net.probabilities(), tables, eta)
            loss.backward()
            opt.step()
            step += 1
        assignment = net.assignment()
        trace.append({
            "epoch": epoch,
            "op_dsp": float(exact_op_dsp(layers, assignment, tables)),
            "assignment": dict(assignment),
        })

    net.eval()
    with torch.no_grad():
        xv, yv = val
        val_loss = float(ce(net(xv), yv))
    assignment = net.assignment()
    return SearchResult(
        assignment=assignment,
        loss_acc=val_loss,
        loss_comp=exact_op_dsp(layers, assignment, tables),
        trace=trace,
        seconds=time.monotonic() - t0,
    )


def min_op_dsp_assignment(layers: list[dict], tables: TableSet) -> dict:
    """Per-layer exhaustive minimum of Op_dsp (frozen layers pinned): the
    limit a complexity-dominated search should reach."""
    out = {}
    for layer in layers:
        frozen = layer.get("frozen_bits")
        if frozen:
            out[layer["name"]] = (frozen["w_b"], frozen["a_b"])
            continue
        table = tables.for_layer(layer)
        best = max(((t, (w, a)) for (w, a), t in table.exact.items()),
                   key=lambda p: (p[0], p[1]))
        out[layer["name"]] = best[1]
    return out
