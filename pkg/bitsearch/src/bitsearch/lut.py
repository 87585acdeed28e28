"""Readers and writers for the dsppack interchange documents.

This package deliberately shares no code with the packing toolkit: the
JSON schemas are the contract.  Throughputs are kept twice, as exact
rationals for bookkeeping that must match the toolkit bit-for-bit, and as
a float grid for differentiable training.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import torch


@dataclass
class ThroughputTable:
    kernel_shape: tuple[int, int]
    bits_lo: int
    bits_hi: int
    exact: dict  # (w_b, a_b) -> Fraction
    grid: torch.Tensor  # [n_bits, n_bits] float, indexed [w - lo, a - lo]

    @property
    def widths(self) -> list[int]:
        return list(range(self.bits_lo, self.bits_hi + 1))


def load_table(path) -> ThroughputTable:
    with open(path) as fh:
        doc = json.load(fh)
    lo, hi = doc["bits_range"]
    n = hi - lo + 1
    exact = {}
    grid = torch.ones((n, n), dtype=torch.float64)
    for e in doc["entries"]:
        t = Fraction(e["t_mul"]["num"], e["t_mul"]["den"])
        exact[(e["w_b"], e["a_b"])] = t
        grid[e["w_b"] - lo, e["a_b"] - lo] = float(t)
    if len(exact) != n * n:
        raise ValueError(f"{path}: table incomplete ({len(exact)} of {n*n})")
    return ThroughputTable(tuple(doc["kernel_shape"]), lo, hi, exact, grid)


class TableSet:
    def __init__(self, tables):
        self.by_shape = {t.kernel_shape: t for t in tables}

    def for_layer(self, layer: dict) -> ThroughputTable:
        shape = ((1, 1) if layer["op_kind"] == "fully_connected"
                 else (layer["k_h"], layer["k_w"]))
        if shape not in self.by_shape:
            raise KeyError(f"no throughput table for kernel shape {shape}")
        return self.by_shape[shape]


def load_tables(paths) -> TableSet:
    return TableSet([load_table(p) for p in paths])


def load_net(path) -> list[dict]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != 1:
        raise ValueError(f"{path}: unsupported network schema")
    return doc["layers"]


def layer_op_mul(layer: dict) -> int:
    """MAC count, mirroring the toolkit's accounting (part of the schema
    semantics; cross-checked against its reports in the tests)."""
    if layer["op_kind"] == "fully_connected":
        return layer["c_in"] * layer["c_out"]
    return (layer["h_out"] * layer["w_out"] * layer["k_h"] * layer["k_w"]
            * layer["c_in"] * layer["c_out"] // layer["groups"])


def save_assignment(path, assignment: dict) -> None:
    """Write {layer: {w_b, a_b}} in the toolkit's assignment schema."""
    doc = {name: {"w_b": int(w), "a_b": int(a)}
           for name, (w, a) in sorted(assignment.items())}
    with open(path, "w") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def exact_op_dsp(layers, assignment, tables: TableSet) -> Fraction:
    """Total DSP operations under a concrete assignment, exact arithmetic.

    Equals the complexity loss at a one-hot selection, and must agree
    bit-for-bit with the toolkit's own evaluation of the same files.
    """
    total = Fraction(0)
    for layer in layers:
        w, a = assignment[layer["name"]]
        t = tables.for_layer(layer).exact[(w, a)]
        total += Fraction(layer_op_mul(layer)) / t
    return total
