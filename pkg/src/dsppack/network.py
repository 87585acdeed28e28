"""Network descriptions and DSP-operation accounting.

A network is a list of layer shapes; each layer's multiplication count
divided by its packing throughput gives the layer's DSP operations, summed
into the network total.  Only convolution/fully-connected MACs are counted;
other DSP uses (batch norm, bias) are absorbed by the allocator's cost
model.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .schemas import validate_document
from .table import LookupTable

NET_SCHEMA_VERSION = 1

OP_KINDS = ("conv", "depthwise_conv", "pointwise_conv", "fully_connected")


class MissingEntryError(KeyError):
    """No table entry for a layer's kernel shape or bit-width pair."""


@dataclass(frozen=True)
class LayerSpec:
    name: str
    op_kind: str
    c_in: int
    c_out: int
    k_h: int
    k_w: int
    h_out: int
    w_out: int
    groups: int = 1
    frozen_bits: tuple[int, int] | None = None

    def __post_init__(self):
        if self.op_kind not in OP_KINDS:
            raise ValueError(f"unknown op_kind {self.op_kind!r}")
        dims = (self.c_in, self.c_out, self.k_h, self.k_w,
                self.h_out, self.w_out, self.groups)
        if any(d < 1 for d in dims):
            raise ValueError(f"layer {self.name}: dimensions must be >= 1")
        if self.c_in % self.groups or self.c_out % self.groups:
            raise ValueError(f"layer {self.name}: groups must divide channels")
        if self.op_kind == "depthwise_conv" and self.groups != self.c_in:
            raise ValueError(f"layer {self.name}: depthwise needs groups == c_in")
        if self.op_kind == "fully_connected" and (self.k_h, self.k_w) != (1, 1):
            raise ValueError(f"layer {self.name}: fully_connected is 1x1")

    @property
    def kernel_shape(self) -> tuple[int, int]:
        return (self.k_h, self.k_w)

    def to_dict(self) -> dict:
        doc = {
            "name": self.name,
            "op_kind": self.op_kind,
            "c_in": self.c_in,
            "c_out": self.c_out,
            "k_h": self.k_h,
            "k_w": self.k_w,
            "h_out": self.h_out,
            "w_out": self.w_out,
            "groups": self.groups,
        }
        if self.frozen_bits is not None:
            doc["frozen_bits"] = {"w_b": self.frozen_bits[0],
                                  "a_b": self.frozen_bits[1]}
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "LayerSpec":
        frozen = doc.get("frozen_bits")
        return cls(
            name=doc["name"],
            op_kind=doc["op_kind"],
            c_in=doc["c_in"],
            c_out=doc["c_out"],
            k_h=doc["k_h"],
            k_w=doc["k_w"],
            h_out=doc["h_out"],
            w_out=doc["w_out"],
            groups=doc["groups"],
            frozen_bits=(frozen["w_b"], frozen["a_b"]) if frozen else None,
        )


@dataclass
class NetworkSpec:
    layers: list[LayerSpec]
    version: int = NET_SCHEMA_VERSION

    def __post_init__(self):
        names = [l.name for l in self.layers]
        if len(set(names)) != len(names):
            raise ValueError("layer names must be unique")

    def to_dict(self) -> dict:
        return {"version": self.version,
                "layers": [l.to_dict() for l in self.layers]}

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkSpec":
        validate_document(doc, "net")
        return cls(layers=[LayerSpec.from_dict(d) for d in doc["layers"]],
                   version=doc["version"])


# Assignment: layer name -> (w_b, a_b)
BitwidthAssignment = dict


def assignment_to_dict(bits: BitwidthAssignment) -> dict:
    return {name: {"w_b": w, "a_b": a} for name, (w, a) in bits.items()}


def assignment_from_dict(doc: dict) -> BitwidthAssignment:
    validate_document(doc, "assign")
    return {name: (v["w_b"], v["a_b"]) for name, v in doc.items()}


def op_mul(layer: LayerSpec) -> int:
    """MAC count of one layer (standard convolution arithmetic)."""
    if layer.op_kind == "fully_connected":
        return layer.c_in * layer.c_out
    return (layer.h_out * layer.w_out * layer.k_h * layer.k_w
            * layer.c_in * layer.c_out // layer.groups)


class TableSet:
    """Lookup tables keyed by kernel shape; layers pick the matching one."""

    def __init__(self, tables):
        self._by_shape = {}
        for t in tables:
            key = tuple(t.kernel_shape)
            if key in self._by_shape:
                raise ValueError(f"duplicate table for kernel shape {key}")
            self._by_shape[key] = t

    @classmethod
    def of(cls, tables) -> "TableSet":
        if isinstance(tables, LookupTable):
            return cls([tables])
        if isinstance(tables, TableSet):
            return tables
        return cls(list(tables))

    def lookup(self, layer: LayerSpec, w_b: int, a_b: int) -> Fraction:
        shape = (1, 1) if layer.op_kind == "fully_connected" else layer.kernel_shape
        table = self._by_shape.get(shape)
        if table is None:
            raise MissingEntryError(
                f"no lookup table for kernel shape {shape} (layer {layer.name})")
        entry = table.entries.get((w_b, a_b))
        if entry is None:
            raise MissingEntryError(
                f"table {shape} has no entry for ({w_b}, {a_b})")
        return entry.t_mul

    def shapes(self):
        return sorted(self._by_shape)


def layer_op_dsp(layer: LayerSpec, bits: BitwidthAssignment, tables) -> Fraction:
    w_b, a_b = bits[layer.name]
    t = TableSet.of(tables).lookup(layer, w_b, a_b)
    return Fraction(op_mul(layer)) / t


def op_dsp(net: NetworkSpec, bits: BitwidthAssignment, tables) -> Fraction:
    """Total DSP operations: sum over layers of Op_mul / T_mul."""
    ts = TableSet.of(tables)
    total = Fraction(0)
    for layer in net.layers:
        if layer.name not in bits:
            raise MissingEntryError(f"assignment misses layer {layer.name}")
        w_b, a_b = bits[layer.name]
        total += Fraction(op_mul(layer)) / ts.lookup(layer, w_b, a_b)
    return total


def op_dsp_breakdown(net: NetworkSpec, bits: BitwidthAssignment, tables) -> list[dict]:
    """Per-layer report rows for the CLI and plan builders."""
    ts = TableSet.of(tables)
    rows = []
    for layer in net.layers:
        w_b, a_b = bits[layer.name]
        t = ts.lookup(layer, w_b, a_b)
        mul = op_mul(layer)
        rows.append({
            "name": layer.name,
            "op_kind": layer.op_kind,
            "op_mul": mul,
            "w_b": w_b,
            "a_b": a_b,
            "t_mul": {"num": t.numerator, "den": t.denominator},
            "op_dsp": {"num": (Fraction(mul) / t).numerator,
                       "den": (Fraction(mul) / t).denominator},
        })
    return rows
