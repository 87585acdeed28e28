"""Optimal-packing search and throughput lookup tables.

For every bit-width pair in the grid the search enumerates all valid
configurations and keeps the best under a deterministic total order:
maximal throughput, then maximal extra guard bits, then fewer correction
gates, kernel packing before filter packing, and finally the canonical
parameter tuple.  Table construction verifies every chosen entry by
simulation sweep before it is admitted (fail-closed: downstream consumers
trust these numbers).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction

from .packing import (
    GENERIC_SEQ_LEN,
    SIGNEDNESS_MODES,
    UNSIGNED,
    KernelPackingConfig,
    NoValidConfigError,
    PackingChoice,
    choice_to_entry,
    entry_to_choice,
    enumerate_configs,
)
from .profiles import DspProfile
from .simulate import SamplePolicy, VerificationFailure, verify_choice

TABLE_SCHEMA_VERSION = 1
DEFAULT_BITS = (2, 8)


@dataclass
class LookupTable:
    """Optimal packing choice per (weight bits, activation bits) cell."""

    profile: DspProfile
    kernel_shape: tuple[int, int]
    seq_len_policy: object  # "generic" | int
    signedness: str
    bits_range: tuple[int, int]
    entries: dict[tuple[int, int], PackingChoice] = field(default_factory=dict)
    version: int = TABLE_SCHEMA_VERSION

    def t_mul(self, w_b: int, a_b: int) -> Fraction:
        return self.entries[(w_b, a_b)].t_mul

    def cells(self):
        lo, hi = self.bits_range
        for w in range(lo, hi + 1):
            for a in range(lo, hi + 1):
                yield w, a

    def is_complete(self) -> bool:
        return all(cell in self.entries for cell in self.cells())


def search_optimal(
    w_b: int,
    a_b: int,
    kernel_shape: tuple[int, int],
    seq_len,
    profile: DspProfile,
    allow_overpack: bool = False,
    allow_separation: bool = False,
    signedness: str = UNSIGNED,
    strategies: tuple[str, ...] = ("kernel", "filter"),
) -> PackingChoice:
    """Best packing choice for one bit-width pair and kernel shape.

    Multi-row kernels factorize into row-wise 1-D convolutions, so filter
    packing sees K = kernel width.  ``strategies`` restricts the search
    space (used by the dominance checks).
    """
    k = kernel_shape[1]
    best = None
    best_key = None
    for choice in enumerate_configs(w_b, a_b, k, seq_len, profile,
                                    allow_overpack=allow_overpack,
                                    allow_separation=allow_separation,
                                    signedness=signedness):
        if choice.strategy not in strategies:
            continue
        key = choice.sort_key()
        if best_key is None or key < best_key:
            best = choice
            best_key = key
    if best is None:
        raise NoValidConfigError(
            f"no valid packing for w_b={w_b}, a_b={a_b} on {profile.name}")
    return best


def build_table(
    kernel_shape: tuple[int, int],
    seq_len_policy,
    profile: DspProfile,
    allow_overpack: bool = False,
    allow_separation: bool = False,
    signedness: str = UNSIGNED,
    bits_range: tuple[int, int] = DEFAULT_BITS,
    policy: SamplePolicy | None = None,
    verify: bool = True,
) -> LookupTable:
    """Search, verify and assemble the complete throughput table.

    Any cell whose chosen configuration fails its bit-exactness sweep is a
    hard error; an unverified table never leaves this function unless
    ``verify`` is explicitly disabled (property tests only).
    """
    table = LookupTable(
        profile=profile,
        kernel_shape=tuple(kernel_shape),
        seq_len_policy=seq_len_policy,
        signedness=signedness,
        bits_range=bits_range,
    )
    for w, a in table.cells():
        choice = search_optimal(
            w, a, kernel_shape, seq_len_policy, profile,
            allow_overpack=allow_overpack,
            allow_separation=allow_separation,
            signedness=signedness,
        )
        if verify:
            report = verify_choice(choice, profile, policy)
            if report["mismatches"]:
                raise VerificationFailure(report)
        table.entries[(w, a)] = choice
    return table


def build_identity_table(
    profile: DspProfile,
    kernel_shape: tuple[int, int] = (1, 1),
    bits_range: tuple[int, int] = DEFAULT_BITS,
) -> LookupTable:
    """A table with T_mul = 1 everywhere (one multiplication per DSP op)."""
    table = LookupTable(
        profile=profile,
        kernel_shape=tuple(kernel_shape),
        seq_len_policy=GENERIC_SEQ_LEN,
        signedness=UNSIGNED,
        bits_range=bits_range,
    )
    for w, a in table.cells():
        cfg = KernelPackingConfig(d_b=w, e_b=a, g_b=0, n_d=1, n_e=1)
        table.entries[(w, a)] = PackingChoice(
            strategy="kernel", config=cfg, t_mul=Fraction(1), e_g=0,
            correction_gates=0, cell_w_b=w, cell_a_b=a)
    return table


def export_table(table: LookupTable) -> dict:
    """Serialize to the versioned interchange document."""
    seq = table.seq_len_policy
    return {
        "version": table.version,
        "profile": table.profile.to_dict(),
        "kernel_shape": list(table.kernel_shape),
        "seq_len_policy": seq if seq == GENERIC_SEQ_LEN else int(seq),
        "signedness": table.signedness,
        "bits_range": list(table.bits_range),
        "entries": [
            choice_to_entry(table.entries[cell])
            for cell in sorted(table.entries)
        ],
    }


def import_table(doc: dict) -> LookupTable:
    """Rebuild a table from its document, re-checking invariants.

    Schema shape, grid completeness, per-entry validity and metric
    consistency are re-established; a tampered t_mul or e_g raises.
    """
    from .schemas import validate_document

    validate_document(doc, "lut")
    if doc["version"] != TABLE_SCHEMA_VERSION:
        raise ValueError(f"unsupported table schema version {doc['version']}")
    profile = DspProfile.from_dict(doc["profile"])
    kernel_shape = tuple(doc["kernel_shape"])
    seq = doc["seq_len_policy"]
    signedness = doc["signedness"]
    if signedness not in SIGNEDNESS_MODES:
        raise ValueError(f"bad signedness {signedness!r}")
    bits_range = tuple(doc["bits_range"])
    table = LookupTable(
        profile=profile,
        kernel_shape=kernel_shape,
        seq_len_policy=seq,
        signedness=signedness,
        bits_range=bits_range,
        version=doc["version"],
    )
    for entry in doc["entries"]:
        cell = (entry["w_b"], entry["a_b"])
        if cell in table.entries:
            raise ValueError(f"duplicate entry for cell {cell}")
        table.entries[cell] = entry_to_choice(
            entry, profile, kernel_shape[1], seq, signedness)
    if not table.is_complete():
        missing = [c for c in table.cells() if c not in table.entries]
        raise ValueError(f"table incomplete, missing cells {missing}")
    return table


def table_to_csv(table: LookupTable) -> str:
    """Human-readable T_mul grid: rows are weight bits, columns activation bits."""
    lo, hi = table.bits_range
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["w_b\\a_b"] + [str(a) for a in range(lo, hi + 1)])
    for w in range(lo, hi + 1):
        row = [str(w)]
        for a in range(lo, hi + 1):
            t = table.t_mul(w, a)
            row.append(str(t.numerator) if t.denominator == 1 else f"{t.numerator}/{t.denominator}")
        writer.writerow(row)
    return out.getvalue()
