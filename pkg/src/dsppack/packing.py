"""Constraint mathematics for multiplier packing.

Two packing strategies are modeled.  *Kernel packing* lays independent
operands out on both multiplier ports with guard-bit spacing so a single wide
multiplication yields every pairwise product in disjoint bit segments.
*Filter packing* encodes a 1-D convolution as polynomial multiplication: the
filter taps become coefficients on one port, a slice of the input sequence
coefficients on the other, and the wide product's segments are convolution
coefficients directly.

This module owns validity checking, the throughput metric ``t_mul``, the
extra-guard-bit metric ``e_g`` (how many result accumulations fit before a
decode is forced), operand separation, and exhaustive configuration
enumeration.  Everything here is pure integer/rational arithmetic over
immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

from .profiles import DspProfile

GENERIC_SEQ_LEN = "generic"

# Signedness of packed operands: both sides unsigned (the common case for
# quantized activations/weights after zero-point folding) or both sides
# two's complement.
UNSIGNED = "unsigned"
SIGNED = "signed"
SIGNEDNESS_MODES = (UNSIGNED, SIGNED)


class NoValidConfigError(ValueError):
    """No packing configuration exists for the requested widths."""


def ceil_log2(n: int) -> int:
    if n < 1:
        raise ValueError("ceil_log2 needs a positive argument")
    return (n - 1).bit_length()


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class KernelPackingConfig:
    """Layout parameters for kernel packing.

    ``n_d`` operands of ``d_b`` bits sit on one port at stride ``p_b``;
    ``n_e`` operands of ``e_b`` bits sit on the other port at stride
    ``n_d * p_b``.  ``port_swap`` places the d-operands on the large port
    instead of the small one.  ``overpacked`` marks the 1-bit-overlap layout,
    in which case ``g_b`` is exactly -1.
    """

    d_b: int
    e_b: int
    g_b: int
    n_d: int
    n_e: int
    overpacked: bool = False
    port_swap: bool = False

    @property
    def p_b(self) -> int:
        return self.d_b + self.e_b + self.g_b

    @property
    def lanes(self) -> int:
        return self.n_d * self.n_e

    def to_params(self) -> dict:
        return {
            "d_b": self.d_b,
            "e_b": self.e_b,
            "g_b": self.g_b,
            "n_d": self.n_d,
            "n_e": self.n_e,
            "port_swap": self.port_swap,
        }


@dataclass(frozen=True)
class FilterPackingConfig:
    """Layout parameters for filter packing.

    ``k_p`` filter taps of ``w_b`` bits on the weight port, ``n_p`` sequence
    elements of ``a_b`` bits on the activation port, both at stride ``p_b``.
    A long convolution is divided into ceil(K/k_p) * ceil(N/n_p) sub-tasks.
    ``separated`` marks a config operating on one half of a split operand
    (see ``separate_operand``); the widths stored here are the split widths.
    """

    w_b: int
    a_b: int
    g_b: int
    k_p: int
    n_p: int
    filter_on_large_port: bool = False
    separated: bool = False
    overpacked: bool = False

    @property
    def p_b(self) -> int:
        return self.w_b + self.a_b + self.g_b

    @property
    def lanes(self) -> int:
        return self.k_p + self.n_p - 1

    @property
    def min_guard(self) -> int:
        """Inherent guard requirement from the polynomial accumulations."""
        g = ceil_log2(min(self.k_p, self.n_p))
        return g - 1 if self.overpacked else g

    def to_params(self) -> dict:
        return {
            "w_b": self.w_b,
            "a_b": self.a_b,
            "g_b": self.g_b,
            "k_p": self.k_p,
            "n_p": self.n_p,
            "filter_on_large_port": self.filter_on_large_port,
        }


PackingConfig = Union[KernelPackingConfig, FilterPackingConfig]


def validate_kernel(config: KernelPackingConfig, profile: DspProfile) -> bool:
    """Check the four layout constraints of kernel packing."""
    c = config
    if min(c.d_b, c.e_b) < 1 or min(c.n_d, c.n_e) < 1:
        return False
    if c.overpacked:
        if c.g_b != -1 or c.lanes < 2:
            return False
    elif c.g_b < 0:
        return False
    if c.p_b < 1:
        return False
    port_d = profile.port_large if c.port_swap else profile.port_small
    port_e = profile.port_small if c.port_swap else profile.port_large
    if c.d_b + (c.n_d - 1) * c.p_b > port_d:
        return False
    if c.e_b + (c.n_e - 1) * c.n_d * c.p_b > port_e:
        return False
    return True


def validate_filter(config: FilterPackingConfig, profile: DspProfile) -> bool:
    """Check the port and guard constraints of filter packing."""
    c = config
    if min(c.w_b, c.a_b) < 1 or min(c.k_p, c.n_p) < 1:
        return False
    if c.g_b < c.min_guard:
        return False
    if c.overpacked and c.lanes < 2:
        return False
    if c.p_b < 1:
        return False
    port_w = profile.port_large if c.filter_on_large_port else profile.port_small
    port_a = profile.port_small if c.filter_on_large_port else profile.port_large
    if c.w_b + (c.k_p - 1) * c.p_b > port_w:
        return False
    if c.a_b + (c.n_p - 1) * c.p_b > port_a:
        return False
    return True


def validate_config(config: PackingConfig, profile: DspProfile) -> bool:
    if isinstance(config, KernelPackingConfig):
        return validate_kernel(config, profile)
    return validate_filter(config, profile)


def separate_operand(w_b: int) -> tuple[int, int]:
    """Split an operand width into (high_bits, low_bits) halves.

    The low half is ceil(w_b / 2) bits and, for a signed input, unsigned;
    the high half carries the sign.
    """
    if w_b < 2:
        raise ValueError("separation needs an operand of at least 2 bits")
    low = ceil_div(w_b, 2)
    return w_b - low, low


def _kernel_extra_guard(config: KernelPackingConfig) -> int:
    return 0 if config.overpacked else config.g_b


def _filter_extra_guard(config: FilterPackingConfig) -> int:
    if config.overpacked:
        return 0
    return config.g_b - ceil_log2(min(config.k_p, config.n_p))


def _occupied_bits(config: PackingConfig) -> tuple[int, int]:
    """Actual bit spans used on the two ports (d/weight side, e/activation side)."""
    if isinstance(config, KernelPackingConfig):
        return (
            config.d_b + (config.n_d - 1) * config.p_b,
            config.e_b + (config.n_e - 1) * config.n_d * config.p_b,
        )
    return (
        config.w_b + (config.k_p - 1) * config.p_b,
        config.a_b + (config.n_p - 1) * config.p_b,
    )


def accumulator_headroom(config: PackingConfig, profile: DspProfile) -> int:
    """Spare accumulator bits above one packed product, i.e. how many
    doublings the accumulated value may undergo before wrapping."""
    occ_a, occ_b = _occupied_bits(config)
    return max(0, profile.accumulator - (occ_a + occ_b))


def extra_guard_bits_of(config: PackingConfig, profile: DspProfile) -> int:
    """Extra guard bits: surplus guard beyond the layout's inherent
    accumulation requirement, capped by accumulator headroom.

    2**e_g packed products can always be accumulated before decoding.
    Overpacked layouts have no surplus (the overlap spends it), so 0.
    """
    if isinstance(config, KernelPackingConfig):
        raw = _kernel_extra_guard(config)
    else:
        raw = _filter_extra_guard(config)
    return max(0, min(raw, accumulator_headroom(config, profile)))


def correction_gate_count(config: PackingConfig) -> int:
    """Gate-count proxy for the 1-bit overlap correction network.

    Per overlapped segment boundary, the true LSB of the upper segment is
    rebuilt from operand LSBs (one AND per contributing product, XORs to
    fold them and to compare against the raw bit) and applied with two
    single-bit additions.  Separated configs run the network twice, once per
    half-multiply.  Zero when not overpacked.
    """
    if not getattr(config, "overpacked", False):
        return 0
    if isinstance(config, KernelPackingConfig):
        products_per_lane = [1] * config.lanes
    else:
        products_per_lane = [
            min(m, config.k_p - 1, config.n_p - 1, config.k_p + config.n_p - 2 - m) + 1
            for m in range(config.lanes)
        ]
    gates = 0
    for m in range(1, len(products_per_lane)):
        n_prod = products_per_lane[m]
        gates += n_prod + (n_prod - 1) + 1 + 2
    if getattr(config, "separated", False):
        gates *= 2
    return gates


@dataclass(frozen=True)
class PackingChoice:
    """A validated packing strategy with its metrics for one bit-width cell.

    ``cell_w_b``/``cell_a_b`` are the original operand widths the choice
    serves; for separated configs they differ from the config's stored
    widths on the split side.  ``split_operand`` records which side (if any)
    was separated.
    """

    strategy: str  # "kernel" | "filter"
    config: PackingConfig
    t_mul: Fraction
    e_g: int
    correction_gates: int
    cell_w_b: int
    cell_a_b: int
    signedness: str = UNSIGNED
    split_operand: str | None = None  # None | "weight" | "activation"

    def __post_init__(self):
        if self.t_mul <= 0:
            raise ValueError("t_mul must be positive")
        if self.e_g < 0:
            raise ValueError("e_g must be non-negative")
        if self.strategy == "kernel" and self.t_mul.denominator != 1:
            raise ValueError("kernel-packing throughput must be an integer")

    @property
    def overpacked(self) -> bool:
        return self.config.overpacked

    @property
    def separated(self) -> bool:
        return getattr(self.config, "separated", False)

    def sort_key(self):
        """Total order used by the optimizer: throughput, then surplus guard
        bits, then fewer correction gates, kernel before filter, and finally
        the canonical parameter tuple."""
        strategy_rank = 0 if self.strategy == "kernel" else 1
        return (
            -self.t_mul,
            -self.e_g,
            self.correction_gates,
            strategy_rank,
            self.canonical_params(),
        )

    def canonical_params(self) -> tuple:
        c = self.config
        if isinstance(c, KernelPackingConfig):
            return (c.d_b, c.e_b, c.g_b, c.n_d, c.n_e, c.port_swap, c.overpacked, 0)
        return (
            c.w_b,
            c.a_b,
            c.g_b,
            c.k_p,
            c.n_p,
            c.filter_on_large_port,
            c.overpacked,
            1 if c.separated else 0,
            self.split_operand or "",
        )


def _throughput_of(cfg: PackingConfig, k: int, n: int) -> Fraction:
    if isinstance(cfg, KernelPackingConfig):
        return Fraction(cfg.n_d * cfg.n_e)
    if k < 1 or n < 1:
        raise ValueError("filter throughput needs K >= 1 and N >= 1")
    t = Fraction(k * n, ceil_div(k, cfg.k_p) * ceil_div(n, cfg.n_p))
    if cfg.separated:
        t = t / 2
    return t


def _generic_throughput_of(cfg: PackingConfig, k: int) -> Fraction:
    if isinstance(cfg, KernelPackingConfig):
        return Fraction(cfg.n_d * cfg.n_e)
    t = Fraction(k * cfg.n_p, ceil_div(k, cfg.k_p))
    if cfg.separated:
        t = t / 2
    return t


def throughput(choice: PackingChoice, k: int = 1, n: int = 1) -> Fraction:
    """Effective multiplications per DSP operation for a K-tap filter over an
    N-element sequence (kernel packing ignores K and N).  Separation halves
    the concurrent multiplications."""
    return _throughput_of(choice.config, k, n)


def generic_throughput(choice: PackingChoice, k: int = 1) -> Fraction:
    """Asymptotic throughput assuming the sequence length is a multiple of
    the per-word element count (the policy used by generic tables)."""
    return _generic_throughput_of(choice.config, k)


def extra_guard_bits(choice: PackingChoice, profile: DspProfile) -> int:
    return extra_guard_bits_of(choice.config, profile)


def _make_choice(strategy, config, profile, k, seq_len, cell_w, cell_a,
                 signedness, split_operand=None):
    if seq_len == GENERIC_SEQ_LEN:
        t = _generic_throughput_of(config, k)
    else:
        t = _throughput_of(config, k, seq_len)
    return PackingChoice(
        strategy=strategy,
        config=config,
        t_mul=t,
        e_g=extra_guard_bits_of(config, profile),
        correction_gates=correction_gate_count(config),
        cell_w_b=cell_w,
        cell_a_b=cell_a,
        signedness=signedness,
        split_operand=split_operand,
    )


def _iter_kernel_configs(w_b, a_b, profile, allow_overpack, signedness):
    seen = set()
    port_pairs = [(False,)] if profile.port_small == profile.port_large else [(False,), (True,)]
    for d_b, e_b in {(w_b, a_b), (a_b, w_b)}:
        for (port_swap,) in port_pairs:
            port_d = profile.port_large if port_swap else profile.port_small
            port_e = profile.port_small if port_swap else profile.port_large
            if d_b > port_d or e_b > port_e:
                continue
            overpack_opts = [False, True] if allow_overpack else [False]
            for overpacked in overpack_opts:
                g_values = [-1] if overpacked else range(0, profile.port_large + 1)
                for g_b in g_values:
                    p_b = d_b + e_b + g_b
                    if p_b < 1:
                        continue
                    n_d_max = (port_d - d_b) // p_b + 1
                    for n_d in range(1, n_d_max + 1):
                        n_e_max = (port_e - e_b) // (n_d * p_b) + 1
                        for n_e in range(1, n_e_max + 1):
                            if n_d == 1 and n_e == 1 and (g_b != 0 or overpacked):
                                continue  # single lane: guard is meaningless
                            if overpacked and n_d * n_e < 2:
                                continue
                            cfg = KernelPackingConfig(
                                d_b=d_b, e_b=e_b, g_b=g_b, n_d=n_d, n_e=n_e,
                                overpacked=overpacked, port_swap=port_swap,
                            )
                            if cfg in seen:
                                continue
                            seen.add(cfg)
                            if validate_kernel(cfg, profile):
                                yield cfg


def _iter_filter_configs(w_b, a_b, kernel_len, seq_len, profile,
                         allow_overpack, signedness, separated=False):
    seen = set()
    port_pairs = [False] if profile.port_small == profile.port_large else [False, True]
    k_cap = min(kernel_len, profile.port_large)
    n_cap = profile.port_large if seq_len == GENERIC_SEQ_LEN else min(seq_len, profile.port_large)
    for filter_on_large in port_pairs:
        port_w = profile.port_large if filter_on_large else profile.port_small
        port_a = profile.port_small if filter_on_large else profile.port_large
        if w_b > port_w or a_b > port_a:
            continue
        for k_p in range(1, k_cap + 1):
            for n_p in range(1, n_cap + 1):
                min_g = ceil_log2(min(k_p, n_p))
                overpack_opts = [False]
                if allow_overpack and k_p + n_p - 1 >= 2:
                    if not (signedness == SIGNED and separated):
                        # Mixed-sign lanes (signed x unsigned halves) make the
                        # overlap carry's sign ambiguous; excluded.
                        overpack_opts.append(True)
                for overpacked in overpack_opts:
                    g_values = [min_g - 1] if overpacked else range(min_g, profile.port_large + 1)
                    for g_b in g_values:
                        p_b = w_b + a_b + g_b
                        if p_b < 1:
                            continue
                        if k_p == 1 and n_p == 1 and (g_b != 0 or overpacked):
                            continue
                        cfg = FilterPackingConfig(
                            w_b=w_b, a_b=a_b, g_b=g_b, k_p=k_p, n_p=n_p,
                            filter_on_large_port=filter_on_large,
                            separated=separated, overpacked=overpacked,
                        )
                        if cfg in seen:
                            continue
                        seen.add(cfg)
                        if validate_filter(cfg, profile):
                            yield cfg


def enumerate_configs(
    w_b: int,
    a_b: int,
    kernel_len: int,
    seq_len,
    profile: DspProfile,
    allow_overpack: bool = False,
    allow_separation: bool = False,
    signedness: str = UNSIGNED,
) -> Iterator[PackingChoice]:
    """Yield every valid packing choice for one bit-width pair.

    Covers both strategies, both port assignments, both operand-role
    assignments for kernel packing, every guard-bit count from the minimum
    to the port-saturating maximum, 1-bit overpacked variants, and (for
    filter packing) operand-separated variants of either operand.
    """
    if signedness not in SIGNEDNESS_MODES:
        raise ValueError(f"signedness must be one of {SIGNEDNESS_MODES}")
    if not (1 <= w_b <= profile.port_large and 1 <= a_b <= profile.port_large):
        raise ValueError("operand widths must be within [1, port_large]")
    if kernel_len < 1:
        raise ValueError("kernel length must be >= 1")
    if seq_len != GENERIC_SEQ_LEN and (not isinstance(seq_len, int) or seq_len < 1):
        raise ValueError("seq_len must be a positive int or 'generic'")

    for cfg in _iter_kernel_configs(w_b, a_b, profile, allow_overpack, signedness):
        yield _make_choice("kernel", cfg, profile, kernel_len, seq_len,
                           w_b, a_b, signedness)

    for cfg in _iter_filter_configs(w_b, a_b, kernel_len, seq_len, profile,
                                    allow_overpack, signedness):
        yield _make_choice("filter", cfg, profile, kernel_len, seq_len,
                           w_b, a_b, signedness)

    if allow_separation:
        for split_operand in ("weight", "activation"):
            orig = w_b if split_operand == "weight" else a_b
            if orig < 2:
                continue
            _, low = separate_operand(orig)
            sub_w = low if split_operand == "weight" else w_b
            sub_a = low if split_operand == "activation" else a_b
            if not (1 <= sub_w <= profile.port_large and 1 <= sub_a <= profile.port_large):
                continue
            for cfg in _iter_filter_configs(sub_w, sub_a, kernel_len, seq_len,
                                            profile, allow_overpack, signedness,
                                            separated=True):
                yield _make_choice("filter", cfg, profile, kernel_len, seq_len,
                                   w_b, a_b, signedness, split_operand)


def kernel_lane_segments(config: KernelPackingConfig) -> list[tuple[int, int]]:
    """Bit segments [start, start + d_b + e_b) of each product lane."""
    width = config.d_b + config.e_b
    return [
        (i * config.p_b + j * config.n_d * config.p_b, width)
        for j in range(config.n_e)
        for i in range(config.n_d)
    ]


def choice_to_entry(choice: PackingChoice) -> dict:
    """Serialize a choice into the lookup-table entry shape."""
    params = choice.config.to_params()
    params["correction_gates"] = choice.correction_gates
    if choice.split_operand is not None:
        orig = choice.cell_w_b if choice.split_operand == "weight" else choice.cell_a_b
        hi, lo = separate_operand(orig)
        params["split"] = {
            "operand": choice.split_operand,
            "high_bits": hi,
            "low_bits": lo,
        }
    return {
        "w_b": choice.cell_w_b,
        "a_b": choice.cell_a_b,
        "strategy": choice.strategy,
        "params": params,
        "t_mul": {"num": choice.t_mul.numerator, "den": choice.t_mul.denominator},
        "e_g": choice.e_g,
        "overpacked": choice.overpacked,
        "separated": choice.separated,
    }


def entry_to_choice(entry: dict, profile: DspProfile, kernel_len: int,
                    seq_len, signedness: str) -> PackingChoice:
    """Rebuild a choice from its entry, recomputing every derived metric.

    The recomputation is the tamper check: a stored t_mul or e_g that does
    not match the configuration is rejected.
    """
    params = entry["params"]
    if entry["strategy"] == "kernel":
        cfg = KernelPackingConfig(
            d_b=params["d_b"], e_b=params["e_b"], g_b=params["g_b"],
            n_d=params["n_d"], n_e=params["n_e"],
            overpacked=entry["overpacked"], port_swap=params["port_swap"],
        )
    else:
        cfg = FilterPackingConfig(
            w_b=params["w_b"], a_b=params["a_b"], g_b=params["g_b"],
            k_p=params["k_p"], n_p=params["n_p"],
            filter_on_large_port=params["filter_on_large_port"],
            separated=entry["separated"], overpacked=entry["overpacked"],
        )
    if not validate_config(cfg, profile):
        raise ValueError(f"entry config fails validation: {entry}")
    split = params.get("split")
    split_operand = split["operand"] if split else None
    choice = _make_choice(entry["strategy"], cfg, profile, kernel_len, seq_len,
                          entry["w_b"], entry["a_b"], signedness, split_operand)
    stored_t = Fraction(entry["t_mul"]["num"], entry["t_mul"]["den"])
    if choice.t_mul != stored_t:
        raise ValueError(
            f"stored t_mul {stored_t} does not match recomputed {choice.t_mul}")
    if choice.e_g != entry["e_g"]:
        raise ValueError(
            f"stored e_g {entry['e_g']} does not match recomputed {choice.e_g}")
    if split is not None:
        orig = entry["w_b"] if split_operand == "weight" else entry["a_b"]
        if tuple(separate_operand(orig)) != (split["high_bits"], split["low_bits"]):
            raise ValueError(f"split widths inconsistent: {entry}")
        split_width = split["low_bits"]
        cfg_width = cfg.w_b if split_operand == "weight" else cfg.a_b
        if cfg_width != split_width:
            raise ValueError(f"split width does not match config: {entry}")
    return choice


def accumulation_budget_ok(config: PackingConfig, n_products: int) -> bool:
    """True when ``n_products`` packed products can accumulate before decode.

    Safe whenever ceil(log2(min_factor * A)) fits the guard bits, where
    min_factor is the inherent per-lane term count (1 for kernel packing).
    Overpacked layouts admit exactly one product.
    """
    if n_products < 1:
        return False
    if config.overpacked:
        return n_products == 1
    if isinstance(config, KernelPackingConfig):
        min_factor = 1
    else:
        min_factor = min(config.k_p, config.n_p)
    return ceil_log2(min_factor * n_products) <= config.g_b
