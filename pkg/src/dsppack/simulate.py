"""Bit-exact simulation of packed multiplications.

Operands are encoded onto the two multiplier ports as wide integers, one
wide multiply (plus optional accumulations) is performed, and the result
segments are decoded back and checked against an independent element-wise
oracle.  ``verify_choice`` drives exhaustive or seeded-random sweeps over
the full operand space through one of two interchangeable backends: a
compiled extension for speed, or the pure-Python twin.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .packing import (
    SIGNED,
    UNSIGNED,
    FilterPackingConfig,
    KernelPackingConfig,
    PackingChoice,
    PackingConfig,
    accumulation_budget_ok,
    ceil_div,
    validate_config,
)
from .profiles import DspProfile

from . import _simpy

try:  # compiled hot path; pure Python otherwise
    from . import _simcore
except ImportError:  # pragma: no cover - depends on build environment
    _simcore = None

if os.environ.get("DSPPACK_PURE"):
    _simcore = None

BACKEND = "compiled" if _simcore is not None else "python"

# Largest accumulator the int64 backend can wrap without overflow.
_COMPILED_ACC_LIMIT = 62


class OperandRangeError(ValueError):
    """An operand does not fit its declared width/signedness."""


class SpanOverflowError(ValueError):
    """Encoded lanes exceed the available port width."""


class InvalidConfigError(ValueError):
    """The packing configuration fails its layout constraints."""


class AccumulationBudgetError(ValueError):
    """More packed products accumulated than the guard bits allow."""


class VerificationFailure(RuntimeError):
    """A table entry failed its bit-exactness sweep."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"bit-exactness sweep found {report['mismatches']} mismatches")


@dataclass(frozen=True)
class PackedWord:
    """A port word: the non-negative bit pattern plus lane bookkeeping."""

    value: int
    lane_offsets: tuple[int, ...]
    lane_width: int
    signedness: str

    @property
    def span(self) -> int:
        return self.lane_offsets[-1] + self.lane_width

    @property
    def arith_value(self) -> int:
        """Two's-complement reinterpretation of the pattern over its span."""
        if self.signedness == SIGNED and self.value >= 1 << (self.span - 1):
            return self.value - (1 << self.span)
        return self.value


@dataclass(frozen=True)
class DecodedLanes:
    values: tuple[int, ...]
    overlap_corrected: bool = False


def operand_range(bits: int, signedness: str) -> tuple[int, int]:
    """Half-open value range of an operand."""
    if signedness == SIGNED:
        return -(1 << (bits - 1)), 1 << (bits - 1)
    return 0, 1 << bits


def _check_range(values, bits, signedness, what):
    lo, hi = operand_range(bits, signedness)
    for v in values:
        if not (lo <= v < hi):
            raise OperandRangeError(
                f"{what} value {v} outside [{lo}, {hi}) for {bits}-bit {signedness}"
            )


def encode(values, element_bits: int, stride_bits: int,
           signedness: str = UNSIGNED, port_bits: int | None = None) -> PackedWord:
    """Pack values onto one port by shift-and-add.

    The result is the port's two's-complement bit pattern: negative elements
    are folded in arithmetically, so their sign extension reaches across the
    higher lanes exactly as the adder network would produce.
    """
    values = list(values)
    if not values:
        raise ValueError("need at least one value")
    if stride_bits < 1 or element_bits < 1:
        raise ValueError("element and stride widths must be positive")
    _check_range(values, element_bits, signedness, "operand")
    span = (len(values) - 1) * stride_bits + element_bits
    if port_bits is not None and span > port_bits:
        raise SpanOverflowError(f"span {span} exceeds port width {port_bits}")
    arith = sum(v << (i * stride_bits) for i, v in enumerate(values))
    pattern = arith & ((1 << span) - 1)
    return PackedWord(
        value=pattern,
        lane_offsets=tuple(i * stride_bits for i in range(len(values))),
        lane_width=element_bits,
        signedness=signedness,
    )


def decode(word: int, config: PackingConfig, signedness: str = UNSIGNED) -> DecodedLanes:
    """Extract the product segments of a non-overpacked layout.

    For two's-complement lanes a borrow cascade runs from the lowest lane
    upward: a negative lane's representative is subtracted before the shift,
    which lends the borrow to the next extraction.
    """
    if config.overpacked:
        raise InvalidConfigError("overpacked layouts decode via overpack_correct")
    lanes = config.lanes
    vals = _simpy._decode_plain(word, config.p_b, lanes, signedness == SIGNED)
    return DecodedLanes(values=tuple(vals))


def overpack_correct(raw_low_lane: int, raw_high_lane: int, operand_lsbs,
                     p_b: int, signed: bool = False) -> tuple[int, int]:
    """Correct one 1-bit-overlapped segment boundary.

    ``operand_lsbs`` holds the LSB pair of every product summed into the
    high lane; the high lane's true LSB is the XOR of their ANDs.  Comparing
    it with the raw bit recovers the overlap carry: the low lane regains its
    contaminated MSB, and the high lane is compensated for the carry it
    absorbed (a sign-extension deficit, for two's-complement lanes).
    """
    true_lsb = 0
    for d_bit, e_bit in operand_lsbs:
        true_lsb ^= (d_bit & e_bit) & 1
    overlap = (raw_high_lane & 1) ^ true_lsb
    carry = -overlap if signed else overlap
    low = raw_low_lane + carry * (1 << p_b)
    high = raw_high_lane - carry
    return low, high


def _signed_flags(signedness):
    return signedness == SIGNED


def _lane_parities_kernel(config, d, e):
    par = [0] * config.lanes
    for j in range(config.n_e):
        for i in range(config.n_d):
            par[i + j * config.n_d] ^= d[i] & e[j] & 1
    return par


def _lane_parities_filter(k_p, n_p, f, s):
    par = [0] * (k_p + n_p - 1)
    for i in range(k_p):
        for j in range(n_p):
            par[i + j] ^= f[i] & s[j] & 1
    return par


def simulate_kernel(config: KernelPackingConfig, d, e, profile: DspProfile,
                    signedness: str = UNSIGNED) -> DecodedLanes:
    """One packed kernel operation: all n_d * n_e pairwise products."""
    if not validate_config(config, profile):
        raise InvalidConfigError(f"invalid kernel config {config}")
    d = list(d)
    e = list(e)
    if len(d) != config.n_d or len(e) != config.n_e:
        raise ValueError("operand counts must match n_d / n_e")
    _check_range(d, config.d_b, signedness, "d")
    _check_range(e, config.e_b, signedness, "e")
    signed = _signed_flags(signedness)
    p_b = config.p_b
    dw = sum(v << (i * p_b) for i, v in enumerate(d))
    ew = sum(v << (j * config.n_d * p_b) for j, v in enumerate(e))
    wide = _simpy._wrap(dw * ew, profile.accumulator, signed)
    if config.overpacked:
        vals = _simpy._decode_overpacked(
            wide, p_b, config.lanes, _lane_parities_kernel(config, d, e), signed)
    else:
        vals = _simpy._decode_plain(wide, p_b, config.lanes, signed)
    return DecodedLanes(values=tuple(vals), overlap_corrected=config.overpacked)


def simulate_packed_sum(config: PackingConfig, operand_sets, profile: DspProfile,
                        signedness: str = UNSIGNED) -> DecodedLanes:
    """Accumulate several packed products in the accumulator, decode once.

    Models cross-channel/row accumulation: every product shares the lane
    layout, so lane m of the result is the sum over sets.  The number of
    accumulated products must stay within the guard-bit budget.
    """
    if not validate_config(config, profile):
        raise InvalidConfigError(f"invalid config {config}")
    sets = [tuple(map(list, pair)) for pair in operand_sets]
    if not accumulation_budget_ok(config, len(sets)):
        raise AccumulationBudgetError(
            f"{len(sets)} accumulations exceed the guard budget of {config}")
    signed = _signed_flags(signedness)
    p_b = config.p_b
    wide = 0
    parity = [0] * config.lanes
    for left, right in sets:
        if isinstance(config, KernelPackingConfig):
            if len(left) != config.n_d or len(right) != config.n_e:
                raise ValueError("operand counts must match n_d / n_e")
            _check_range(left, config.d_b, signedness, "d")
            _check_range(right, config.e_b, signedness, "e")
            lw = sum(v << (i * p_b) for i, v in enumerate(left))
            rw = sum(v << (j * config.n_d * p_b) for j, v in enumerate(right))
            for j in range(config.n_e):
                for i in range(config.n_d):
                    parity[i + j * config.n_d] ^= left[i] & right[j] & 1
        else:
            if len(left) != config.k_p or len(right) != config.n_p:
                raise ValueError("operand counts must match k_p / n_p")
            _check_range(left, config.w_b, signedness, "f")
            _check_range(right, config.a_b, signedness, "s")
            lw = sum(v << (i * p_b) for i, v in enumerate(left))
            rw = sum(v << (j * p_b) for j, v in enumerate(right))
            for i in range(config.k_p):
                for j in range(config.n_p):
                    parity[i + j] ^= left[i] & right[j] & 1
        wide = _simpy._wrap(wide + lw * rw, profile.accumulator, signed)
    if config.overpacked:
        vals = _simpy._decode_overpacked(wide, p_b, config.lanes, parity, signed)
    else:
        vals = _simpy._decode_plain(wide, p_b, config.lanes, signed)
    return DecodedLanes(values=tuple(vals), overlap_corrected=config.overpacked)


def simulate_filter(config: FilterPackingConfig, f, s, profile: DspProfile,
                    signedness: str = UNSIGNED, group_size: int = 1) -> DecodedLanes:
    """Full 1-D convolution f * s via the sub-task schedule.

    The K-tap filter and N-element sequence are divided into
    ceil(K/k_p) * ceil(N/n_p) sub-tasks, iterated filter-chunk-major.
    ``group_size`` consecutive sub-tasks of one filter chunk may share the
    accumulator before decoding (their lane offsets stay aligned); the guard
    budget bounds how many.
    """
    if not validate_config(config, profile):
        raise InvalidConfigError(f"invalid filter config {config}")
    f = list(f)
    s = list(s)
    if not f or not s:
        raise ValueError("filter and sequence must be non-empty")
    _check_range(f, config.w_b, signedness, "f")
    _check_range(s, config.a_b, signedness, "s")
    if group_size < 1:
        raise ValueError("group_size must be >= 1")
    if group_size > 1:
        if config.overpacked:
            raise AccumulationBudgetError(
                "overpacked layouts admit a single product per decode")
        if not accumulation_budget_ok(config, group_size):
            raise AccumulationBudgetError(
                f"group of {group_size} sub-tasks exceeds the guard budget")
        occ_w = config.w_b + (config.k_p - 1) * config.p_b
        occ_a = config.a_b + (config.n_p - 1) * config.p_b
        needed = (group_size - 1) * config.n_p * config.p_b + occ_w + occ_a
        if needed > profile.accumulator:
            raise AccumulationBudgetError(
                f"group of {group_size} sub-tasks needs {needed} accumulator "
                f"bits, profile has {profile.accumulator}")

    signed = _signed_flags(signedness)
    k_p, n_p, p_b = config.k_p, config.n_p, config.p_b
    k, n = len(f), len(s)
    out = [0] * (k + n - 1)
    n_chunks = ceil_div(n, n_p)
    for u in range(ceil_div(k, k_p)):
        fc = f[u * k_p:(u + 1) * k_p]
        fc += [0] * (k_p - len(fc))
        fw = sum(v << (i * p_b) for i, v in enumerate(fc))
        for v0 in range(0, n_chunks, group_size):
            group = range(v0, min(v0 + group_size, n_chunks))
            wide = 0
            parity = None
            for v in group:
                sc = s[v * n_p:(v + 1) * n_p]
                sc += [0] * (n_p - len(sc))
                sw = sum(x << (j * p_b) for j, x in enumerate(sc))
                rel = (v - v0) * n_p
                word = fw * sw
                wide = _simpy._wrap(wide + (word << (rel * p_b)),
                                    profile.accumulator, signed)
                if config.overpacked:
                    par = _lane_parities_filter(k_p, n_p, fc, sc)
                    if parity is None:
                        parity = [0] * ((len(group) - 1) * n_p + k_p + n_p - 1)
                    for m, pv in enumerate(par):
                        parity[rel + m] ^= pv
            span_lanes = (len(group) - 1) * n_p + k_p + n_p - 1
            if config.overpacked:
                vals = _simpy._decode_overpacked(wide, p_b, span_lanes, parity, signed)
            else:
                vals = _simpy._decode_plain(wide, p_b, span_lanes, signed)
            base = u * k_p + v0 * n_p
            for m, c in enumerate(vals):
                if base + m < len(out):
                    out[base + m] += c
    return DecodedLanes(values=tuple(out), overlap_corrected=config.overpacked)


@dataclass(frozen=True)
class SamplePolicy:
    """How hard verify_choice sweeps one choice.

    Exhaustive whenever the total operand bits fit ``exhaustive_bits``;
    otherwise ``samples`` seeded-uniform trials.  Accumulation is exercised
    up to 2**e_g products (capped at ``acc_cap``) with ``acc_trials`` random
    batches plus deterministic extreme-value batches.
    """

    exhaustive_bits: int = 20
    samples: int = 100_000
    seed: int = 20_240_801
    acc_trials: int = 64
    acc_cap: int = 256


def _operand_plan(choice: PackingChoice):
    """Slot widths (in simulation operand order) for a choice's sweep."""
    cfg = choice.config
    if choice.strategy == "kernel":
        return [cfg.d_b] * cfg.n_d + [cfg.e_b] * cfg.n_e
    if choice.separated:
        w = choice.cell_w_b if choice.split_operand == "weight" else cfg.w_b
        a = choice.cell_a_b if choice.split_operand == "activation" else cfg.a_b
        return [w] * cfg.k_p + [a] * cfg.n_p
    return [cfg.w_b] * cfg.k_p + [cfg.a_b] * cfg.n_p


def _bounds(widths, signedness):
    lows, highs = [], []
    for b in widths:
        lo, hi = operand_range(b, signedness)
        lows.append(lo)
        highs.append(hi)
    return np.asarray(lows, dtype=np.int64), np.asarray(highs, dtype=np.int64)


def _pick_backend(profile: DspProfile):
    if _simcore is not None and profile.accumulator <= _COMPILED_ACC_LIMIT:
        return _simcore
    return _simpy


def _sample_matrix(rng, lows, highs, n_trials, a_count):
    cols = []
    for _ in range(a_count):
        for lo, hi in zip(lows.tolist(), highs.tolist()):
            cols.append(rng.integers(lo, hi, size=n_trials, dtype=np.int64))
    return np.ascontiguousarray(np.stack(cols, axis=1))


def _extreme_rows(lows, highs, a_count, signedness):
    """Deterministic worst-case accumulation batches."""
    lo = np.tile(lows, a_count)
    hi = np.tile(highs, a_count) - 1
    rows = [hi]
    if signedness == SIGNED:
        rows.append(lo)  # all most-negative: largest positive products
        mixed = lo.copy()
        n = len(lows)
        # one side most-negative, other side most-positive per set
        for t in range(a_count):
            mixed[t * n:(t * n) + n // 2] = lo[t * n:(t * n) + n // 2]
            mixed[(t * n) + n // 2:(t + 1) * n] = hi[(t * n) + n // 2:(t + 1) * n]
        rows.append(mixed)
    else:
        rows.append(lo)
    return np.ascontiguousarray(np.stack(rows, axis=0))


def _run_sweep(backend, choice, profile, a_count, lows, highs, samples):
    cfg = choice.config
    signed = choice.signedness == SIGNED
    if choice.strategy == "kernel":
        return backend.sweep_kernel(
            cfg.d_b, cfg.e_b, cfg.g_b, cfg.n_d, cfg.n_e, cfg.overpacked,
            signed, profile.accumulator, a_count, lows, highs, samples)
    if choice.separated:
        if a_count != 1:
            raise ValueError("accumulation sweep not defined for separated configs")
        _, lo_bits = _split_bits(choice)
        return backend.sweep_filter_sep(
            cfg.w_b, cfg.a_b, cfg.g_b, cfg.k_p, cfg.n_p, cfg.overpacked,
            signed, profile.accumulator, choice.split_operand == "weight",
            lo_bits, lows, highs, samples)
    return backend.sweep_filter(
        cfg.w_b, cfg.a_b, cfg.g_b, cfg.k_p, cfg.n_p, cfg.overpacked,
        signed, profile.accumulator, a_count, lows, highs, samples)


def _split_bits(choice: PackingChoice) -> tuple[int, int]:
    from .packing import separate_operand

    orig = choice.cell_w_b if choice.split_operand == "weight" else choice.cell_a_b
    return separate_operand(orig)


def verify_choice(choice: PackingChoice, profile: DspProfile,
                  policy: SamplePolicy | None = None) -> dict:
    """Sweep a choice against the element-wise oracle and report.

    Exhaustive over the full operand cross-product when the total operand
    bits fit the policy, seeded-uniform sampling otherwise.  A second phase
    exercises accumulator sharing up to the claimed guard budget.  The
    report is JSON-ready; zero mismatches means the choice is bit-exact.
    """
    if policy is None:
        policy = SamplePolicy()
    if not validate_config(choice.config, profile):
        raise InvalidConfigError(f"invalid config {choice.config}")

    widths = _operand_plan(choice)
    lows, highs = _bounds(widths, choice.signedness)
    total_bits = sum(widths)
    backend = _pick_backend(profile)
    rng = np.random.default_rng(policy.seed)

    if total_bits <= policy.exhaustive_bits:
        mode = "exhaustive"
        trials, mismatches, cex = _run_sweep(
            backend, choice, profile, 1, lows, highs, None)
    else:
        mode = "sampled"
        samples = _sample_matrix(rng, lows, highs, policy.samples, 1)
        trials, mismatches, cex = _run_sweep(
            backend, choice, profile, 1, lows, highs, samples)

    acc_budget = min(1 << choice.e_g, policy.acc_cap)
    acc_trials = 0
    if choice.separated:
        acc_budget = 1  # halves verified individually; no shared-acc phase
    if acc_budget > 1:
        batch = _sample_matrix(rng, lows, highs, policy.acc_trials, acc_budget)
        extremes = _extreme_rows(lows, highs, acc_budget, choice.signedness)
        samples = np.concatenate([extremes, batch], axis=0)
        a_trials, a_mis, a_cex = _run_sweep(
            backend, choice, profile, acc_budget, lows, highs, samples)
        acc_trials = a_trials
        mismatches += a_mis
        if cex is None:
            cex = a_cex

    from .packing import choice_to_entry

    return {
        "choice": choice_to_entry(choice),
        "mode": mode,
        "trials": int(trials),
        "mismatches": int(mismatches),
        "acc_budget_exercised": int(acc_budget),
        "acc_trials": int(acc_trials),
        "counterexample": cex,
    }
