"""Pure-Python sweep backend.

Mirrors the compiled extension ``_simcore`` exactly: same trial enumeration
order, same encode/decode semantics, same counterexample payloads.  Selected
at import time when the extension is missing, and used regardless for
profiles whose accumulator exceeds 64-bit arithmetic (Python ints are
unbounded).
"""

from __future__ import annotations


def _wrap(x: int, acc_bits: int, signed_ops: bool) -> int:
    m = 1 << acc_bits
    x &= m - 1
    if signed_ops and x >= (m >> 1):
        x -= m
    return x


def _decode_plain(word: int, p_b: int, n_lanes: int, signed_lanes: bool) -> list:
    """Segment extraction with the borrow cascade for two's-complement lanes."""
    out = []
    acc = word
    mask = (1 << p_b) - 1
    half = 1 << (p_b - 1)
    full = mask + 1
    for _ in range(n_lanes - 1):
        r = acc & mask
        c = r - full if (signed_lanes and r >= half) else r
        out.append(c)
        acc = (acc - c) >> p_b
    out.append(acc)
    return out


def _decode_overpacked(word, p_b, n_lanes, parities, signed_lanes):
    """Segment extraction for a 1-bit-overlapped layout.

    Each boundary carry is recovered from the raw upper segment's LSB XORed
    with the upper coefficient's true parity (rebuilt from operand LSBs by
    the caller).  Unsigned layouts only carry upward (+1), two's-complement
    layouts only borrow (-1), so the parity disambiguates fully.
    """
    mask = (1 << p_b) - 1
    raws = []
    acc = word
    for _ in range(n_lanes - 1):
        raws.append(acc & mask)
        acc >>= p_b
    raws.append(acc)
    sign = -1 if signed_lanes else 1
    cin = [0] * (n_lanes + 1)
    for m in range(1, n_lanes):
        cin[m] = sign * ((raws[m] & 1) ^ parities[m])
    out = []
    for m in range(n_lanes):
        e_out = cin[m + 1] if m + 1 < n_lanes else 0
        out.append(raws[m] + (e_out << p_b) - cin[m])
    return out


def _iter_rows(lows, highs, a_count, samples):
    """Yield operand rows: either the provided sample matrix or the full
    cross-product in odometer order (last slot fastest)."""
    if samples is not None:
        for row in samples:
            yield [int(v) for v in row]
        return
    n_slots = len(lows) * a_count
    lo = [int(lows[i % len(lows)]) for i in range(n_slots)]
    hi = [int(highs[i % len(highs)]) for i in range(n_slots)]
    row = lo[:]
    while True:
        yield row[:]
        k = n_slots - 1
        while k >= 0:
            row[k] += 1
            if row[k] < hi[k]:
                break
            row[k] = lo[k]
            k -= 1
        if k < 0:
            return


def sweep_kernel(d_b, e_b, g_b, n_d, n_e, overpacked, signed_ops, acc_bits,
                 a_count, lows, highs, samples):
    """Simulate-and-compare every trial of a kernel-packing layout.

    Returns (trials, mismatches, first_counterexample_or_None).
    """
    p_b = d_b + e_b + g_b
    lanes = n_d * n_e
    slots = n_d + n_e
    trials = 0
    mismatches = 0
    cex = None
    for row in _iter_rows(lows, highs, a_count, samples):
        trials += 1
        wide = 0
        expected = [0] * lanes
        parity = [0] * lanes
        for t in range(a_count):
            base = t * slots
            d = row[base:base + n_d]
            e = row[base + n_d:base + slots]
            dw = 0
            for i in range(n_d):
                dw += d[i] << (i * p_b)
            ew = 0
            for j in range(n_e):
                ew += e[j] << (j * n_d * p_b)
            wide = _wrap(wide + dw * ew, acc_bits, signed_ops)
            for j in range(n_e):
                for i in range(n_d):
                    m = i + j * n_d
                    expected[m] += d[i] * e[j]
                    parity[m] ^= d[i] & e[j] & 1
        if overpacked:
            got = _decode_overpacked(wide, p_b, lanes, parity, signed_ops)
        else:
            got = _decode_plain(wide, p_b, lanes, signed_ops)
        if got != expected:
            mismatches += 1
            if cex is None:
                cex = {"operands": row[:], "expected": expected, "got": got}
    return trials, mismatches, cex


def sweep_filter(w_b, a_b, g_b, k_p, n_p, overpacked, signed_ops, acc_bits,
                 a_count, lows, highs, samples):
    """Simulate-and-compare every trial of a filter-packing sub-task."""
    p_b = w_b + a_b + g_b
    lanes = k_p + n_p - 1
    slots = k_p + n_p
    trials = 0
    mismatches = 0
    cex = None
    for row in _iter_rows(lows, highs, a_count, samples):
        trials += 1
        wide = 0
        expected = [0] * lanes
        parity = [0] * lanes
        for t in range(a_count):
            base = t * slots
            f = row[base:base + k_p]
            s = row[base + k_p:base + slots]
            fw = 0
            for i in range(k_p):
                fw += f[i] << (i * p_b)
            sw = 0
            for j in range(n_p):
                sw += s[j] << (j * p_b)
            wide = _wrap(wide + fw * sw, acc_bits, signed_ops)
            for i in range(k_p):
                for j in range(n_p):
                    expected[i + j] += f[i] * s[j]
                    parity[i + j] ^= f[i] & s[j] & 1
        if overpacked:
            got = _decode_overpacked(wide, p_b, lanes, parity, signed_ops)
        else:
            got = _decode_plain(wide, p_b, lanes, signed_ops)
        if got != expected:
            mismatches += 1
            if cex is None:
                cex = {"operands": row[:], "expected": expected, "got": got}
    return trials, mismatches, cex


def sweep_filter_sep(w_b, a_b, g_b, k_p, n_p, overpacked, signed_ops, acc_bits,
                     split_weight, lo_bits, lows, highs, samples):
    """Separated-operand sweep: operands at their original widths are split
    into high/low halves, the two half-products are simulated independently
    and recombined, and the result is compared against direct convolution.

    ``w_b``/``a_b`` are the config's (post-split) widths; the split side's
    original width is implied by ``lows``/``highs``.
    """
    p_b = w_b + a_b + g_b
    lanes = k_p + n_p - 1
    lo_mask = (1 << lo_bits) - 1
    trials = 0
    mismatches = 0
    cex = None
    for row in _iter_rows(lows, highs, 1, samples):
        trials += 1
        f = row[:k_p]
        s = row[k_p:]
        if split_weight:
            hi_vals = [v >> lo_bits for v in f]
            lo_vals = [v & lo_mask for v in f]
            pairs = ((hi_vals, s), (lo_vals, s))
        else:
            hi_vals = [v >> lo_bits for v in s]
            lo_vals = [v & lo_mask for v in s]
            pairs = ((f, hi_vals), (f, lo_vals))
        got_halves = []
        for fv, sv in pairs:
            fw = 0
            for i in range(k_p):
                fw += fv[i] << (i * p_b)
            sw = 0
            for j in range(n_p):
                sw += sv[j] << (j * p_b)
            wide = _wrap(fw * sw, acc_bits, signed_ops)
            if overpacked:
                parity = [0] * lanes
                for i in range(k_p):
                    for j in range(n_p):
                        parity[i + j] ^= fv[i] & sv[j] & 1
                got_halves.append(
                    _decode_overpacked(wide, p_b, lanes, parity, signed_ops))
            else:
                got_halves.append(_decode_plain(wide, p_b, lanes, signed_ops))
        got = [(h << lo_bits) + l for h, l in zip(got_halves[0], got_halves[1])]
        expected = [0] * lanes
        for i in range(k_p):
            for j in range(n_p):
                expected[i + j] += f[i] * s[j]
        if got != expected:
            mismatches += 1
            if cex is None:
                cex = {"operands": row[:], "expected": expected, "got": got}
    return trials, mismatches, cex
