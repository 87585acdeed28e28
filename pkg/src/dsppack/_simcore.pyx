# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sweep backend.

Behavioral twin of ``_simpy``: identical trial order, decode semantics, and
counterexample payloads, restricted to accumulators of at most 62 bits so
every intermediate fits a signed 64-bit integer (the caller enforces this
and falls back to the pure-Python backend otherwise).

Signed right shifts and masks rely on two's-complement int64 semantics,
which gcc/clang guarantee on every supported target.
"""

import numpy as np


cdef inline long long _wrap(long long x, int acc_bits, bint signed_ops) nogil:
    cdef long long m = (<long long>1) << acc_bits
    x &= m - 1
    if signed_ops and x >= (m >> 1):
        x -= m
    return x


cdef void _decode_plain(long long word, int p_b, int n_lanes,
                        bint signed_lanes, long long* out) nogil:
    cdef long long acc = word
    cdef long long mask = ((<long long>1) << p_b) - 1
    cdef long long half = (<long long>1) << (p_b - 1)
    cdef long long full = mask + 1
    cdef long long r, c
    cdef int m
    for m in range(n_lanes - 1):
        r = acc & mask
        if signed_lanes and r >= half:
            c = r - full
        else:
            c = r
        out[m] = c
        acc = (acc - c) >> p_b
    out[n_lanes - 1] = acc


cdef void _decode_overpacked(long long word, int p_b, int n_lanes,
                             long long* parities, bint signed_lanes,
                             long long* raws, long long* out) nogil:
    cdef long long acc = word
    cdef long long mask = ((<long long>1) << p_b) - 1
    cdef int m
    cdef long long sign = -1 if signed_lanes else 1
    cdef long long cin_m, cin_next
    for m in range(n_lanes - 1):
        raws[m] = acc & mask
        acc >>= p_b
    raws[n_lanes - 1] = acc
    cin_m = 0
    for m in range(n_lanes):
        if m + 1 < n_lanes:
            cin_next = sign * ((raws[m + 1] & 1) ^ parities[m + 1])
        else:
            cin_next = 0
        # multiply instead of shifting: cin_next may be negative
        out[m] = raws[m] + cin_next * (((<long long>1) << p_b)) - cin_m
        cin_m = cin_next


cdef object _cex(long long* row, int n_slots, long long* expected,
                 long long* got, int lanes):
    return {
        "operands": [row[i] for i in range(n_slots)],
        "expected": [expected[m] for m in range(lanes)],
        "got": [got[m] for m in range(lanes)],
    }


cdef bint _advance(long long* row, long long* lo, long long* hi,
                   int n_slots) nogil:
    cdef int k = n_slots - 1
    while k >= 0:
        row[k] += 1
        if row[k] < hi[k]:
            return True
        row[k] = lo[k]
        k -= 1
    return False


def sweep_kernel(int d_b, int e_b, int g_b, int n_d, int n_e,
                 bint overpacked, bint signed_ops, int acc_bits,
                 int a_count, lows, highs, samples):
    cdef int p_b = d_b + e_b + g_b
    cdef int lanes = n_d * n_e
    cdef int slots = n_d + n_e
    cdef int n_slots = slots * a_count
    cdef long long trials = 0, mismatches = 0
    cdef object cex = None

    buf = np.zeros(n_slots * 2 + lanes * 4, dtype=np.int64)
    cdef long long[::1] mem = buf
    cdef long long* row = &mem[0]
    cdef long long* lo = &mem[n_slots]
    cdef long long* expected = &mem[2 * n_slots]
    cdef long long* parity = &mem[2 * n_slots + lanes]
    cdef long long* got = &mem[2 * n_slots + 2 * lanes]
    cdef long long* raws = &mem[2 * n_slots + 3 * lanes]
    hi_buf = np.zeros(n_slots, dtype=np.int64)
    cdef long long[::1] hi_mem = hi_buf
    cdef long long* hi = &hi_mem[0]

    cdef int i, j, t, m, base
    for i in range(n_slots):
        lo[i] = lows[i % slots]
        hi[i] = highs[i % slots]

    cdef long long[:, ::1] smp
    cdef Py_ssize_t n_samples = 0, s_idx = 0
    cdef bint exhaustive = samples is None
    if not exhaustive:
        smp = samples
        n_samples = smp.shape[0]

    cdef long long wide, dw, ew, d_i, e_j
    cdef bint ok, more = True

    if exhaustive:
        for i in range(n_slots):
            row[i] = lo[i]
    while True:
        if not exhaustive:
            if s_idx >= n_samples:
                break
            for i in range(n_slots):
                row[i] = smp[s_idx, i]
            s_idx += 1
        trials += 1
        wide = 0
        for m in range(lanes):
            expected[m] = 0
            parity[m] = 0
        for t in range(a_count):
            base = t * slots
            dw = 0
            for i in range(n_d):
                dw += row[base + i] << (i * p_b)
            ew = 0
            for j in range(n_e):
                ew += row[base + n_d + j] << (j * n_d * p_b)
            wide = _wrap(wide + dw * ew, acc_bits, signed_ops)
            for j in range(n_e):
                e_j = row[base + n_d + j]
                for i in range(n_d):
                    d_i = row[base + i]
                    m = i + j * n_d
                    expected[m] += d_i * e_j
                    parity[m] ^= d_i & e_j & 1
        if overpacked:
            _decode_overpacked(wide, p_b, lanes, parity, signed_ops, raws, got)
        else:
            _decode_plain(wide, p_b, lanes, signed_ops, got)
        ok = True
        for m in range(lanes):
            if got[m] != expected[m]:
                ok = False
                break
        if not ok:
            mismatches += 1
            if cex is None:
                cex = _cex(row, n_slots, expected, got, lanes)
        if exhaustive:
            if not _advance(row, lo, hi, n_slots):
                break
    return trials, mismatches, cex


def sweep_filter(int w_b, int a_b, int g_b, int k_p, int n_p,
                 bint overpacked, bint signed_ops, int acc_bits,
                 int a_count, lows, highs, samples):
    cdef int p_b = w_b + a_b + g_b
    cdef int lanes = k_p + n_p - 1
    cdef int slots = k_p + n_p
    cdef int n_slots = slots * a_count
    cdef long long trials = 0, mismatches = 0
    cdef object cex = None

    buf = np.zeros(n_slots * 2 + lanes * 4, dtype=np.int64)
    cdef long long[::1] mem = buf
    cdef long long* row = &mem[0]
    cdef long long* lo = &mem[n_slots]
    cdef long long* expected = &mem[2 * n_slots]
    cdef long long* parity = &mem[2 * n_slots + lanes]
    cdef long long* got = &mem[2 * n_slots + 2 * lanes]
    cdef long long* raws = &mem[2 * n_slots + 3 * lanes]
    hi_buf = np.zeros(n_slots, dtype=np.int64)
    cdef long long[::1] hi_mem = hi_buf
    cdef long long* hi = &hi_mem[0]

    cdef int i, j, t, m, base
    for i in range(n_slots):
        lo[i] = lows[i % slots]
        hi[i] = highs[i % slots]

    cdef long long[:, ::1] smp
    cdef Py_ssize_t n_samples = 0, s_idx = 0
    cdef bint exhaustive = samples is None
    if not exhaustive:
        smp = samples
        n_samples = smp.shape[0]

    cdef long long wide, fw, sw, f_i, s_j
    cdef bint ok

    if exhaustive:
        for i in range(n_slots):
            row[i] = lo[i]
    while True:
        if not exhaustive:
            if s_idx >= n_samples:
                break
            for i in range(n_slots):
                row[i] = smp[s_idx, i]
            s_idx += 1
        trials += 1
        wide = 0
        for m in range(lanes):
            expected[m] = 0
            parity[m] = 0
        for t in range(a_count):
            base = t * slots
            fw = 0
            for i in range(k_p):
                fw += row[base + i] << (i * p_b)
            sw = 0
            for j in range(n_p):
                sw += row[base + k_p + j] << (j * p_b)
            wide = _wrap(wide + fw * sw, acc_bits, signed_ops)
            for i in range(k_p):
                f_i = row[base + i]
                for j in range(n_p):
                    s_j = row[base + k_p + j]
                    expected[i + j] += f_i * s_j
                    parity[i + j] ^= f_i & s_j & 1
        if overpacked:
            _decode_overpacked(wide, p_b, lanes, parity, signed_ops, raws, got)
        else:
            _decode_plain(wide, p_b, lanes, signed_ops, got)
        ok = True
        for m in range(lanes):
            if got[m] != expected[m]:
                ok = False
                break
        if not ok:
            mismatches += 1
            if cex is None:
                cex = _cex(row, n_slots, expected, got, lanes)
        if exhaustive:
            if not _advance(row, lo, hi, n_slots):
                break
    return trials, mismatches, cex


def sweep_filter_sep(int w_b, int a_b, int g_b, int k_p, int n_p,
                     bint overpacked, bint signed_ops, int acc_bits,
                     bint split_weight, int lo_bits, lows, highs, samples):
    cdef int p_b = w_b + a_b + g_b
    cdef int lanes = k_p + n_p - 1
    cdef int n_slots = k_p + n_p
    cdef long long lo_mask = ((<long long>1) << lo_bits) - 1
    cdef long long trials = 0, mismatches = 0
    cdef object cex = None

    buf = np.zeros(n_slots * 4 + lanes * 5, dtype=np.int64)
    cdef long long[::1] mem = buf
    cdef long long* row = &mem[0]
    cdef long long* lo = &mem[n_slots]
    cdef long long* hvals = &mem[2 * n_slots]
    cdef long long* lvals = &mem[3 * n_slots]
    cdef long long* expected = &mem[4 * n_slots]
    cdef long long* parity = &mem[4 * n_slots + lanes]
    cdef long long* got = &mem[4 * n_slots + 2 * lanes]
    cdef long long* half_out = &mem[4 * n_slots + 3 * lanes]
    cdef long long* raws = &mem[4 * n_slots + 4 * lanes]
    hi_buf = np.zeros(n_slots, dtype=np.int64)
    cdef long long[::1] hi_mem = hi_buf
    cdef long long* hi = &hi_mem[0]

    cdef int i, j, m, half
    for i in range(n_slots):
        lo[i] = lows[i]
        hi[i] = highs[i]

    cdef long long[:, ::1] smp
    cdef Py_ssize_t n_samples = 0, s_idx = 0
    cdef bint exhaustive = samples is None
    if not exhaustive:
        smp = samples
        n_samples = smp.shape[0]

    cdef long long wide, fw, sw, f_i, s_j, v
    cdef long long* fptr
    cdef long long* sptr
    cdef bint ok

    if exhaustive:
        for i in range(n_slots):
            row[i] = lo[i]
    while True:
        if not exhaustive:
            if s_idx >= n_samples:
                break
            for i in range(n_slots):
                row[i] = smp[s_idx, i]
            s_idx += 1
        trials += 1
        for m in range(lanes):
            expected[m] = 0
            got[m] = 0
        for i in range(k_p):
            f_i = row[i]
            for j in range(n_p):
                expected[i + j] += f_i * row[k_p + j]
        if split_weight:
            for i in range(k_p):
                v = row[i]
                hvals[i] = v >> lo_bits
                lvals[i] = v & lo_mask
        else:
            for j in range(n_p):
                v = row[k_p + j]
                hvals[j] = v >> lo_bits
                lvals[j] = v & lo_mask
        for half in range(2):
            if split_weight:
                fptr = hvals if half == 0 else lvals
                sptr = row + k_p
            else:
                fptr = row
                sptr = hvals if half == 0 else lvals
            fw = 0
            for i in range(k_p):
                fw += fptr[i] << (i * p_b)
            sw = 0
            for j in range(n_p):
                sw += sptr[j] << (j * p_b)
            wide = _wrap(fw * sw, acc_bits, signed_ops)
            if overpacked:
                for m in range(lanes):
                    parity[m] = 0
                for i in range(k_p):
                    f_i = fptr[i]
                    for j in range(n_p):
                        s_j = sptr[j]
                        parity[i + j] ^= f_i & s_j & 1
                _decode_overpacked(wide, p_b, lanes, parity, signed_ops,
                                   raws, half_out)
            else:
                _decode_plain(wide, p_b, lanes, signed_ops, half_out)
            if half == 0:
                for m in range(lanes):
                    got[m] = half_out[m] << lo_bits
            else:
                for m in range(lanes):
                    got[m] += half_out[m]
        ok = True
        for m in range(lanes):
            if got[m] != expected[m]:
                ok = False
                break
        if not ok:
            mismatches += 1
            if cex is None:
                cex = _cex(row, n_slots, expected, got, lanes)
        if exhaustive:
            if not _advance(row, lo, hi, n_slots):
                break
    return trials, mismatches, cex
