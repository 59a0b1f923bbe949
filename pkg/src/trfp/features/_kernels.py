"""Numba kernel computing all 36 window features in one pass.

Mirrors ``groups.py`` operation-for-operation (serial sums, shared bin and
percentile formulas, identical fallbacks) so the two backends agree to the
last bit on integer byte sizes and to ~1e-15 otherwise.  Only imported when
numba is enabled.
"""

from __future__ import annotations

import numpy as np

from .._numba import njit
from .params import (
    AVG_RATE_SUBSPAN_S,
    BYTES_PER_SECOND_SPAN_S,
    ENTROPY_BINS,
    RATIO_CAP,
    RATIO_EPS,
)


@njit(cache=True)
def _ssum(a):
    total = 0.0
    for i in range(a.size):
        total += a[i]
    return total


@njit(cache=True)
def _span_end(t, j, length):
    # First index with t[i] >= t[j] + length (t sorted).
    limit = t[j] + length
    lo = j
    hi = t.size
    while lo < hi:
        mid = (lo + hi) // 2
        if t[mid] < limit:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def _max_byte_rate(t, b, span_s):
    best = 0.0
    for j in range(t.size):
        e = _span_end(t, j, span_s)
        total = 0.0
        for i in range(j, e):
            total += b[i]
        rate = 8.0 * total / span_s
        if rate > best:
            best = rate
    return best


@njit(cache=True)
def _percentile(s, q):
    n = s.size
    h = (n - 1) * (q / 100.0)
    lo = int(h)
    frac = h - lo
    if lo + 1 >= n:
        return s[n - 1]
    return s[lo] + (s[lo + 1] - s[lo]) * frac


@njit(cache=True)
def _entropy_from_counts(counts, total):
    h = 0.0
    for i in range(counts.size):
        c = counts[i]
        if c > 0:
            p = c / total
            h -= p * np.log(p)
    return h


@njit(cache=True)
def _bin_index(x, mn, rng):
    idx = int((x - mn) / rng * ENTROPY_BINS)
    if idx >= ENTROPY_BINS:
        idx = ENTROPY_BINS - 1
    return idx


@njit(cache=True)
def _hist_entropy(a):
    if a.size == 0:
        return 0.0
    mn = a[0]
    mx = a[0]
    for i in range(a.size):
        if a[i] < mn:
            mn = a[i]
        if a[i] > mx:
            mx = a[i]
    if mx == mn:
        return 0.0
    counts = np.zeros(ENTROPY_BINS, dtype=np.int64)
    rng = mx - mn
    for i in range(a.size):
        counts[_bin_index(a[i], mn, rng)] += 1
    return _entropy_from_counts(counts, a.size)


@njit(cache=True)
def _perm_entropy(a):
    n = a.size - 2
    if n < 1:
        return 0.0
    counts = np.zeros(27, dtype=np.int64)
    for i in range(n):
        x0 = a[i]
        x1 = a[i + 1]
        x2 = a[i + 2]
        r0 = int(x0 > x1) + int(x0 > x2)
        r1 = int(x1 >= x0) + int(x1 > x2)
        r2 = int(x2 >= x0) + int(x2 >= x1)
        counts[r0 * 9 + r1 * 3 + r2] += 1
    return _entropy_from_counts(counts, n)


@njit(cache=True)
def _lis_length(a):
    tails = np.empty(a.size, dtype=np.float64)
    m = 0
    for k in range(a.size):
        x = a[k]
        lo = 0
        hi = m
        while lo < hi:
            mid = (lo + hi) // 2
            if tails[mid] < x:
                lo = mid + 1
            else:
                hi = mid
        tails[lo] = x
        if lo == m:
            m += 1
    return m


@njit(cache=True)
def window_features_kernel(t, b, window_s, burst_s):
    """36 features for one window; ``t`` relative seconds, ``b`` bytes."""
    out = np.zeros(36, dtype=np.float64)
    n = t.size
    m = n - 1

    d = np.empty(m, dtype=np.float64)
    for i in range(m):
        d[i] = t[i + 1] - t[i]

    # --- rate-based -------------------------------------------------------
    out[0] = _max_byte_rate(t, b, AVG_RATE_SUBSPAN_S)
    burst = _max_byte_rate(t, b, burst_s)
    out[1] = burst

    max_arrival = 0.0
    for j in range(n):
        e = _span_end(t, j, AVG_RATE_SUBSPAN_S)
        if e - j >= 2 and t[e - 1] > t[j]:
            rate = (e - 1 - j) / (t[e - 1] - t[j])
            if rate > max_arrival:
                max_arrival = rate
    out[2] = max_arrival

    max_bps = 0.0
    for j in range(n):
        e = _span_end(t, j, BYTES_PER_SECOND_SPAN_S)
        total = 0.0
        for i in range(j, e):
            total += b[i]
        total /= BYTES_PER_SECOND_SPAN_S
        if total > max_bps:
            max_bps = total
    out[3] = max_bps

    out[4] = _ssum(b) / window_s
    out[5] = n / window_s

    # --- IAT statistics ----------------------------------------------------
    mu = _ssum(d) / m
    c = d - mu
    c2 = c * c
    m2 = _ssum(c2) / m
    sd = np.sqrt(m2)
    out[6] = mu
    out[7] = sd
    out[8] = sd / mu if sd > 0.0 else 0.0

    s = np.sort(d)
    p25 = _percentile(s, 25.0)
    p75 = _percentile(s, 75.0)
    p90 = _percentile(s, 90.0)
    p10 = _percentile(s, 10.0)
    out[9] = p25
    out[10] = p75
    out[11] = p90
    denom = p10 if p10 > 0.0 else RATIO_EPS
    ratio = p90 / denom
    out[12] = ratio if ratio < RATIO_CAP else RATIO_CAP

    dmin = s[0]
    dmax = s[m - 1]
    if dmin == dmax:
        out[13] = 0.0
    else:
        cnt = 0
        for i in range(m):
            if d[i] > mu:
                cnt += 1
        out[13] = cnt / m
    iat_ent = _hist_entropy(d)
    out[14] = iat_ent

    # --- time series -------------------------------------------------------
    prod = np.empty(m, dtype=np.float64)
    for i in range(m):
        prod[i] = b[i] * d[i]
    mu_p = _ssum(prod) / m
    cp = prod - mu_p
    sd_p = np.sqrt(_ssum(cp * cp) / m)
    out[15] = mu_p
    out[16] = sd_p / mu_p if sd_p > 0.0 else 0.0

    k2 = m - 1
    if k2 >= 1:
        d2 = np.empty(k2, dtype=np.float64)
        for i in range(k2):
            d2[i] = d[i + 1] - d[i]
        mu2 = _ssum(d2) / k2
        c2d = d2 - mu2
        sd2 = np.sqrt(_ssum(c2d * c2d) / k2)
    else:
        d2 = np.empty(0, dtype=np.float64)
        mu2 = 0.0
        sd2 = 0.0
    out[17] = 1.0 / (1.0 + sd2)

    if m >= 2:
        if dmax == dmin:
            counts = np.zeros(ENTROPY_BINS * ENTROPY_BINS, dtype=np.int64)
            counts[0] = m - 1
        else:
            rng = dmax - dmin
            counts = np.zeros(ENTROPY_BINS * ENTROPY_BINS, dtype=np.int64)
            prev = _bin_index(d[0], dmin, rng)
            for i in range(1, m):
                cur = _bin_index(d[i], dmin, rng)
                counts[prev * ENTROPY_BINS + cur] += 1
                prev = cur
        out[18] = _entropy_from_counts(counts, m - 1)
    else:
        out[18] = 0.0

    # --- change and acceleration --------------------------------------------
    if k2 >= 1:
        out[19] = mu2
        out[20] = sd2
    k3 = k2 - 1
    if k3 >= 1:
        d3 = np.empty(k3, dtype=np.float64)
        for i in range(k3):
            d3[i] = d2[i + 1] - d2[i]
        mu3 = _ssum(d3) / k3
        c3 = d3 - mu3
        out[21] = mu3
        out[22] = np.sqrt(_ssum(c3 * c3) / k3)

    # --- correlation and entropy ---------------------------------------------
    bb = b[:m]
    mu_b = _ssum(bb) / m
    cb = bb - mu_b
    sd_b = np.sqrt(_ssum(cb * cb) / m)
    if sd_b > 0.0 and sd > 0.0:
        cov = _ssum(cb * c) / m
        corr = cov / (sd_b * sd)
        if corr > 1.0:
            corr = 1.0
        elif corr < -1.0:
            corr = -1.0
        out[23] = corr
    out[24] = iat_ent / m
    out[25] = _lis_length(b) / n
    out[26] = _lis_length(d) / m
    out[27] = _perm_entropy(b)
    out[28] = _perm_entropy(d)

    # --- statistical ----------------------------------------------------------
    if m2 == 0.0:
        out[29] = 0.0
        out[30] = 0.0
        out[31] = 3.0
    else:
        num = 0.0
        for i in range(m - 1):
            num += c[i] * c[i + 1]
        out[29] = num / _ssum(c2)
        m3 = _ssum(c2 * c) / m
        m4 = _ssum(c2 * c2) / m
        out[30] = m3 / m2**1.5
        out[31] = m4 / (m2 * m2)

    # --- rate variability -------------------------------------------------------
    n_rates = 0
    for i in range(m):
        if d[i] > 0.0:
            n_rates += 1
    if n_rates > 0:
        rates = np.empty(n_rates, dtype=np.float64)
        k = 0
        peak = -1.0
        for i in range(m):
            if d[i] > 0.0:
                r = 8.0 * bb[i] / d[i]
                rates[k] = r
                k += 1
                if r > peak:
                    peak = r
        mu_r = _ssum(rates) / n_rates
        cr = rates - mu_r
        sd_r = np.sqrt(_ssum(cr * cr) / n_rates)
        out[32] = sd_r / mu_r if sd_r > 0.0 else 0.0
        out[33] = peak
    out[34] = burst
    if sd + mu > 0.0:
        bs = (sd - mu) / (sd + mu)
        if bs > 1.0:
            bs = 1.0
        elif bs < -1.0:
            bs = -1.0
        out[35] = bs
    return out
