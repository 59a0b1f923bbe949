"""Naive straight-from-formula reference implementations for the tests.

Everything here is deliberately written with plain Python loops, ``sum``,
``sorted`` and ``math`` so it shares no code with the package.  It mirrors
the documented conventions: population moments (divide by series length),
serial left-to-right sums, linear percentile interpolation, 16 equal-width
histogram bins with index floor(16 * (x - min) / range) clamped to 15, and
order-3 ordinal patterns with ties broken by index.
"""

from __future__ import annotations

import math
from collections import Counter

BINS = 16
RATIO_EPS = 1e-6
RATIO_CAP = 1e6
AVG_SPAN = 0.1
BPS_SPAN = 1.0


def mean(xs):
    return sum(xs) / len(xs)


def pop_std(xs):
    mu = mean(xs)
    return math.sqrt(sum((x - mu) ** 2 for x in xs) / len(xs))


def percentile(xs, q):
    s = sorted(xs)
    n = len(s)
    h = (n - 1) * (q / 100.0)
    lo = int(h)
    frac = h - lo
    if lo + 1 >= n:
        return s[n - 1]
    return s[lo] + (s[lo + 1] - s[lo]) * frac


def bin_index(x, mn, rng):
    idx = int((x - mn) / rng * BINS)
    return BINS - 1 if idx >= BINS else idx


def hist_entropy(xs):
    mn, mx = min(xs), max(xs)
    if mn == mx:
        return 0.0
    counts = Counter(bin_index(x, mn, mx - mn) for x in xs)
    n = len(xs)
    return -sum((c / n) * math.log(c / n) for c in counts.values())


def perm_entropy(xs):
    n = len(xs) - 2
    if n < 1:
        return 0.0
    counts = Counter()
    for i in range(n):
        trip = xs[i : i + 3]
        pattern = tuple(sorted(range(3), key=lambda j: (trip[j], j)))
        counts[pattern] += 1
    return -sum((c / n) * math.log(c / n) for c in counts.values())


def lis_strict(xs):
    if not len(xs):
        return 0
    best = [1] * len(xs)
    for i in range(len(xs)):
        for j in range(i):
            if xs[j] < xs[i] and best[j] + 1 > best[i]:
                best[i] = best[j] + 1
    return max(best)


def span_members(times, j, length):
    limit = times[j] + length
    return [i for i in range(len(times)) if times[j] <= times[i] < limit and i >= j]


def oracle_features(times, sizes, window_s=0.5, burst_s=0.05):
    """All 36 features for one window, in canonical order."""
    t = [float(v) for v in times]
    b = [float(v) for v in sizes]
    n = len(t)
    d = [t[i + 1] - t[i] for i in range(n - 1)]
    m = len(d)

    def max_byte_rate(span):
        best = 0.0
        for j in range(n):
            members = span_members(t, j, span)
            rate = 8.0 * sum(b[i] for i in members) / span
            best = max(best, rate)
        return best

    out = []
    # rate-based
    out.append(max_byte_rate(AVG_SPAN))
    burst = max_byte_rate(burst_s)
    out.append(burst)
    best = 0.0
    for j in range(n):
        members = span_members(t, j, AVG_SPAN)
        if len(members) >= 2 and t[members[-1]] > t[j]:
            best = max(best, (len(members) - 1) / (t[members[-1]] - t[j]))
    out.append(best)
    best = 0.0
    for j in range(n):
        members = span_members(t, j, BPS_SPAN)
        best = max(best, sum(b[i] for i in members) / BPS_SPAN)
    out.append(best)
    out.append(sum(b) / window_s)
    out.append(n / window_s)

    # IAT statistics
    mu = mean(d)
    sd = pop_std(d)
    out.append(mu)
    out.append(sd)
    out.append(sd / mu if sd > 0 else 0.0)
    p25, p75, p90, p10 = (percentile(d, q) for q in (25, 75, 90, 10))
    out.extend([p25, p75, p90])
    out.append(min(p90 / (p10 if p10 > 0 else RATIO_EPS), RATIO_CAP))
    out.append(0.0 if min(d) == max(d) else sum(1 for x in d if x > mu) / m)
    out.append(hist_entropy(d))

    # time series
    prod = [b[i] * d[i] for i in range(m)]
    mu_p = mean(prod)
    sd_p = pop_std(prod)
    out.append(mu_p)
    out.append(sd_p / mu_p if sd_p > 0 else 0.0)
    d2 = [d[i + 1] - d[i] for i in range(m - 1)]
    out.append(1.0 / (1.0 + (pop_std(d2) if d2 else 0.0)))
    if m >= 2:
        mn, mx = min(d), max(d)
        if mn == mx:
            symbols = [0] * m
        else:
            symbols = [bin_index(x, mn, mx - mn) for x in d]
        pairs = Counter(zip(symbols, symbols[1:]))
        total = m - 1
        out.append(-sum((c / total) * math.log(c / total) for c in pairs.values()))
    else:
        out.append(0.0)

    # change and acceleration
    d3 = [d2[i + 1] - d2[i] for i in range(len(d2) - 1)]
    for series in (d2, d3):
        if series:
            out.append(mean(series))
            out.append(pop_std(series))
        else:
            out.extend([0.0, 0.0])

    # correlation and entropy
    bb = b[:m]
    sb, sdd = pop_std(bb), pop_std(d)
    if sb > 0 and sdd > 0:
        mb, md = mean(bb), mean(d)
        cov = sum((bb[i] - mb) * (d[i] - md) for i in range(m)) / m
        out.append(min(1.0, max(-1.0, cov / (sb * sdd))))
    else:
        out.append(0.0)
    out.append(hist_entropy(d) / m)
    out.append(lis_strict(b) / n)
    out.append(lis_strict(d) / m)
    out.append(perm_entropy(b))
    out.append(perm_entropy(d))

    # statistical
    mu_d = mean(d)
    c = [x - mu_d for x in d]
    m2 = sum(v * v for v in c) / m
    if m2 == 0.0:
        out.extend([0.0, 0.0, 3.0])
    else:
        out.append(sum(c[i] * c[i + 1] for i in range(m - 1)) / sum(v * v for v in c))
        m3 = sum(v**3 for v in c) / m
        m4 = sum(v**4 for v in c) / m
        out.append(m3 / m2**1.5)
        out.append(m4 / (m2 * m2))

    # rate variability
    rates = [8.0 * bb[i] / d[i] for i in range(m) if d[i] > 0]
    if rates:
        mu_r = mean(rates)
        sd_r = pop_std(rates)
        out.append(sd_r / mu_r if sd_r > 0 else 0.0)
        out.append(max(rates))
    else:
        out.extend([0.0, 0.0])
    out.append(burst)
    out.append(min(1.0, max(-1.0, (sd - mu) / (sd + mu))) if sd + mu > 0 else 0.0)
    return out
