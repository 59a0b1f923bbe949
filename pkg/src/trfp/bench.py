"""Benchmark the numba kernels against the pure-numpy fallback.

Run ``python -m trfp.bench``.  When numba is enabled this re-executes
itself in a subprocess with ``TRFP_DISABLE_NUMBA=1`` and prints both
columns; kernel outputs are identical between paths by construction.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time

import numpy as np

from ._numba import NUMBA_ENABLED


def _time(fn, n=5, warm=2) -> float:
    for _ in range(warm):
        fn()
    t0 = time.perf_counter()
    for _ in range(n):
        fn()
    return (time.perf_counter() - t0) / n


def run_benchmarks() -> dict[str, float]:
    from .features import WindowParams, extract
    from .features.extract import compute_window_features
    from .classifier._kernels import batched_matmul, softmax_lastaxis
    from .simulator import CHANNEL_PRESETS, gen_token_times, packetize, channel_apply, table1_profiles

    results: dict[str, float] = {}
    rng = np.random.default_rng(0)

    # one feature window (~120 packets), then a full 60 s trace extraction
    params = WindowParams()
    times = np.sort(rng.uniform(0.0, 0.5, 120))
    sizes = rng.integers(60, 1500, 120).astype(np.float64)
    compute_window_features(times, sizes, params)  # JIT warm-up
    results["window_features_us"] = _time(lambda: compute_window_features(times, sizes, params), n=200) * 1e6

    profile = table1_profiles()[0]
    channel = CHANNEL_PRESETS["localhost"]
    tok = gen_token_times(profile, 12000, 7)
    send, szs = packetize(tok, channel, 8)
    trace = channel_apply(send, szs, channel, 9, label=profile.label)
    results["extract_60s_trace_ms"] = _time(lambda: extract(trace, params), n=3) * 1e3

    # attention softmax and head matmuls at the default score shape
    scores = rng.standard_normal((512, 128, 128)).astype(np.float32)
    softmax_lastaxis(scores)
    results["attention_softmax_ms"] = _time(lambda: softmax_lastaxis(scores), n=5) * 1e3

    other = rng.standard_normal((512, 128, 128)).astype(np.float32)
    results["batched_matmul_ms"] = _time(lambda: batched_matmul(scores, other), n=5) * 1e3
    return results


def main() -> int:
    if "--json" in sys.argv:
        print(json.dumps(run_benchmarks()))
        return 0

    mine = run_benchmarks()
    other = None
    if NUMBA_ENABLED:
        env = dict(os.environ, TRFP_DISABLE_NUMBA="1")
        out = subprocess.run(
            [sys.executable, "-m", "trfp.bench", "--json"],
            capture_output=True, text=True, env=env, check=True,
        )
        other = json.loads(out.stdout.strip().splitlines()[-1])

    unit = {"window_features_us": "us", "extract_60s_trace_ms": "ms",
            "attention_softmax_ms": "ms", "batched_matmul_ms": "ms"}
    if other is None:
        print("numba disabled; pure-numpy path only\n")
        print(f"{'kernel':<24}{'numpy':>12}")
        for key, value in mine.items():
            print(f"{key.rsplit('_', 1)[0]:<24}{value:>10.1f} {unit[key]}")
    else:
        print(f"{'kernel':<24}{'numba':>12}{'numpy':>14}{'speedup':>9}")
        for key, value in mine.items():
            print(
                f"{key.rsplit('_', 1)[0]:<24}{value:>10.1f} {unit[key]}"
                f"{other[key]:>12.1f} {unit[key]}{other[key] / value:>8.1f}x"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
