"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--blocks 1000] [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from fdss import kernels
from fdss.chain import SystemConfig, transmit
from fdss.filters import rrc_taps
from fdss.metrics import default_edges
from fdss.rng import BlockStream


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--blocks", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    cfg = SystemConfig()
    s = BlockStream(0, 0, args.blocks).symbols(cfg.n_data, cfg.mod_order)
    tx = np.ascontiguousarray(transmit(cfg, rrc_taps(cfg), s))
    d = 10 * np.log10(kernels.papr_rows(tx))
    fine, coarse = default_edges(0.01, 12.0), default_edges()
    cases = {
        "papr_rows": lambda impl: kernels.papr_rows(tx, impl),
        "smooth_auccdf": lambda impl: kernels.smooth_auccdf(d, coarse, 100.0, impl),
        "exceed_counts": lambda impl: kernels.exceed_counts(d, fine, impl),
    }
    fft = min(timeit.repeat(lambda: np.fft.ifft(tx, axis=-1), number=1, repeat=args.repeat))
    impls = kernels.implementations()
    print(f"active backend: {kernels.BACKEND}; {args.blocks} blocks of {cfg.n_fft} samples")
    print(f"reference: one batched IFFT takes {fft * 1e3:.2f} ms")
    print(f"{'kernel':<16}" + "".join(f"{name:>14}" for name in impls) + f"{'speedup':>10}")
    for name, fn in cases.items():
        t = {k: min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
             for k, impl in impls.items()}
        speed = t["python"] / t["compiled"] if "compiled" in t else float("nan")
        print(f"{name:<16}" + "".join(f"{v * 1e3:>11.3f} ms" for v in t.values()) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
