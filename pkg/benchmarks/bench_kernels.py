#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times forward+backward of the temporal convolutions on the shapes the
backbone actually runs (stem, downsampling, multi-scale depthwise), plus a
whole-model forward/backward, for both backends.

    python benchmarks/bench_kernels.py [--batch 64] [--repeats 5]
"""

import argparse
import time

import numpy as np

from ionext.kernels import get_backend
from ionext.nn.model import desk_config, build_model
from ionext.training import mse_loss_grad


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(batch, repeats):
    rng = np.random.default_rng(0)
    cases = [
        ("stem k4s4 6->96 T=200", "conv", (batch, 6, 200), (96, 6, 4), 4, 0),
        ("down k2s2 96->192 T=50", "conv", (batch, 96, 50), (192, 96, 2), 2, 0),
        ("down k2s2 384->768 T=12", "conv", (batch, 384, 12), (768, 384, 2), 2, 0),
        ("dw k5 C=96 T=50", "dw", (batch, 96, 50), (96, 5), 1, 2),
        ("dw k11 C=192 T=25", "dw", (batch, 192, 25), (192, 11), 1, 5),
        ("dw k17 C=384 T=12", "dw", (batch, 384, 12), (384, 17), 1, 8),
    ]
    backends = {"numpy": get_backend("numpy")}
    try:
        backends["cython"] = get_backend("cython")
    except ImportError:
        print("(compiled backend unavailable; showing numpy only)")

    def variants(kind, mod, name):
        """(label, fwd, bwd) implementations to time for one backend."""
        if kind == "dw":
            return [(name, mod.dwconv1d_forward, mod.dwconv1d_backward)]
        out = [(name, mod.conv1d_forward, mod.conv1d_backward)]
        if name == "cython":
            # raw compiled loops, kept to document why dense convs delegate
            out.append(("cython-loops", mod.conv1d_forward_loops,
                        mod.conv1d_backward_loops))
        return out

    for label, kind, xshape, wshape, stride, pad in cases:
        x = rng.standard_normal(xshape).astype(np.float32)
        w = rng.standard_normal(wshape).astype(np.float32)
        cols = []
        for name, mod in backends.items():
            for vname, fwd, bwd in variants(kind, mod, name):
                if kind == "conv":
                    y = fwd(x, w, stride, pad)
                    dy = rng.standard_normal(y.shape).astype(np.float32)

                    def run(fwd=fwd, bwd=bwd, dy=dy):
                        fwd(x, w, stride, pad)
                        bwd(x, w, dy, stride, pad)
                else:
                    y = fwd(x, w, pad)
                    dy = rng.standard_normal(y.shape).astype(np.float32)

                    def run(fwd=fwd, bwd=bwd, dy=dy):
                        fwd(x, w, pad)
                        bwd(x, w, dy, pad)
                cols.append(f"{vname} {_time(run, repeats) * 1e3:.2f} ms")
        print(f"{label:28s} " + "   ".join(cols))


def bench_model(batch, repeats):
    import os
    print(f"\nwhole model (desk config, batch {batch}, T=200), "
          f"selected backend IONEXT_KERNELS={os.environ.get('IONEXT_KERNELS', 'auto')}")
    rng = np.random.default_rng(1)
    model = build_model(desk_config(), init_seed=0)
    x = rng.standard_normal((batch, 6, 200)).astype(np.float32)
    y = rng.standard_normal((batch, 2)).astype(np.float32)

    def fwd():
        return model.forward(x, training=False)

    def fwd_bwd():
        pred = model.forward(x, training=True)
        model.zero_grads()
        model.backward(mse_loss_grad(pred, y))

    print(f"  inference forward: {_time(fwd, repeats) * 1e3:9.2f} ms")
    print(f"  train fwd+bwd:     {_time(fwd_bwd, repeats) * 1e3:9.2f} ms")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    bench_kernels(args.batch, args.repeats)
    bench_model(args.batch, args.repeats)
