"""Wall-clock comparison of the numba and numpy kernel backends.

Run with ``python benchmarks/bench_kernels.py [--repeat R] [--threads T]``.
Each kernel is called once untimed (numba compilation), then timed ``R``
times; the table reports the best time per backend, the speedup, and the
maximum absolute difference between the two outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from xray_sharp import _kernels as K
from xray_sharp import set_threads


def _inputs(rng, M=4096, I=65, J=129, L=24):
    t = np.linspace(1.0, 2.0, I)
    phase = rng.uniform(-50, 50, (M, J))
    amp_s = rng.uniform(0, 1, J)
    amp_t = rng.uniform(0, 1, I)
    F = rng.standard_normal((M, I)) + 1j * rng.standard_normal((M, I))
    G = rng.standard_normal((M, J)) + 1j * rng.standard_normal((M, J))
    A = rng.standard_normal((M // 16, I, J)) + 0j
    pts = rng.uniform(-0.5, 0.5, (2048, 2))
    xi = rng.uniform(-60, 60, (M, 2))
    coef = rng.standard_normal(M) + 0j
    m = M // 64
    tau = rng.uniform(-20, 20, (m, L))
    At = rng.standard_normal((m, L, I, J)) + 0j
    Gt = G[:m]
    return {
        "contract_t": (phase, t, amp_t, F, -1.0),
        "contract_s": (phase, t, amp_s, G, 1.0),
        "contract_s_general": (phase[: M // 16], t, A, G[: M // 16], 1.0),
        "fiber_top_sv": (phase[: M // 16], t, A.real.copy()),
        "plane_wave_sum": (pts, xi, coef),
        "tau_spectrum": (phase[:m], t, tau, At, Gt),
    }


def _best(fn, args, repeat):
    out = fn(*args)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)
    if not K.HAVE_NUMBA:
        print("numba is not importable; nothing to compare")
        return 1
    threads = set_threads(args.threads)
    inputs = _inputs(np.random.default_rng(0))
    print(f"threads={threads}")
    print(f"{'kernel':20s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s} {'max|diff|':>10s}")
    for name in K.KERNEL_NAMES:
        a = inputs[name]
        t_np, o_np = _best(getattr(K, name + "_numpy"), a, args.repeat)
        t_nb, o_nb = _best(getattr(K, name + "_numba"), a, args.repeat)
        diff = float(np.max(np.abs(np.asarray(o_np) - np.asarray(o_nb))))
        print(f"{name:20s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f} {diff:10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
