"""Time the hot kernels with numba on and off.

Each backend runs in its own interpreter because the switch is read at
import time::

    python3 benchmarks/bench_kernels.py            # both backends, table
    python3 benchmarks/bench_kernels.py --c 50 --k 1024 --repeat 5
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def run_one(c, k, levels, repeat):
    # imported here so the parent process never picks a backend
    from retrial_qbd import ModelParams, _kernels
    from retrial_qbd._accel import NUMBA_ENABLED

    p = ModelParams.from_rho(c, 0.7, 24.0, 1.0, 1.0)
    args = (c, p.lambda1, p.lambda2, p.mu, p.nu)
    out0 = np.empty(c + 1)
    out1 = np.empty(c + 1)
    dout = np.empty(2)

    def best(fn):
        fn()  # warm-up, includes compilation when numba is on
        times = []
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        return min(times)

    R0 = np.zeros((levels + 1, c + 1))
    R1 = np.zeros((levels + 1, c + 1))
    _kernels.compose(*args, levels, k, out0, out1, dout)
    R0[levels], R1[levels] = out0, out1
    D = np.zeros((levels + 1, 2))
    D[levels] = dout
    X = np.empty((levels + 1, c + 1))
    x0 = np.full(c + 1, 1.0 / (c + 1))

    res = {
        "numba": NUMBA_ENABLED,
        "compose": best(lambda: _kernels.compose(*args, 1, k, out0, out1, dout)),
        "sweep": best(lambda: _kernels.sweep(*args, levels, R0, R1, D)),
        "propagate": best(lambda: _kernels.propagate(x0, R0, R1, X)),
    }
    return res


def spawn(disable, argv):
    env = dict(os.environ, RETRIAL_QBD_DISABLE_NUMBA="1" if disable else "0")
    cmd = [sys.executable, __file__, "--child", *argv]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--c", type=int, default=100)
    ap.add_argument("--k", type=int, default=4096, help="composition depth")
    ap.add_argument("--levels", type=int, default=2000, help="levels for sweep/propagate")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)

    if args.child:
        print(json.dumps(run_one(args.c, args.k, args.levels, args.repeat)))
        return 0

    passthru = ["--c", str(args.c), "--k", str(args.k), "--levels", str(args.levels), "--repeat", str(args.repeat)]
    fast = spawn(False, passthru)
    slow = spawn(True, passthru)
    if not fast["numba"]:
        print("note: numba unavailable, both columns are pure Python")
    print(f"c={args.c} k={args.k} levels={args.levels} (best of {args.repeat})")
    print(f"{'kernel':<10} {'numba [s]':>12} {'numpy [s]':>12} {'speedup':>9}")
    for name in ("compose", "sweep", "propagate"):
        a, b = fast[name], slow[name]
        print(f"{name:<10} {a:12.5f} {b:12.5f} {b / a:9.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
