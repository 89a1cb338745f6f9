"""Time the ODE kernel with numba and with the pure-Python fallback.

Each backend runs in its own interpreter because the switch is read at
import time. Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import json
import os
import subprocess
import sys

import numpy as np

WORKER = r"""
import json, sys, time
import numpy as np
from hubblering import presets
from hubblering._accel import backend
from hubblering.integrator import integrate, seed_state

repeat = int(sys.argv[1])
params = presets.CONTRACTION
prof = presets.preset_profile("contraction", 38.2)
t = np.linspace(0.0, 150.0, 301)
init = seed_state(params, prof)
integrate(params, prof, None, init, t)  # warm-up / compile
times = []
for _ in range(repeat):
    t0 = time.perf_counter()
    traj = integrate(params, prof, None, init, t)
    times.append(time.perf_counter() - t0)
print(json.dumps({"backend": backend(), "best_s": min(times), "median_s": float(np.median(times)),
                  "dn": traj.dn.tolist()}))
"""


def run(disable, repeat):
    env = dict(os.environ)
    if disable:
        env["HUBBLERING_DISABLE_NUMBA"] = "1"
    else:
        env.pop("HUBBLERING_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    fast = run(False, args.repeat)
    slow = run(True, max(1, args.repeat // 5))
    diff = float(np.max(np.abs(np.array(fast["dn"]) - np.array(slow["dn"]))))
    for r in (fast, slow):
        print(f"{r['backend']:>7}: best {r['best_s'] * 1e3:9.2f} ms   median {r['median_s'] * 1e3:9.2f} ms")
    print(f"speedup: {slow['best_s'] / fast['best_s']:.1f}x   max |dn| difference: {diff:.2e}")


if __name__ == "__main__":
    main()
