"""Compare the compiled and numpy kernel backends.

Each backend is timed in its own interpreter, since the choice is made once
at import through ``HOMEORL_KERNELS``. Reports per-call kernel timings and
the wall time of a short desk-scale training run for both agents.

    python benchmarks/bench_kernels.py [--steps 2000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time, timeit
import numpy as np
from homeorl import kernels
from homeorl.config import preset_config
from homeorl.harness import run_episode

steps, repeat = int(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
z = rng.normal(size=(64, 128)); b = rng.normal(size=128)
q = rng.normal(size=(64, 4)); a = rng.integers(0, 4, 64).astype(np.int64); y = rng.normal(size=64)
g = np.empty_like(q)
n = 22_276
p, grad, m, v = rng.normal(size=n), rng.normal(size=n), np.zeros(n), np.zeros(n)
vals = rng.random((4, 11, 11)); out = np.zeros(40)
cases = {
    "bias_relu 64x128": lambda: kernels.bias_relu(z.copy(), b),
    "relu_mask_grad 64x128": lambda: kernels.relu_mask_grad(z.copy(), z),
    "td_residual 64x4": lambda: kernels.td_residual(q, a, y, g),
    "adam_step 22k params": lambda: kernels.adam_step(p, grad, m, v, 1e-3, 0.9, 0.999, 1e-8, 1),
    "observe_window 4x11x11": lambda: kernels.observe_window(vals, 5, 5, out),
}
res = {"backend": kernels.BACKEND, "kernels_us": {}, "episode_s": {}}
for name, fn in cases.items():
    number = 2000
    best = min(timeit.repeat(fn, number=number, repeat=repeat)) / number
    res["kernels_us"][name] = best * 1e6
for kind in ("monolithic", "modular"):
    c = preset_config("desk", agent_kind=kind, total_steps=steps, delta_window=(steps // 2, steps),
                      anneal_steps=min(2000, steps))
    t0 = time.perf_counter()
    run_episode(c)
    res["episode_s"][kind] = time.perf_counter() - t0
print(json.dumps(res))
"""


def run_backend(choice: str, steps: int, repeat: int) -> dict:
    env = dict(os.environ, HOMEORL_KERNELS=choice)
    out = subprocess.run([sys.executable, "-c", WORKER, str(steps), str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--steps", type=int, default=2000, help="training steps per episode")
    ap.add_argument("--repeat", type=int, default=5, help="timeit repeats per kernel")
    args = ap.parse_args(argv)

    try:
        c = run_backend("c", args.steps, args.repeat)
    except subprocess.CalledProcessError:
        print("compiled backend unavailable; build with `pip install -e . --no-build-isolation`")
        return 1
    py = run_backend("python", args.steps, args.repeat)

    print(f"{'kernel':<26}{'python us':>12}{'c us':>10}{'speedup':>10}")
    for name, t_py in py["kernels_us"].items():
        t_c = c["kernels_us"][name]
        print(f"{name:<26}{t_py:>12.2f}{t_c:>10.2f}{t_py / t_c:>9.1f}x")
    print(f"\n{args.steps}-step desk episode (s)")
    for kind, t_py in py["episode_s"].items():
        t_c = c["episode_s"][kind]
        print(f"{kind:<26}{t_py:>12.2f}{t_c:>10.2f}{t_py / t_c:>9.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
