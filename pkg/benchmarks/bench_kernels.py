"""Compare the compiled and pure-Python likelihood kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--gate G]
"""
import argparse
import timeit

import numpy as np

from rltbd import _kernels_py
from rltbd.selftest import default_sensor, random_states
from rltbd.sensor import simulate_measurement

try:
    from rltbd import _kernels
except ImportError:
    _kernels = None


def workloads(gate, n_batch=400, seed=0):
    sensor = default_sensor(gate=gate)
    rng = np.random.default_rng(seed)
    state = random_states(sensor, 1, rng)[0]
    z2d = simulate_measurement(sensor, state, rng).reshape(sensor.shape)
    r, b = np.hypot(state[0], state[2]), np.arctan2(state[2], state[0])
    pts = random_states(sensor, n_batch, rng)
    rs, bs = np.hypot(pts[:, 0], pts[:, 2]), np.arctan2(pts[:, 2], pts[:, 0])
    common = (z2d, sensor.range_centers, sensor.bearing_centers, sensor.R, sensor.B, sensor.amplitude)
    return {
        "mismatch": lambda k: k.mismatch(*common, r, b, gate),
        f"mismatch_many[{n_batch}]": lambda k: k.mismatch_many(*common, rs, bs, gate),
        "polar_score": lambda k: k.polar_score(*common, r, b, gate),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--gate", type=float, default=0.0)
    args = parser.parse_args(argv)
    backends = {"python": _kernels_py}
    if _kernels is not None:
        backends["cython"] = _kernels
    print(f"{'kernel':<22}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}")
    for label, fn in workloads(args.gate).items():
        times = {}
        for name, mod in backends.items():
            timer = timeit.Timer(lambda: fn(mod))
            number, _ = timer.autorange()
            times[name] = min(timer.repeat(args.repeat, number)) / number
        row = f"{label:<22}" + "".join(f"{times[n] * 1e6:>12.1f}us" for n in backends)
        speed = f"{times['python'] / times['cython']:>9.1f}x" if "cython" in times else f"{'n/a':>10}"
        print(row + speed)


if __name__ == "__main__":
    main()
