"""Time the compiled plant kernel against the pure-Python one on the same workload.

    python benchmarks/bench_kernels.py --steps 2000 --repeat 5
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from auvgnc.core import kernels
from auvgnc.plant.params import Disturbance, PlantParams, kernel_params
from auvgnc.sim.config import load_preset
from auvgnc.sim.runner import level_orientation


def workload(steps: int, speed: float = 5.0):
    path = load_preset("depth_change")
    plant = PlantParams()
    prm = kernel_params(plant, Disturbance(suction=True), speed, 1.0, path.final_time,
                        path.min_speed_floor)
    x0 = np.concatenate((path.eval(0.0), level_orientation(path.tangent(0.0)).reshape(-1),
                         [0.0, 0.0, 0.0]))
    args = dict(cmd=np.array([0.002, -0.001]), t0=0.0, dt=0.01, nsteps=steps, prm=prm,
                ctrl=np.ascontiguousarray(path.control_points),
                hodo=np.ascontiguousarray(path.hodograph))
    return x0, args


def time_backend(fn, steps: int, repeat: int):
    x0, a = workload(steps)
    times, out = [], None
    for _ in range(repeat):
        x, ap = x0.copy(), np.zeros(4)
        out = np.zeros((steps, kernels.NCOL))
        t = time.perf_counter()
        status = fn(x, ap, a["cmd"], a["t0"], a["dt"], a["nsteps"], a["prm"], a["ctrl"],
                    a["hodo"], out)
        times.append(time.perf_counter() - t)
        if status:
            raise RuntimeError("kernel reported a non-finite state")
    return statistics.median(times), out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    t_py, out_py = time_backend(kernels.advance_py, args.steps, args.repeat)
    print(f"python   : {1e3 * t_py:9.3f} ms / {args.steps} steps")
    if kernels.BACKEND != "compiled":
        print("compiled : not built (pure-Python fallback active)")
        return 0
    t_c, out_c = time_backend(kernels.advance, args.steps, args.repeat)
    diff = float(np.max(np.abs(out_c - out_py)))
    print(f"compiled : {1e3 * t_c:9.3f} ms / {args.steps} steps")
    print(f"speedup  : {t_py / t_c:9.1f}x")
    print(f"max |compiled - python| over the record: {diff:.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
