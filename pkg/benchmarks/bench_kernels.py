"""Time the compiled tile-cost kernel against the pure-Python one.

    python benchmarks/bench_kernels.py [--repeat 200] [--iterations 1000]

Reports per-call time for a full cost evaluation of the heterogeneous
fixture plan and wall time for one planner run under each backend.
"""

import argparse
import sys
import timeit
from pathlib import Path

from nptp import kernels
from nptp.cost import evaluate
from nptp.mpa import mpa_optimize
from nptp.partition import strip_partition
from nptp.scenario import load_scenario

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default=str(ROOT / "scenarios" / "heterogeneous_3.json"))
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--iterations", type=int, default=1000)
    args = ap.parse_args(argv)

    compiled = kernels.compiled_tile_layer_costs()
    if compiled is None:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation`")
        return 1
    backends = {"python": kernels.python_tile_layer_costs, "cython": compiled}

    sc = load_scenario(args.scenario)
    scheme = strip_partition(sc.image_h, sc.image_w, sc.devices)
    ref = None
    times = {}
    print(f"{sc.network.name} {sc.image_h}x{sc.image_w}, {len(sc.devices)} devices")
    for name, fn in backends.items():
        bd = evaluate(scheme, sc.network, sc.devices, sc.comm, kernel=fn)
        if ref is None:
            ref = bd.makespan_s
        assert bd.makespan_s == ref, "backends disagree"
        per_call = min(timeit.repeat(
            lambda: evaluate(scheme, sc.network, sc.devices, sc.comm, kernel=fn),
            number=args.repeat, repeat=3)) / args.repeat

        saved = kernels.tile_layer_costs
        kernels.tile_layer_costs = fn
        try:
            plan_s = min(timeit.repeat(
                lambda: mpa_optimize(sc, args.iterations, seed=0), number=1, repeat=3))
        finally:
            kernels.tile_layer_costs = saved
        times[name] = (per_call, plan_s)
        print(f"{name:>7}: evaluate {per_call * 1e6:8.1f} us   "
              f"plan M={args.iterations} {plan_s:6.3f} s")
    py, cy = times["python"], times["cython"]
    print(f"speedup: evaluate x{py[0] / cy[0]:.1f}, plan x{py[1] / cy[1]:.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
