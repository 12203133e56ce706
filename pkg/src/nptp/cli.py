"""Command line entry points: plan, evaluate, compare and sweep partition schemes."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from . import kernels
from .cost import (EXACT, PAPER, CostBreakdown, InvalidScheme, UnknownDevice,
                   evaluate)
from .model import PRESETS, ShapeCollapse, propagate_shapes, vgg_preset
from .mpa import (BudgetExceeded, NoFeasibleScheme, brute_force_search,
                  default_grid, mpa_optimize)
from .partition import TooManyDevices, load_scheme, strip_partition
from .scenario import (ParseError, Scenario, ValidationError, load_scenario,
                       parse_bandwidth)
from .sim import BARRIER_NONE, BARRIER_PER_LAYER, aggregation_cost, simulate

log = logging.getLogger("nptp")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3

BANDWIDTH_HEADER = ["model", "bandwidth_Bps", "baseline_makespan_s",
                    "nptp_makespan_s", "speedup"]
SIZE_HEADER = ["model", "image_size", "baseline_makespan_s", "nptp_makespan_s",
               "speedup", "feasible_baseline", "feasible_nptp"]
DEFAULT_BANDWIDTHS = [round(0.1 * i, 1) * 1e6 for i in range(1, 11)]
DEFAULT_SIZES = [224, 512, 1024, 2048, 4096]


def speedup(baseline_s: float, nptp_s: float) -> float:
    if math.isinf(nptp_s):
        return math.nan
    if math.isinf(baseline_s):
        return math.inf
    return baseline_s / nptp_s


def baseline_breakdown(scenario: Scenario):
    scheme = strip_partition(scenario.image_h, scenario.image_w,
                             scenario.devices)
    return scheme, evaluate(scheme, scenario.network, scenario.devices,
                            scenario.comm)


def _nptp(scenario, iterations, seed):
    """MPA result, or None when no feasible scheme turned up."""
    try:
        return mpa_optimize(scenario, iterations, seed)
    except NoFeasibleScheme:
        return None


def cmd_plan(scenario: Scenario, iterations: int = 1000, seed: int | None = None) -> dict:
    res = mpa_optimize(scenario, iterations, seed)
    return {
        "scheme": res.scheme.to_dict(),
        "breakdown": res.breakdown.to_dict(devices=scenario.devices),
        "trace_csv": res.trace_csv(),
    }


def cmd_evaluate(scenario: Scenario, scheme, barrier: str = BARRIER_NONE,
                 aggregator: str | None = None) -> dict:
    bd = evaluate(scheme, scenario.network, scenario.devices, scenario.comm)
    out = {"scheme": scheme.to_dict(),
           "breakdown": bd.to_dict(devices=scenario.devices)}
    if bd.feasible:
        tl = simulate(scheme, scenario.network, scenario.devices,
                      scenario.comm, barrier)
        out["simulated_makespan_s"] = tl.simulated_makespan_s
        out["timeline_csv"] = tl.to_csv()
    if aggregator is not None:
        out["aggregation_s"] = aggregation_cost(
            scheme, scenario.network, scenario.devices, aggregator,
            scenario.comm.bytes_per_element)
    return out


def cmd_baseline(scenario: Scenario) -> dict:
    scheme, bd = baseline_breakdown(scenario)
    return {"scheme": scheme.to_dict(),
            "breakdown": bd.to_dict(devices=scenario.devices)}


def _layer_rows(label, bd: CostBreakdown):
    for dev_id, c in bd.per_device.items():
        for li, v in enumerate(c.per_layer_comm_volume, start=1):
            yield [label, dev_id, li, v]


def cmd_compare(scenario: Scenario, iterations: int = 1000,
                seed: int | None = None) -> dict:
    base_scheme, base = baseline_breakdown(scenario)
    res = mpa_optimize(scenario, iterations, seed)
    rows = list(_layer_rows("baseline", base)) + list(_layer_rows("nptp", res.breakdown))
    return {
        "baseline": {"scheme": base_scheme.to_dict(),
                     "breakdown": base.to_dict(devices=scenario.devices)},
        "nptp": {"scheme": res.scheme.to_dict(),
                 "breakdown": res.breakdown.to_dict(devices=scenario.devices)},
        "baseline_makespan_s": base.makespan_s,
        "nptp_makespan_s": res.makespan_s,
        "baseline_comm_bytes": base.total_comm_volume,
        "nptp_comm_bytes": res.breakdown.total_comm_volume,
        "speedup": speedup(base.makespan_s, res.makespan_s),
        "layer_comm": [["scheme", "device", "layer", "comm_bytes"]] + rows,
    }


def cmd_sweep_bandwidth(scenario: Scenario, bandwidths=None, iterations: int = 1000,
                        seed: int | None = None, models=None) -> list[list]:
    bandwidths = list(bandwidths or DEFAULT_BANDWIDTHS)
    if not bandwidths or any(not b > 0 for b in bandwidths):
        raise ValueError("bandwidths must be a non-empty list of positive values")
    nets = [vgg_preset(m) for m in models] if models else [scenario.network]
    rows = []
    for net in nets:
        for b in bandwidths:
            sc = scenario.with_network(net).with_bandwidth(b)
            _, base = baseline_breakdown(sc)
            res = _nptp(sc, iterations, seed)
            nptp_s = res.makespan_s if res else math.inf
            rows.append([net.name, b, base.makespan_s, nptp_s,
                         speedup(base.makespan_s, nptp_s)])
            log.info("%s b=%g speedup=%.4f", net.name, b, rows[-1][-1])
    return rows


def cmd_sweep_size(scenario: Scenario, sizes=None, iterations: int = 1000,
                   seed: int | None = None, models=None) -> list[list]:
    sizes = list(sizes or DEFAULT_SIZES)
    nets = [vgg_preset(m) for m in models] if models else [scenario.network]
    rows = []
    for net in nets:
        for size in sizes:
            try:
                propagate_shapes(net, size, size)
            except ShapeCollapse as exc:
                raise ValueError(f"image size {size} too small: {exc}") from None
            sc = scenario.with_network(net).with_image(size, size)
            _, base = baseline_breakdown(sc)
            res = _nptp(sc, iterations, seed)
            nptp_s = res.makespan_s if res else math.inf
            rows.append([net.name, size, base.makespan_s, nptp_s,
                         speedup(base.makespan_s, nptp_s),
                         base.feasible, res is not None])
            log.info("%s size=%d speedup=%.4f", net.name, size, rows[-1][4])
    return rows


def cmd_oracle(scenario: Scenario, grid=None, iterations: int = 500,
               seed: int | None = None, try_all_device_orders: bool = False,
               max_candidates: int = 200_000) -> dict:
    oracle = brute_force_search(scenario, grid, try_all_device_orders,
                                max_candidates)
    res = mpa_optimize(scenario, iterations, seed)
    return {
        "oracle_scheme": oracle.scheme.to_dict(),
        "oracle_makespan_s": oracle.makespan_s,
        "candidates": oracle.n_candidates,
        "mpa_scheme": res.scheme.to_dict(),
        "mpa_makespan_s": res.makespan_s,
        "gap": res.makespan_s / oracle.makespan_s - 1.0,
    }


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _dumps(obj) -> str:
    # JSON has no infinity; infeasible values go out as null
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return None
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, list):
            return [clean(v) for v in x]
        return x
    return json.dumps(clean(obj), indent=2)


def _write(out_dir, name, text):
    if out_dir is None:
        return
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _split_list(text, conv):
    return [conv(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario JSON file")
    common.add_argument("--iterations", "-M", type=int, default=1000)
    common.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: the scenario's seed, else 0)")
    common.add_argument("--comm-model", choices=(PAPER, EXACT), default=None,
                        help="override the scenario's communication model")
    common.add_argument("--out", default=None, help="directory for output files")
    common.add_argument("--format", choices=("csv", "json"), default=None)

    p = argparse.ArgumentParser(prog="nptp", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("plan", parents=[common], help="run the partitioner")
    ev = sub.add_parser("evaluate", parents=[common],
                        help="score a scheme file and replay it")
    ev.add_argument("--scheme", required=True)
    ev.add_argument("--barrier", choices=(BARRIER_NONE, BARRIER_PER_LAYER),
                    default=BARRIER_NONE)
    ev.add_argument("--aggregator", default=None)
    sub.add_parser("baseline", parents=[common],
                   help="score the proportional strip partition")
    sub.add_parser("compare", parents=[common],
                   help="strip baseline against the guillotine plan")
    sb = sub.add_parser("sweep-bandwidth", parents=[common])
    sb.add_argument("--bandwidths", default=None,
                    help="comma list, e.g. '0.1MB/s,0.5MB/s' (default 0.1-1.0 MB/s)")
    sb.add_argument("--models", default=None,
                    help="comma list of presets (default: scenario network)")
    ss = sub.add_parser("sweep-size", parents=[common])
    ss.add_argument("--sizes", default=None,
                    help="comma list of square sizes (default 224..4096)")
    ss.add_argument("--models", default=None)
    orc = sub.add_parser("oracle", parents=[common],
                         help="exhaustive search on a fraction grid")
    orc.add_argument("--grid", type=int, default=16,
                     help="grid resolution: fractions i/G for i=1..G")
    orc.add_argument("--all-orders", action="store_true")
    orc.add_argument("--max-candidates", type=int, default=200_000)
    sub.add_parser("presets", help="list the built-in networks")
    return p


def _load(args) -> Scenario:
    sc = load_scenario(args.scenario)
    if args.comm_model:
        sc = sc.with_comm_mode(args.comm_model)
    return sc


def _run(args) -> int:
    if args.command == "presets":
        for name in PRESETS:
            net = vgg_preset(name)
            n_conv = sum(l.kind == "conv" for l in net.layers)
            print(f"{name}\t{n_conv} conv\t{len(net.layers) - n_conv} pool")
        return EXIT_OK

    sc = _load(args)
    seed = args.seed if args.seed is not None else sc.seed
    out = args.out
    fmt = args.format

    if args.command == "plan":
        rep = cmd_plan(sc, args.iterations, seed)
        _write(out, "scheme.json", _dumps(rep["scheme"]))
        _write(out, "breakdown.json", _dumps(rep["breakdown"]))
        _write(out, "trace.csv", rep["trace_csv"])
        if fmt == "csv":
            sys.stdout.write(rep["trace_csv"])
        else:
            print(_dumps({"scheme": rep["scheme"], "breakdown": rep["breakdown"]}))
        return EXIT_OK

    if args.command == "evaluate":
        rep = cmd_evaluate(sc, load_scheme(args.scheme), args.barrier,
                           args.aggregator)
        timeline = rep.pop("timeline_csv", None)
        _write(out, "breakdown.json", _dumps(rep["breakdown"]))
        if timeline:
            _write(out, "timeline.csv", timeline)
        if fmt == "csv" and timeline:
            sys.stdout.write(timeline)
        else:
            print(_dumps(rep))
        return EXIT_OK if rep["breakdown"]["feasible"] else EXIT_INFEASIBLE

    if args.command == "baseline":
        rep = cmd_baseline(sc)
        _write(out, "scheme.json", _dumps(rep["scheme"]))
        _write(out, "breakdown.json", _dumps(rep["breakdown"]))
        print(_dumps(rep))
        return EXIT_OK if rep["breakdown"]["feasible"] else EXIT_INFEASIBLE

    if args.command == "compare":
        rep = cmd_compare(sc, args.iterations, seed)
        layer_csv = rows_to_csv(rep["layer_comm"][0], rep.pop("layer_comm")[1:])
        _write(out, "compare.json", _dumps(rep))
        _write(out, "layer_comm.csv", layer_csv)
        if fmt == "csv":
            sys.stdout.write(layer_csv)
        else:
            print(_dumps(rep))
        return EXIT_OK

    if args.command == "sweep-bandwidth":
        bws = (_split_list(args.bandwidths, parse_bandwidth)
               if args.bandwidths else None)
        models = _split_list(args.models, str) if args.models else None
        rows = cmd_sweep_bandwidth(sc, bws, args.iterations, seed, models)
        text = rows_to_csv(BANDWIDTH_HEADER, rows)
        _write(out, "sweep_bandwidth.csv", text)
        _emit_rows(fmt, BANDWIDTH_HEADER, rows, text)
        return EXIT_OK if any(math.isfinite(r[3]) for r in rows) else EXIT_INFEASIBLE

    if args.command == "sweep-size":
        sizes = _split_list(args.sizes, int) if args.sizes else None
        models = _split_list(args.models, str) if args.models else None
        rows = cmd_sweep_size(sc, sizes, args.iterations, seed, models)
        text = rows_to_csv(SIZE_HEADER, rows)
        _write(out, "sweep_size.csv", text)
        _emit_rows(fmt, SIZE_HEADER, rows, text)
        return EXIT_OK if any(r[6] for r in rows) else EXIT_INFEASIBLE

    if args.command == "oracle":
        rep = cmd_oracle(sc, default_grid(args.grid), args.iterations, seed,
                         args.all_orders, args.max_candidates)
        _write(out, "oracle.json", _dumps(rep))
        print(_dumps(rep))
        return EXIT_OK

    raise AssertionError(args.command)


def _emit_rows(fmt, header, rows, text):
    if fmt == "json":
        print(_dumps([dict(zip(header, r)) for r in rows]))
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    log.debug("kernel backend: %s", kernels.BACKEND)
    try:
        return _run(args)
    except (ParseError, ValidationError, InvalidScheme, UnknownDevice,
            TooManyDevices, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NoFeasibleScheme as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
