"""Layer-by-layer replay of a partition scheme as exchange and compute events."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .cost import CommModel, UnknownDevice, evaluate, layer_table
from .model import DEFAULT_BYTES_PER_ELEMENT, NetworkConfig
from .partition import PartitionScheme

EXCHANGE = "exchange"
COMPUTE = "compute"
BARRIER_NONE = "none"
BARRIER_PER_LAYER = "per_layer"


class InfeasibleScheme(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    device_id: str
    layer_index: int
    phase: str
    start_s: float
    end_s: float


@dataclass
class Timeline:
    events: list[Event]
    simulated_makespan_s: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["device", "layer", "phase", "start_s", "end_s"])
        for e in self.events:
            w.writerow([e.device_id, e.layer_index, e.phase,
                        repr(e.start_s), repr(e.end_s)])
        return buf.getvalue()


def simulate(scheme: PartitionScheme, net: NetworkConfig, devices,
             comm: CommModel = CommModel(),
             barrier: str = BARRIER_NONE) -> Timeline:
    """Replay `scheme` with exchange-then-compute per layer on every device.

    With ``barrier="per_layer"`` no device starts exchanging for layer l
    before every device has finished layer l-1.
    """
    if barrier not in (BARRIER_NONE, BARRIER_PER_LAYER):
        raise ValueError(f"unknown barrier mode {barrier!r}")
    bd = evaluate(scheme, net, devices, comm)
    if not bd.feasible:
        bad = [d for d, c in bd.per_device.items() if not c.feasible]
        raise InfeasibleScheme(f"infeasible devices: {', '.join(bad)}")
    by_id = {d.id: d for d in devices}
    ids = scheme.device_ids
    clock = {d: 0.0 for d in ids}
    events = []
    for li in range(len(net.layers)):
        if barrier == BARRIER_PER_LAYER:
            start = max(clock.values())
            clock = {d: start for d in ids}
        for dev_id in ids:
            dev = by_id[dev_id]
            cost = bd.per_device[dev_id]
            t0 = clock[dev_id]
            t1 = t0 + cost.per_layer_comm_volume[li] / dev.b
            t2 = t1 + cost.per_layer_compute[li] / dev.f
            events.append(Event(dev_id, li + 1, EXCHANGE, t0, t1))
            events.append(Event(dev_id, li + 1, COMPUTE, t1, t2))
            clock[dev_id] = t2
    return Timeline(events, max(e.end_s for e in events))


def aggregation_cost(scheme: PartitionScheme, net: NetworkConfig, devices,
                     aggregator: str,
                     bytes_per_element: int = DEFAULT_BYTES_PER_ELEMENT) -> float:
    """Seconds to ship every non-aggregator's final feature tile to `aggregator`.

    Kept out of the makespan objective.
    """
    if aggregator not in scheme.device_ids:
        raise UnknownDevice(aggregator)
    by_id = {d.id: d for d in devices}
    _, _, acts, _ = layer_table(scheme, net,
                                CommModel(bytes_per_element=bytes_per_element))
    total = 0.0
    for i, dev_id in enumerate(scheme.device_ids):
        if dev_id == aggregator:
            continue
        if dev_id not in by_id:
            raise UnknownDevice(dev_id)
        total += acts[i][-1] / by_id[dev_id].b
    return total
