"""Latency, communication and memory evaluation of a partition scheme."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import kernels
from .model import (DEFAULT_BYTES_PER_ELEMENT, POOL, LayerConfig, LayerShape,
                    NetworkConfig, ShapeCollapse, propagate_shapes,
                    weight_memory)
from .partition import PartitionScheme, Rect, validate_tiling

PAPER = "paper"
EXACT = "exact"
INFEASIBLE = math.inf


class InvalidScheme(ValueError):
    pass


class UnknownDevice(KeyError):
    pass


class InvalidLayer(IndexError):
    pass


@dataclass(frozen=True)
class DeviceProfile:
    """A worker: throughput ``f`` (ops/s), memory ``r`` (bytes), link ``b`` (bytes/s)."""
    id: str
    f: float
    r: float
    b: float

    def __post_init__(self):
        for name in ("f", "r", "b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"device {self.id!r}: {name} must be > 0")


@dataclass(frozen=True)
class CommModel:
    mode: str = EXACT
    bytes_per_element: int = DEFAULT_BYTES_PER_ELEMENT

    def __post_init__(self):
        if self.mode not in (PAPER, EXACT):
            raise ValueError(f"comm mode must be 'paper' or 'exact', got {self.mode!r}")
        if self.bytes_per_element < 1:
            raise ValueError("bytes_per_element must be >= 1")


@dataclass
class DeviceCost:
    compute_s: float
    comm_s: float
    per_layer_compute: list[int]
    per_layer_comm_volume: list[int]
    peak_memory: int
    feasible: bool

    @property
    def total_s(self):
        return self.compute_s + self.comm_s


@dataclass
class CostBreakdown:
    per_device: dict[str, DeviceCost]
    makespan_s: float = field(default=INFEASIBLE)

    @property
    def feasible(self):
        return all(d.feasible for d in self.per_device.values())

    @property
    def total_comm_volume(self):
        return sum(sum(d.per_layer_comm_volume) for d in self.per_device.values())

    def to_dict(self, net: NetworkConfig | None = None,
                devices=None) -> dict:
        by_id = {d.id: d for d in devices or ()}
        out = {"makespan_s": self.makespan_s if self.feasible else None,
               "feasible": self.feasible,
               "total_comm_bytes": self.total_comm_volume,
               "devices": {}}
        for dev_id, c in self.per_device.items():
            entry = {
                "compute_s": c.compute_s,
                "comm_s": c.comm_s,
                "total_s": c.total_s,
                "peak_memory_bytes": c.peak_memory,
                "feasible": c.feasible,
                "layer_flops": c.per_layer_compute,
                "layer_comm_bytes": c.per_layer_comm_volume,
            }
            if dev_id in by_id:
                dev = by_id[dev_id]
                entry["layer_compute_s"] = [x / dev.f for x in c.per_layer_compute]
            out["devices"][dev_id] = entry
        return out

    def dumps(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), indent=2)


def halo_closed_form(layer: LayerConfig, shape: LayerShape) -> tuple[int, int]:
    """Shared rows and columns from the closed-form stride expression, clamped at 0."""
    s = layer.s
    p_h = s * (shape.h_out - 1) - shape.h_in + s
    p_w = s * (shape.w_out - 1) - shape.w_in + s
    return max(0, p_h), max(0, p_w)


def comm_volume_paper(layer: LayerConfig, shape: LayerShape,
                      bytes_per_element: int = DEFAULT_BYTES_PER_ELEMENT) -> int:
    p_h, p_w = halo_closed_form(layer, shape)
    return (p_h * shape.w_in + p_w * shape.h_in) * layer.c_in * bytes_per_element


def comm_latency(device: DeviceProfile, volumes) -> float:
    return sum(volumes) / device.b


def _kernel_inputs(net: NetworkConfig, image_h: int, image_w: int):
    shapes = propagate_shapes(net, image_h, image_w)
    layers = [(l.kind == POOL, l.c_in, l.c_out, l.k_h, l.k_w, l.s, l.p)
              for l in net.layers]
    in_dims = [(sh.h_in, sh.w_in) for sh in shapes]
    out_dims = [(sh.h_out, sh.w_out) for sh in shapes]
    in_ds = []
    ds = 1
    for l in net.layers:
        in_ds.append(ds)
        ds *= l.s
    return layers, in_dims, out_dims, in_ds


def layer_table(scheme: PartitionScheme, net: NetworkConfig,
                comm: CommModel = CommModel(), kernel=None):
    """Per-device ``(flops, comm_bytes, activation_bytes, collapsed)`` lists.

    Raises ShapeCollapse when the whole image does not survive the network.
    """
    kernel = kernel or kernels.tile_layer_costs
    layers, in_dims, out_dims, in_ds = _kernel_inputs(
        net, scheme.image_h, scheme.image_w)
    tiles = [(r.x, r.y, r.w, r.h) for _, r in scheme.assignments]
    return kernel(layers, in_dims, out_dims, in_ds, tiles,
                  scheme.image_h, scheme.image_w,
                  comm.mode == EXACT, comm.bytes_per_element)


def _device_index(scheme, device_id):
    try:
        return scheme.device_ids.index(device_id)
    except ValueError:
        raise UnknownDevice(device_id) from None


def comm_volume_exact(scheme: PartitionScheme, net: NetworkConfig,
                      layer_index: int, device_id: str,
                      bytes_per_element: int = DEFAULT_BYTES_PER_ELEMENT) -> int:
    """Bytes `device_id` must fetch from other devices before layer `layer_index` (1-based).

    Counts distinct in-bounds input elements inside the receptive field of
    the device's output tile that sit in another device's input tile.
    """
    if not 1 <= layer_index <= len(net.layers):
        raise InvalidLayer(layer_index)
    i = _device_index(scheme, device_id)
    _, comm, _, _ = layer_table(scheme, net, CommModel(EXACT, bytes_per_element))
    return comm[i][layer_index - 1]


def _weights(net, bpe):
    return [weight_memory(l, bpe) for l in net.layers]


def peak_memory(net: NetworkConfig, tile: Rect, scheme: PartitionScheme,
                bytes_per_element: int = DEFAULT_BYTES_PER_ELEMENT) -> int:
    idx = [r for _, r in scheme.assignments].index(tile)
    _, _, act, _ = layer_table(scheme, net, CommModel(EXACT, bytes_per_element))
    return max(w + a for w, a in zip(_weights(net, bytes_per_element), act[idx]))


def compute_latency(device: DeviceProfile, net: NetworkConfig, tile: Rect,
                    scheme: PartitionScheme) -> tuple[float, list[float]]:
    """Seconds of compute for `tile` plus the per-layer split.

    A tile that vanishes at some layer reports ``inf``.
    """
    idx = [r for _, r in scheme.assignments].index(tile)
    flops, _, _, collapsed = layer_table(scheme, net)
    per_layer = [x / device.f for x in flops[idx]]
    if collapsed[idx]:
        return INFEASIBLE, per_layer
    return sum(flops[idx]) / device.f, per_layer


def _device_map(devices):
    return {d.id: d for d in devices}


def evaluate(scheme: PartitionScheme, net: NetworkConfig, devices,
             comm: CommModel = CommModel(), check_tiling: bool = True,
             kernel=None) -> CostBreakdown:
    """Cost breakdown and min-max objective of `scheme`.

    Infeasible schemes (memory overflow or a tile that vanishes at some
    layer) get an infinite makespan rather than an exception.
    """
    if check_tiling:
        report = validate_tiling(scheme)
        if not report.ok:
            raise InvalidScheme(str(report))
    by_id = _device_map(devices)
    for dev_id in scheme.device_ids:
        if dev_id not in by_id:
            raise UnknownDevice(dev_id)

    bpe = comm.bytes_per_element
    try:
        flops, vols, acts, collapsed = layer_table(scheme, net, comm, kernel)
    except ShapeCollapse:
        per_device = {
            dev_id: DeviceCost(INFEASIBLE, 0.0, [], [], 0, False)
            for dev_id in scheme.device_ids
        }
        return CostBreakdown(per_device, INFEASIBLE)

    weights = _weights(net, bpe)
    per_device = {}
    makespan = 0.0
    for i, dev_id in enumerate(scheme.device_ids):
        dev = by_id[dev_id]
        peak = max(w + a for w, a in zip(weights, acts[i]))
        feasible = not collapsed[i] and peak <= dev.r
        compute_s = sum(flops[i]) / dev.f
        comm_s = sum(vols[i]) / dev.b
        per_device[dev_id] = DeviceCost(compute_s, comm_s, flops[i], vols[i],
                                        peak, feasible)
        if not feasible:
            makespan = INFEASIBLE
        elif compute_s + comm_s > makespan:
            makespan = compute_s + comm_s
    return CostBreakdown(per_device, makespan)


def makespan(scheme, net, devices, comm=CommModel(), kernel=None) -> float:
    """Objective value only; skips tiling validation (generator output is sound)."""
    return evaluate(scheme, net, devices, comm, check_tiling=False,
                    kernel=kernel).makespan_s
