"""CNN layer descriptions, shape propagation, FLOP and memory accounting."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

CONV = "conv"
POOL = "pool"

DEFAULT_BYTES_PER_ELEMENT = 4


class ShapeCollapse(ValueError):
    """A feature map shrank to zero along some axis."""


class UnknownPreset(KeyError):
    pass


@dataclass(frozen=True)
class LayerConfig:
    kind: str
    c_in: int
    c_out: int
    k_h: int
    k_w: int
    s: int = 1
    p: int = 0

    def __post_init__(self):
        if self.kind not in (CONV, POOL):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        for name in ("c_in", "c_out", "k_h", "k_w", "s"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.p < 0:
            raise ValueError("p must be >= 0")
        if self.kind == POOL and self.c_in != self.c_out:
            raise ValueError("pool layers must keep the channel count")

    @classmethod
    def conv(cls, c_in, c_out, k=3, s=1, p=1):
        return cls(CONV, c_in, c_out, k, k, s, p)

    @classmethod
    def pool(cls, c, k=2, s=2, p=0):
        return cls(POOL, c, c, k, k, s, p)


@dataclass(frozen=True)
class NetworkConfig:
    name: str
    layers: tuple[LayerConfig, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("network must have at least one layer")
        for i, (a, b) in enumerate(zip(self.layers, self.layers[1:])):
            if a.c_out != b.c_in:
                raise ValueError(
                    f"layers[{i}].c_out={a.c_out} does not match "
                    f"layers[{i + 1}].c_in={b.c_in}"
                )

    def __len__(self):
        return len(self.layers)


@dataclass(frozen=True)
class LayerShape:
    h_in: int
    w_in: int
    h_out: int
    w_out: int


def _out_extent(n, k, s, p):
    if n + 2 * p < k:
        return 0
    return (n - k + 2 * p) // s + 1


def conv_output_dims(h_in: int, w_in: int, layer: LayerConfig) -> tuple[int, int]:
    """Output feature-map size of `layer` applied to an ``h_in x w_in`` input.

    Uses floor division; returns 0 along an axis whose padded input is
    smaller than the kernel.
    """
    if h_in < 0 or w_in < 0:
        raise ValueError("input dims must be non-negative")
    return (_out_extent(h_in, layer.k_h, layer.s, layer.p),
            _out_extent(w_in, layer.k_w, layer.s, layer.p))


def layer_flops(layer: LayerConfig, h_out: int, w_out: int) -> int:
    window = layer.k_h * layer.k_w * h_out * w_out
    if layer.kind == POOL:
        return layer.c_in * window
    return layer.c_in * layer.c_out * window


def propagate_shapes(net: NetworkConfig, h: int, w: int) -> list[LayerShape]:
    if h < 1 or w < 1:
        raise ValueError("image dims must be >= 1")
    return list(_propagate(net, h, w))


@lru_cache(maxsize=256)
def _propagate(net, h, w):
    shapes = []
    for i, layer in enumerate(net.layers):
        h_out, w_out = conv_output_dims(h, w, layer)
        if h_out == 0 or w_out == 0:
            raise ShapeCollapse(
                f"{net.name}: layer {i + 1} collapses a {h}x{w} input"
            )
        shapes.append(LayerShape(h, w, h_out, w_out))
        h, w = h_out, w_out
    return tuple(shapes)


def weight_memory(layer: LayerConfig,
                  bytes_per_element: int = DEFAULT_BYTES_PER_ELEMENT) -> int:
    if layer.kind == POOL:
        return 0
    return layer.c_in * layer.c_out * layer.k_h * layer.k_w * bytes_per_element


def activation_memory(layer: LayerConfig, h_out: int, w_out: int,
                      bytes_per_element: int = DEFAULT_BYTES_PER_ELEMENT) -> int:
    return layer.c_out * h_out * w_out * bytes_per_element


# Standard VGG feature extractors; "M" marks a 2x2 stride-2 max pool.
_VGG_CFG = {
    "vgg11": [64, "M", 128, "M", 256, 256, "M", 512, 512, "M", 512, 512, "M"],
    "vgg13": [64, 64, "M", 128, 128, "M", 256, 256, "M", 512, 512, "M",
              512, 512, "M"],
    "vgg16": [64, 64, "M", 128, 128, "M", 256, 256, 256, "M", 512, 512, 512,
              "M", 512, 512, 512, "M"],
    "vgg19": [64, 64, "M", 128, 128, "M", 256, 256, 256, 256, "M", 512, 512,
              512, 512, "M", 512, 512, 512, 512, "M"],
}

PRESETS = tuple(_VGG_CFG)


def vgg_preset(name: str) -> NetworkConfig:
    try:
        cfg = _VGG_CFG[name]
    except KeyError:
        raise UnknownPreset(name) from None
    layers = []
    c = 3
    for item in cfg:
        if item == "M":
            layers.append(LayerConfig.pool(c))
        else:
            layers.append(LayerConfig.conv(c, item))
            c = item
    return NetworkConfig(name, tuple(layers))


def network_from_dict(data: dict) -> NetworkConfig:
    """Build a network from ``{"preset": name}`` or ``{"name", "layers"}``."""
    if "preset" in data:
        return vgg_preset(data["preset"])
    layers = []
    for entry in data["layers"]:
        k = entry.get("k", 3)
        k_h, k_w = (k, k) if isinstance(k, int) else k
        layers.append(LayerConfig(
            kind=entry.get("kind", CONV),
            c_in=entry["c_in"],
            c_out=entry["c_out"],
            k_h=k_h,
            k_w=k_w,
            s=entry.get("s", 1),
            p=entry.get("p", 0),
        ))
    return NetworkConfig(data.get("name", "custom"), tuple(layers))


def network_to_dict(net: NetworkConfig) -> dict:
    return {
        "name": net.name,
        "layers": [
            {"kind": l.kind, "c_in": l.c_in, "c_out": l.c_out,
             "k": [l.k_h, l.k_w], "s": l.s, "p": l.p}
            for l in net.layers
        ],
    }


def load_network(path) -> NetworkConfig:
    return network_from_dict(json.loads(Path(path).read_text()))
