"""Scenario files: image size, network, devices, communication model, tunables."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .cost import EXACT, PAPER, CommModel, DeviceProfile
from .model import (PRESETS, NetworkConfig, ShapeCollapse, network_from_dict,
                    propagate_shapes)


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class MpaConfig:
    sigma_init: float = 0.05
    growth_factor: float = 1.5
    sigma_max: float = 0.3
    sigma_min: float = 0.0
    p_flip: float = 0.1
    fraction_min: float = 0.05
    fraction_max: float = 0.95

    def validate(self):
        if not 0 <= self.sigma_min <= self.sigma_init <= self.sigma_max:
            raise ValidationError(
                "mpa: need 0 <= sigma_min <= sigma_init <= sigma_max")
        if self.growth_factor < 1:
            raise ValidationError("mpa.growth_factor must be >= 1")
        if not 0 <= self.p_flip <= 1:
            raise ValidationError("mpa.p_flip must be in [0, 1]")
        if not 0 < self.fraction_min <= self.fraction_max <= 1:
            raise ValidationError(
                "mpa: need 0 < fraction_min <= fraction_max <= 1")


@dataclass(frozen=True)
class Scenario:
    image_h: int
    image_w: int
    network: NetworkConfig
    devices: tuple[DeviceProfile, ...]
    comm: CommModel = CommModel()
    mpa: MpaConfig = field(default_factory=MpaConfig)
    seed: int = 0

    def with_bandwidth(self, b: float) -> "Scenario":
        return replace(self, devices=tuple(replace(d, b=b) for d in self.devices))

    def with_image(self, h: int, w: int) -> "Scenario":
        return replace(self, image_h=h, image_w=w)

    def with_network(self, net: NetworkConfig) -> "Scenario":
        return replace(self, network=net)

    def with_comm_mode(self, mode: str) -> "Scenario":
        return replace(self, comm=replace(self.comm, mode=mode))


_UNITS = {"": 1.0, "b/s": 1.0, "bps": 1.0, "kb/s": 1e3, "mb/s": 1e6,
          "gb/s": 1e9}


def parse_bandwidth(value) -> float:
    """Bytes per second from a number or a string such as ``"0.5 MB/s"``."""
    if isinstance(value, bool):
        raise ValueError(f"bad bandwidth {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*([A-Za-z/]*)\s*", str(value))
    if not m or m.group(2).lower() not in _UNITS:
        raise ValueError(f"bad bandwidth {value!r}")
    return float(m.group(1)) * _UNITS[m.group(2).lower()]


def _num(obj, key, where):
    if key not in obj:
        raise ValidationError(f"{where}.{key} is required")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{where}.{key} must be a number")
    return v


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ValidationError("scenario must be a JSON object")

    image = data.get("image")
    if not isinstance(image, dict):
        raise ValidationError("image must be an object with h and w")
    h, w = _num(image, "h", "image"), _num(image, "w", "image")
    if int(h) != h or int(w) != w or h < 1 or w < 1:
        raise ValidationError("image.h and image.w must be integers >= 1")
    h, w = int(h), int(w)

    net_data = data.get("network")
    if not isinstance(net_data, dict):
        raise ValidationError("network must be an object")
    if "preset" in net_data and net_data["preset"] not in PRESETS:
        raise ValidationError(
            f"network.preset {net_data['preset']!r} is not one of "
            + ", ".join(PRESETS))
    try:
        net = network_from_dict(net_data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"network: {exc}") from None
    try:
        propagate_shapes(net, h, w)
    except ShapeCollapse as exc:
        raise ValidationError(f"image too small for network: {exc}") from None

    devs = data.get("devices")
    if not isinstance(devs, list) or not devs:
        raise ValidationError("devices must be a non-empty list")
    devices = []
    for i, d in enumerate(devs):
        where = f"devices[{i}]"
        if not isinstance(d, dict):
            raise ValidationError(f"{where} must be an object")
        f = _num(d, "f", where)
        r = _num(d, "r", where)
        if "b" not in d:
            raise ValidationError(f"{where}.b is required")
        try:
            b = parse_bandwidth(d["b"])
        except ValueError:
            raise ValidationError(f"{where}.b is not a bandwidth") from None
        for name, v in (("f", f), ("r", r), ("b", b)):
            if not v > 0:
                raise ValidationError(f"{where}.{name} must be > 0")
        devices.append(DeviceProfile(str(d.get("id", f"d{i}")), f, r, b))
    ids = [d.id for d in devices]
    if len(set(ids)) != len(ids):
        raise ValidationError("device ids must be unique")

    comm_data = data.get("comm", {})
    mode = comm_data.get("mode", EXACT)
    if mode not in (PAPER, EXACT):
        raise ValidationError("comm.mode must be 'paper' or 'exact'")
    bpe = comm_data.get("bytes_per_element", 4)
    if not isinstance(bpe, int) or isinstance(bpe, bool) or bpe < 1:
        raise ValidationError("comm.bytes_per_element must be an integer >= 1")

    known = {f.name for f in fields(MpaConfig)}
    mpa_data = data.get("mpa", {})
    unknown = set(mpa_data) - known
    if unknown:
        raise ValidationError(f"mpa: unknown keys {sorted(unknown)}")
    mpa = MpaConfig(**{k: float(v) for k, v in mpa_data.items()})
    mpa.validate()

    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValidationError("seed must be an integer")

    return Scenario(h, w, net, tuple(devices), CommModel(mode, bpe), mpa, seed)


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(data)
