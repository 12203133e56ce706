"""Rectangle tilings of the input image.

Guillotine schemes are built by repeatedly slicing a band off the top or the
left of the still-unassigned region, so no cut has to cross the whole image.
The penetrative baseline is a stack of full-width horizontal strips.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

HORIZONTAL = "h"
VERTICAL = "v"


class EmptyRemaining(ValueError):
    pass


class TooManyDevices(ValueError):
    pass


@dataclass(frozen=True)
class Rect:
    x: int
    y: int
    w: int
    h: int

    @property
    def area(self):
        return self.w * self.h

    @property
    def x1(self):
        return self.x + self.w

    @property
    def y1(self):
        return self.y + self.h

    def intersection_area(self, other: "Rect") -> int:
        dx = min(self.x1, other.x1) - max(self.x, other.x)
        dy = min(self.y1, other.y1) - max(self.y, other.y)
        return max(dx, 0) * max(dy, 0)

    def as_list(self):
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True)
class CutStep:
    """Slice a band off the remaining region.

    ``dim="h"`` takes a full-width band off the top, ``dim="v"`` a
    full-height band off the left. ``fraction`` is the share of the
    remaining extent along the cut axis.
    """
    dim: str
    fraction: float

    def __post_init__(self):
        if self.dim not in (HORIZONTAL, VERTICAL):
            raise ValueError(f"cut dim must be 'h' or 'v', got {self.dim!r}")
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError(f"cut fraction must be in (0, 1], got {self.fraction}")

    def offset(self, extent: int) -> int:
        # round half up, then clamp to [1, extent]
        return min(max(math.floor(self.fraction * extent + 0.5), 1), extent)


@dataclass(frozen=True)
class PartitionScheme:
    image_h: int
    image_w: int
    assignments: tuple[tuple[str, Rect], ...]
    cuts: tuple[CutStep, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple(self.assignments))
        object.__setattr__(self, "cuts", tuple(self.cuts))
        ids = [d for d, _ in self.assignments]
        if len(set(ids)) != len(ids):
            raise ValueError("a device may appear at most once in a scheme")

    @property
    def device_ids(self):
        return [d for d, _ in self.assignments]

    def rect_of(self, device_id: str) -> Rect:
        for d, r in self.assignments:
            if d == device_id:
                return r
        raise KeyError(device_id)

    def to_dict(self) -> dict:
        return {
            "image": [self.image_h, self.image_w],
            "tiles": [{"device": d, "rect": r.as_list()}
                      for d, r in self.assignments],
            "cuts": [{"dim": c.dim, "fraction": c.fraction} for c in self.cuts],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PartitionScheme":
        h, w = data["image"]
        tiles = tuple((t["device"], Rect(*t["rect"])) for t in data["tiles"])
        cuts = tuple(CutStep(c["dim"], float(c["fraction"]))
                     for c in data.get("cuts", []))
        return cls(h, w, tiles, cuts)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def load_scheme(path) -> PartitionScheme:
    return PartitionScheme.from_dict(json.loads(Path(path).read_text()))


@dataclass
class TilingReport:
    overlaps: list = field(default_factory=list)
    out_of_bounds: list = field(default_factory=list)
    uncovered_area: int = 0

    @property
    def ok(self):
        return not (self.overlaps or self.out_of_bounds or self.uncovered_area)

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "ok"
        parts = []
        if self.overlaps:
            parts.append("overlapping pairs: " + ", ".join(
                f"{a}/{b}" for a, b in self.overlaps))
        if self.out_of_bounds:
            parts.append("outside image: " + ", ".join(self.out_of_bounds))
        if self.uncovered_area:
            parts.append(f"uncovered area: {self.uncovered_area}")
        return "; ".join(parts)


def validate_tiling(scheme: PartitionScheme) -> TilingReport:
    report = TilingReport()
    rects = scheme.assignments
    for d, r in rects:
        if (r.w < 0 or r.h < 0 or r.x < 0 or r.y < 0
                or r.x1 > scheme.image_w or r.y1 > scheme.image_h):
            report.out_of_bounds.append(d)
    for i, (da, ra) in enumerate(rects):
        for db, rb in rects[i + 1:]:
            if ra.intersection_area(rb):
                report.overlaps.append((da, db))
    if not report.overlaps and not report.out_of_bounds:
        covered = sum(r.area for _, r in rects)
        report.uncovered_area = scheme.image_h * scheme.image_w - covered
    return report


def guillotine_apply(remaining: Rect, cut: CutStep) -> tuple[Rect, Rect]:
    if remaining.w < 1 or remaining.h < 1:
        raise EmptyRemaining(f"cannot cut an empty region {remaining}")
    x, y, w, h = remaining.x, remaining.y, remaining.w, remaining.h
    if cut.dim == HORIZONTAL:
        off = cut.offset(h)
        return Rect(x, y, w, off), Rect(x, y + off, w, h - off)
    off = cut.offset(w)
    return Rect(x, y, off, h), Rect(x + off, y, w - off, h)


def guillotine_scheme(image_h: int, image_w: int, device_ids, cuts) -> PartitionScheme:
    """Assign tiles in device order; the last device takes whatever is left."""
    device_ids = list(device_ids)
    cuts = list(cuts)
    if len(cuts) != len(device_ids) - 1:
        raise ValueError("need exactly one cut per device except the last")
    remaining = Rect(0, 0, image_w, image_h)
    assignments = []
    for dev, cut in zip(device_ids, cuts):
        tile, remaining = guillotine_apply(remaining, cut)
        assignments.append((dev, tile))
    assignments.append((device_ids[-1], remaining))
    return PartitionScheme(image_h, image_w, tuple(assignments), tuple(cuts))


def largest_remainder(total: int, weights) -> list[int]:
    """Split `total` into integers proportional to `weights`, each >= 1."""
    weights = list(weights)
    wsum = float(sum(weights))
    quotas = [total * wt / wsum for wt in weights]
    parts = [math.floor(q) for q in quotas]
    left = total - sum(parts)
    # stable sort keeps ascending index among equal remainders
    order = sorted(range(len(parts)), key=lambda i: -(quotas[i] - parts[i]))
    for i in order[:left]:
        parts[i] += 1
    for i, v in enumerate(parts):
        if v == 0:
            j = max(range(len(parts)), key=lambda t: (parts[t], -t))
            parts[j] -= 1
            parts[i] = 1
    return parts


def strip_partition(image_h: int, image_w: int, devices) -> PartitionScheme:
    """Full-width horizontal strips, heights proportional to device throughput."""
    devices = list(devices)
    if not devices:
        raise ValueError("need at least one device")
    if image_h < len(devices):
        raise TooManyDevices(
            f"{len(devices)} strips do not fit in {image_h} rows")
    heights = largest_remainder(image_h, [d.f for d in devices])
    y = 0
    assignments = []
    for dev, hgt in zip(devices, heights):
        assignments.append((dev.id, Rect(0, y, image_w, hgt)))
        y += hgt
    return PartitionScheme(image_h, image_w, tuple(assignments))


def map_coord(c: int, extent: int, downsample: int, dim: int) -> int:
    """Map an input-image coordinate onto a feature map of size `dim`.

    The far image edge always lands on the far feature-map edge so mapped
    tiles keep covering the whole map.
    """
    if c >= extent:
        return dim
    return min(c // downsample, dim)


def tile_at_layer(tile: Rect, downsample: int, image_h: int, image_w: int,
                  map_h: int | None = None, map_w: int | None = None) -> Rect:
    if downsample < 1:
        raise ValueError("downsample must be >= 1")
    if map_h is None:
        map_h = image_h // downsample
    if map_w is None:
        map_w = image_w // downsample
    x0 = map_coord(tile.x, image_w, downsample, map_w)
    x1 = map_coord(tile.x1, image_w, downsample, map_w)
    y0 = map_coord(tile.y, image_h, downsample, map_h)
    y1 = map_coord(tile.y1, image_h, downsample, map_h)
    return Rect(x0, y0, x1 - x0, y1 - y0)
