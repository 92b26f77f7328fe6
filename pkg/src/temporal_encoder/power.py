"""Per-neuron power versus pixel, piecewise-linear through measured anchors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import BadModelError
from .model import PIXEL_MAX, PIXEL_MIN, check_pixel

# (pixel, watts) measured for a single neuron.
TABLE_ANCHORS = ((0, 701.57e-9), (127, 543.9e-9), (255, 392.1e-9))


@dataclass(frozen=True)
class PowerModel:
    anchors: tuple[tuple[int, float], ...] = field(default=TABLE_ANCHORS)

    def __post_init__(self):
        object.__setattr__(self, "anchors", tuple((int(p), float(w)) for p, w in self.anchors))

    def check(self) -> None:
        a = self.anchors
        if len(a) < 2:
            raise BadModelError("need at least two anchors")
        pixels = [p for p, _ in a]
        if pixels[0] != PIXEL_MIN or pixels[-1] != PIXEL_MAX:
            raise BadModelError("anchors must span pixels 0 and 255")
        if any(q <= p for p, q in zip(pixels, pixels[1:])):
            raise BadModelError("anchor pixels must be strictly increasing")
        watts = [w for _, w in a]
        if not all(math.isfinite(w) and w >= 0 for w in watts):
            raise BadModelError("anchor powers must be finite and non-negative")
        if any(v >= u for u, v in zip(watts, watts[1:])):
            raise BadModelError("anchor powers must be strictly decreasing")


def power_of_pixel(p, model: PowerModel = PowerModel()) -> float:
    """Power in watts; exact at anchors, linear in between."""
    p = check_pixel(p)
    model.check()
    anchors = model.anchors
    for (p0, w0), (p1, w1) in zip(anchors, anchors[1:]):
        if p == p0:
            return w0
        if p == p1:
            return w1
        if p0 < p < p1:
            return w0 + (p - p0) / (p1 - p0) * (w1 - w0)
    raise BadModelError(f"pixel {p} not covered by anchors")  # unreachable after check()


@dataclass(frozen=True)
class PowerReport:
    per_pixel: tuple[float, ...]
    mean: float | None
    energy: float


def image_power_report(img, model: PowerModel = PowerModel(), t_samp: float = 1 / 1.1e6) -> PowerReport:
    """Per-pixel power, mean power and energy ``mean * M * N * t_samp`` of one neuron."""
    model.check()
    lookup = {}
    per_pixel = []
    for p in img.flat():
        if p not in lookup:
            lookup[p] = power_of_pixel(p, model)
        per_pixel.append(lookup[p])
    if not per_pixel:
        return PowerReport((), None, 0.0)
    mean = math.fsum(per_pixel) / len(per_pixel)
    return PowerReport(tuple(per_pixel), mean, mean * img.rows * img.cols * t_samp)
