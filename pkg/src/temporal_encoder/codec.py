"""Whole-image encoding on a global timeline and the analytic-vs-simulated deviation study."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CorruptWindowError, EmptyReportError, InvalidConfigError
from .model import (
    BranchSet,
    DeviceParams,
    check_pixel,
    closed_form_interval,
    decode_pixel_from_interval,
    integrating_times,
    interspike_interval_analytic,
    validate_params,
)
from .simulator import SimConfig, SpikeEvent, SpikeTrain, simulate_pixels

ANALYTIC = "analytic"
SIMULATED = "simulated"
MODES = (ANALYTIC, SIMULATED)


@dataclass(frozen=True, eq=False)
class ImageU8:
    """Grayscale image, ``pixels`` is a read-only (rows, cols) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D grayscale image, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0 or arr.max() > 255):
                raise ValueError("pixel values must be integers in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_flat(cls, rows: int, cols: int, values):
        values = list(values)
        if len(values) != rows * cols:
            raise ValueError(f"{len(values)} values for a {rows}x{cols} image")
        return cls(np.array(values, dtype=np.int64).reshape(rows, cols))

    @property
    def rows(self) -> int:
        return self.pixels.shape[0]

    @property
    def cols(self) -> int:
        return self.pixels.shape[1]

    def flat(self) -> list[int]:
        return [int(v) for v in self.pixels.ravel()]

    def __eq__(self, other):
        if not isinstance(other, ImageU8):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self):
        return f"ImageU8({self.rows}x{self.cols})"


def all_values_card() -> ImageU8:
    """16x16 card holding every pixel value once, row-major 0..255."""
    return ImageU8(np.arange(256).reshape(16, 16))


@dataclass(frozen=True)
class EncodedImage:
    rows: int
    cols: int
    t_samp: float
    mode: str
    trains: tuple[SpikeTrain, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "trains", tuple(self.trains))
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.trains) != self.rows * self.cols:
            raise ValueError(f"{len(self.trains)} windows for a {self.rows}x{self.cols} image")

    @property
    def duration(self) -> float:
        return self.rows * self.cols * self.t_samp

    @property
    def warning_count(self) -> int:
        return sum(len(t.missing) for t in self.trains)

    def window(self, j: int) -> tuple[float, float]:
        return j * self.t_samp, (j + 1) * self.t_samp


def _require_valid(bset, params):
    report = validate_params(bset, params)
    if not report.ok:
        raise InvalidConfigError(report.violations)


def _analytic_train(p, bset, params, start) -> SpikeTrain:
    xs = integrating_times(p, bset, params)
    return SpikeTrain(sorted(SpikeEvent(start + x, j) for j, x in enumerate(xs)))


def encode_image(img: ImageU8, bset: BranchSet, params: DeviceParams, sim: SimConfig | None = None,
                 mode: str = ANALYTIC) -> EncodedImage:
    """Encode pixels in row-major order, pixel ``j`` in window ``[j*t_samp, (j+1)*t_samp)``."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    _require_valid(bset, params)
    flat = img.flat()
    starts = [j * params.t_samp for j in range(len(flat))]
    if mode == SIMULATED:
        trains = simulate_pixels(flat, bset, params, sim or SimConfig(), starts)
    else:
        trains = [_analytic_train(p, bset, params, s) for p, s in zip(flat, starts)]
    return EncodedImage(img.rows, img.cols, params.t_samp, mode, trains)


def window_intervals(train: SpikeTrain) -> dict[int, float]:
    """Interval ``i`` for every adjacent branch pair ``(i, i+1)`` present in the window."""
    by_branch = {}
    for e in train.events:
        if e.branch_id in by_branch:
            raise ValueError(f"branch {e.branch_id} fired twice in one window")
        by_branch[e.branch_id] = e.t
    return {i: by_branch[i + 1] - by_branch[i] for i in sorted(by_branch) if i + 1 in by_branch}


def decode_window(train: SpikeTrain, bset: BranchSet, params: DeviceParams, j: int = 0) -> int:
    if len(train.events) < 2:
        raise CorruptWindowError(j, f"{len(train.events)} event(s), need at least 2")
    try:
        intervals = window_intervals(train)
    except ValueError as exc:
        raise CorruptWindowError(j, str(exc)) from None
    intervals = {i: d for i, d in intervals.items() if i < bset.n_intervals}
    if not intervals:
        raise CorruptWindowError(j, "no adjacent branch pair spiked")
    decodes = [decode_pixel_from_interval(d, i, bset, params) for i, d in intervals.items()]
    return math.floor(statistics.median(decodes) + 0.5)


def decode_image(enc: EncodedImage, bset: BranchSet, params: DeviceParams) -> ImageU8:
    """Median of the per-interval decodes of each window."""
    values = [decode_window(t, bset, params, j) for j, t in enumerate(enc.trains)]
    return ImageU8.from_flat(enc.rows, enc.cols, values)


@dataclass(frozen=True)
class DeviationRow:
    pixel: int
    interval: int
    analytic: float
    simulated: float

    @property
    def percent(self) -> float:
        return 100 * abs(self.simulated - self.analytic) / self.analytic


@dataclass(frozen=True)
class DeviationReport:
    rows: tuple[DeviationRow, ...] = field(default_factory=tuple)
    n_intervals: int = 0

    def __len__(self):
        return len(self.rows)

    def column(self, interval: int, which: str) -> list[float]:
        return [getattr(r, which) for r in self.rows if r.interval == interval]

    def pixels(self) -> list[int]:
        return sorted({r.pixel for r in self.rows})


def leak_free_interval(p, i, bset: BranchSet, params: DeviceParams) -> float:
    """Reference curve for the sweep: exponential form with the leak omitted."""
    lo, hi = bset[i], bset[i + 1]
    if bset.shares_weight(i):
        return closed_form_interval(p, lo.c_mem, hi.c_mem, lo.k_weight, params)
    return interspike_interval_analytic(p, i, bset, replace(params, i_leak=0.0))


def sweep_intervals(pixels, bset: BranchSet, params: DeviceParams, sim: SimConfig | None = None) -> DeviationReport:
    """Leak-free analytic and simulated interval for every pixel and interval index."""
    pixels = [check_pixel(p) for p in pixels]
    _require_valid(bset, params)
    trains = simulate_pixels(pixels, bset, params, sim or SimConfig(), [0.0] * len(pixels))
    rows = []
    for p, train in zip(pixels, trains):
        measured = window_intervals(train)
        for i in range(bset.n_intervals):
            rows.append(DeviationRow(p, i, leak_free_interval(p, i, bset, params), measured[i]))
    return DeviationReport(tuple(rows), bset.n_intervals)


def deviation_summary(report: DeviationReport) -> tuple[float, float]:
    """Maximum and mean percent deviation over all rows."""
    if not report.rows:
        raise EmptyReportError("deviation report has no rows")
    pct = [r.percent for r in report.rows]
    return max(pct), math.fsum(pct) / len(pct)
