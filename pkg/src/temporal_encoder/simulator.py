"""Behavioral time-stepped simulation of the branch neurons.

Each branch integrates ``C dV/dt = I_ex - I_leak`` from a hard reset at the
enable edge, fires once when ``V`` reaches ``v_tm`` and stays silent for the
rest of the window. Forward Euler is exact for constant current up to
rounding; the crossing instant is recovered by linear interpolation inside
the final step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import MalformedTrainError, NonSpikingError
from .model import BranchSet, DeviceParams, Branch, excitatory_current, pixel_to_input_voltage

log = logging.getLogger(__name__)

DEFAULT_STEPS_PER_WINDOW = 10_000


@dataclass(frozen=True)
class MembraneState:
    v_mem: float = 0.0
    t: float = 0.0


@dataclass(frozen=True, order=True)
class SpikeEvent:
    t: float
    branch_id: int


@dataclass(frozen=True)
class SpikeTrain:
    """Spike events sorted by ``(t, branch_id)``.

    ``missing`` lists branch ids that did not reach threshold in their window.
    """

    events: tuple[SpikeEvent, ...] = ()
    missing: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "missing", tuple(self.missing))

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @property
    def times(self) -> list[float]:
        return [e.t for e in self.events]

    def is_sorted(self) -> bool:
        return all(a < b for a, b in zip(self.events, self.events[1:]))


@dataclass(frozen=True)
class SimConfig:
    dt: float | None = None
    crossing_interpolation: bool = True

    def resolve_dt(self, params: DeviceParams) -> float:
        dt = params.t_samp / DEFAULT_STEPS_PER_WINDOW if self.dt is None else self.dt
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt!r}")
        if dt > params.t_samp / 100:
            raise ValueError(f"dt {dt!r} exceeds t_samp/100")
        return dt


def step_membrane(state: MembraneState, i_ex: float, i_leak: float, c_mem: float, dt: float) -> MembraneState:
    """One forward-Euler step; the result may overshoot the threshold."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    return MembraneState(state.v_mem + (i_ex - i_leak) * dt / c_mem, state.t + dt)


def first_crossings(i_net, c_mem, v_tm: float, t_samp: float, dt: float, interpolate: bool = True) -> np.ndarray:
    """Time-step many independent membranes and return their first threshold crossings.

    ``i_net`` and ``c_mem`` broadcast together. Entries that do not cross
    before ``t_samp`` are NaN. Every element follows the same arithmetic as
    :func:`step_membrane`, so results do not depend on batch composition.
    """
    i_net, c_mem = np.broadcast_arrays(np.asarray(i_net, dtype=float), np.asarray(c_mem, dtype=float))
    v = np.zeros(i_net.shape)
    out = np.full(i_net.shape, np.nan)
    increment = i_net * dt / c_mem
    active = increment > 0
    n_steps = math.ceil(t_samp / dt)
    k = 0
    while k < n_steps and active.any():
        k += 1
        v_prev = v
        v = v + increment
        crossed = active & (v >= v_tm)
        if crossed.any():
            if interpolate:
                frac = (v_tm - v_prev[crossed]) / (v[crossed] - v_prev[crossed])
                out[crossed] = (k - 1) * dt + frac * dt
            else:
                out[crossed] = k * dt
            active &= ~crossed
    late = out >= t_samp
    out[late] = np.nan
    return out


def _net_currents(pixels, bset: BranchSet, params: DeviceParams) -> np.ndarray:
    table = np.empty((len(pixels), len(bset)))
    for r, p in enumerate(pixels):
        v_in = pixel_to_input_voltage(p)
        for j, b in enumerate(bset):
            table[r, j] = excitatory_current(v_in, b, params) - params.i_leak
    return table


def simulate_branch(p, branch: Branch, params: DeviceParams, sim: SimConfig = SimConfig()) -> float:
    """First-crossing time of one branch, measured from the window start."""
    i_net = excitatory_current(pixel_to_input_voltage(p), branch, params) - params.i_leak
    x = first_crossings([i_net], [branch.c_mem], params.v_tm, params.t_samp,
                        sim.resolve_dt(params), sim.crossing_interpolation)[0]
    if math.isnan(x):
        raise NonSpikingError(f"branch (c_mem={branch.c_mem!r}) does not spike within t_samp for pixel {p}")
    return float(x)


def simulate_pixels(pixels, bset: BranchSet, params: DeviceParams, sim: SimConfig = SimConfig(),
                    window_starts=None) -> list[SpikeTrain]:
    """Simulate a batch of pixel windows at once.

    ``window_starts`` defaults to ``j * t_samp`` for the j-th pixel.
    """
    pixels = list(pixels)
    if window_starts is None:
        window_starts = [j * params.t_samp for j in range(len(pixels))]
    if not pixels:
        return []
    i_net = _net_currents(pixels, bset, params)
    c_mem = np.array([b.c_mem for b in bset])
    x = first_crossings(i_net, c_mem[None, :], params.v_tm, params.t_samp,
                        sim.resolve_dt(params), sim.crossing_interpolation)
    trains = []
    for r, start in enumerate(window_starts):
        events, missing = [], []
        for j in range(len(bset)):
            if math.isnan(x[r, j]):
                missing.append(j)
            else:
                events.append(SpikeEvent(start + float(x[r, j]), j))
        if missing:
            log.warning("pixel %s: branches %s did not spike", pixels[r], missing)
        trains.append(SpikeTrain(sorted(events), missing))
    return trains


def simulate_pixel(p, bset: BranchSet, params: DeviceParams, sim: SimConfig = SimConfig(),
                   window_start: float = 0.0) -> SpikeTrain:
    """All branches reset at ``window_start`` and fire at most once in the window."""
    return simulate_pixels([p], bset, params, sim, [window_start])[0]


def measure_intervals(train: SpikeTrain) -> list[float]:
    """Differences between consecutive spike times of one window."""
    if not train.is_sorted():
        raise MalformedTrainError("spike train is not sorted by (t, branch_id)")
    times = train.times
    return [b - a for a, b in zip(times, times[1:])]
