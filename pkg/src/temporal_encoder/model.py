"""Closed-form pixel -> excitatory current -> integrating time -> inter-spike interval chain.

All arithmetic is SI (volts, amperes, farads, seconds). A pixel maps to an
input voltage of ``pixel / 2`` millivolts; inside the exponent of the
pixel-domain current expression the bare pixel value therefore carries an
implicit unit of 1 mV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import (
    DegenerateBranchesError,
    NonSpikingError,
    OutOfRangeError,
    SharedWeightRequired,
)

PIXEL_MIN = 0
PIXEL_MAX = 255
MILLIVOLT = 1e-3
# Largest exponent magnitude accepted by validation; keeps math.exp far from overflow.
MAX_EXPONENT = 200.0


def check_pixel(p) -> int:
    if isinstance(p, bool) or int(p) != p:
        raise TypeError(f"pixel must be an integer, got {p!r}")
    p = int(p)
    if not PIXEL_MIN <= p <= PIXEL_MAX:
        raise OutOfRangeError(f"pixel {p} outside [0, 255]")
    return p


@dataclass(frozen=True)
class DeviceParams:
    """Circuit constants of the encoder.

    ``v_leak`` is documentation only: the leak transistor's I-V law is not
    modelled, the constant ``i_leak`` is used instead.
    """

    v_dd: float = 1.0
    v_tp_abs: float = 0.45
    slope_s: float = 1.3
    u_t: float = 0.02585
    v_tm: float = 0.4
    v_leak: float = 0.25
    i_leak: float = 1e-9
    t_samp: float = 1 / 1.1e6

    def violations(self) -> list[str]:
        out = []
        for name in ("v_dd", "v_tp_abs", "slope_s", "u_t", "v_tm", "v_leak", "i_leak", "t_samp"):
            if not math.isfinite(getattr(self, name)):
                out.append(f"{name} must be finite")
        if out:
            return out
        if self.v_dd <= 0:
            out.append("v_dd must be > 0")
        if self.u_t <= 0:
            out.append("u_t must be > 0")
        if self.slope_s < 1:
            out.append("slope_s must be >= 1")
        if self.v_tm <= 0:
            out.append("v_tm must be > 0")
        if self.v_tm >= self.v_dd:
            out.append("v_tm must be < v_dd")
        if self.i_leak < 0:
            out.append("i_leak must be >= 0")
        if self.t_samp <= 0:
            out.append("t_samp must be > 0")
        if self.v_tp_abs < 0:
            out.append("v_tp_abs must be >= 0")
        if 2 * self.v_tp_abs >= self.v_dd:
            out.append("2*v_tp_abs must be < v_dd (excitatory current collapses)")
        if not out:
            worst = max(abs(self.v_dd / 2 - self.v_tp_abs),
                        abs((self.v_dd - pixel_to_input_voltage(PIXEL_MAX)) / 2 - self.v_tp_abs))
            if worst / (self.slope_s * self.u_t) > MAX_EXPONENT:
                out.append("current exponent too large; check v_dd, v_tp_abs, slope_s, u_t")
        return out


@dataclass(frozen=True)
class Branch:
    c_mem: float
    k_weight: float

    def violations(self) -> list[str]:
        out = []
        if not (math.isfinite(self.c_mem) and self.c_mem > 0):
            out.append(f"c_mem must be > 0, got {self.c_mem!r}")
        if not (math.isfinite(self.k_weight) and self.k_weight > 0):
            out.append(f"k_weight must be > 0, got {self.k_weight!r}")
        return out


@dataclass(frozen=True)
class BranchSet:
    """Ordered neuron branches; branch ``i`` and ``i + 1`` define interval ``i``."""

    branches: tuple[Branch, ...] = field(
        default_factory=lambda: (Branch(50e-15, 200e-9), Branch(100e-15, 200e-9), Branch(150e-15, 200e-9))
    )

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))

    @classmethod
    def from_capacitances(cls, c_mems, k_weight=200e-9):
        if isinstance(k_weight, (int, float)):
            k_weight = [k_weight] * len(c_mems)
        return cls(tuple(Branch(float(c), float(k)) for c, k in zip(c_mems, k_weight, strict=True)))

    def __len__(self):
        return len(self.branches)

    def __getitem__(self, i) -> Branch:
        return self.branches[i]

    def __iter__(self):
        return iter(self.branches)

    @property
    def n_intervals(self) -> int:
        return max(len(self.branches) - 1, 0)

    def shares_weight(self, i: int) -> bool:
        return self.branches[i].k_weight == self.branches[i + 1].k_weight

    def violations(self) -> list[str]:
        out = []
        if len(self.branches) < 2:
            out.append("at least two branches are required")
        for j, b in enumerate(self.branches):
            out.extend(f"branch {j}: {msg}" for msg in b.violations())
        for j in range(len(self.branches) - 1):
            if not self.branches[j + 1].c_mem > self.branches[j].c_mem:
                out.append(f"c_mem must be strictly increasing (branch {j} -> {j + 1})")
        return out


def pixel_to_input_voltage(p) -> float:
    """Input voltage in volts: ``pixel / 2`` millivolts."""
    p = check_pixel(p)
    return p / 2 * MILLIVOLT


def input_voltage_to_pixel(v: float, clamp: bool = True) -> int:
    """Nearest pixel (ties round up) for an input voltage.

    With ``clamp=False`` a voltage outside the 0..255 range raises
    :class:`OutOfRangeError` instead of being clamped.
    """
    x = math.floor(v / MILLIVOLT * 2 + 0.5)
    if x < PIXEL_MIN or x > PIXEL_MAX:
        if not clamp:
            raise OutOfRangeError(f"voltage {v!r} V maps to pixel {x}")
        x = min(max(x, PIXEL_MIN), PIXEL_MAX)
    return int(x)


def intermediate_potential(v_in: float, params: DeviceParams) -> float:
    return (params.v_dd + v_in) / 2


def excitatory_current(v_in: float, branch: Branch, params: DeviceParams) -> float:
    """Mirrored subthreshold current for an input voltage (voltage-domain form)."""
    v_x = intermediate_potential(v_in, params)
    exponent = (v_x - v_in - params.v_tp_abs) / (params.slope_s * params.u_t)
    return branch.k_weight * math.exp(exponent)


def excitatory_current_from_pixel(p, branch: Branch, params: DeviceParams) -> float:
    """Same current written directly in the pixel domain.

    Evaluated independently of :func:`excitatory_current` so the two forms
    can be checked against each other.
    """
    p = check_pixel(p)
    numerator = 2 * params.v_dd - p * MILLIVOLT - 4 * params.v_tp_abs
    return branch.k_weight * math.exp(numerator / (4 * params.slope_s * params.u_t))


def integrating_time(branch: Branch, i_ex: float, params: DeviceParams) -> float:
    """Time for the membrane to charge from 0 to ``v_tm`` under net current ``i_ex - i_leak``."""
    net = i_ex - params.i_leak
    if not net > 0:
        raise NonSpikingError(f"excitatory current {i_ex!r} A does not exceed leak {params.i_leak!r} A")
    return branch.c_mem * params.v_tm / net


def integrating_times(p, bset: BranchSet, params: DeviceParams) -> list[float]:
    v_in = pixel_to_input_voltage(p)
    return [integrating_time(b, excitatory_current(v_in, b, params), params) for b in bset]


def _check_interval_index(i: int, bset: BranchSet) -> None:
    if not 0 <= i < len(bset) - 1:
        raise IndexError(f"interval index {i} out of range for {len(bset)} branches")


def closed_form_interval(p, c_lo: float, c_hi: float, k_weight: float, params: DeviceParams) -> float:
    """Leak-free exponential interval between two branches sharing ``k_weight``."""
    p = check_pixel(p)
    exponent = (p * MILLIVOLT + 4 * params.v_tp_abs - 2 * params.v_dd) / (4 * params.slope_s * params.u_t)
    return (c_hi - c_lo) * params.v_tm * (1 / k_weight) * math.exp(exponent)


def interspike_interval_analytic(p, i: int, bset: BranchSet, params: DeviceParams) -> float:
    """Interval between the spikes of branch ``i`` and ``i + 1`` for pixel ``p``.

    Uses the leak-free exponential form when ``i_leak == 0`` and the two
    branches share a weight; otherwise the exact difference of integrating
    times.
    """
    _check_interval_index(i, bset)
    lo, hi = bset[i], bset[i + 1]
    if not hi.c_mem > lo.c_mem:
        raise DegenerateBranchesError(f"c_mem[{i + 1}]={hi.c_mem!r} is not above c_mem[{i}]={lo.c_mem!r}")
    v_in = pixel_to_input_voltage(p)
    if params.i_leak == 0 and bset.shares_weight(i):
        if excitatory_current(v_in, lo, params) <= 0:
            raise NonSpikingError("excitatory current underflowed to zero")
        return closed_form_interval(p, lo.c_mem, hi.c_mem, lo.k_weight, params)
    x_lo = integrating_time(lo, excitatory_current(v_in, lo, params), params)
    x_hi = integrating_time(hi, excitatory_current(v_in, hi, params), params)
    return x_hi - x_lo


def decode_pixel_raw(d: float, i: int, bset: BranchSet, params: DeviceParams) -> float:
    """Unrounded, unclamped pixel value whose interval ``i`` equals ``d``.

    Exact inverse of :func:`interspike_interval_analytic`: with ``i_leak == 0``
    this is the logarithmic inverse of the exponential form; with a leak the
    net current is recovered first and the leak added back.
    """
    _check_interval_index(i, bset)
    if not d > 0:
        raise OutOfRangeError(f"interval must be positive, got {d!r}")
    lo, hi = bset[i], bset[i + 1]
    if not bset.shares_weight(i):
        raise SharedWeightRequired(f"branches {i} and {i + 1} have different k_weight")
    delta_c = hi.c_mem - lo.c_mem
    if not delta_c > 0:
        raise DegenerateBranchesError(f"c_mem[{i + 1}] is not above c_mem[{i}]")
    i_ex = delta_c * params.v_tm / d + params.i_leak
    volts = 4 * params.slope_s * params.u_t * math.log(lo.k_weight / i_ex) + 2 * params.v_dd - 4 * params.v_tp_abs
    return volts / MILLIVOLT


def decode_pixel_from_interval(d: float, i: int, bset: BranchSet, params: DeviceParams,
                               tolerance: float = 0.5) -> int:
    """Nearest pixel for interval ``d``; raises :class:`OutOfRangeError` when the
    unclamped value is more than ``tolerance`` pixel units outside [0, 255]."""
    x = decode_pixel_raw(d, i, bset, params)
    if not (PIXEL_MIN - tolerance <= x <= PIXEL_MAX + tolerance):
        raise OutOfRangeError(f"interval {d!r} s decodes to pixel {x:.3f}")
    return min(max(math.floor(x + 0.5), PIXEL_MIN), PIXEL_MAX)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()
    slowest_time: float | None = None
    dimmest_current: float | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_params(bset: BranchSet, params: DeviceParams) -> ValidationReport:
    """Check type invariants plus the two operating-window conditions.

    The slowest branch at pixel 255 (dimmest current) must spike strictly
    inside one enable period, and every branch's pixel-255 current must
    exceed the leak.
    """
    out = params.violations() + bset.violations()
    if out:
        return ValidationReport(tuple(out))
    v_dim = pixel_to_input_voltage(PIXEL_MAX)
    currents = [excitatory_current(v_dim, b, params) for b in bset]
    dimmest = min(currents)
    slowest = None
    if any(c <= params.i_leak for c in currents):
        out.append(f"i_leak {params.i_leak:.4g} A is not below the pixel-255 excitatory current "
                   f"{dimmest:.4g} A (some pixels never spike)")
    else:
        slowest = max(integrating_time(b, c, params) for b, c in zip(bset, currents))
        if not slowest < params.t_samp:
            out.append(f"slowest integrating time {slowest:.4g} s does not fit in t_samp {params.t_samp:.4g} s")
    return ValidationReport(tuple(out), slowest, dimmest)
