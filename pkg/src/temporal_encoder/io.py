"""Bit-exact readers and writers: MNIST IDX, spike-table CSV, binary PGM, config text."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

import numpy as np

from .codec import MODES, EncodedImage, ImageU8
from .errors import (
    BadMagicError,
    BadModelError,
    ConfigParseError,
    DimensionOverflowError,
    InvariantViolationError,
    MalformedRowError,
    MissingMetadataError,
    PgmError,
    TrailingDataError,
    TruncatedFileError,
    UnknownKeyError,
)
from .model import Branch, BranchSet, DeviceParams
from .power import PowerModel
from .simulator import SpikeEvent, SpikeTrain

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
# Refuse payloads beyond this size before touching the data.
MAX_IDX_PAYLOAD = 1 << 32


@dataclass(frozen=True)
class IdxHeader:
    magic: int
    dims: tuple[int, ...]

    @property
    def size(self) -> int:
        return 4 + 4 * len(self.dims)

    @property
    def payload_len(self) -> int:
        return math.prod(self.dims)


def read_idx_header(data: bytes, magic: int) -> IdxHeader:
    if len(data) < 4:
        raise TruncatedFileError(f"{len(data)} bytes, header needs 4")
    (found,) = struct.unpack_from(">I", data, 0)
    if found != magic:
        raise BadMagicError(f"magic 0x{found:08x}, expected 0x{magic:08x}")
    ndim = magic & 0xFF
    need = 4 + 4 * ndim
    if len(data) < need:
        raise TruncatedFileError(f"{len(data)} bytes, header needs {need}")
    dims = struct.unpack_from(f">{ndim}I", data, 4)
    header = IdxHeader(found, dims)
    if header.payload_len > MAX_IDX_PAYLOAD:
        raise DimensionOverflowError(f"dims {dims} describe {header.payload_len} bytes")
    got = len(data) - need
    if got < header.payload_len:
        raise TruncatedFileError(f"payload has {got} bytes, dims {dims} need {header.payload_len}")
    if got > header.payload_len:
        raise TrailingDataError(f"{got - header.payload_len} bytes after the declared payload")
    return header


def parse_idx_images(data: bytes) -> list[ImageU8]:
    data = bytes(data)
    header = read_idx_header(data, IDX_IMAGES_MAGIC)
    count, rows, cols = header.dims
    payload = np.frombuffer(data, dtype=np.uint8, offset=header.size)
    return [ImageU8(img) for img in payload.reshape(count, rows, cols)]


def parse_idx_labels(data: bytes) -> list[int]:
    data = bytes(data)
    header = read_idx_header(data, IDX_LABELS_MAGIC)
    return list(data[header.size:])


def write_idx_images(images) -> bytes:
    images = list(images)
    rows, cols = (images[0].rows, images[0].cols) if images else (0, 0)
    out = bytearray(struct.pack(">IIII", IDX_IMAGES_MAGIC, len(images), rows, cols))
    for img in images:
        if (img.rows, img.cols) != (rows, cols):
            raise ValueError("all images must share one size")
        out += img.pixels.tobytes()
    return bytes(out)


def write_idx_labels(labels) -> bytes:
    labels = bytes(labels)
    return struct.pack(">II", IDX_LABELS_MAGIC, len(labels)) + labels


# spike tables

SPIKE_HEADER = "pixel_index,branch_id,spike_time_ns"


def write_spike_table(enc: EncodedImage, sink) -> None:
    """Write a CSV spike table to a text stream.

    Spike times are absolute, in nanoseconds with 6 decimals.
    """
    sink.write(f"# rows={enc.rows}\n")
    sink.write(f"# cols={enc.cols}\n")
    sink.write(f"# t_samp_seconds={enc.t_samp!r}\n")
    sink.write(f"# mode={enc.mode}\n")
    sink.write(SPIKE_HEADER + "\n")
    for j, train in enumerate(enc.trains):
        for e in sorted(train.events):
            sink.write(f"{j},{e.branch_id},{e.t * 1e9:.6f}\n")


def read_spike_table(source) -> EncodedImage:
    """Inverse of :func:`write_spike_table`; ``source`` is a text stream or string."""
    text = source if isinstance(source, str) else source.read()
    meta = {}
    header_seen = False
    events = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if not sep:
                raise MalformedRowError(line_no, f"bad metadata line {raw!r}")
            meta[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line != SPIKE_HEADER:
                raise MalformedRowError(line_no, f"expected header {SPIKE_HEADER!r}, got {raw!r}")
            header_seen = True
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise MalformedRowError(line_no, f"expected 3 fields, got {len(fields)}")
        try:
            j, branch, t_ns = int(fields[0]), int(fields[1]), float(fields[2])
        except ValueError:
            raise MalformedRowError(line_no, f"unparseable row {raw!r}") from None
        if j < 0 or branch < 0 or not math.isfinite(t_ns):
            raise MalformedRowError(line_no, f"invalid values in {raw!r}")
        events.setdefault(j, []).append(SpikeEvent(t_ns * 1e-9, branch))
    for key in ("rows", "cols", "t_samp_seconds", "mode"):
        if key not in meta:
            raise MissingMetadataError(f"missing '# {key}=' preamble line")
    try:
        rows, cols = int(meta["rows"]), int(meta["cols"])
        t_samp = float(meta["t_samp_seconds"])
    except ValueError as exc:
        raise MissingMetadataError(f"bad metadata value: {exc}") from None
    if meta["mode"] not in MODES or rows < 0 or cols < 0:
        raise MissingMetadataError(f"bad metadata {meta}")
    if not header_seen and events:
        raise MalformedRowError(0, "missing column header")
    n = rows * cols
    if any(j >= n for j in events):
        raise MalformedRowError(0, f"pixel_index beyond {rows}x{cols} image")
    trains = [SpikeTrain(sorted(events.get(j, ()))) for j in range(n)]
    return EncodedImage(rows, cols, t_samp, meta["mode"], trains)


# PGM

def pgm_bytes(img: ImageU8) -> bytes:
    return f"P5\n{img.cols} {img.rows}\n255\n".encode("ascii") + img.pixels.tobytes()


def write_pgm(img: ImageU8, sink) -> None:
    """Binary PGM: ASCII ``P5`` header then raw row-major bytes, to a binary stream."""
    sink.write(pgm_bytes(img))


def read_pgm(data: bytes) -> ImageU8:
    """Parse a binary (P5) 8-bit PGM, comments allowed in the header."""
    data = bytes(data)
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PgmError("truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    if tokens[0] != b"P5":
        raise PgmError(f"not a binary PGM (magic {tokens[0]!r})")
    try:
        cols, rows, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise PgmError("non-numeric PGM header field") from None
    if maxval != 255:
        raise PgmError(f"only maxval 255 is supported, got {maxval}")
    payload = data[pos:pos + rows * cols]
    if len(payload) != rows * cols:
        raise PgmError(f"PGM payload has {len(payload)} bytes, expected {rows * cols}")
    return ImageU8(np.frombuffer(payload, dtype=np.uint8).reshape(rows, cols))


# config

_SCALAR_KEYS = {
    "v_dd_volts": "v_dd",
    "v_tp_abs_volts": "v_tp_abs",
    "slope_s": "slope_s",
    "u_t_volts": "u_t",
    "v_tm_volts": "v_tm",
    "v_leak_volts": "v_leak",
    "i_leak_amps": "i_leak",
    "t_samp_seconds": "t_samp",
}


def _number(text: str, key: str, line_no: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigParseError(f"line {line_no}: {key}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ConfigParseError(f"line {line_no}: {key}: must be finite")
    return value


def _parse_anchors(text: str, line_no: int) -> tuple[tuple[int, float], ...]:
    anchors = []
    for item in text.split(","):
        pixel, sep, nw = item.strip().partition(":")
        if not sep:
            raise ConfigParseError(f"line {line_no}: power_anchors item {item!r} is not pixel:nW")
        try:
            # Decimal keeps e.g. 701.57 nW identical to the literal 701.57e-9 W.
            anchors.append((int(pixel), float(Decimal(nw.strip()) * Decimal("1e-9"))))
        except (ValueError, InvalidOperation):
            raise ConfigParseError(f"line {line_no}: bad power anchor {item!r}") from None
    return tuple(anchors)


def load_config(text: str) -> tuple[DeviceParams, BranchSet, PowerModel]:
    """Parse ``key = value`` lines; omitted keys keep their defaults."""
    scalars = {}
    c_mem = k_weight = None
    anchors = PowerModel().anchors
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigParseError(f"line {line_no}: expected 'key = value', got {raw!r}")
        if key in _SCALAR_KEYS:
            scalars[_SCALAR_KEYS[key]] = _number(value, key, line_no)
        elif key == "c_mem_farads":
            c_mem = [_number(v, key, line_no) for v in value.split(",")]
        elif key == "k_weight_amps":
            k_weight = [_number(v, key, line_no) for v in value.split(",")]
        elif key == "power_anchors":
            anchors = _parse_anchors(value, line_no)
        else:
            raise UnknownKeyError(f"line {line_no}: unknown key {key!r}")

    params = DeviceParams(**scalars)
    default = BranchSet()
    if c_mem is None:
        c_mem = [b.c_mem for b in default]
    if k_weight is None:
        k_weight = [default[0].k_weight]
    if len(k_weight) == 1:
        k_weight = k_weight * len(c_mem)
    if len(k_weight) != len(c_mem):
        raise InvariantViolationError(f"{len(k_weight)} k_weight values for {len(c_mem)} branches")
    bset = BranchSet(tuple(Branch(c, k) for c, k in zip(c_mem, k_weight)))
    problems = params.violations() + bset.violations()
    if problems:
        raise InvariantViolationError("; ".join(problems))
    power = PowerModel(anchors)
    try:
        power.check()
    except BadModelError as exc:
        raise InvariantViolationError(f"power_anchors: {exc}") from None
    return params, bset, power
