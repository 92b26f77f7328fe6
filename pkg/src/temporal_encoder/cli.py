"""Command-line front end.

Exit status: 0 success, 1 usage error, 2 data error, 3 validation failure.
Data goes to stdout (or ``--out``); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import io as _stdio
import logging
import sys
from pathlib import Path

from . import codec
from .errors import ConfigError, EncoderError, InvalidConfigError, InvariantViolationError
from .io import (
    load_config,
    parse_idx_images,
    pgm_bytes,
    read_pgm,
    read_spike_table,
    write_spike_table,
)
from .model import validate_params
from .power import image_power_report, power_of_pixel
from .simulator import SimConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVALID = 0, 1, 2, 3
DEFAULT_TOLERANCE_PCT = 2.3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _nw(watts: float) -> str:
    return repr(round(watts * 1e9, 6))


def _load(args):
    text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    return load_config(text)


def _sim(args) -> SimConfig:
    return SimConfig(dt=args.dt, crossing_interpolation=not args.no_interpolation)


def _require_valid(bset, params):
    report = validate_params(bset, params)
    if not report.ok:
        raise InvalidConfigError(report.violations)


def _select_image(args):
    if args.pgm:
        return read_pgm(Path(args.pgm).read_bytes())
    images = parse_idx_images(Path(args.images).read_bytes())
    if not 0 <= args.index < len(images):
        raise UsageError(f"--index {args.index} out of range ({len(images)} images)")
    return images[args.index]


def _emit_text(args, text: str, out):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)


def cmd_encode(args, out, err):
    params, bset, _ = _load(args)
    _require_valid(bset, params)
    img = _select_image(args)
    mode = codec.SIMULATED if args.mode == "sim" else codec.ANALYTIC
    enc = codec.encode_image(img, bset, params, _sim(args), mode)
    buf = _stdio.StringIO()
    write_spike_table(enc, buf)
    _emit_text(args, buf.getvalue(), out)
    err.write(f"encoded {img.rows}x{img.cols} image ({mode}): duration {enc.duration * 1e6:.3f} us "
              f"({enc.duration!r} s), {enc.warning_count} warning(s)\n")
    return EXIT_OK


def cmd_decode(args, out, err):
    params, bset, _ = _load(args)
    enc = read_spike_table(Path(args.spikes).read_text(encoding="utf-8"))
    img = codec.decode_image(enc, bset, params)
    data = pgm_bytes(img)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        out.flush()
        getattr(out, "buffer", out).write(data)
    err.write(f"decoded {img.rows}x{img.cols} image\n")
    return EXIT_OK


def cmd_sweep(args, out, err):
    params, bset, _ = _load(args)
    report = codec.sweep_intervals(range(256), bset, params, _sim(args))
    header = ["pixel"]
    for i in range(report.n_intervals):
        header += [f"d{i + 1}_analytic_ns", f"d{i + 1}_sim_ns"]
    lines = [",".join(header)]
    by_pixel = {}
    for row in report.rows:
        by_pixel.setdefault(row.pixel, []).extend([row.analytic, row.simulated])
    for p, values in by_pixel.items():
        lines.append(",".join([str(p)] + [f"{v * 1e9:.6f}" for v in values]))
    _emit_text(args, "\n".join(lines) + "\n", out)
    err.write(f"swept {len(by_pixel)} pixels x {report.n_intervals} interval(s)\n")
    return EXIT_OK


def cmd_validate(args, out, err):
    params, bset, _ = _load(args)
    report = codec.sweep_intervals(range(256), bset, params, _sim(args))
    worst, mean = codec.deviation_summary(report)
    passed = worst <= args.tolerance
    out.write(f"max_deviation_pct={worst!r}\n")
    out.write(f"mean_deviation_pct={mean!r}\n")
    out.write(f"tolerance_pct={args.tolerance!r}\n")
    out.write(f"result={'PASS' if passed else 'FAIL'}\n")
    err.write(f"{'PASS' if passed else 'FAIL'}: max deviation {worst:.3g}% vs tolerance {args.tolerance}%\n")
    return EXIT_OK if passed else EXIT_INVALID


def cmd_power(args, out, err):
    params, _, model = _load(args)
    if args.pixel is not None:
        out.write(f"pixel={args.pixel}\npower_nw={_nw(power_of_pixel(args.pixel, model))}\n")
        return EXIT_OK
    if not args.images:
        raise UsageError("power: one of --pixel or --images is required")
    img = _select_image(args)
    report = image_power_report(img, model, params.t_samp)
    mean = "" if report.mean is None else _nw(report.mean)
    out.write(f"rows={img.rows}\ncols={img.cols}\nmean_power_nw={mean}\nenergy_joules={report.energy!r}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="temporal-encoder", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, sim=False, out=True):
        p.add_argument("--config", help="key = value configuration file (defaults if omitted)")
        if out:
            p.add_argument("--out", help="write data here instead of stdout")
        if sim:
            p.add_argument("--dt", type=float, help="simulator step in seconds (default t_samp/1e4)")
            p.add_argument("--no-interpolation", action="store_true",
                           help="report the first step past threshold instead of interpolating")

    p = sub.add_parser("encode", help="encode one image into a spike table")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--images", help="MNIST IDX image file (uncompressed)")
    src.add_argument("--pgm", help="binary PGM image")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--mode", choices=("analytic", "sim"), default="analytic")
    common(p, sim=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="reconstruct an image from a spike table")
    p.add_argument("--spikes", required=True)
    common(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sweep", help="interval vs pixel table, analytic and simulated")
    common(p, sim=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="simulated vs analytic deviation with PASS/FAIL")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE_PCT, help="percent (default 2.3)")
    common(p, sim=True, out=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("power", help="per-neuron power for a pixel or an image")
    p.add_argument("--pixel", type=int)
    p.add_argument("--images")
    p.add_argument("--index", type=int, default=0)
    common(p, out=False)
    p.set_defaults(func=cmd_power, pgm=None)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    logging.basicConfig(level=logging.WARNING, stream=err, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out, err)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except (InvalidConfigError, InvariantViolationError) as exc:
        err.write(f"invalid configuration: {exc}\n")
        return EXIT_INVALID
    except (EncoderError, ConfigError, OSError, UnicodeDecodeError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
