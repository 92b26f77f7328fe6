import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from temporal_encoder.cli import main
from temporal_encoder.codec import ImageU8, all_values_card
from temporal_encoder.io import pgm_bytes, read_spike_table, write_idx_images


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def mnist_file(tmp_path):
    rng = np.random.default_rng(0)
    imgs = [ImageU8(rng.integers(0, 256, size=(28, 28))) for _ in range(2)]
    path = tmp_path / "images.idx"
    path.write_bytes(write_idx_images(imgs))
    return path, imgs


@pytest.fixture
def card_pgm(tmp_path):
    path = tmp_path / "card.pgm"
    path.write_bytes(pgm_bytes(all_values_card()))
    return path


def write_config(tmp_path, text, name="cfg.txt"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_encode_mnist(mnist_file):
    path, _ = mnist_file
    code, out, err = run("encode", "--images", str(path), "--index", "0")
    assert code == 0
    assert "712.727 us" in err and "0 warning" in err
    enc = read_spike_table(out)
    assert (enc.rows, enc.cols) == (28, 28)
    assert enc.duration == pytest.approx(712.727e-6, rel=1e-6)
    assert "pixel_index" not in err and "712.727" not in out


def test_encode_modes_agree(mnist_file, tmp_path):
    path, _ = mnist_file
    cfg = write_config(tmp_path, "i_leak_amps = 0\n")
    tables = {}
    for mode in ("analytic", "sim"):
        code, out, _ = run("encode", "--images", str(path), "--index", "1", "--mode", mode, "--config", cfg)
        assert code == 0
        tables[mode] = read_spike_table(out)
    for a, s in zip(tables["analytic"].trains, tables["sim"].trains):
        da, ds = np.diff(a.times), np.diff(s.times)
        assert np.all(100 * np.abs(ds - da) / da <= 1e-4)


def test_encode_errors(mnist_file, tmp_path):
    path, _ = mnist_file
    assert run("encode", "--images", str(tmp_path / "missing.idx"))[0] == 2
    bad = tmp_path / "bad.idx"
    bad.write_bytes(path.read_bytes()[:-5])
    assert run("encode", "--images", str(bad))[0] == 2
    cfg = write_config(tmp_path, "t_samp_seconds = 100e-9\n")
    assert run("encode", "--images", str(path), "--config", cfg)[0] == 3
    assert run("encode")[0] == 1
    assert run("encode", "--images", str(path), "--index", "5")[0] == 1


def test_encode_decode_round_trip(card_pgm, tmp_path):
    spikes = tmp_path / "card.csv"
    decoded = tmp_path / "decoded.pgm"
    for mode in ("analytic", "sim"):
        assert run("encode", "--pgm", str(card_pgm), "--mode", mode, "--out", str(spikes))[0] == 0
        code, out, err = run("decode", "--spikes", str(spikes), "--out", str(decoded))
        assert code == 0 and out == ""
        assert decoded.read_bytes() == card_pgm.read_bytes()


def test_decode_truncated_csv(card_pgm, tmp_path):
    spikes = tmp_path / "card.csv"
    run("encode", "--pgm", str(card_pgm), "--out", str(spikes))
    text = spikes.read_text()
    spikes.write_text(text[: len(text) // 2].rsplit("\n", 1)[0] + "\n")
    code, out, err = run("decode", "--spikes", str(spikes), "--out", str(tmp_path / "x.pgm"))
    assert code == 2
    assert "pixel window" in err


def test_decode_with_mismatched_config(tmp_path):
    src = tmp_path / "mid.pgm"
    src.write_bytes(pgm_bytes(ImageU8.from_flat(1, 3, [10, 100, 200])))
    spikes = tmp_path / "mid.csv"
    decoded = tmp_path / "decoded.pgm"
    run("encode", "--pgm", str(src), "--out", str(spikes))
    # threshold 0.5% low: intervals read 0.5% long, ln(1/0.995) * 4 s U_T / 1 mV = +0.67 pixel
    cfg = write_config(tmp_path, "v_tm_volts = 0.398\n")
    assert run("decode", "--spikes", str(spikes), "--config", cfg, "--out", str(decoded))[0] == 0
    assert decoded.read_bytes()[-3:] == bytes([11, 101, 201])
    # the card's extremes land outside the tolerance window instead
    card = tmp_path / "card.pgm"
    card.write_bytes(pgm_bytes(all_values_card()))
    run("encode", "--pgm", str(card), "--out", str(spikes))
    assert run("decode", "--spikes", str(spikes), "--config", cfg, "--out", str(decoded))[0] == 2


def test_sweep(tmp_path):
    code, out, _ = run("sweep")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["pixel", "d1_analytic_ns", "d1_sim_ns", "d2_analytic_ns", "d2_sim_ns"]
    assert [int(r["pixel"]) for r in rows] == list(range(256))
    for col in ("d1_analytic_ns", "d1_sim_ns", "d2_analytic_ns", "d2_sim_ns"):
        values = [float(r[col]) for r in rows]
        assert all(b > a for a, b in zip(values, values[1:]))

    two = write_config(tmp_path, "c_mem_farads = 50e-15, 100e-15\n")
    code, out, _ = run("sweep", "--config", two)
    assert code == 0
    assert out.splitlines()[0] == "pixel,d1_analytic_ns,d1_sim_ns"

    dead = write_config(tmp_path, "i_leak_amps = 1e-6\n", "dead.txt")
    assert run("sweep", "--config", dead)[0] == 3


def test_validate(tmp_path):
    cfg = write_config(tmp_path, "i_leak_amps = 0\n")
    code, out, _ = run("validate", "--config", cfg)
    values = dict(line.split("=", 1) for line in out.splitlines())
    assert code == 0 and values["result"] == "PASS"
    assert float(values["max_deviation_pct"]) <= 1e-4
    code, out, _ = run("validate", "--config", cfg, "--tolerance", "0")
    assert code == 3 and "result=FAIL" in out
    assert run("validate")[0] == 0
    bad = write_config(tmp_path, "c_mem_farads = 150e-15, 100e-15\n", "bad.txt")
    assert run("validate", "--config", bad)[0] == 3


@pytest.mark.parametrize("pixel, expected", [("0", "701.57"), ("255", "392.1"), ("191", "468.0"), ("127", "543.9")])
def test_power_pixel(pixel, expected):
    code, out, _ = run("power", "--pixel", pixel)
    assert code == 0
    assert f"power_nw={expected}\n" in out


def test_power_image(mnist_file):
    path, imgs = mnist_file
    code, out, _ = run("power", "--images", str(path), "--index", "1")
    assert code == 0
    values = dict(line.split("=", 1) for line in out.splitlines())
    assert values["rows"] == "28"
    assert float(values["energy_joules"]) > 0
    assert run("power")[0] == 1
    assert run("power", "--pixel", "300")[0] == 2


def test_deterministic_output(card_pgm):
    first = run("encode", "--pgm", str(card_pgm), "--mode", "sim")
    second = run("encode", "--pgm", str(card_pgm), "--mode", "sim")
    assert first == second


def test_module_entry_point(card_pgm, tmp_path):
    spikes = tmp_path / "s.csv"
    subprocess.run([sys.executable, "-m", "temporal_encoder", "encode", "--pgm", str(card_pgm),
                    "--out", str(spikes)], check=True, capture_output=True)
    proc = subprocess.run([sys.executable, "-m", "temporal_encoder", "decode", "--spikes", str(spikes)],
                          capture_output=True, check=True)
    assert proc.stdout == card_pgm.read_bytes()
    proc = subprocess.run([sys.executable, "-m", "temporal_encoder", "bogus"], capture_output=True)
    assert proc.returncode == 1 and proc.stdout == b""
