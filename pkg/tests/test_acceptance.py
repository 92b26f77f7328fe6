"""Exit criteria. Each test prints one ``ACCEPTANCE [n] ... PASS|FAIL`` line."""

import contextlib
import io
import random
import struct
import time

import numpy as np
import pytest

from temporal_encoder.cli import main
from temporal_encoder.codec import (
    ANALYTIC,
    SIMULATED,
    ImageU8,
    all_values_card,
    decode_image,
    deviation_summary,
    encode_image,
    sweep_intervals,
)
from temporal_encoder.errors import IdxError
from temporal_encoder.io import parse_idx_images, write_idx_images
from temporal_encoder.model import (
    BranchSet,
    DeviceParams,
    excitatory_current,
    excitatory_current_from_pixel,
    integrating_time,
    interspike_interval_analytic,
    pixel_to_input_voltage,
    validate_params,
)
from temporal_encoder.simulator import SimConfig, simulate_branch


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def run(number, title):
        try:
            yield
        except BaseException:
            with capsys.disabled():
                print(f"\nACCEPTANCE [{number}] {title}: FAIL")
            raise
        with capsys.disabled():
            print(f"\nACCEPTANCE [{number}] {title}: PASS")
    return run


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    return main(list(argv), out, err), out.getvalue(), err.getvalue()


def test_1_power_anchors(criterion):
    with criterion(1, "per-neuron power anchors exact at 0, 127, 255"):
        for pixel, expected in (("0", 701.57), ("127", 543.9), ("255", 392.1)):
            code, out, _ = cli("power", "--pixel", pixel)
            assert code == 0
            values = dict(line.split("=", 1) for line in out.splitlines())
            assert float(values["power_nw"]) == expected


def test_2_round_trip(criterion):
    with criterion(2, "encode/decode round trip of 16x16 card, both modes, < 1 s"):
        params, bset = DeviceParams(), BranchSet()
        card = all_values_card()
        assert sorted(card.flat()) == list(range(256))
        start = time.perf_counter()
        for mode in (ANALYTIC, SIMULATED):
            decoded = decode_image(encode_image(card, bset, params, mode=mode), bset, params)
            assert decoded.pixels.tobytes() == card.pixels.tobytes()
        assert time.perf_counter() - start < 1.0


def test_3_oracle_equivalence(criterion, tmp_path):
    with criterion(3, "simulated vs closed-form intervals within 1e-4 %, validate PASS at 2.3 %, < 5 s"):
        params, bset = DeviceParams(i_leak=0.0), BranchSet()
        start = time.perf_counter()
        report = sweep_intervals(range(256), bset, params)
        assert len(report) == 256 * 2
        for row in report.rows:
            assert 100 * abs(row.simulated - row.analytic) / row.analytic <= 1e-4
        worst, _ = deviation_summary(report)
        assert worst <= 1e-4
        cfg = tmp_path / "no_leak.txt"
        cfg.write_text("i_leak_amps = 0\n")
        code, out, _ = cli("validate", "--config", str(cfg))
        assert code == 0 and "result=PASS" in out
        values = dict(line.split("=", 1) for line in out.splitlines())
        assert float(values["max_deviation_pct"]) < 2.3 / 1000
        assert time.perf_counter() - start < 5.0


def test_4_monotonicity_and_form_identities(criterion):
    with criterion(4, "monotonicity and form identities to 1e-12"):
        params, bset = DeviceParams(i_leak=0.0), BranchSet()
        branch = bset[0]
        currents = [excitatory_current(pixel_to_input_voltage(p), branch, params) for p in range(256)]
        assert all(b < a for a, b in zip(currents, currents[1:]))
        for i in range(bset.n_intervals):
            ds = [interspike_interval_analytic(p, i, bset, params) for p in range(256)]
            assert all(b > a for a, b in zip(ds, ds[1:]))
        for p in range(256):
            pixel_form = excitatory_current_from_pixel(p, branch, params)
            assert abs(pixel_form - currents[p]) <= 1e-12 * currents[p]
            v_in = pixel_to_input_voltage(p)
            xs = [integrating_time(b, excitatory_current(v_in, b, params), params) for b in bset]
            for i in range(bset.n_intervals):
                ref = xs[i + 1] - xs[i]
                assert abs(interspike_interval_analytic(p, i, bset, params) - ref) <= 1e-12 * ref


def test_5_timing_formula(criterion):
    with criterion(5, "28x28 duration = 784 * T_samp, spikes inside windows"):
        params, bset = DeviceParams(), BranchSet()
        assert validate_params(bset, params).ok
        img = ImageU8(np.random.default_rng(11).integers(0, 256, size=(28, 28)))
        for mode in (ANALYTIC, SIMULATED):
            enc = encode_image(img, bset, params, mode=mode)
            assert enc.duration == 784 * (1 / 1.1e6)
            assert enc.duration == pytest.approx(712.727e-6, rel=1e-6)
            for j, train in enumerate(enc.trains):
                lo, hi = enc.window(j)
                assert len(train) == len(bset)
                assert all(lo <= e.t < hi for e in train)


def _mutate(data: bytes, rng: random.Random) -> bytes:
    kind = rng.randrange(3)
    if kind == 0:
        return data[:rng.randrange(len(data))]
    if kind == 1:
        return data + bytes(rng.randrange(256) for _ in range(rng.randint(1, 16)))
    pos = rng.randrange(16)
    new = rng.choice([b for b in range(256) if b != data[pos]])
    return data[:pos] + bytes([new]) + data[pos + 1:]


def test_6_idx_robustness(criterion):
    with criterion(6, "IDX parse bit-exact, 1000 structural mutations rejected with IdxError"):
        rng = np.random.default_rng(2024)
        imgs = [ImageU8(rng.integers(0, 256, size=(5, 4))) for _ in range(3)]
        data = write_idx_images(imgs)
        assert data[:16] == struct.pack(">IIII", 0x803, 3, 5, 4)
        parsed = parse_idx_images(data)
        assert [p.pixels.tobytes() for p in parsed] == [i.pixels.tobytes() for i in imgs]
        mut_rng = random.Random(6)
        rejected = 0
        for _ in range(1000):
            mutated = _mutate(data, mut_rng)
            try:
                parse_idx_images(mutated)
            except IdxError:
                rejected += 1
        assert rejected == 1000


def _random_valid_config(rng: random.Random):
    while True:
        v_dd = rng.uniform(0.8, 1.2)
        params = DeviceParams(
            v_dd=v_dd,
            v_tp_abs=rng.uniform(0.3, 0.48) * v_dd,
            slope_s=rng.uniform(1.0, 1.6),
            u_t=rng.uniform(0.024, 0.028),
            v_tm=rng.uniform(0.2, 0.6) * v_dd,
            i_leak=rng.choice([0.0, rng.uniform(0.0, 5e-9)]),
            t_samp=rng.uniform(0.5e-6, 2e-6),
        )
        caps = sorted(rng.sample(range(20, 400), rng.randint(2, 5)))
        bset = BranchSet.from_capacitances([c * 1e-15 for c in caps], k_weight=rng.uniform(50e-9, 500e-9))
        if validate_params(bset, params).ok:
            return params, bset


def test_7_simulator_exactness(criterion):
    with criterion(7, "simulated crossing matches charge time to 1e-9, 50 random configs"):
        rng = random.Random(7)
        for _ in range(50):
            params, bset = _random_valid_config(rng)
            for p in (0, 255, rng.randrange(256)):
                v_in = pixel_to_input_voltage(p)
                for b in bset:
                    ref = integrating_time(b, excitatory_current(v_in, b, params), params)
                    x = simulate_branch(p, b, params, SimConfig())
                    assert abs(x - ref) <= 1e-9 * ref
