"""Link-simulator tests: determinism, accounting, and channel faithfulness."""

import math

import numpy as np
import pytest

from bitpipes.noise import StateSelection, build_noise_model
from bitpipes.pipes import ChannelParams
from bitpipes.polar import bsc_llr_array, encode, sc_decode
from bitpipes.rates import flipped_crossovers
from bitpipes.simulate import (
    FrameResult,
    SimConfig,
    aggregate,
    build_codes,
    run_frame_id,
    run_frame_sd_bsc,
    run_simulation,
    sweep_rates,
)


def reference_config(**kw):
    defaults = dict(
        channel=ChannelParams(25.0),
        beta=5.0,
        gamma=4.4801,
        scheme="id",
        code_rates={4: 0.359, 5: 0.734, 6: 0.984},
        n=64,
        frames=50,
        master_seed=1,
    )
    defaults.update(kw)
    return SimConfig(**defaults)


class TestConfig:
    def test_rejects_bad_scheme(self):
        with pytest.raises(ValueError):
            reference_config(scheme="cd")

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            reference_config(n=48)

    def test_peak_validation(self):
        cfg = reference_config(code_rates={7: 0.5})
        with pytest.raises(ValueError, match="peak"):
            cfg.validate_peak()

    def test_active_set(self):
        assert reference_config().active == (4, 5, 6)


class TestFrames:
    def test_quasi_noiseless_frames_are_clean(self):
        cfg = reference_config(
            channel=ChannelParams(25.0, sigma=1e-6), frames=5
        )
        noise = build_noise_model(cfg.channel, cfg.frontend)
        codes = build_codes(cfg, noise)
        for f in range(5):
            result = run_frame_id(cfg, codes, noise, [1, f])
            assert sum(result.bit_errors.values()) == 0
            assert not any(result.frame_errors.values())

    def test_deterministic_per_seed(self):
        cfg = reference_config(frames=3)
        noise = build_noise_model(cfg.channel, cfg.frontend)
        codes = build_codes(cfg, noise)
        a = run_frame_id(cfg, codes, noise, [1, 0])
        b = run_frame_id(cfg, codes, noise, [1, 0])
        assert a.bit_errors == b.bit_errors
        assert a.erased_slots == b.erased_slots

    def test_faithful_word_channel(self):
        """Injecting exact noise words reproduces per-pipe BSC statistics.

        Validates the binarization and carry-rebuild path against a direct
        binary-symmetric-channel simulation of the same codes.
        """
        cfg = reference_config(frames=200, genie=True)
        noise = build_noise_model(cfg.channel, cfg.frontend)
        codes = build_codes(cfg, noise)
        rng = np.random.default_rng(77)
        frame_err = {i: 0 for i in cfg.active}
        for f in range(cfg.frames):
            z_words = rng.choice(len(noise.joint_pmf), size=cfg.n, p=noise.joint_pmf)
            result = run_frame_id(cfg, codes, noise, [1, f], inject_z_words=z_words)
            for i in cfg.active:
                frame_err[i] += result.frame_errors[i]
        for i in cfg.active:
            alpha = float(noise.marginals[i])
            direct_err = 0
            for f in range(cfg.frames):
                r = np.random.default_rng([2, f])
                msg = r.integers(0, 2, codes[i].k, dtype=np.uint8)
                cw = encode(codes[i], msg)
                rx = cw ^ (r.random(cfg.n) < alpha)
                llr = bsc_llr_array(rx, np.zeros(cfg.n, bool), alpha)
                direct_err += not np.array_equal(sc_decode(codes[i], llr), msg)
            p = max(direct_err, frame_err[i], 1) / cfg.frames
            sigma3 = 3 * math.sqrt(2 * p * (1 - p) / cfg.frames)
            assert abs(frame_err[i] - direct_err) / cfg.frames <= max(sigma3, 0.05)

    def test_sd_bsc_without_flips_matches_id_with_blend(self):
        """If no state pattern crosses 1/2 the flip stage is inert and the
        two schemes agree frame for frame."""
        cfg = reference_config(
            scheme="sd-bsc", frames=10, q=1,
            code_rates={5: 0.734, 6: 0.984},  # conditionals below 1/2
        )
        noise = build_noise_model(cfg.channel, cfg.frontend)
        sel = StateSelection.adjacent(1, noise.n_bits)
        tables = {
            i: noise.conditional_table(i, sel.sets[i]) for i in cfg.active
        }
        assert all(np.all(t <= 0.5) for t in tables.values())
        codes = build_codes(cfg, noise)
        breve = flipped_crossovers(noise, sel)
        from bitpipes.simulate import _run_frame

        for f in range(10):
            flipped = run_frame_sd_bsc(cfg, codes, noise, [1, f])
            plain = _run_frame(cfg, codes, noise, [1, f], llr_alpha=breve)
            assert flipped.bit_errors == plain.bit_errors
            assert flipped.frame_errors == plain.frame_errors

    def test_erasure_fill_random_mode_runs(self):
        cfg = reference_config(frames=5, erasure_fill="random", beta=3.0)
        report = run_simulation(cfg)
        assert report.frames == 5


class TestAggregate:
    def test_zero_error_frames(self):
        cfg = reference_config(frames=2)
        frames = [FrameResult({4: 0, 5: 0, 6: 0}, {4: False, 5: False, 6: False}, 0)]
        report = aggregate(cfg, frames * 2)
        assert report.overall_ber == 0.0
        assert report.overall_fer == 0.0

    def test_single_flipped_bit_unrolled(self):
        cfg = reference_config(frames=1)
        k5 = round(0.734 * 64)
        frames = [
            FrameResult({4: 0, 5: 1, 6: 0}, {4: False, 5: True, 6: False}, 0)
        ]
        report = aggregate(cfg, frames)
        assert report.ber[5] == pytest.approx(1.0 / k5)
        assert report.fer[5] == 1.0
        assert report.overall_fer == 1.0
        assert report.fer[4] == 0.0

    def test_batch_associativity(self):
        cfg = reference_config(frames=40)
        noise = build_noise_model(cfg.channel, cfg.frontend)
        codes = build_codes(cfg, noise)
        frames = [run_frame_id(cfg, codes, noise, [1, f]) for f in range(40)]
        whole = aggregate(cfg, frames)
        part_counts = []
        for chunk in (frames[:13], frames[13:]):
            sub = aggregate(
                reference_config(frames=len(chunk)), chunk
            )
            part_counts.append(
                (sub.overall_ber * sub.frames, sub.overall_fer * sub.frames)
            )
        merged_fer = sum(c[1] for c in part_counts) / 40
        assert merged_fer == pytest.approx(whole.overall_fer, abs=1e-12)

    def test_overall_fer_at_least_max_pipe(self):
        cfg = reference_config(frames=200)
        report = run_simulation(cfg)
        assert report.overall_fer >= max(report.fer.values()) - 1e-12


class TestRunSimulation:
    def test_thread_count_invariance(self):
        base = reference_config(frames=30)
        threaded = reference_config(frames=30, threads=3)
        a = run_simulation(base)
        b = run_simulation(threaded)
        assert a.ber == b.ber
        assert a.fer == b.fer
        assert a.overall_fer == b.overall_fer
        assert a.erasure_rate == b.erasure_rate

    def test_genie_not_worse(self):
        plain = run_simulation(reference_config(frames=300))
        genie = run_simulation(reference_config(frames=300, genie=True))
        assert genie.overall_fer <= plain.overall_fer + 0.05

    def test_report_serializes(self):
        report = run_simulation(reference_config(frames=3))
        payload = report.to_dict()
        assert payload["scheme"] == "id"
        assert payload["frames"] == 3


class TestSweepRates:
    def test_achieved_below_theoretical(self):
        base = SimConfig(
            channel=ChannelParams(10.0),
            beta=3.5,
            gamma=4.4801,
            scheme="id",
            code_rates={},
            n=64,
            frames=120,
            master_seed=1,
        )
        from bitpipes.noise import build_noise_model as bnm
        from bitpipes.pipes import FrontendParams, snr_db_to_peak
        from bitpipes.simulate import theoretical_code_rates

        records = sweep_rates(base, [10.0, 13.9794], target_fer=0.15)
        for rec in records:
            channel = ChannelParams(snr_db_to_peak(rec["snr_db"]))
            fe = FrontendParams.for_channel(channel, base.beta, base.gamma)
            probe = SimConfig(
                channel=channel, beta=base.beta, gamma=base.gamma, scheme="id",
                code_rates={}, n=64, frames=1, master_seed=1,
            )
            theory = sum(theoretical_code_rates(probe, bnm(channel, fe)).values())
            assert rec["achieved_rate"] <= theory + 1e-9
            assert rec["overall_fer"] <= 0.15
