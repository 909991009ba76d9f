"""Polar codec tests.

The decoder's ground truth is brute-force successive marginalization: for
each position, sum channel likelihoods over all completions of the
remaining unfrozen bits.  The min-sum and compiled paths must agree with
the pure-Python decoder decision for decision.
"""

import itertools
import math

import numpy as np
import pytest

import bitpipes._scfallback as fallback
from bitpipes.pipes import ERASURE
from bitpipes.polar import (
    LLR_CAP,
    PolarCodeSpec,
    bsc_llr,
    bsc_llr_array,
    construct,
    construct_montecarlo,
    encode,
    polar_transform,
    sc_decode,
    sc_decode_frames,
)


def brute_successive_decode(n, frozen_mask, llrs):
    """Exact SC decisions by enumerating completions (tie decodes to 0)."""
    decisions = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        if frozen_mask[i]:
            continue
        free = [j for j in range(i + 1, n) if not frozen_mask[j]]
        scores = []
        for bit in (0, 1):
            total = 0.0
            for future in itertools.product((0, 1), repeat=len(free)):
                u = np.zeros(n, dtype=np.uint8)
                u[: i + 1] = np.append(decisions[:i], bit)
                u[free] = future
                x = polar_transform(u)
                total += math.exp(-float(x @ llrs))
            scores.append(total)
        decisions[i] = 0 if scores[0] >= scores[1] else 1
    return decisions


def bsc_frame_fer(spec, alpha, frames, seed=0, exact=False):
    errs = 0
    for f in range(frames):
        rng = np.random.default_rng([seed, f])
        msg = rng.integers(0, 2, spec.k, dtype=np.uint8)
        cw = encode(spec, msg)
        rx = cw ^ (rng.random(spec.n) < alpha)
        llr = bsc_llr_array(rx, np.zeros(spec.n, bool), alpha)
        errs += not np.array_equal(sc_decode(spec, llr, exact=exact), msg)
    return errs / frames


class TestConstruct:
    def test_two_bit_code_freezes_first(self):
        assert construct(2, 1, 0.1).frozen_set.tolist() == [0]

    def test_deterministic(self):
        a = construct(256, 100, 0.11)
        b = construct(256, 100, 0.11)
        assert np.array_equal(a.frozen_mask, b.frozen_mask)

    def test_rejects_zero_crossover(self):
        with pytest.raises(ValueError, match="floor"):
            construct(8, 4, 0.0)

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            construct(6, 3, 0.1)
        with pytest.raises(ValueError):
            construct(8, 9, 0.1)

    def test_montecarlo_deterministic(self):
        a = construct_montecarlo(64, 40, 0.05, trials=2000, seed=3)
        b = construct_montecarlo(64, 40, 0.05, trials=2000, seed=3)
        assert np.array_equal(a.frozen_mask, b.frozen_mask)

    def test_montecarlo_two_bit_code(self):
        assert construct_montecarlo(2, 1, 0.1, trials=4000).frozen_set.tolist() == [0]


class TestEncode:
    def test_zero_message(self):
        spec = construct(16, 7, 0.1)
        assert not encode(spec, np.zeros(7, dtype=np.uint8)).any()

    def test_linearity(self):
        spec = construct(64, 30, 0.1)
        rng = np.random.default_rng(2)
        for _ in range(20):
            m1 = rng.integers(0, 2, 30, dtype=np.uint8)
            m2 = rng.integers(0, 2, 30, dtype=np.uint8)
            assert np.array_equal(
                encode(spec, m1 ^ m2), encode(spec, m1) ^ encode(spec, m2)
            )

    def test_transform_involution(self):
        rng = np.random.default_rng(3)
        v = rng.integers(0, 2, 128, dtype=np.uint8)
        assert np.array_equal(polar_transform(polar_transform(v)), v)

    def test_length_mismatch(self):
        spec = construct(16, 7, 0.1)
        with pytest.raises(ValueError):
            encode(spec, np.zeros(8, dtype=np.uint8))


class TestBscLlr:
    def test_zero_bit(self):
        assert bsc_llr(0, 0.1) == pytest.approx(2.197, abs=1e-3)

    def test_erasure(self):
        assert bsc_llr(ERASURE, 0.1) == 0.0

    def test_useless_channel(self):
        assert bsc_llr(0, 0.5) == 0.0
        assert bsc_llr(1, 0.5) == 0.0

    def test_array_form(self):
        bits = np.array([0, 1, 0, 1])
        erased = np.array([False, False, True, True])
        llrs = bsc_llr_array(bits, erased, 0.2)
        scale = math.log(0.8 / 0.2)
        assert llrs == pytest.approx([scale, -scale, 0.0, 0.0])


class TestScDecode:
    def test_noiseless_roundtrip(self):
        spec = construct(256, 120, 0.08)
        rng = np.random.default_rng(4)
        msg = rng.integers(0, 2, 120, dtype=np.uint8)
        cw = encode(spec, msg)
        llrs = np.where(cw == 0, LLR_CAP, -LLR_CAP)
        assert np.array_equal(sc_decode(spec, llrs), msg)

    def test_all_zero_llrs_decode_to_zero(self):
        spec = construct(32, 20, 0.1)
        assert not sc_decode(spec, np.zeros(32)).any()

    def test_rate_zero_code(self):
        spec = construct(16, 0, 0.1)
        assert sc_decode(spec, np.random.default_rng(0).normal(size=16)).size == 0

    def test_brute_force_marginalization_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            n = int(2 ** rng.integers(1, 4))
            k = int(rng.integers(1, n + 1))
            spec = construct(n, k, 0.3)
            llrs = rng.normal(0, 3, n)
            mine = np.zeros(n, dtype=np.uint8)
            mine[spec.info_set] = sc_decode(spec, llrs, exact=True)
            oracle = brute_successive_decode(n, spec.frozen_mask, llrs)
            assert np.array_equal(mine, oracle)

    def test_backends_agree(self):
        spec = construct(128, 70, 0.12)
        rng = np.random.default_rng(6)
        llrs = rng.normal(0, 4, (25, 128))
        compiled = sc_decode_frames(spec, llrs)
        pure = fallback.sc_decode_batch(llrs, spec.frozen_mask)[:, spec.info_set]
        assert np.array_equal(compiled, pure)
        exact_c = sc_decode_frames(spec, llrs, exact=True)
        exact_p = fallback.sc_decode_batch(llrs, spec.frozen_mask, minsum=False)[
            :, spec.info_set
        ]
        assert np.array_equal(exact_c, exact_p)

    def test_rejects_nonfinite(self):
        spec = construct(8, 4, 0.1)
        with pytest.raises(ValueError):
            sc_decode(spec, np.array([np.inf, 0, 0, 0, 0, 0, 0, 0]))


class TestErrorRates:
    def test_reference_pipe_code_short_block(self):
        """The rate-0.734 code on the 0.016-crossover pipe at n = 64."""
        spec = construct_montecarlo(64, 47, 0.016, trials=60000, seed=0)
        fer = bsc_frame_fer(spec, 0.016, frames=1000, seed=0)
        assert fer == pytest.approx(0.09, abs=0.05)

    def test_degradation_monotonicity(self):
        spec = construct_montecarlo(64, 30, 0.1, trials=30000, seed=0)
        low = bsc_frame_fer(spec, 0.05, frames=600, seed=1)
        high = bsc_frame_fer(spec, 0.15, frames=600, seed=1)
        assert low <= high + 3 * math.sqrt(0.25 / 600)

    def test_midrate_code_moderate_block(self):
        """Plain successive cancellation needs real rate back-off at n=1024:
        at 80% of capacity the frame-error rate stays high for any frozen
        set, and drops once the rate backs off toward half capacity."""
        at_80pct = construct(1024, 409, 0.11)
        fer_80 = bsc_frame_fer(at_80pct, 0.11, frames=300, seed=2)
        assert 0.2 < fer_80 < 0.8
        backed_off = construct(1024, 256, 0.11)
        fer_backed = bsc_frame_fer(backed_off, 0.11, frames=300, seed=2)
        assert fer_backed < 0.1
