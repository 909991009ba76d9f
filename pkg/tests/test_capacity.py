"""Capacity-baseline tests: matrix structure and the ascent algorithm."""

import numpy as np
import pytest

from bitpipes.capacity import (
    DiscreteChannel,
    blahut_arimoto,
    build_discrete_channel,
    imdd_capacity_proxy,
)
from bitpipes.pipes import ChannelParams, FrontendParams, erasure_bound
from bitpipes.rates import binary_entropy


def bsc_channel(alpha, cost=(0.0, 1.0)):
    return DiscreteChannel(
        inputs=np.array([0, 1]),
        matrix=np.array([[1 - alpha, alpha], [alpha, 1 - alpha]]),
        cost=np.array(cost),
        has_erasure=False,
    )


class TestDiscreteChannel:
    def test_rows_sum_to_one(self):
        ch = ChannelParams(10.0)
        fe = FrontendParams.for_channel(ch, 5.0, 0.5)
        chan = build_discrete_channel(ch, fe)
        assert np.allclose(chan.matrix.sum(axis=1), 1.0, atol=1e-9)

    def test_near_permutation_when_noiseless(self):
        # beta chosen off the bin edges: every noiseless output falls
        # strictly inside one quantizer bin
        ch = ChannelParams(10.0, sigma=1e-4)
        fe = FrontendParams.for_channel(ch, 5.3, 1.0)
        chan = build_discrete_channel(ch, fe)
        assert np.all(chan.matrix.max(axis=1) > 1.0 - 1e-9)

    def test_erasure_mass_bounded_at_extremes(self):
        ch = ChannelParams(10.0)
        fe = FrontendParams.for_channel(ch, 4.0, 0.5)
        chan = build_discrete_channel(ch, fe)
        bound = erasure_bound(fe.beta) + 1e-6
        assert chan.matrix[0, -1] <= bound
        peak_row = np.searchsorted(chan.inputs, int(fe.gamma * ch.peak_a))
        assert chan.matrix[peak_row, -1] <= bound

    def test_size_guard(self):
        ch = ChannelParams(10.0)
        fe = FrontendParams.for_channel(ch, 5.0, 2.0**12)
        with pytest.raises(ValueError):
            build_discrete_channel(ch, fe)


class TestBlahutArimoto:
    def test_bsc_closed_form(self):
        cap, dist = blahut_arimoto(bsc_channel(0.1), tol=1e-9, max_iters=10**5)
        assert cap == pytest.approx(1.0 - float(binary_entropy(0.1)), abs=1e-4)
        assert dist == pytest.approx([0.5, 0.5], abs=1e-3)

    def test_two_input_grid_oracle(self):
        """Capacity of random 2-row channels against a fine 1-D grid search."""
        rng = np.random.default_rng(21)
        for _ in range(10):
            w = rng.dirichlet(np.ones(5), size=2)
            chan = DiscreteChannel(
                inputs=np.arange(2), matrix=w, cost=np.zeros(2), has_erasure=False
            )
            cap, _ = blahut_arimoto(chan, tol=1e-9, max_iters=10**5)
            grid = np.linspace(0.0, 1.0, 4001)[1:-1]
            mix = grid[:, None] * w[1] + (1 - grid)[:, None] * w[0]
            ent = -np.sum(np.where(mix > 0, mix * np.log2(mix), 0.0), axis=1)
            h_cond = [
                -np.sum(np.where(row > 0, row * np.log2(row), 0.0)) for row in w
            ]
            best = np.max(ent - ((1 - grid) * h_cond[0] + grid * h_cond[1]))
            assert cap == pytest.approx(float(best), abs=1e-5)

    def test_constrained_grid_oracle(self):
        """Average-cost-constrained capacity against a constrained grid."""
        alpha, limit = 0.05, 0.2
        cap, dist = blahut_arimoto(
            bsc_channel(alpha), avg_limit=limit, tol=1e-9, max_iters=10**5
        )
        assert dist @ np.array([0.0, 1.0]) <= limit * (1 + 1e-3)
        grid = np.linspace(0.0, limit, 2001)
        vals = binary_entropy(grid * (1 - alpha) + (1 - grid) * alpha) - float(
            binary_entropy(alpha)
        )
        assert cap == pytest.approx(float(np.max(vals)), abs=2e-4)

    def test_nonconvergence_reports_gap(self):
        # an asymmetric channel needs more than two iterations
        rng = np.random.default_rng(3)
        chan = DiscreteChannel(
            inputs=np.arange(3),
            matrix=rng.dirichlet(np.ones(4), size=3),
            cost=np.zeros(3),
            has_erasure=False,
        )
        with pytest.raises(RuntimeError, match="duality gap"):
            blahut_arimoto(chan, tol=1e-12, max_iters=2)

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            blahut_arimoto(bsc_channel(0.3), tol=0.0)


class TestQuantizerCapacity:
    def test_reference_pair_and_monotonicity(self):
        """Capacities grow with quantizer resolution and stay below the
        Gaussian-channel reference."""
        ch = ChannelParams(10.0)
        caps = []
        for gamma in (0.2, 0.5, 1.5, 4.0, 6.0):
            fe = FrontendParams.for_channel(ch, 5.0, gamma)
            chan = build_discrete_channel(ch, fe)
            cap, _ = blahut_arimoto(chan, tol=1e-5, max_iters=10**5)
            caps.append(cap)
        assert caps[1] == pytest.approx(1.6009, abs=0.02)
        assert caps[3] == pytest.approx(1.7557, abs=0.02)
        assert all(b >= a - 1e-9 for a, b in zip(caps, caps[1:]))
        proxy = imdd_capacity_proxy(ch, tol=1e-5, max_iters=3 * 10**5)
        assert proxy == pytest.approx(1.7584, abs=0.03)
        assert all(c <= proxy + 1e-9 for c in caps)

    def test_proxy_monotone_in_peak(self):
        caps = [
            imdd_capacity_proxy(ChannelParams(a), tol=1e-4, max_iters=10**5)
            for a in (2.0, 4.0, 8.0)
        ]
        assert caps[0] < caps[1] < caps[2]

    def test_proxy_rejects_coarse_grid(self):
        with pytest.raises(ValueError):
            imdd_capacity_proxy(ChannelParams(4.0), grid_points=64)
