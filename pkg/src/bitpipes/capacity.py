"""Numerical capacity references via the Blahut-Arimoto algorithm.

Two channels are assembled here: the exactly discretized quantizer channel
(integer input words against output words plus an erasure symbol), and a
finely gridded version of the underlying Gaussian intensity channel that
serves as the capacity reference curve.  Average-intensity constraints are
handled with a Lagrange multiplier bisected until the constraint is met.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pipes import ChannelParams, FrontendParams, q_function

__all__ = [
    "DiscreteChannel",
    "blahut_arimoto",
    "build_discrete_channel",
    "imdd_capacity_proxy",
]

MAX_MATRIX_BITS = 14


@dataclass(frozen=True)
class DiscreteChannel:
    """Row-stochastic transition matrix with per-input cost.

    ``matrix[x, j]`` is P{output j | input x}; when ``has_erasure`` the last
    column is the erasure symbol.  ``cost`` is the scaled intensity spent by
    each input (used by the average constraint).
    """

    inputs: np.ndarray
    matrix: np.ndarray
    cost: np.ndarray
    has_erasure: bool = True

    def __post_init__(self):
        rows = self.matrix.sum(axis=1)
        if not np.allclose(rows, 1.0, atol=1e-9):
            raise ValueError(f"rows must sum to 1, worst deviation {abs(rows - 1).max()}")


def build_discrete_channel(
    channel: ChannelParams, frontend: FrontendParams
) -> DiscreteChannel:
    """Exact transition law from input words to output words plus erasure.

    Output bin j collects the Gaussian mass of the scaled biased output on
    [j, j+1); everything outside [0, ceil(gamma*(A+2*beta))] is erased.
    """
    n_bits = frontend.n_bits
    if n_bits > MAX_MATRIX_BITS:
        raise ValueError(
            f"n_bits = {n_bits} exceeds the matrix-size guard of {MAX_MATRIX_BITS}"
        )
    gamma, beta, sigma = frontend.gamma, frontend.beta, channel.sigma
    inputs = np.arange(int(math.floor(gamma * channel.peak_a * (1 + 1e-12))) + 1)
    inputs = inputs[inputs < (1 << n_bits)]
    n_bins = int(np.ceil(gamma * (channel.peak_a + 2.0 * beta)))
    scale = gamma * sigma

    edges = np.arange(n_bins + 1)
    # upper-tail probabilities at every bin edge, per input
    tails = q_function((edges[None, :] - inputs[:, None] - gamma * beta) / scale)
    matrix = np.zeros((len(inputs), (1 << n_bits) + 1))
    matrix[:, :n_bins] = tails[:, :-1] - tails[:, 1:]
    # erased mass: below bin 0 plus above the top edge
    matrix[:, -1] = (1.0 - tails[:, 0]) + tails[:, -1]
    return DiscreteChannel(inputs=inputs, matrix=matrix, cost=inputs.astype(float))


def _ba_fixed_multiplier(matrix, cost, lam, tol, max_iters, r0=None):
    """Blahut-Arimoto ascent on I(r) - lam * E_r[cost] (natural log inside).

    Returns (I_bits, r, gap_bits, iterations).  The ascent objective is
    checked to be nondecreasing at every iteration.  ``r0`` warm-starts the
    input distribution (used by the constraint bisection).
    """
    m = matrix.shape[0]
    r = np.full(m, 1.0 / m) if r0 is None else r0.copy()
    # constant part of D_x = KL(W(.|x) || p_y): sum_y W log W
    row_wlogw = np.sum(
        np.where(matrix > 0, matrix * np.log(np.maximum(matrix, 1e-300)), 0.0),
        axis=1,
    )
    tilt = -lam * cost
    last_objective = -np.inf
    gap = np.inf

    def kl_rows(r_vec):
        p_y = r_vec @ matrix
        log_py = np.log(np.maximum(p_y, 1e-300))
        return row_wlogw - matrix @ log_py

    for iteration in range(1, max_iters + 1):
        d = kl_rows(r)
        objective = float(r @ (d + tilt))
        if objective < last_objective - 1e-10:
            raise AssertionError(
                f"Blahut-Arimoto objective decreased: {last_objective} -> {objective}"
            )
        last_objective = objective
        gap = float(np.max(d + tilt) - objective)
        if gap < tol * math.log(2.0):
            break
        log_r = np.where(r > 0, np.log(np.maximum(r, 1e-300)), -np.inf) + d + tilt
        log_r -= log_r.max()
        r = np.exp(log_r)
        r /= r.sum()
    else:
        raise RuntimeError(
            f"Blahut-Arimoto did not converge in {max_iters} iterations; "
            f"final duality gap {gap / math.log(2.0):.3e} bits"
        )
    capacity_bits = float(r @ kl_rows(r)) / math.log(2.0)
    return capacity_bits, r, gap / math.log(2.0), iteration


def blahut_arimoto(
    chan: DiscreteChannel,
    avg_limit: float | None = None,
    tol: float = 1e-7,
    max_iters: int = 10**4,
):
    """Capacity (bits) and optimal input distribution of a discrete channel.

    With ``avg_limit`` the input distribution must satisfy
    ``E[cost] <= avg_limit``; a Lagrange multiplier on the cost is bisected
    until the constraint is met within 1e-4 relative (or found slack).
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    cap, r, _, _ = _ba_fixed_multiplier(chan.matrix, chan.cost, 0.0, tol, max_iters)
    if avg_limit is None or r @ chan.cost <= avg_limit * (1 + 1e-9):
        return cap, r

    lo, hi = 0.0, 1.0 / max(avg_limit, 1e-12)
    while True:
        cap_hi, r_hi, _, _ = _ba_fixed_multiplier(
            chan.matrix, chan.cost, hi, tol, max_iters, r0=r
        )
        if r_hi @ chan.cost <= avg_limit:
            break
        hi *= 2.0
        if hi > 1e9:
            raise RuntimeError("average-constraint multiplier diverged")
    best = (cap_hi, r_hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        cap_mid, r_mid, _, _ = _ba_fixed_multiplier(
            chan.matrix, chan.cost, mid, tol, max_iters, r0=best[1]
        )
        usage = float(r_mid @ chan.cost)
        if usage <= avg_limit:
            hi, best = mid, (cap_mid, r_mid)
            if abs(usage - avg_limit) <= 1e-4 * avg_limit:
                break
        else:
            lo = mid
    return best


def imdd_capacity_proxy(
    channel: ChannelParams,
    grid_points: int = 256,
    tol: float = 1e-7,
    max_iters: int = 10**4,
) -> float:
    """Capacity reference of the Gaussian intensity channel (bits).

    Inputs are gridded uniformly on [0, A]; outputs are Gaussian mass on
    bins of width sigma/8 spanning [-6*sigma, A + 6*sigma] with the outer
    tails folded into the end bins.  The average constraint E[X] <= E is
    enforced whenever it binds.
    """
    if grid_points < 256:
        raise ValueError(f"grid_points must be >= 256, got {grid_points}")
    a, sigma = channel.peak_a, channel.sigma
    inputs = np.linspace(0.0, a, grid_points)
    width = sigma / 8.0
    edges = np.arange(-6.0 * sigma, a + 6.0 * sigma + width, width)
    tails = q_function((edges[None, :] - inputs[:, None]) / sigma)
    matrix = tails[:, :-1] - tails[:, 1:]
    matrix[:, 0] += 1.0 - tails[:, 0]
    matrix[:, -1] += tails[:, -1]
    chan = DiscreteChannel(
        inputs=inputs, matrix=matrix, cost=inputs.copy(), has_erasure=False
    )
    cap, _ = blahut_arimoto(chan, avg_limit=channel.avg_e, tol=tol, max_iters=max_iters)
    return cap
