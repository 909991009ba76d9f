"""Analytic distribution of the binarized channel noise.

Conditioned on no erasure, the scaled-and-biased noise gamma*(Z + beta) is
treated as supported on [-ceil(gamma*A), ceil(gamma*(A+2*beta))] regardless
of the channel input (the unified-support approximation, accurate for
beta >= 3).  Each unit interval [k, k+1) of that range carries Gaussian
probability mass and maps to one noise word via the two's-complement rule,
which yields the exact joint pmf of the noise bits, their marginals
``alpha_i``, and any conditional crossover probability.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pipes import ChannelParams, FrontendParams, noise_words, q_function

__all__ = [
    "NoiseModel",
    "StateSelection",
    "build_noise_model",
    "conditional_alpha",
    "montecarlo_noise_check",
]

# Dense joint pmf tables are capped; the operating range is N <= 10 or so.
MAX_TABLE_BITS = 20


@dataclass(frozen=True)
class StateSelection:
    """Per-pipe index sets of lower-pipe noise bits used as decoder state.

    ``sets[i]`` lists the ``q`` bit-pipe indices whose noise conditions pipe
    ``i``; indices below zero denote the constant-zero noise bit.  The
    default selection is the ``q`` immediately lower pipes.
    """

    q: int
    sets: tuple

    def __post_init__(self):
        for i, indices in enumerate(self.sets):
            if len(indices) != self.q:
                raise ValueError(
                    f"pipe {i}: expected {self.q} state indices, got {indices}"
                )
            if any(j >= i for j in indices):
                raise ValueError(
                    f"pipe {i}: state indices must be strictly lower, got {indices}"
                )

    @classmethod
    def adjacent(cls, q: int, n_bits: int) -> "StateSelection":
        """The natural choice A_i = {i-q, ..., i-1}."""
        if not 1 <= q <= n_bits:
            raise ValueError(f"q must lie in [1, {n_bits}], got {q}")
        return cls(q, tuple(tuple(range(i - q, i)) for i in range(n_bits)))


@dataclass(frozen=True)
class NoiseModel:
    """Joint pmf of the noise word plus derived marginals.

    Attributes
    ----------
    joint_pmf : np.ndarray
        Length 2**n_bits, indexed by noise word value; sums to 1.
    marginals : np.ndarray
        alpha_i = P{noise bit i = 1}, i = 0..n_bits-1.
    normalizer : float
        Gaussian mass of the unified support (the quantity T).
    channel, frontend : parameter records this model was built from.
    """

    joint_pmf: np.ndarray
    marginals: np.ndarray
    normalizer: float
    channel: ChannelParams
    frontend: FrontendParams

    @property
    def n_bits(self) -> int:
        return self.frontend.n_bits

    def bit_column(self, index: int) -> np.ndarray:
        """0/1 value of noise bit ``index`` for every word (zeros if index < 0)."""
        if index < 0:
            return np.zeros(len(self.joint_pmf), dtype=np.int64)
        return (np.arange(len(self.joint_pmf)) >> index) & 1

    def state_patterns(self, indices) -> np.ndarray:
        """Encode the state bits at ``indices`` of every word as an integer.

        Bit j of the pattern is noise bit ``indices[j]``; negative indices
        contribute a constant 0.
        """
        pattern = np.zeros(len(self.joint_pmf), dtype=np.int64)
        for j, idx in enumerate(indices):
            pattern |= self.bit_column(idx) << j
        return pattern

    def state_pmf(self, indices) -> np.ndarray:
        """pmf over the 2**q patterns of the state bits at ``indices``."""
        patterns = self.state_patterns(indices)
        return np.bincount(patterns, weights=self.joint_pmf, minlength=1 << len(indices))

    def conditional_table(self, pipe: int, indices) -> np.ndarray:
        """P{Z_pipe = 1 | state pattern} for all 2**q patterns at once.

        Zero-probability patterns fall back to the unconditional marginal.
        """
        q = len(indices)
        patterns = self.state_patterns(indices)
        p_state = np.bincount(patterns, weights=self.joint_pmf, minlength=1 << q)
        p_joint = np.bincount(
            patterns,
            weights=self.joint_pmf * self.bit_column(pipe),
            minlength=1 << q,
        )
        out = np.full(1 << q, self.marginals[pipe])
        nonzero = p_state > 0
        out[nonzero] = p_joint[nonzero] / p_state[nonzero]
        return out


def build_noise_model(channel: ChannelParams, frontend: FrontendParams) -> NoiseModel:
    """Build the exact joint pmf of the binarized noise word.

    For each integer k in [-ceil(gamma*A), ceil(gamma*(A+2*beta)) - 1] the
    Gaussian mass of gamma*(Z+beta) on [k, k+1) is divided by the total mass
    T of the unified support and accumulated onto word (2**N + k) mod 2**N.
    """
    gamma, beta, n_bits = frontend.gamma, frontend.beta, frontend.n_bits
    if n_bits > MAX_TABLE_BITS:
        raise ValueError(
            f"n_bits = {n_bits} exceeds the dense-table cap of {MAX_TABLE_BITS}"
        )
    sigma = channel.sigma
    lo = -np.ceil(gamma * channel.peak_a)
    hi = np.ceil(gamma * (channel.peak_a + 2.0 * beta))
    k = np.arange(lo, hi)
    scale = gamma * sigma
    upper_tails = q_function((np.append(k, hi) - gamma * beta) / scale)
    normalizer = float(upper_tails[0] - upper_tails[-1])
    probs = (upper_tails[:-1] - upper_tails[1:]) / normalizer
    words = (k.astype(np.int64)) % (1 << n_bits)

    joint = np.zeros(1 << n_bits)
    np.add.at(joint, words, probs)

    word_values = np.arange(1 << n_bits)
    marginals = np.array(
        [joint @ ((word_values >> i) & 1) for i in range(n_bits)]
    )
    return NoiseModel(
        joint_pmf=joint,
        marginals=marginals,
        normalizer=normalizer,
        channel=channel,
        frontend=frontend,
    )


def conditional_alpha(model: NoiseModel, pipe: int, condition: dict) -> float:
    """P{Z_pipe = 1 | given values of lower noise bits}.

    ``condition`` maps bit indices (all strictly below ``pipe``; negative
    indices denote the constant-zero bit) to their observed 0/1 values.  A
    zero-probability conditioning event returns the unconditional marginal.
    """
    if not 0 <= pipe < model.n_bits:
        raise ValueError(f"pipe {pipe} out of range for n_bits={model.n_bits}")
    if any(j >= pipe for j in condition):
        raise ValueError("conditioning indices must be strictly below the pipe")
    if not condition:
        return float(model.marginals[pipe])
    # Negative-index bits are identically zero: conditioning on 0 there is
    # vacuous, conditioning on 1 is a zero-probability event.
    if any(idx < 0 and bit == 1 for idx, bit in condition.items()):
        return float(model.marginals[pipe])
    real = {idx: bit for idx, bit in condition.items() if idx >= 0}
    if not real:
        return float(model.marginals[pipe])
    mask = np.ones(len(model.joint_pmf), dtype=bool)
    for idx, bit in real.items():
        mask &= model.bit_column(idx) == bit
    p_cond = float(model.joint_pmf[mask].sum())
    if p_cond == 0.0:
        return float(model.marginals[pipe])
    p_joint = float((model.joint_pmf * model.bit_column(pipe))[mask].sum())
    return p_joint / p_cond


def montecarlo_noise_check(
    channel: ChannelParams,
    frontend: FrontendParams,
    samples: int,
    seed: int,
) -> np.ndarray:
    """Empirical noise-word pmf from direct Gaussian sampling (test oracle).

    Draws Z ~ N(0, sigma^2) conditioned on the unified support
    [-(A+beta), A+beta] by rejection, binarizes through the front end, and
    returns the empirical word frequencies.
    """
    if samples < 10**5:
        raise ValueError(f"samples must be at least 1e5, got {samples}")
    rng = np.random.default_rng(seed)
    lo, hi = -(channel.peak_a + frontend.beta), channel.peak_a + frontend.beta
    draws = np.empty(samples)
    filled = 0
    while filled < samples:
        batch = rng.normal(0.0, channel.sigma, size=2 * (samples - filled) + 64)
        batch = batch[(batch >= lo) & (batch <= hi)][: samples - filled]
        draws[filled : filled + len(batch)] = batch
        filled += len(batch)
    words = noise_words(draws, frontend.beta, frontend.gamma, frontend.n_bits)
    return np.bincount(words, minlength=1 << frontend.n_bits) / samples
