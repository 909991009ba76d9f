"""End-to-end Monte Carlo simulation of polar-coded transmission.

Each frame encodes one message per active pipe, composes the transmit word,
sends it through the Gaussian intensity channel, and runs the successive
receiver: decode a pipe, re-encode its decisions, recover its noise bits,
rebuild the carry into the next pipe, and continue upward.  Carries are
rebuilt from the *decoded* bits, so decoding errors propagate exactly as
they would in hardware (a ``genie`` switch provides the idealized
comparison).  Erased slots contribute LLR 0 and a zero carry estimate.

Frames are seeded independently from (master_seed, frame_index), so reports
are bit-identical for any worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .noise import NoiseModel, StateSelection, build_noise_model
from .pipes import ChannelParams, FrontendParams, output_words
from .polar import (
    PolarCodeSpec,
    bsc_llr_array,
    construct,
    construct_montecarlo,
    encode,
    sc_decode,
)
from .rates import binary_entropy, flipped_crossovers, greedy_active_set

__all__ = [
    "SimConfig",
    "SimReport",
    "aggregate",
    "build_codes",
    "run_frame_id",
    "run_frame_sd_bsc",
    "run_simulation",
    "sweep_rates",
]

SCHEMES = ("id", "sd-bsc")

# Crossovers are floored before LLR scaling / code construction so that
# effectively noiseless pipes keep finite arithmetic.
MIN_CROSSOVER = 1e-12
MIN_DESIGN_CROSSOVER = 1e-9


@dataclass(frozen=True)
class SimConfig:
    """Full description of one simulation run.

    ``code_rates`` maps active pipe index to k_i/n; every other pipe sends
    the constant 0.  Codeword symbols are Bernoulli(0.5) as produced by
    linear codes with uniform messages, so the allocation is implicitly
    p_i = 1/2 on the active set.
    """

    channel: ChannelParams
    beta: float
    gamma: float
    scheme: str
    code_rates: dict
    n: int
    frames: int
    master_seed: int = 1
    q: int = 1
    genie: bool = False
    erasure_fill: str = "llr0"  # "llr0" | "random"
    exact_f: bool = False
    construction: str = "auto"  # "auto" | "bhattacharyya" | "genie-de"
    construction_trials: int = 60000
    threads: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.n <= 0 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two, got {self.n}")
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        if self.erasure_fill not in ("llr0", "random"):
            raise ValueError(f"unknown erasure_fill {self.erasure_fill!r}")
        if self.construction not in ("auto", "bhattacharyya", "genie-de"):
            raise ValueError(f"unknown construction {self.construction!r}")
        for i, rate in self.code_rates.items():
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"pipe {i}: rate {rate} outside [0, 1]")

    @property
    def frontend(self) -> FrontendParams:
        return FrontendParams.for_channel(self.channel, self.beta, self.gamma)

    @property
    def active(self) -> tuple:
        return tuple(sorted(i for i, r in self.code_rates.items() if r > 0))

    def validate_peak(self):
        cap = self.gamma * self.channel.peak_a
        used = sum(2**i for i in self.active)
        if used > cap * (1 + 1e-9):
            raise ValueError(
                f"active pipes use {used} > gamma*A = {cap}: peak constraint violated"
            )


@dataclass
class SimReport:
    """Per-pipe and overall error rates with full reproduction provenance."""

    scheme: str
    pipes: tuple
    k: dict
    n: int
    frames: int
    ber: dict
    fer: dict
    overall_ber: float
    overall_fer: float
    erasure_rate: float
    total_rate: float
    seed: int
    wall_seconds: float
    config_echo: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "pipes": list(self.pipes),
            "k": {str(i): int(v) for i, v in self.k.items()},
            "n": self.n,
            "frames": self.frames,
            "ber": {str(i): v for i, v in self.ber.items()},
            "fer": {str(i): v for i, v in self.fer.items()},
            "overall_ber": self.overall_ber,
            "overall_fer": self.overall_fer,
            "erasure_rate": self.erasure_rate,
            "total_rate": self.total_rate,
            "seed": self.seed,
            "wall_seconds": self.wall_seconds,
            "config": self.config_echo,
        }


def _clip(p, lo):
    return float(min(max(p, lo), 1.0 - lo))


def effective_crossovers(config: SimConfig, noise: NoiseModel) -> np.ndarray:
    """Per-pipe crossover seen by the decoder: alpha_i, or the blended
    crossover after state flipping for the sd-bsc scheme."""
    if config.scheme == "id":
        return noise.marginals.copy()
    selection = StateSelection.adjacent(config.q, noise.n_bits)
    return flipped_crossovers(noise, selection)


def build_codes(config: SimConfig, noise: NoiseModel) -> dict:
    """One polar code per active pipe at its configured rate.

    Design crossover is min(alpha, 1-alpha) of the pipe's effective
    channel.  Construction "auto" measures genie-aided channel rates
    (scaling the trial count down at long blocks where the bound-based
    ranking is already adequate).
    """
    eff = effective_crossovers(config, noise)
    codes = {}
    for i in sorted(config.code_rates):
        rate = config.code_rates[i]
        if rate <= 0:
            continue
        k = int(round(rate * config.n))
        design = _clip(min(eff[i], 1.0 - eff[i]), MIN_DESIGN_CROSSOVER)
        use_bhattacharyya = config.construction == "bhattacharyya" or (
            config.construction == "auto" and config.n > 4096
        )
        if use_bhattacharyya:
            # long blocks: the z bounds are tight in the polarized regime
            codes[i] = construct(config.n, k, design)
        else:
            codes[i] = construct_montecarlo(
                config.n, k, design,
                trials=config.construction_trials, seed=config.master_seed,
            )
    return codes


@dataclass
class FrameResult:
    bit_errors: dict
    frame_errors: dict
    erased_slots: int


def _majority(a, b, c):
    return (a & b) | (a & c) | (b & c)


def _frame_io(config: SimConfig, codes: dict, rng):
    """Draw messages, encode, transmit, and return receiver-side arrays."""
    ch, n = config.channel, config.n
    n_bits = config.frontend.n_bits
    messages, cw_bits = {}, {}
    x_words = np.zeros(n, dtype=np.int64)
    for i in sorted(codes):
        msg = rng.integers(0, 2, codes[i].k, dtype=np.uint8)
        cw = encode(codes[i], msg)
        messages[i], cw_bits[i] = msg, cw
        x_words |= cw.astype(np.int64) << i
    z = rng.normal(0.0, ch.sigma, n)
    y_tilde = x_words / config.gamma + z + config.beta
    erased = (y_tilde < 0.0) | (y_tilde > ch.peak_a + 2.0 * config.beta)
    y_words = np.where(erased, 0, output_words(y_tilde, config.gamma, n_bits))
    return messages, cw_bits, x_words, y_words, erased


def _run_frame(config: SimConfig, codes: dict, noise: NoiseModel, frame_seed,
               flip_tables=None, llr_alpha=None, inject_z_words=None) -> FrameResult:
    """Common successive receiver for both schemes.

    ``flip_tables``/``llr_alpha`` enable the sd-bsc state flipping; when
    ``inject_z_words`` is given the Gaussian channel is bypassed and the
    exact word-addition channel is simulated instead (test hook).
    """
    rng = np.random.default_rng(frame_seed)
    n, n_bits = config.n, config.frontend.n_bits
    mask_n = (1 << n_bits) - 1
    messages, cw_bits, x_words, y_words, erased = _frame_io(config, codes, rng)
    if inject_z_words is not None:
        y_words = (x_words + np.asarray(inject_z_words, dtype=np.int64)) & mask_n
        erased = np.zeros(n, dtype=bool)

    eff = llr_alpha if llr_alpha is not None else noise.marginals
    w_hat = np.zeros(n, dtype=np.int64)
    z_hat = {}
    bit_errors, frame_errors = {}, {}
    for i in range(n_bits):
        y_i = (y_words >> i) & 1
        ybar = y_i ^ w_hat
        if config.genie:
            x_true = (x_words >> i) & 1
            if inject_z_words is not None:
                z_true = (np.asarray(inject_z_words, dtype=np.int64) >> i) & 1
            else:
                z_true = ybar ^ x_true  # correct wherever carry chain is exact
        if i in codes:
            decode_bits = ybar
            if flip_tables is not None:
                state = np.zeros(n, dtype=np.int64)
                for j_off in range(config.q):
                    idx = i - config.q + j_off
                    if idx >= 0:
                        state |= z_hat[idx] << j_off
                decode_bits = ybar ^ flip_tables[i][state]
            alpha_llr = _clip(eff[i], MIN_CROSSOVER)
            if config.erasure_fill == "random":
                filled = np.where(erased, rng.integers(0, 2, n), decode_bits)
                llrs = bsc_llr_array(filled, np.zeros(n, bool), alpha_llr)
            else:
                llrs = bsc_llr_array(decode_bits, erased, alpha_llr)
            decided = sc_decode(codes[i], llrs, exact=config.exact_f)
            n_bad = int(np.count_nonzero(decided != messages[i]))
            bit_errors[i] = n_bad
            frame_errors[i] = n_bad > 0
            x_hat_i = encode(codes[i], decided).astype(np.int64)
        else:
            x_hat_i = np.zeros(n, dtype=np.int64)
        z_hat[i] = (ybar ^ x_hat_i) & 1
        if config.genie:
            carry_x, carry_z = x_true, z_true
        else:
            carry_x, carry_z = x_hat_i, z_hat[i]
        w_hat = _majority(carry_x, carry_z, w_hat)
        w_hat[erased] = 0
    return FrameResult(
        bit_errors=bit_errors,
        frame_errors=frame_errors,
        erased_slots=int(np.count_nonzero(erased)),
    )


def run_frame_id(config: SimConfig, codes: dict, noise: NoiseModel, frame_seed,
                 inject_z_words=None) -> FrameResult:
    """One frame of the independent-decoding scheme."""
    return _run_frame(config, codes, noise, frame_seed, inject_z_words=inject_z_words)


def run_frame_sd_bsc(config: SimConfig, codes: dict, noise: NoiseModel, frame_seed,
                     inject_z_words=None) -> FrameResult:
    """One frame of the state-flipping scheme.

    Before decoding pipe i the receiver flips the carry-corrected output at
    slots whose recovered lower-pipe noise state makes P{Z_i=1|state} > 1/2,
    then decodes against the blended BSC crossover.
    """
    selection = StateSelection.adjacent(config.q, noise.n_bits)
    breve = flipped_crossovers(noise, selection)
    flip_tables = {
        i: (noise.conditional_table(i, selection.sets[i]) > 0.5).astype(np.int64)
        for i in codes
    }
    return _run_frame(
        config, codes, noise, frame_seed,
        flip_tables=flip_tables, llr_alpha=breve, inject_z_words=inject_z_words,
    )


def aggregate(config: SimConfig, frames: list) -> SimReport:
    """Combine per-frame counts into rates; pure integer accumulation."""
    if not frames:
        raise ValueError("need at least one frame")
    pipes = config.active
    k = {i: int(round(config.code_rates[i] * config.n)) for i in pipes}
    t_bar = len(frames)
    bit_err = {i: sum(f.bit_errors.get(i, 0) for f in frames) for i in pipes}
    frame_err = {i: sum(f.frame_errors.get(i, False) for f in frames) for i in pipes}
    any_err = sum(any(f.frame_errors.values()) for f in frames)
    total_info = sum(k.values()) * t_bar
    return SimReport(
        scheme=config.scheme,
        pipes=pipes,
        k=k,
        n=config.n,
        frames=t_bar,
        ber={i: bit_err[i] / (k[i] * t_bar) if k[i] else 0.0 for i in pipes},
        fer={i: frame_err[i] / t_bar for i in pipes},
        overall_ber=sum(bit_err.values()) / total_info if total_info else 0.0,
        overall_fer=any_err / t_bar,
        erasure_rate=sum(f.erased_slots for f in frames) / (t_bar * config.n),
        total_rate=sum(k.values()) / config.n,
        seed=config.master_seed,
        wall_seconds=0.0,
        config_echo={},
    )


def run_simulation(config: SimConfig, noise: NoiseModel | None = None,
                   codes: dict | None = None) -> SimReport:
    """Build codes, run all frames (optionally across threads), aggregate."""
    config.validate_peak()
    start = time.time()
    if noise is None:
        noise = build_noise_model(config.channel, config.frontend)
    if codes is None:
        codes = build_codes(config, noise)
    runner = run_frame_id if config.scheme == "id" else run_frame_sd_bsc

    if config.scheme == "sd-bsc":
        # precompute the flip tables once; per-frame rebuild would dominate
        selection = StateSelection.adjacent(config.q, noise.n_bits)
        breve = flipped_crossovers(noise, selection)
        flip_tables = {
            i: (noise.conditional_table(i, selection.sets[i]) > 0.5).astype(np.int64)
            for i in codes
        }

        def one(f):
            return _run_frame(
                config, codes, noise, [config.master_seed, f],
                flip_tables=flip_tables, llr_alpha=breve,
            )
    else:

        def one(f):
            return runner(config, codes, noise, [config.master_seed, f])

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(one, range(config.frames)))
    else:
        results = [one(f) for f in range(config.frames)]
    report = aggregate(config, results)
    report.wall_seconds = time.time() - start
    report.config_echo = {
        "peak_a": config.channel.peak_a,
        "avg_e": config.channel.avg_e,
        "sigma": config.channel.sigma,
        "beta": config.beta,
        "gamma": config.gamma,
        "scheme": config.scheme,
        "n": config.n,
        "frames": config.frames,
        "code_rates": {str(i): config.code_rates[i] for i in sorted(config.code_rates)},
        "q": config.q,
        "genie": config.genie,
        "construction": config.construction,
        "erasure_fill": config.erasure_fill,
    }
    return report


def theoretical_code_rates(config_like, noise: NoiseModel) -> dict:
    """Capacity of each active pipe under the scheme's effective crossover."""
    eff = effective_crossovers(config_like, noise)
    active = greedy_active_set(
        config_like.gamma, config_like.channel.peak_a, noise.n_bits
    )
    rates = {}
    for i in active:
        a = min(eff[i], 1.0 - eff[i])
        cap = 1.0 - float(binary_entropy(a))
        if cap > 1e-3:
            rates[i] = cap
    return rates


def sweep_rates(
    base: SimConfig,
    snr_db_grid,
    target_fer: float = 1e-1,
    step_fraction: int = 64,
    max_rounds: int = 24,
    auto_params: bool = False,
) -> list:
    """Highest simulated rate meeting a FER target at each SNR point.

    For each point the per-pipe rates start at the theoretical capacities
    and the worst-FER pipe is reduced in steps of n/step_fraction bits until
    the measured overall FER meets the target (or every pipe hits rate 0).
    With ``auto_params`` the front end (beta, gamma) is re-optimized per SNR
    point from the scheme's theoretical rate; otherwise base.beta/base.gamma
    are used throughout.  Returns one record per SNR point.
    """
    from .pipes import snr_db_to_peak
    from .rates import optimize_params

    records = []
    for snr_db in snr_db_grid:
        channel = ChannelParams(
            snr_db_to_peak(snr_db, base.channel.sigma),
            None if base.channel.ratio >= 1.0
            else snr_db_to_peak(snr_db, base.channel.sigma) * base.channel.ratio,
            base.channel.sigma,
        )
        if auto_params:
            scheme = "sd-bsc" if base.scheme == "sd-bsc" else "id"
            tuned = optimize_params(channel, scheme, q=base.q)
            beta, gamma = tuned.params["beta"], tuned.params["gamma"]
        else:
            beta, gamma = base.beta, base.gamma
        frontend = FrontendParams.for_channel(channel, beta, gamma)
        noise = build_noise_model(channel, frontend)
        probe = SimConfig(
            channel=channel, beta=beta, gamma=gamma, scheme=base.scheme,
            code_rates={}, n=base.n, frames=base.frames,
            master_seed=base.master_seed, q=base.q,
            construction=base.construction,
            construction_trials=base.construction_trials, threads=base.threads,
        )
        step = max(1, base.n // step_fraction)
        k = {
            i: int(np.floor(cap * base.n))
            for i, cap in theoretical_code_rates(probe, noise).items()
        }
        report = None
        for _ in range(max_rounds):
            rates = {i: k[i] / base.n for i in k if k[i] > 0}
            if not rates:
                report = None
                break
            config = SimConfig(
                channel=channel, beta=beta, gamma=gamma,
                scheme=base.scheme, code_rates=rates, n=base.n,
                frames=base.frames, master_seed=base.master_seed, q=base.q,
                construction=base.construction,
                construction_trials=base.construction_trials,
                threads=base.threads,
            )
            report = run_simulation(config, noise=noise)
            if report.overall_fer <= target_fer:
                break
            worst = max(report.fer, key=lambda i: (report.fer[i], i))
            k[worst] = max(0, k[worst] - step)
        records.append(
            {
                "snr_db": float(snr_db),
                "scheme": base.scheme,
                "beta": beta,
                "gamma": gamma,
                "achieved_rate": report.total_rate if report else 0.0,
                "overall_fer": report.overall_fer if report else 0.0,
                "k": dict(k),
                "report": report,
            }
        )
    return records
