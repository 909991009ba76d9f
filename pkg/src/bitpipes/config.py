"""Typed INI configuration for the command-line workbench.

One section per subsystem, flat key = value entries.  Unknown sections or
keys are hard errors; every constraint violation names the offending key.
An empty (or missing) file yields the documented defaults: A=10, E=A,
sigma=1, beta=5, seed=1.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .pipes import snr_db_to_peak

__all__ = ["Config", "load_config"]

_SCHEMA = {
    "channel": {
        "peak_a": float,
        "peak_db": float,
        "ratio": float,
        "sigma": float,
    },
    "frontend": {
        "beta": float,
        "gamma": float,
    },
    "rate": {
        "scheme": str,
        "q": int,
    },
    "simulate": {
        "n": int,
        "frames": int,
        "construction": str,
    },
    "run": {
        "seed": int,
        "threads": int,
        "out_dir": str,
    },
}


@dataclass
class Config:
    """Resolved configuration with defaults applied."""

    peak_a: float = 10.0
    ratio: float = 1.0
    sigma: float = 1.0
    beta: float = 5.0
    gamma: float | None = None
    scheme: str = "id"
    q: int = 1
    n: int = 64
    frames: int = 1000
    construction: str = "auto"
    seed: int = 1
    threads: int = 1
    out_dir: str = "out"

    @property
    def avg_e(self) -> float:
        return self.ratio * self.peak_a

    def validate(self):
        if self.peak_a <= 0:
            raise ValueError(f"channel.peak_a must be positive, got {self.peak_a}")
        if not 0.0 < self.ratio <= 1.0:
            raise ValueError(f"channel.ratio must lie in (0, 1], got {self.ratio}")
        if self.sigma <= 0:
            raise ValueError(f"channel.sigma must be positive, got {self.sigma}")
        if self.beta <= 0:
            raise ValueError(f"frontend.beta must be positive, got {self.beta}")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError(f"frontend.gamma must be positive, got {self.gamma}")
        if self.n <= 0 or self.n & (self.n - 1):
            raise ValueError(f"simulate.n must be a power of two, got {self.n}")
        if self.frames < 1:
            raise ValueError(f"simulate.frames must be >= 1, got {self.frames}")
        if self.q < 1:
            raise ValueError(f"rate.q must be >= 1, got {self.q}")
        if self.threads < 1:
            raise ValueError(f"run.threads must be >= 1, got {self.threads}")
        return self


def _parse_value(section: str, key: str, raw: str):
    kind = _SCHEMA[section][key]
    try:
        if kind is float:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
            return value
        if kind is int:
            return int(raw)
        return raw.strip()
    except ValueError:
        raise ValueError(
            f"{section}.{key}: cannot parse {raw!r} as {kind.__name__}"
        ) from None


def load_config(path: str | None) -> Config:
    """Read an INI file into a validated :class:`Config`.

    ``peak_db`` is an alternative to ``peak_a`` (the A/sigma dB axis);
    giving both is an error.
    """
    cfg = Config()
    if path is None:
        return cfg.validate()
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    peak_a = peak_db = None
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ValueError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ValueError(f"unknown config key {section}.{key}")
            value = _parse_value(section, key, raw)
            if (section, key) == ("channel", "peak_a"):
                peak_a = value
            elif (section, key) == ("channel", "peak_db"):
                peak_db = value
            elif (section, key) == ("channel", "ratio"):
                cfg.ratio = value
            elif (section, key) == ("channel", "sigma"):
                cfg.sigma = value
            elif (section, key) == ("frontend", "beta"):
                cfg.beta = value
            elif (section, key) == ("frontend", "gamma"):
                cfg.gamma = value
            elif (section, key) == ("rate", "scheme"):
                cfg.scheme = value
            elif (section, key) == ("rate", "q"):
                cfg.q = value
            elif (section, key) == ("simulate", "n"):
                cfg.n = value
            elif (section, key) == ("simulate", "frames"):
                cfg.frames = value
            elif (section, key) == ("simulate", "construction"):
                cfg.construction = value
            elif (section, key) == ("run", "seed"):
                cfg.seed = value
            elif (section, key) == ("run", "threads"):
                cfg.threads = value
            elif (section, key) == ("run", "out_dir"):
                cfg.out_dir = value
    if peak_a is not None and peak_db is not None:
        raise ValueError("give channel.peak_a or channel.peak_db, not both")
    if peak_db is not None:
        cfg.peak_a = snr_db_to_peak(peak_db, cfg.sigma)
    elif peak_a is not None:
        cfg.peak_a = peak_a
    return cfg.validate()
