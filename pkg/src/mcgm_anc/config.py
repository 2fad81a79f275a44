"""Flat key=value run configuration for the command-line tool.

Keys carry their units in the name. Every key has a default, so a config
file only lists what it changes; unknown keys are rejected.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from typing import Optional

from .errors import InvalidArgumentError
from .fileio import parse_key_values, read_key_values
from .harness import DATASET_BANDPASS_TAPS, DEFAULT_BANDS_HZ


def _bands_text(bands) -> str:
    return ";".join(f"{lo:g}-{hi:g}" for lo, hi in bands)


@dataclass
class RunConfig:
    sample_rate_hz: float = 16000.0
    filter_length: int = 512
    seed: int = 0

    # dataset
    bands_hz: str = _bands_text(DEFAULT_BANDS_HZ)
    duration_seconds: float = 10.0
    bandpass_taps: int = DATASET_BANDPASS_TAPS
    noise_files: str = ""
    train_fraction: float = 0.7
    window_seconds: float = 0.5
    wav_scale: float = 0.125

    # plant
    path_seed: int = 0
    path_gain: float = 0.3
    primary_length_samples: int = 512
    primary_delay_samples: int = 48
    primary_decay: float = 0.98
    secondary_length_samples: int = 256
    secondary_delay_samples: int = 16
    secondary_decay: float = 0.8
    primary_path_file: str = ""
    secondary_path_file: str = ""
    secondary_estimate_file: str = ""

    # trainer
    epochs: int = 2000
    forgetting_factor: float = 0.5
    learning_rate: float = 1e-9
    mu_init: float = 0.0
    mu_min: float = 0.0
    mu_max: float = 1.0
    gradient_mode: str = "frozen"
    mu_file: str = ""

    # strategies
    strategies: str = "mcgm,theoretical,normalized"
    strategy: str = "mcgm"
    theoretical_delay_samples: int = 0
    normalized_mu_bar: float = 0.1
    normalized_epsilon: float = 1e-6

    # robustness sweep
    perturb_amounts: str = "0.1,0.2,0.3"
    perturb_seed: int = 1

    # loss scan
    scan_mu_min: float = 0.0
    scan_mu_max: float = 3e-3
    scan_points: int = 31
    scan_tasks: int = 32

    output_dir: str = "out"

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise InvalidArgumentError(f"unknown config key {key!r}")
            typ = known[key].type
            try:
                if typ in ("int", int):
                    kwargs[key] = int(raw)
                elif typ in ("float", float):
                    kwargs[key] = float(raw)
                else:
                    kwargs[key] = raw
            except ValueError:
                raise InvalidArgumentError(f"config key {key!r}: cannot parse {raw!r}") from None
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: Optional[str], overrides: Optional[list[str]] = None) -> "RunConfig":
        values: dict[str, str] = {}
        if path is not None:
            if not os.path.isfile(path):
                raise InvalidArgumentError(f"config file not found: {path}")
            values.update(read_key_values(path))
        for item in overrides or []:
            values.update(parse_key_values(item, "--set"))
        return cls.from_mapping(values)

    def validate(self) -> None:
        if self.sample_rate_hz <= 0:
            raise InvalidArgumentError("sample_rate_hz must be > 0")
        if self.filter_length < 1:
            raise InvalidArgumentError("filter_length must be >= 1")
        if self.duration_seconds <= 0:
            raise InvalidArgumentError("duration_seconds must be > 0")
        if not 0 < self.train_fraction < 1:
            raise InvalidArgumentError("train_fraction must lie in (0, 1)")
        if self.window_seconds <= 0:
            raise InvalidArgumentError("window_seconds must be > 0")
        if not 0 < self.wav_scale <= 1:
            raise InvalidArgumentError("wav_scale must lie in (0, 1]")
        for name in ("primary_path_file", "secondary_path_file", "secondary_estimate_file",
                     "mu_file"):
            p = getattr(self, name)
            if p and not os.path.isfile(p):
                raise InvalidArgumentError(f"{name} not found: {p}")
        for p in self.noise_file_list:
            if not os.path.isfile(p):
                raise InvalidArgumentError(f"noise file not found: {p}")
        self.band_list
        self.amount_list
        self.strategy_list

    @property
    def band_list(self) -> list[tuple[float, float]]:
        out = []
        for item in filter(None, (s.strip() for s in self.bands_hz.split(";"))):
            lo, sep, hi = item.partition("-")
            try:
                out.append((float(lo), float(hi)))
            except ValueError:
                raise InvalidArgumentError(f"bad band {item!r}; expected low-high") from None
        if not out and not self.noise_file_list:
            raise InvalidArgumentError("no bands and no noise files configured")
        return out

    @property
    def noise_file_list(self) -> list[str]:
        return [s.strip() for s in self.noise_files.split(",") if s.strip()]

    @property
    def amount_list(self) -> list[float]:
        try:
            amounts = [float(s) for s in self.perturb_amounts.split(",") if s.strip()]
        except ValueError:
            raise InvalidArgumentError(f"bad perturb_amounts {self.perturb_amounts!r}") from None
        if any(a < 0 for a in amounts):
            raise InvalidArgumentError("perturb_amounts must be >= 0")
        return amounts

    @property
    def strategy_list(self) -> list[str]:
        names = [s.strip() for s in self.strategies.split(",") if s.strip()]
        if not names:
            raise InvalidArgumentError("no strategies configured")
        return names

    def echo(self) -> dict[str, object]:
        return {f.name: getattr(self, f.name) for f in fields(self)}
