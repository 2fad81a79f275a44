"""Simulated feedforward ANC environment: primary path, true secondary path and
the secondary-path estimate used for filtering the reference."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError
from .signals import ImpulseResponse, Signal, convolve, gen_synthetic_path, rng_from_seed

DEFAULT_PRIMARY_LENGTH = 512
DEFAULT_SECONDARY_LENGTH = 256


@dataclass(frozen=True)
class Plant:
    primary: ImpulseResponse
    secondary: ImpulseResponse
    secondary_estimate: Optional[ImpulseResponse] = None
    sample_rate_hz: float = 16000.0
    allow_estimate_length_mismatch: bool = False

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise InvalidArgumentError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        object.__setattr__(self, "primary", self.primary.relabel("primary"))
        object.__setattr__(self, "secondary", self.secondary.relabel("secondary"))
        est = self.secondary_estimate
        if est is None:
            est = self.secondary
        object.__setattr__(self, "secondary_estimate", est.relabel("secondary_estimate"))
        if (len(self.secondary_estimate) != len(self.secondary)
                and not self.allow_estimate_length_mismatch):
            raise InvalidArgumentError(
                "secondary_estimate length differs from secondary; "
                "pass allow_estimate_length_mismatch=True to override"
            )

    def _check_rate(self, x: Signal) -> None:
        if x.sample_rate_hz != self.sample_rate_hz:
            raise InvalidArgumentError(
                f"signal sample rate {x.sample_rate_hz} Hz != plant rate {self.sample_rate_hz} Hz"
            )


def synthetic_plant(sample_rate_hz: float = 16000.0, *,
                    primary_length: int = DEFAULT_PRIMARY_LENGTH,
                    primary_delay: int = 48,
                    primary_decay: float = 0.98,
                    secondary_length: int = DEFAULT_SECONDARY_LENGTH,
                    secondary_delay: int = 16,
                    secondary_decay: float = 0.8,
                    gain: float = 0.3,
                    seed: int = 0) -> Plant:
    """Plant built from :func:`gen_synthetic_path` with independent seeds.

    Both unit-peak paths are scaled by ``gain`` (acoustic paths attenuate).
    The gain also sets how fast mu moves under a fixed meta learning rate,
    since the meta-gradient scales with the fourth power of signal level.
    """
    if not gain > 0:
        raise InvalidArgumentError(f"gain must be > 0, got {gain}")
    primary = gen_synthetic_path(primary_length, primary_delay, primary_decay, seed, "primary")
    secondary = gen_synthetic_path(secondary_length, secondary_delay, secondary_decay,
                                   seed + 1, "secondary")
    return Plant(ImpulseResponse(gain * primary.taps, "primary"),
                 ImpulseResponse(gain * secondary.taps, "secondary"),
                 sample_rate_hz=sample_rate_hz)


def disturbance(plant: Plant, x: Signal) -> Signal:
    """d(n): the reference propagated through the primary path."""
    plant._check_rate(x)
    return convolve(x, plant.primary)


def filtered_reference(plant: Plant, x: Signal) -> Signal:
    """x'(n): the reference filtered through the secondary-path *estimate*."""
    plant._check_rate(x)
    return convolve(x, plant.secondary_estimate)


def perturb_secondary(plant: Plant, relative_amount: float, seed: int) -> Plant:
    """Return a plant whose true secondary path is ``s + delta``.

    ``delta`` is seeded Gaussian noise, mean-removed and rescaled so that
    ``||delta|| / ||s|| == relative_amount``. The estimate stays at the
    original ``s``; the input plant is left untouched.
    """
    if not relative_amount >= 0:
        raise InvalidArgumentError(f"relative_amount must be >= 0, got {relative_amount}")
    s = plant.secondary.taps
    if relative_amount == 0:
        return replace(plant, secondary_estimate=plant.secondary_estimate)

    delta = rng_from_seed(seed).standard_normal(s.shape[0])
    if s.shape[0] > 1:
        delta = delta - delta.mean()
    delta *= relative_amount * np.linalg.norm(s) / np.linalg.norm(delta)
    perturbed = ImpulseResponse(s + delta, "secondary")
    return replace(plant, secondary=perturbed, secondary_estimate=plant.secondary_estimate)
