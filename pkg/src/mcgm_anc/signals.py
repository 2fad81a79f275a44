"""Signal primitives: causal FIR convolution, bandpass design, seeded noise
and synthetic acoustic paths.

All randomness comes from numpy's PCG64 bit generator (PCG-XSL-RR 128/64),
seeded explicitly, so every generator here is bit-reproducible for a given
seed and numpy release.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import InvalidArgumentError

IR_LABELS = ("primary", "secondary", "secondary_estimate", "control", "filter")

Seed = Union[int, Sequence[int]]


def rng_from_seed(seed: Seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _as_finite_array(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).ravel()
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{what} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Signal:
    """A finite real-valued sample sequence at a fixed sample rate."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        object.__setattr__(self, "samples", _as_finite_array(self.samples, "signal"))
        if not self.sample_rate_hz > 0:
            raise InvalidArgumentError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.shape[0]

    def with_samples(self, samples) -> "Signal":
        return Signal(samples, self.sample_rate_hz)


@dataclass(frozen=True)
class ImpulseResponse:
    """FIR tap vector tagged with the role it plays in the plant."""

    taps: np.ndarray
    label: str = field(default="filter")

    def __post_init__(self):
        taps = _as_finite_array(self.taps, "impulse response")
        if taps.shape[0] < 1:
            raise InvalidArgumentError("impulse response needs at least one tap")
        if self.label not in IR_LABELS:
            raise InvalidArgumentError(f"unknown impulse response label {self.label!r}")
        object.__setattr__(self, "taps", taps)

    def __len__(self) -> int:
        return self.taps.shape[0]

    def relabel(self, label: str) -> "ImpulseResponse":
        return ImpulseResponse(self.taps, label)


def causal_filter(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Same-length causal convolution on raw arrays (zero initial state)."""
    n = x.shape[0]
    # np.convolve is a direct-form sum; only the first n outputs are causal-valid.
    return np.convolve(x, h)[:n]


def convolve(signal: Signal, h: ImpulseResponse) -> Signal:
    """Filter ``signal`` through ``h`` with zero initial state.

    The output has the same length and sample rate as the input:
    ``out[n] = sum_i h[i] * x[n - i]`` with ``x[m] = 0`` for ``m < 0``.
    """
    if len(signal) == 0:
        raise InvalidArgumentError("cannot convolve an empty signal")
    if len(h) == 0:
        raise InvalidArgumentError("cannot convolve with empty taps")
    return signal.with_samples(causal_filter(signal.samples, h.taps))


def design_bandpass_fir(low_hz: float, high_hz: float, sample_rate_hz: float,
                        num_taps: int = 255) -> ImpulseResponse:
    """Linear-phase windowed-sinc bandpass.

    Built as the difference of two Hamming-windowed lowpass sincs, then
    scaled to unit gain at the geometric band centre.
    """
    nyquist = sample_rate_hz / 2.0
    if not (0.0 < low_hz < high_hz < nyquist):
        raise InvalidArgumentError(
            f"band edges must satisfy 0 < low < high < {nyquist:g} Hz, got ({low_hz}, {high_hz})"
        )
    if num_taps < 31 or num_taps % 2 == 0:
        raise InvalidArgumentError(f"num_taps must be odd and >= 31, got {num_taps}")

    m = np.arange(num_taps) - (num_taps - 1) / 2.0
    f_hi = high_hz / sample_rate_hz
    f_lo = low_hz / sample_rate_hz
    ideal = 2.0 * f_hi * np.sinc(2.0 * f_hi * m) - 2.0 * f_lo * np.sinc(2.0 * f_lo * m)
    taps = ideal * np.hamming(num_taps)

    f_mid = np.sqrt(low_hz * high_hz) / sample_rate_hz
    gain = np.abs(np.sum(taps * np.exp(-2j * np.pi * f_mid * np.arange(num_taps))))
    taps = taps / gain
    # Enforce exact symmetry against rounding in the sinc evaluation.
    taps = 0.5 * (taps + taps[::-1])
    return ImpulseResponse(taps, "filter")


def gen_white_noise(length: int, seed: Seed, sample_rate_hz: float = 16000.0) -> Signal:
    """Zero-mean, unit-variance Gaussian noise determined entirely by ``seed``."""
    if length <= 0:
        raise InvalidArgumentError(f"length must be positive, got {length}")
    return Signal(rng_from_seed(seed).standard_normal(length), sample_rate_hz)


def gen_synthetic_path(length: int, delay_samples: int, decay: float, seed: int,
                       label: str = "filter") -> ImpulseResponse:
    """Delayed, exponentially decaying random impulse response.

    Taps before ``delay_samples`` are zero. The tap at the delay is +-1 and
    every later tap ``i`` is uniform in ``(-1, 1)`` scaled by
    ``decay ** (i - delay_samples)``, so the peak magnitude sits exactly at the
    delay and equals one.
    """
    if length < 1:
        raise InvalidArgumentError(f"length must be >= 1, got {length}")
    if not (0 <= delay_samples < length):
        raise InvalidArgumentError(
            f"delay_samples must lie in [0, {length}), got {delay_samples}"
        )
    if not (0.0 < decay < 1.0):
        raise InvalidArgumentError(f"decay must lie in (0, 1), got {decay}")

    rng = rng_from_seed(seed)
    tail = length - delay_samples
    values = rng.uniform(-1.0, 1.0, size=tail)
    values[0] = 1.0 if values[0] >= 0.0 else -1.0
    envelope = decay ** np.arange(tail)
    taps = np.zeros(length)
    taps[delay_samples:] = values * envelope
    return ImpulseResponse(taps, label)
