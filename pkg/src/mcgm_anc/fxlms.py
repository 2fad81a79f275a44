"""Sample-by-sample FxLMS control loop with pluggable step-size strategies."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DivergenceError, InvalidArgumentError, NumericError
from .plant import Plant
from .signals import ImpulseResponse, Signal, causal_filter

DEFAULT_FILTER_LENGTH = 512
DIVERGENCE_FACTOR = 1e6


@dataclass
class ControlFilter:
    taps: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "ControlFilter":
        if n < 1:
            raise InvalidArgumentError(f"filter length must be >= 1, got {n}")
        return cls(np.zeros(n))

    @property
    def N(self) -> int:
        return self.taps.shape[0]


def control_output(filt: ControlFilter, x_buffer) -> float:
    """y(n) = x(n)^T w(n); ``x_buffer`` is newest-first."""
    buf = np.asarray(x_buffer, dtype=np.float64)
    if buf.shape != filt.taps.shape:
        raise InvalidArgumentError(
            f"delay line length {buf.shape[0]} != filter length {filt.N}"
        )
    return float(np.dot(buf, filt.taps))


def fxlms_update(filt: ControlFilter, mu: float, e: float, xprime_buffer) -> ControlFilter:
    """One FxLMS step ``w + mu * e * x'``; returns a new filter."""
    buf = np.asarray(xprime_buffer, dtype=np.float64)
    if buf.shape != filt.taps.shape:
        raise InvalidArgumentError(
            f"delay line length {buf.shape[0]} != filter length {filt.N}"
        )
    if not np.isfinite(e) or not np.all(np.isfinite(buf)):
        raise NumericError("non-finite error or filtered reference in FxLMS update")
    return ControlFilter(filt.taps + mu * e * buf)


def theoretical_step_size(xprime, L: int) -> float:
    """mu_c = 1 / (P_x * L) with P_x the mean-square of the filtered reference."""
    samples = xprime.samples if isinstance(xprime, Signal) else np.asarray(xprime, dtype=np.float64)
    if samples.size == 0:
        raise InvalidArgumentError("filtered reference is empty")
    if L < 1:
        raise InvalidArgumentError(f"delay L must be >= 1, got {L}")
    power = float(np.mean(samples * samples))
    if power == 0.0:
        raise InvalidArgumentError("filtered reference has zero power")
    return 1.0 / (power * L)


def secondary_delay_estimate(s_hat: ImpulseResponse) -> int:
    """Index of the largest-magnitude tap (first on ties), floored at 1."""
    mag = np.abs(s_hat.taps)
    if not np.any(mag > 0):
        raise InvalidArgumentError("secondary path estimate is all zeros")
    return max(int(np.argmax(mag)), 1)


class StepSizeStrategy(ABC):
    """Chooses mu for each sample of an FxLMS run.

    :meth:`bind` is called once per run with the full filtered reference and
    the plant; it returns a callable mapping the current energy of the
    filtered-reference delay line to that sample's step size. New strategies
    subclass this and implement :meth:`bind`.
    """

    name: str = "strategy"

    @abstractmethod
    def bind(self, xprime: np.ndarray, plant: Plant) -> Callable[[float], float]:
        ...

    @property
    def needs_energy(self) -> bool:
        return False

    def describe(self) -> str:
        return self.name


@dataclass(frozen=True)
class Fixed(StepSizeStrategy):
    mu: float
    name: str = "fixed"

    def __post_init__(self):
        # mu == 0 is accepted: it is the no-adaptation reference run.
        if not (np.isfinite(self.mu) and self.mu >= 0):
            raise InvalidArgumentError(f"fixed step size must be finite and >= 0, got {self.mu}")

    def bind(self, xprime, plant):
        mu = float(self.mu)
        return lambda _energy: mu

    def describe(self) -> str:
        return f"{self.name}(mu={self.mu!r})"


@dataclass(frozen=True)
class Theoretical(StepSizeStrategy):
    """Constant mu_c from the power of the whole run's filtered reference.

    ``L=None`` takes the delay from the plant's secondary-path estimate.
    """

    L: Optional[int] = None
    name: str = "theoretical"

    def __post_init__(self):
        if self.L is not None and self.L < 1:
            raise InvalidArgumentError(f"delay L must be >= 1, got {self.L}")

    def delay_for(self, plant: Plant) -> int:
        return self.L if self.L is not None else secondary_delay_estimate(plant.secondary_estimate)

    def bind(self, xprime, plant):
        mu = theoretical_step_size(xprime, self.delay_for(plant))
        return lambda _energy: mu

    def describe(self) -> str:
        return f"{self.name}(L={self.L if self.L is not None else 'auto'})"


@dataclass(frozen=True)
class Normalized(StepSizeStrategy):
    """FxNLMS: mu(n) = mu_bar / (epsilon + ||x'(n)||^2)."""

    mu_bar: float = 0.1
    epsilon: float = 1e-6
    name: str = "normalized"

    def __post_init__(self):
        if not self.mu_bar > 0:
            raise InvalidArgumentError(f"mu_bar must be > 0, got {self.mu_bar}")
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be > 0, got {self.epsilon}")

    @property
    def needs_energy(self) -> bool:
        return True

    def bind(self, xprime, plant):
        mu_bar, eps = float(self.mu_bar), float(self.epsilon)
        return lambda energy: mu_bar / (eps + energy)

    def describe(self) -> str:
        return f"{self.name}(mu_bar={self.mu_bar!r},epsilon={self.epsilon!r})"


@dataclass
class RunTrace:
    error: Signal
    disturbance: Signal
    control_output: Signal
    final_filter: ControlFilter


def _reversed_padded(values: np.ndarray, pad: int) -> np.ndarray:
    # Newest-first delay line at sample n is out[M-1-n : M-1-n+width].
    return np.concatenate((values[::-1], np.zeros(pad)))


def run_fxlms(plant: Plant, x: Signal, strategy: StepSizeStrategy,
              N: int = DEFAULT_FILTER_LENGTH) -> RunTrace:
    """Simulate feedforward FxLMS over the whole reference ``x``.

    The control filter sees the raw reference; the update uses the reference
    filtered through the plant's secondary-path estimate; the anti-noise
    reaches the error microphone through the *true* secondary path.

    Raises :class:`DivergenceError` on a non-finite error or one exceeding
    ``1e6 * (1 + max|d|)``; the exception carries the partial trace.
    """
    plant._check_rate(x)
    if len(x) == 0:
        raise InvalidArgumentError("reference signal is empty")
    if N < 1:
        raise InvalidArgumentError(f"filter length must be >= 1, got {N}")

    rate = x.sample_rate_hz
    xs = x.samples
    M = xs.shape[0]
    d = causal_filter(xs, plant.primary.taps)
    xp = causal_filter(xs, plant.secondary_estimate.taps)
    s = plant.secondary.taps
    Ls = s.shape[0]

    mu_of = strategy.bind(xp, plant)
    needs_energy = strategy.needs_energy

    x_line = _reversed_padded(xs, N - 1)
    xp_line = _reversed_padded(xp, N - 1)
    y_line = np.zeros(M + Ls - 1)
    w = np.zeros(N)
    e = np.zeros(M)
    guard = DIVERGENCE_FACTOR * (1.0 + float(np.max(np.abs(d))))

    for n in range(M):
        k = M - 1 - n
        x_buf = x_line[k:k + N]
        y_line[k] = np.dot(x_buf, w)
        anti = np.dot(s, y_line[k:k + Ls])
        err = d[n] - anti
        if not (abs(err) <= guard):
            partial = RunTrace(
                Signal(e[:n], rate), Signal(d[:n], rate),
                Signal(y_line[M - n:M][::-1], rate), ControlFilter(w.copy()),
            )
            raise DivergenceError(
                f"FxLMS diverged at sample {n} (|e|={abs(err):.3g})", index=n, partial=partial
            )
        e[n] = err
        xp_buf = xp_line[k:k + N]
        mu = mu_of(np.dot(xp_buf, xp_buf) if needs_energy else 0.0)
        if mu != 0.0 and err != 0.0:
            w += (mu * err) * xp_buf

    y = y_line[:M][::-1]
    return RunTrace(Signal(e, rate), Signal(d, rate), Signal(y, rate), ControlFilter(w))
