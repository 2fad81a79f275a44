"""Experiment harness: broadband datasets, temporal train/test split,
windowed noise-reduction metric, strategy comparison and the
secondary-path robustness sweep."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DivergenceError, InvalidArgumentError
from .fxlms import DEFAULT_FILTER_LENGTH, RunTrace, StepSizeStrategy, run_fxlms
from .plant import Plant, perturb_secondary
from .signals import Signal, causal_filter, design_bandpass_fir, gen_white_noise

DEFAULT_BANDS_HZ = ((600.0, 1800.0), (1500.0, 4000.0), (3500.0, 5000.0), (4400.0, 6000.0))
DEFAULT_WINDOW_SECONDS = 0.5
NR_CAP_DB = 200.0
# 255 taps leak about 1% of the 600-1800 Hz band through the transition skirts.
DATASET_BANDPASS_TAPS = 511


@dataclass
class NrSeries:
    window_seconds: float
    values_db: np.ndarray

    def __post_init__(self):
        if not self.window_seconds > 0:
            raise InvalidArgumentError(f"window_seconds must be > 0, got {self.window_seconds}")
        self.values_db = np.asarray(self.values_db, dtype=np.float64)

    def __len__(self) -> int:
        return self.values_db.shape[0]

    @property
    def first_db(self) -> float:
        return float(self.values_db[0]) if len(self) else float("-inf")

    @property
    def last_db(self) -> float:
        return float(self.values_db[-1]) if len(self) else float("-inf")


def noise_reduction_level(d: Signal, e: Signal,
                          window_seconds: float = DEFAULT_WINDOW_SECONDS) -> NrSeries:
    """Per-window attenuation ``10 log10(sum d^2 / sum e^2)`` in dB.

    Only complete windows of ``floor(window_seconds * rate)`` samples are
    reported. A window with no residual error but some disturbance reports
    the 200 dB cap; a window with no disturbance reports 0 dB.
    """
    if len(d) != len(e):
        raise InvalidArgumentError(f"length mismatch: d has {len(d)}, e has {len(e)}")
    if d.sample_rate_hz != e.sample_rate_hz:
        raise InvalidArgumentError("sample rate mismatch between d and e")
    W = int(np.floor(window_seconds * d.sample_rate_hz))
    if W < 1:
        raise InvalidArgumentError("window shorter than one sample")
    count = len(d) // W
    dd = d.samples[:count * W].reshape(count, W)
    ee = e.samples[:count * W].reshape(count, W)
    pd = np.sum(dd * dd, axis=1)
    pe = np.sum(ee * ee, axis=1)
    out = np.zeros(count)
    for i in range(count):
        if pd[i] == 0.0:
            out[i] = 0.0
        elif pe[i] == 0.0:
            out[i] = NR_CAP_DB
        else:
            out[i] = min(10.0 * np.log10(pd[i] / pe[i]), NR_CAP_DB)
    return NrSeries(window_seconds, out)


def split_dataset(signals: Sequence[Signal], train_fraction: float = 0.7):
    """Split every signal in time: the leading fraction trains, the rest tests."""
    if not 0.0 < train_fraction < 1.0:
        raise InvalidArgumentError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    train, test = [], []
    for i, sig in enumerate(signals):
        cut = int(np.floor(train_fraction * len(sig)))
        if cut < 1 or cut >= len(sig):
            raise InvalidArgumentError(
                f"signal {i} ({len(sig)} samples) is too short to split at {train_fraction}"
            )
        train.append(sig.with_samples(sig.samples[:cut]))
        test.append(sig.with_samples(sig.samples[cut:]))
    return train, test


def broadband_dataset(sample_rate_hz: float = 16000.0,
                      bands: Sequence[tuple[float, float]] = DEFAULT_BANDS_HZ,
                      duration_seconds: float = 10.0, seed: int = 0,
                      num_taps: int = DATASET_BANDPASS_TAPS) -> list[Signal]:
    """One unit-RMS band-limited noise signal per ``(low, high)`` band."""
    length = int(round(duration_seconds * sample_rate_hz))
    out = []
    for i, (low, high) in enumerate(bands):
        h = design_bandpass_fir(low, high, sample_rate_hz, num_taps)
        white = gen_white_noise(length, [seed, i], sample_rate_hz)
        x = causal_filter(white.samples, h.taps)
        x = x / np.sqrt(np.mean(x * x))
        out.append(Signal(x, sample_rate_hz))
    return out


def _digest(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype="<f8").tobytes()).hexdigest()[:16]


@dataclass
class StrategyOutcome:
    label: str
    description: str
    nr: NrSeries
    diverged: bool
    diverged_at: Optional[int]
    trace: RunTrace
    disturbance_digest: str

    @property
    def first_db(self) -> float:
        return self.nr.first_db

    @property
    def final_db(self) -> float:
        # A diverged run never reaches the final window.
        return float("-inf") if self.diverged else self.nr.last_db


@dataclass
class ComparisonReport:
    outcomes: list[StrategyOutcome]
    reference_digest: str
    metadata: dict = field(default_factory=dict)

    @property
    def any_diverged(self) -> bool:
        return any(o.diverged for o in self.outcomes)

    def outcome(self, label: str) -> StrategyOutcome:
        for o in self.outcomes:
            if o.label == label:
                return o
        raise KeyError(label)


StrategyEntry = Union[StepSizeStrategy, tuple[str, StepSizeStrategy]]


def _labelled(strategies: Sequence[StrategyEntry]) -> list[tuple[str, StepSizeStrategy]]:
    out = []
    for entry in strategies:
        if isinstance(entry, tuple):
            out.append(entry)
        else:
            out.append((entry.name, entry))
    return out


def compare_strategies(plant: Plant, test_signal: Signal, strategies: Sequence[StrategyEntry],
                       N: int = DEFAULT_FILTER_LENGTH,
                       window_seconds: float = DEFAULT_WINDOW_SECONDS,
                       metadata: Optional[dict] = None) -> ComparisonReport:
    """Run every strategy on the same reference and score it.

    Strategies may be given bare or as ``(label, strategy)`` pairs. A
    divergent run is scored on its partial trace and flagged; it does not
    abort the comparison.
    """
    entries = _labelled(strategies)
    if not entries:
        raise InvalidArgumentError("no strategies to compare")
    outcomes = []
    for label, strategy in entries:
        try:
            trace = run_fxlms(plant, test_signal, strategy, N)
            diverged, at = False, None
        except DivergenceError as exc:
            trace, diverged, at = exc.partial, True, exc.index
        nr = noise_reduction_level(trace.disturbance, trace.error, window_seconds)
        outcomes.append(StrategyOutcome(label, strategy.describe(), nr, diverged, at, trace,
                                        _digest(trace.disturbance.samples)))
    meta = dict(metadata or {})
    meta.setdefault("filter_length", N)
    meta.setdefault("window_seconds", window_seconds)
    return ComparisonReport(outcomes, _digest(test_signal.samples), meta)


def robustness_sweep(plant: Plant, test_signal: Signal,
                     strategy: Union[StrategyEntry, Sequence[StrategyEntry]],
                     amounts: Sequence[float], seed: int,
                     N: int = DEFAULT_FILTER_LENGTH,
                     window_seconds: float = DEFAULT_WINDOW_SECONDS) -> list[ComparisonReport]:
    """One comparison per perturbation amount; the estimate stays unperturbed."""
    entries = list(strategy) if isinstance(strategy, list) else [strategy]
    reports = []
    for amount in amounts:
        if amount < 0:
            raise InvalidArgumentError(f"perturbation amounts must be >= 0, got {amount}")
        perturbed = perturb_secondary(plant, amount, seed)
        reports.append(compare_strategies(perturbed, test_signal, entries, N, window_seconds,
                                          {"perturbation": amount, "perturb_seed": seed}))
    return reports
