"""Monte Carlo gradient meta-learning of a fixed FxLMS step size.

Each task is a length-``N`` slice of (reference, disturbance) plus the
reference filtered through the secondary-path estimate. The FxLMS recursion
is unrolled over the task from a zero filter and a zero-padded delay line;
the forgetting-weighted squared error is differentiated with respect to mu,
and mu takes one clamped SGD step per task.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError, NumericError
from .plant import Plant
from .signals import ImpulseResponse, Signal, causal_filter, rng_from_seed

GRADIENT_MODES = ("frozen", "exact")


@dataclass(frozen=True)
class Task:
    x: np.ndarray
    d: np.ndarray
    xprime: np.ndarray

    def __post_init__(self):
        n = len(self.x)
        if len(self.d) != n or len(self.xprime) != n:
            raise InvalidArgumentError(
                f"task arrays must share one length, got {len(self.x)}, {len(self.d)}, {len(self.xprime)}"
            )

    @property
    def N(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class TrainerConfig:
    K: int = 2000
    lam: float = 0.5
    alpha: float = 1e-9
    mu_init: float = 0.0
    mu_min: float = 0.0
    mu_max: float = 1.0
    N: int = 512
    seed: int = 0
    gradient: str = "frozen"

    def __post_init__(self):
        if self.K < 1:
            raise InvalidArgumentError(f"K must be >= 1, got {self.K}")
        if not 0.0 < self.lam < 1.0:
            raise InvalidArgumentError(f"forgetting factor must lie in (0, 1), got {self.lam}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidArgumentError(f"learning rate must lie in (0, 1), got {self.alpha}")
        if not 0.0 <= self.mu_min <= self.mu_init <= self.mu_max:
            raise InvalidArgumentError(
                "need 0 <= mu_min <= mu_init <= mu_max, got "
                f"{self.mu_min}, {self.mu_init}, {self.mu_max}"
            )
        if self.N < 1:
            raise InvalidArgumentError(f"N must be >= 1, got {self.N}")
        if self.gradient not in GRADIENT_MODES:
            raise InvalidArgumentError(f"gradient mode must be one of {GRADIENT_MODES}")


@dataclass
class TrainerResult:
    mu_final: float
    mu_curve: np.ndarray
    loss_curve: np.ndarray
    config: TrainerConfig = field(default_factory=TrainerConfig)
    dataset_digest: str = ""

    def echo(self) -> dict:
        return asdict(self.config)


def input_vector(xprime, t: int) -> np.ndarray:
    """Zero-padded delay line at unroll step ``t``: ``[x'(t), ..., x'(0), 0, ..., 0]``."""
    xp = np.asarray(xprime, dtype=np.float64)
    n = xp.shape[0]
    if not 0 <= t <= n - 1:
        raise InvalidArgumentError(f"t must lie in [0, {n - 1}], got {t}")
    u = np.zeros(n)
    u[:t + 1] = xp[t::-1]
    return u


def make_task(x_segment, d_segment, s_hat: ImpulseResponse) -> Task:
    x = x_segment.samples if isinstance(x_segment, Signal) else np.asarray(x_segment, dtype=np.float64)
    d = d_segment.samples if isinstance(d_segment, Signal) else np.asarray(d_segment, dtype=np.float64)
    if x.shape != d.shape:
        raise InvalidArgumentError(f"segment lengths differ: {x.shape[0]} vs {d.shape[0]}")
    if x.shape[0] == 0:
        raise InvalidArgumentError("segments are empty")
    return Task(np.array(x), np.array(d), causal_filter(x, s_hat.taps))


def unroll_task(task: Task, mu: float, lam: float, mode: str = "frozen",
                observer=None) -> tuple[float, float]:
    """Forgetting-weighted loss of one unrolled task and its derivative in mu.

    ``mode="frozen"`` accumulates ``dw/dmu`` as ``sum_{i<t} e(i) u(i)``, which
    treats the past errors as constants (exact at mu = 0, first order in mu
    otherwise). ``mode="exact"`` carries the full chain-rule recursion
    ``g <- g + e u - mu (u.g) u`` and yields the true derivative.

    ``observer(t, e, u, g)``, if given, sees each step before the updates;
    ``g`` is the live accumulator for ``dw(t)/dmu`` and must not be mutated.

    Cost is O(N^2).
    """
    if mode not in GRADIENT_MODES:
        raise InvalidArgumentError(f"gradient mode must be one of {GRADIENT_MODES}")
    if not np.isfinite(mu):
        raise InvalidArgumentError(f"mu must be finite, got {mu}")
    N = task.N
    line = np.concatenate((task.xprime[::-1], np.zeros(N - 1)))
    d = task.d
    w = np.zeros(N)
    g = np.zeros(N)
    weights = lam ** np.arange(N - 1, -1, -1, dtype=np.float64)
    exact = mode == "exact"

    loss = 0.0
    grad = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(N):
            u = line[N - 1 - t:2 * N - 1 - t]
            e = d[t] - np.dot(u, w)
            ug = np.dot(u, g)
            if observer is not None:
                observer(t, e, u, g)
            loss += weights[t] * e * e
            if t >= 1:
                grad -= 2.0 * weights[t] * e * ug
            if not (np.isfinite(loss) and np.isfinite(grad)):
                raise NumericError(f"non-finite value while unrolling at t={t}")
            if e != 0.0:
                w += (mu * e) * u
            if exact:
                g += (e - mu * ug) * u
            elif e != 0.0:
                g += e * u
    return float(loss), float(grad)


def task_loss(task: Task, mu: float, lam: float) -> float:
    return unroll_task(task, mu, lam)[0]


def sgd_step(mu: float, grad: float, alpha: float, mu_min: float, mu_max: float) -> float:
    """``mu - alpha/2 * grad`` clamped into ``[mu_min, mu_max]``."""
    return float(min(max(mu - 0.5 * alpha * grad, mu_min), mu_max))


def dataset_digest(dataset: Sequence[tuple[Signal, Signal]]) -> str:
    h = hashlib.sha256()
    for x, d in dataset:
        h.update(np.ascontiguousarray(x.samples, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(d.samples, dtype="<f8").tobytes())
        h.update(repr(x.sample_rate_hz).encode())
    return h.hexdigest()[:16]


def sample_task(dataset: Sequence[tuple[Signal, Signal]], s_hat: ImpulseResponse,
                N: int, rng: np.random.Generator) -> Task:
    """Uniform pick of a dataset pair, then a uniform start offset."""
    idx = int(rng.integers(len(dataset)))
    x, d = dataset[idx]
    start = int(rng.integers(len(x) - N + 1))
    return make_task(x.samples[start:start + N], d.samples[start:start + N], s_hat)


def train(dataset: Sequence[tuple[Signal, Signal]], plant: Plant,
          config: TrainerConfig, progress=None) -> TrainerResult:
    """Run K Monte Carlo tasks of SGD on mu.

    ``progress``, if given, is called as ``progress(k, mu, loss)`` after each
    task.
    """
    if len(dataset) == 0:
        raise InvalidArgumentError("training dataset is empty")
    N = config.N
    for i, (x, d) in enumerate(dataset):
        if len(x) != len(d):
            raise InvalidArgumentError(f"dataset pair {i}: reference and disturbance lengths differ")
        if len(x) < N:
            raise InvalidArgumentError(f"dataset pair {i} has {len(x)} samples, need >= N={N}")

    rng = rng_from_seed(config.seed)
    s_hat = plant.secondary_estimate
    mu = float(config.mu_init)
    mu_curve = np.empty(config.K + 1)
    loss_curve = np.empty(config.K)
    mu_curve[0] = mu
    for k in range(config.K):
        task = sample_task(dataset, s_hat, N, rng)
        loss, grad = unroll_task(task, mu, config.lam, config.gradient)
        mu = sgd_step(mu, grad, config.alpha, config.mu_min, config.mu_max)
        mu_curve[k + 1] = mu
        loss_curve[k] = loss
        if progress is not None:
            progress(k, mu, loss)
    return TrainerResult(mu, mu_curve, loss_curve, config, dataset_digest(dataset))


def loss_scan(tasks: Sequence[Task], mus, lam: float) -> np.ndarray:
    """Mean task loss at each mu on a grid (for inspecting the loss shape).

    Grid points where any task overflows report ``inf``.
    """
    mus = np.asarray(mus, dtype=np.float64)
    out = np.empty(mus.shape[0])
    for j, mu in enumerate(mus):
        try:
            out[j] = np.mean([task_loss(t, float(mu), lam) for t in tasks])
        except NumericError:
            out[j] = np.inf
    return out


def is_unimodal(values) -> bool:
    """True when the sequence decreases (weakly) then increases (weakly)."""
    v = np.asarray(values, dtype=np.float64)
    v = np.where(np.isfinite(v), v, np.finfo(np.float64).max)
    if v.size < 3:
        return True
    i = int(np.argmin(v))
    return bool(np.all(np.diff(v[:i + 1]) <= 0) and np.all(np.diff(v[i:]) >= 0))
