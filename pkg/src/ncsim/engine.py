"""Slotted Monte-Carlo dissemination: network coding vs random selection.

Each slot one transmitter is drawn uniformly from all N nodes and every other
node receives its broadcast independently with probability ``P[tx, u]``.
Trials own their RNG streams, derived from ``(seed, trial index)``, so any
subset of trials can be rerun bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _kernels
from .coding import InformationPacket, SubspaceBuffer, decode
from .galois import get_field
from .radio import ReceptionMatrix

PROTOCOLS = ("nc", "random_selection")
_ALIASES = {"baseline": "random_selection", "random-selection": "random_selection"}


def normalize_protocol(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in PROTOCOLS:
        raise ValueError(f"unknown protocol {name!r}; choose from {PROTOCOLS}")
    return name


@dataclass(frozen=True)
class SimConfig:
    q: int = 8
    r: int = 4
    protocol: str = "nc"
    trials: int = 500
    seed: int = 0
    max_slots: int | None = None  # None -> 50 * N^2
    record_trace: bool = False
    verify_decode: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "protocol", normalize_protocol(self.protocol))
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.r < 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        get_field(self.q)

    def slot_cap(self, n: int) -> int:
        cap = self.max_slots if self.max_slots is not None else 50 * n * n
        if cap < n:
            raise ValueError(f"max_slots={cap} is below N={n}")
        return cap


@dataclass
class TrialResult:
    stopping_time: int
    completed: bool
    dimension_trace: np.ndarray | None = None
    decoded_ok: bool | None = None

    def stage_times(self, n: int) -> list[int]:
        """T_i = first slot with D(t) >= i(N-1), for i = 0..N."""
        if self.dimension_trace is None:
            raise ValueError("trial was run without a dimension trace")
        trace = self.dimension_trace
        return [int(np.argmax(trace >= i * (n - 1))) for i in range(n + 1)]


def trial_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for trial ``index`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def _probs(matrix) -> np.ndarray:
    probs = getattr(matrix, "probs", None)
    if probs is None:
        probs = ReceptionMatrix(matrix).probs
    return np.ascontiguousarray(probs, dtype=np.float64)


def _start(seed: int, n: int, r: int, size: int) -> np.ndarray:
    """Seed the kernel generator and draw the N information packets."""
    rng = np.random.default_rng(seed)
    _kernels.seed(int(rng.integers(0, 2**32)))
    return rng.integers(0, size, size=(n, r), dtype=np.int64)


def run_trial_nc(matrix, config: SimConfig, seed: int) -> TrialResult:
    probs = _probs(matrix)
    n = probs.shape[0]
    ctx = get_field(config.q)
    cap = config.slot_cap(n)
    packets = _start(seed, n, config.r, ctx.size)
    rows = np.zeros((n, n, n + config.r), dtype=_kernels.ELEMENT)
    pivots = np.zeros((n, n), dtype=np.int64)
    dims = np.zeros(n, dtype=np.int64)
    trace = np.zeros(cap + 1 if config.record_trace else 0, dtype=np.int64)
    t = _kernels.nc_trial(probs, packets, rows, pivots, dims, cap, trace, *ctx.kernel_args)
    completed = t >= 0
    result = TrialResult(t if completed else cap, completed)
    if config.record_trace:
        result.dimension_trace = trace[: result.stopping_time + 1].copy()
    if config.verify_decode and completed:
        expected = [InformationPacket(packets[u], u) for u in range(n)]
        result.decoded_ok = all(
            decode(SubspaceBuffer.from_arrays(rows[u], pivots[u], dims[u], config.r, ctx)) == expected
            for u in range(n)
        )
    return result


def run_trial_baseline(matrix, config: SimConfig, seed: int) -> TrialResult:
    probs = _probs(matrix)
    n = probs.shape[0]
    cap = config.slot_cap(n)
    _start(seed, n, config.r, get_field(config.q).size)
    held = np.zeros((n, n), dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    trace = np.zeros(cap + 1 if config.record_trace else 0, dtype=np.int64)
    t = _kernels.baseline_trial(probs, held, counts, cap, trace)
    completed = t >= 0
    result = TrialResult(t if completed else cap, completed)
    if config.record_trace:
        result.dimension_trace = trace[: result.stopping_time + 1].copy()
    if config.verify_decode and completed:
        result.decoded_ok = all(sorted(held[u]) == list(range(n)) for u in range(n))
    return result


def run_trial(matrix, config: SimConfig, seed: int) -> TrialResult:
    if config.protocol == "nc":
        return run_trial_nc(matrix, config, seed)
    return run_trial_baseline(matrix, config, seed)


@dataclass
class ExperimentSummary:
    mean: float
    std_dev: float
    confidence_95: tuple[float, float]
    trials: int
    incomplete_count: int
    degenerate: bool = False
    stopping_times: np.ndarray = field(default=None, repr=False)
    results: list[TrialResult] = field(default=None, repr=False)

    @property
    def completed(self) -> int:
        return self.trials - self.incomplete_count

    @property
    def sem(self) -> float:
        k = self.completed
        return self.std_dev / math.sqrt(k) if k else math.nan


def summarize(times, trials: int, incomplete: int) -> ExperimentSummary:
    times = np.asarray(times, dtype=float)
    k = times.size
    if k == 0:
        nan = math.nan
        return ExperimentSummary(nan, nan, (nan, nan), trials, incomplete, True, times)
    mean = float(times.mean())
    std = float(times.std(ddof=1)) if k > 1 else 0.0
    if k > 1:
        half = float(stats.t.ppf(0.975, k - 1)) * std / math.sqrt(k)
    else:
        half = 0.0
    return ExperimentSummary(mean, std, (mean - half, mean + half), trials, incomplete, False, times)


def run_experiment(matrix, config: SimConfig, keep_results: bool = False) -> ExperimentSummary:
    """Run ``config.trials`` trials and aggregate the completed ones."""
    results = [run_trial(matrix, config, trial_seed(config.seed, i)) for i in range(config.trials)]
    times = [res.stopping_time for res in results if res.completed]
    summary = summarize(times, config.trials, config.trials - len(times))
    if keep_results or config.record_trace or config.verify_decode:
        summary.results = results
    return summary
