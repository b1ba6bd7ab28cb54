"""Iterative state reconstruction by cycling physical imposition operators."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    TOL,
    DimensionError,
    RandomSource,
    as_state,
    canonicalize,
    random_state,
    ray_distance,
    state_to_json,
)
from .imposition import ImpositionData, born_distribution, impose_distribution

__all__ = [
    "ReconstructionConfig",
    "TraceEntry",
    "IterationTrace",
    "RunResult",
    "residual",
    "cycle",
    "detect_stall",
    "reconstruct",
    "orthogonal_restart",
    "contraction_factors",
    "limit_distances",
]

RESTART_POLICIES = ("random", "orthogonal")
ORDERING_POLICIES = ("fixed-cyclic", "random-per-cycle")


@dataclass(frozen=True)
class ReconstructionConfig:
    """Knobs of a reconstruction run. None of the defaults come from theory;
    they are working choices that the CLI exposes."""

    max_cycles: int = 500
    residual_tol: float = 1e-12
    stall_window: int = 20
    stall_factor: float = 0.99
    max_restarts: int = 10
    restart_policy: str = "orthogonal"
    ordering_policy: str = "fixed-cyclic"
    rng: RandomSource = field(default_factory=lambda: RandomSource(0))

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be >= 1")
        if self.stall_window < 2:
            raise ValueError("stall_window must be >= 2")
        if not 0 < self.stall_factor <= 1:
            raise ValueError("stall_factor must lie in (0, 1]")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be >= 0")
        if self.restart_policy not in RESTART_POLICIES:
            raise ValueError(f"restart_policy must be one of {RESTART_POLICIES}")
        if self.ordering_policy not in ORDERING_POLICIES:
            raise ValueError(f"ordering_policy must be one of {ORDERING_POLICIES}")

    def to_dict(self) -> dict:
        return {
            "max_cycles": self.max_cycles,
            "residual_tol": self.residual_tol,
            "stall_window": self.stall_window,
            "stall_factor": self.stall_factor,
            "max_restarts": self.max_restarts,
            "restart_policy": self.restart_policy,
            "ordering_policy": self.ordering_policy,
            "rng": self.rng.to_dict(),
        }


@dataclass(frozen=True)
class TraceEntry:
    cycle: int
    residual: float
    distance: Optional[float] = None
    start: int = 0


@dataclass
class IterationTrace:
    """Per-cycle record of a run; ``cycle`` counts cycles across restarts."""

    entries: list[TraceEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def residuals(self) -> list[float]:
        return [e.residual for e in self.entries]

    @property
    def distances(self) -> list[Optional[float]]:
        return [e.distance for e in self.entries]

    def for_start(self, start: int) -> "IterationTrace":
        return IterationTrace([e for e in self.entries if e.start == start])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cycle", "residual", "distance"])
        for e in self.entries:
            w.writerow([e.cycle, f"{e.residual:.12g}", "" if e.distance is None else f"{e.distance:.12g}"])
        return buf.getvalue()


@dataclass
class RunResult:
    final_state: np.ndarray
    trace: IterationTrace
    restarts_used: int
    status: str
    contraction_estimate: float
    initial_states: list[np.ndarray] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def final_residual(self) -> float:
        return self.trace.entries[-1].residual if self.trace.entries else float("inf")

    def to_dict(self, config: ReconstructionConfig | None = None) -> dict:
        out = {
            "status": self.status,
            "final_state": state_to_json(self.final_state),
            "final_residual": self.final_residual,
            "restarts_used": self.restarts_used,
            "cycles": len(self.trace),
            "contraction_estimate": self.contraction_estimate,
            "trace": [[e.cycle, e.residual] for e in self.trace.entries],
        }
        if config is not None:
            out["config"] = config.to_dict()
        return out


def _check_data_set(data_set: Sequence[ImpositionData]) -> int:
    if not data_set:
        raise ValueError("at least one observable is required")
    dims = {d.dim for d in data_set}
    if len(dims) != 1:
        raise DimensionError(f"observables of different dimensions: {sorted(dims)}")
    return dims.pop()


def residual(s, data_set: Sequence[ImpositionData]) -> float:
    """Largest L-infinity gap between the distributions of ``s`` and the
    measured ones, over all observables."""
    dim = _check_data_set(data_set)
    s = as_state(s, dim=dim)
    return float(max(np.max(np.abs(born_distribution(d.basis, s) - d.probs)) for d in data_set))


def cycle(s, data_set: Sequence[ImpositionData], order: Sequence[int] | None = None) -> np.ndarray:
    """Apply each imposition operator once, in ``order`` (default: as given)."""
    _check_data_set(data_set)
    if order is None:
        order = range(len(data_set))
    for i in order:
        s = impose_distribution(data_set[i], s)
    return s


def detect_stall(residuals: Sequence[float] | IterationTrace, config: ReconstructionConfig) -> bool:
    """True when the residual shrank by less than ``stall_factor**stall_window``
    over the last ``stall_window`` cycles. Too short a history never stalls."""
    if isinstance(residuals, IterationTrace):
        residuals = residuals.residuals
    w = config.stall_window
    if len(residuals) <= w:
        return False
    old, new = residuals[-1 - w], residuals[-1]
    if old <= 0:
        return False
    return new / old > config.stall_factor**w


def orthogonal_restart(failed_start, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector in the orthogonal complement of ``failed_start``."""
    u = as_state(failed_start)
    for _ in range(10):
        v = random_state(u.size, rng)
        v = v - u * np.vdot(u, v)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            return v / norm
    raise RuntimeError("could not draw a vector orthogonal to the failed start")


def contraction_factors(distances: Sequence[float], floor: float = 1e-9) -> list[float]:
    """Per-cycle ratios d_n / d_{n+1}, skipping steps that end below ``floor``
    where rounding dominates."""
    d = list(distances)
    return [d[i] / d[i + 1] for i in range(len(d) - 1) if d[i + 1] > floor and d[i] > 0]


def _contraction_estimate(residuals: Sequence[float]) -> float:
    ratios = contraction_factors(residuals, floor=1e-15)
    return float(np.median(ratios)) if ratios else float("nan")


def reconstruct(
    data_set: Sequence[ImpositionData],
    config: ReconstructionConfig | None = None,
    *,
    reference=None,
    initial_state=None,
) -> RunResult:
    """Cycle the imposition operators from a random start until the measured
    distributions are reproduced.

    A start is abandoned when :func:`detect_stall` fires; the run then restarts
    per ``config.restart_policy``. ``max_cycles`` bounds the total number of
    cycles across all starts. When ``reference`` is given, every trace entry
    records the ray distance to it.
    """
    config = config or ReconstructionConfig()
    dim = _check_data_set(data_set)
    if reference is not None:
        reference = as_state(reference, dim=dim, name="reference")
    rng = config.rng.generator()
    n_obs = len(data_set)

    start_state = as_state(initial_state, dim=dim) if initial_state is not None else random_state(dim, rng)
    starts = [start_state]
    trace = IterationTrace()
    s = start_state
    start = 0
    start_residuals: list[float] = []
    status = "failed"
    total = 0

    while total < config.max_cycles:
        if config.ordering_policy == "random-per-cycle":
            order = rng.permutation(n_obs)
        else:
            order = range(n_obs)
        s = cycle(s, data_set, order)
        total += 1
        r = residual(s, data_set)
        dist = ray_distance(s, reference) if reference is not None else None
        trace.entries.append(TraceEntry(total, r, dist, start))
        start_residuals.append(r)
        if r <= config.residual_tol:
            status = "converged"
            break
        if detect_stall(start_residuals, config):
            if start >= config.max_restarts:
                break
            start += 1
            if config.restart_policy == "orthogonal":
                s = orthogonal_restart(starts[-1], rng)
            else:
                s = random_state(dim, rng)
            starts.append(s)
            start_residuals = []

    return RunResult(
        final_state=canonicalize(s),
        trace=trace,
        restarts_used=start,
        status=status,
        contraction_estimate=_contraction_estimate(start_residuals),
        initial_states=starts,
    )


def limit_distances(data_set: Sequence[ImpositionData], config: ReconstructionConfig | None = None) -> tuple[RunResult, list[float]]:
    """Run a reconstruction, then replay it (runs are deterministic) measuring
    the distance of every iterate of the final start to the limit state."""
    config = config or ReconstructionConfig()
    first = reconstruct(data_set, config)
    replay = reconstruct(data_set, config, reference=first.final_state)
    last = replay.trace.for_start(replay.restarts_used)
    d0 = ray_distance(replay.initial_states[-1], first.final_state)
    return replay, [d0] + [e.distance for e in last.entries]
