"""Sine-cosine population optimizer.

Each agent oscillates toward (or around) the best position found so far,
with a step amplitude that decays linearly to zero over the run.  Every
agent owns its own child random stream, so results do not depend on the
order in which fitness evaluations happen.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError
from .numerics import RngStream


def r1_schedule(a, t, T):
    """Step-amplitude at iteration t: decays linearly from a (t=0) to 0 (t=T)."""
    if T < 1:
        raise DomainError(f"iteration budget must be >= 1, got {T}")
    if not 0 <= t <= T:
        raise DomainError(f"iteration {t} outside [0, {T}]")
    return a - t * a / T


def _bounds_arrays(bounds):
    b = np.asarray(bounds, dtype=np.float64)
    if b.ndim != 2 or b.shape[1] != 2:
        raise ShapeError(f"bounds must be a (dim, 2) array, got shape {b.shape}")
    if np.any(b[:, 0] >= b[:, 1]):
        raise DomainError("every bound must satisfy lo < hi")
    return b[:, 0], b[:, 1]


def update_position(x, p, r1, stream, bounds):
    """Move one agent relative to destination p and clamp to the box.

    Per dimension: draw r2 in [0, 2*pi], r3 in [0, 2], r4 in [0, 1]; step by
    r1*sin(r2)*|r3*p - x| when r4 < 0.5, else the cosine form.
    """
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if x.shape != p.shape:
        raise ShapeError(f"agent shape {x.shape} != destination shape {p.shape}")
    lo, hi = _bounds_arrays(bounds)
    draws = stream.uniform(0.0, 1.0, (3, x.size))
    r2 = 2.0 * np.pi * draws[0]
    r3 = 2.0 * draws[1]
    r4 = draws[2]
    wave = np.where(r4 < 0.5, np.sin(r2), np.cos(r2))
    step = r1 * wave * np.abs(r3 * p - x)
    return np.clip(x + step, lo, hi)


@dataclass
class ScaConfig:
    population: int = 50
    max_iterations: int = 10
    a: float = 2.0
    bounds: object = None  # sequence of (lo, hi) pairs, one per dimension
    loss_threshold: float | None = None
    seed: int = 0
    track_agent: int = 0
    record_search_history: bool = False

    def __post_init__(self):
        if self.population < 2:
            raise DomainError(f"population must be >= 2, got {self.population}")
        if self.max_iterations < 1:
            raise DomainError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.a <= 0:
            raise DomainError(f"a must be > 0, got {self.a}")
        if self.bounds is not None:
            _bounds_arrays(self.bounds)


@dataclass
class DiagnosticsLog:
    convergence_curve: list = field(default_factory=list)
    average_fitness_history: list = field(default_factory=list)
    trajectory: list = field(default_factory=list)
    search_history: list | None = None

    @property
    def iterations(self):
        return len(self.convergence_curve)


@dataclass
class ScaResult:
    best_position: np.ndarray
    best_fitness: float
    diagnostics: DiagnosticsLog


def optimize(objective, config):
    """Minimize objective over the configured box.

    Stops after max_iterations evaluation rounds, or as soon as the best
    fitness reaches loss_threshold.  Non-finite objective values count as
    +inf for the offending agent.  Fixed seed implies identical results.
    """
    if config.bounds is None:
        raise DomainError("config.bounds must be set before optimizing")
    lo, hi = _bounds_arrays(config.bounds)
    dim = lo.size
    pop = config.population
    T = config.max_iterations

    root = RngStream(config.seed)
    streams = [root.child(i) for i in range(pop)]
    X = np.stack([lo + s.uniform(0.0, 1.0, dim) * (hi - lo) for s in streams])

    def _eval(x):
        v = float(objective(x))
        return v if math.isfinite(v) else math.inf

    log = DiagnosticsLog(search_history=[] if config.record_search_history else None)
    tracked = config.track_agent % pop

    def _record(fits):
        log.convergence_curve.append(best_f)
        log.average_fitness_history.append(float(np.mean(fits)))
        log.trajectory.append(float(X[tracked, 0]))
        if log.search_history is not None:
            log.search_history.append(X.copy())

    fits = np.array([_eval(x) for x in X])
    i = int(np.argmin(fits))
    best_x = X[i].copy()
    best_f = float(fits[i])
    _record(fits)

    t = 1
    while t < T:
        if config.loss_threshold is not None and best_f <= config.loss_threshold:
            break
        r1 = r1_schedule(config.a, t, T)
        for i in range(pop):
            X[i] = update_position(X[i], best_x, r1, streams[i], config.bounds)
        fits = np.array([_eval(x) for x in X])
        i = int(np.argmin(fits))
        if fits[i] < best_f:  # strict improvement; ties keep the incumbent
            best_x = X[i].copy()
            best_f = float(fits[i])
        t += 1
        _record(fits)

    return ScaResult(best_position=best_x, best_fitness=best_f, diagnostics=log)


def write_diagnostics_csv(log, path):
    """Per-iteration best fitness, population mean, and tracked-agent dim 0."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "best_fitness", "avg_fitness", "trajectory_dim0"])
        rows = zip(log.convergence_curve, log.average_fitness_history, log.trajectory)
        for it, (best, avg, traj) in enumerate(rows, start=1):
            writer.writerow([it, repr(best), repr(avg), repr(traj)])


def write_search_history_csv(log, path):
    if log.search_history is None:
        raise DomainError("search history was not recorded for this run")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "agent", "dim", "value"])
        for it, snapshot in enumerate(log.search_history, start=1):
            for agent, row in enumerate(snapshot):
                for d, v in enumerate(row):
                    writer.writerow([it, agent, d, repr(float(v))])
