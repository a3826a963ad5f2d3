"""Exact event-driven Monte Carlo for the alternating reset walk.

All waiting times are exponential, so paths are advanced from event to event
by competing clocks (reset vs. jump) with no time discretisation. Crossings
of the level during a drift segment are solved for analytically.

Paths are simulated in fixed-size blocks, vectorised over the paths of a
block. Block ``b`` draws from its own stream, derived from the master seed
and ``b``; the block layout does not depend on the worker count, so results
are bit-identical for any number of workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import Direction, ModelParams, validate_params

BLOCK_SIZE = 1 << 16
DEFAULT_CAP = 1e4
CAP_FACTOR = 50.0
SNAPSHOT_RESETS = 20.0

SeedLike = "int | np.random.SeedSequence"


class CensoredSamplesError(RuntimeError):
    """An MFPT estimate that must be compared against theory had censored paths."""


@dataclass(frozen=True)
class Event:
    time: float
    kind: str  # "reset" or "jump"
    position: float  # right after the event
    direction: Direction  # direction of motion right after the event
    size: float = 0.0  # jump size, 0 for resets


@dataclass(frozen=True)
class PathSample:
    initial_position: float
    initial_direction: Direction
    horizon: float
    events: tuple[Event, ...]
    final_position: float
    final_direction: Direction

    def position_at(self, t: float, p: ModelParams) -> float:
        """Position at time ``t`` (right-continuous at event times)."""
        if not 0 <= t <= self.horizon:
            raise ValueError("t outside [0, horizon]")
        time, x, d = 0.0, self.initial_position, self.initial_direction
        for ev in self.events:
            if ev.time > t:
                break
            time, x, d = ev.time, ev.position, ev.direction
        return x + d.sign * p.speed(d) * (t - time)


@dataclass(frozen=True)
class FirstPassageSample:
    crossed: bool
    time: float  # crossing time, or the cap when censored


@dataclass(frozen=True)
class EstimateWithError:
    mean: float | complex
    stderr: float
    n: int
    censored: int = 0

    def within(self, value, k: float = 4.0) -> bool:
        return abs(self.mean - value) <= k * self.stderr


@dataclass(frozen=True)
class StationaryEstimate:
    edges: np.ndarray
    density: np.ndarray  # continuous-part counts / (n * bin width)
    atom: EstimateWithError
    n: int
    t_snapshot: float
    outside: float  # fraction of continuous samples outside the histogram range


# ---------------------------------------------------------------------------
# streams and fan-out


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def derive_seed(seed, *key: int) -> np.random.SeedSequence:
    """Child seed sequence for a sub-experiment, e.g. one grid point of a curve."""
    ss = _seed_sequence(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(int(k) for k in key))


def block_generator(seed, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(seed, block)))


def worker_count(workers: int | None = None) -> int:
    """Resolve a worker count; ``RESETWALK_THREADS`` caps it (0 or unset = no cap)."""
    auto = os.cpu_count() or 1
    n = auto if not workers else int(workers)
    cap = int(os.environ.get("RESETWALK_THREADS", "0") or 0)
    if cap > 0:
        n = min(n, cap)
    return max(1, n)


def _map_blocks(fn: Callable[[np.random.Generator, int], object], seed, n: int, workers: int | None):
    sizes = [min(BLOCK_SIZE, n - start) for start in range(0, n, BLOCK_SIZE)]
    jobs = [(block_generator(seed, b), size) for b, size in enumerate(sizes)]
    w = min(worker_count(workers), len(jobs))
    if w <= 1:
        return [fn(rng, size) for rng, size in jobs]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


# ---------------------------------------------------------------------------
# vectorised engines


def _initial_plus(p: ModelParams, rng, n: int) -> np.ndarray:
    return rng.random(n) < p.direction_prob


def first_passage_batch(p: ModelParams, level: float, cap: float, n: int, rng: np.random.Generator):
    """Crossing times of ``n`` independent paths started at the origin.

    Returns ``(times, crossed)``; censored paths have ``times == cap``.
    """
    lam_reset, rho = p.reset_rate, p.direction_prob
    speed, rate, law = p.speed_plus, p.jump_rate_plus, p.jump_law_plus
    plus_total = lam_reset + rate

    times = np.full(n, cap, dtype=float)
    crossed = np.zeros(n, dtype=bool)
    idx = np.arange(n)
    t = np.zeros(n)
    x = np.zeros(n)
    plus = _initial_plus(p, rng, n)

    while idx.size:
        # leftward phases cannot cross; only the next reset matters
        minus = np.flatnonzero(~plus)
        right = np.flatnonzero(plus)
        if minus.size:
            if lam_reset > 0:
                t[minus] += rng.exponential(1.0 / lam_reset, minus.size)
            else:
                t[minus] = math.inf
            x[minus] = 0.0
            plus[minus] = rng.random(minus.size) < rho

        if right.size:
            if plus_total > 0:
                dt = rng.exponential(1.0 / plus_total, right.size)
            else:
                dt = np.full(right.size, math.inf)
            if speed > 0:
                hit = (level - x[right]) / speed
                drift_cross = hit <= dt
            else:
                drift_cross = np.zeros(right.size, dtype=bool)
            if drift_cross.any():
                c = right[drift_cross]
                times[idx[c]] = t[c] + hit[drift_cross]
                crossed[idx[c]] = True
            moving = right[~drift_cross]
            dt = dt[~drift_cross]
            t[moving] += dt
            if speed > 0:
                x[moving] += speed * dt
            is_jump = rng.random(moving.size) * plus_total < rate
            jumpers = moving[is_jump]
            if jumpers.size:
                x[jumpers] += law.sample(rng, jumpers.size)
                over = jumpers[x[jumpers] > level]
                times[idx[over]] = t[over]
                crossed[idx[over]] = True
            resetters = moving[~is_jump]
            x[resetters] = 0.0
            plus[resetters] = rng.random(resetters.size) < rho

        done = crossed[idx] | (t > cap)
        if done.any():
            keep = ~done
            idx, t, x, plus = idx[keep], t[keep], x[keep], plus[keep]

    late = crossed & (times > cap)
    crossed[late] = False
    times[late] = cap
    return times, crossed


def positions_batch(p: ModelParams, horizon: float, n: int, rng: np.random.Generator):
    """Positions at ``horizon`` of ``n`` paths started at the origin.

    Returns ``(x, at_origin)`` where ``at_origin`` flags paths that have not
    moved since their last reset (the atom at zero).
    """
    lam_reset, rho = p.reset_rate, p.direction_prob
    speeds = (p.speed_minus, p.speed_plus)
    rates = (lam_reset + p.jump_rate_minus, lam_reset + p.jump_rate_plus)
    jump_rates = (p.jump_rate_minus, p.jump_rate_plus)
    laws = (p.jump_law_minus, p.jump_law_plus)

    out_x = np.zeros(n)
    out_atom = np.ones(n, dtype=bool)
    idx = np.arange(n)
    t = np.zeros(n)
    x = np.zeros(n)
    atom = np.ones(n, dtype=bool)
    plus = _initial_plus(p, rng, n)

    while idx.size:
        speed = np.where(plus, speeds[1], speeds[0])
        total = np.where(plus, rates[1], rates[0])
        sign = np.where(plus, 1.0, -1.0)
        with np.errstate(divide="ignore"):
            dt = rng.standard_exponential(idx.size) / total
        ends = t + dt >= horizon
        if ends.any():
            rest = horizon - t[ends]
            out_x[idx[ends]] = x[ends] + sign[ends] * speed[ends] * rest
            out_atom[idx[ends]] = atom[ends] & ~((speed[ends] > 0) & (rest > 0))
        go = ~ends
        idx, t, x, atom, plus = idx[go], t[go], x[go], atom[go], plus[go]
        dt, speed, total, sign = dt[go], speed[go], total[go], sign[go]
        if not idx.size:
            break
        t += dt
        x += sign * speed * dt
        atom &= ~(speed > 0)
        is_reset = rng.random(idx.size) * total < lam_reset
        reset = np.flatnonzero(is_reset)
        x[reset] = 0.0
        atom[reset] = True
        plus[reset] = rng.random(reset.size) < rho
        for d, flag in ((1, True), (0, False)):
            jumpers = np.flatnonzero(~is_reset & (plus == flag))
            if jumpers.size and jump_rates[d] > 0:
                x[jumpers] += (1.0 if flag else -1.0) * laws[d].sample(rng, jumpers.size)
                atom[jumpers] = False
    return out_x, out_atom


# ---------------------------------------------------------------------------
# single-path API


def simulate_path(
    p: ModelParams,
    horizon: float,
    rng: np.random.Generator,
    initial: tuple[float, Direction | str | None] = (0.0, None),
) -> PathSample:
    """Simulate one path on ``[0, horizon]`` and record every event.

    ``initial = (x0, direction)``; a ``None`` direction is drawn like after a
    reset.
    """
    validate_params(p)
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    x0, d0 = initial
    if d0 is None:
        d0 = Direction.PLUS if rng.random() < p.direction_prob else Direction.MINUS
    d0 = Direction.parse(d0)
    if x0 * d0.sign < 0:
        raise ValueError(f"initial position {x0} incompatible with direction {d0.name}")

    t, x, d = 0.0, float(x0), d0
    events = []
    while True:
        total = p.reset_rate + p.jump_rate(d)
        dt = rng.exponential(1.0 / total) if total > 0 else math.inf
        if t + dt > horizon:
            break
        t += dt
        x += d.sign * p.speed(d) * dt
        if rng.random() * total < p.reset_rate:
            x = 0.0
            d = Direction.PLUS if rng.random() < p.direction_prob else Direction.MINUS
            events.append(Event(t, "reset", 0.0, d))
        else:
            size = float(p.jump_law(d).sample(rng))
            x += d.sign * size
            events.append(Event(t, "jump", x, d, size))
    final = x + d.sign * p.speed(d) * (horizon - t)
    return PathSample(float(x0), d0, float(horizon), tuple(events), final, d)


def check_path(path: PathSample, p: ModelParams, rel_tol: float = 1e-9) -> list[str]:
    """List the violated path invariants (empty when the path is consistent)."""
    problems = []
    t_prev, x_prev, d = 0.0, path.initial_position, path.initial_direction
    if x_prev * d.sign < 0:
        problems.append("initial position opposes initial direction")
    for i, ev in enumerate(path.events):
        if not ev.time > t_prev and not (i == 0 and ev.time > 0):
            problems.append(f"event {i}: time {ev.time} not increasing")
        if ev.time > path.horizon:
            problems.append(f"event {i}: after horizon")
        before = x_prev + d.sign * p.speed(d) * (ev.time - t_prev)
        tol = rel_tol * max(1.0, abs(before))
        if ev.kind == "reset":
            if ev.position != 0.0:
                problems.append(f"event {i}: reset to {ev.position}, not 0")
        elif ev.kind == "jump":
            if ev.size < 0:
                problems.append(f"event {i}: negative jump size")
            if ev.direction is not d:
                problems.append(f"event {i}: jump changed direction")
            if abs(ev.position - (before + d.sign * ev.size)) > tol:
                problems.append(f"event {i}: position {ev.position} inconsistent with drift and jump")
        else:
            problems.append(f"event {i}: unknown kind {ev.kind!r}")
        if ev.position * ev.direction.sign < 0:
            problems.append(f"event {i}: position opposes direction")
        t_prev, x_prev, d = ev.time, ev.position, ev.direction
    final = x_prev + d.sign * p.speed(d) * (path.horizon - t_prev)
    if abs(final - path.final_position) > rel_tol * max(1.0, abs(final)):
        problems.append("final position inconsistent with last segment")
    if path.final_position * d.sign < 0:
        problems.append("final position opposes direction")
    return problems


def sample_position(p: ModelParams, t: float, rng: np.random.Generator) -> float:
    """One draw of ``X(t)`` started at the origin with a random direction."""
    validate_params(p)
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return 0.0
    x, _ = positions_batch(p, t, 1, rng)
    return float(x[0])


def sample_first_passage(p: ModelParams, level: float, cap: float, rng: np.random.Generator) -> FirstPassageSample:
    validate_params(p)
    _check_level_cap(level, cap)
    times, crossed = first_passage_batch(p, level, cap, 1, rng)
    return FirstPassageSample(bool(crossed[0]), float(times[0]))


def _check_level_cap(level, cap):
    if not level > 0:
        raise ValueError(f"level must be positive, got {level}")
    if not cap > 0:
        raise ValueError(f"cap must be positive, got {cap}")


# ---------------------------------------------------------------------------
# estimators


def default_cap(p: ModelParams, level: float) -> float:
    """``CAP_FACTOR`` times the analytic MFPT, else ``DEFAULT_CAP``.

    The MFPT used is the larger of the two start-conditional means (over the
    start directions that can occur): the leftward start sets the tail of the
    crossing-time law, and the unconditional mean can sit far below it when
    ``rho`` is close to 1 and resets are rare.
    """
    from .analytic import closed_form_family, mfpt_exp_jumps, mfpt_pure_drift
    from .inversion import mfpt_general

    family = closed_form_family(p)
    rho = p.direction_prob
    try:
        if family == "pure-drift":
            plus = mfpt_pure_drift(0.0, Direction.PLUS, p.reset_rate, p.speed_plus, rho, level)
            minus = mfpt_pure_drift(0.0, Direction.MINUS, p.reset_rate, p.speed_plus, rho, level)
        elif family == "exp-jumps":
            plus, minus, _ = mfpt_exp_jumps(p.reset_rate, p.jump_rate_plus, p.jump_law_plus.gamma, rho, level)
        else:
            plus = mfpt_general(p, level, 0.0, Direction.PLUS) if rho > 0 else math.nan
            minus = mfpt_general(p, level, 0.0, Direction.MINUS) if rho < 1 else math.nan
    except (ArithmeticError, ValueError):
        return DEFAULT_CAP
    means = [m for m, prob in ((plus, rho), (minus, 1.0 - rho)) if prob > 0]
    if not means or not all(math.isfinite(m) and m > 0 for m in means):
        return DEFAULT_CAP
    return CAP_FACTOR * max(means)


def first_passage_times(p: ModelParams, level: float, n_paths: int, cap: float, seed=0, workers: int | None = None):
    """``(times, crossed)`` for ``n_paths`` paths, deterministic in ``seed``."""
    validate_params(p)
    _check_level_cap(level, cap)
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    parts = _map_blocks(lambda rng, size: first_passage_batch(p, level, cap, size, rng), seed, n_paths, workers)
    return np.concatenate([a for a, _ in parts]), np.concatenate([b for _, b in parts])


def estimate_mfpt(
    p: ModelParams,
    level: float,
    n_paths: int,
    cap: float | None = None,
    seed=0,
    workers: int | None = None,
    require_uncensored: bool = False,
) -> EstimateWithError:
    """Mean crossing time over the paths that crossed before ``cap``."""
    cap = default_cap(p, level) if cap is None else cap
    times, crossed = first_passage_times(p, level, n_paths, cap, seed, workers)
    censored = int(n_paths - crossed.sum())
    if censored and require_uncensored:
        raise CensoredSamplesError(f"{censored} of {n_paths} paths did not cross by cap={cap:g}")
    used = times[crossed]
    if used.size == 0:
        return EstimateWithError(math.nan, math.nan, n_paths, censored)
    stderr = float(used.std(ddof=1) / math.sqrt(used.size)) if used.size > 1 else 0.0
    return EstimateWithError(float(used.mean()), stderr, n_paths, censored)


def estimate_survival(
    p: ModelParams,
    level: float,
    t_grid: Sequence[float],
    n_paths: int,
    seed=0,
    workers: int | None = None,
) -> list[tuple[float, EstimateWithError]]:
    """Empirical survival ``P(T > t)`` on a sorted grid of times, with binomial errors."""
    grid = np.asarray(t_grid, dtype=float)
    if grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise ValueError("t_grid must be nonempty, nonnegative and sorted")
    cap = max(float(grid[-1]), 1e-12)
    times, crossed = first_passage_times(p, level, n_paths, cap, seed, workers)
    alive = np.where(crossed, times, math.inf)
    out = []
    for t in grid:
        frac = float(np.mean(alive > t))
        stderr = math.sqrt(frac * (1.0 - frac) / n_paths)
        out.append((float(t), EstimateWithError(frac, stderr, n_paths, 0)))
    return out


def positions(p: ModelParams, t: float, n_samples: int, seed=0, workers: int | None = None):
    """``(x, at_origin)`` for ``n_samples`` independent draws of ``X(t)``."""
    validate_params(p)
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return np.zeros(n_samples), np.ones(n_samples, dtype=bool)
    parts = _map_blocks(lambda rng, size: positions_batch(p, t, size, rng), seed, n_samples, workers)
    return np.concatenate([a for a, _ in parts]), np.concatenate([b for _, b in parts])


def estimate_stationary(
    p: ModelParams,
    n_samples: int,
    t_snapshot: float | None = None,
    seed=0,
    bins: int = 200,
    x_range: tuple[float, float] = (-10.0, 10.0),
    workers: int | None = None,
) -> StationaryEstimate:
    """Histogram of ``X(t_snapshot)`` with the atom at the origin counted separately."""
    if not p.reset_rate > 0:
        raise ValueError("no stationary state without resets (reset_rate must be > 0)")
    floor = SNAPSHOT_RESETS / p.reset_rate
    t_snapshot = floor if t_snapshot is None else float(t_snapshot)
    if t_snapshot < floor * (1 - 1e-12):
        raise ValueError(f"t_snapshot must be >= {SNAPSHOT_RESETS:g}/reset_rate = {floor:g}")
    x, at_origin = positions(p, t_snapshot, n_samples, seed, workers)
    atom_frac = float(at_origin.mean())
    atom = EstimateWithError(atom_frac, math.sqrt(atom_frac * (1 - atom_frac) / n_samples), n_samples)
    cont = x[~at_origin]
    counts, edges = np.histogram(cont, bins=bins, range=x_range)
    widths = np.diff(edges)
    density = counts / (n_samples * widths)
    outside = float(cont.size - counts.sum()) / n_samples
    return StationaryEstimate(edges, density, atom, n_samples, t_snapshot, outside)


def estimate_char_function(p: ModelParams, omega: float, t: float, n_samples: int, seed=0, workers: int | None = None) -> EstimateWithError:
    """Sample mean of ``exp(i omega X(t))``; ``stderr`` is the standard error of the complex mean."""
    x, _ = positions(p, t, n_samples, seed, workers)
    if omega == 0:
        return EstimateWithError(1.0 + 0j, 0.0, n_samples)
    z = np.exp(1j * omega * x)
    mean = complex(z.mean())
    spread = float(np.mean(np.abs(z - mean) ** 2))
    stderr = math.sqrt(spread / max(n_samples - 1, 1))
    return EstimateWithError(mean, stderr, n_samples)
