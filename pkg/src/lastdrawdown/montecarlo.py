"""
Monte Carlo oracle for the last-drawdown laws.

Paths are sampled on a daily grid with Gaussian increments of mean
``mu * dt`` and variance ``dt``. Uniforms come from Philox, a counter-based
generator, keyed by ``(seed, block index)``; normals are obtained by the
inverse CDF. Path ``i`` always lives in block ``i // BLOCK_PATHS`` at a fixed
row, so a sample is a pure function of the seed and does not depend on how
blocks are spread over workers.

The sampled maximum underestimates the continuous one, so empirical depths
and lengths carry a small downward discretization bias. It is not
corrected.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import special, stats

from .densities import ProcessSpec, psi_depth
from .errors import DomainError, InsufficientSampleError

BLOCK_PATHS = 2048  # must stay even for antithetic pairing
_HALF_ULP = 2.0 ** -54
SEED_MASK = (1 << 64) - 1
# -zeta(1/2) / sqrt(2 pi): expected shortfall of a grid maximum in units of sqrt(dt)
GRID_MAX_SHIFT = 0.5825971579390106


@dataclass(frozen=True)
class SimConfig:
    spec: ProcessSpec
    n_paths: int
    seed: int = 0
    steps_per_year: int = 257
    antithetic: bool = True

    def __post_init__(self):
        if self.steps_per_year < 1:
            raise DomainError("steps_per_year must be >= 1")
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if not (0 <= self.seed <= SEED_MASK):
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.total_steps < 2:
            raise DomainError("horizon * steps_per_year must round to at least 2 steps")

    @property
    def total_steps(self) -> int:
        return int(round(self.steps_per_year * self.spec.horizon))

    @property
    def dt(self) -> float:
        return 1.0 / self.steps_per_year


@dataclass(frozen=True)
class EmpiricalSample:
    """Last-drawdown (length, depth) per path, plus terminal values."""

    lengths: np.ndarray
    depths: np.ndarray
    terminals: np.ndarray
    config: SimConfig

    def __post_init__(self):
        for arr in (self.lengths, self.depths, self.terminals):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return int(self.lengths.size)

    @property
    def pairs(self) -> np.ndarray:
        return np.column_stack([self.lengths, self.depths])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["path_index", "length_years", "depth_sigma"])
        for i, (ell, d) in enumerate(zip(self.lengths, self.depths)):
            writer.writerow([i, f"{ell:.10g}", f"{d:.10g}"])
        return buf.getvalue()


def _block_normals(seed: int, block: int, rows: int, steps: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=seed | (block << 64)))
    # random() returns k * 2^-53; shifting by half a step keeps u inside (0, 1)
    u = gen.random((rows, steps))
    u += _HALF_ULP
    return special.ndtri(u, out=u)


def _last_drawdown(paths: np.ndarray, steps: int, steps_per_year: int):
    """Per row: (length, depth, terminal) with the path implicitly starting at 0."""
    # argmax returns the first hit, so on the reversed rows it finds the last one
    last = steps - 1 - np.argmax(paths[:, ::-1], axis=1)
    peak = paths[np.arange(paths.shape[0]), last]
    at_origin = peak < 0.0
    last_step = np.where(at_origin, 0, last + 1)
    peak = np.maximum(peak, 0.0)
    terminal = paths[:, -1]
    return (steps - last_step) / steps_per_year, peak - terminal, terminal.copy()


def _simulate_block(config: SimConfig, block: int) -> Tuple[np.ndarray, ...]:
    steps = config.total_steps
    start = block * BLOCK_PATHS
    n = min(BLOCK_PATHS, config.n_paths - start)
    dt = config.dt
    drift = config.spec.sharpe * dt * np.arange(1, steps + 1)
    scale = math.sqrt(dt)
    if config.antithetic:
        # path 2r uses +z_r, path 2r+1 uses -z_r
        base_rows = (n + 1) // 2
        z = _block_normals(config.seed, block, base_rows, steps)
        walk = np.cumsum(z, axis=1, out=z)
        walk *= scale
        out_len = np.empty(2 * base_rows)
        out_dep = np.empty(2 * base_rows)
        out_term = np.empty(2 * base_rows)
        for sign, offset in ((1.0, 0), (-1.0, 1)):
            paths = drift + sign * walk
            ell, dep, term = _last_drawdown(paths, steps, config.steps_per_year)
            out_len[offset::2] = ell
            out_dep[offset::2] = dep
            out_term[offset::2] = term
        return out_len[:n], out_dep[:n], out_term[:n]
    z = _block_normals(config.seed, block, n, steps)
    walk = np.cumsum(z, axis=1, out=z)
    walk *= scale
    walk += drift
    return _last_drawdown(walk, steps, config.steps_per_year)


def simulate(config: SimConfig, workers: int = 1) -> EmpiricalSample:
    """Simulate ``config.n_paths`` paths and record each one's last drawdown."""
    n_blocks = -(-config.n_paths // BLOCK_PATHS)
    if workers <= 1:
        results = [_simulate_block(config, b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda b: _simulate_block(config, b), range(n_blocks)))
    lengths = np.concatenate([r[0] for r in results])
    depths = np.concatenate([r[1] for r in results])
    terminals = np.concatenate([r[2] for r in results])
    if lengths.size != config.n_paths:
        raise RuntimeError(
            f"simulated {lengths.size} paths, expected {config.n_paths}"
        )
    return EmpiricalSample(lengths, depths, terminals, config)


def empirical_tail(
    sample: EmpiricalSample, mode: str, threshold: float
) -> Tuple[float, float]:
    """Fraction of paths with length (or depth) >= threshold, and its binomial std error."""
    if len(sample) == 0:
        raise DomainError("empty sample")
    if mode == "length":
        values = sample.lengths
    elif mode == "depth":
        values = sample.depths
    else:
        raise DomainError(f"mode must be 'length' or 'depth', got {mode!r}")
    n = values.size
    freq = float(np.count_nonzero(values >= threshold)) / n
    return freq, math.sqrt(freq * (1.0 - freq) / n)


def conditional_slice(
    sample: EmpiricalSample, depth_star: float, band: float
) -> np.ndarray:
    """Lengths of the paths whose depth is within ``depth_star * (1 +- band)``."""
    if not (0.0 < band <= 0.5):
        raise DomainError(f"band must lie in (0, 0.5], got {band!r}")
    lo, hi = depth_star * (1.0 - band), depth_star * (1.0 + band)
    mask = (sample.depths >= lo) & (sample.depths <= hi)
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise InsufficientSampleError(
            f"insufficient sample: no paths with depth in [{lo:.6g}, {hi:.6g}] "
            f"(0 of {len(sample)})",
            count=count,
        )
    return sample.lengths[mask]


def depth_bias_allowance(spec: ProcessSpec, depth: float, steps_per_year: int) -> float:
    """
    First-order drop in P(depth >= ``depth``) caused by sampling the maximum
    on the grid: density at ``depth`` times the expected shortfall of the
    sampled maximum. Used only to widen tolerances; samples are never corrected.
    """
    return psi_depth(spec, depth) * GRID_MAX_SHIFT / math.sqrt(steps_per_year)


def arcsine_cdf(length, horizon: float):
    """CDF of the zero-drift last-drawdown length (arcsine law)."""
    x = np.clip(np.asarray(length, dtype=float) / horizon, 0.0, 1.0)
    return 2.0 / np.pi * np.arcsin(np.sqrt(x))


def arcsine_ks_distance(sample: EmpiricalSample) -> float:
    """Kolmogorov-Smirnov distance between sampled lengths and the arcsine law."""
    horizon = sample.config.spec.horizon
    result = stats.kstest(sample.lengths, lambda x: arcsine_cdf(x, horizon))
    return float(result.statistic)


def ks_tolerance(sample: EmpiricalSample) -> float:
    """99% KS critical value plus a one-step discretization allowance."""
    return 1.63 / math.sqrt(len(sample)) + 2.0 / sample.config.steps_per_year
