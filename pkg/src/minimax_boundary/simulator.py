"""Monte Carlo experiments in the discretized white-noise model.

Paths are simulated on a uniform grid as ``dY_i = f(t_i) dt + sigma sqrt(dt) xi_i``
with ``t_i`` the left end of cell ``i``.  The normals come from a Philox
counter-based generator keyed by ``(seed, replicate)`` and read at counter
position ``i``, so every draw is a pure function of ``(seed, replicate, i)``
and results do not depend on how replications are scheduled across threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import ndtri

from . import _io
from .exceptions import ConfigurationError, CoverageError, DomainError
from .kernel_risk import (KernelSpec, NoiseModel, analytic_risk, apply_estimator,
                          estimator_weights, rd_analytic_risk)
from .least_favorable import BoundarySolution, SmoothnessParams, scale_solution
from .piecewise import PiecewiseQuadratic

Sides = Literal["positive_axis", "two_sided"]

THREADS_ENV = "MINIMAX_BOUNDARY_THREADS"
DEFAULT_CELLS_PER_SUPPORT = 4096
DEFAULT_HORIZON_FACTOR = 1.1
# replications per work unit; fixed so that floating-point results do not
# depend on the thread count
_CHUNK = 128
_U64_TO_UNIT = 2.0**-53


@dataclass(frozen=True)
class PathConfig:
    step: float
    horizon: float
    seed: int = 0
    sides: Sides = "positive_axis"

    def __post_init__(self):
        if not (math.isfinite(self.step) and self.step > 0):
            raise DomainError(f"step must be positive, got {self.step!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise DomainError(f"horizon must be positive, got {self.horizon!r}")
        if not 0 <= int(self.seed) < 2**64 or int(self.seed) != self.seed:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.sides not in ("positive_axis", "two_sided"):
            raise DomainError(f"unknown sides {self.sides!r}")

    @classmethod
    def for_kernel(cls, kernel: KernelSpec, seed: int = 0,
                   cells_per_support: int = DEFAULT_CELLS_PER_SUPPORT,
                   horizon_factor: float = DEFAULT_HORIZON_FACTOR) -> "PathConfig":
        """Default grid: ``support / 4096`` step over ``1.1 * support``."""
        support = kernel.support_end
        sides = "two_sided" if kernel.side == "rd_antisymmetric" else "positive_axis"
        return cls(step=support / cells_per_support, horizon=horizon_factor * support,
                   seed=seed, sides=sides)

    @property
    def cells_per_side(self) -> int:
        # tolerate horizon/step landing a hair above an integer
        return int(math.ceil(self.horizon / self.step - 1e-9))

    @property
    def times(self) -> np.ndarray:
        """Left ends of the grid cells (signed for two-sided paths)."""
        n = self.cells_per_side
        k = np.arange(-n, n) if self.sides == "two_sided" else np.arange(n)
        return k * self.step


@dataclass(frozen=True)
class RDScenario:
    """Two-sided signal ``f+`` on ``t >= 0`` and ``f-`` evaluated at ``-t`` for ``t < 0``."""

    f_plus: PiecewiseQuadratic
    f_minus: PiecewiseQuadratic
    jump: float

    def __post_init__(self):
        actual = float(self.f_plus(0.0)) - float(self.f_minus(0.0))
        if abs(actual - self.jump) > 1e-12 * max(1.0, abs(actual)):
            raise DomainError(f"jump {self.jump!r} differs from f+(0) - f-(0) = {actual!r}")


@dataclass(frozen=True)
class SimulationReport:
    replications: int
    empirical_mse: float
    mse_stderr: float
    empirical_bias: float
    analytic_risk: float
    seed: int
    delta_t: float
    horizon: float
    bias_stderr: float = math.nan

    def within(self, n_stderr: float = 3.0) -> bool:
        """Whether the empirical MSE is within ``n_stderr`` standard errors of the analytic risk."""
        return abs(self.empirical_mse - self.analytic_risk) <= n_stderr * self.mse_stderr

    def to_dict(self) -> dict:
        return {
            "replications": self.replications,
            "empirical_mse": self.empirical_mse,
            "mse_stderr": self.mse_stderr,
            "empirical_bias": self.empirical_bias,
            "bias_stderr": self.bias_stderr,
            "analytic_risk": self.analytic_risk,
            "seed": self.seed,
            "delta_t": self.delta_t,
            "horizon": self.horizon,
        }

    def to_json(self) -> str:
        return _io.dumps(self.to_dict())


def thread_count(requested: int | None = None) -> int:
    """Worker count from the argument, else ``MINIMAX_BOUNDARY_THREADS`` (0 = all cores)."""
    if requested is None:
        raw = os.environ.get(THREADS_ENV, "0")
        try:
            requested = int(raw)
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ConfigurationError(f"thread count must be >= 0, got {requested}")
    return requested or (os.cpu_count() or 1)


def standard_normals(seed: int, replicate: int, n: int) -> np.ndarray:
    """``n`` standard normals at counter positions ``0..n-1`` of stream ``(seed, replicate)``."""
    key = np.array([seed, replicate], dtype=np.uint64)
    raw = np.random.Philox(key=key).random_raw(n)
    # top 53 bits, centred in their bin so the uniform never hits 0 or 1
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _U64_TO_UNIT
    return ndtri(u)


def _signal(times: np.ndarray, f: PiecewiseQuadratic,
            f_minus: PiecewiseQuadratic | None) -> np.ndarray:
    out = np.empty(times.shape)
    pos = times >= 0
    out[pos] = f(times[pos])
    if np.any(~pos):
        if f_minus is None:
            raise ConfigurationError("two-sided paths need f_minus")
        out[~pos] = f_minus(-times[~pos])
    return out


def sample_increments(f: PiecewiseQuadratic, noise: NoiseModel, config: PathConfig,
                      replicate: int = 0, f_minus: PiecewiseQuadratic | None = None):
    """One simulated path as ``(times, dY)``.

    For two-sided configs the cell with left end ``t < 0`` carries
    ``f_minus(-t)``.
    """
    times = config.times
    step = config.step
    dy = _signal(times, f, f_minus) * step
    if noise.sigma > 0:
        dy = dy + noise.sigma * math.sqrt(step) * standard_normals(config.seed, replicate,
                                                                    times.size)
    return times, dy


def _errors(kernel: KernelSpec, signal: np.ndarray, target: float, noise: NoiseModel,
            config: PathConfig, replications: int, threads: int | None) -> np.ndarray:
    times = config.times
    estimator_weights(kernel, times)  # coverage and grid checks before any work
    mean_dy = signal * config.step
    scale = noise.sigma * math.sqrt(config.step)

    def run_chunk(start: int) -> np.ndarray:
        stop = min(start + _CHUNK, replications)
        dy = np.empty((stop - start, times.size))
        for r in range(start, stop):
            dy[r - start] = mean_dy
            if scale > 0:
                dy[r - start] += scale * standard_normals(config.seed, r, times.size)
        return apply_estimator(kernel, (times, dy)) - target

    starts = range(0, replications, _CHUNK)
    workers = min(thread_count(threads), len(starts))
    if workers <= 1:
        parts = [run_chunk(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, starts))
    return np.concatenate(parts)


def _report(err: np.ndarray, analytic: float, config: PathConfig) -> SimulationReport:
    n = err.size
    sq = err * err
    return SimulationReport(
        replications=int(n),
        empirical_mse=float(np.mean(sq)),
        mse_stderr=float(np.std(sq, ddof=1) / math.sqrt(n)),
        empirical_bias=float(np.mean(err)),
        analytic_risk=float(analytic),
        seed=int(config.seed),
        delta_t=float(config.step),
        horizon=float(config.horizon),
        bias_stderr=float(np.std(err, ddof=1) / math.sqrt(n)),
    )


def _check_common(kernel: KernelSpec, config: PathConfig, replications: int):
    if replications < 100:
        raise DomainError(f"replications must be >= 100, got {replications}")
    if config.cells_per_side * config.step < kernel.support_end * (1.0 - 1e-12):
        raise CoverageError(f"horizon {config.horizon:.6g} is shorter than the kernel "
                            f"support {kernel.support_end:.6g}")


def monte_carlo_risk(kernel: KernelSpec, f: PiecewiseQuadratic, f_at_0: float,
                     noise: NoiseModel, config: PathConfig, replications: int,
                     threads: int | None = None) -> SimulationReport:
    """Empirical MSE of the boundary estimator for ``f(0)`` at signal ``f``."""
    if kernel.side != "boundary" or config.sides != "positive_axis":
        raise ConfigurationError("monte_carlo_risk needs a boundary kernel on a positive_axis grid")
    _check_common(kernel, config, replications)
    err = _errors(kernel, _signal(config.times, f, None), f_at_0, noise, config,
                  replications, threads)
    return _report(err, analytic_risk(kernel, f, f_at_0, noise).risk, config)


def build_rd_scenario(b: float, params: SmoothnessParams,
                      solution: BoundarySolution) -> RDScenario:
    """Least favorable odd pair ``f+ = -f- = f*_{b/2, C}`` with jump ``b``."""
    if not b > 0:
        raise DomainError(f"b must be positive, got {b!r}")
    half = scale_solution(solution, b / 2.0, params).shape
    return RDScenario(f_plus=half, f_minus=-half, jump=float(b))


def rd_monte_carlo(kernel: KernelSpec, scenario: RDScenario, noise: NoiseModel,
                   config: PathConfig, replications: int,
                   threads: int | None = None) -> SimulationReport:
    """Empirical MSE of the two-sided estimator for ``scenario.jump``."""
    if kernel.side != "rd_antisymmetric":
        raise ConfigurationError(f"RD simulation needs an rd_antisymmetric kernel, got {kernel.side!r}")
    if config.sides != "two_sided":
        raise ConfigurationError(f"RD simulation needs a two_sided grid, got {config.sides!r}")
    _check_common(kernel, config, replications)
    signal = _signal(config.times, scenario.f_plus, scenario.f_minus)
    err = _errors(kernel, signal, scenario.jump, noise, config, replications, threads)
    analytic = rd_analytic_risk(kernel, scenario.f_plus, scenario.f_minus, scenario.jump, noise)
    return _report(err, analytic.risk, config)
