"""Modulus of continuity, minimax kernels and risk for the boundary and RD problems.

With ``I*`` the normalized minimal squared norm, the modulus is
``b(delta) = C^(1/5) I*^(-2/5) delta^(4/5)``, the risk objective
``sigma^2 b(delta)^2 / (sigma^2 + delta^2)`` peaks at ``delta* = 2 sigma`` and
the minimax kernel is ``psi* = b(delta*) / (sigma^2 + delta*^2) * f*_{b(delta*), C}``.
For the RD jump the least favorable pair is odd with each side carrying half
the jump, which multiplies the modulus by ``2^(3/5)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from . import _io
from .exceptions import CoverageError, DomainError
from .least_favorable import BoundarySolution, SmoothnessParams, scale_solution
from .piecewise import PiecewiseQuadratic, inner_product, norm_sq

Side = Literal["boundary", "rd_antisymmetric"]

# relative tolerance when deciding that a grid is uniform / aligned with t = 0
_GRID_RTOL = 1e-8


@dataclass(frozen=True)
class NoiseModel:
    """Noise level of ``dY = f dt + sigma dW``.

    ``sigma = 0`` is accepted for noiseless simulation; kernel construction
    requires ``sigma > 0``.
    """

    sigma: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise DomainError(f"sigma must be finite and nonnegative, got {self.sigma!r}")


def _require_positive_sigma(noise: NoiseModel) -> float:
    if noise.sigma <= 0:
        raise DomainError("kernel and risk formulas need sigma > 0")
    return noise.sigma


@dataclass(frozen=True)
class ModulusPoint:
    delta: float
    b_value: float


@dataclass(frozen=True)
class KernelSpec:
    """Kernel ``psi(t) = amplitude * shape(time_rescale * t)`` for ``t >= 0``.

    For ``side == "rd_antisymmetric"`` the kernel is extended to ``t < 0`` by
    ``psi(-t) = -psi(t)``.
    """

    amplitude: float
    time_rescale: float
    shape: PiecewiseQuadratic
    side: Side = "boundary"

    def __post_init__(self):
        if self.side not in ("boundary", "rd_antisymmetric"):
            raise ValueError(f"unknown kernel side {self.side!r}")
        if not self.time_rescale > 0:
            raise ValueError("time_rescale must be positive")

    @property
    def support_end(self) -> float:
        return self.shape.support_end / self.time_rescale

    def as_piecewise(self) -> PiecewiseQuadratic:
        """The kernel on ``[0, inf)`` with knots in original time units."""
        return self.shape.rescaled(self.amplitude, self.time_rescale)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.side == "boundary":
            if np.any(t < 0):
                raise ValueError("boundary kernel is defined on t >= 0 only")
            out = self.amplitude * np.asarray(self.shape(self.time_rescale * t))
        else:
            mag = self.amplitude * np.asarray(self.shape(self.time_rescale * np.abs(t)))
            out = np.where(t < 0, -mag, mag)
        return float(out) if out.ndim == 0 else out

    def norm_sq(self) -> float:
        """Squared L2 norm over ``[0, inf)`` (one side for RD kernels)."""
        return self.amplitude**2 * norm_sq(self.shape) / self.time_rescale

    def tabulate(self, grid_n: int = 2048):
        """Kernel values on a uniform grid of ``grid_n`` steps across its support.

        RD kernels are tabulated on ``[-support, support]`` with the same step.
        """
        if grid_n < 1:
            raise ValueError("grid_n must be positive")
        end = self.support_end
        t = np.linspace(0.0, end, grid_n + 1)
        if self.side == "rd_antisymmetric":
            t = np.concatenate([-t[:0:-1], t])
        return t, self(t)


@dataclass(frozen=True)
class RiskReport:
    delta_star: float
    b_star: float
    risk: float
    bias_sq: float
    variance: float
    sigma: float = math.nan
    C: float = math.nan
    paper_constant_without_fifth: float = math.nan
    sources: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        doc = {
            "sigma": self.sigma,
            "C": self.C,
            "delta_star": self.delta_star,
            "b_star": self.b_star,
            "risk": self.risk,
            "bias_sq": self.bias_sq,
            "variance": self.variance,
            "paper_constant_without_fifth": self.paper_constant_without_fifth,
        }
        doc["sources"] = {k: self.sources.get(k, "closed_form") for k in doc}
        return doc

    def to_json(self) -> str:
        return _io.dumps(self.to_dict())


def modulus(delta: float, params: SmoothnessParams, I_star: float) -> ModulusPoint:
    """Largest ``|f(0)|`` attainable with ``||f|| = delta``."""
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta!r}")
    C = params.lipschitz_constant
    return ModulusPoint(delta, C**0.2 * I_star**-0.4 * delta**0.8)


def norm_law(b: float, params: SmoothnessParams, I_star: float) -> float:
    """Minimal squared norm with ``f(0) = b``: ``|b|^(5/2) C^(-1/2) I*``."""
    return abs(b) ** 2.5 / math.sqrt(params.lipschitz_constant) * I_star


def risk_objective(delta: float, noise: NoiseModel, params: SmoothnessParams,
                   I_star: float) -> float:
    """``sigma^2 b(delta)^2 / (sigma^2 + delta^2)``; its supremum is the minimax risk."""
    s2 = noise.sigma**2
    return s2 * modulus(delta, params, I_star).b_value ** 2 / (s2 + delta * delta)


def optimal_delta(noise: NoiseModel) -> float:
    return 2.0 * _require_positive_sigma(noise)


def boundary_kernel(noise: NoiseModel, params: SmoothnessParams,
                    solution: BoundarySolution) -> KernelSpec:
    sigma = _require_positive_sigma(noise)
    C = params.lipschitz_constant
    I = solution.norm_sq
    amplitude = 2**1.6 * I**-0.8 / 5.0 * C**0.4 * sigma**-0.4
    rescale = (I * C * C / (4.0 * sigma * sigma)) ** 0.2
    return KernelSpec(amplitude, rescale, solution.shape, "boundary")


def assembled_boundary_kernel(noise: NoiseModel, params: SmoothnessParams,
                              solution: BoundarySolution) -> PiecewiseQuadratic:
    """``b(delta*) / (sigma^2 + delta*^2) * f*_{b(delta*), C}`` built by explicit rescaling."""
    sigma = _require_positive_sigma(noise)
    delta = optimal_delta(noise)
    b = modulus(delta, params, solution.norm_sq).b_value
    f_b = scale_solution(solution, b, params).shape
    return f_b.rescaled(b / (sigma**2 + delta**2), 1.0)


def _decomposed_report(b: float, delta: float, sigma: float, C: float) -> RiskReport:
    s2, d2 = sigma**2, delta**2
    bias_sq = b * b * s2 * s2 / (s2 + d2) ** 2
    variance = s2 * b * b * d2 / (s2 + d2) ** 2
    risk = b * b * s2 / (s2 + d2)
    return RiskReport(delta_star=delta, b_star=b, risk=risk, bias_sq=bias_sq,
                      variance=variance, sigma=sigma, C=C,
                      paper_constant_without_fifth=5.0 * risk,
                      sources={"paper_constant_without_fifth": "paper_display"})


def minimax_risk(noise: NoiseModel, params: SmoothnessParams, I_star: float) -> RiskReport:
    """Minimax linear risk ``2^(8/5) I*^(-4/5) / 5 * C^(2/5) sigma^(8/5)`` and its split.

    ``paper_constant_without_fifth`` carries the same expression without the
    division by 5 (about 8.72575 at ``sigma = C = 1``), reported side by side.
    """
    sigma = _require_positive_sigma(noise)
    C = params.lipschitz_constant
    delta = optimal_delta(noise)
    b = modulus(delta, params, I_star).b_value
    report = _decomposed_report(b, delta, sigma, C)
    closed = 2**1.6 * I_star**-0.8 / 5.0 * C**0.4 * sigma**1.6
    # the display and the decomposition are the same number up to rounding
    return replace(report, risk=closed, paper_constant_without_fifth=5.0 * closed)


def rd_modulus(delta: float, params: SmoothnessParams, I_star: float) -> ModulusPoint:
    point = modulus(delta, params, I_star)
    return ModulusPoint(delta, 2**0.6 * point.b_value)


def rd_norm_law(b: float, params: SmoothnessParams, I_star: float) -> float:
    """Minimal ``||f+||^2 + ||f-||^2`` for a jump of size ``b``."""
    return abs(b) ** 2.5 * I_star / (2**1.5 * math.sqrt(params.lipschitz_constant))


def rd_kernel(noise: NoiseModel, params: SmoothnessParams,
              solution: BoundarySolution) -> KernelSpec:
    sigma = _require_positive_sigma(noise)
    C = params.lipschitz_constant
    I = solution.norm_sq
    amplitude = 2**1.8 * I**-0.8 / 5.0 * C**0.4 * sigma**-0.4
    rescale = (I * C * C / (2.0 * sigma * sigma)) ** 0.2
    return KernelSpec(amplitude, rescale, solution.shape, "rd_antisymmetric")


def assembled_rd_kernel(noise: NoiseModel, params: SmoothnessParams,
                        solution: BoundarySolution) -> PiecewiseQuadratic:
    """Positive half ``b_RD(delta*) / (sigma^2 + delta*^2) * f*_{b_RD(delta*)/2, C}``."""
    sigma = _require_positive_sigma(noise)
    delta = optimal_delta(noise)
    b = rd_modulus(delta, params, solution.norm_sq).b_value
    half = scale_solution(solution, b / 2.0, params).shape
    return half.rescaled(b / (sigma**2 + delta**2), 1.0)


def rd_minimax_risk(noise: NoiseModel, params: SmoothnessParams, I_star: float) -> RiskReport:
    sigma = _require_positive_sigma(noise)
    delta = optimal_delta(noise)
    b = rd_modulus(delta, params, I_star).b_value
    report = _decomposed_report(b, delta, sigma, params.lipschitz_constant)
    # no RD constant is displayed anywhere, so the unscaled value is only derived
    return replace(report, sources={})


def _split_increments(increments):
    if isinstance(increments, tuple) and len(increments) == 2:
        times, dy = (np.asarray(a, dtype=float) for a in increments)
    else:
        arr = np.asarray(increments, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("increments must be (times, dy) or an (n, 2) array")
        times, dy = arr[:, 0], arr[:, 1]
    if times.shape != dy.shape[-1:]:
        raise ValueError("times and increments must have matching length")
    return times, dy


def estimator_weights(kernel: KernelSpec, times) -> np.ndarray:
    """Weights ``w`` with ``L_hat = sum(w * dY)`` after validating the grid.

    Each increment is labelled by the left end of its cell.  Boundary kernels
    need a grid starting at 0; RD kernels a two-sided grid through 0, on which
    ``t < 0`` cells receive ``-psi(-t)``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise CoverageError("need at least two grid points")
    steps = np.diff(times)
    step = float(steps[0])
    if not step > 0:
        raise CoverageError("grid times must be increasing")
    if np.max(np.abs(steps - step)) > _GRID_RTOL * step * max(1.0, times.size):
        raise CoverageError("nonuniform grid rejected")
    offset = times[0] / step
    if abs(offset - round(offset)) > 1e-6:
        raise CoverageError("grid is not aligned with t = 0")
    end = kernel.support_end * (1.0 - 1e-12)
    if times[-1] + step < end:
        raise CoverageError(
            f"grid ends at {times[-1] + step:.6g} but kernel support extends to {kernel.support_end:.6g}")
    if kernel.side == "boundary":
        if abs(times[0]) > 1e-9 * step:
            raise CoverageError("boundary kernel needs a grid starting at t = 0")
    elif -times[0] < end:
        raise CoverageError(
            f"negative side reaches {times[0]:.6g}; kernel support needs {-kernel.support_end:.6g}")
    return np.asarray(kernel(times), dtype=float)


def apply_estimator(kernel: KernelSpec, increments) -> float | np.ndarray:
    """Riemann-Stieltjes sum ``sum psi(t_i) dY_i``.

    For RD kernels this equals ``sum psi(t) dY(t) - sum psi(t) dY(-t)``.
    ``dy`` may be two-dimensional (replications x cells).
    """
    times, dy = _split_increments(increments)
    w = estimator_weights(kernel, times)
    out = dy @ w
    return float(out) if np.ndim(out) == 0 else out


def analytic_risk(kernel: KernelSpec, f: PiecewiseQuadratic, f_at_0: float,
                  noise: NoiseModel) -> RiskReport:
    """Exact MSE ``(<psi, f> - f(0))^2 + sigma^2 ||psi||^2`` of a boundary kernel at ``f``."""
    psi = kernel.as_piecewise()
    bias = inner_product(psi, f) - f_at_0
    variance = noise.sigma**2 * norm_sq(psi)
    return RiskReport(delta_star=math.sqrt(norm_sq(f)), b_star=abs(f_at_0),
                      risk=bias * bias + variance, bias_sq=bias * bias, variance=variance,
                      sigma=noise.sigma)


def rd_analytic_risk(kernel: KernelSpec, f_plus: PiecewiseQuadratic,
                     f_minus: PiecewiseQuadratic, jump: float, noise: NoiseModel) -> RiskReport:
    """Exact MSE of the two-sided estimator for the jump ``f+(0) - f-(0)``."""
    psi = kernel.as_piecewise()
    bias = inner_product(psi, f_plus) - inner_product(psi, f_minus) - jump
    variance = 2.0 * noise.sigma**2 * norm_sq(psi)
    return RiskReport(delta_star=math.sqrt(norm_sq(f_plus) + norm_sq(f_minus)),
                      b_star=abs(jump), risk=bias * bias + variance, bias_sq=bias * bias,
                      variance=variance, sigma=noise.sigma)


@dataclass(frozen=True)
class Probe:
    name: str
    f: PiecewiseQuadratic
    f_at_0: float


def probe_family(noise: NoiseModel, params: SmoothnessParams, solution: BoundarySolution,
                 family_depths=(-0.3, -0.12455, 0.0, 0.3),
                 quadratic_scales=(0.5, 1.0, 2.0)) -> list[Probe]:
    """Fixed set of class members at which the minimax kernel's risk is probed.

    Contains ``+-f*`` scaled to ``b(delta*)``, members ``g_y`` of the boundary
    family at the same height, the zero function and the bumps
    ``+-(C/2)(t - s)^2`` on ``[0, s)`` with ``s`` a multiple of the parabola
    reach ``sqrt(2 b(delta*) / C)``.
    """
    from .least_favorable import build_boundary_solution

    C = params.lipschitz_constant
    b = modulus(optimal_delta(noise), params, solution.norm_sq).b_value
    f_star = scale_solution(solution, b, params).shape
    probes = [Probe("f_star", f_star, b), Probe("minus_f_star", -f_star, -b)]
    for y in family_depths:
        g = build_boundary_solution(y, solution.interior)
        probes.append(Probe(f"g_y={y:g}", scale_solution(g, b, params).shape, b))
    probes.append(Probe("zero", PiecewiseQuadratic.zero(), 0.0))
    reach = math.sqrt(2.0 * b / C)
    for k in quadratic_scales:
        s = k * reach
        bump = PiecewiseQuadratic([0.0, s], [0.5 * C * s * s], [-C * s], [C])
        probes.append(Probe(f"quadratic_s={k:g}", bump, bump.values[0]))
        probes.append(Probe(f"minus_quadratic_s={k:g}", -bump, -bump.values[0]))
    return probes
