"""Least favorable functions for estimating f(0) at the boundary of [0, inf).

The normalized problem is: minimize ``int_0^inf f(t)^2 dt`` subject to
``f(0) = 1`` and ``|f''| <= 1``.  Its solution is built in three layers:

* the interior solution ``f0`` (extra constraint ``f'(0) = 0``), an
  oscillating piecewise quadratic whose knot spacings shrink geometrically,
  fixed by a one-parameter minimization over the first knot ``k0``;
* the boundary family ``g_y``: a unit-curvature parabola falling from 1 to a
  depth ``y`` at ``sqrt(2 (1 - y))``, glued to ``y * f0((t - s) / sqrt|y|)``;
* the optimal depth ``y*`` from a closed-form scalar objective.

General ``f(0) = b`` and curvature bound ``C`` follow by rescaling,
``f_{b,C}(t) = b f(sqrt(C / b) t)`` with squared norm ``b^(5/2) C^(-1/2) I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import DomainError
from .piecewise import PiecewiseQuadratic, norm_sq
from .scalar import minimize_unimodal

K0_BRACKET = (1.0 + 1e-9, 1.4)
Y_BRACKET = (-0.9, 0.5)
DEFAULT_TRUNCATION_TOL = 1e-12
_MAX_PIECES = 400


@dataclass(frozen=True)
class SmoothnessParams:
    """Second-order Hölder class: ``f'`` is Lipschitz with this constant (``|f''| <= C``)."""

    lipschitz_constant: float = 1.0

    def __post_init__(self):
        c = self.lipschitz_constant
        if not (math.isfinite(c) and c > 0):
            raise DomainError(f"lipschitz_constant must be positive and finite, got {c!r}")

    @property
    def C(self) -> float:
        return self.lipschitz_constant


@dataclass(frozen=True)
class InteriorSolution:
    k0: float
    shape: PiecewiseQuadratic
    norm_sq: float
    truncation_tol: float

    @property
    def ratio(self) -> float:
        """``q = sqrt(k0^2 - 1)``: knot spacings shrink by q, extremum sizes by q^2."""
        return math.sqrt(self.k0 * self.k0 - 1.0)

    @property
    def support_limit(self) -> float:
        """Accumulation point of the knot sequence, ``2 k0 / (1 - q)``."""
        return 2.0 * self.k0 / (1.0 - self.ratio)


@dataclass(frozen=True)
class BoundarySolution:
    y: float
    junction: float
    shape: PiecewiseQuadratic
    norm_sq: float
    support_end: float
    interior: InteriorSolution

    @property
    def initial_slope(self) -> float:
        return float(self.shape.slopes[0])


@dataclass(frozen=True)
class ScaledSolution:
    """Least favorable function for ``f(0) = b`` under ``|f''| <= C``.

    ``shape(t) = amplitude * base(time_factor * t)`` with ``amplitude = b`` and
    ``time_factor = sqrt(C / |b|)``; the knots are stored already rescaled.
    """

    b: float
    params: SmoothnessParams
    shape: PiecewiseQuadratic
    norm_sq: float
    amplitude: float
    time_factor: float


@dataclass(frozen=True)
class SolutionConstants:
    k0: float
    I0: float
    y_star: float
    I_star: float
    f_prime_0: float
    t_bar_display: float
    t_bar_recursion: float
    t_bar_constructed: float


def k0_objective(k0: float) -> float:
    """Squared norm of the interior solution as a function of its first knot."""
    if not 1.0 <= k0 < math.sqrt(2.0):
        raise DomainError(f"k0 must lie in [1, sqrt(2)), got {k0!r}")
    q2 = k0 * k0 - 1.0
    numerator = 23.0 / 30.0 * k0**5 + 2.0 * k0 * (1.0 - k0 * k0)
    return numerator / (1.0 - math.sqrt(q2**5))


def solve_k0(search_tol: float = 1e-10, bracket=K0_BRACKET) -> tuple[float, float]:
    """Optimal first knot of the interior solution and the attained squared norm."""
    if not 0 < search_tol <= 1e-4:
        raise DomainError(f"search_tol must lie in (0, 1e-4], got {search_tol!r}")
    return minimize_unimodal(k0_objective, bracket[0], bracket[1], tol=search_tol)


def build_interior_solution(k0: float, truncation_tol: float = DEFAULT_TRUNCATION_TOL
                            ) -> InteriorSolution:
    """Assemble the oscillating interior solution for a given first knot.

    Curvature is -1 on ``[0, k0)`` and alternates sign on each later piece;
    piece ``k >= 2`` has length ``k0 (1 + q) q^(k-2)``.  Pieces are added until
    one has an extremum smaller than ``truncation_tol`` in magnitude; that
    piece is cut at its extremum (where the slope is exactly zero) and the
    function is zero afterwards.
    """
    if not 0 < truncation_tol <= 1e-8:
        raise DomainError(f"truncation_tol must lie in (0, 1e-8], got {truncation_tol!r}")
    if not 1.0 < k0 < math.sqrt(2.0):
        raise DomainError(
            f"k0={k0!r} gives knot ratio k0^2 - 1 outside (0, 1); the knot sequence diverges")
    q = math.sqrt(k0 * k0 - 1.0)
    lengths = [k0]
    curvatures = [-1.0]
    v, s = 1.0 - 0.5 * k0 * k0, -k0
    k = 2
    while True:
        if k > _MAX_PIECES:
            raise DomainError(f"knot sequence did not reach amplitude {truncation_tol} "
                              f"within {_MAX_PIECES} pieces")
        c = 1.0 if k % 2 == 0 else -1.0
        to_vertex = -s / c
        amplitude = abs(v - 0.5 * s * s / c)
        if amplitude < truncation_tol:
            lengths.append(to_vertex)
            curvatures.append(c)
            break
        h = k0 * (1.0 + q) * q ** (k - 2)
        lengths.append(h)
        curvatures.append(c)
        v, s = v + s * h + 0.5 * c * h * h, s + c * h
        k += 1
    knots = [0.0]
    for h in lengths:
        knots.append(knots[-1] + h)
    shape = PiecewiseQuadratic.from_curvatures(knots, 1.0, 0.0, curvatures)
    return InteriorSolution(k0=k0, shape=shape, norm_sq=norm_sq(shape),
                            truncation_tol=truncation_tol)


def build_boundary_solution(y: float, interior: InteriorSolution) -> BoundarySolution:
    """The member ``g_y`` of the boundary family.

    A parabola ``y + (t - s)^2 / 2`` on ``[0, s)``, ``s = sqrt(2 (1 - y))``,
    followed by ``y * f0((t - s) / sqrt|y|)``.  For ``y = 0`` the second part
    is identically zero.
    """
    if not y < 1.0:
        raise DomainError(f"junction depth y must be < 1, got {y!r}")
    s = math.sqrt(2.0 * (1.0 - y))
    if y == 0.0:
        shape = PiecewiseQuadratic([0.0, s], [1.0], [-s], [1.0])
    else:
        r = math.sqrt(abs(y))
        f0 = interior.shape
        sign = 1.0 if y > 0 else -1.0
        inner = s + r * f0.knots
        # for tiny |y| the scaled pieces shrink below the spacing of doubles at s;
        # keep the pieces that stay resolvable (each ends at a vertex of size <= piece^2)
        n = f0.n_pieces
        collapsed = np.nonzero(np.diff(inner) <= 0)[0]
        if collapsed.size:
            n = int(collapsed[0])
        if n == 0:
            shape = PiecewiseQuadratic([0.0, s], [1.0], [-s], [1.0])
        else:
            knots = [0.0, *inner[:n + 1]]
            values = [1.0, *(y * f0.values[:n])]
            slopes = [-s, *(y / r * f0.slopes[:n])]
            curvatures = [1.0, *(sign * f0.curvatures[:n])]
            shape = PiecewiseQuadratic(knots, values, slopes, curvatures)
    return BoundarySolution(y=y, junction=s, shape=shape, norm_sq=norm_sq(shape),
                            support_end=shape.support_end, interior=interior)


def y_objective(y: float, I0: float | None = None) -> float:
    """Closed-form squared norm of ``g_y``."""
    if not y < 1.0:
        raise DomainError(f"junction depth y must be < 1, got {y!r}")
    if I0 is None:
        I0 = _interior_constants()[1]
    return math.sqrt(2.0 * (1.0 - y)) * (3.0 + 4.0 * y + 8.0 * y * y) / 15.0 + I0 * abs(y) ** 2.5


def solve_y_star(search_tol: float = 1e-10, bracket=Y_BRACKET) -> tuple[float, float]:
    """Optimal junction depth and the minimal squared norm ``I*``."""
    if not 0 < search_tol <= 1e-6:
        raise DomainError(f"search_tol must lie in (0, 1e-6], got {search_tol!r}")
    I0 = _interior_constants()[1]
    y, value = minimize_unimodal(lambda v: y_objective(v, I0), bracket[0], bracket[1],
                                 tol=search_tol)
    if not y < 0:
        raise DomainError(f"optimal depth should be negative, solver returned {y!r}")
    return y, value


def support_end(solution: BoundarySolution) -> float:
    """End of the support of the constructed ``g_y`` (junction + scaled interior support)."""
    return solution.support_end


def support_end_display(y: float, k0: float) -> float:
    """``sqrt(2(1-y)) + sqrt(-y) (k0 + (1+q)/(1-q))``, the closed form quoted with the solution."""
    q = math.sqrt(k0 * k0 - 1.0)
    return math.sqrt(2.0 * (1.0 - y)) + math.sqrt(-y) * (k0 + (1.0 + q) / (1.0 - q))


def support_end_recursion(y: float, k0: float) -> float:
    """Support end implied by summing the knot spacings: interior support ``k0 (1 + (1+q)/(1-q))``."""
    q = math.sqrt(k0 * k0 - 1.0)
    return math.sqrt(2.0 * (1.0 - y)) + math.sqrt(-y) * k0 * (1.0 + (1.0 + q) / (1.0 - q))


def scale_solution(base: BoundarySolution, b: float, params: SmoothnessParams) -> ScaledSolution:
    """Rescale the normalized solution to ``f(0) = b`` and curvature bound ``C``.

    Negative ``b`` is the global sign flip of the ``|b|`` solution; ``b = 0``
    gives the zero function.
    """
    C = params.lipschitz_constant
    if b == 0:
        return ScaledSolution(b=0.0, params=params, shape=PiecewiseQuadratic.zero(),
                              norm_sq=0.0, amplitude=0.0, time_factor=math.inf)
    lam = math.sqrt(C / abs(b))
    shape = base.shape.rescaled(b, lam)
    return ScaledSolution(b=float(b), params=params, shape=shape, norm_sq=norm_sq(shape),
                          amplitude=float(b), time_factor=lam)


@lru_cache(maxsize=None)
def _interior_constants(search_tol: float = 1e-10) -> tuple[float, float]:
    return solve_k0(search_tol)


@lru_cache(maxsize=None)
def interior_solution() -> InteriorSolution:
    return build_interior_solution(_interior_constants()[0])


@lru_cache(maxsize=None)
def optimal_solution() -> BoundarySolution:
    """The normalized least favorable function ``f* = g_{y*}`` (cached)."""
    y_star, _ = solve_y_star()
    return build_boundary_solution(y_star, interior_solution())


def boundary_family(y: float) -> BoundarySolution:
    """``g_y`` built on the optimal interior solution."""
    return build_boundary_solution(y, interior_solution())


@lru_cache(maxsize=None)
def solve_constants() -> SolutionConstants:
    k0, I0 = _interior_constants()
    sol = optimal_solution()
    y = sol.y
    return SolutionConstants(
        k0=k0,
        I0=I0,
        y_star=y,
        I_star=y_objective(y, I0),
        f_prime_0=-math.sqrt(2.0 * (1.0 - y)),
        t_bar_display=support_end_display(y, k0),
        t_bar_recursion=support_end_recursion(y, k0),
        t_bar_constructed=sol.support_end,
    )
