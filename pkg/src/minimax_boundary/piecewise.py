"""Piecewise-quadratic functions on the half line with exact integration.

A :class:`PiecewiseQuadratic` stores, for every interval ``[knots[k], knots[k+1])``,
the value and slope at the left knot and the constant second derivative on the
interval.  Beyond the last knot the function equals ``tail_value``.  This is
the natural representation for the least favorable functions and minimax
kernels, which have piecewise constant curvature, and it allows norms and inner
products to be computed without quadrature error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import integrate

from . import _io

# 3-point Gauss-Legendre on [0, 1]; exact for polynomials of degree <= 5.
_GL_NODES = 0.5 * (1.0 + np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)]))
_GL_WEIGHTS = 0.5 * np.array([5.0, 8.0, 5.0]) / 9.0


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PiecewiseQuadratic:
    """C^1 piecewise quadratic on ``[0, inf)``.

    Parameters
    ----------
    knots : array_like, shape (n + 1,)
        Strictly increasing breakpoints starting at 0.
    values, slopes, curvatures : array_like, shape (n,)
        Value and first derivative at the left knot of each piece, and the
        (constant) second derivative on the piece.
    tail_value : float
        Constant value for ``t >= knots[-1]``.
    """

    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    curvatures: np.ndarray
    tail_value: float = 0.0

    def __post_init__(self):
        knots = _frozen(self.knots)
        values = _frozen(self.values)
        slopes = _frozen(self.slopes)
        curvatures = _frozen(self.curvatures)
        if knots.ndim != 1 or knots.size < 1:
            raise ValueError("knots must be a non-empty 1-d sequence")
        if knots[0] != 0.0:
            raise ValueError(f"first knot must be 0, got {knots[0]!r}")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        n = knots.size - 1
        for name, arr in (("values", values), ("slopes", slopes), ("curvatures", curvatures)):
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "curvatures", curvatures)
        object.__setattr__(self, "tail_value", float(self.tail_value))

    @classmethod
    def zero(cls) -> "PiecewiseQuadratic":
        return cls([0.0], [], [], [], 0.0)

    @classmethod
    def from_curvatures(cls, knots, value0: float, slope0: float, curvatures,
                        tail_value: float = 0.0) -> "PiecewiseQuadratic":
        """Integrate piecewise-constant curvature from an initial value and slope."""
        knots = np.asarray(knots, dtype=float)
        curvatures = np.asarray(curvatures, dtype=float)
        lengths = np.diff(knots)
        values = np.empty_like(curvatures)
        slopes = np.empty_like(curvatures)
        v, s = float(value0), float(slope0)
        for k, (c, h) in enumerate(zip(curvatures, lengths)):
            values[k], slopes[k] = v, s
            v = v + s * h + 0.5 * c * h * h
            s = s + c * h
        return cls(knots, values, slopes, curvatures, tail_value)

    @property
    def n_pieces(self) -> int:
        return self.knots.size - 1

    @property
    def support_end(self) -> float:
        """Last knot; the function is constant (``tail_value``) beyond it."""
        return float(self.knots[-1])

    def _locate(self, t: np.ndarray):
        idx = np.searchsorted(self.knots, t, side="right") - 1
        inside = (idx >= 0) & (idx < self.n_pieces)
        k = np.clip(idx, 0, max(self.n_pieces - 1, 0))
        return k, inside

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("piecewise quadratic is defined on t >= 0 only")
        out = np.full(t.shape, self.tail_value)
        if self.n_pieces:
            k, inside = self._locate(t)
            x = t - self.knots[k]
            val = self.values[k] + x * (self.slopes[k] + 0.5 * self.curvatures[k] * x)
            out = np.where(inside, val, out)
        return float(out) if out.ndim == 0 else out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        if self.n_pieces:
            k, inside = self._locate(t)
            x = t - self.knots[k]
            out = np.where(inside, self.slopes[k] + self.curvatures[k] * x, 0.0)
        return float(out) if out.ndim == 0 else out

    def end_states(self):
        """Value and slope at the right end of every piece (left limits)."""
        h = np.diff(self.knots)
        v = self.values + self.slopes * h + 0.5 * self.curvatures * h * h
        s = self.slopes + self.curvatures * h
        return v, s

    def gluing_residuals(self):
        """Absolute value and slope jumps at every knot after the first.

        The last entry compares the final piece with the constant tail.
        """
        if not self.n_pieces:
            return np.zeros(0), np.zeros(0)
        v_end, s_end = self.end_states()
        v_next = np.append(self.values[1:], self.tail_value)
        s_next = np.append(self.slopes[1:], 0.0)
        return np.abs(v_end - v_next), np.abs(s_end - s_next)

    def max_abs_curvature(self) -> float:
        return float(np.max(np.abs(self.curvatures))) if self.n_pieces else 0.0

    def rescaled(self, amplitude: float, time_factor: float) -> "PiecewiseQuadratic":
        """Return ``t -> amplitude * f(time_factor * t)`` with re-knotted pieces."""
        if time_factor <= 0:
            raise ValueError("time_factor must be positive")
        a, lam = float(amplitude), float(time_factor)
        return PiecewiseQuadratic(
            self.knots / lam,
            a * self.values,
            a * lam * self.slopes,
            a * lam * lam * self.curvatures,
            a * self.tail_value,
        )

    def __neg__(self) -> "PiecewiseQuadratic":
        return self.rescaled(-1.0, 1.0)

    def norm_sq(self) -> float:
        return norm_sq(self)

    def to_dict(self) -> dict:
        return {
            "knots": [float(k) for k in self.knots],
            "pieces": [
                {"value": float(v), "slope": float(s), "curvature": float(c)}
                for v, s, c in zip(self.values, self.slopes, self.curvatures)
            ],
            "tail_value": self.tail_value,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "PiecewiseQuadratic":
        pieces = doc["pieces"]
        return cls(
            doc["knots"],
            [p["value"] for p in pieces],
            [p["slope"] for p in pieces],
            [p["curvature"] for p in pieces],
            doc.get("tail_value", 0.0),
        )

    def to_json(self) -> str:
        return _io.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PiecewiseQuadratic":
        return cls.from_dict(json.loads(text))


def evaluate(shape: PiecewiseQuadratic, t):
    """Pointwise value of ``shape`` at ``t >= 0`` (tail value past the last knot)."""
    return shape(t)


def norm_sq(shape: PiecewiseQuadratic) -> float:
    """Exact squared L2 norm by closed-form integration of each squared piece."""
    if shape.tail_value != 0.0:
        raise ValueError("function with a nonzero tail is not square integrable")
    h = np.diff(shape.knots)
    v, s, c = shape.values, shape.slopes, shape.curvatures
    per_piece = (v * v * h + v * s * h**2 + (s * s + v * c) * h**3 / 3.0
                 + s * c * h**4 / 4.0 + c * c * h**5 / 20.0)
    return float(np.sum(per_piece))


def inner_product(p: PiecewiseQuadratic, q: PiecewiseQuadratic) -> float:
    """Exact ``int_0^inf p(t) q(t) dt`` over the merged knot set.

    At most one of the two functions may have a nonzero tail.
    """
    if p.tail_value != 0.0 and q.tail_value != 0.0:
        raise ValueError("product of two functions with nonzero tails is not integrable")
    if p.tail_value != 0.0:
        end = q.support_end
    elif q.tail_value != 0.0:
        end = p.support_end
    else:
        end = min(p.support_end, q.support_end)
    if end <= 0.0:
        return 0.0
    grid = np.union1d(p.knots[p.knots < end], q.knots[q.knots < end])
    grid = np.append(grid, end)
    lo, h = grid[:-1], np.diff(grid)
    nodes = lo[:, None] + h[:, None] * _GL_NODES[None, :]
    prod = np.asarray(p(nodes)) * np.asarray(q(nodes))
    return float(np.sum(h * (prod @ _GL_WEIGHTS)))


def quadrature_norm_sq(shape: PiecewiseQuadratic, epsabs: float = 1e-13,
                       epsrel: float = 1e-12) -> float:
    """Adaptive quadrature of ``shape(t)**2``, used only as an independent cross-check."""
    if shape.tail_value != 0.0:
        raise ValueError("function with a nonzero tail is not square integrable")
    total = 0.0
    # integrate piece by piece so the adaptive rule never straddles a kink
    for a, b in zip(shape.knots[:-1], shape.knots[1:]):
        val, _ = integrate.quad(lambda t: shape(t) ** 2, a, b, epsabs=epsabs,
                                epsrel=epsrel, limit=200)
        total += val
    return total
