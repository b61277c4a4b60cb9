"""Bracketed scalar minimization with an explicit unimodality check."""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import BracketError


def minimize_unimodal(func: Callable[[float], float], lo: float, hi: float,
                      tol: float = 1e-10, scan_points: int = 64) -> tuple[float, float]:
    """Minimize ``func`` on ``[lo, hi]``, refusing brackets that are not unimodal.

    A coarse scan first checks that the sampled values fall and then rise
    (a single sign change in successive differences) with the smallest sample
    strictly inside the bracket.  Brent's bounded method (golden section plus
    parabolic steps) then refines the minimum between the two neighbours of
    the best sample.

    Returns
    -------
    (x_min, f_min)

    Raises
    ------
    BracketError
        If the scan shows more than one descent/ascent phase, a non-finite
        value, or a minimum sitting on the bracket boundary.
    """
    if not lo < hi:
        raise BracketError(f"empty bracket ({lo}, {hi})")
    xs = np.linspace(lo, hi, scan_points + 1)
    fs = np.array([func(x) for x in xs])
    if not np.all(np.isfinite(fs)):
        bad = xs[~np.isfinite(fs)]
        raise BracketError(f"objective is not finite at x={bad[0]!r} in ({lo}, {hi})")
    diffs = np.diff(fs)
    # differences at rounding level carry no shape information
    noise = 1e-13 * max(1.0, float(np.max(np.abs(fs))))
    signs = np.sign(diffs[np.abs(diffs) > noise])
    if signs.size and np.any(np.diff(signs) < 0):
        raise BracketError(
            f"objective is not unimodal on ({lo}, {hi}): it rises and then falls again")
    i = int(np.argmin(fs))
    if i == 0 or i == scan_points:
        raise BracketError(
            f"minimum on ({lo}, {hi}) sits at the bracket edge x={xs[i]!r}; widen the bracket")
    res = minimize_scalar(func, bounds=(xs[i - 1], xs[i + 1]), method="bounded",
                          options={"xatol": tol, "maxiter": 500})
    if not res.success:
        raise BracketError(f"bounded Brent search failed: {res.message}")
    x = float(res.x)
    fx = float(res.fun)
    # the scan point can beat the refined one only by rounding
    if fs[i] < fx:
        x, fx = float(xs[i]), float(fs[i])
    return x, fx
