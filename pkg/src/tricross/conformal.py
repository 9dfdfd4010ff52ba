"""Boundary values of the two triangle maps and their composite.

Each map is the normalized incomplete integral of y^a (1-y)^b on [0,1] with
endpoint exponents in (-1, 1].  The integrable endpoint singularities are
removed by the substitutions s = y^(1+a) near 0 and s = (1-y)^(1+b) near 1,
after which adaptive quadrature converges to full precision.

Two exponent variants are provided for the first (isosceles-triangle) map:
the pair (-3/4, +3/4) as printed alongside the crossing theorem, and the pair
(-3/4, -3/4) that the interior angles (pi/4, pi/4, pi/2) give under the usual
half-plane-to-polygon angle rule.  Both are tabulated against X^(8/9); the
comparison measures, it does not adjudicate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from scipy.integrate import quad


@dataclass(frozen=True)
class SCMap:
    """Normalized map w -> integral_0^w y^a (1-y)^b dy / integral_0^1."""

    a: float
    b: float
    tol: float = 1e-12

    def __post_init__(self):
        if not (-1 < self.a <= 1 and -1 < self.b <= 1):
            raise ValueError("endpoint exponents must lie in (-1, 1]")


# exponents printed with the isosceles map
PHI1_PRINTED = SCMap(-0.75, 0.75)
# exponents the angle rule derives from angles (pi/4, pi/4, pi/2)
PHI1_ANGLE = SCMap(-0.75, -0.75)
# equilateral-triangle map
PHI2 = SCMap(-2.0 / 3.0, -2.0 / 3.0)

CARDY_EXPONENT = 8.0 / 9.0


def _raw_integral(m: SCMap, w: float) -> float:
    """Unnormalized integral_0^w y^a (1-y)^b dy via singularity removal."""
    if w == 0.0:
        return 0.0
    ea, eb = 1.0 + m.a, 1.0 + m.b

    def from_zero(upper):
        # s = y^(1+a):  integral = 1/(1+a) * int_0^{upper^(1+a)} (1-s^(1/(1+a)))^b ds
        val, _ = quad(lambda s: (1.0 - s ** (1.0 / ea)) ** m.b,
                      0.0, upper ** ea, epsabs=m.tol / 4, epsrel=0.0, limit=200)
        return val / ea

    def from_one(lower, upper):
        # s = (1-y)^(1+b) over [lower, upper] with upper > 1/2
        lo, hi = (1.0 - upper) ** eb, (1.0 - lower) ** eb
        val, _ = quad(lambda s: (1.0 - s ** (1.0 / eb)) ** m.a,
                      lo, hi, epsabs=m.tol / 4, epsrel=0.0, limit=200)
        return val / eb

    if w <= 0.5:
        return from_zero(w)
    return from_zero(0.5) + from_one(0.5, w)


@lru_cache(maxsize=None)
def _total(m: SCMap) -> float:
    return _raw_integral(m, 1.0)


def sc_value(m: SCMap, w: float) -> float:
    """The normalized map at w; sc_value(0)=0 and sc_value(1)=1."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w must lie in [0,1], got {w}")
    if w == 0.0:
        return 0.0
    if w == 1.0:
        return 1.0
    return _raw_integral(m, w) / _total(m)


def sc_derivative(m: SCMap, w: float) -> float:
    """Density of the normalized map on (0,1)."""
    return w ** m.a * (1.0 - w) ** m.b / _total(m)


def sc_inverse(m: SCMap, x: float) -> float:
    """The unique w with sc_value(w) = x; bisection plus Newton polish."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"target must lie in [0,1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if sc_value(m, mid) < x:
            lo = mid
        else:
            hi = mid
    w = 0.5 * (lo + hi)
    for _ in range(4):
        err = sc_value(m, w) - x
        step = err / sc_derivative(m, w)
        w_new = w - step
        if not lo < w_new < hi:
            break
        w = w_new
        if abs(err) <= m.tol:
            break
    return w


def composite(x: float, first: SCMap = PHI1_PRINTED, second: SCMap = PHI2) -> float:
    """second(first^{-1}(x)): the predicted crossing-coordinate relation."""
    return sc_value(second, sc_inverse(first, x))


def cardy_comparison(grid, estimates=None):
    """Rows comparing both composite variants with X^(8/9) on a grid in (0,1).

    estimates: optional mapping X -> measured crossing probability; when
    supplied, each row also carries pi_hat and its deviations.
    """
    rows = []
    for x in grid:
        x = float(x)
        if not 0.0 < x < 1.0:
            raise ValueError("grid values must lie strictly inside (0,1)")
        psi_printed = composite(x, PHI1_PRINTED)
        psi_angle = composite(x, PHI1_ANGLE)
        ref = x ** CARDY_EXPONENT
        row = {
            "X": x,
            "psi_printed": psi_printed,
            "psi_angle": psi_angle,
            "x_power": ref,
            "dev_printed": psi_printed - ref,
            "dev_angle": psi_angle - ref,
        }
        if estimates is not None and x in estimates:
            pi_hat = float(estimates[x])
            row["pi_hat"] = pi_hat
            row["pi_minus_X"] = pi_hat - x
            row["pi_minus_x_power"] = pi_hat - ref
        rows.append(row)
    return rows


def midpoint_reference(m: SCMap, w: float, panels: int = 1_000_000) -> float:
    """Brute-force fixed-panel midpoint value of the normalized map.

    Uses the same singularity-removing substitutions as sc_value but a plain
    non-adaptive midpoint rule, so it is an independent quadrature oracle.
    """
    import numpy as np

    ea, eb = 1.0 + m.a, 1.0 + m.b

    def midpoint(f, lo, hi):
        h = (hi - lo) / panels
        s = lo + (np.arange(panels) + 0.5) * h
        return float(np.sum(f(s))) * h

    def raw(upper):
        total = midpoint(lambda s: (1.0 - s ** (1.0 / ea)) ** m.b,
                         0.0, min(upper, 0.5) ** ea) / ea
        if upper > 0.5:
            total += midpoint(lambda s: (1.0 - s ** (1.0 / eb)) ** m.a,
                              (1.0 - upper) ** eb, 0.5 ** eb) / eb
        return total

    return raw(w) / raw(1.0)
