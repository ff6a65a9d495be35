"""Riesz kernel constants and the closed-form unit-ball benchmark solution.

The solver works with the fractional order s in (1/2, 1); the associated
Riesz potential has order alpha = 2 - 2s in (0, 1).  Everything here is a
pure function of (n, s); the heavy lifting is done by the Gamma function.
"""

import math

import numpy as np


class FracParams:
    """Problem parameters (n, s) with the derived Riesz order alpha = 2 - 2s."""

    __slots__ = ("n", "s")

    def __init__(self, n, s):
        if n not in (1, 2):
            raise ValueError(f"spatial dimension must be 1 or 2, got {n}")
        if not 0.5 < s < 1.0:
            raise ValueError(f"fractional order s must lie in (1/2, 1), got {s}")
        self.n = int(n)
        self.s = float(s)

    @property
    def alpha(self):
        return 2.0 - 2.0 * self.s

    def __repr__(self):
        return f"FracParams(n={self.n}, s={self.s})"


def riesz_normalization(n, alpha):
    """Normalization gamma(alpha) = pi^(n/2) 2^alpha Gamma(alpha/2) / Gamma((n-alpha)/2).

    The Riesz potential of order alpha is convolution with
    |x|^(alpha-n) / gamma(alpha).
    """
    if not 0.0 < alpha < n:
        raise ValueError(f"Riesz order must lie in (0, {n}), got {alpha}")
    return (
        math.pi ** (n / 2.0)
        * 2.0**alpha
        * math.gamma(alpha / 2.0)
        / math.gamma((n - alpha) / 2.0)
    )


def ball_constant(n, s):
    """Amplitude K of the unit-ball solution K (1-|x|^2)_+^s for f = 1.

    K = 2^(-2s) Gamma(n/2) / (Gamma(n/2 + s) Gamma(1 + s)).  Accepts any
    s in (0, 1] so norm-evaluation tests can probe outside the solver range.
    """
    if n not in (1, 2):
        raise ValueError(f"spatial dimension must be 1 or 2, got {n}")
    if not 0.0 < s <= 1.0:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    return (
        2.0 ** (-2.0 * s)
        * math.gamma(n / 2.0)
        / (math.gamma(n / 2.0 + s) * math.gamma(1.0 + s))
    )


class BallExact:
    """Exact solution triple (u, sigma, p) on the unit ball with data f = 1.

    u     = K (1 - |x|^2)_+^s
    sigma = grad u = -2 s K x (1 - |x|^2)_+^(s-1)
    p     = -x / n            (the Riesz potential of sigma, linear here)

    sigma blows up as |x| -> 1 from inside; by the (.)_+ convention both u
    and sigma evaluate to 0 for |x| >= 1, so callers must not sample sigma
    exactly on the sphere expecting a limit value.
    """

    def __init__(self, n, s):
        self.n = int(n)
        self.s = float(s)
        self.K = ball_constant(n, s)

    def u(self, x):
        x = np.asarray(x, dtype=float)
        r2 = _radius_sq(x, self.n)
        w = np.maximum(1.0 - r2, 0.0)
        return self.K * w**self.s

    def sigma(self, x):
        x = np.asarray(x, dtype=float)
        r2 = _radius_sq(x, self.n)
        inside = r2 < 1.0
        w = np.where(inside, 1.0 - r2, 1.0)
        fac = np.where(inside, -2.0 * self.s * self.K * w ** (self.s - 1.0), 0.0)
        if self.n == 1:
            return fac * x
        return fac[..., None] * x

    def p(self, x):
        x = np.asarray(x, dtype=float)
        return -x / self.n

    def f(self, x):
        x = np.asarray(x, dtype=float)
        shape = x.shape if self.n == 1 else x.shape[:-1]
        return np.ones(shape)

    def integral_u(self):
        """int_B1 u dx, closed form via the Beta function (used by the energy identity)."""
        s = self.s
        if self.n == 1:
            return self.K * math.sqrt(math.pi) * math.gamma(s + 1.0) / math.gamma(s + 1.5)
        return self.K * math.pi / (s + 1.0)


def exact_ball(n, s, x):
    """Evaluate (u, sigma, p) of the unit-ball benchmark at a single point."""
    sol = BallExact(n, s)
    x = np.asarray(x, dtype=float)
    if n == 1:
        x = float(x)
    return float(sol.u(x)), np.atleast_1d(sol.sigma(x)), np.atleast_1d(sol.p(x))


def _radius_sq(x, n):
    if n == 1:
        return np.asarray(x) ** 2
    return np.sum(np.asarray(x) ** 2, axis=-1)
