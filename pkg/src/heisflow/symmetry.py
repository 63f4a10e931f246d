"""The translation/phase/scaling group and its action on Hardy coefficients."""

import warnings

import numpy as np
from scipy.interpolate import CubicSpline

from .hardy import HardyFunction, sobolev2


class SymmetryElement:
    """Group element X = (s0, theta, alpha): translation, phase, scaling (alpha > 0).

    Action on half-plane functions: (T_X F)(z) = e^{i theta} alpha F(alpha^2 (z - s0));
    on coefficients: g(sigma) = e^{i theta} e^{-i s0 sigma} f(sigma/alpha^2) / alpha.
    Composition follows T_X T_Y = T_{X*Y}, so X*Y = (s_X + s_Y/alpha_X^2,
    theta_X + theta_Y, alpha_X alpha_Y) and X^{-1} = (-s0 alpha^2, -theta, 1/alpha).
    """

    __slots__ = ("s0", "theta", "alpha")

    def __init__(self, s0=0.0, theta=0.0, alpha=1.0):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.s0 = float(s0)
        self.theta = float(np.mod(theta + np.pi, 2 * np.pi) - np.pi)
        self.alpha = float(alpha)

    @classmethod
    def identity(cls):
        return cls(0.0, 0.0, 1.0)

    def compose(self, other):
        return SymmetryElement(self.s0 + other.s0 / self.alpha ** 2,
                               self.theta + other.theta,
                               self.alpha * other.alpha)

    def inverse(self):
        return SymmetryElement(-self.s0 * self.alpha ** 2, -self.theta, 1.0 / self.alpha)

    def magnitude(self):
        """|X| = |s0| + |theta| + |log alpha|; zero iff identity."""
        return abs(self.s0) + abs(self.theta) + abs(np.log(self.alpha))

    def as_tuple(self):
        return (self.s0, self.theta, self.alpha)

    def __repr__(self):
        return f"SymmetryElement(s0={self.s0:.6g}, theta={self.theta:.6g}, alpha={self.alpha:.6g})"


def apply_symmetry(u, x):
    """T_X u on the grid: off-grid dilation arguments by cubic interpolation, zero outside.

    Warns when more than 1% of the order-1 Sobolev mass is lost to the support clip.
    """
    g = u.grid
    if x.alpha == 1.0:
        coeffs = u.coeffs.copy()
    else:
        args = g.nodes / x.alpha ** 2
        spline = CubicSpline(g.nodes, u.coeffs, extrapolate=False)
        coeffs = spline(args)
        coeffs[~np.isfinite(coeffs)] = 0.0
    coeffs = coeffs / x.alpha * np.exp(1j * (x.theta - x.s0 * g.nodes))
    out = HardyFunction(g, coeffs)
    before = sobolev2(u, 1)
    if before > 0:
        lost = 1.0 - sobolev2(out, 1) / before
        if lost > 0.01:
            warnings.warn(f"apply_symmetry: {100 * lost:.2f}% of the Sobolev mass "
                          f"clipped by the grid band (alpha={x.alpha:g})")
    return out


def gap_closed_form(x):
    """Squared gap ||T_X Q - Q||^2 = 2 pi - 4 pi Re(e^{i theta} / (alpha (i s + 1/alpha^2 + 1)))."""
    denom = 1j * x.s0 + 1.0 / x.alpha ** 2 + 1.0
    return float(2 * np.pi - 4 * np.pi * np.real(np.exp(1j * x.theta) / (x.alpha * denom)))
