"""Frequency grids for the half-plane (Hardy) and Heisenberg (Laguerre x frequency) sides.

The half-plane side lives on a uniform positive-frequency grid [eps, M] carrying
trapezoidal quadrature weights.  Uniformity is load-bearing: the cubic kernel's
frequency constraint sigma2 = sigma1 + sigma3 - tau must land on-grid exactly.

The Heisenberg side lives on a signed frequency lattice sigma = p*delta embedded
in the integer-frequency lattice of a periodic s-box of half-length L_s = pi/delta,
so that the collocation transforms are exact DFTs, plus a radial quadrature in
v = r^2 and tabulated Laguerre modes.
"""

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import eval_laguerre


class FrequencyGrid:
    """Uniform grid of positive frequencies on [sigma_min, sigma_max] with trapezoid weights."""

    def __init__(self, sigma_min=1e-3, sigma_max=30.0, n_points=1024):
        if not (0.0 < sigma_min < sigma_max):
            raise ValueError("need 0 < sigma_min < sigma_max")
        if n_points < 8:
            raise ValueError("need at least 8 grid points")
        self.sigma_min = float(sigma_min)
        self.sigma_max = float(sigma_max)
        self.n_points = int(n_points)
        self.nodes = np.linspace(self.sigma_min, self.sigma_max, self.n_points)
        self.spacing = self.nodes[1] - self.nodes[0]
        self.weights = np.full(self.n_points, self.spacing)
        self.weights[0] *= 0.5
        self.weights[-1] *= 0.5

    def refined(self, factor=2):
        """Grid with the spacing divided by `factor` on the same interval (nested nodes)."""
        return FrequencyGrid(self.sigma_min, self.sigma_max,
                             factor * (self.n_points - 1) + 1)

    def __eq__(self, other):
        return (isinstance(other, FrequencyGrid)
                and self.sigma_min == other.sigma_min
                and self.sigma_max == other.sigma_max
                and self.n_points == other.n_points)

    def __hash__(self):
        return hash((self.sigma_min, self.sigma_max, self.n_points))

    def __repr__(self):
        return (f"FrequencyGrid([{self.sigma_min:g}, {self.sigma_max:g}], "
                f"n={self.n_points})")


def radial_quadrature(sigma_min, sigma_max, k_max=0, rtol_scale=1e-16,
                      points_per_panel=24, growth=1.35):
    """Nodes/weights in v = r^2 approximating int_0^inf g(r) 2*pi*r dr = pi * int_0^inf g dv.

    Composite Gauss-Legendre on geometrically growing panels: the integrands are
    poly(v) * exp(-c v) with c between 2*sigma_min and ~4*sigma_max, so the panel
    sizes must resolve scale 1/(4*sigma_max) near v=0, while the tail cut must
    defeat the mode polynomials: x^{2 k_max} e^{-x} < rtol at x = 2*sigma_min*V_max.
    Returned weights include the factor pi.
    """
    x_max = -np.log(rtol_scale)
    for _ in range(50):
        x_new = -np.log(rtol_scale) + 2.0 * k_max * np.log(max(x_max, np.e))
        if abs(x_new - x_max) < 1e-9:
            break
        x_max = x_new
    v_max = x_max / (2.0 * sigma_min)
    v0 = 0.01 / sigma_max
    edges = [0.0, v0]
    while edges[-1] < v_max:
        edges.append(min(v_max, edges[-1] * growth))
    xg, wg = leggauss(points_per_panel)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * xg + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * wg)
    return np.concatenate(nodes), np.pi * np.concatenate(weights)


class RadialSpectralGrid:
    """Spectral grid for radial fields: Laguerre modes x signed frequency lattice.

    Frequencies are sigma = p*delta for integer p in [p_lo, p_hi] (and their
    negatives), excluding zero.  The collocation box has N_s points and
    half-length L_s = pi/delta; anti-aliasing of the cubic demands 4*p_hi <= N_s.
    Modes are psi_k(r, sigma) = L_k(2|sigma| r^2) exp(-|sigma| r^2); coefficients
    are stored against psi_k/sqrt(pi), whose squared L2(dx dy) norm is 1/(2|sigma|).
    """

    def __init__(self, delta=1.0 / 128, p_lo=1, p_hi=768, k_max=8, n_s=4096,
                 radial_points_per_panel=24, radial_growth=1.35):
        if delta <= 0 or p_lo < 1 or p_hi <= p_lo:
            raise ValueError("need delta > 0 and 1 <= p_lo < p_hi")
        if k_max < 0:
            raise ValueError("k_max must be >= 0")
        if 4 * p_hi > n_s:
            raise ValueError(
                f"aliasing: occupied band (p_hi={p_hi}) exceeds a quarter of the "
                f"s-box lattice (n_s={n_s}); need n_s >= {4 * p_hi}")
        self.delta = float(delta)
        self.p_lo = int(p_lo)
        self.p_hi = int(p_hi)
        self.k_max = int(k_max)
        self.n_s = int(n_s)
        self.p_indices = np.arange(self.p_lo, self.p_hi + 1)
        self.sigma = self.p_indices * self.delta          # positive branch
        self.n_sigma = len(self.sigma)
        self.L_s = np.pi / self.delta
        self.radial_nodes, self.radial_weights = radial_quadrature(
            self.sigma[0], self.sigma[-1], k_max=self.k_max,
            points_per_panel=radial_points_per_panel, growth=radial_growth)
        self.n_radial = len(self.radial_nodes)
        # mode table psi_k(v_q, sigma_j); |sigma| is the same for both signs
        self.mode_table = np.empty((self.k_max + 1, self.n_radial, self.n_sigma))
        for j, s in enumerate(self.sigma):
            x = 2.0 * s * self.radial_nodes
            e = np.exp(-s * self.radial_nodes)
            for k in range(self.k_max + 1):
                self.mode_table[k, :, j] = eval_laguerre(k, x) * e
        # projection table: (2 sigma / pi) * rho_q * psi_k, so that projecting psi_k
        # against it returns 1 (modes are rho-orthogonal to quadrature accuracy)
        self.proj_table = (self.mode_table * self.radial_weights[None, :, None]
                           * (2.0 * self.sigma / np.pi)[None, None, :])
        # measure weights mu_j = delta/(2|sigma_j|) (per sign)
        self.mu = self.delta / (2.0 * self.sigma)

    @classmethod
    def from_cutoff(cls, n, oversample=1, k_max=None, n_s=None, **kw):
        """Grid whose band is the symmetric window [1/n, n] of the mode/frequency cutoff n."""
        delta = 1.0 / (n * oversample)
        p_lo = oversample
        p_hi = n * n * oversample
        if k_max is None:
            k_max = n
        if n_s is None:
            n_s = 4 * p_hi
        return cls(delta=delta, p_lo=p_lo, p_hi=p_hi, k_max=k_max, n_s=n_s, **kw)

    @property
    def sigma_min(self):
        return self.sigma[0]

    @property
    def sigma_max(self):
        return self.sigma[-1]

    def coeff_shape(self):
        """Shape of a coefficient tensor: (mode k, sign, frequency index)."""
        return (self.k_max + 1, 2, self.n_sigma)

    def mode_values(self, k, sigma):
        """psi_k(r, sigma) on the radial quadrature nodes (v = r^2)."""
        a = abs(sigma)
        return eval_laguerre(k, 2.0 * a * self.radial_nodes) * np.exp(-a * self.radial_nodes)

    def __eq__(self, other):
        return (isinstance(other, RadialSpectralGrid)
                and self.delta == other.delta and self.p_lo == other.p_lo
                and self.p_hi == other.p_hi and self.k_max == other.k_max
                and self.n_s == other.n_s)

    def __hash__(self):
        return hash((self.delta, self.p_lo, self.p_hi, self.k_max, self.n_s))

    def __repr__(self):
        return (f"RadialSpectralGrid(delta=1/{1/self.delta:g}, "
                f"band=[{self.sigma_min:g}, {self.sigma_max:g}], "
                f"k_max={self.k_max}, n_s={self.n_s})")
