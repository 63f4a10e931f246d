"""Radial fields on the Heisenberg group in Laguerre-mode x frequency coefficients.

A RadialField holds g[k, sign, j] against the basis psi_k(r, sigma)/sqrt(pi),
sign 0 for sigma > 0 and 1 for sigma < 0, with sigma_j = p_j * delta.  Squared
Sobolev norms are sum ((k+1)|sigma|)^order |g|^2 * delta/(2|sigma|); the (0, +)
slab carries the Hardy lift with g = sqrt(pi) * f.
"""

import json
import os
import warnings

import numpy as np
from scipy.interpolate import CubicSpline

from .grids import FrequencyGrid, RadialSpectralGrid
from .hardy import HardyFunction, sobolev2


class RadialField:
    """Coefficient tensor over (Laguerre mode, frequency sign, frequency index)."""

    def __init__(self, grid, coeffs=None):
        if coeffs is None:
            coeffs = np.zeros(grid.coeff_shape(), dtype=complex)
        else:
            coeffs = np.asarray(coeffs, dtype=complex)
            if coeffs.shape != grid.coeff_shape():
                raise ValueError("coefficient tensor shape must match grid")
            if not np.all(np.isfinite(coeffs.view(float))):
                raise ValueError("coefficients must be finite")
        self.grid = grid
        self.coeffs = coeffs

    def copy(self):
        return RadialField(self.grid, self.coeffs.copy())

    def __add__(self, other):
        self._check(other)
        return RadialField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return RadialField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return RadialField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def _check(self, other):
        if self.grid != other.grid:
            raise ValueError("grid mismatch")

    def __repr__(self):
        return f"RadialField({self.grid!r})"


def linear_symbol(k, sign, sigma, gamma):
    """Multiplier ((k+1)|sigma| - gamma*sigma)/(1-gamma) of the rescaled linear part.

    Strictly positive on the truncated band; on (k=0, sigma>0) it collapses to
    sigma for every speed.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError("speed gamma must lie in [0, 1)")
    sigma = np.asarray(sigma, dtype=float)
    signed = np.where(sign >= 0, sigma, -sigma) if np.ndim(sign) else (sigma if sign >= 0 else -sigma)
    return ((k + 1) * np.abs(signed) - gamma * signed) / (1.0 - gamma)


def symbol_table(grid, gamma):
    """linear_symbol on the whole coefficient tensor."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("speed gamma must lie in [0, 1)")
    kk = np.arange(grid.k_max + 1)[:, None]
    lam = np.empty(grid.coeff_shape())
    lam[:, 0, :] = ((kk + 1) * grid.sigma - gamma * grid.sigma) / (1.0 - gamma)
    lam[:, 1, :] = ((kk + 1) * grid.sigma + gamma * grid.sigma) / (1.0 - gamma)
    return lam


def hsobolev2(u, order=1):
    """Squared Heisenberg Sobolev norm of the given order (order in {-1, 0, 1, 2})."""
    g = u.grid
    kk = (np.arange(g.k_max + 1) + 1)[:, None, None]
    weight = (kk * g.sigma[None, None, :]) ** order * g.mu[None, None, :]
    return float(np.sum(weight * np.abs(u.coeffs) ** 2))


def hnorm(u, order=1):
    return np.sqrt(max(hsobolev2(u, order), 0.0))


def h2norm2_inhom(u):
    """Inhomogeneous H^2 norm squared: weight 1 + ((k+1)|sigma|)^2."""
    g = u.grid
    kk = (np.arange(g.k_max + 1) + 1)[:, None, None]
    weight = (1.0 + (kk * g.sigma[None, None, :]) ** 2) * g.mu[None, None, :]
    return float(np.sum(weight * np.abs(u.coeffs) ** 2))


def momentum(u):
    """(D_s u, u): the diagonal sum of sigma |g|^2 against the measure weights."""
    g = u.grid
    pos = np.sum(np.abs(u.coeffs[:, 0, :]) ** 2) * g.delta / 2.0
    neg = np.sum(np.abs(u.coeffs[:, 1, :]) ** 2) * g.delta / 2.0
    return float(pos - neg)


def hinner(u, v, order=1):
    """Real order-weighted inner product of two fields."""
    u._check(v)
    g = u.grid
    kk = (np.arange(g.k_max + 1) + 1)[:, None, None]
    weight = (kk * g.sigma[None, None, :]) ** order * g.mu[None, None, :]
    return float(np.real(np.sum(weight * u.coeffs * np.conj(v.coeffs))))


def truncate(u, n):
    """Galerkin projection: zero modes k > n and frequencies outside [1/n, n].

    Idempotent, self-adjoint, and norm-nonincreasing at the discrete level.
    """
    g = u.grid
    out = u.coeffs.copy()
    if n < g.k_max:
        out[n + 1:, :, :] = 0.0
    band = (g.sigma >= 1.0 / n - 1e-12) & (g.sigma <= n + 1e-12)
    out[:, :, ~band] = 0.0
    return RadialField(g, out)


def split_plus(u):
    """Decompose u into its (k=0, sigma>0) component and the rest; exact and orthogonal."""
    uplus = RadialField(u.grid)
    uplus.coeffs[0, 0, :] = u.coeffs[0, 0, :]
    w = u.copy()
    w.coeffs[0, 0, :] = 0.0
    return uplus, w


def embed_hardy(f, grid):
    """Lift a Hardy function onto the (0, +) slab: g = sqrt(pi) * f at the lattice nodes.

    Off-lattice source nodes are cubic-interpolated; support outside the band is
    clipped with a warning when more than 1% of the order-1 mass is lost.
    """
    out = RadialField(grid)
    src = f.grid
    if (src.n_points == grid.n_sigma and abs(src.sigma_min - grid.sigma_min) < 1e-12
            and abs(src.sigma_max - grid.sigma_max) < 1e-12):
        vals = f.coeffs.copy()
    else:
        spline = CubicSpline(src.nodes, f.coeffs, extrapolate=False)
        vals = spline(grid.sigma)
        vals[~np.isfinite(vals)] = 0.0
    out.coeffs[0, 0, :] = np.sqrt(np.pi) * vals
    total = np.pi * sobolev2(f, 1)
    if total > 0:
        lost = 1.0 - hsobolev2(out, 1) / total
        if lost > 0.01:
            warnings.warn(f"embed_hardy: {100 * lost:.2f}% of the source mass lies "
                          "outside the spectral band")
    return out


def extract_hardy(u, require_pure=True):
    """Inverse of embed_hardy for (0, +)-only fields: f = g / sqrt(pi) on the lattice band."""
    g = u.grid
    mask = np.ones(u.coeffs.shape, dtype=bool)
    mask[0, 0, :] = False
    rest = float(np.sum(np.abs(u.coeffs[mask]) ** 2))
    if require_pure and rest > 1e-20 * max(1.0, np.sum(np.abs(u.coeffs) ** 2)):
        raise ValueError("extract_hardy requires a (0, +)-only field; split_plus first")
    grid = FrequencyGrid(g.sigma_min, g.sigma_max, g.n_sigma)
    return HardyFunction(grid, u.coeffs[0, 0, :] / np.sqrt(np.pi))


def apply_symmetry_radial(u, x):
    """T_X on a radial field: each (k, sign) slab maps by g(sigma/alpha^2)/alpha with phases.

    The dilation preserves the mode index (psi_k(r/alpha, sigma/alpha^2)-covariance),
    so the action is slab-wise the Hardy-side interpolation formula.
    """
    g = u.grid
    out = RadialField(g)
    if x.alpha == 1.0:
        vals = u.coeffs.copy()
    else:
        args = g.sigma / x.alpha ** 2
        vals = np.zeros_like(u.coeffs)
        for k in range(g.k_max + 1):
            for s in range(2):
                spline = CubicSpline(g.sigma, u.coeffs[k, s, :], extrapolate=False)
                row = spline(args)
                row[~np.isfinite(row)] = 0.0
                vals[k, s, :] = row
    phase_pos = np.exp(1j * (x.theta - x.s0 * g.sigma))
    phase_neg = np.exp(1j * (x.theta + x.s0 * g.sigma))
    out.coeffs[:, 0, :] = vals[:, 0, :] * phase_pos / x.alpha
    out.coeffs[:, 1, :] = vals[:, 1, :] * phase_neg / x.alpha
    before = hsobolev2(u, 1)
    if before > 0:
        lost = 1.0 - hsobolev2(out, 1) / before
        if lost > 0.01:
            warnings.warn(f"apply_symmetry_radial: {100 * lost:.2f}% of the mass "
                          f"clipped by the band (alpha={x.alpha:g})")
    return out


def save_csv(u, path):
    """CSV per-(k, sign) rows "k,sign,sigma,re,im" plus a JSON grid sidecar."""
    g = u.grid
    with open(path, "w") as fh:
        fh.write("k,sign,sigma,re,im\n")
        for k in range(g.k_max + 1):
            for s, sgn in ((0, 1), (1, -1)):
                for sigma, c in zip(g.sigma, u.coeffs[k, s, :]):
                    fh.write(f"{k},{sgn},{sgn * sigma:.17g},{c.real:.17g},{c.imag:.17g}\n")
    with open(_sidecar(path), "w") as fh:
        json.dump({"delta": g.delta, "p_lo": g.p_lo, "p_hi": g.p_hi,
                   "k_max": g.k_max, "n_s": g.n_s}, fh)


def load_csv(path):
    with open(_sidecar(path)) as fh:
        meta = json.load(fh)
    grid = RadialSpectralGrid(delta=meta["delta"], p_lo=meta["p_lo"], p_hi=meta["p_hi"],
                              k_max=meta["k_max"], n_s=meta["n_s"])
    out = RadialField(grid)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    k = data[:, 0].astype(int)
    s = (data[:, 1] < 0).astype(int)
    j = np.rint(np.abs(data[:, 2]) / grid.delta).astype(int) - grid.p_lo
    out.coeffs[k, s, j] = data[:, 3] + 1j * data[:, 4]
    return out


def _sidecar(path):
    base, _ = os.path.splitext(path)
    return base + ".grid.json"
