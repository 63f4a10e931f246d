"""Hardy-space fields on the upper half-plane: norms, synthesis, and the cubic kernel.

A HardyFunction stores the positive-frequency density f of
F(z) = (2 pi)^{-1/2} int e^{i z sigma} f(sigma) d sigma restricted to [eps, M].
The squared homogeneous norms in this coefficient convention are
(1/2) sum w_j sigma_j^{k-1} |f_j|^2; the corresponding Heisenberg-group values
are pi times these, with the profile Q anchored by f_Q = -2i sqrt(pi) e^{-sigma}.
"""

import json
import os

import numpy as np
from scipy.signal import fftconvolve

from .grids import FrequencyGrid


class HardyFunction:
    """Complex coefficient vector on a FrequencyGrid."""

    def __init__(self, grid, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (grid.n_points,):
            raise ValueError("coefficient length must match grid")
        if not np.all(np.isfinite(coeffs.view(float))):
            raise ValueError("coefficients must be finite")
        self.grid = grid
        self.coeffs = coeffs

    def copy(self):
        return HardyFunction(self.grid, self.coeffs.copy())

    def __add__(self, other):
        self._check(other)
        return HardyFunction(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return HardyFunction(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return HardyFunction(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def _check(self, other):
        if self.grid != other.grid:
            raise ValueError("grid mismatch")

    def __repr__(self):
        return f"HardyFunction({self.grid!r})"


def ground_state_profile(grid):
    """Coefficients of the ground state Q(z) = sqrt(2)/(z+i): f(sigma) = -2i sqrt(pi) e^{-sigma}."""
    return HardyFunction(grid, -2j * np.sqrt(np.pi) * np.exp(-grid.nodes))


def inner(u, v, k=1):
    """Sesquilinear pairing (1/2) sum w sigma^{k-1} u conj(v) (order-k Sobolev pairing)."""
    u._check(v)
    g = u.grid
    return 0.5 * complex(np.sum(g.weights * g.nodes ** (k - 1) * u.coeffs * np.conj(v.coeffs)))


def sobolev2(u, k=1):
    """Squared homogeneous Sobolev norm of order k in {-1, 0, 1}.

    k=1 is the momentum of the flow; multiply by pi for the Heisenberg-side value
    (for Q: sobolev2 = pi, Heisenberg momentum = pi^2).
    """
    if k not in (-1, 0, 1):
        raise ValueError("order k must be in {-1, 0, 1}")
    g = u.grid
    return float(np.sum(g.weights * g.nodes ** (k - 1) * np.abs(u.coeffs) ** 2)) / 2.0


def norm(u, k=1):
    return np.sqrt(max(sobolev2(u, k), 0.0))


class _CubicKernel:
    """Precomputed pieces of the trilinear kernel on one grid.

    p_i = (sigma_i/pi) sum_{j,l} w_j w_l c_k f_j conj(f_k) f_l / (sigma_i+sigma_j+sigma_k+sigma_l)
    with k = j + l - i (frequency constraint, exact on the uniform grid; out-of-range
    k dropped -- this is the band projection composed with the Bergman projection).
    c_k = w_k/h halves the two constraint-boundary rows, which makes the sum the exact
    metric gradient of the discrete quartic energy: momentum and energy are then
    conserved exactly by the semi-discrete flow.  Evaluated in O(N log N) as a
    convolution (over j+l) followed by a correlation (over k).
    """

    def __init__(self, grid):
        n = grid.n_points
        m = np.arange(2 * n - 1)
        self.grid = grid
        self.denom = 4.0 * grid.sigma_min + 2.0 * m * grid.spacing
        self.edge = grid.weights / grid.spacing   # 1 inside, 1/2 at the two ends

    def apply(self, f):
        g = self.grid
        wf = g.weights * f
        conv = fftconvolve(wf, wf)
        b = conv / self.denom
        corr = fftconvolve(b, np.conj(self.edge * f)[::-1])
        n = g.n_points
        return g.nodes / np.pi * corr[n - 1:2 * n - 1]

    def apply_linearization(self, f, v):
        """Derivative of apply at f in direction v (real-linear in v)."""
        g = self.grid
        n = g.n_points
        wf = g.weights * f
        wv = g.weights * v
        b1 = 2.0 * fftconvolve(wf, wv) / self.denom
        b0 = fftconvolve(wf, wf) / self.denom
        corr = (fftconvolve(b1, np.conj(self.edge * f)[::-1])
                + fftconvolve(b0, np.conj(self.edge * v)[::-1]))
        return g.nodes / np.pi * corr[n - 1:2 * n - 1]


_kernel_cache = {}


def _kernel(grid):
    k = _kernel_cache.get(grid)
    if k is None:
        k = _kernel_cache[grid] = _CubicKernel(grid)
    return k


def cubic_projection(u):
    """Band-projected Bergman projection of |F|^2 F, in frequency coefficients.

    Discretizes p(tau) = (tau/pi) iint f(s1) conj(f(s1+s3-tau)) f(s3)
    / (tau+s1+s2+s3) ds1 ds3.  For the ground state this is sigma * f pointwise.
    """
    return HardyFunction(u.grid, _kernel(u.grid).apply(u.coeffs))


def cubic_projection_direct(u):
    """O(N^3) reference summation of the same kernel (tests only)."""
    g = u.grid
    n = g.n_points
    f = u.coeffs
    w = g.weights
    edge = w / g.spacing
    p = np.zeros(n, dtype=complex)
    for i in range(n):
        acc = 0.0 + 0.0j
        for j in range(n):
            lmin = max(0, i - j)
            lmax = min(n - 1, i - j + n - 1)
            if lmin > lmax:
                continue
            l = np.arange(lmin, lmax + 1)
            k = j + l - i
            acc += np.sum(w[j] * w[l] * edge[k] * f[j] * np.conj(f[k]) * f[l]
                          / (g.nodes[i] + g.nodes[j] + g.nodes[k] + g.nodes[l]))
        p[i] = g.nodes[i] / np.pi * acc
    return HardyFunction(g, p)


def cubic_linearization(u, v):
    """Directional derivative of cubic_projection at u in direction v."""
    u._check(v)
    return HardyFunction(u.grid, _kernel(u.grid).apply_linearization(u.coeffs, v.coeffs))


def l4norm4(u):
    """Quartic energy ||F||_{L^4}^4 via the quadruple frequency sum.

    Equals the sigma^{-1}-weighted pairing of cubic_projection(u) with u, which is
    the same discrete quadruple sum (1/(2 pi)) sum w w w c f fbar f fbar / (sum sigma)
    with the constraint index exact on-grid.  Heisenberg-side value is pi times this.
    """
    g = u.grid
    p = _kernel(g).apply(u.coeffs)
    return float(np.real(np.sum(g.weights * p * np.conj(u.coeffs) / (2.0 * g.nodes))))


def synthesize(u, points):
    """Evaluate F(z) = (2 pi)^{-1/2} int e^{i z sigma} f(sigma) d sigma at points with Im z > 0."""
    z = np.atleast_1d(np.asarray(points, dtype=complex))
    if np.any(z.imag <= 0):
        raise ValueError("synthesis points must satisfy Im z > 0")
    g = u.grid
    phase = np.exp(1j * np.outer(z, g.nodes))
    vals = phase @ (g.weights * u.coeffs) / np.sqrt(2.0 * np.pi)
    return vals if np.ndim(points) else complex(vals[0])


def save_csv(u, path):
    """CSV "sigma,re,im" plus a JSON sidecar with the grid; 17-digit decimal round trip."""
    g = u.grid
    with open(path, "w") as fh:
        fh.write("sigma,re,im\n")
        for s, c in zip(g.nodes, u.coeffs):
            fh.write(f"{s:.17g},{c.real:.17g},{c.imag:.17g}\n")
    with open(_sidecar(path), "w") as fh:
        json.dump({"sigma_min": g.sigma_min, "sigma_max": g.sigma_max,
                   "n_points": g.n_points}, fh)


def load_csv(path):
    with open(_sidecar(path)) as fh:
        meta = json.load(fh)
    grid = FrequencyGrid(meta["sigma_min"], meta["sigma_max"], meta["n_points"])
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return HardyFunction(grid, data[:, 1] + 1j * data[:, 2])


def _sidecar(path):
    base, _ = os.path.splitext(path)
    return base + ".grid.json"
