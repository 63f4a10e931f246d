"""Time integration of the truncated limit flow and the rescaled Heisenberg flow.

The limit flow i df/dt = P(|F|^2 F) has no linear part, so classical RK4 applies;
the Heisenberg flow carries the stiff diagonal symbol ((k+1)|sigma|-gamma sigma)/(1-gamma),
which the integrating-factor RK4 propagates exactly, leaving RK4 to the bounded
nonlinearity.  Momentum is checked every step (integrator-failure guard); the
full conserved/diagnostic series is recorded at snapshot strides.
"""

import numpy as np

from . import collocation, hardy, spectral


class IntegrationError(RuntimeError):
    """NaN blow-up, conservation failure, or a stiffness-guard violation."""


class IntegratorConfig:
    """Scheme, step, horizon, and snapshot stride for a run."""

    def __init__(self, dt, t_final, scheme="RK4", sample_every=100,
                 momentum_drift_abort=1e-3):
        if dt == 0:
            raise ValueError("dt must be nonzero")
        if t_final * dt < 0:
            raise ValueError("t_final and dt must have the same sign")
        n = round(abs(t_final / dt))
        if n < 1 or abs(n * abs(dt) - abs(t_final)) > 1e-9 * abs(dt) * n:
            raise ValueError("t_final must be an integer number of steps")
        self.dt = float(dt)
        self.t_final = float(t_final)
        self.scheme = scheme
        self.n_steps = int(n)
        self.sample_every = max(1, int(sample_every))
        self.momentum_drift_abort = momentum_drift_abort


class Trajectory:
    """Snapshots plus conserved-quantity and diagnostic series."""

    def __init__(self, kind):
        self.kind = kind            # "hardy" | "radial"
        self.times = []
        self.snapshots = []
        self.series = {"t": [], "momentum": [], "energy": [], "dt_norm": [],
                       "w_norm": [], "uplus_norm": []}
        self.dist_orbit = None      # filled by the modulation module
        self.anchors = None

    def record(self, t, snap, **values):
        self.times.append(t)
        self.snapshots.append(snap)
        self.series["t"].append(t)
        for key in ("momentum", "energy", "dt_norm", "w_norm", "uplus_norm"):
            self.series[key].append(values.get(key, np.nan))

    def finalize(self):
        for key in self.series:
            self.series[key] = np.asarray(self.series[key])
        return self

    def write_series(self, path):
        cols = ["t", "momentum", "energy", "w_norm", "uplus_norm", "dt_norm"]
        dist = self.dist_orbit
        with open(path, "w") as fh:
            fh.write(",".join(cols) + ",dist_orbit\n")
            for i in range(len(self.times)):
                row = [f"{self.series[c][i]:.17g}" for c in cols]
                row.append(f"{dist[i]:.17g}" if dist is not None else "nan")
                fh.write(",".join(row) + "\n")


def evolve_limit(u0, cfg):
    """Integrate i df/dt = cubic_projection(f) from a Hardy function by classical RK4."""
    if cfg.scheme not in ("RK4", "IFRK4"):
        raise ValueError(f"unknown scheme {cfg.scheme!r}")
    grid = u0.grid
    kernel = hardy._kernel(grid)
    dt = cfg.dt
    traj = Trajectory("hardy")

    def rhs(c):
        return -1j * kernel.apply(c)

    def sample(t, c):
        u = hardy.HardyFunction(grid, c.copy())
        p = kernel.apply(c)
        mom = hardy.sobolev2(u, 1)
        ene = float(np.real(np.sum(grid.weights * p * np.conj(c) / (2.0 * grid.nodes))))
        dt_norm = np.sqrt(max(0.0, float(
            np.sum(grid.weights * np.abs(p) ** 2 / grid.nodes) / 2.0)))
        traj.record(t, u, momentum=mom, energy=ene, dt_norm=dt_norm)

    c = u0.coeffs.copy()
    mom0 = hardy.sobolev2(u0, 1)
    sample(0.0, c)
    for step in range(1, cfg.n_steps + 1):
        k1 = rhs(c)
        k2 = rhs(c + 0.5 * dt * k1)
        k3 = rhs(c + 0.5 * dt * k2)
        k4 = rhs(c + dt * k3)
        c = c + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(c.view(float))):
            raise IntegrationError(f"NaN at step {step}")
        if mom0 > 0:
            drift = abs(0.5 * float(np.sum(grid.weights * np.abs(c) ** 2)) - mom0) / mom0
            if drift > cfg.momentum_drift_abort:
                raise IntegrationError(f"momentum drift {drift:.2e} at step {step}")
        if step % cfg.sample_every == 0 or step == cfg.n_steps:
            sample(step * dt, c)
    return traj.finalize()


def evolve_heis(u0, gamma, n, cfg):
    """Integrate the speed-gamma truncated Heisenberg flow by integrating-factor RK4.

    Equation: i dU/dt = -Lambda U + Pi_n(|U|^2 U) in coefficients, with Lambda the
    positive diagonal symbol; the linear phase e^{+i Lambda t} is applied exactly.
    """
    grid = u0.grid
    lam = spectral.symbol_table(grid, gamma)
    dt = cfg.dt
    if cfg.scheme == "RK4" and np.max(np.abs(lam)) * abs(dt) > 1.0:
        raise IntegrationError("stiffness guard: use IFRK4 for this speed/step")
    u0 = spectral.truncate(u0, n)
    ep_full = np.exp(1j * lam * dt)
    ep_half = np.exp(1j * lam * dt / 2.0)
    traj = Trajectory("radial")

    def nl(field_coeffs):
        f = spectral.RadialField(grid, field_coeffs)
        return -1j * collocation.cubic_truncated(f, n).coeffs

    def sample(t, c):
        u = spectral.RadialField(grid, c.copy())
        mom = spectral.momentum(u)
        ene = collocation.energy_gamma(u, gamma)
        uplus, w = spectral.split_plus(u)
        rhs_field = spectral.RadialField(
            grid, -lam * c + collocation.cubic_truncated(u, n).coeffs)
        dt_norm = spectral.hnorm(rhs_field, -1)
        traj.record(t, u, momentum=mom, energy=ene, dt_norm=dt_norm,
                    w_norm=spectral.hnorm(w, 1), uplus_norm=spectral.hnorm(uplus, 1))

    c = u0.coeffs.copy()
    mom0 = spectral.momentum(u0)
    sample(0.0, c)
    for step in range(1, cfg.n_steps + 1):
        if cfg.scheme == "IFRK4":
            k1 = nl(c)
            k2 = nl(ep_half * (c + 0.5 * dt * k1))
            k3 = nl(ep_half * c + 0.5 * dt * k2)
            k4 = nl(ep_full * c + dt * ep_half * k3)
            c = ep_full * c + dt / 6.0 * (ep_full * k1 + 2.0 * ep_half * (k2 + k3) + k4)
        else:
            def rhs(x):
                return 1j * lam * x + nl(x)
            k1 = rhs(c)
            k2 = rhs(c + 0.5 * dt * k1)
            k3 = rhs(c + 0.5 * dt * k2)
            k4 = rhs(c + dt * k3)
            c = c + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(c.view(float))):
            raise IntegrationError(f"NaN at step {step}")
        if abs(mom0) > 0:
            m = spectral.momentum(spectral.RadialField(grid, c))
            if abs(m - mom0) / abs(mom0) > cfg.momentum_drift_abort:
                raise IntegrationError(f"momentum drift at step {step}")
        if step % cfg.sample_every == 0 or step == cfg.n_steps:
            sample(step * dt, c)
    return traj.finalize()


def dt_norm_diagnostic(traj):
    """Per-snapshot ratio ||du/dt|| / ||u||_{L^4}^3 and its sup (an empirical bound constant).

    The time derivative is evaluated through the equation's right-hand side, so
    the series certifies the a priori bound rather than a finite difference.
    """
    ratios = []
    for i, u in enumerate(traj.snapshots):
        if traj.kind == "hardy":
            cube_l4 = traj.series["energy"][i] ** 0.75
        else:
            cube_l4 = (collocation.l4norm4_collocation(u)) ** 0.75
        d = traj.series["dt_norm"][i]
        ratios.append(d / cube_l4 if cube_l4 > 0 else 0.0)
    ratios = np.asarray(ratios)
    return ratios, float(np.max(ratios) if len(ratios) else 0.0)
