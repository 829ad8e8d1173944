"""Direct mode-by-mode integration of the kinetic equation.

After a Fourier transform in x, the equation decouples into dense linear
ODEs f_t = A_xi f on the velocity grid, one per frequency, with

    A_xi f = -(1 + i xi v) f + <f, 1>_phi.

Nothing in the time stepping uses the dispersion construction: the matrix
exponential and RK4 paths below are the derivation-free oracle the rest
of the package is validated against.  ``relaxation_distance`` is the one
deliberate exception; it measures the distance of an evolving state to
the density-determined ray, which requires the transfer function.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .dispersion import dispersion_point, transfer_function
from .quadrature import VelocityGrid, as_grid_array, inner_product_phi, norm_phi


@dataclass(frozen=True)
class ModeOperator:
    """The generator A_xi at one frequency, matrix-free with a dense export."""

    xi: float
    grid: VelocityGrid

    def apply(self, f) -> np.ndarray:
        f = as_grid_array(f, self.grid)
        return -(1.0 + 1j * self.xi * self.grid.nodes) * f + np.sum(self.grid.weights * f)

    def dense(self) -> np.ndarray:
        n = self.grid.order
        return (np.outer(np.ones(n), self.grid.weights).astype(complex)
                - np.diag(1.0 + 1j * self.xi * self.grid.nodes))

    def mass_flux_residual(self, f) -> float:
        """|<A f, 1>_phi + i xi <v f, 1>_phi|: mass changes only by flux."""
        ones = np.ones(self.grid.order)
        lhs = inner_product_phi(self.apply(f), ones, self.grid)
        flux = inner_product_phi(self.grid.nodes * as_grid_array(f, self.grid),
                                 ones, self.grid)
        return abs(lhs + 1j * self.xi * flux)

    def eigensystem(self):
        """Eigenvalues and eigenvectors of the dense operator."""
        return np.linalg.eig(self.dense())

    def hydrodynamic_eigenpair(self):
        """The least-damped eigenpair whose eigenvector carries mass.

        Returns (mu, u) with u scaled so <u, 1>_phi = 1.  Eigenvectors with
        a vanishing mass component are skipped, as is the spurious real
        eigenvalue just above -1 (a discretization artifact of the fast
        kinetic branch) since it is always more damped than the slow mode.
        """
        mu, vecs = self.eigensystem()
        ones = np.ones(self.grid.order)
        for idx in np.argsort(-mu.real):
            u = vecs[:, idx]
            mass = inner_product_phi(u, ones, self.grid)
            if abs(mass) > 1e-8 * norm_phi(u, self.grid):
                return mu[idx], u / mass
        raise ArithmeticError("no eigenvector with a nonvanishing mass component")


def rk4_stability_limit(xi: float, grid: VelocityGrid) -> float:
    """Largest stable RK4 step, 2.8 / max_j |1 + i xi v_j|."""
    return 2.8 / float(np.max(np.abs(1.0 + 1j * xi * grid.nodes)))


def default_rk4_dt(xi: float, grid: VelocityGrid) -> float:
    """Conservative default step 0.01 / (1 + |xi| vmax)."""
    return 0.01 / (1.0 + abs(xi) * grid.vmax)


def step(f, xi: float, grid: VelocityGrid, dt: float, method: str = "rk4") -> np.ndarray:
    """Advance one mode state by dt.

    'rk4' is the classical explicit scheme, rejected above the stability
    bound; 'exact-dense' applies the matrix exponential of the dense
    operator and is the high-trust path.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    f = as_grid_array(f, grid).astype(complex)
    op = ModeOperator(xi=xi, grid=grid)
    if method == "rk4":
        limit = rk4_stability_limit(xi, grid)
        if dt > limit:
            raise ValueError(f"dt={dt:g} exceeds the RK4 stability bound {limit:g}")
        k1 = op.apply(f)
        k2 = op.apply(f + 0.5 * dt * k1)
        k3 = op.apply(f + 0.5 * dt * k2)
        k4 = op.apply(f + dt * k3)
        return f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if method == "exact-dense":
        return linalg.expm(op.dense() * dt) @ f
    raise ValueError(f"unknown method {method!r}; use 'rk4' or 'exact-dense'")


@dataclass(frozen=True)
class ModeTrajectory:
    """States and densities of one mode recorded along the integration."""

    xi: float
    times: np.ndarray
    states: np.ndarray     # (n_out, grid order), complex
    densities: np.ndarray  # (n_out,), <f(t), 1>_phi


def evolve_mode(f0, xi: float, grid: VelocityGrid, t_final: float, dt: float,
                method: str = "exact-dense", output_stride: int = 1) -> ModeTrajectory:
    """Repeatedly step one mode, recording every output_stride-th state.

    t_final must be an integer multiple of dt.  The density <f, 1>_phi is
    recorded at each output time.
    """
    f = as_grid_array(f0, grid).astype(complex)
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    n_steps = int(round(t_final / dt))
    if abs(n_steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"t_final={t_final!r} is not an integer multiple of dt={dt!r}")
    op = ModeOperator(xi=xi, grid=grid)
    if method == "rk4":
        limit = rk4_stability_limit(xi, grid)
        if dt > limit:
            raise ValueError(f"dt={dt:g} exceeds the RK4 stability bound {limit:g}")
        propagate = None
    elif method == "exact-dense":
        propagate = linalg.expm(op.dense() * dt)
    else:
        raise ValueError(f"unknown method {method!r}; use 'rk4' or 'exact-dense'")

    ones = np.ones(grid.order)
    times, states, densities = [], [], []

    def record(t, state):
        times.append(t)
        states.append(state.copy())
        densities.append(inner_product_phi(state, ones, grid))

    record(0.0, f)
    for n in range(1, n_steps + 1):
        if propagate is None:
            k1 = op.apply(f)
            k2 = op.apply(f + 0.5 * dt * k1)
            k3 = op.apply(f + 0.5 * dt * k2)
            k4 = op.apply(f + dt * k3)
            f = f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            f = propagate @ f
        if n % output_stride == 0 or n == n_steps:
            record(n * dt, f)

    return ModeTrajectory(xi=xi, times=np.array(times), states=np.array(states),
                          densities=np.array(densities))


def relaxation_distance(f0, xi: float, grid: VelocityGrid, t_grid,
                        method: str = "exact-dense") -> np.ndarray:
    """Distance of the evolving state to the density-determined ray.

    d(t) = ||f(t) - rho(t) K(xi)||_phi / ||f(t)||_phi with rho(t) the
    state's own instantaneous density and K the transfer function.
    Exploratory diagnostic only: it reports data, it asserts no
    convergence statement.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a strictly increasing 1D array")
    if t_grid[0] < 0:
        raise ValueError("t_grid must start at t >= 0")
    f = as_grid_array(f0, grid).astype(complex)
    if norm_phi(f, grid) == 0.0:
        raise ValueError("zero-norm state has no meaningful relaxation distance")

    K = transfer_function(dispersion_point(xi), grid)
    op = ModeOperator(xi=xi, grid=grid)
    ones = np.ones(grid.order)
    out = np.empty(len(t_grid))
    t_prev = 0.0
    for i, t in enumerate(t_grid):
        span = t - t_prev
        if span > 0:
            f = step(f, xi, grid, span, method=method) if method == "exact-dense" \
                else _rk4_span(f, op, span, rk4_stability_limit(xi, grid))
        t_prev = t
        nf = norm_phi(f, grid)
        if nf == 0.0:
            raise ValueError(f"state norm vanished at t={t!r}")
        rho = inner_product_phi(f, ones, grid)
        out[i] = norm_phi(f - rho * K, grid) / nf
    return out


def _rk4_span(f, op: ModeOperator, span: float, limit: float) -> np.ndarray:
    n = max(1, int(np.ceil(span / (0.5 * limit))))
    dt = span / n
    for _ in range(n):
        k1 = op.apply(f)
        k2 = op.apply(f + 0.5 * dt * k1)
        k3 = op.apply(f + 0.5 * dt * k2)
        k4 = op.apply(f + dt * k3)
        f = f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return f
