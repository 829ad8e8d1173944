"""Cross-cutting residuals and comparison reports.

Norm conventions: weighted L2 in velocity (the phi pairing), plain
discrete L2 in x, max over frequency modes.  Tolerances live in one
place (``Tolerances``) so pass/fail is reproducible.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .dispersion import DispersionTable, transfer_function
from .direct import ModeOperator
from .gds import FieldSnapshot, SpectralDensity
from .quadrature import VelocityGrid


@dataclass(frozen=True)
class Tolerances:
    """Centralized pass/fail thresholds with their documented defaults."""

    mass_conservation: float = 1e-12
    self_adjoint: float = 1e-12
    negative_semidefinite: float = 1e-12
    operator_norm: float = 2.0 + 1e-9
    collision_spectrum: float = 1e-10
    weights_sum: float = 1e-12
    second_moment: float = 1e-10
    xi_roundtrip: float = 1e-11
    closed_form_vs_quadrature: float = 1e-10
    transfer_identity: float = 1e-8
    eigenpair: float = 1e-8
    spectral_continuity: float = 1e-12
    gds_vs_direct: float = 1e-6

    @classmethod
    def from_dict(cls, overrides: dict | None) -> "Tolerances":
        if not overrides:
            return cls()
        known = {f for f in cls.__dataclass_fields__}
        bad = set(overrides) - known
        if bad:
            raise ValueError(f"unknown tolerance keys: {sorted(bad)}")
        return cls(**overrides)


@dataclass(frozen=True)
class ResidualReport:
    """Named residual set with its tolerance; passes iff max <= tolerance."""

    name: str
    residuals: np.ndarray
    tolerance: float
    metadata: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0

    @property
    def l2_residual(self) -> float:
        return float(np.sqrt(np.sum(np.asarray(self.residuals) ** 2)))

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_residual": self.max_residual,
            "l2_residual": self.l2_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "count": int(self.residuals.size),
            "metadata": self.metadata,
        }

    def format_text(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: max={self.max_residual:.3e} "
                f"l2={self.l2_residual:.3e} tol={self.tolerance:.3e} "
                f"(n={self.residuals.size})")


def spectral_derivative(values: np.ndarray, dx: float) -> np.ndarray:
    """Exact periodic d/dx of a real sample array via the FFT."""
    n = len(values)
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
    out = np.fft.ifft(1j * k * np.fft.fft(values))
    return out.real


def continuity_residual(before: FieldSnapshot, center: FieldSnapshot,
                        after: FieldSnapshot, tolerance: float = 1e-6) -> ResidualReport:
    """Physical-space continuity check on three equally spaced snapshots.

    Central-difference d(rho)/dt plus the spectral x-derivative of the
    flux; for states of the solution class the only error is the O(dt^2)
    time difference, so the residual must shrink at second order under
    dt-halving.
    """
    for other in (before, after):
        if other.x_grid.shape != center.x_grid.shape or \
                np.max(np.abs(other.x_grid - center.x_grid)) > 1e-12 * center.domain_length:
            raise ValueError("snapshots live on different x-grids")
    dt_lo = center.time - before.time
    dt_hi = after.time - center.time
    if dt_lo <= 0 or abs(dt_hi - dt_lo) > 1e-12 * max(1.0, dt_lo):
        raise ValueError("snapshots must be equally spaced in time (before, center, after)")
    drho_dt = (after.rho - before.rho) / (2.0 * dt_lo)
    dflux_dx = spectral_derivative(center.flux, center.dx)
    residual = np.abs(drho_dt + dflux_dx)
    return ResidualReport(
        name="continuity-closure",
        residuals=residual,
        tolerance=tolerance,
        metadata={"dt": dt_lo, "time": center.time, "x_points": len(center.x_grid)},
    )


def spectral_continuity_residual(rho: SpectralDensity, table: DispersionTable,
                                 tolerance: float = 1e-12) -> ResidualReport:
    """Per-mode |lam*rho_hat + i*xi*k*rho_hat| with k = a*i (identically ~0)."""
    idx = rho.active_indices()
    xi = rho.xi_grid[idx]
    lam = table.lam_for(xi)
    a = table.a_for(xi)
    residual = np.abs((lam + 1j * xi * (1j * a)) * rho.rho_hat[idx])
    return ResidualReport(
        name="spectral-continuity",
        residuals=residual,
        tolerance=tolerance,
        metadata={"active_modes": int(len(idx))},
    )


def compare_gds_direct(rho0: SpectralDensity, times, table: DispersionTable,
                       grid: VelocityGrid, method: str = "exact-dense",
                       tolerance: float = 1e-6, lambda_offset: float = 0.0,
                       rk4_dt: float | None = None) -> ResidualReport:
    """Per-mode, per-time relative error between the closed-form density
    exp(lam t) rho0_hat and the directly integrated mode density.

    The direct side initializes each mode with the transfer function times
    rho0_hat and integrates the dense mode ODE (eigendecomposition for
    'exact-dense', stepping for 'rk4'); it never touches the dispersion
    solve.  ``lambda_offset`` corrupts the closed-form rate on purpose,
    for sensitivity checks.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0 or np.any(times < 0):
        raise ValueError("times must be a 1D array of nonnegative instants")
    idx = rho0.active_indices()
    if len(idx) == 0:
        raise ValueError("initial spectrum has no active modes")

    residuals = np.zeros((len(idx), len(times)))
    worst = {"xi": None, "t": None, "value": -1.0}
    for row, i in enumerate(idx):
        xi = float(rho0.xi_grid[i])
        amp = rho0.rho_hat[i]
        point = table.point(xi)
        f0 = transfer_function(point, grid) * amp
        op = ModeOperator(xi=xi, grid=grid)
        if method == "exact-dense":
            mu, vecs = np.linalg.eig(op.dense())
            coeff = np.linalg.solve(vecs, f0)
            mass = vecs.T @ grid.weights  # row of per-eigenvector densities
            rho_direct = np.array([
                np.sum(grid.weights * f0) if t == 0.0  # skip the eigenbasis roundtrip
                else np.sum(mass * coeff * np.exp(mu * t))
                for t in times
            ])
        elif method == "rk4":
            from .direct import evolve_mode, default_rk4_dt
            dt = rk4_dt if rk4_dt is not None else default_rk4_dt(xi, grid)
            rho_direct = np.empty(len(times), dtype=complex)
            for col, t in enumerate(times):
                if t == 0.0:
                    rho_direct[col] = np.sum(grid.weights * f0)
                    continue
                n = max(1, int(round(t / dt)))
                traj = evolve_mode(f0, xi, grid, t_final=t, dt=t / n, method="rk4",
                                   output_stride=max(1, n))
                rho_direct[col] = traj.densities[-1]
        else:
            raise ValueError(f"unknown method {method!r}; use 'exact-dense' or 'rk4'")
        rho_closed = amp * np.exp((point.lam + lambda_offset) * times)
        rel = np.abs(rho_direct - rho_closed) / abs(amp)
        residuals[row] = rel
        j = int(np.argmax(rel))
        if rel[j] > worst["value"]:
            worst = {"xi": xi, "t": float(times[j]), "value": float(rel[j])}

    return ResidualReport(
        name="gds-vs-direct",
        residuals=residuals.ravel(),
        tolerance=tolerance,
        metadata={
            "method": method,
            "times": times.tolist(),
            "active_modes": int(len(idx)),
            "lambda_offset": lambda_offset,
            "worst": worst,
        },
    )


def fit_convergence_order(steps, errors) -> float:
    """Least-squares slope of log(error) against log(step)."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if steps.shape != errors.shape or len(steps) < 2:
        raise ValueError("need at least two (step, error) pairs")
    if np.any(steps <= 0) or np.any(errors <= 0):
        raise ValueError("steps and errors must be positive for a log-log fit")
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])


def report_to_json(reports, path) -> None:
    """Write a list of ResidualReports as one JSON document."""
    doc = {"reports": [r.to_dict() for r in reports],
           "all_passed": all(r.passed for r in reports)}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
