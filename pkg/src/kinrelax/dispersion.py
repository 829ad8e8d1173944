"""Dispersion relation of the density-determined solution class.

For a spatial frequency xi the Fourier-mode operator

    A_xi f = -(1 + i xi v) f + <f, 1>_phi

has one slowly decaying eigenpair.  Writing c for the unique solution of

    Xi(c) := integral c phi(v) / (c^2 + v^2) dv = xi,

the eigenvalue is lam(xi) = xi*c - 1 in (-1, 0) and the eigenvector is
the transfer function 1/(b + i xi v) with b = xi*c.  Xi is odd and maps
(0, inf) strictly decreasingly onto (0, sqrt(pi)), so admissible
frequencies form the open band 0 < |xi| < sqrt(pi); the density spectrum
must vanish outside it.

Evaluation: Xi(c) = sqrt(pi) * erfcx(c) for c > 0 (extended oddly), a
closed form the test suite validates against ``xi_of_c_quadrature`` (the
adaptive-quadrature evaluation of the defining integral) before anything
trusts it.  The inverse uses bracketed Brent iteration polished with
Newton steps; Xi'(c) = 2*(c*Xi(c) - 1) stays in (-2, 0), so the polish
is safe anywhere on the band.
"""

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .quadrature import SQRT_PI, VelocityGrid, adaptive_phi_integral

BAND_EDGE = SQRT_PI
DEFAULT_XI_MIN = 1e-6
DEFAULT_EDGE_MARGIN = 1e-6
XI_RESIDUAL_TOL = 1e-11

TABLE_FORMAT_VERSION = 1


class UnsupportedFrequencyError(ValueError):
    """Frequency outside the open admissible band 0 < |xi| < sqrt(pi)."""


def xi_of_c(c: float) -> float:
    """Xi(c) via the scaled complementary error function; odd in c."""
    if c == 0.0:
        raise ValueError("Xi is undefined at c = 0 (the integrand is singular); "
                         "the c -> 0 limit is +/- sqrt(pi)")
    return math.copysign(SQRT_PI * float(special.erfcx(abs(c))), c)


def xi_of_c_quadrature(c: float) -> float:
    """Xi(c) by adaptive quadrature of the defining integral (oracle path)."""
    if c == 0.0:
        raise ValueError("Xi is undefined at c = 0")
    a = abs(c)
    # absolute tolerance tracks the ~1/c decay so the relative error stays tight
    tol = 1e-13 if a <= 1.0 else 1e-12 / a
    val = adaptive_phi_integral(lambda v: a / (a * a + v * v), tol=tol)
    return math.copysign(val, c)


def c_of_xi(xi: float, *, xi_min: float = DEFAULT_XI_MIN,
            edge_margin: float = DEFAULT_EDGE_MARGIN,
            residual_tol: float = XI_RESIDUAL_TOL) -> float:
    """Invert Xi on the band: the unique c with Xi(c) = xi and sign(c) = sign(xi).

    Frequencies outside the open band raise UnsupportedFrequencyError.
    Inside the band but within xi_min of 0 or edge_margin of the edge,
    a warning is issued and the residual tolerance is widened 100x.
    """
    x = abs(xi)
    if not 0.0 < x < BAND_EDGE:
        raise UnsupportedFrequencyError(
            f"xi={xi!r} is outside the open band 0 < |xi| < sqrt(pi) ~ {BAND_EDGE:.9f}; "
            "the density spectrum is identically zero there"
        )
    tol = residual_tol
    if x < xi_min or x > BAND_EDGE - edge_margin:
        warnings.warn(
            f"xi={xi!r} is within {xi_min:g} of 0 or {edge_margin:g} of the band "
            f"edge; inversion tolerance widened to {100.0 * residual_tol:g}",
            RuntimeWarning, stacklevel=2,
        )
        tol = 100.0 * residual_tol

    def f(c):
        return SQRT_PI * special.erfcx(c) - x

    hi = max(1.0, 2.0 / x)  # outer asymptote Xi(c) ~ 1/c
    while f(hi) > 0.0:
        hi *= 2.0
    c = optimize.brentq(f, 1e-300, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200)

    for _ in range(3):  # Newton polish; derivative 2*(c*Xi(c) - 1)
        r = SQRT_PI * float(special.erfcx(c)) - x
        if r == 0.0:
            break
        step = r / (2.0 * (c * (r + x) - 1.0))
        if not 0.0 < c - step < math.inf:
            break
        c -= step

    residual = abs(SQRT_PI * float(special.erfcx(c)) - x)
    if residual > tol:
        raise ArithmeticError(
            f"inversion residual {residual:g} exceeds tolerance {tol:g} at xi={xi!r}"
        )
    return math.copysign(c, xi)


@dataclass(frozen=True)
class DispersionPoint:
    """One admissible frequency with its decay data.

    xi:  frequency in (-sqrt(pi), 0) or (0, sqrt(pi))
    c:   inverse-dispersion parameter, same sign as xi
    b:   xi*c, always in (0, 1)
    a:   (b - 1)/xi, the imaginary part of the flux coefficient
    lam: b - 1 in (-1, 0); the mode density decays like exp(lam*t)
    """

    xi: float
    c: float
    b: float
    a: float
    lam: float

    def __post_init__(self):
        if not 0.0 < self.b < 1.0:
            raise ValueError(f"b = xi*c must lie in (0, 1), got {self.b!r}")
        if math.copysign(1.0, self.c) != math.copysign(1.0, self.xi):
            raise ValueError("c must carry the sign of xi")

    @property
    def k(self) -> complex:
        """Flux coefficient a*i: the mode flux is k(xi) * rho_hat(xi)."""
        return complex(0.0, self.a)


def dispersion_point(xi: float, **kwargs) -> DispersionPoint:
    """Solve the dispersion relation at xi and package the derived fields."""
    c = c_of_xi(xi, **kwargs)
    b = xi * c
    lam = b - 1.0
    return DispersionPoint(xi=float(xi), c=c, b=b, a=lam / xi, lam=lam)


def transfer_function(point: DispersionPoint, grid: VelocityGrid) -> np.ndarray:
    """Eigenvector 1/(b + i xi v) on the grid; lifts density to the kinetic state.

    The denominator never vanishes (b > 0, v real).  Its defining
    identities, integral against phi equal to one and first moment equal
    to a*i, hold at the grid level only as accurately as the quadrature
    resolves the pole at distance c from the real axis; see the README
    accuracy table.
    """
    return 1.0 / (point.b + 1j * point.xi * grid.nodes)


@dataclass(frozen=True)
class DispersionTable:
    """Dispersion data tabulated on a fixed frequency set, sorted by xi."""

    xi: np.ndarray
    c: np.ndarray
    b: np.ndarray
    a: np.ndarray
    lam: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.xi.shape[0]
        for name in ("c", "b", "a", "lam"):
            if getattr(self, name).shape != (n,):
                raise ValueError("table columns must share one length")
        if n > 1 and not np.all(np.diff(self.xi) > 0):
            raise ValueError("table frequencies must be strictly increasing")
        for name in ("xi", "c", "b", "a", "lam"):
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return int(self.xi.shape[0])

    def index_of(self, xi_value: float) -> int:
        """Index of the stored frequency matching xi_value to ~1e-12."""
        i = int(np.searchsorted(self.xi, xi_value))
        tol = 1e-12 * max(1.0, abs(xi_value))
        for j in (i - 1, i):
            if 0 <= j < len(self) and abs(self.xi[j] - xi_value) <= tol:
                return j
        raise KeyError(
            f"dispersion table has no entry for xi={xi_value!r}; "
            "rebuild the table over the active frequencies"
        )

    def point(self, xi_value: float) -> DispersionPoint:
        j = self.index_of(xi_value)
        return DispersionPoint(xi=float(self.xi[j]), c=float(self.c[j]),
                               b=float(self.b[j]), a=float(self.a[j]),
                               lam=float(self.lam[j]))

    def lam_for(self, xi_values) -> np.ndarray:
        return np.array([self.lam[self.index_of(x)] for x in np.atleast_1d(xi_values)])

    def a_for(self, xi_values) -> np.ndarray:
        return np.array([self.a[self.index_of(x)] for x in np.atleast_1d(xi_values)])

    def to_csv(self, path) -> None:
        """Write (xi, c, b, lambda) rows at 17 significant digits."""
        lines = [f"# kinrelax dispersion table format v{TABLE_FORMAT_VERSION}"]
        for key in sorted(self.metadata):
            lines.append(f"# {key}={self.metadata[key]}")
        lines.append("xi,c,b,lambda")
        for j in range(len(self)):
            lines.append(",".join(f"{v:.17g}" for v in
                                  (self.xi[j], self.c[j], self.b[j], self.lam[j])))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "DispersionTable":
        metadata = {}
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line == "xi,c,b,lambda":
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if "=" in body:
                        key, _, val = body.partition("=")
                        metadata[key.strip()] = val.strip()
                    continue
                rows.append([float(tok) for tok in line.split(",")])
        data = np.array(rows)
        xi, c, b, lam = data.T
        return cls(xi=xi, c=c, b=b, a=lam / xi, lam=lam, metadata=metadata)

    def to_json(self, path) -> None:
        doc = {
            "format_version": TABLE_FORMAT_VERSION,
            "metadata": {k: self.metadata[k] for k in sorted(self.metadata)},
            "points": [
                {"xi": self.xi[j], "c": self.c[j], "b": self.b[j],
                 "a": self.a[j], "lambda": self.lam[j]}
                for j in range(len(self))
            ],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def build_table(xi_values, *, xi_min: float = DEFAULT_XI_MIN,
                edge_margin: float = DEFAULT_EDGE_MARGIN,
                residual_tol: float = XI_RESIDUAL_TOL,
                metadata: dict | None = None) -> DispersionTable:
    """Tabulate dispersion points at the given frequencies (sorted, deduplicated)."""
    xi_values = np.unique(np.asarray(xi_values, dtype=float))
    points = [dispersion_point(x, xi_min=xi_min, edge_margin=edge_margin,
                               residual_tol=residual_tol) for x in xi_values]
    meta = {"xi_residual_tol": residual_tol, "xi_min": xi_min,
            "edge_margin": edge_margin, "count": len(points)}
    if metadata:
        meta.update(metadata)
    return DispersionTable(
        xi=np.array([p.xi for p in points]),
        c=np.array([p.c for p in points]),
        b=np.array([p.b for p in points]),
        a=np.array([p.a for p in points]),
        lam=np.array([p.lam for p in points]),
        metadata=meta,
    )
