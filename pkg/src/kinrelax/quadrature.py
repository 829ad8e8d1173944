"""Discrete velocity space for the Gaussian probability weight.

Every velocity integral in the model is taken against the equilibrium
density phi(v) = exp(-v^2)/sqrt(pi).  The grid realizes

    integral g(v) phi(v) dv  ~  sum_j w_j g(v_j)

with Gauss-Hermite nodes, exact for polynomials of degree <= 2*order - 1,
and carries the bilinear pairing <f, g>_phi = sum_j w_j f_j g_j.

``adaptive_phi_integral`` is a deliberately separate interval-splitting
Simpson rule over a truncated range; it shares nothing with the
Gauss-Hermite path and serves as the cross-check for every value the
grid produces.
"""

import math
from dataclasses import dataclass

import numpy as np

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class VelocityGrid:
    """Gauss-Hermite nodes with weights normalized to the phi measure."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        if self.order < 2:
            raise ValueError(f"grid order must be >= 2, got {self.order}")
        if self.nodes.shape != (self.order,) or self.weights.shape != (self.order,):
            raise ValueError("nodes/weights length must equal the grid order")
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def vmax(self) -> float:
        return float(self.nodes[-1])


def build_grid(order: int) -> VelocityGrid:
    """Build the quadrature grid of the given order.

    Rejects order < 2 and any order large enough that the Hermite weight
    computation underflows (weights must stay finite and positive).
    """
    if order < 2:
        raise ValueError(f"grid order must be >= 2, got {order}")
    with np.errstate(all="ignore"):
        nodes, weights = np.polynomial.hermite.hermgauss(order)
    weights = weights / weights.sum()  # physicists' weights sum to sqrt(pi)
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
        raise ValueError(
            f"order {order} loses weight positivity in the node computation; "
            "use a smaller grid"
        )
    return VelocityGrid(nodes=nodes, weights=weights, order=order)


def as_grid_array(values, grid: VelocityGrid) -> np.ndarray:
    """Validate that ``values`` is a 1D array matching the grid length."""
    values = np.asarray(values)
    if values.shape != (grid.order,):
        raise ValueError(
            f"array of shape {values.shape} does not match grid order {grid.order}"
        )
    return values


def inner_product_phi(f, g, grid: VelocityGrid):
    """Bilinear pairing sum_j w_j f_j g_j.

    No conjugation is applied: complex inputs (Fourier modes) are paired
    with the plain product, matching the real-valued convention of the
    model.  This is not a sesquilinear inner product.
    """
    f = as_grid_array(f, grid)
    g = as_grid_array(g, grid)
    return np.sum(grid.weights * f * g)


def norm_phi(f, grid: VelocityGrid) -> float:
    """Weighted L2 norm sqrt(sum_j w_j |f_j|^2)."""
    f = as_grid_array(f, grid)
    return float(np.sqrt(np.sum(grid.weights * np.abs(f) ** 2)))


def moment(f, k: int, grid: VelocityGrid):
    """k-th velocity moment sum_j w_j v_j^k f_j."""
    f = as_grid_array(f, grid)
    return np.sum(grid.weights * grid.nodes**k * f)


def integrate_phi(f, grid: VelocityGrid):
    """Discrete integral of f against phi: sum_j w_j f_j."""
    return moment(f, 0, grid)


def gaussian_moment(k: int) -> float:
    """Exact integral of v^k phi(v) dv: zero for odd k, (k-1)!!/2^(k/2) for even k."""
    if k < 0:
        raise ValueError("moment degree must be nonnegative")
    if k % 2 == 1:
        return 0.0
    return math.prod(range(1, k, 2)) / 2.0 ** (k // 2)


def adaptive_phi_integral(func, tol: float = 1e-13, half_width: float = 7.0,
                          max_depth: int = 48):
    """Adaptive Simpson integral of func(v)*phi(v) over (-half_width, half_width).

    Independent of the Gauss-Hermite path.  The default half-width leaves
    a truncation error below exp(-49) ~ 5e-22.  Complex-valued ``func``
    integrates componentwise.
    """

    def g(v):
        return func(v) * math.exp(-v * v) / SQRT_PI

    def recurse(a, fa, b, fb, m, fm, whole, eps, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = g(lm)
        frm = g(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return recurse(a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1) + recurse(
            m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1
        )

    total = 0.0
    for lo, hi in ((-half_width, 0.0), (0.0, half_width)):  # split at the peak
        m = 0.5 * (lo + hi)
        flo, fhi, fm = g(lo), g(hi), g(m)
        whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi)
        total = total + recurse(lo, flo, hi, fhi, m, fm, whole, 0.5 * tol, max_depth)
    return total
