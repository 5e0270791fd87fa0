"""Uniform 1D mesh and second-order finite-difference operators.

All fields are plain float64 arrays co-located with the grid nodes.  The
operators come in matched pairs so that discrete integration by parts holds
exactly where the time integrator needs it:

* ``div_flux`` is the conservative form ``(c w_x)_x`` built from half-node
  fluxes with arithmetic-mean coefficients,
* ``gradient_mid`` is the staggered first difference living on cell
  midpoints, and
* ``integrate`` is the trapezoid rule.

For any field ``w`` vanishing at both end nodes and any positive nodal
coefficient ``c``::

    integrate(w * div_flux(c, z)) == -sum(c_mid * gradient_mid(w) * gradient_mid(z)) * dx

to machine precision.  The same exact pairing holds for the Neumann
(mirror-ghost) second difference against the trapezoid weights, which is what
makes the discrete thermal mass and energy budgets close without an O(dx^2)
spatial remainder.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

FloatArray = np.ndarray


class BcKind(enum.Enum):
    """Boundary-condition type for second-derivative stencils."""

    DIRICHLET_BOTH = "dirichlet_both"
    NEUMANN_BOTH = "neumann_both"
    MIXED_LEFT_DIRICHLET_RIGHT_NEUMANN = "mixed"


@dataclass(frozen=True)
class Grid1D:
    """Uniform mesh on (0, L) with ``n`` nodes at x_i = i * dx, dx = L/(n-1)."""

    length: float
    n: int
    nodes: FloatArray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.length <= 0:
            raise ConfigError(f"grid length must be positive, got {self.length}")
        if self.n < 3:
            raise ConfigError(f"grid needs at least 3 nodes, got {self.n}")
        object.__setattr__(self, "nodes", np.linspace(0.0, self.length, self.n))

    @property
    def dx(self) -> float:
        return self.length / (self.n - 1)

    @property
    def midpoints(self) -> FloatArray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])


def _check_size(w: FloatArray, grid: Grid1D, name: str = "field") -> FloatArray:
    w = np.asarray(w, dtype=float)
    if w.shape != (grid.n,):
        raise ConfigError(f"{name} has shape {w.shape}, expected ({grid.n},)")
    return w


def d1(w: FloatArray, grid: Grid1D) -> FloatArray:
    """First derivative: central interior, one-sided second order at the ends.

    Exact on polynomials up to degree 2 (the boundary stencils included).
    """
    w = _check_size(w, grid)
    dx = grid.dx
    out = np.empty_like(w)
    out[1:-1] = (w[2:] - w[:-2]) / (2.0 * dx)
    out[0] = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * dx)
    out[-1] = (3.0 * w[-1] - 4.0 * w[-2] + w[-3]) / (2.0 * dx)
    return out


def d1_lowend(w: FloatArray, grid: Grid1D) -> FloatArray:
    """First derivative with first-order one-sided closures at the two end nodes.

    Interior values coincide with :func:`d1`.  This is the summation-by-parts
    closure: with trapezoid weights P it satisfies

        <w, D z> + <D w, z> = w[-1] z[-1] - w[0] z[0]

    exactly, so cross terms built from it telescope in the energy budget.
    The price is O(dx) truncation at the two boundary nodes only.
    """
    w = _check_size(w, grid)
    dx = grid.dx
    out = np.empty_like(w)
    out[1:-1] = (w[2:] - w[:-2]) / (2.0 * dx)
    out[0] = (w[1] - w[0]) / dx
    out[-1] = (w[-1] - w[-2]) / dx
    return out


def d2(w: FloatArray, grid: Grid1D, bc: BcKind) -> FloatArray:
    """Second derivative with boundary closures selected by ``bc``.

    Interior nodes use the standard 3-point stencil.  Neumann ends use the
    mirror ghost node (zero flux), Dirichlet ends a one-sided 4-point stencil
    that is exact on cubics.
    """
    w = _check_size(w, grid)
    dx2 = grid.dx * grid.dx
    out = np.empty_like(w)
    out[1:-1] = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / dx2

    def left_dirichlet():
        return (2.0 * w[0] - 5.0 * w[1] + 4.0 * w[2] - w[3]) / dx2

    def right_dirichlet():
        return (2.0 * w[-1] - 5.0 * w[-2] + 4.0 * w[-3] - w[-4]) / dx2

    if bc is BcKind.DIRICHLET_BOTH:
        out[0] = left_dirichlet()
        out[-1] = right_dirichlet()
    elif bc is BcKind.NEUMANN_BOTH:
        out[0] = 2.0 * (w[1] - w[0]) / dx2
        out[-1] = 2.0 * (w[-2] - w[-1]) / dx2
    elif bc is BcKind.MIXED_LEFT_DIRICHLET_RIGHT_NEUMANN:
        out[0] = left_dirichlet()
        out[-1] = 2.0 * (w[-2] - w[-1]) / dx2
    else:  # pragma: no cover
        raise DomainError(f"unknown boundary kind {bc}")
    return out


def gradient_mid(w: FloatArray, grid: Grid1D) -> FloatArray:
    """Staggered first difference on the n-1 cell midpoints."""
    w = _check_size(w, grid)
    return np.diff(w) / grid.dx


def mid_to_node(psi_mid: FloatArray, grid: Grid1D) -> FloatArray:
    """Average a midpoint field back to the nodes.

    The map is the adjoint of trapezoid sampling: ``integrate(mid_to_node(psi))``
    equals ``sum(psi) * dx`` exactly, so per-cell production terms can be
    deposited on nodes without creating or destroying mass.
    """
    psi_mid = np.asarray(psi_mid, dtype=float)
    if psi_mid.shape != (grid.n - 1,):
        raise ConfigError(f"midpoint field has shape {psi_mid.shape}, expected ({grid.n - 1},)")
    out = np.empty(grid.n)
    out[1:-1] = 0.5 * (psi_mid[:-1] + psi_mid[1:])
    out[0] = psi_mid[0]
    out[-1] = psi_mid[-1]
    return out


def div_flux(coef: FloatArray, w: FloatArray, grid: Grid1D) -> FloatArray:
    """Conservative variable-coefficient diffusion ``(c(x) w_x)_x``.

    Half-node coefficients are arithmetic means of the nodal values.  The two
    boundary entries are zero: every caller owns its boundary rows (Dirichlet
    rows are forced, Neumann fields use :func:`d2` instead).
    """
    coef = _check_size(coef, grid, "coefficient")
    w = _check_size(w, grid)
    if np.any(coef <= 0.0):
        raise DomainError("div_flux requires a strictly positive coefficient")
    c_mid = 0.5 * (coef[1:] + coef[:-1])
    flux = c_mid * np.diff(w)  # dx * (c w_x) at midpoints
    out = np.zeros_like(w)
    out[1:-1] = np.diff(flux) / (grid.dx * grid.dx)
    return out


def integrate(w: FloatArray, grid: Grid1D) -> float:
    """Trapezoid quadrature over (0, L); exact for piecewise-linear node data."""
    w = _check_size(w, grid)
    return float(np.trapezoid(w, dx=grid.dx))


def inner(w: FloatArray, z: FloatArray, grid: Grid1D) -> float:
    """Trapezoid inner product of two nodal fields."""
    return integrate(np.asarray(w, dtype=float) * np.asarray(z, dtype=float), grid)


def cumulative_integral(w: FloatArray, grid: Grid1D) -> FloatArray:
    """Running trapezoid antiderivative from the left end; result[0] == 0."""
    w = _check_size(w, grid)
    out = np.empty_like(w)
    out[0] = 0.0
    np.cumsum(0.5 * grid.dx * (w[1:] + w[:-1]), out=out[1:])
    return out


def reflect_extend(w: FloatArray, grid: Grid1D) -> tuple[FloatArray, Grid1D]:
    """Even extension about x = L onto the doubled interval (0, 2L).

    Returns the extended field on a grid with 2n-1 nodes.  The extension is an
    exact mirror: node L+j*dx carries the value at L-j*dx.
    """
    w = _check_size(w, grid)
    doubled = Grid1D(2.0 * grid.length, 2 * grid.n - 1)
    return np.concatenate([w, w[-2::-1]]), doubled
