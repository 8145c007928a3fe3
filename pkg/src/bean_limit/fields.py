"""Grids, scalar/vector fields, discrete operators and the power nonlinearity.

All fields live on a uniform cell-centered grid over the square
[-L, L]^2.  Values are stored row-major with y as the outer index, so
``values[j, i]`` is the cell centered at ``(x_i, y_j)``.  Every stencil
uses homogeneous Dirichlet ghost cells: values outside the box count
as zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform square grid on [-L, L]^2 with n cells per side."""

    half_width: float
    n: int

    def __post_init__(self):
        if self.n < 8:
            raise ValueError(f"grid needs n >= 8 cells per side, got {self.n}")
        if not (self.half_width > 0):
            raise ValueError(f"grid half-width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    def cell_centers(self) -> np.ndarray:
        """1-d array of cell-center coordinates (same for both axes)."""
        h = self.spacing
        return -self.half_width + h * (np.arange(self.n) + 0.5)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) arrays with X[j, i] = x_i, Y[j, i] = y_j."""
        c = self.cell_centers()
        return np.meshgrid(c, c, indexing="xy")


@dataclass(frozen=True)
class ScalarField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"field shape {vals.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite entries")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @staticmethod
    def from_function(grid: GridSpec, fn) -> "ScalarField":
        x, y = grid.meshgrid()
        return ScalarField(grid, fn(x, y))

    @staticmethod
    def zeros(grid: GridSpec) -> "ScalarField":
        return ScalarField(grid, np.zeros((grid.n, grid.n)))


@dataclass(frozen=True)
class VectorField2:
    """In-plane pair (h1, h2); the out-of-plane component is identically zero."""

    comp1: ScalarField
    comp2: ScalarField

    def __post_init__(self):
        if self.comp1.grid != self.comp2.grid:
            raise ValueError("vector components must share one grid")

    @property
    def grid(self) -> GridSpec:
        return self.comp1.grid


@dataclass(frozen=True)
class PowerLaw:
    """Odd power nonlinearity psi(s) = sign(s) |s|^m with m > 1."""

    exponent: float

    def __post_init__(self):
        if not (self.exponent > 1):
            raise ValueError(f"power-law exponent must exceed 1, got {self.exponent}")


class Norms(NamedTuple):
    l1: float
    l2: float
    linf: float


# -- raw-array stencils (zero ghost cells) ----------------------------------


def shifted(a: np.ndarray, dj: int, di: int) -> np.ndarray:
    """Array b with b[j, i] = a[j+dj, i+di], zero outside the domain."""
    n, m = a.shape
    out = np.zeros_like(a)
    js_dst = slice(max(0, -dj), n - max(0, dj))
    is_dst = slice(max(0, -di), m - max(0, di))
    js_src = slice(max(0, dj), n - max(0, -dj))
    is_src = slice(max(0, di), m - max(0, -di))
    out[js_dst, is_dst] = a[js_src, is_src]
    return out


def neighbor_sum(a: np.ndarray) -> np.ndarray:
    """Sum of the four axis neighbors, zero ghosts outside."""
    out = np.zeros_like(a)
    out[:, 1:] += a[:, :-1]
    out[:, :-1] += a[:, 1:]
    out[1:, :] += a[:-1, :]
    out[:-1, :] += a[1:, :]
    return out


def lap5_values(a: np.ndarray, h: float) -> np.ndarray:
    out = neighbor_sum(a)
    out -= 4.0 * a
    out *= 1.0 / (h * h)
    return out


def ddx_values(a: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(a)
    out[:, :-1] += a[:, 1:]
    out[:, 1:] -= a[:, :-1]
    out *= 1.0 / (2.0 * h)
    return out


def ddy_values(a: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(a)
    out[:-1, :] += a[1:, :]
    out[1:, :] -= a[:-1, :]
    out *= 1.0 / (2.0 * h)
    return out


# -- field-level operators ---------------------------------------------------


def laplacian5(u: ScalarField) -> ScalarField:
    """Five-point Laplacian with zero ghost cells; exact on quadratics."""
    return ScalarField(u.grid, lap5_values(u.values, u.grid.spacing))


def curl_z(H: VectorField2) -> ScalarField:
    """Out-of-plane curl d(h2)/dx - d(h1)/dy by central differences."""
    h = H.grid.spacing
    w = ddx_values(H.comp2.values, h) - ddy_values(H.comp1.values, h)
    return ScalarField(H.grid, w)


def divergence(H: VectorField2) -> ScalarField:
    h = H.grid.spacing
    d = ddx_values(H.comp1.values, h) + ddy_values(H.comp2.values, h)
    return ScalarField(H.grid, d)


def from_stream(phi: ScalarField) -> VectorField2:
    """Divergence-free field (d(phi)/dy, -d(phi)/dx) from a stream potential.

    With the central-difference pairing used here the discrete divergence
    of the result vanishes identically, including next to the boundary.
    """
    h = phi.grid.spacing
    h1 = ScalarField(phi.grid, ddy_values(phi.values, h))
    h2 = ScalarField(phi.grid, -ddx_values(phi.values, h))
    return VectorField2(h1, h2)


# -- power nonlinearity ------------------------------------------------------


def psi(s, law: PowerLaw):
    """Odd power map sign(s) |s|^m; accepts scalars or arrays."""
    s = np.asarray(s, dtype=float)
    out = np.sign(s) * np.abs(s) ** law.exponent
    return out if out.ndim else float(out)


def psi_prime(s, law: PowerLaw):
    """Derivative m |s|^(m-1); zero at the origin since m > 1."""
    s = np.asarray(s, dtype=float)
    out = law.exponent * np.abs(s) ** (law.exponent - 1.0)
    return out if out.ndim else float(out)


def psi_inv(v, law: PowerLaw):
    """Inverse map sign(v) |v|^(1/m)."""
    v = np.asarray(v, dtype=float)
    out = np.sign(v) * np.abs(v) ** (1.0 / law.exponent)
    return out if out.ndim else float(out)


def norms(u: ScalarField) -> Norms:
    """Cell-weighted L1, L2 and max norms (weight h^2 per cell)."""
    h2 = u.grid.spacing ** 2
    vals = u.values
    return Norms(
        l1=float(h2 * np.sum(np.abs(vals))),
        l2=float(np.sqrt(h2 * np.sum(vals * vals))),
        linf=float(np.max(np.abs(vals))) if vals.size else 0.0,
    )


def boundary_ring_max(u: ScalarField) -> float:
    """Max |u| over the outermost cell ring, the truncation-quality diagnostic."""
    v = np.abs(u.values)
    return float(max(v[0, :].max(), v[-1, :].max(), v[:, 0].max(), v[:, -1].max()))


def support_margin_ok(u: ScalarField, fraction: float = 0.25, tol: float = 1e-12) -> bool:
    """True when u vanishes within `fraction * L` of the boundary."""
    grid = u.grid
    c = np.abs(grid.cell_centers())
    limit = (1.0 - fraction) * grid.half_width
    outside = (c[None, :] > limit) | (c[:, None] > limit)
    if not outside.any():
        return True
    scale = max(1.0, float(np.max(np.abs(u.values))))
    return float(np.max(np.abs(u.values[outside]))) <= tol * scale
