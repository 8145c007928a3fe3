"""Analytic data generators: radial bumps and stream potentials.

Scalar data use the compactly supported profile h * (1 - (r/R)^2)^2,
which is C1, radially strictly decreasing inside its support, and exactly
zero outside.  Stream potentials use the C3 profile (1 - (r/R)^2)^4 (or a
gaussian), optionally rescaled so the resulting discrete curl has a
prescribed max.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import GridSpec, ScalarField, VectorField2, curl_z, from_stream


@dataclass(frozen=True)
class BumpSpec:
    height: float
    radius: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (self.radius > 0):
            raise ValueError("bump radius must be positive")


@dataclass(frozen=True)
class StreamSpec:
    kind: str = "bump"           # "bump" (compact, power 4) or "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)
    curl_max: float | None = None  # rescale so max |curl_z(from_stream)| equals this

    def __post_init__(self):
        if self.kind not in ("bump", "gaussian"):
            raise ValueError(f"unknown stream kind {self.kind!r}")
        if not (self.width > 0):
            raise ValueError("stream width must be positive")


def bump_values(grid: GridSpec, spec: BumpSpec) -> np.ndarray:
    x, y = grid.meshgrid()
    s2 = ((x - spec.center[0]) ** 2 + (y - spec.center[1]) ** 2) / spec.radius ** 2
    return spec.height * np.clip(1.0 - s2, 0.0, None) ** 2


def bump_field(grid: GridSpec, spec: BumpSpec) -> ScalarField:
    return ScalarField(grid, bump_values(grid, spec))


def flat_top_field(grid: GridSpec, spec: BumpSpec, cap: float) -> ScalarField:
    """Bump clipped at `cap`, flat near the center."""
    return ScalarField(grid, np.minimum(bump_values(grid, spec), cap))


def disk_field(grid: GridSpec, inside: float, outside: float, radius: float,
               center: tuple[float, float] = (0.0, 0.0)) -> ScalarField:
    x, y = grid.meshgrid()
    r2 = (x - center[0]) ** 2 + (y - center[1]) ** 2
    return ScalarField(grid, np.where(r2 < radius ** 2, inside, outside))


def stream_field(grid: GridSpec, spec: StreamSpec) -> ScalarField:
    x, y = grid.meshgrid()
    r2 = (x - spec.center[0]) ** 2 + (y - spec.center[1]) ** 2
    if spec.kind == "bump":
        vals = spec.amplitude * np.clip(1.0 - r2 / spec.width ** 2, 0.0, None) ** 4
    else:
        vals = spec.amplitude * np.exp(-r2 / spec.width ** 2)
    phi = ScalarField(grid, vals)
    if spec.curl_max is not None:
        peak = float(np.max(np.abs(curl_z(from_stream(phi)).values)))
        if peak == 0.0:
            raise ValueError("cannot normalize a stream with zero curl")
        phi = ScalarField(grid, vals * (spec.curl_max / peak))
    return phi


def field_from_stream(grid: GridSpec, spec: StreamSpec) -> VectorField2:
    return from_stream(stream_field(grid, spec))


def constant_in_time(field):
    """Wrap a field as a time-sampled source."""
    def sample(_t: float):
        return field
    return sample


def accumulated_source(forcing, t: float, grid: GridSpec, samples: int = 64) -> ScalarField:
    """Trapezoidal accumulation of a time-sampled scalar source over [0, t]."""
    if forcing is None or t == 0.0:
        return ScalarField.zeros(grid)
    ts = np.linspace(0.0, t, samples + 1)
    acc = np.zeros((grid.n, grid.n))
    prev = forcing(ts[0]).values
    for t0, t1 in zip(ts, ts[1:]):
        cur = forcing(t1).values
        acc += 0.5 * (t1 - t0) * (prev + cur)
        prev = cur
    return ScalarField(grid, acc)


def random_admissible_field(
    grid: GridSpec,
    rng: np.random.Generator,
    curl_max: float = 0.9,
    n_bumps: int = 3,
) -> VectorField2:
    """Random divergence-free field with max |curl| rescaled to curl_max.

    Built from a random combination of compact stream bumps placed well
    inside the domain, so admissibility is exact by construction.
    """
    L = grid.half_width
    x, y = grid.meshgrid()
    vals = np.zeros((grid.n, grid.n))
    for _ in range(n_bumps):
        cx, cy = rng.uniform(-0.4 * L, 0.4 * L, size=2)
        width = rng.uniform(0.25 * L, 0.5 * L)
        amp = rng.uniform(-1.0, 1.0)
        r2 = (x - cx) ** 2 + (y - cy) ** 2
        vals += amp * np.clip(1.0 - r2 / width ** 2, 0.0, None) ** 4
    phi = ScalarField(grid, vals)
    H = from_stream(phi)
    peak = float(np.max(np.abs(curl_z(H).values)))
    if peak == 0.0:
        return H
    scale = curl_max / peak
    return from_stream(ScalarField(grid, vals * scale))
