"""Explicit solver for the plane-wave curl evolution system.

State is the in-plane pair H = (h1, h2); with w = curl_z(H) and the
power flux Phi = psi_{p-1}(w) the update reads

    h1 <- h1 + dt * (f1 - d(Phi)/dy),
    h2 <- h2 + dt * (f2 + d(Phi)/dx),

all derivatives central with zero ghosts.  The mixed differences cancel
exactly in the discrete divergence, so div H is conserved to roundoff.
Explicit stepping is only appropriate while the effective diffusivity
psi'_{p-1}(w) stays moderate; super-critical data belong to the scalar
reduction's implicit solver instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .fields import (
    GridSpec,
    PowerLaw,
    ScalarField,
    VectorField2,
    curl_z,
    ddx_values,
    ddy_values,
    divergence,
    psi,
    psi_prime,
)

ForcingFn = Optional[Callable[[float], VectorField2]]

BLOWUP_LIMIT = 10.0


class BlowUp(RuntimeError):
    """Curl magnitude exceeded the explicit-scheme guard."""

    def __init__(self, t: float, value: float):
        super().__init__(f"max |curl| = {value:.3g} exceeded {BLOWUP_LIMIT:g} at t={t:.6g}")
        self.t = t


class StepTooSmall(RuntimeError):
    def __init__(self, t: float, dt: float):
        super().__init__(f"stable step {dt:.3e} below minimum at t={t:.6g}")
        self.t = t


@dataclass(frozen=True)
class CurlProblem:
    grid: GridSpec
    p: float
    H0: VectorField2
    forcing: ForcingFn
    horizon: float

    def __post_init__(self):
        if not (self.p > 2):
            raise ValueError(f"exponent p must exceed 2, got {self.p}")
        if not (self.horizon > 0):
            raise ValueError("horizon must be positive")
        if self.H0.grid != self.grid:
            raise ValueError("initial field grid does not match problem grid")
        div0 = float(np.max(np.abs(divergence(self.H0).values)))
        if div0 > 1e-10:
            raise ValueError(f"initial field is not divergence free (max div {div0:.2e})")

    @property
    def law(self) -> PowerLaw:
        return PowerLaw(self.p - 1.0)

    def forcing_at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        if self.forcing is None:
            z = np.zeros((self.grid.n, self.grid.n))
            return z, z
        F = self.forcing(t)
        if F.grid != self.grid:
            raise ValueError("forcing grid does not match problem grid")
        return F.comp1.values, F.comp2.values


@dataclass(frozen=True)
class CurlConfig:
    snapshot_times: tuple[float, ...] = ()
    cfl_safety: float = 0.9
    dt_max: float = math.inf
    dt_min: float = 1e-12

    def __post_init__(self):
        if not (0 < self.cfl_safety <= 1):
            raise ValueError("cfl_safety must lie in (0, 1]")


@dataclass
class CurlDiagnostics:
    times: list[float] = field(default_factory=list)
    l2_H: list[float] = field(default_factory=list)
    curl_lp: list[float] = field(default_factory=list)   # h^2 sum |w|^p
    div_drift: list[float] = field(default_factory=list)
    dt: list[float] = field(default_factory=list)
    dissipation_cum: list[float] = field(default_factory=list)  # sum dt * h^2 sum |w|^p
    forcing_l2_cum: list[float] = field(default_factory=list)   # sum dt * h^2 sum |F|^2


@dataclass
class CurlSolution:
    problem: CurlProblem
    snapshots: list[tuple[float, VectorField2, ScalarField, ScalarField]]
    diagnostics: CurlDiagnostics

    def __post_init__(self):
        times = [t for t, *_ in self.snapshots]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("snapshot times must be strictly increasing")


def dt_stability(omega_vals: np.ndarray, p: float, h: float) -> float:
    """CFL bound h^2 / (8 max psi'_{p-1}(w)) for the explicit update."""
    law = PowerLaw(p - 1.0)
    wmax = float(np.max(np.abs(omega_vals)))
    return h * h / (8.0 * psi_prime(wmax, law) + 1e-30)


def curl_step(
    state: VectorField2,
    t: float,
    dt: float,
    problem: CurlProblem,
) -> VectorField2:
    """One forward-Euler step; the caller is responsible for dt <= dt_stability."""
    grid = problem.grid
    h = grid.spacing
    omega = curl_z(state).values
    wmax = float(np.max(np.abs(omega)))
    if wmax > BLOWUP_LIMIT:
        raise BlowUp(t, wmax)
    phi = psi(omega, problem.law)
    f1, f2 = problem.forcing_at(t)
    h1 = state.comp1.values + dt * (f1 - ddy_values(phi, h))
    h2 = state.comp2.values + dt * (f2 + ddx_values(phi, h))
    return VectorField2(ScalarField(grid, h1), ScalarField(grid, h2))


def _resolve_snapshot_times(config: CurlConfig, horizon: float) -> list[float]:
    times = {0.0, horizon}
    for t in config.snapshot_times:
        if t < 0 or t > horizon + 1e-12 * horizon:
            raise ValueError(f"snapshot time {t!r} outside [0, horizon]")
        times.add(min(t, horizon))
    return sorted(times)


def curl_solve(problem: CurlProblem, config: CurlConfig) -> CurlSolution:
    """Adaptive explicit integration with snapshots and energy diagnostics."""
    grid = problem.grid
    h = grid.spacing
    h2 = h * h
    p = problem.p
    law = problem.law

    omega0 = curl_z(problem.H0).values
    if p > 8 and float(np.max(np.abs(omega0))) > 1.0 + 1e-9:
        raise DomainError(
            "explicit stepping with p > 8 requires max |curl H0| <= 1"
        )

    targets = _resolve_snapshot_times(config, problem.horizon)
    h1 = problem.H0.comp1.values.copy()
    h2_comp = problem.H0.comp2.values.copy()
    t = 0.0
    diag = CurlDiagnostics()
    dissipation = 0.0
    forcing_l2 = 0.0

    def record(t_now, omega, dt_used):
        diag.times.append(t_now)
        diag.l2_H.append(float(np.sqrt(h2 * np.sum(h1 * h1 + h2_comp * h2_comp))))
        diag.curl_lp.append(float(h2 * np.sum(np.abs(omega) ** p)))
        div = ddx_values(h1, h) + ddy_values(h2_comp, h)
        diag.div_drift.append(float(np.max(np.abs(div))))
        diag.dt.append(dt_used)
        diag.dissipation_cum.append(dissipation)
        diag.forcing_l2_cum.append(forcing_l2)

    def snap(t_now) -> tuple[float, VectorField2, ScalarField, ScalarField]:
        H = VectorField2(ScalarField(grid, h1.copy()), ScalarField(grid, h2_comp.copy()))
        omega = curl_z(H)
        J = ScalarField(grid, np.abs(omega.values))
        return (t_now, H, omega, J)

    omega = ddx_values(h2_comp, h) - ddy_values(h1, h)
    record(0.0, omega, 0.0)
    snapshots = [snap(0.0)]

    eps_t = 1e-12 * max(1.0, problem.horizon)
    for target in targets[1:]:
        f_sample = problem.forcing_at(target)
        f_div = ddx_values(f_sample[0], h) + ddy_values(f_sample[1], h)
        if float(np.max(np.abs(f_div))) > 1e-10:
            raise ValueError(f"forcing at t={target:g} is not divergence free")
        while t < target - eps_t:
            omega = ddx_values(h2_comp, h) - ddy_values(h1, h)
            wmax = float(np.max(np.abs(omega)))
            if wmax > BLOWUP_LIMIT:
                raise BlowUp(t, wmax)
            dt = min(
                config.cfl_safety * h2 / (8.0 * psi_prime(wmax, law) + 1e-30),
                config.dt_max,
                target - t,
            )
            if dt < config.dt_min:
                raise StepTooSmall(t, dt)
            phi = np.sign(omega) * np.abs(omega) ** (p - 1.0)
            f1, f2 = problem.forcing_at(t)
            h1 = h1 + dt * (f1 - ddy_values(phi, h))
            h2_comp = h2_comp + dt * (f2 + ddx_values(phi, h))
            dissipation += dt * float(h2 * np.sum(np.abs(omega) ** p))
            forcing_l2 += dt * float(h2 * np.sum(f1 * f1 + f2 * f2))
            t = target if target - (t + dt) <= eps_t else t + dt
            record(t, omega, dt)
        snapshots.append(snap(target))

    return CurlSolution(problem, snapshots, diag)


# -- diagnostics on solutions -----------------------------------------------


def current_density(H: VectorField2) -> ScalarField:
    """Magnitude of the out-of-plane curl."""
    w = curl_z(H)
    return ScalarField(H.grid, np.abs(w.values))


def resistivity_coeff(omega: ScalarField, p: float) -> ScalarField:
    """Effective resistivity |w|^(p-2); localizes onto the saturated set."""
    if not (p > 2):
        raise ValueError("p must exceed 2")
    return ScalarField(omega.grid, np.abs(omega.values) ** (p - 2.0))


def vi_residual(
    solution: CurlSolution,
    V: VectorField2,
    forcing: ForcingFn = None,
) -> list[tuple[float, float]]:
    """Residual series h^2 sum (F - H_t) . (V - H) over snapshot times.

    H_t is the backward difference of consecutive snapshots, so the series
    starts at the second snapshot.  V must be admissible: max |curl V| at
    most 1 and discretely divergence free.
    """
    grid = solution.problem.grid
    if V.grid != grid:
        raise DomainError("test field grid does not match the solution grid")
    if float(np.max(np.abs(curl_z(V).values))) > 1.0 + 1e-9:
        raise DomainError("test field exceeds the unit curl constraint")
    if float(np.max(np.abs(divergence(V).values))) > 1e-10:
        raise DomainError("test field is not divergence free")
    h2 = grid.spacing ** 2
    snaps = solution.snapshots
    out: list[tuple[float, float]] = []
    for (t_prev, H_prev, _, _), (t_now, H_now, _, _) in zip(snaps, snaps[1:]):
        dt = t_now - t_prev
        if forcing is not None:
            F = forcing(t_now)
            f1, f2 = F.comp1.values, F.comp2.values
        else:
            f1 = f2 = 0.0
        ht1 = (H_now.comp1.values - H_prev.comp1.values) / dt
        ht2 = (H_now.comp2.values - H_prev.comp2.values) / dt
        d1 = V.comp1.values - H_now.comp1.values
        d2 = V.comp2.values - H_now.comp2.values
        r = h2 * float(np.sum((f1 - ht1) * d1 + (f2 - ht2) * d2))
        out.append((t_now, r))
    return out


def energy_budget(solution: CurlSolution) -> list[tuple[float, float, float]]:
    """Series (t, lhs, bound) for the discrete energy inequality.

    The scheme satisfies E(t) + 2 * integral of dissipation = E(0) +
    2 * integral of <F, H> up to the explicit-Euler injection, so with
    Cauchy-Schwarz and Gronwall

        E(t) + 2 * diss(t) <= (E(0) + integral |F|^2) * e^t =: bound(t).

    lhs <= 1.05 * bound at every time also caps the energy-plus-dissipation
    budget sup_t E + diss by max_t bound.
    """
    d = solution.diagnostics
    e0 = d.l2_H[0] ** 2
    out = []
    for t, l2h, diss, fl2 in zip(d.times, d.l2_H, d.dissipation_cum, d.forcing_l2_cum):
        lhs = l2h ** 2 + 2.0 * diss
        bound = (e0 + fl2) * math.exp(t)
        out.append((t, lhs, bound))
    return out
