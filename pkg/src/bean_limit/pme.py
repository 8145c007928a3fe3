"""Implicit solver for the degenerate diffusion law u_t - lap psi_m(u) = g.

Each backward-Euler step is solved in the transformed variable
v = psi_m(u), where the linear part is symmetric positive definite and
the nonlinearity psi_inv is mild.  The per-cell system

    psi_inv(v) - dt * lap5(v) = u_prev + dt * g(., t + dt)

is driven to a small max-norm residual by damped Newton; the inner
linear solves use Jacobi-preconditioned conjugate gradients on the
five-point stencil, matrix free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .fields import (
    GridSpec,
    PowerLaw,
    ScalarField,
    lap5_values,
    neighbor_sum,
    psi,
    psi_inv,
    support_margin_ok,
)

ForcingFn = Optional[Callable[[float], ScalarField]]

JACOBIAN_FLOOR = 1e-12  # |v| floor inside the psi_inv derivative, caps the diagonal


class NewtonDiverged(RuntimeError):
    """Newton failed to reach the residual target; the caller should halve dt."""


class StepTooSmall(RuntimeError):
    """Time step fell below dt_min while halving."""

    def __init__(self, t: float, dt: float):
        super().__init__(f"time step {dt:.3e} below minimum at t={t:.6g}")
        self.t = t
        self.dt = dt


@dataclass(frozen=True)
class PmeProblem:
    grid: GridSpec
    law: PowerLaw
    u0: ScalarField
    forcing: ForcingFn
    horizon: float

    def __post_init__(self):
        if not (self.horizon > 0):
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.u0.grid != self.grid:
            raise ValueError("initial data grid does not match problem grid")
        if not support_margin_ok(self.u0):
            raise ValueError("initial data must vanish within L/4 of the boundary")
        if self.forcing is not None:
            for t in (0.0, 0.5 * self.horizon, self.horizon):
                if not support_margin_ok(self.forcing(t)):
                    raise ValueError(
                        f"forcing at t={t:g} must vanish within L/4 of the boundary"
                    )

    def source_at(self, t: float) -> np.ndarray:
        if self.forcing is None:
            return np.zeros((self.grid.n, self.grid.n))
        g = self.forcing(t)
        if g.grid != self.grid:
            raise ValueError("forcing grid does not match problem grid")
        return g.values


@dataclass(frozen=True)
class PmeConfig:
    dt_init: float
    dt_min: float = 0.0  # 0 means dt_init * 2**-30
    newton_tol: float = 1e-10
    max_newton_iters: int = 50
    max_halvings: int = 20
    snapshot_times: tuple[float, ...] = ()
    cg_tol: float = 1e-12
    cg_max_iters: int = 20000

    def __post_init__(self):
        if not (self.dt_init > 0):
            raise ValueError("dt_init must be positive")
        if self.dt_min < 0 or self.dt_min > self.dt_init:
            raise ValueError("need 0 <= dt_min <= dt_init")
        if not (self.newton_tol > 0):
            raise ValueError("newton_tol must be positive")

    @property
    def dt_floor(self) -> float:
        return self.dt_min if self.dt_min > 0 else self.dt_init * 2.0 ** -30


@dataclass
class PmeDiagnostics:
    """Per accepted step time series; index 0 is the initial state."""

    times: list[float] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    sup_norm: list[float] = field(default_factory=list)
    pressure_max: list[float] = field(default_factory=list)
    dt: list[float] = field(default_factory=list)
    newton_iters: list[int] = field(default_factory=list)
    ut_l1: list[float] = field(default_factory=list)
    source_mass_cum: list[float] = field(default_factory=list)


@dataclass
class PmeSolution:
    problem: PmeProblem
    snapshots: list[tuple[float, ScalarField]]
    diagnostics: PmeDiagnostics

    def __post_init__(self):
        times = [t for t, _ in self.snapshots]
        if not times or times[0] != 0.0 or times[-1] != self.problem.horizon:
            raise ValueError("snapshots must start at 0 and end at the horizon")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("snapshot times must be strictly increasing")

    def snapshot_at(self, t: float) -> ScalarField:
        for st, f in self.snapshots:
            if math.isclose(st, t, rel_tol=0.0, abs_tol=1e-12 * max(1.0, self.problem.horizon)):
                return f
        raise KeyError(f"no snapshot at t={t!r}")


# -- linear kernel -----------------------------------------------------------


def pcg(
    apply_op: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    apply_minv: Callable[[np.ndarray], np.ndarray],
    rtol: float,
    max_iters: int,
) -> np.ndarray:
    """Preconditioned conjugate gradients, matrix free.

    Aims for a relative residual of rtol.  When rounding noise makes that
    unattainable (tiny right sides in the Newton endgame), the method
    stagnates; the best iterate so far is still a valid inexact-Newton
    direction and is returned, with the outer line search as safeguard.
    Raises NewtonDiverged only when the operator loses positive
    definiteness.
    """
    bnorm = float(np.sqrt(np.sum(b * b)))
    if bnorm == 0.0:
        return np.zeros_like(b)
    x = np.zeros_like(b)
    r = b.copy()
    z = apply_minv(r)
    p = z.copy()
    rz = float(np.sum(r * z))
    target = rtol * bnorm
    best_x = x.copy()
    best_norm = bnorm
    since_best = 0
    for _ in range(max_iters):
        ap = apply_op(p)
        denom = float(np.sum(p * ap))
        if denom <= 0.0 or not math.isfinite(denom):
            raise NewtonDiverged("linear operator lost positive definiteness")
        alpha = rz / denom
        x += alpha * p
        r -= alpha * ap
        rnorm = float(np.sqrt(np.sum(r * r)))
        if rnorm <= target:
            return x
        if rnorm < best_norm:
            best_norm = rnorm
            best_x = x.copy()
            since_best = 0
        else:
            since_best += 1
            if since_best >= 50:
                return best_x
        z = apply_minv(r)
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    return best_x


def jacobi_pcg(
    apply_op: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    diag: np.ndarray,
    rtol: float,
    max_iters: int,
) -> np.ndarray:
    """pcg with diagonal preconditioning."""
    return pcg(apply_op, b, lambda r: r / diag, rtol, max_iters)


# -- single implicit step ----------------------------------------------------


def _pointwise_exact(v: np.ndarray, rhs: np.ndarray, dt: float, m: float, h2: float) -> np.ndarray:
    """Solve every cell's scalar equation exactly, neighbors frozen; returns u.

    Given b = rhs + dt/h^2 * (neighbor sum of v), the cell equation
    u + 4 dt/h^2 * psi(u) = b becomes, in s = |u|,

        s + a s^m = |b|,   a = 4 dt / h^2,

    whose left side has slope >= 1: scalar Newton from s = |b| converges
    monotonically.  Working in s rather than v = s^m matters twice over:
    no vertical tangent at the origin, and no underflow for large m
    (s^m vanishes in double precision already at moderate s).
    """
    a = 4.0 * dt / h2
    b = rhs + (dt / h2) * neighbor_sum(v)
    babs = np.abs(b)
    # the root obeys s <= min(|b|, (|b|/a)^(1/m)); starting at that bound
    # keeps Newton monotone (f convex, f(s0) >= 0) and avoids overflow in
    # s^m for the huge right sides of the super-critical collapse regime
    s = np.minimum(babs, (babs / a) ** (1.0 / m))
    for _ in range(80):
        f = s + a * s ** m - babs
        if float(np.max(np.abs(f))) <= 1e-16 * (1.0 + float(np.max(babs))):
            break
        s -= f / (1.0 + a * m * s ** (m - 1.0))
        np.clip(s, 0.0, None, out=s)
    return np.sign(b) * s


def _step_values(
    u_prev: np.ndarray,
    g_end: np.ndarray,
    dt: float,
    law: PowerLaw,
    h: float,
    config: PmeConfig,
) -> tuple[np.ndarray, int]:
    """One backward-Euler step on raw arrays; returns (u_new, newton_iters).

    The Newton linearization is formed in the transformed increment
    dv = psi'(u) du, whose system matrix diag((1/m)|v|^(1/m-1)) + dt * A
    is symmetric positive definite (A is the negative five-point
    Laplacian); the computed dv is then turned back into the primal update
    through the exact row identity du = -F + dt * lap5(dv), which stays
    meaningful at cells where v = psi(u) underflows for large m.
    """
    m = law.exponent
    inv_m = 1.0 / m
    h2 = h * h
    rhs = u_prev + dt * g_end

    def psi_of(u: np.ndarray) -> np.ndarray:
        return np.sign(u) * np.abs(u) ** m

    def residual_of(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return u - dt * lap5_values(v, h) - rhs

    u = _pointwise_exact(psi_of(rhs), rhs, dt, m, h2)
    v = psi_of(u)
    res = residual_of(u, v)
    merit = float(np.sum(res * res))
    best_linf = math.inf
    stalled = 0

    for it in range(config.max_newton_iters):
        linf = float(np.max(np.abs(res)))
        if linf <= config.newton_tol:
            return u, it
        if linf < 0.9 * best_linf:
            best_linf = linf
            stalled = 0
        else:
            stalled += 1
            if stalled > 10:
                raise NewtonDiverged(f"stalled at residual {linf:.3e}")

        diag_phi = inv_m * np.maximum(np.abs(v), JACOBIAN_FLOOR) ** (inv_m - 1.0)

        def apply_jac(w, d=diag_phi):
            out = neighbor_sum(w)
            out -= 4.0 * w
            out *= -dt / h2
            out += d * w
            return out

        # Damped Newton on the sum-of-squares merit.  Sign-crossing cells
        # land exactly on the kink at u = 0 (the degeneracy makes crossings
        # expensive, and nonnegative data should stay nonnegative).
        newton_ok = False
        try:
            delta_v = jacobi_pcg(
                apply_jac,
                -res,
                diag_phi + dt * 4.0 / h2,
                config.cg_tol,
                config.cg_max_iters,
            )
        except NewtonDiverged:
            delta_v = None
        if delta_v is not None:
            delta_u = dt * lap5_values(delta_v, h) - res
            alpha = 1.0
            while alpha >= 2.0 ** -24:
                u_try = u + alpha * delta_u
                crossed = (np.sign(u_try) != np.sign(u)) & (u != 0.0)
                if crossed.any():
                    u_try = np.where(crossed, 0.0, u_try)
                v_try = psi_of(u_try)
                res_try = residual_of(u_try, v_try)
                merit_try = float(np.sum(res_try * res_try))
                if math.isfinite(merit_try) and merit_try <= (1.0 - 1e-4 * alpha) * merit:
                    u, v, res, merit = u_try, v_try, res_try, merit_try
                    newton_ok = True
                    break
                alpha *= 0.5

        # Pointwise exact pass: solves each cell's scalar equation with
        # neighbors frozen (nonlinear Jacobi).  It contracts in the weighted
        # max norm exactly where the linearization cannot move, so it is
        # taken unconditionally when the Newton step found no descent.
        u_pol = _pointwise_exact(v, rhs, dt, m, h2)
        v_pol = psi_of(u_pol)
        res_pol = residual_of(u_pol, v_pol)
        merit_pol = float(np.sum(res_pol * res_pol))
        if math.isfinite(merit_pol) and (not newton_ok or merit_pol < merit):
            u, v, res, merit = u_pol, v_pol, res_pol, merit_pol

    if float(np.max(np.abs(res))) <= config.newton_tol:
        return u, config.max_newton_iters
    raise NewtonDiverged(f"no convergence in {config.max_newton_iters} iterations")


def pme_step(
    u_prev: ScalarField,
    t: float,
    dt: float,
    problem: PmeProblem,
    config: PmeConfig,
) -> ScalarField:
    """Advance one backward-Euler step from time t to t + dt.

    The source is sampled at the end-of-step time (fully implicit).
    Raises NewtonDiverged when the nonlinear solve fails and StepTooSmall
    when dt is already below the configured floor.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt < config.dt_floor:
        raise StepTooSmall(t, dt)
    g_end = problem.source_at(t + dt)
    u_new, _ = _step_values(
        u_prev.values, g_end, dt, problem.law, problem.grid.spacing, config
    )
    return ScalarField(problem.grid, u_new)


# -- adaptive driver ---------------------------------------------------------


def _resolve_snapshot_times(config: PmeConfig, horizon: float) -> list[float]:
    times = {0.0, horizon}
    for t in config.snapshot_times:
        if t < 0 or t > horizon + 1e-12 * horizon:
            raise ValueError(f"snapshot time {t!r} outside [0, horizon]")
        times.add(min(t, horizon))
    return sorted(times)


def pme_solve(problem: PmeProblem, config: PmeConfig) -> PmeSolution:
    """Adaptive backward-Euler integration over [0, horizon].

    dt halves on Newton failure, grows by 1.2x after three consecutive
    accepted steps (never beyond dt_init), and is clipped to land exactly
    on every requested snapshot time.
    """
    grid = problem.grid
    law = problem.law
    h = grid.spacing
    h2 = h * h
    m = law.exponent
    targets = _resolve_snapshot_times(config, problem.horizon)

    u = problem.u0.values.copy()
    t = 0.0
    dt = config.dt_init
    streak = 0
    source_mass = 0.0

    diag = PmeDiagnostics()

    def record(t_now, u_now, dt_used, iters, ut_l1):
        diag.times.append(t_now)
        diag.mass.append(float(h2 * np.sum(u_now)))
        diag.sup_norm.append(float(np.max(np.abs(u_now))))
        vm = m / (m - 1.0) * np.abs(u_now) ** (m - 1.0)
        diag.pressure_max.append(float(np.max(vm)))
        diag.dt.append(dt_used)
        diag.newton_iters.append(iters)
        diag.ut_l1.append(ut_l1)
        diag.source_mass_cum.append(source_mass)

    record(0.0, u, 0.0, 0, 0.0)
    snapshots: list[tuple[float, ScalarField]] = [(0.0, ScalarField(grid, u.copy()))]

    eps_t = 1e-12 * max(1.0, problem.horizon)
    for target in targets[1:]:
        while t < target - eps_t:
            dt_eff = min(dt, target - t)
            halvings = 0
            while True:
                try:
                    g_end = problem.source_at(t + dt_eff)
                    u_new, iters = _step_values(u, g_end, dt_eff, law, h, config)
                    break
                except NewtonDiverged:
                    halvings += 1
                    dt_eff *= 0.5
                    dt = min(dt, dt_eff)
                    streak = 0
                    if halvings > config.max_halvings or dt_eff < config.dt_floor:
                        raise StepTooSmall(t, dt_eff)
            ut_l1 = float(h2 * np.sum(np.abs(u_new - u)) / dt_eff)
            u = u_new
            source_mass += dt_eff * float(h2 * np.sum(g_end))
            t = target if target - (t + dt_eff) <= eps_t else t + dt_eff
            streak += 1
            if streak >= 3:
                dt = min(dt * 1.2, config.dt_init)
                streak = 0
            record(t, u, dt_eff, iters, ut_l1)
        snapshots.append((target, ScalarField(grid, u.copy())))

    return PmeSolution(problem, snapshots, diag)


# -- diagnostics -------------------------------------------------------------


def pressure_field(u: ScalarField, law: PowerLaw) -> ScalarField:
    """Pressure variable m/(m-1) |u|^(m-1)."""
    m = law.exponent
    return ScalarField(u.grid, m / (m - 1.0) * np.abs(u.values) ** (m - 1.0))


def mass_balance_residual(solution: PmeSolution, problem: PmeProblem) -> list[tuple[float, float]]:
    """Relative conservation defect per accepted step.

    r(t) = |mass(t) - mass(0) - accumulated source| scaled by
    |mass(0)| + |accumulated source| + 1e-30; the source term in the
    scale keeps the ratio meaningful for runs started from zero data.
    The source integral uses the scheme's own end-of-step quadrature, so
    for interior-supported data the residual measures only the Newton
    convergence defect.
    """
    d = solution.diagnostics
    m0 = d.mass[0]
    return [
        (t, abs(mass - m0 - src) / (abs(m0) + abs(src) + 1e-30))
        for t, mass, src in zip(d.times, d.mass, d.source_mass_cum)
    ]


# -- exact self-similar solution --------------------------------------------


def _shape_integral(m: float, n_dim: int, rel_tol: float = 1e-12) -> float:
    """integral_0^1 (1 - y^2)^(1/(m-1)) y^(n-1) dy by level-doubling quadrature.

    Tanh-sinh nodes handle the algebraic endpoint singularity at y = 1;
    levels double until two successive estimates agree to rel_tol.
    """
    a_exp = 1.0 / (m - 1.0)

    def f(y: np.ndarray) -> np.ndarray:
        core = np.clip(1.0 - y * y, 0.0, None) ** a_exp
        return core * y ** (n_dim - 1)

    # map (0,1) -> tanh-sinh abscissae: y = 0.5*(1 + tanh(pi/2 sinh(u)))
    last = None
    for level in range(4, 13):
        hstep = 6.0 / 2 ** level
        k = np.arange(-(2 ** level), 2 ** level + 1)
        u = k * hstep
        su = np.sinh(u)
        y = 0.5 * (1.0 + np.tanh(0.5 * np.pi * su))
        w = 0.25 * np.pi * hstep * np.cosh(u) / np.cosh(0.5 * np.pi * su) ** 2
        ok = (y > 0.0) & (y < 1.0)
        est = float(np.sum(f(y[ok]) * w[ok]))
        if last is not None and abs(est - last) <= rel_tol * abs(est):
            return est
        last = est
    return last


def barenblatt_eval(x, t: float, law: PowerLaw, n_dim: int, mass: float):
    """Self-similar compactly supported exact solution with total mass `mass`.

    `x` is a scalar radius-coordinate for n_dim=1 or an (..., 2) stack /
    pair of coordinate arrays for n_dim=2.  The profile normalization is
    fixed so that the spatial integral equals `mass` for every t > 0
    (unit-sphere surface measure 2 in 1-d, 2*pi in 2-d).
    """
    if t <= 0:
        raise ValueError("Barenblatt profile needs t > 0")
    if n_dim not in (1, 2):
        raise ValueError("n_dim must be 1 or 2")
    if not (mass > 0):
        raise ValueError("mass must be positive")
    m = law.exponent
    denom = n_dim * (m - 1.0) + 2.0
    alpha = n_dim / denom
    beta = 1.0 / denom
    # profile curvature constant; the extra 1/m is required for the profile
    # to satisfy u_t = lap(u^m) (checked by the PDE-residual test)
    kcoef = (m - 1.0) / (2.0 * m * denom)
    w_n = 2.0 if n_dim == 1 else 2.0 * np.pi
    shape = _shape_integral(m, n_dim)
    xi0 = (mass * kcoef ** (0.5 * n_dim) / (w_n * shape)) ** ((m - 1.0) / denom)

    x = np.asarray(x, dtype=float)
    if n_dim == 1:
        r2 = x * x
    else:
        if x.shape[-1] != 2:
            raise ValueError("2-d evaluation expects points with a trailing axis of size 2")
        r2 = np.sum(x * x, axis=-1)
    bracket = xi0 ** 2 - kcoef * r2 * t ** (-2.0 * beta)
    out = t ** (-alpha) * np.clip(bracket, 0.0, None) ** (1.0 / (m - 1.0))
    return out if out.ndim else float(out)


def barenblatt_field(grid: GridSpec, t: float, law: PowerLaw, mass: float) -> ScalarField:
    x, y = grid.meshgrid()
    pts = np.stack([x, y], axis=-1)
    return ScalarField(grid, barenblatt_eval(pts, t, law, 2, mass))
