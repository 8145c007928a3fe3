"""Experiment drivers for the large-exponent limit claims.

Every driver consumes an ExperimentSpec, runs the relevant solvers, and
returns a Report whose verdicts are computed from the recorded metrics
only.  Reruns with the same spec reproduce metrics bitwise: all
randomness flows through a seeded generator and the solvers are
deterministic.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .curl2d import CurlConfig, CurlProblem, curl_solve, energy_budget, vi_residual
from .datagen import (
    BumpSpec,
    StreamSpec,
    accumulated_source,
    bump_field,
    constant_in_time,
    field_from_stream,
    random_admissible_field,
)
from .errors import PreconditionFailed
from .fields import (
    GridSpec,
    PowerLaw,
    ScalarField,
    boundary_ring_max,
    curl_z,
    lap5_values,
    psi,
)
from .obstacle import collapse_profile_vi, mesa_profile_vi
from .pme import (
    PmeConfig,
    PmeProblem,
    PmeSolution,
    barenblatt_field,
    mass_balance_residual,
    pme_solve,
)

EXPONENT_CAP = 96  # double precision loses psi accuracy near |u| = 1 beyond this


# -- report plumbing ---------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    metrics: tuple[str, ...]


@dataclass
class Report:
    name: str
    config: dict
    metrics: dict[str, float] = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)

    def add_metric(self, name: str, value: float, exponent: float | None = None) -> str:
        key = f"{name}@{exponent:g}" if exponent is not None else name
        self.metrics[key] = float(value)
        return key

    def add_verdict(self, name: str, passed: bool, metric_keys: list[str]):
        missing = [k for k in metric_keys if k not in self.metrics]
        if missing:
            raise ValueError(f"verdict {name!r} references unknown metrics {missing}")
        self.verdicts.append(Verdict(name, bool(passed), tuple(metric_keys)))

    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, name: str) -> bool:
        for v in self.verdicts:
            if v.name == name:
                return v.passed
        raise KeyError(name)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    grid: GridSpec
    schedule: tuple[float, ...]
    horizon: float
    f: BumpSpec | None = None
    g: BumpSpec | None = None
    f2: BumpSpec | None = None
    h0_stream: StreamSpec | None = None
    forcing_stream: StreamSpec | None = None
    snapshot_times: tuple[float, ...] = ()
    dt_init: float | None = None
    newton_tol: float = 1e-10
    cfl_safety: float = 0.9
    psor_tol: float = 1e-12
    seed: int = 0
    n_test_fields: int = 20
    deltas: tuple[float, ...] = (0.05, 0.1, 0.2)
    grids: tuple[int, ...] = ()
    barenblatt_t0: float = 1.0
    barenblatt_mass: float = 1.0

    def __post_init__(self):
        if not self.schedule:
            raise ValueError("exponent schedule must be non-empty")
        if any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise ValueError("exponent schedule must be strictly increasing")
        if max(self.schedule) > EXPONENT_CAP:
            raise ValueError(f"exponents are capped at {EXPONENT_CAP}")
        if not (self.horizon > 0):
            raise ValueError("horizon must be positive")

    def config_echo(self) -> dict:
        raw = dataclasses.asdict(self)
        return _jsonable(raw)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _l1_distance(a: ScalarField, b: ScalarField) -> float:
    h2 = a.grid.spacing ** 2
    return float(h2 * np.sum(np.abs(a.values - b.values)))


def _strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def _non_increasing(xs, slack=0.0) -> bool:
    return all(b <= a + slack for a, b in zip(xs, xs[1:]))


# -- data hypothesis checks --------------------------------------------------


def d4_symmetry_defect(u: ScalarField) -> float:
    """Deviation of a field from square-dihedral symmetry about the center."""
    v = u.values
    worst = 0.0
    for cand in (v[::-1, :], v[:, ::-1], v.T, np.rot90(v)):
        worst = max(worst, float(np.max(np.abs(v - cand))))
    return worst


def outward_monotone_defect(u: ScalarField) -> float:
    """Largest increase moving away from the center along rows, columns
    and the two main diagonals; zero for radially non-increasing data."""
    v = u.values
    n = u.grid.n
    mid = n // 2

    def ray_defect(line: np.ndarray) -> float:
        right = line[..., mid:]
        left = line[..., :mid]
        d = 0.0
        if right.shape[-1] > 1:
            d = max(d, float(np.max(right[..., 1:] - right[..., :-1], initial=0.0)))
        if left.shape[-1] > 1:
            d = max(d, float(np.max(left[..., :-1] - left[..., 1:], initial=0.0)))
        return d

    worst = max(ray_defect(v), ray_defect(v.T))
    worst = max(worst, ray_defect(np.diagonal(v)), ray_defect(np.diagonal(v[::-1, :])))
    return worst


def h43_defect(f: ScalarField, g0: ScalarField | None, m: float) -> float:
    """Worst violation of the monotone-growth hypothesis lap(psi_m(f)) + g(., 0) >= 0."""
    h = f.grid.spacing
    lhs = lap5_values(psi(f.values, PowerLaw(m)), h)
    if g0 is not None:
        lhs = lhs + g0.values
    return float(max(0.0, -np.min(lhs)))


def require_radial_monotone_data(
    f: ScalarField,
    g0: ScalarField | None,
    m: float,
    sym_tol: float = 1e-12,
    growth_tol: float = 1e-8,
):
    scale = max(1.0, float(np.max(np.abs(f.values))))
    if d4_symmetry_defect(f) > sym_tol * scale:
        raise PreconditionFailed("initial datum is not radially symmetric on the grid")
    if outward_monotone_defect(f) > sym_tol * scale:
        raise PreconditionFailed("initial datum is not radially non-increasing")
    if g0 is not None:
        gscale = max(1.0, float(np.max(np.abs(g0.values))))
        if d4_symmetry_defect(g0) > sym_tol * gscale:
            raise PreconditionFailed("source is not radially symmetric on the grid")
        if outward_monotone_defect(g0) > sym_tol * gscale:
            raise PreconditionFailed("source is not radially non-increasing")
    defect = h43_defect(f, g0, m)
    if defect > growth_tol:
        raise PreconditionFailed(
            f"discrete growth hypothesis fails by {defect:.3e} at m={m:g}"
        )


# -- experiment drivers ------------------------------------------------------


def _pme_config(spec: ExperimentSpec, horizon: float, dt_init: float | None = None) -> PmeConfig:
    dt0 = dt_init if dt_init is not None else (spec.dt_init or horizon / 50.0)
    interior = tuple(t for t in spec.snapshot_times if 0.0 < t < horizon)
    return PmeConfig(
        dt_init=dt0,
        newton_tol=spec.newton_tol,
        snapshot_times=interior,
    )


def _run_pme(spec: ExperimentSpec, m: float, f: ScalarField, forcing, horizon: float,
             dt_init: float | None = None) -> PmeSolution:
    problem = PmeProblem(
        grid=spec.grid, law=PowerLaw(m), u0=f, forcing=forcing, horizon=horizon
    )
    return pme_solve(problem, _pme_config(spec, horizon, dt_init))


def sweep_p(spec: ExperimentSpec, sink=None) -> Report:
    """Curl runs over the exponent schedule: saturation measures and
    variational-inequality residuals against random admissible test fields."""
    report = Report(name=spec.name, config=spec.config_echo())
    grid = spec.grid
    h = grid.spacing
    H0 = field_from_stream(grid, spec.h0_stream)
    forcing = None
    if spec.forcing_stream is not None:
        F = field_from_stream(grid, spec.forcing_stream)
        forcing = constant_in_time(F)

    rng = np.random.default_rng(spec.seed)
    test_fields = [
        random_admissible_field(grid, rng) for _ in range(spec.n_test_fields)
    ]

    mu_keys: dict[float, list[str]] = {d: [] for d in spec.deltas}
    vi_keys: list[str] = []
    bound_keys: list[str] = []
    div_keys: list[str] = []
    energy_ok = True
    trunc_worst = 0.0
    for p in spec.schedule:
        problem = CurlProblem(grid=grid, p=p, H0=H0, forcing=forcing, horizon=spec.horizon)
        config = CurlConfig(
            snapshot_times=tuple(t for t in spec.snapshot_times if 0 < t < spec.horizon),
            cfl_safety=spec.cfl_safety,
        )
        sol = curl_solve(problem, config)
        _, H_final, omega_final, _ = sol.snapshots[-1]
        if sink is not None:
            sink(f"omega_p{p:g}", omega_final, spec.horizon)
        wabs = np.abs(omega_final.values)
        for d in spec.deltas:
            mu = float(h * h * np.count_nonzero(wabs >= 1.0 + d))
            mu_keys[d].append(report.add_metric(f"mu[{d:g}]", mu, p))
        report.add_metric("sup_omega", float(np.max(wabs)), p)
        vi_max = -np.inf
        vi_abs = 0.0
        vi_bound_defect = -np.inf
        for V in test_fields:
            series = vi_residual(sol, V, forcing)
            vi_max = max(vi_max, max(r for _, r in series))
            vi_abs = max(vi_abs, max(abs(r) for _, r in series))
            for (t_r, r), (_, H_snap, _, _) in zip(series, sol.snapshots[1:]):
                dv1 = V.comp1.values - H_snap.comp1.values
                dv2 = V.comp2.values - H_snap.comp2.values
                vh = math.sqrt(h * h * float(np.sum(dv1 * dv1 + dv2 * dv2)))
                if forcing is not None:
                    Ft = forcing(t_r)
                    fl2 = math.sqrt(h * h * float(np.sum(
                        Ft.comp1.values ** 2 + Ft.comp2.values ** 2)))
                else:
                    fl2 = 0.0
                vi_bound_defect = max(vi_bound_defect, r - 0.05 * fl2 * vh)
        report.add_metric("vi_max", vi_max, p)
        vi_keys.append(report.add_metric("vi_abs_max", vi_abs, p))
        bound_keys.append(report.add_metric("vi_bound_defect", vi_bound_defect, p))
        div_keys.append(report.add_metric("div_drift", max(sol.diagnostics.div_drift), p))
        budget = energy_budget(sol)
        worst_ratio = max(lhs / bound for _, lhs, bound in budget if bound > 0)
        report.add_metric("energy_ratio", worst_ratio, p)
        energy_ok = energy_ok and worst_ratio <= 1.05
        trunc_worst = max(
            trunc_worst,
            boundary_ring_max(H_final.comp1),
            boundary_ring_max(H_final.comp2),
            boundary_ring_max(omega_final),
        )
    report.add_metric("boundary_max", trunc_worst)
    report.add_metric("grid_h2", h * h)

    for d in spec.deltas:
        series = [report.metrics[k] for k in mu_keys[d]]
        report.add_verdict(f"mu[{d:g}]_non_increasing", _non_increasing(series), mu_keys[d])
    mu01 = [report.metrics[k] for k in mu_keys[0.1]] if 0.1 in spec.deltas else None
    if mu01 is not None:
        report.add_verdict(
            "mu[0.1]_halved",
            mu01[-1] <= 0.5 * mu01[0] + h * h,
            mu_keys[0.1] + ["grid_h2"],
        )
    vi_series = [report.metrics[k] for k in vi_keys]
    report.add_verdict("vi_abs_max_decreasing", _strictly_decreasing(vi_series), vi_keys)
    report.add_verdict(
        "vi_onesided_ok",
        all(report.metrics[k] <= 1e-9 for k in bound_keys),
        bound_keys,
    )
    report.add_verdict(
        "div_drift_ok",
        all(report.metrics[k] <= 1e-10 for k in div_keys),
        div_keys,
    )
    report.add_verdict(
        "energy_budget_ok",
        energy_ok,
        [f"energy_ratio@{p:g}" for p in spec.schedule],
    )
    report.add_verdict("truncation_ok", trunc_worst <= 1e-8, ["boundary_max"])
    return report


def sweep_m_vs_mesa(spec: ExperimentSpec, sink=None) -> Report:
    """Scalar runs over the exponent schedule against the obstacle-problem
    limit profile; also records the pressure bound."""
    report = Report(name=spec.name, config=spec.config_echo())
    grid = spec.grid
    f = bump_field(grid, spec.f)
    g_field = bump_field(grid, spec.g) if spec.g is not None else None
    forcing = constant_in_time(g_field) if g_field is not None else None
    if float(np.max(f.values)) > 1.0 + 1e-12:
        raise PreconditionFailed("mesa sweep requires max f <= 1")
    require_radial_monotone_data(f, g_field, min(spec.schedule))

    G_T = accumulated_source(forcing, spec.horizon, grid)
    mesa, mask, vi = mesa_profile_vi(f, G_T, spec.horizon, tol=spec.psor_tol)
    if sink is not None:
        sink("mesa", mesa, spec.horizon)
    report.add_metric("mesa_min", float(np.min(mesa.values)))
    report.add_metric("mesa_max", float(np.max(mesa.values)))
    report.add_metric("mesa_complementarity", vi.residuals.complementarity_max)
    report.add_metric("plateau_area", float(grid.spacing ** 2 * np.count_nonzero(mask)))

    e_keys, p_keys = [], []
    trunc_worst = 0.0
    for m in spec.schedule:
        sol = _run_pme(spec, m, f, forcing, spec.horizon)
        u_final = sol.snapshots[-1][1]
        if sink is not None:
            sink(f"u_m{m:g}", u_final, spec.horizon)
        e_keys.append(report.add_metric("e", _l1_distance(u_final, mesa), m))
        p_keys.append(report.add_metric("pressure_max", max(sol.diagnostics.pressure_max), m))
        report.add_metric("sup_u", max(sol.diagnostics.sup_norm), m)
        report.add_metric(
            "mass_residual_max", max(r for _, r in mass_balance_residual(sol, sol.problem)), m
        )
        trunc_worst = max(trunc_worst, boundary_ring_max(u_final))
    report.add_metric("boundary_max", trunc_worst)

    e_series = [report.metrics[k] for k in e_keys]
    report.add_verdict("e_strictly_decreasing", _strictly_decreasing(e_series), e_keys)
    report.add_verdict("e_final_third", e_series[-1] <= e_series[0] / 3.0, e_keys)
    report.add_verdict(
        "mesa_bounds",
        report.metrics["mesa_min"] >= 0.0 and report.metrics["mesa_max"] <= 1.0 + 1e-12,
        ["mesa_min", "mesa_max"],
    )
    report.add_verdict(
        "mesa_complementarity_ok",
        report.metrics["mesa_complementarity"] <= 1e-10,
        ["mesa_complementarity"],
    )
    report.add_verdict(
        "pressure_bound",
        all(report.metrics[k] <= 2.1 for k in p_keys),
        p_keys,
    )
    report.add_verdict("truncation_ok", trunc_worst <= 1e-8, ["boundary_max"])
    return report


def collapse_experiment(spec: ExperimentSpec, sink=None) -> Report:
    """Super-critical data: distance of short-horizon runs (with and without
    forcing) to the instantaneous-collapse projection, per exponent."""
    report = Report(name=spec.name, config=spec.config_echo())
    grid = spec.grid
    f = bump_field(grid, spec.f)
    if float(np.max(f.values)) <= 1.0:
        raise PreconditionFailed("collapse experiment expects max f > 1")
    g_field = bump_field(grid, spec.g) if spec.g is not None else None
    forcing = constant_in_time(g_field) if g_field is not None else None

    v_limit, mask, vi = collapse_profile_vi(f, tol=spec.psor_tol)
    if sink is not None:
        sink("v_limit", v_limit, 0.0)
    h2 = grid.spacing ** 2
    mass_f = float(h2 * np.sum(f.values))
    mass_v = float(h2 * np.sum(v_limit.values))
    report.add_metric("mass_f", mass_f)
    report.add_metric("mass_v_limit", mass_v)
    report.add_metric("mass_rel_defect", abs(mass_v - mass_f) / abs(mass_f))

    # the projection loses O(h) mass across the discrete free boundary, so
    # the conservation verdict is measured on the finest configured grid
    mass_n = max(spec.grids) if spec.grids else grid.n
    if mass_n != grid.n:
        fine_grid = GridSpec(grid.half_width, mass_n)
        f_fine = bump_field(fine_grid, spec.f)
        v_fine, _, _ = collapse_profile_vi(f_fine, tol=spec.psor_tol)
        hf2 = fine_grid.spacing ** 2
        mass_defect_fine = abs(
            float(hf2 * np.sum(v_fine.values)) - float(hf2 * np.sum(f_fine.values))
        ) / float(hf2 * np.sum(f_fine.values))
    else:
        mass_defect_fine = report.metrics["mass_rel_defect"]
    report.add_metric("mass_check_n", float(mass_n))
    report.add_metric("mass_rel_defect_fine", mass_defect_fine)
    plateau = v_limit.values[mask]
    report.add_metric("plateau_value_min", float(np.min(plateau)) if plateau.size else 1.0)
    report.add_metric("plateau_value_max", float(np.max(plateau)) if plateau.size else 1.0)
    report.add_metric("v_limit_max", float(np.max(v_limit.values)))
    report.add_metric("collapse_complementarity", vi.residuals.complementarity_max)

    fk, gk, mk = [], [], []
    for m in spec.schedule:
        t_m = 1.0 / m
        dt0 = t_m / 10.0
        sol_forced = _run_pme(spec, m, f, forcing, t_m, dt_init=dt0)
        sol_free = _run_pme(spec, m, f, None, t_m, dt_init=dt0)
        u_forced = sol_forced.snapshots[-1][1]
        u_free = sol_free.snapshots[-1][1]
        if sink is not None:
            sink(f"u_forced_m{m:g}", u_forced, t_m)
            sink(f"u_free_m{m:g}", u_free, t_m)
        fk.append(report.add_metric("d_forced", _l1_distance(u_forced, v_limit), m))
        gk.append(report.add_metric("d_free", _l1_distance(u_free, v_limit), m))
        mk.append(report.add_metric("d_mutual", _l1_distance(u_forced, u_free), m))

    forced = [report.metrics[k] for k in fk]
    free = [report.metrics[k] for k in gk]
    mutual = [report.metrics[k] for k in mk]
    report.add_verdict("d_forced_decreasing", _strictly_decreasing(forced), fk)
    report.add_verdict("d_free_decreasing", _strictly_decreasing(free), gk)
    report.add_verdict("d_mutual_decreasing", _strictly_decreasing(mutual), mk)
    report.add_verdict(
        "mass_conserved",
        report.metrics["mass_rel_defect_fine"] <= 5e-3,
        ["mass_rel_defect_fine", "mass_check_n"],
    )
    report.add_verdict(
        "plateau_at_one",
        report.metrics["plateau_value_min"] == 1.0
        and report.metrics["plateau_value_max"] == 1.0
        and report.metrics["v_limit_max"] <= 1.0 + 1e-12,
        ["plateau_value_min", "plateau_value_max", "v_limit_max"],
    )
    return report


def small_data_check(spec: ExperimentSpec, sink=None) -> Report:
    """Sub-critical data: the final state approaches datum plus accumulated
    source as the exponent grows."""
    report = Report(name=spec.name, config=spec.config_echo())
    grid = spec.grid
    f = bump_field(grid, spec.f)
    g_field = bump_field(grid, spec.g) if spec.g is not None else None
    forcing = constant_in_time(g_field) if g_field is not None else None
    g_sup = float(np.max(g_field.values)) if g_field is not None else 0.0
    M = float(np.max(f.values)) + spec.horizon * g_sup
    report.add_metric("M", M)
    if M >= 1.0:
        raise PreconditionFailed(f"small-data check needs max f + T max g < 1, got {M:g}")

    G_T = accumulated_source(forcing, spec.horizon, grid)
    target = ScalarField(grid, f.values + G_T.values)
    if sink is not None:
        sink("target", target, spec.horizon)

    d_keys = []
    for m in spec.schedule:
        sol = _run_pme(spec, m, f, forcing, spec.horizon)
        u_final = sol.snapshots[-1][1]
        if sink is not None:
            sink(f"u_m{m:g}", u_final, spec.horizon)
        d_keys.append(report.add_metric("d", _l1_distance(u_final, target), m))
        report.add_metric(
            "sup_bound_defect",
            max(0.0, max(sol.diagnostics.sup_norm) - M),
            m,
        )
    d_series = [report.metrics[k] for k in d_keys]
    report.add_verdict("d_strictly_decreasing", _strictly_decreasing(d_series), d_keys)
    report.add_verdict("d_final_third", d_series[-1] <= d_series[0] / 3.0, d_keys)
    report.add_verdict(
        "sup_bounded",
        all(report.metrics[f"sup_bound_defect@{m:g}"] <= 1e-6 for m in spec.schedule),
        [f"sup_bound_defect@{m:g}" for m in spec.schedule],
    )
    return report


def equivalence_check(spec: ExperimentSpec, sink=None) -> Report:
    """Cross-validation of the vector solver against the scalar reduction:
    the curl of the vector run must match the scalar run driven by the
    discrete curl of the data, with discrepancy vanishing under refinement."""
    report = Report(name=spec.name, config=spec.config_echo())
    p = spec.schedule[0]
    if p > 16:
        raise PreconditionFailed("equivalence check is limited to p <= 16")
    grids = spec.grids or (spec.grid.n,)
    L = spec.grid.half_width

    rel_keys = []
    limit_keys = []
    for n in grids:
        grid = GridSpec(L, n)
        H0 = field_from_stream(grid, spec.h0_stream)
        forcing = None
        pme_forcing = None
        if spec.forcing_stream is not None:
            F = field_from_stream(grid, spec.forcing_stream)
            forcing = constant_in_time(F)
            g_of_F = curl_z(F)
            pme_forcing = constant_in_time(g_of_F)
        problem = CurlProblem(grid=grid, p=p, H0=H0, forcing=forcing, horizon=spec.horizon)
        config = CurlConfig(
            snapshot_times=tuple(t for t in spec.snapshot_times if 0 < t < spec.horizon),
            cfl_safety=spec.cfl_safety,
        )
        curl_sol = curl_solve(problem, config)

        u0 = curl_z(H0)
        pme_problem = PmeProblem(
            grid=grid, law=PowerLaw(p - 1.0), u0=u0, forcing=pme_forcing,
            horizon=spec.horizon,
        )
        pme_cfg = PmeConfig(
            dt_init=spec.dt_init or spec.horizon / 100.0,
            newton_tol=spec.newton_tol,
            snapshot_times=tuple(t for t in spec.snapshot_times if 0 < t < spec.horizon),
        )
        pme_sol = pme_solve(pme_problem, pme_cfg)

        if sink is not None:
            sink(f"omega_n{n}", curl_sol.snapshots[-1][2], spec.horizon)
            sink(f"u_n{n}", pme_sol.snapshots[-1][1], spec.horizon)
        worst = 0.0
        for (tc, _, omega, _), (tp, u) in zip(curl_sol.snapshots[1:], pme_sol.snapshots[1:]):
            assert abs(tc - tp) <= 1e-12 * max(1.0, spec.horizon)
            num = float(np.sqrt(np.sum((omega.values - u.values) ** 2)))
            den = float(np.sqrt(np.sum(u.values ** 2)))
            worst = max(worst, num / den)
        rel_keys.append(report.add_metric("rel_l2_max", worst, n))
        limit_keys.append(report.add_metric("five_h", 5.0 * grid.spacing, n))

    rels = [report.metrics[k] for k in rel_keys]
    limits = [report.metrics[k] for k in limit_keys]
    report.add_verdict(
        "rel_l2_below_5h",
        all(r <= lim for r, lim in zip(rels, limits)),
        rel_keys + limit_keys,
    )
    if len(rels) > 1:
        report.add_verdict("rel_l2_decreasing", _strictly_decreasing(rels), rel_keys)
    return report


def l1_contraction_check(spec: ExperimentSpec, sink=None) -> Report:
    """Two runs with shared source: distances contract in L1 and ordered
    data stay ordered."""
    report = Report(name=spec.name, config=spec.config_echo())
    grid = spec.grid
    m = spec.schedule[0]
    f1 = bump_field(grid, spec.f)
    f2 = bump_field(grid, spec.f2)
    g_field = bump_field(grid, spec.g) if spec.g is not None else None
    forcing = constant_in_time(g_field) if g_field is not None else None

    sol1 = _run_pme(spec, m, f1, forcing, spec.horizon)
    sol2 = _run_pme(spec, m, f2, forcing, spec.horizon)
    if sink is not None:
        sink("u1_final", sol1.snapshots[-1][1], spec.horizon)
        sink("u2_final", sol2.snapshots[-1][1], spec.horizon)
    d0 = _l1_distance(f1, f2)
    report.add_metric("initial_l1_distance", d0)

    dist_keys = []
    worst_ratio = 0.0
    ordered_input = bool(np.all(f1.values <= f2.values))
    order_defect = 0.0
    for (t1, u1), (t2, u2) in zip(sol1.snapshots[1:], sol2.snapshots[1:]):
        d = _l1_distance(u1, u2)
        dist_keys.append(report.add_metric("l1_distance", d, t1))
        worst_ratio = max(worst_ratio, d / d0 if d0 > 0 else 0.0)
        if ordered_input:
            order_defect = max(order_defect, float(np.max(u1.values - u2.values)))
    report.add_metric("worst_contraction_ratio", worst_ratio)
    report.add_verdict(
        "l1_contraction",
        worst_ratio <= 1.0 + 1e-6,
        ["worst_contraction_ratio", "initial_l1_distance"],
    )
    if ordered_input:
        report.add_metric("order_defect", order_defect)
        report.add_verdict("comparison_ordering", order_defect <= 1e-8, ["order_defect"])
    return report


def monotonicity_check(solution: PmeSolution) -> Report:
    """Radial and temporal monotonicity of a run under the monotone-growth
    hypothesis, verified discretely on the supplied data first."""
    problem = solution.problem
    f = solution.snapshots[0][1]
    g0 = problem.forcing(0.0) if problem.forcing is not None else None
    require_radial_monotone_data(f, g0, problem.law.exponent)

    report = Report(
        name="monotonicity-check",
        config={
            "m": problem.law.exponent,
            "horizon": problem.horizon,
            "grid_n": problem.grid.n,
            "grid_L": problem.grid.half_width,
        },
    )
    radial_defect = max(outward_monotone_defect(u) for _, u in solution.snapshots)
    time_defect = 0.0
    for (_, u_a), (_, u_b) in zip(solution.snapshots, solution.snapshots[1:]):
        time_defect = max(time_defect, float(np.max(u_a.values - u_b.values)))
    report.add_metric("radial_defect_max", radial_defect)
    report.add_metric("time_defect_max", time_defect)
    report.add_verdict("radially_non_increasing", radial_defect <= 1e-8, ["radial_defect_max"])
    report.add_verdict("time_monotone", time_defect <= 1e-8, ["time_defect_max"])
    return report


def barenblatt_convergence(spec: ExperimentSpec, sink=None) -> Report:
    """Exact-solution study: L1 error against the self-similar profile under
    simultaneous grid and step refinement, plus the mass-balance residual."""
    report = Report(name=spec.name, config=spec.config_echo())
    m = spec.schedule[0]
    law = PowerLaw(m)
    grids = spec.grids or (spec.grid.n,)
    L = spec.grid.half_width
    t0 = spec.barenblatt_t0
    mass = spec.barenblatt_mass
    base_dt = spec.dt_init or spec.horizon / 40.0

    err_keys = []
    mass_keys = []
    for n in grids:
        grid = GridSpec(L, n)
        u0 = barenblatt_field(grid, t0, law, mass)
        problem = PmeProblem(grid=grid, law=law, u0=u0, forcing=None, horizon=spec.horizon)
        dt_n = base_dt * grids[0] / n
        config = PmeConfig(dt_init=dt_n, newton_tol=spec.newton_tol)
        sol = pme_solve(problem, config)
        exact = barenblatt_field(grid, t0 + spec.horizon, law, mass)
        if sink is not None:
            sink(f"u_n{n}", sol.snapshots[-1][1], spec.horizon)
            sink(f"exact_n{n}", exact, spec.horizon)
        err_keys.append(report.add_metric("l1_error", _l1_distance(sol.snapshots[-1][1], exact), n))
        mass_keys.append(
            report.add_metric(
                "mass_residual_max",
                max(r for _, r in mass_balance_residual(sol, problem)),
                n,
            )
        )
    errs = [report.metrics[k] for k in err_keys]
    orders = [
        float(np.log(a / b) / np.log(n2 / n1))
        for (a, b), (n1, n2) in zip(zip(errs, errs[1:]), zip(grids, grids[1:]))
    ]
    for (n1, n2), order in zip(zip(grids, grids[1:]), orders):
        report.add_metric(f"order[{n1}->{n2}]", order)
    if orders:
        report.add_metric("order_min", min(orders))
    report.add_verdict("errors_decreasing", _strictly_decreasing(errs), err_keys)
    if orders:
        report.add_verdict(
            "order_at_least_0.8",
            min(orders) >= 0.8,
            ["order_min"],
        )
    report.add_verdict(
        "mass_balance_ok",
        all(report.metrics[k] <= 1e-8 for k in mass_keys),
        mass_keys,
    )
    return report
