import numpy as np
import pytest

from bean_limit.curl2d import (
    BlowUp,
    CurlConfig,
    CurlProblem,
    curl_solve,
    curl_step,
    current_density,
    dt_stability,
    energy_budget,
    resistivity_coeff,
    vi_residual,
)
from bean_limit.datagen import StreamSpec, constant_in_time, field_from_stream, random_admissible_field
from bean_limit.errors import DomainError
from bean_limit.fields import (
    GridSpec,
    ScalarField,
    VectorField2,
    curl_z,
    divergence,
    from_stream,
)


def default_h0(g, curl_max=0.8):
    return field_from_stream(g, StreamSpec(kind="bump", width=0.5 * g.half_width, curl_max=curl_max))


def test_zero_data_static():
    g = GridSpec(4.0, 32)
    H0 = VectorField2(ScalarField.zeros(g), ScalarField.zeros(g))
    prob = CurlProblem(grid=g, p=4.0, H0=H0, forcing=None, horizon=0.2)
    sol = curl_solve(prob, CurlConfig())
    _, H, omega, J = sol.snapshots[-1]
    assert np.all(H.comp1.values == 0.0)
    assert np.all(omega.values == 0.0)
    assert np.all(J.values == 0.0)


def test_problem_validation():
    g = GridSpec(4.0, 32)
    x, _ = g.meshgrid()
    bad = VectorField2(ScalarField(g, x), ScalarField.zeros(g))  # div = 1
    with pytest.raises(ValueError):
        CurlProblem(grid=g, p=4.0, H0=bad, forcing=None, horizon=0.2)
    with pytest.raises(ValueError):
        CurlProblem(grid=g, p=1.5, H0=default_h0(g), forcing=None, horizon=0.2)


def test_guard_for_large_p_supercritical_start():
    g = GridSpec(4.0, 32)
    H0 = default_h0(g, curl_max=1.2)
    prob = CurlProblem(grid=g, p=16.0, H0=H0, forcing=None, horizon=0.1)
    with pytest.raises(DomainError):
        curl_solve(prob, CurlConfig())


def test_blowup_guard():
    g = GridSpec(4.0, 32)
    H0 = default_h0(g, curl_max=11.0)
    prob = CurlProblem(grid=g, p=3.0, H0=H0, forcing=None, horizon=0.1)
    with pytest.raises(BlowUp):
        curl_step(H0, 0.0, 1e-9, prob)


def test_single_step_divergence_exact():
    g = GridSpec(4.0, 48)
    H0 = default_h0(g)
    prob = CurlProblem(grid=g, p=4.0, H0=H0, forcing=None, horizon=0.1)
    dt = 0.5 * dt_stability(curl_z(H0).values, 4.0, g.spacing)
    H1 = curl_step(H0, 0.0, dt, prob)
    assert np.max(np.abs(divergence(H1).values)) <= 1e-12


def test_energy_identity_per_step():
    g = GridSpec(4.0, 48)
    H0 = default_h0(g)
    p = 4.0
    prob = CurlProblem(grid=g, p=p, H0=H0, forcing=None, horizon=0.1)
    omega = curl_z(H0).values
    dt = 0.25 * dt_stability(omega, p, g.spacing)
    H1 = curl_step(H0, 0.0, dt, prob)
    h2 = g.spacing ** 2
    e0 = h2 * np.sum(H0.comp1.values ** 2 + H0.comp2.values ** 2)
    e1 = h2 * np.sum(H1.comp1.values ** 2 + H1.comp2.values ** 2)
    lhs = (e1 - e0) / (2 * dt)
    rhs = -h2 * np.sum(np.abs(omega) ** p)
    assert abs(lhs - rhs) <= 20.0 * dt  # forward-Euler injection is O(dt)


def test_divergence_drift_over_run():
    g = GridSpec(4.0, 48)
    H0 = default_h0(g)
    F = field_from_stream(g, StreamSpec(kind="bump", width=1.8, curl_max=2.0))
    prob = CurlProblem(grid=g, p=6.0, H0=H0, forcing=constant_in_time(F), horizon=0.2)
    sol = curl_solve(prob, CurlConfig(snapshot_times=(0.1,)))
    assert max(sol.diagnostics.div_drift) <= 1e-10


def test_odd_symmetry_exact():
    g = GridSpec(4.0, 32)
    phi = ScalarField.from_function(
        g, lambda x, y: 0.4 * np.clip(1 - (x ** 2 + y ** 2) / 4.0, 0, None) ** 4
    )
    H0 = from_stream(phi)
    Hm = from_stream(ScalarField(g, -phi.values))
    for H, sgn in ((H0, 1.0), (Hm, -1.0)):
        prob = CurlProblem(grid=g, p=4.0, H0=H, forcing=None, horizon=0.05)
        sol = curl_solve(prob, CurlConfig())
        if sgn > 0:
            ref = sol.snapshots[-1][1]
        else:
            neg = sol.snapshots[-1][1]
    assert np.array_equal(ref.comp1.values, -neg.comp1.values)
    assert np.array_equal(ref.comp2.values, -neg.comp2.values)


def test_energy_budget_holds():
    g = GridSpec(4.0, 48)
    H0 = default_h0(g)
    F = field_from_stream(g, StreamSpec(kind="bump", width=2.0, curl_max=3.0))
    prob = CurlProblem(grid=g, p=4.0, H0=H0, forcing=constant_in_time(F), horizon=0.3)
    sol = curl_solve(prob, CurlConfig())
    for _, lhs, bound in energy_budget(sol):
        assert lhs <= 1.05 * bound


def test_current_density_and_resistivity_values():
    g = GridSpec(1.0, 16)
    x, _ = g.meshgrid()
    H = VectorField2(ScalarField.zeros(g), ScalarField(g, x))
    J = current_density(H)
    assert np.allclose(J.values[1:-1, 1:-1], 1.0, atol=1e-12)
    Hc = VectorField2(ScalarField(g, np.full((16, 16), 0.7)), ScalarField(g, np.full((16, 16), -0.2)))
    assert np.allclose(current_density(Hc).values[2:-2, 2:-2], 0.0, atol=1e-12)

    omega = ScalarField(g, np.full((16, 16), 0.9))
    a = resistivity_coeff(omega, 32.0)
    assert np.allclose(a.values, 0.9 ** 30)
    assert np.all(resistivity_coeff(ScalarField.zeros(g), 8.0).values == 0.0)
    ones = ScalarField(g, np.ones((16, 16)))
    for p in (4.0, 8.0, 32.0):
        assert np.allclose(resistivity_coeff(ones, p).values, 1.0)
    with pytest.raises(ValueError):
        resistivity_coeff(omega, 2.0)


def test_vi_residual_trivial_cases():
    g = GridSpec(4.0, 48)
    H0 = default_h0(g)
    prob = CurlProblem(grid=g, p=4.0, H0=H0, forcing=None, horizon=0.2)
    sol = curl_solve(prob, CurlConfig(snapshot_times=(0.1,)))
    H_final = sol.snapshots[-1][1]
    series = vi_residual(sol, H_final, None)
    assert series[-1][1] == pytest.approx(0.0, abs=1e-15)

    V0 = VectorField2(ScalarField.zeros(g), ScalarField.zeros(g))
    series0 = vi_residual(sol, V0, None)
    # direct unwinding: r = -h^2 sum (F - H_t) . H
    h2 = g.spacing ** 2
    snaps = sol.snapshots
    for (t, r), ((tp, Hp, _, _), (tn, Hn, _, _)) in zip(series0, zip(snaps, snaps[1:])):
        dt = tn - tp
        ht1 = (Hn.comp1.values - Hp.comp1.values) / dt
        ht2 = (Hn.comp2.values - Hp.comp2.values) / dt
        expect = h2 * np.sum(ht1 * Hn.comp1.values + ht2 * Hn.comp2.values)
        assert r == pytest.approx(expect, rel=1e-12, abs=1e-15)


def test_vi_residual_rejects_inadmissible_fields():
    g = GridSpec(4.0, 48)
    H0 = default_h0(g)
    prob = CurlProblem(grid=g, p=4.0, H0=H0, forcing=None, horizon=0.1)
    sol = curl_solve(prob, CurlConfig())
    V_bad = field_from_stream(g, StreamSpec(kind="bump", width=2.0, curl_max=1.5))
    with pytest.raises(DomainError):
        vi_residual(sol, V_bad, None)
    x, _ = g.meshgrid()
    V_div = VectorField2(ScalarField(g, 0.01 * x), ScalarField.zeros(g))
    with pytest.raises(DomainError):
        vi_residual(sol, V_div, None)


def test_random_admissible_fields_are_admissible():
    g = GridSpec(4.0, 48)
    rng = np.random.default_rng(42)
    for _ in range(5):
        V = random_admissible_field(g, rng)
        assert np.max(np.abs(curl_z(V).values)) <= 1.0 + 1e-9
        assert np.max(np.abs(divergence(V).values)) <= 1e-10
