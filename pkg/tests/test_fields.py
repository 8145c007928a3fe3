import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bean_limit.fields import (
    GridSpec,
    PowerLaw,
    ScalarField,
    VectorField2,
    boundary_ring_max,
    curl_z,
    divergence,
    from_stream,
    laplacian5,
    norms,
    psi,
    psi_inv,
    psi_prime,
    support_margin_ok,
)


def grid(n=16, L=1.0):
    return GridSpec(L, n)


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(1.0, 4)
    with pytest.raises(ValueError):
        GridSpec(-1.0, 16)
    g = GridSpec(2.0, 10)
    assert g.spacing == pytest.approx(0.4)
    c = g.cell_centers()
    assert c[0] == pytest.approx(-2.0 + 0.2)
    assert c[-1] == pytest.approx(2.0 - 0.2)


def test_scalar_field_validation():
    g = grid()
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((4, 4)))
    with pytest.raises(ValueError):
        ScalarField(g, np.full((16, 16), np.nan))
    f = ScalarField.zeros(g)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0  # immutable once constructed


def test_vector_field_grid_mismatch():
    a = ScalarField.zeros(grid(16))
    b = ScalarField.zeros(grid(24))
    with pytest.raises(ValueError):
        VectorField2(a, b)


# -- laplacian ----------------------------------------------------------------


def test_laplacian_constant_interior_zero():
    g = grid()
    u = ScalarField(g, np.full((16, 16), 3.7))
    lap = laplacian5(u).values
    assert np.all(lap[1:-1, 1:-1] == 0.0)


def test_laplacian_exact_on_quadratic():
    g = grid(32, 1.5)
    u = ScalarField.from_function(g, lambda x, y: x ** 2 + y ** 2)
    lap = laplacian5(u).values
    assert np.allclose(lap[1:-1, 1:-1], 4.0, atol=1e-11)


def test_laplacian_matches_bruteforce_stencil():
    rng = np.random.default_rng(7)
    g = grid(8)
    vals = rng.standard_normal((8, 8))
    u = ScalarField(g, vals)
    h2 = g.spacing ** 2
    expected = np.zeros((8, 8))
    for j in range(8):
        for i in range(8):
            c = vals[j, i]
            w = vals[j, i - 1] if i > 0 else 0.0
            e = vals[j, i + 1] if i < 7 else 0.0
            s = vals[j - 1, i] if j > 0 else 0.0
            n = vals[j + 1, i] if j < 7 else 0.0
            expected[j, i] = (w + e + s + n - 4 * c) / h2
    assert np.allclose(laplacian5(u).values, expected, atol=1e-12)


def test_laplacian_symmetric_summation_by_parts():
    rng = np.random.default_rng(3)
    g = grid(24)
    a = np.zeros((24, 24))
    b = np.zeros((24, 24))
    a[3:-3, 3:-3] = rng.standard_normal((18, 18))
    b[3:-3, 3:-3] = rng.standard_normal((18, 18))
    u = ScalarField(g, a)
    v = ScalarField(g, b)
    h2 = g.spacing ** 2
    lhs = h2 * np.sum(b * laplacian5(u).values)
    rhs = h2 * np.sum(a * laplacian5(v).values)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


# -- curl / divergence / stream ----------------------------------------------


def test_curl_of_linear_fields():
    g = grid(16, 1.0)
    x, y = g.meshgrid()
    H = VectorField2(ScalarField(g, 0 * x), ScalarField(g, x))
    assert np.allclose(curl_z(H).values[1:-1, 1:-1], 1.0, atol=1e-12)
    H2 = VectorField2(ScalarField(g, y), ScalarField(g, x))
    assert np.allclose(curl_z(H2).values[1:-1, 1:-1], 0.0, atol=1e-12)


def test_divergence_of_linear_field():
    g = grid(16, 1.0)
    x, _ = g.meshgrid()
    H = VectorField2(ScalarField(g, x), ScalarField.zeros(g))
    assert np.allclose(divergence(H).values[1:-1, 1:-1], 1.0, atol=1e-12)


def test_divergence_matches_bruteforce_stencil():
    rng = np.random.default_rng(11)
    g = grid(8)
    a = rng.standard_normal((8, 8))
    b = rng.standard_normal((8, 8))
    H = VectorField2(ScalarField(g, a), ScalarField(g, b))
    th = 2 * g.spacing
    expected = np.zeros((8, 8))
    for j in range(8):
        for i in range(8):
            e = a[j, i + 1] if i < 7 else 0.0
            w = a[j, i - 1] if i > 0 else 0.0
            n = b[j + 1, i] if j < 7 else 0.0
            s = b[j - 1, i] if j > 0 else 0.0
            expected[j, i] = (e - w) / th + (n - s) / th
    assert np.allclose(divergence(H).values, expected, atol=1e-12)


def test_from_stream_trivial_cases():
    g = grid(16, 1.0)
    H = from_stream(ScalarField.zeros(g))
    assert np.all(H.comp1.values == 0.0) and np.all(H.comp2.values == 0.0)
    _, y = g.meshgrid()
    H2 = from_stream(ScalarField(g, y))
    assert np.allclose(H2.comp1.values[1:-1, 1:-1], 1.0, atol=1e-12)
    assert np.allclose(H2.comp2.values[1:-1, 1:-1], 0.0, atol=1e-12)


def test_from_stream_exactly_divergence_free():
    rng = np.random.default_rng(5)
    g = grid(32, 2.0)
    phi = ScalarField(g, rng.standard_normal((32, 32)))
    H = from_stream(phi)
    assert np.max(np.abs(divergence(H).values)) <= 1e-12


def test_curl_of_stream_matches_laplacian_under_refinement():
    errs = []
    for n in (32, 64):
        g = GridSpec(4.0, n)
        phi = ScalarField.from_function(g, lambda x, y: np.exp(-x ** 2 - y ** 2))
        H = from_stream(phi)
        two_path = curl_z(H).values + laplacian5(phi).values
        errs.append(np.max(np.abs(two_path[2:-2, 2:-2])))
    assert errs[1] <= errs[0] / 3.0  # second order in h


# -- power nonlinearity --------------------------------------------------------


def test_psi_direct_values():
    law = PowerLaw(3.0)
    assert psi(2.0, law) == pytest.approx(8.0)
    assert psi(-2.0, law) == pytest.approx(-8.0)
    assert psi_inv(8.0, law) == pytest.approx(2.0)


@pytest.mark.parametrize("m", [1.5, 2.0, 8.0, 64.0, 96.0])
def test_psi_degenerate_at_origin(m):
    law = PowerLaw(m)
    assert psi(0.0, law) == 0.0
    assert psi_prime(0.0, law) == 0.0
    assert psi_inv(0.0, law) == 0.0


@settings(max_examples=200, deadline=None)
@given(
    s=st.floats(-100.0, 100.0, allow_nan=False),
    m=st.floats(1.01, 96.0, allow_nan=False),
)
def test_psi_round_trip(s, m):
    from hypothesis import assume

    law = PowerLaw(m)
    v = psi(s, law)
    # |s|^m below the normal floating range underflows and cannot round-trip
    assume(s == 0.0 or abs(v) >= 2.3e-308)
    assert abs(psi_inv(v, law) - s) <= 1e-12 * (1.0 + abs(s))


@settings(max_examples=100, deadline=None)
@given(
    a=st.floats(-10.0, 10.0, allow_nan=False),
    b=st.floats(-10.0, 10.0, allow_nan=False),
    m=st.floats(1.01, 32.0, allow_nan=False),
)
def test_psi_odd_and_monotone(a, b, m):
    law = PowerLaw(m)
    assert psi(-a, law) == pytest.approx(-psi(a, law), abs=1e-300)
    if a < b:
        assert psi(a, law) <= psi(b, law)
    assert psi_prime(a, law) >= 0.0


def test_powerlaw_validation():
    with pytest.raises(ValueError):
        PowerLaw(1.0)


# -- norms ---------------------------------------------------------------------


def test_norms_of_ones():
    g = GridSpec(1.0, 20)
    n = norms(ScalarField(g, np.ones((20, 20))))
    assert n.l1 == pytest.approx(4.0)
    assert n.l2 == pytest.approx(2.0)
    assert n.linf == 1.0


def test_norms_zero_and_indicator():
    g = GridSpec(1.0, 16)
    z = norms(ScalarField.zeros(g))
    assert z == (0.0, 0.0, 0.0)
    vals = np.zeros((16, 16))
    vals[4:7, 5:9] = 1.0  # 12 cells
    n = norms(ScalarField(g, vals))
    assert n.l1 == pytest.approx(12 * g.spacing ** 2)


def test_boundary_and_support_helpers():
    g = GridSpec(2.0, 32)
    vals = np.zeros((32, 32))
    vals[15, 15] = 1.0
    f = ScalarField(g, vals)
    assert boundary_ring_max(f) == 0.0
    assert support_margin_ok(f)
    vals2 = np.zeros((32, 32))
    vals2[1, 1] = 1.0  # within L/4 of the boundary
    assert not support_margin_ok(ScalarField(g, vals2))
