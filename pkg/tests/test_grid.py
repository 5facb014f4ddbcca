import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasiground.exceptions import DomainError
from quasiground.grid import (
    BoxGrid,
    Field,
    RadialGrid,
    interpolate,
    laplacian_apply,
    norm_H1,
    norm_L2,
    norm_Lcrit,
    refine,
    sphere_area,
)


@pytest.fixture(scope="module")
def g3():
    return RadialGrid(3, 10.0, 2048)


def test_sphere_area():
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi**2)


@pytest.mark.parametrize("N", [3, 4, 5])
def test_lumped_weights_fill_the_ball(N):
    g = RadialGrid(N, 2.0, 1024)
    vol = sphere_area(N) / N * 2.0**N
    assert g.weights.sum() == pytest.approx(vol, rel=5e-7)
    assert g.volume == pytest.approx(vol, rel=1e-14)


@pytest.mark.parametrize("N", [3, 4, 6])
def test_laplacian_exact_on_r_squared(N):
    g = RadialGrid(N, 1.0, 64)
    lap = g.laplacian(g.r**2)
    assert np.allclose(lap[:-1], 2 * N, rtol=1e-12)


def test_laplacian_second_order_on_gaussian():
    errs = []
    for n in (512, 1024):
        g = RadialGrid(3, 8.0, n)
        v = np.exp(-(g.r**2))
        exact = (4 * g.r**2 - 6) * v
        errs.append(np.max(np.abs(g.laplacian(v) - exact)[:-1]))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_gaussian_integrals(g3):
    v = np.exp(-(g3.r**2))
    v[-1] = 0.0
    assert g3.grad_sq(v) == pytest.approx(3 * math.pi**1.5 / 2**1.5, rel=1e-8)
    assert g3.l2_inner(v, v) == pytest.approx((math.pi / 2) ** 1.5, rel=1e-8)
    f = Field(g3, v)
    assert norm_Lcrit(f) == pytest.approx((math.pi / 6) ** 0.25, rel=1e-8)
    assert norm_L2(f) ** 2 == pytest.approx((math.pi / 2) ** 1.5, rel=1e-8)
    assert norm_H1(f) ** 2 == pytest.approx(3 * math.pi**1.5 / 2**1.5 + (math.pi / 2) ** 1.5, rel=1e-8)


def test_spline_profile_interpolates_nodes(g3):
    v = np.exp(-(g3.r**2))
    v[-1] = 0.0
    assert np.allclose(g3.profile(v, g3.r[:-1]), v[:-1], atol=1e-13)
    mid = g3.r[:-1] + g3.dr / 2
    assert np.allclose(g3.profile(v, mid), np.exp(-(mid**2)), atol=1e-9)
    assert g3.profile(v, np.array([20.0]))[0] == 0.0


vectors = st.integers(min_value=0, max_value=2**31 - 1)


@settings(max_examples=20, deadline=None)
@given(vectors)
def test_interpolation_adjoints(seed):
    g = RadialGrid(3, 5.0, 64)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=g.shape)
    v[-1] = 0.0
    q = rng.normal(size=g.quad_r.shape)
    lhs = float(np.sum(g.interp(v) * q))
    rhs = float(np.dot(v, g.interp_adjoint(q)))
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)
    lhs = float(np.sum(g.interp_grad(v) * q))
    rhs = float(np.dot(v, g.interp_grad_adjoint(q)))
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)


@settings(max_examples=20, deadline=None)
@given(vectors, st.floats(min_value=0.1, max_value=10.0))
def test_riesz_map_represents_the_pairing(seed, V):
    g = RadialGrid(3, 5.0, 128)
    rng = np.random.default_rng(seed)
    b = rng.normal(size=g.shape)
    b[-1] = 0.0
    z = g.riesz_solve(b, V)
    for _ in range(3):
        phi = rng.normal(size=g.shape)
        phi[-1] = 0.0
        assert g.e_inner(z, phi, V) == pytest.approx(float(np.dot(b, phi)), rel=1e-9, abs=1e-9)


def test_stiffness_is_gradient_of_dirichlet_energy(g3):
    rng = np.random.default_rng(1)
    v = np.exp(-(g3.r**2)) * (1 + 0.1 * np.sin(g3.r))
    v[-1] = 0.0
    phi = rng.normal(size=g3.shape)
    phi[-1] = 0.0
    h = 1e-6
    dq = (g3.grad_sq(v + h * phi) - g3.grad_sq(v - h * phi)) / (4 * h)
    assert float(np.dot(g3.stiffness(v), phi)) == pytest.approx(dq, rel=1e-6)


def test_discrete_sobolev_quotient_bounded_below():
    # a one-node spike must not beat the continuum constant
    g = RadialGrid(3, 1.0, 256)
    v = np.zeros(g.shape)
    v[40] = 1.0
    quotient = g.grad_sq(v) / g.quad_integrate(np.abs(g.interp(v)) ** 6) ** (1 / 3)
    assert quotient > 5.4779


def test_field_validation(g3):
    with pytest.raises(DomainError):
        Field(g3, np.ones(g3.shape))
    with pytest.raises(DomainError):
        Field(g3, np.zeros(10))
    with pytest.raises(DomainError):
        Field(g3, np.full(g3.shape, np.nan))
    f = Field(g3, np.ones(g3.shape), bc="none")
    with pytest.raises(ValueError):
        f.values[0] = 2.0
    assert laplacian_apply(f).bc == "none"


def test_grid_validation():
    with pytest.raises(DomainError):
        RadialGrid(2, 1.0, 64)
    with pytest.raises(DomainError):
        RadialGrid(3, -1.0, 64)
    with pytest.raises(DomainError):
        RadialGrid(3, 1.0, 8)
    with pytest.raises(DomainError):
        BoxGrid(7, 4)
    with pytest.raises(DomainError):
        RadialGrid(3, 1.0, 64).quad_potential(np.ones(65))


def test_refine_and_interpolate():
    g = RadialGrid(3, 4.0, 64)
    f = Field(g, np.where(g.r < 4.0, 4.0 - g.r, 0.0))
    g2 = refine(g, 2)
    assert g2.n == 128
    f2 = interpolate(f, g2)
    assert np.allclose(f2.values, 4.0 - g2.r)


def test_box_grid_basics():
    b = BoxGrid(16, 4)
    assert b.weights.sum() == pytest.approx(64.0)
    x = b.points()
    v = np.sin(2 * np.pi * x[..., 0] / 4)
    lap = b.laplacian(v)
    k = 2 * np.pi / 4
    sym = (2 - 2 * np.cos(k * b.h)) / b.h**2
    assert np.allclose(lap, -sym * v, atol=1e-12)
    z = b.riesz_solve(v * b.h**3, 1.0)
    assert b.e_inner(z, v, 1.0) == pytest.approx(b.l2_inner(v, v), rel=1e-10)


def test_box_ball_masses_of_constant():
    b = BoxGrid(16, 4)
    origin, masses = b.ball_masses(np.ones(b.shape), 1.0)
    assert np.allclose(masses, origin)
