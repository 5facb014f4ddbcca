import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import power_model
from frozen import TALENTI
from oracles import talenti
from quasiground.exceptions import DomainError
from quasiground.functional import (
    e_gradient,
    energy,
    energy_derivative,
    energy_value,
    gradient,
    level_threshold,
    sobolev_constant,
    talenti_constant,
    weak_residual_modified,
    weak_residual_original,
)
from quasiground.grid import BoxGrid, Field, RadialGrid
from quasiground.nonlinearity import ConstantPotential, CosinePotential, ModelSpec, ZeroNonlinearity
from quasiground.suites import equivalence_suite, gradient_suite
from quasiground.transform import TransformSpec

KINDS = ["identity", "superfluid_film", "laser_channeling"]


@pytest.fixture(scope="module")
def grid():
    return RadialGrid(3, 20.0, 1024)


def bump(grid, a=1.0, w=2.0):
    v = a * np.exp(-((grid.r / w) ** 2))
    v[-1] = 0.0
    return Field(grid, v)


def test_zero_field_has_zero_energy_and_gradient(grid):
    m = power_model("superfluid_film")
    z = Field(grid, np.zeros(grid.shape))
    e = energy(m, z)
    assert (e.kinetic, e.potential, e.h_part, e.critical, e.total) == (0.0, 0.0, 0.0, 0.0, 0.0)
    assert not np.any(gradient(m, z).values)
    assert weak_residual_modified(m, z) == 0.0
    assert weak_residual_original(m, z) == 0.0


@pytest.mark.parametrize("kind", KINDS)
def test_energy_split(kind, grid):
    e = energy(power_model(kind), bump(grid, 2.0))
    assert e.total == pytest.approx(e.kinetic + e.potential - e.h_part - e.critical, abs=1e-12)


def test_plain_reduction(grid):
    m = ModelSpec(3, TransformSpec("identity"), ConstantPotential(1.0), ZeroNonlinearity())
    v = bump(grid, 1.5)
    e = energy(m, v)
    norm_sq = grid.e_inner(v.values, v.values, 1.0)
    crit = grid.quad_integrate(np.abs(grid.interp(v.values)) ** 6)
    assert e.h_part == 0.0
    assert e.total == pytest.approx(0.5 * norm_sq - crit / 6, rel=1e-13)


def test_instanton_kinetic_energy_near_half_S():
    g = RadialGrid(3, 200.0, 8192)
    eps = 0.1
    w = (3 * eps) ** 0.25 / np.sqrt(eps + g.r**2)
    w = w - w[-1]
    m = ModelSpec(3, TransformSpec("identity"), ConstantPotential(1.0), ZeroNonlinearity())
    f = Field(g, w / (g.quad_integrate(np.abs(g.interp(w)) ** 6) ** (1 / 6)))
    assert energy(m, f).kinetic == pytest.approx(0.5 * TALENTI[3], rel=0.02)


@pytest.mark.parametrize("kind", KINDS)
def test_gradient_matches_central_differences(kind):
    rep = gradient_suite(power_model(kind), RadialGrid(3, 20.0, 1024), np.random.default_rng(7))
    assert rep.passed, rep.format_table()


@pytest.mark.parametrize("kind", KINDS)
def test_formulations_agree(kind):
    rep = equivalence_suite(power_model(kind), RadialGrid(3, 40.0, 4096), np.random.default_rng(3))
    assert rep.passed, rep.format_table()


def test_identity_formulations_coincide(grid):
    m = power_model("identity")
    v = bump(grid, 3.0)
    assert weak_residual_original(m, v) == pytest.approx(weak_residual_modified(m, v), rel=1e-12)


def test_random_field_residual_is_order_one(grid):
    m = power_model("superfluid_film")
    assert weak_residual_modified(m, bump(grid, 2.0)) > 1e-2


def test_gradient_pairing_is_directional_derivative(grid):
    m = power_model("laser_channeling")
    v = bump(grid, 2.0)
    phi = bump(grid, 1.0, 5.0).values
    r = gradient(m, v).values
    paired = float(np.dot(r * grid.weights, phi))
    assert paired == pytest.approx(float(np.dot(energy_derivative(m, grid, v.values, 1.0), phi)), rel=1e-12)


def test_e_gradient_represents_derivative(grid):
    m = power_model("superfluid_film")
    v = bump(grid, 2.0)
    G = e_gradient(m, v).values
    phi = bump(grid, 1.0, 4.0).values
    assert grid.e_inner(G, phi, 1.0) == pytest.approx(float(np.dot(energy_derivative(m, grid, v.values, 1.0), phi)), rel=1e-9)


def test_talenti_constant_matches_oracle():
    for N in (3, 4, 5):
        assert talenti_constant(N) == pytest.approx(TALENTI[N], rel=1e-15)
        assert talenti(N) == pytest.approx(TALENTI[N], rel=1e-15)
    assert level_threshold(3) == pytest.approx(TALENTI[3] ** 1.5 / 3, rel=1e-15)
    with pytest.raises(DomainError):
        talenti_constant(2)


@pytest.mark.parametrize("N", [3, 4, 5])
def test_sobolev_constant(N):
    S = sobolev_constant(N)
    assert S == pytest.approx(TALENTI[N], rel=1e-6)


def test_sobolev_scale_invariance():
    a = sobolev_constant(3, eps=1.0)
    b = sobolev_constant(3, eps=4.0)
    assert a == pytest.approx(b, rel=1e-3)


@settings(max_examples=10, deadline=None)
@given(st.floats(min_value=0.2, max_value=3.0))
def test_energy_along_ray_is_smooth_in_t(t):
    grid = RadialGrid(3, 20.0, 512)
    m = power_model("superfluid_film")
    v = bump(grid, 1.0).values
    h = 1e-5
    d = (energy_value(m, grid, (t + h) * v, 1.0).total - energy_value(m, grid, (t - h) * v, 1.0).total) / (2 * h)
    exact = float(np.dot(energy_derivative(m, grid, t * v, 1.0), v))
    assert d == pytest.approx(exact, rel=1e-6, abs=1e-8)


def test_box_backend_energy_and_gradient():
    b = BoxGrid(16, 4)
    m = ModelSpec(3, TransformSpec("superfluid_film"), CosinePotential(1.0, 0.5), power_model("identity").nonlinearity)
    f = Field(b, 0.5 * b.gaussian(0.6, 2.0))
    e = energy(m, f)
    assert e.total == pytest.approx(e.kinetic + e.potential - e.h_part - e.critical, abs=1e-12)
    rng = np.random.default_rng(0)
    phi = rng.normal(size=b.shape)
    h = 1e-6
    Vx = m.potential(b.points())
    dq = (energy_value(m, b, f.values + h * phi, Vx).total - energy_value(m, b, f.values - h * phi, Vx).total) / (2 * h)
    assert float(np.sum(energy_derivative(m, b, f.values, Vx) * phi)) == pytest.approx(dq, rel=1e-6)
