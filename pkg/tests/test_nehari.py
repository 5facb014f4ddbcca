import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import power_model
from oracles import fibering_closed_form
from quasiground.exceptions import DomainError
from quasiground.grid import Field, RadialGrid
from quasiground.nehari import (
    Ray,
    e_norm,
    fibering_derivative,
    fibering_map,
    m_inverse,
    m_map,
    nehari_residual,
    project_nehari,
    psi,
    psi_gradient_tangential,
)
from quasiground.nonlinearity import ConstantPotential, ModelSpec, ZeroNonlinearity
from quasiground.suites import fibering_suite, golden_maximizer, random_bump
from quasiground.transform import TransformSpec

KINDS = ["identity", "superfluid_film", "laser_channeling"]
COARSE = RadialGrid(3, 20.0, 256)


@pytest.fixture(scope="module")
def grid():
    return RadialGrid(3, 20.0, 512)


@pytest.fixture(scope="module")
def plain():
    return ModelSpec(3, TransformSpec("identity"), ConstantPotential(1.0), ZeroNonlinearity())


def field(grid, seed):
    return Field(grid, random_bump(grid, np.random.default_rng(seed)))


def test_closed_form_projection(grid, plain):
    v = field(grid, 0)
    ray = Ray(plain, grid, v.values)
    res = project_nehari(plain, v)
    assert res.t_star == pytest.approx(fibering_closed_form(ray.norm2, ray.C, 3), rel=1e-10)
    assert fibering_map(plain, v, 1.3) == pytest.approx(1.3**2 / 2 * ray.norm2 - 1.3**6 / 6 * ray.C, rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(min_value=0.05, max_value=20.0), st.sampled_from(KINDS))
def test_ray_scaling(seed, c, kind):
    m = power_model(kind)
    v = field(COARSE, seed)
    a = project_nehari(m, v).t_star
    b = project_nehari(m, v * c).t_star
    assert b == pytest.approx(a / c, rel=1e-9)


@pytest.mark.parametrize("kind", KINDS)
def test_result_invariants(kind, grid):
    m = power_model(kind)
    v = field(grid, 3)
    res = project_nehari(m, v)
    lo, hi = res.bracket
    assert lo < res.t_star < hi
    assert fibering_derivative(m, v, lo) > 0 > fibering_derivative(m, v, hi)
    assert res.derivative_residual <= 1e-10 * Ray(m, grid, v.values).norm2
    assert res.value == pytest.approx(fibering_map(m, v, res.t_star), rel=1e-14)
    assert list(res.scan_signs).count(-1) >= 1
    d = res.to_dict()
    assert d["bracket"] == [lo, hi]


def test_golden_section_oracle(grid):
    m = power_model("superfluid_film")
    ray = Ray(m, grid, field(grid, 11).values)
    tg, val = golden_maximizer(ray)
    res = ray.project()
    assert tg == pytest.approx(res.t_star, rel=1e-6)
    assert val == pytest.approx(res.value, rel=1e-12)


def test_fibering_suite_small(grid):
    rep = fibering_suite(power_model("superfluid_film"), RadialGrid(3, 20.0, 128), np.random.default_rng(5), n_fields=10)
    assert rep.passed, rep.format_table()


def test_small_positive_and_beyond_negative(grid):
    m = power_model("superfluid_film")
    v = field(grid, 2)
    small = v * (1e-3 / e_norm(m, v))
    assert nehari_residual(m, small) > 0
    res = project_nehari(m, v)
    on = v * res.t_star
    assert abs(nehari_residual(m, on)) <= 1e-8 * e_norm(m, on) ** 2
    assert nehari_residual(m, on * 2.0) < 0


def test_fibering_positive_near_zero_and_negative_far(grid):
    m = power_model("laser_channeling")
    v = field(grid, 4)
    assert fibering_map(m, v, 1e-4) > 0
    assert fibering_map(m, v, 1e4) < 0


def test_m_map_round_trip(grid):
    m = power_model("superfluid_film")
    v = field(grid, 6)
    w = m_inverse(m, v)
    assert e_norm(m, w) == pytest.approx(1.0, abs=1e-12)
    mw = m_map(m, w)
    assert e_norm(m, mw) == pytest.approx(project_nehari(m, w).t_star, rel=1e-12)
    back = m_inverse(m, mw)
    diff = back - w
    assert e_norm(m, diff) <= 1e-8
    with pytest.raises(DomainError):
        m_map(m, v * 2.0 if abs(e_norm(m, v) - 0.5) > 1e-3 else v)


def test_m_is_continuous_along_a_path(grid):
    m = power_model("superfluid_film")
    a, b = field(grid, 7), field(grid, 8)
    prev = None
    jumps = []
    for s in np.linspace(0, 1, 21):
        w = m_inverse(m, a * (1 - s) + b * s)
        cur = m_map(m, w)
        if prev is not None:
            jumps.append(e_norm(m, cur - prev))
        prev = cur
    assert max(jumps) < 0.2 * e_norm(m, prev)


def test_psi_value_transfer_and_tangency(grid):
    m = power_model("superfluid_film")
    w = m_inverse(m, field(grid, 9))
    t = project_nehari(m, w).t_star
    assert psi(m, w) == pytest.approx(fibering_map(m, w, t), rel=1e-14)
    d = psi_gradient_tangential(m, w)
    assert abs(grid.e_inner(d.values, w.values, 1.0)) <= 1e-10 * e_norm(m, d)


def test_inf_transfer_on_a_sampled_family(grid):
    m = power_model("identity")
    rng = np.random.default_rng(1)
    ws = [m_inverse(m, Field(grid, random_bump(grid, rng))) for _ in range(8)]
    vals = [psi(m, w) for w in ws]
    levels = [fibering_map(m, m_map(m, w), 1.0) for w in ws]
    assert min(vals) == pytest.approx(min(levels), rel=1e-12)
    for w, c in zip(ws, vals):
        assert e_norm(m, m_map(m, w)) ** 2 >= 2 * c


def test_rejects_zero_and_non_positive_t(grid):
    m = power_model("identity")
    with pytest.raises(DomainError):
        project_nehari(m, Field(grid, np.zeros(grid.shape)))
    with pytest.raises(DomainError):
        fibering_map(m, field(grid, 1), 0.0)


def test_sign_changing_field_still_projects(grid):
    m = power_model("superfluid_film")
    v = field(grid, 1).values - field(grid, 2).values
    res = project_nehari(m, Field(grid, v))
    assert res.derivative_residual <= 1e-10 * Ray(m, grid, v).norm2
