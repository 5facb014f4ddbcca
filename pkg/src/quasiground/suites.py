"""Sampled property suites shared by the CLI and the test-suite.

Every suite returns a :class:`PropertyReport`; random inputs come from one
``numpy.random.Generator`` so a seed fixes the whole run.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize

from .functional import energy_derivative, energy_value, weak_residual_modified, weak_residual_original
from .grid import Field, RadialGrid, potential_on
from .nehari import Ray
from .nonlinearity import ModelSpec, ZeroNonlinearity, check_growth_conditions
from .reports import PropertyReport
from .solver import back_transform
from .transform import TransformSpec, check_g_assumptions

__all__ = [
    "SUITES",
    "g_suite",
    "growth_suite",
    "primitive_identity",
    "random_bump",
    "fibering_suite",
    "golden_maximizer",
    "gradient_suite",
    "equivalence_suite",
    "run_suite",
]

SUITES = ("g", "growth", "fibering", "functional-equivalence", "all")


def g_suite(spec: TransformSpec, decades=12, per_decade=20) -> PropertyReport:
    s = np.logspace(-decades / 2, decades / 2, decades * per_decade + 1)
    return check_g_assumptions(spec, s)


def primitive_identity(model, s_max=1e3, n=121, order=40) -> tuple[float, float]:
    """Largest gap between closed-form ``H`` and the integral of ``h``, absolute and scaled by ``max(1, |H|)``.

    ``h`` is smooth on ``s > 0``; each log-spaced piece gets a Gauss rule of
    the given order and the pieces are summed cumulatively.
    """
    Vx = float(model.potential(np.zeros(model.dimension)))
    s = np.concatenate([[0.0], np.logspace(-4, math.log10(s_max), n)])
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = s[:-1, None], s[1:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * x
    pieces = np.sum(model.h(nodes.ravel(), Vx).reshape(nodes.shape) * w, axis=1) * 0.5 * (b - a).ravel()
    acc = np.cumsum(pieces)
    H = model.H(s[1:], Vx)
    gap = np.abs(H - acc)
    return float(gap.max()), float(np.max(gap / np.maximum(1.0, np.abs(H))))


def growth_suite(model, s_max=1e3, tol=1e-8) -> PropertyReport:
    rep = check_growth_conditions(model)
    ab, rel = primitive_identity(model, s_max)
    rep.add("H = int_0^s h", f"s in [0, {s_max:g}]", rel, rel <= tol, f"absolute {ab:.3e}, scaled by max(1, |H|)")
    return rep


# -- fibering ------------------------------------------------------------------------


def random_bump(grid: RadialGrid, rng, max_bumps=3) -> np.ndarray:
    """Positive sum of Gaussians with random centres, widths and heights, zero at R."""
    R = grid.radius
    v = np.zeros(grid.shape)
    for _ in range(int(rng.integers(1, max_bumps + 1))):
        c = rng.uniform(0.0, R / 2)
        w = R * 10 ** rng.uniform(-2, -0.7)
        a = 10 ** rng.uniform(-1, 1)
        v += a * np.exp(-(((grid.r - c) / w) ** 2))
    v[-1] = 0.0
    return v


def golden_maximizer(ray: Ray, t_lo=1e-6, t_hi=1e6, n_scan=41):
    """Maximize ``t -> I(t v)`` by a log scan then golden-section search in ``log t``."""
    ts = np.logspace(math.log10(t_lo), math.log10(t_hi), n_scan)
    vals = np.array([ray.value(t) for t in ts])
    k = int(np.clip(np.argmax(vals), 1, n_scan - 2))
    res = optimize.minimize_scalar(
        lambda y: -ray.value(math.exp(y)),
        bracket=(math.log(ts[k - 1]), math.log(ts[k]), math.log(ts[k + 1])),
        method="golden",
        options={"xtol": 1e-10},
    )
    return math.exp(res.x), -res.fun


def _sign_changes(ray, ts):
    s = np.sign([ray.derivative(t) for t in ts])
    s = s[s != 0]
    return int(np.count_nonzero(np.diff(s))), bool(s[0] > 0)


def fibering_suite(model, grid: RadialGrid, rng, n_fields=100, golden_every=1) -> PropertyReport:
    """Uniqueness of the ray maximizer, agreement with golden section, Identity/Zero-f closed form."""
    Vx = potential_on(model, grid)
    ts = np.logspace(-6, 6, 61)
    bad_pattern, worst_golden, worst_res = 0, 0.0, 0.0
    worst_closed = 0.0
    N = model.dimension
    plain = ModelSpec(N, TransformSpec("identity"), model.potential, ZeroNonlinearity())
    for i in range(n_fields):
        v = random_bump(grid, rng)
        ray = Ray(model, grid, v, Vx)
        changes, starts_positive = _sign_changes(ray, ts)
        if changes != 1 or not starts_positive:
            bad_pattern += 1
        res = ray.project()
        worst_res = max(worst_res, res.derivative_residual / ray.norm2)
        if i % golden_every == 0:
            tg, _ = golden_maximizer(ray)
            worst_golden = max(worst_golden, abs(tg - res.t_star) / res.t_star)
        pr = Ray(plain, grid, v, Vx)
        t_exact = (pr.norm2 / pr.C) ** ((N - 2) / 4.0)
        t_num = pr.project().t_star
        worst_closed = max(worst_closed, abs(t_num - t_exact) / t_exact)
    rep = PropertyReport(f"fibering [{model.transform.kind.value}, {model.nonlinearity.kind}]")
    dom = f"{n_fields} random bumps, t in [1e-6, 1e6]"
    rep.add("M' changes sign once (+ to -)", dom, bad_pattern, bad_pattern == 0)
    rep.add("|M'(t*)| <= 1e-10 ||v||^2", dom, worst_res, worst_res <= 1e-10)
    rep.add("projection = golden-section maximizer", dom, worst_golden, worst_golden <= 1e-6)
    rep.add("Identity/Zero-f closed form", dom, worst_closed, worst_closed <= 1e-10)
    return rep


# -- gradient and formulation equivalence --------------------------------------------


def _smooth_field(grid, rng, amp=1.0):
    v = random_bump(grid, rng)
    return amp * v / np.max(np.abs(v))


def gradient_suite(model, grid: RadialGrid, rng, pairs=20, h=1e-4, tol=1e-4) -> PropertyReport:
    """``<I'(v), phi>`` against central differences of ``I``."""
    Vx = potential_on(model, grid)
    worst = 0.0
    for _ in range(pairs):
        v = _smooth_field(grid, rng, rng.uniform(0.5, 3.0))
        # overlap with v so the pairing is not trivially zero
        phi = _smooth_field(grid, rng) + 0.5 * v / np.max(np.abs(v))
        exact = float(np.dot(energy_derivative(model, grid, v, Vx), phi))
        dq = (energy_value(model, grid, v + h * phi, Vx).total - energy_value(model, grid, v - h * phi, Vx).total) / (2 * h)
        scale = max(abs(dq), abs(exact))
        worst = max(worst, abs(exact - dq) / scale if scale > 0 else 0.0)
    rep = PropertyReport(f"gradient consistency [{model.transform.kind.value}]")
    rep.add("<I'(v), phi> = central difference", f"{pairs} pairs, h={h:g}", worst, worst <= tol)
    return rep


def equivalence_suite(model, grid: RadialGrid, rng, fields=5, tol=1e-2) -> PropertyReport:
    """Weak residuals of the original and modified equations on random fields with ``|v| <= 10``."""
    worst = 0.0
    for _ in range(fields):
        v = Field(grid, _smooth_field(grid, rng, rng.uniform(1.0, 10.0)))
        u = back_transform(model.transform, v)
        a = weak_residual_modified(model, v)
        b = weak_residual_original(model, u)
        worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    rep = PropertyReport(f"formulation equivalence [{model.transform.kind.value}]")
    rep.add("original = modified weak residual", f"{fields} fields, |v| <= 10", worst, worst <= tol)
    return rep


def run_suite(name, model, grid, rng) -> list[PropertyReport]:
    if name not in SUITES:
        raise KeyError(name)
    out = []
    if name in ("g", "all"):
        out.append(g_suite(model.transform))
    if name in ("growth", "all"):
        out.append(growth_suite(model))
    if name in ("fibering", "all"):
        out.append(fibering_suite(model, grid, rng))
    if name in ("functional-equivalence", "all"):
        out.append(gradient_suite(model, grid, rng))
        out.append(equivalence_suite(model, grid, rng))
    return out
