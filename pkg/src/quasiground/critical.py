"""Instantons, cut-off test functions and the critical-level estimates.

``omega_eps(x) = (N (N-2) eps)^((N-2)/4) / (eps + |x|^2)^((N-2)/2)`` attains
the best Sobolev constant. Cut off smoothly inside ``B_rho`` and normalized in
``L^{2*}`` it gives the test fields ``v_eps`` whose energy along a ray stays
below ``S^{N/2}/N`` when the nonlinearity is strong enough near the origin.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import DomainError, ResolutionError
from .functional import level_threshold, talenti_constant
from .grid import Field, RadialGrid, potential_on
from .nehari import Ray
from .nonlinearity import ConstantPotential, ModelSpec, ZeroNonlinearity, check_growth_conditions
from .transform import TransformSpec

__all__ = [
    "InstantonParams",
    "instanton",
    "cutoff",
    "test_function",
    "TestFunction",
    "SweepReport",
    "eps_sweep",
    "LevelBound",
    "level_bound_check",
    "level_sweep",
    "margin_vs_mu",
    "phi_maximizer_check",
    "default_sweep",
]


@dataclass(frozen=True)
class InstantonParams:
    eps: float
    rho: float = 1.0
    dimension: int = 3

    def __post_init__(self):
        if not (math.isfinite(self.eps) and self.eps > 0):
            raise DomainError("eps must be positive")
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise DomainError("rho must be positive")
        if int(self.dimension) != self.dimension or self.dimension < 3:
            raise DomainError("dimension must be an integer >= 3")

    @property
    def in_estimate_region(self) -> bool:
        """``sqrt(eps) < rho/2``, where the asymptotic estimates apply."""
        return math.sqrt(self.eps) < self.rho / 2


def _grid_for(params, grid):
    if grid is None:
        grid = RadialGrid(params.dimension, max(params.rho, 1.0), 4096)
    if not isinstance(grid, RadialGrid):
        raise DomainError("instantons live on the radial grid")
    if grid.dimension != params.dimension:
        raise DomainError("grid dimension does not match the parameters")
    return grid


def _omega(N, eps, r):
    return (N * (N - 2) * eps) ** ((N - 2) / 4.0) / (eps + r * r) ** ((N - 2) / 2.0)


def instanton(params: InstantonParams, grid: RadialGrid | None = None) -> Field:
    """Nodal values of ``omega_eps`` (no boundary condition imposed)."""
    grid = _grid_for(params, grid)
    return Field(grid, _omega(params.dimension, params.eps, grid.r), bc="none")


def cutoff(r, rho):
    """1 on ``B_{rho/2}``, 0 outside ``B_rho``, quintic smoothstep between (C^2)."""
    x = np.clip((np.asarray(r, dtype=float) - 0.5 * rho) / (0.5 * rho), 0.0, 1.0)
    return 1.0 - x**3 * (10.0 - 15.0 * x + 6.0 * x * x)


@dataclass(frozen=True)
class TestFunction:
    u: Field  # phi * omega_eps
    v: Field  # u / ||u||_{2*}
    u_crit_integral: float  # int |u|^{2*}

    __test__ = False  # not a pytest class


def test_function(params: InstantonParams, grid: RadialGrid | None = None, parts: bool = False):
    """``v_eps = phi omega_eps / ||phi omega_eps||_{2*}``; ``parts=True`` also returns ``u_eps``."""
    grid = _grid_for(params, grid)
    if params.rho > grid.radius:
        raise DomainError("the cut-off ball must fit inside the grid")
    N = params.dimension
    p = 2.0 * N / (N - 2.0)
    u = cutoff(grid.r, params.rho) * _omega(N, params.eps, grid.r)
    u[-1] = 0.0
    crit = grid.quad_integrate(np.abs(grid.interp(u)) ** p)
    v = u / crit ** (1.0 / p)
    tf = TestFunction(Field(grid, u), Field(grid, v), crit)
    return tf if parts else tf.v


test_function.__test__ = False


# -- sweeps -----------------------------------------------------------------------


def _fit_slope(x, y):
    lx, ly = np.log(np.asarray(x)), np.log(np.asarray(y))
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(slope), float(icpt)


@dataclass
class SweepReport:
    dimension: int
    rho: float
    grid: str
    rows: list
    fit_window: list
    fits: dict
    expected: dict
    K_extrapolated: float
    K_exact: float

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self, path):
        cols = ["eps", "grad_sq", "grad_excess", "l2_sq", "u_crit", "in_fit"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(cols)
            for row in self.rows:
                wr.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in cols])


def check_resolution(grid, eps):
    limit = (4.0 * grid.dr) ** 2
    if eps < limit:
        raise ResolutionError(f"eps={eps:g} is below the grid resolution (4 dr)^2 = {limit:.3g}")


def eps_sweep(model_or_dim, eps_list, grid: RadialGrid | None = None, rho: float = 1.0) -> SweepReport:
    """Norms of ``v_eps`` over a decreasing list of scales and their log-log rates.

    The fits leave out the largest scale, which is pre-asymptotic.
    """
    N = model_or_dim.dimension if hasattr(model_or_dim, "dimension") else int(model_or_dim)
    eps = [float(e) for e in eps_list]
    if len(eps) < 5:
        raise DomainError("a sweep needs at least five scales")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise DomainError("eps_list must be strictly decreasing")
    if not math.sqrt(eps[0]) < rho / 2:
        raise DomainError("need sqrt(max eps) < rho/2")
    grid = _grid_for(InstantonParams(eps[0], rho, N), grid)
    for e in eps:
        check_resolution(grid, e)
    S = talenti_constant(N)
    rows = []
    for k, e in enumerate(eps):
        tf = test_function(InstantonParams(e, rho, N), grid, parts=True)
        v = tf.v.values
        gs = grid.grad_sq(v)
        rows.append(
            {
                "eps": e,
                "grad_sq": gs,
                "grad_excess": gs - S,
                "l2_sq": grid.l2_inner(v, v),
                "u_crit": tf.u_crit_integral,
                "in_fit": k > 0,
            }
        )
    win = [r for r in rows if r["in_fit"]]
    x = [r["eps"] for r in win]
    fits = {}
    expected = {"grad_slope": (N - 2) / 2.0}
    if all(r["grad_excess"] > 0 for r in win):
        fits["grad_slope"] = _fit_slope(x, [r["grad_excess"] for r in win])[0]
    else:
        fits["grad_slope"] = math.nan
    fits["l2_slope"] = _fit_slope(x, [r["l2_sq"] for r in win])[0]
    if N == 3:
        expected["l2_slope"] = 0.5
    elif N >= 5:
        expected["l2_slope"] = 1.0
    else:
        ratios = [r["l2_sq"] / (r["eps"] * abs(math.log(r["eps"]))) for r in win]
        fits["l2_log_ratio_spread"] = (max(ratios) - min(ratios)) / min(ratios)
        fits["l2_log_ratios"] = ratios
        expected["l2_log_ratio_spread"] = 0.0
    # int |u_eps|^{2*} = K + O(eps^{N/2}): eliminate the correction from the last two
    e1, e2 = rows[-2]["eps"], rows[-1]["eps"]
    k1, k2 = rows[-2]["u_crit"], rows[-1]["u_crit"]
    q = (e1 / e2) ** (N / 2.0)
    K = (q * k2 - k1) / (q - 1.0)
    return SweepReport(
        dimension=N,
        rho=rho,
        grid=grid.fingerprint(),
        rows=rows,
        fit_window=x,
        fits=fits,
        expected=expected,
        K_extrapolated=K,
        K_exact=S ** (N / 2.0),
    )


# fit windows that sit inside the asymptotic regime at n = 4096, R = rho = 1;
# the N = 3 window reaches scales where the level bound is strict for mu = 1
_DEFAULT_EPS = {
    3: [5e-3 / 2**k for k in range(9)],
    4: [4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4],
}


def default_sweep(N):
    return list(_DEFAULT_EPS.get(N, [4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4]))


# -- level bound ----------------------------------------------------------------------


@dataclass(frozen=True)
class LevelBound:
    eps: float
    max_value: float
    threshold: float
    margin: float
    t_star: float
    divergence_holds: bool
    guaranteed: bool

    def to_dict(self):
        return asdict(self)


def _divergence_holds(model):
    rep = check_growth_conditions(model)
    return all(e.passed for e in rep.entries if e.name.startswith("divergence"))


def level_bound_check(model, params: InstantonParams, grid: RadialGrid | None = None, divergence=None) -> LevelBound:
    """``max_t I(t v_eps)`` against ``S^{N/2}/N``, with the maximizing ``t``."""
    if model.dimension != params.dimension:
        raise DomainError("model and parameters disagree on N")
    grid = _grid_for(params, grid)
    check_resolution(grid, params.eps)
    v = test_function(params, grid)
    ray = Ray(model, grid, v.values, potential_on(model, grid))
    res = ray.project()
    thr = level_threshold(model.dimension)
    div_ok = _divergence_holds(model) if divergence is None else divergence
    return LevelBound(
        eps=params.eps,
        max_value=res.value,
        threshold=thr,
        margin=thr - res.value,
        t_star=res.t_star,
        divergence_holds=div_ok,
        guaranteed=bool(div_ok and params.in_estimate_region),
    )


@dataclass
class LevelSweep:
    bounds: list
    t_min: float
    t_max: float
    best_upper_bound: float
    below_threshold: bool

    def to_dict(self):
        return {
            "bounds": [b.to_dict() for b in self.bounds],
            "t_min": self.t_min,
            "t_max": self.t_max,
            "best_upper_bound": self.best_upper_bound,
            "below_threshold": self.below_threshold,
        }


def level_sweep(model, eps_list, grid=None, rho=1.0) -> LevelSweep:
    """Level bounds over several scales; ``t_eps`` should stay in a fixed band."""
    diverges = _divergence_holds(model)
    bounds = [level_bound_check(model, InstantonParams(e, rho, model.dimension), grid, divergence=diverges) for e in eps_list]
    ts = [b.t_star for b in bounds]
    best = min(b.max_value for b in bounds)
    return LevelSweep(bounds, min(ts), max(ts), best, all(b.margin > 0 for b in bounds))


def margin_vs_mu(model, mus, params, grid=None):
    """Margins for the same model with the nonlinearity strength replaced by each ``mu``."""
    from dataclasses import replace

    out = []
    for mu in mus:
        m = replace(model, nonlinearity=replace(model.nonlinearity, mu=float(mu)))
        out.append(level_bound_check(m, params, grid).margin)
    return out


def phi_maximizer_check(params: InstantonParams, grid: RadialGrid | None = None) -> dict:
    """Ray maximizer of ``s^2 A/2 - s^{2*}/2*`` with ``A = ||grad v_eps||^2``.

    With no potential and no subcritical term, the fibering map of the
    normalized test field is exactly that polynomial, so ``s = A^{(N-2)/4}``
    and the maximum is ``A^{N/2}/N``.
    """
    grid = _grid_for(params, grid)
    N = params.dimension
    model = ModelSpec(N, TransformSpec("identity"), ConstantPotential(0.0), ZeroNonlinearity())
    v = test_function(params, grid)
    A = grid.grad_sq(v.values)
    res = Ray(model, grid, v.values, 0.0).project()
    s_exact = A ** ((N - 2) / 4.0)
    phi_exact = A ** (N / 2.0) / N
    return {
        "A": A,
        "s_numeric": res.t_star,
        "s_exact": s_exact,
        "s_error": abs(res.t_star - s_exact) / s_exact,
        "phi_numeric": res.value,
        "phi_exact": phi_exact,
        "phi_error": abs(res.value - phi_exact) / phi_exact,
    }
