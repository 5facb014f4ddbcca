"""Ground states by descent of ``Psi = I o m`` on the unit sphere of E.

Each iterate ``w`` has ``||w||_E = 1``; ``m(w) = t_w w`` is its Nehari
projection and ``Psi(w) = I(m(w))``. The tangential gradient is
``t_w (G - <G, w>_E w)`` where ``G`` is the E-gradient of I at ``m(w)``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import betainc

from .exceptions import AssumptionFailure, ConfigError, DomainError, NotOnManifold, PSBoundViolation
from .functional import energy_derivative, energy_value, level_threshold, weak_residual_modified, weak_residual_original
from .grid import BoxGrid, Field, RadialGrid, potential_on
from .nehari import Ray
from .nonlinearity import check_growth_conditions
from .reports import PropertyReport
from .transform import TransformSpec, check_g_assumptions

__all__ = [
    "SolveConfig",
    "SolveReport",
    "minimize_ground_state",
    "concentration_diagnostic",
    "back_transform",
    "level_certificate",
    "ps_norm_cap",
    "check_ps_trajectory",
    "check_model_assumptions",
]

STEP_RULES = ("fixed", "armijo", "bb")


@dataclass(frozen=True)
class SolveConfig:
    backend: str = "radial"
    R: float = 40.0
    n: int = 4096
    box_m: int = 16
    box_side: int = 4
    init_width: float | None = None  # default R/10
    init_center: float = 0.0
    init_file: str | None = None
    step_rule: str = "bb"
    armijo_c: float = 1e-4
    fixed_step: float | None = None
    tol: float = 1e-6
    max_iter: int = 10_000
    clamp: bool = True
    ps_margin: float = 10.0
    concentration_radius: float | None = None  # default R/4
    monitor_every: int = 10
    check_assumptions: bool = True
    recenter: bool = True

    def __post_init__(self):
        if self.backend not in ("radial", "box"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.step_rule not in STEP_RULES:
            raise ConfigError(f"step_rule must be one of {STEP_RULES}")
        if not (self.tol > 0 and self.armijo_c > 0 and self.max_iter > 0):
            raise ConfigError("tolerances and iteration limits must be positive")
        if self.step_rule == "fixed" and not (self.fixed_step and self.fixed_step > 0):
            raise ConfigError("the fixed step rule needs fixed_step > 0")
        if not self.R > 0:
            raise ConfigError("R must be positive")
        if self.ps_margin <= -1:
            raise ConfigError("ps_margin must exceed -1")

    def make_grid(self, dimension):
        if self.backend == "radial":
            return RadialGrid(dimension, self.R, self.n)
        return BoxGrid(self.box_m, self.box_side, dimension)

    @property
    def domain_radius(self):
        return self.R if self.backend == "radial" else self.box_side / 2

    def to_dict(self):
        return asdict(self)


@dataclass
class SolveReport:
    v_star: Field
    u_star: Field
    level: float
    energy: dict
    nehari_residual: float
    nehari_residual_relative: float
    norm_sq: float
    weak_residual_modified: float
    weak_residual_original: float
    grad_norm: float
    concentration: dict
    vanishing: bool
    ps_max_norm: float
    ps_cap: float
    iterations: int
    converged: bool
    reason: str
    threshold: float
    below_threshold: bool
    fibering: dict
    assumption_checks: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    grid: str = ""

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k not in ("v_star", "u_star")}
        d["assumption_checks"] = {k: r.to_dict() for k, r in self.assumption_checks.items()}
        d["max_v"] = float(np.max(self.v_star.values))
        d["min_v"] = float(np.min(self.v_star.values))
        d["max_u"] = float(np.max(self.u_star.values))
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=True)


# -- diagnostics -----------------------------------------------------------------


def _cap_fraction(N, s, rho, r):
    """Fraction of the sphere |x| = s lying in B_r(y) with |y| = rho."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    if rho == 0:
        out[s < r] = 1.0
        return out
    inside = s + rho <= r
    out[inside] = 1.0
    cut = (np.abs(s - rho) < r) & ~inside
    sc = s[cut]
    c = np.clip((sc * sc + rho * rho - r * r) / (2 * sc * rho), -1.0, 1.0)
    half = 0.5 * betainc((N - 1) / 2.0, 0.5, 1.0 - c * c)
    out[cut] = np.where(c >= 0, half, 1.0 - half)
    return out


def concentration_diagnostic(v: Field, r: float):
    """``(max_y int_{B_r(y)} |v|^2, y)`` over a lattice of candidate centers.

    On the radial grid the centers lie on the first axis at spacing r/2 and
    the ball masses integrate the profile against the exact spherical-cap
    fraction of every shell; on the box all nodes are candidates.
    """
    grid = v.grid
    R = grid.radius if isinstance(grid, RadialGrid) else grid.side
    if not 0 < r < R / 2:
        raise DomainError("need 0 < r < R/2")
    if isinstance(grid, BoxGrid):
        _, masses = grid.ball_masses(v.values**2, r)
        k = int(np.argmax(masses))
        loc = grid.points().reshape(-1, 3)[k]
        return float(masses.flat[k]), tuple(float(x) for x in loc)
    dq = grid.interp(v.values) ** 2
    best, where = -1.0, 0.0
    for rho in np.arange(0.0, R - r + 1e-12, r / 2):
        frac = _cap_fraction(grid.dimension, grid.quad_r.ravel(), rho, r).reshape(dq.shape)
        m = grid.quad_integrate(dq * frac)
        if m > best:
            best, where = m, float(rho)
    return float(best), (where,) + (0.0,) * (grid.dimension - 1)


def back_transform(spec: TransformSpec, v: Field) -> Field:
    """``u = G^{-1}(v)`` at every node."""
    return v.with_values(spec.G_inverse(v.values))


def ps_norm_cap(N, level, margin=10.0):
    """A-priori bound for E-norms along Palais-Smale trajectories at level ``level``."""
    return math.sqrt(N * (max(level, 0.0) + 1.0)) * (1.0 + margin)


def check_ps_trajectory(N, norms, levels, margin=10.0):
    """Raise :class:`PSBoundViolation` at the first index whose norm exceeds the cap.

    The cap uses the best level seen up to that index.
    """
    best = math.inf
    worst = 0.0
    for k, (nv, c) in enumerate(zip(norms, levels)):
        best = min(best, c)
        cap = ps_norm_cap(N, best, margin)
        if not nv <= cap:
            raise PSBoundViolation(
                f"trajectory norm {nv:.6g} exceeds cap {cap:.6g} at iteration {k}", norm=nv, cap=cap, iteration=k
            )
        worst = max(worst, nv)
    return worst


def check_model_assumptions(model, samples=None):
    """Run the transform and growth suites. Hard failures raise; the divergence condition only warns."""
    s = np.logspace(-6, 6, 121) if samples is None else samples
    g_rep = check_g_assumptions(model.transform, s)
    if not g_rep.passed:
        raise AssumptionFailure("transform fails: " + ", ".join(e.name for e in g_rep.failures()), g_rep)
    gr_rep = check_growth_conditions(model)
    hard = [e for e in gr_rep.failures() if not e.name.startswith("divergence")]
    if hard:
        raise AssumptionFailure("growth conditions fail: " + ", ".join(e.name for e in hard), gr_rep)
    if not gr_rep.passed:
        warnings.warn("the superquadratic divergence condition fails; the level bound is not guaranteed", stacklevel=2)
    return {"g": g_rep, "growth": gr_rep}


# -- the descent -------------------------------------------------------------------


class _Problem:
    def __init__(self, model, grid):
        self.model, self.grid = model, grid
        self.Vx = potential_on(model, grid)

    def inner(self, a, b):
        return self.grid.e_inner(a, b, self.Vx)

    def normalize(self, w):
        nw = math.sqrt(self.inner(w, w))
        return w / nw

    def evaluate(self, w, t_guess=None):
        ray = Ray(self.model, self.grid, w, self.Vx)
        proj = ray.project(t_guess, verify=t_guess is None)
        t = proj.t_star
        rhs = energy_derivative(self.model, self.grid, t * w, self.Vx)
        G = self.grid.riesz_solve(rhs, self.Vx)
        gw = float(np.dot(rhs.ravel(), w.ravel())) / ray.norm2
        d = t * (G - gw * w)
        return {"w": w, "t": t, "psi": proj.value, "d": d, "dnorm": math.sqrt(max(self.inner(d, d), 0.0)), "proj": proj}


def _initial(config, grid, model):
    if config.init_file:
        from .config import load_field_csv

        vals = load_field_csv(config.init_file, grid)
        if isinstance(grid, RadialGrid):
            vals[-1] = 0.0
    else:
        width = config.init_width if config.init_width else config.domain_radius / 10
        center = config.init_center if isinstance(grid, RadialGrid) else config.box_side / 2
        vals = grid.gaussian(width, center)
    if config.clamp:
        vals = np.maximum(vals, 0.0)
    if not np.any(vals):
        raise ConfigError("initial guess vanishes")
    return vals


def _recenter(grid, w, loc):
    # shift by whole periods of the potential so that Psi is unchanged
    per = grid.m // grid.side
    shift = []
    for ax in range(3):
        target = grid.side / 2
        k = int(round((target - loc[ax]) / 1.0))
        shift.append(k * per)
    if any(shift):
        return np.roll(w, shift, axis=(0, 1, 2)), True
    return w, False


def minimize_ground_state(model, config: SolveConfig | None = None, *, assumption_checks=None) -> SolveReport:
    """Minimize Psi on the unit sphere and return the Nehari point with its diagnostics."""
    config = SolveConfig() if config is None else config
    if model.potential.v_min <= 0:
        raise AssumptionFailure("the potential must be bounded below by a positive constant")
    checks = {}
    if config.check_assumptions:
        checks = check_model_assumptions(model) if assumption_checks is None else assumption_checks
    grid = config.make_grid(model.dimension)
    prob = _Problem(model, grid)
    N = model.dimension
    rc = config.concentration_radius or config.domain_radius / 4

    w = prob.normalize(_initial(config, grid, model))
    st = prob.evaluate(w)
    if st["psi"] <= 0:
        raise AssumptionFailure("non-positive level at the initial guess")
    best_level = st["psi"]
    cap = ps_norm_cap(N, best_level, config.ps_margin)
    if st["t"] > cap:
        raise PSBoundViolation(f"initial norm {st['t']:.6g} exceeds cap {cap:.6g}", st["t"], cap, 0)
    ps_max = st["t"]
    alpha = config.fixed_step or 1.0 / st["t"] ** 2
    hist_psi, hist_grad, hist_mass = [st["psi"]], [st["dnorm"]], []
    converged, reason, it = False, "max_iter", 0
    prev = None
    for it in range(1, config.max_iter + 1):
        if st["dnorm"] <= config.tol:
            converged, reason, it = True, "tolerance", it - 1
            break
        if config.step_rule == "bb" and prev is not None:
            s = st["w"] - prev["w"]
            y = st["d"] - prev["d"]
            sy = prob.inner(s, y)
            if sy > 0:
                alpha = prob.inner(s, s) / sy
            else:
                alpha = min(alpha * 2, 1e3 / st["t"] ** 2)
            alpha = min(max(alpha, 1e-8 / st["t"] ** 2), 1e4 / st["t"] ** 2)
        elif config.step_rule == "armijo" and prev is not None:
            alpha = alpha * 2
        accepted = None
        for _ in range(60):
            cand = st["w"] - alpha * st["d"]
            if config.clamp:
                cand = np.maximum(cand, 0.0)
            if isinstance(grid, RadialGrid):
                cand[-1] = 0.0
            if np.any(cand):
                cand = prob.normalize(cand)
                new = prob.evaluate(cand, st["t"])
                if config.step_rule == "fixed":
                    accepted = new
                    break
                decrease = config.armijo_c * min(prob.inner(st["d"], cand - st["w"]), 0.0)
                if new["psi"] <= st["psi"] + decrease and new["psi"] <= st["psi"]:
                    accepted = new
                    break
            alpha *= 0.5
        if accepted is None:
            reason = "line search stalled"
            it -= 1
            break
        prev, st = st, accepted
        if st["psi"] < best_level:
            best_level = st["psi"]
        cap = ps_norm_cap(N, best_level, config.ps_margin)
        if st["t"] > cap:
            raise PSBoundViolation(
                f"trajectory norm {st['t']:.6g} exceeds cap {cap:.6g} at iteration {it}", st["t"], cap, it
            )
        ps_max = max(ps_max, st["t"])
        hist_psi.append(st["psi"])
        hist_grad.append(st["dnorm"])
        if it % config.monitor_every == 0:
            v = Field(grid, st["t"] * st["w"])
            mass, loc = concentration_diagnostic(v, rc)
            hist_mass.append(mass / max(grid.l2_inner(v.values, v.values), 1e-300))
            if isinstance(grid, BoxGrid) and config.recenter:
                w2, moved = _recenter(grid, st["w"], loc)
                if moved:
                    st = prob.evaluate(w2, st["t"])
                    prev = None
    else:
        converged = st["dnorm"] <= config.tol
        reason = "tolerance" if converged else "max_iter"
        it = config.max_iter

    v_star = Field(grid, st["t"] * st["w"])
    u_star = back_transform(model.transform, v_star)
    eb = energy_value(model, grid, v_star.values, prob.Vx)
    norm_sq = prob.inner(v_star.values, v_star.values)
    nres = Ray(model, grid, v_star.values, prob.Vx).derivative(1.0)
    l2 = grid.l2_inner(v_star.values, v_star.values)
    mass, loc = concentration_diagnostic(v_star, rc)
    frac = mass / l2
    hist_mass.append(frac)
    thr = level_threshold(N)
    return SolveReport(
        v_star=v_star,
        u_star=u_star,
        level=st["psi"],
        energy=eb.to_dict(),
        nehari_residual=nres,
        nehari_residual_relative=abs(nres) / norm_sq,
        norm_sq=norm_sq,
        weak_residual_modified=weak_residual_modified(model, v_star),
        weak_residual_original=weak_residual_original(model, u_star),
        grad_norm=st["dnorm"],
        concentration={"radius": rc, "mass": mass, "fraction": frac, "location": list(loc)},
        vanishing=bool(mass < 1e-6 * l2),
        ps_max_norm=ps_max,
        ps_cap=cap,
        iterations=it,
        converged=bool(converged),
        reason=reason,
        threshold=thr,
        below_threshold=bool(st["psi"] < thr),
        fibering=st["proj"].to_dict(),
        assumption_checks=checks,
        history={"psi": hist_psi, "grad_norm": hist_grad, "mass_fraction": hist_mass},
        config=config.to_dict(),
        model=model.to_dict(),
        grid=grid.fingerprint(),
    )


def level_certificate(report: SolveReport, model, tol: float = 1e-6, applicability: float = 1e-3) -> PropertyReport:
    """Check ``c > 0``, ``||v||^2 >= 2c``, ``c < S^{N/2}/N`` and the Nehari residual."""
    v = report.v_star
    grid = v.grid
    Vx = potential_on(model, grid)
    if not np.any(v.values):
        raise NotOnManifold("zero field")
    ray = Ray(model, grid, v.values, Vx)
    norm_sq = ray.norm2
    res = abs(ray.derivative(1.0))
    if res > applicability * norm_sq:
        raise NotOnManifold(f"relative Nehari residual {res / norm_sq:.3g} is too large for a certificate")
    c = report.level
    thr = level_threshold(model.dimension)
    rep = PropertyReport("level certificate")
    rep.add("c > 0", "level", max(-c, 0.0), c > 0)
    rep.add("||v||^2 >= 2c", "level", max(2 * c - norm_sq, 0.0), norm_sq >= 2 * c - tol * norm_sq)
    growth = check_growth_conditions(model)
    diverges = all(e.passed for e in growth.entries if e.name.startswith("divergence"))
    if diverges:
        rep.add("c < S^(N/2)/N", f"threshold={thr:.6g}", max(c - thr, 0.0), c < thr)
    else:
        # the bound is only guaranteed under the divergence condition
        rep.add("c < S^(N/2)/N", f"threshold={thr:.6g}", max(c - thr, 0.0), True, "not required: divergence condition fails")
    rep.add("Nehari residual", f"tol={tol:g}", res / norm_sq, res <= tol * norm_sq)
    return rep
