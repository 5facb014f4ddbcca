"""Fibering maps, projection onto the Nehari manifold, and the sphere reduction.

For ``v != 0`` the ray map ``M(t) = I(t v)`` has exactly one critical point
``t_v > 0`` and it is a maximum; ``m(w) = t_w w`` maps the unit sphere of E
onto the Nehari manifold and ``Psi = I o m`` is the reduced functional.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from .exceptions import BracketNotFound, DomainError
from .functional import energy_derivative, energy_value
from .grid import Field, potential_on

__all__ = [
    "FiberingResult",
    "Ray",
    "fibering_map",
    "fibering_derivative",
    "project_nehari",
    "m_map",
    "m_inverse",
    "psi",
    "psi_gradient_tangential",
    "nehari_residual",
    "e_norm",
]

T_MIN, T_MAX = 1e-6, 1e12


@dataclass(frozen=True)
class FiberingResult:
    t_star: float
    value: float
    derivative_residual: float
    bracket: tuple
    iterations: int
    scan_signs: tuple = ()

    def to_dict(self):
        d = asdict(self)
        d["bracket"] = list(self.bracket)
        d["scan_signs"] = list(self.scan_signs)
        return d


def e_norm(model, v: Field) -> float:
    return math.sqrt(v.grid.e_inner(v.values, v.values, potential_on(model, v.grid)))


class Ray:
    """Precomputed pieces of ``t -> I(t v)`` for one direction ``v``."""

    def __init__(self, model, grid, v, Vx=None):
        self.model, self.grid = model, grid
        self.v = np.asarray(v, dtype=float)
        if not np.any(self.v):
            raise DomainError("the fibering map needs v != 0")
        self.Vx = potential_on(model, grid) if Vx is None else Vx
        self.p = model.critical_exponent
        self.D = grid.grad_sq(self.v)
        self.norm2 = grid.e_inner(self.v, self.v, self.Vx)
        self._vq = grid.interp(self.v)
        self._Vq = grid.quad_potential(self.Vx)
        self.C = grid.quad_integrate(np.abs(self._vq) ** self.p)
        self._wv = grid.quad_weights * self._vq
        self.evaluations = 0

    def derivative(self, t: float) -> float:
        """``M'(t) = t ||grad v||^2 + int (V u/g - f/g)(t v) v - t^{2*-1} int |v|^{2*}``."""
        self.evaluations += 1
        low = self.model.lower(t * self._vq, self._Vq)
        return t * self.D + float(np.dot(self._wv.ravel(), low.ravel())) - t ** (self.p - 1) * self.C

    def value(self, t: float) -> float:
        return energy_value(self.model, self.grid, t * self.v, self.Vx).total

    def project(self, t_guess=None, verify=True) -> FiberingResult:
        d = self.derivative
        signs = []
        if t_guess is not None and t_guess > 0:
            lo, hi = t_guess / 1.25, t_guess * 1.25
            while d(lo) <= 0:
                hi, lo = lo, lo / 2
                if lo < 1e-300:
                    raise BracketNotFound("M' non-positive down to t ~ 0")
            while d(hi) >= 0:
                lo, hi = hi, hi * 2
                if hi > T_MAX:
                    raise BracketNotFound(f"M' > 0 up to t = {T_MAX:g}")
        else:
            t = T_MIN
            while d(t) <= 0:
                t /= 2
                if t < 1e-300:
                    raise BracketNotFound("M' non-positive down to t ~ 0")
            signs.append(1)
            while True:
                t2 = 2 * t
                if t2 > T_MAX:
                    raise BracketNotFound(f"M' > 0 up to t = {T_MAX:g}; degenerate discrete field")
                if d(t2) < 0:
                    signs.append(-1)
                    lo, hi = t, t2
                    break
                signs.append(1)
                t = t2
            if verify:
                # the sign must stay negative past the crossing
                for k in (2, 4, 8):
                    signs.append(1 if d(hi * k) >= 0 else -1)
        root, info = brentq(d, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=200, full_output=True)
        res = abs(d(root))
        return FiberingResult(
            t_star=float(root),
            value=self.value(root),
            derivative_residual=float(res),
            bracket=(float(lo), float(hi)),
            iterations=int(info.iterations),
            scan_signs=tuple(signs),
        )


def fibering_map(model, v: Field, t: float) -> float:
    """``M(t) = I(t v)``."""
    if not t > 0:
        raise DomainError("t must be positive")
    return Ray(model, v.grid, v.values).value(t)


def fibering_derivative(model, v: Field, t: float) -> float:
    if not t > 0:
        raise DomainError("t must be positive")
    return Ray(model, v.grid, v.values).derivative(t)


def project_nehari(model, v: Field, t_guess=None) -> FiberingResult:
    """Unique maximizer ``t_v`` of the fibering map, so that ``t_v v`` is a Nehari point."""
    return Ray(model, v.grid, v.values).project(t_guess)


def m_map(model, w: Field, t_guess=None) -> Field:
    nw = e_norm(model, w)
    if abs(nw - 1.0) > 1e-8:
        raise DomainError(f"m is defined on the unit sphere; got ||w|| = {nw:.12g}")
    res = project_nehari(model, w, t_guess)
    return w * res.t_star


def m_inverse(model, v: Field) -> Field:
    return v * (1.0 / e_norm(model, v))


def psi(model, w: Field) -> float:
    return fibering_map(model, w, project_nehari(model, w).t_star)


def psi_gradient_tangential(model, w: Field) -> Field:
    """``||m(w)||`` times the E-gradient of I at ``m(w)``, projected onto ``T_w S``."""
    grid = w.grid
    Vx = potential_on(model, grid)
    ray = Ray(model, grid, w.values, Vx)
    t = ray.project().t_star
    rhs = energy_derivative(model, grid, t * w.values, Vx)
    G = grid.riesz_solve(rhs, Vx)
    # <G, w>_E = rhs . w since (K + wV) G = rhs
    gw = float(np.dot(rhs.ravel(), w.values.ravel())) / ray.norm2
    return w.with_values(t * (G - gw * w.values))


def nehari_residual(model, v: Field) -> float:
    """``<I'(v), v> = ||v||^2 - int h(x, v) v - int |v|^{2*}``."""
    ray = Ray(model, v.grid, v.values)
    return ray.derivative(1.0)
