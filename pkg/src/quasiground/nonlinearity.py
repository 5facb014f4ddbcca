"""Potential, nonlinearity and the transformed pair (h, H).

With ``u = G^{-1}(s)`` the transformed nonlinearity is

    h(x, s) = V(x) s - V(x) u / g(u) + f(x, u) / g(u)
    H(x, s) = V(x) (s^2 - u^2) / 2 + F(x, u)

so that the energy reads ``I(v) = ||v||^2 / 2 - int H(x, v) - int |v|^{2*} / 2*``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .reports import PropertyReport
from .transform import TransformSpec

__all__ = [
    "ConstantPotential",
    "CosinePotential",
    "ZeroNonlinearity",
    "TransformedPower",
    "ModelSpec",
    "critical_exponent",
    "V_eval",
    "f_eval",
    "F_eval",
    "h_eval",
    "H_eval",
    "check_growth_conditions",
]


def critical_exponent(N: int) -> float:
    """Sobolev exponent ``2N / (N - 2)``."""
    if N < 3:
        raise DomainError("dimension must be at least 3")
    return 2.0 * N / (N - 2.0)


@dataclass(frozen=True)
class ConstantPotential:
    V0: float = 1.0
    kind = "constant"
    radial = True

    def __post_init__(self):
        if not (math.isfinite(self.V0) and self.V0 >= 0):
            raise DomainError("V0 must be finite and non-negative")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1] if x.ndim else (), float(self.V0))

    @property
    def v_min(self):
        return float(self.V0)

    @property
    def v_max(self):
        return float(self.V0)

    def to_dict(self):
        return {"kind": self.kind, "V0": self.V0}


@dataclass(frozen=True)
class CosinePotential:
    """``V0 + a * prod_i cos(2 pi x_i)``, 1-periodic in every coordinate."""

    V0: float = 1.0
    amplitude: float = 0.5
    kind = "cosine"
    radial = False

    def __post_init__(self):
        if not (0 <= self.amplitude < self.V0):
            raise DomainError("need 0 <= amplitude < V0 so that V stays positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        # reduce mod 1 first so that V(x + e_i) == V(x) bit for bit
        return self.V0 + self.amplitude * np.prod(np.cos(2.0 * np.pi * np.mod(x, 1.0)), axis=-1)

    @property
    def v_min(self):
        return float(self.V0 - self.amplitude)

    @property
    def v_max(self):
        return float(self.V0 + self.amplitude)

    def to_dict(self):
        return {"kind": self.kind, "V0": self.V0, "amplitude": self.amplitude}


@dataclass(frozen=True)
class ZeroNonlinearity:
    kind = "zero"

    def f(self, t, transform):
        return np.zeros_like(np.asarray(t, dtype=float))

    def F(self, t, transform):
        return np.zeros_like(np.asarray(t, dtype=float))

    # values at t = G^{-1}(s), expressed through s
    def f_over_g_at(self, s):
        return np.zeros_like(s)

    def F_at(self, s):
        return np.zeros_like(s)

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class TransformedPower:
    """``f(t) = mu g(t) |G(t)|^{q-2} G(t)`` for ``t > 0`` and zero otherwise.

    Under ``v = G(u)`` this becomes the plain power ``mu (v^+)^{q-1}``.
    """

    mu: float = 1.0
    q: float = 5.0
    kind = "transformed_power"

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError("mu must be positive")
        if not self.q > 2:
            raise DomainError("q must exceed 2")

    def f(self, t, transform: TransformSpec):
        t = np.asarray(t, dtype=float)
        tp = np.maximum(t, 0.0)
        Gt = transform.G(tp)
        return self.mu * transform.g(tp) * np.abs(Gt) ** (self.q - 2) * Gt

    def F(self, t, transform: TransformSpec):
        tp = np.maximum(np.asarray(t, dtype=float), 0.0)
        return self.mu * np.abs(transform.G(tp)) ** self.q / self.q

    def f_over_g_at(self, s):
        sp = np.maximum(s, 0.0)
        return self.mu * sp ** (self.q - 1)

    def F_at(self, s):
        sp = np.maximum(s, 0.0)
        return self.mu * sp**self.q / self.q

    def to_dict(self):
        return {"kind": self.kind, "mu": self.mu, "q": self.q}


@dataclass(frozen=True)
class ModelSpec:
    dimension: int = 3
    transform: TransformSpec = field(default_factory=TransformSpec)
    potential: ConstantPotential | CosinePotential = field(default_factory=ConstantPotential)
    nonlinearity: ZeroNonlinearity | TransformedPower = field(default_factory=ZeroNonlinearity)
    omega_radius: float = 1.0

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 3:
            raise DomainError("dimension must be an integer >= 3")
        if not self.omega_radius > 0:
            raise DomainError("omega_radius must be positive")
        nl = self.nonlinearity
        if isinstance(nl, TransformedPower) and not nl.q < self.critical_exponent:
            raise DomainError(f"q={nl.q} must lie below 2*={self.critical_exponent:g}")

    @property
    def critical_exponent(self) -> float:
        return critical_exponent(self.dimension)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "transform": self.transform.to_dict(),
            "potential": self.potential.to_dict(),
            "nonlinearity": self.nonlinearity.to_dict(),
            "omega_radius": self.omega_radius,
        }

    # -- nodal kernels on transformed values s = v(x) ---------------------------

    def nodal(self, s, Vx):
        """Return ``(u, g(u), V u/g(u) - f/g, H)`` for nodal values ``s``.

        The third entry is the lower-order part of the strong residual of
        the modified equation, ``V s - h(x, s)``.
        """
        s = np.asarray(s, dtype=float)
        u, gu = self.transform.inverse_with_g(s)
        nl = self.nonlinearity
        lower = Vx * u / gu - nl.f_over_g_at(s)
        H = 0.5 * Vx * (s * s - u * u) + nl.F_at(s)
        return u, gu, lower, H

    def lower(self, s, Vx):
        """``V s - h(x, s) = V u/g(u) - f(x, u)/g(u)``."""
        s = np.asarray(s, dtype=float)
        u, gu = self.transform.inverse_with_g(s)
        return Vx * u / gu - self.nonlinearity.f_over_g_at(s)

    def h(self, s, Vx):
        s = np.asarray(s, dtype=float)
        u, gu = self.transform.inverse_with_g(s)
        return Vx * (s - u / gu) + self.nonlinearity.f_over_g_at(s)

    def H(self, s, Vx):
        s = np.asarray(s, dtype=float)
        u = self.transform.G_inverse(s)
        return 0.5 * Vx * (s * s - u * u) + self.nonlinearity.F_at(s)


def _point(model, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = np.full(model.dimension, float(x))
    if x.shape[-1] != model.dimension:
        raise DomainError(f"points must have {model.dimension} coordinates")
    if not np.all(np.isfinite(x)):
        raise DomainError("x must be finite")
    return x


def _scalar(a):
    return float(a) if np.ndim(a) == 0 else a


def V_eval(model: ModelSpec, x):
    return _scalar(model.potential(_point(model, x)))


def f_eval(model: ModelSpec, x, t):
    _point(model, x)
    return _scalar(model.nonlinearity.f(t, model.transform))


def F_eval(model: ModelSpec, x, t):
    _point(model, x)
    return _scalar(model.nonlinearity.F(t, model.transform))


def h_eval(model: ModelSpec, x, s):
    """Direct formula: ``V s - V u/g(u) + f(x, u)/g(u)`` with ``u = G^{-1}(s)``."""
    Vx = model.potential(_point(model, x))
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise DomainError("s must be finite")
    tr = model.transform
    u = tr.G_inverse(s)
    gu = tr.g(u)
    return _scalar(Vx * s - Vx * u / gu + model.nonlinearity.f(u, tr) / gu)


def H_eval(model: ModelSpec, x, s):
    Vx = model.potential(_point(model, x))
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise DomainError("s must be finite")
    tr = model.transform
    u = tr.G_inverse(s)
    return _scalar(0.5 * Vx * (s * s - u * u) + model.nonlinearity.F(u, tr))


# --- sampled growth checks ---------------------------------------------------

_VANISH = 1e-3  # tail below this fraction of the head counts as -> 0
_BLOWUP = 1e3  # tail above this multiple of the head counts as -> infinity


def _tends_to_zero(vals):
    """``vals`` ordered from head to tail of the limit being tested."""
    head, tail = abs(vals[0]), abs(vals[-1])
    if tail <= 1e-300:
        return True, 0.0
    ratio = tail / head if head > 0 else math.inf
    return ratio < _VANISH, ratio


def _tends_to_infinity(vals):
    head, tail = vals[0], vals[-1]
    if not (head > 0 and tail > 0):
        return False, 0.0
    ratio = tail / head
    return ratio > _BLOWUP, ratio


def _divergence_ratio(model, s, H):
    N = model.dimension
    if N == 3:
        return H / s**4, "H/s^4"
    if N == 4:
        return H / (s * s * np.log(s)), "H/(s^2 ln s)"
    return H / (s * s), "H/s^2"


def check_growth_conditions(model: ModelSpec, s_samples=None, x_samples=None) -> PropertyReport:
    """Sampled verification of the properties of h and H.

    ``s_samples`` defaults to 241 log-spaced points on ``[1e-6, 1e6]``;
    ``x_samples`` defaults to the origin plus two points of the unit cell.
    """
    N = model.dimension
    p = model.critical_exponent
    s = np.sort(np.asarray(s_samples if s_samples is not None else np.logspace(-6, 6, 241), dtype=float))
    s = s[s > 0]
    if s.size < 4:
        raise DomainError("need at least 4 positive s samples")
    if x_samples is None:
        x_samples = [np.zeros(N), np.full(N, 0.25), np.full(N, 0.5)]
    xs = [_point(model, x) for x in x_samples]
    rep = PropertyReport(title=f"growth conditions [N={N}, {model.transform.kind.value}, {model.nonlinearity.kind}]")
    dom = f"s in [{s[0]:.0e}, {s[-1]:.0e}], {len(xs)} x-samples"

    worst = {k: 0.0 for k in ("1a", "1b", "2a", "2b", "3", "5")}
    ok = {k: True for k in worst}
    C = {1e-2: 0.0, 1e-1: 0.0}
    ok6 = True
    div_ok, div_ratio, div_label = True, math.inf, ""
    omega_hits = 0
    for x in xs:
        Vx = model.potential(x)
        h = model.h(s, Vx)
        H = model.H(s, Vx)
        # (1), (2): limits at 0+ (head = largest s) and at infinity (head = smallest s)
        for key, vals in (
            ("1a", (h / s)[::-1]),
            ("1b", h / s ** (p - 1)),
            ("2a", (H / s**2)[::-1]),
            ("2b", H / s**p),
        ):
            passed, ratio = _tends_to_zero(vals)
            ok[key] &= passed
            worst[key] = max(worst[key], ratio)
        # (3) h/s non-decreasing
        q = h / s
        drop = -np.diff(q) / np.maximum(1.0, np.abs(q[1:]))
        w3 = max(float(drop.max()), 0.0)
        worst["3"] = max(worst["3"], w3)
        ok["3"] &= w3 <= 1e-10
        # (5) h s / 2 >= H >= 0
        scale = np.maximum(1.0, np.maximum(np.abs(H), np.abs(0.5 * h * s)))
        w5 = max(float(np.max((H - 0.5 * h * s) / scale)), float(np.max(-H / scale)), 0.0)
        worst["5"] = max(worst["5"], w5)
        ok["5"] &= w5 <= 1e-10
        # (6) least C_delta with h <= delta s + C s^{2*-1} on the samples
        if np.any(h < -1e-10 * np.maximum(1.0, np.abs(h))):
            ok6 = False
        for d in C:
            Cd = float(np.max(np.maximum(h - d * s, 0.0) / s ** (p - 1)))
            C[d] = max(C[d], Cd)
            Hb = d / 2 * s**2 + Cd / p * s**p
            if np.any(H > Hb * (1 + 1e-10) + 1e-300):
                ok6 = False
        # (4) divergence, on Omega only (everywhere for N >= 5)
        if N >= 5 or np.linalg.norm(x) < model.omega_radius:
            omega_hits += 1
            s_lo = 10.0 if N == 4 else 1.0
            m = s >= s_lo
            r, div_label = _divergence_ratio(model, s[m], H[m])
            passed, ratio = _tends_to_infinity(r)
            div_ok &= passed
            div_ratio = min(div_ratio, ratio)

    rep.add("h/s -> 0 as s -> 0+", dom, worst["1a"], ok["1a"], "tail/head ratio")
    rep.add(f"h/s^(2*-1) -> 0 as s -> inf", dom, worst["1b"], ok["1b"], "tail/head ratio")
    rep.add("H/s^2 -> 0 as s -> 0+", dom, worst["2a"], ok["2a"], "tail/head ratio")
    rep.add("H/s^2* -> 0 as s -> inf", dom, worst["2b"], ok["2b"], "tail/head ratio")
    rep.add("h/s non-decreasing", dom, worst["3"], ok["3"])
    if omega_hits == 0:
        rep.add("divergence on Omega", "no x-sample in Omega", math.nan, False)
    else:
        rep.add(
            f"divergence: {div_label} -> inf",
            f"s >= {10 if N == 4 else 1}, x in Omega",
            div_ratio if math.isfinite(div_ratio) else 0.0,
            div_ok,
            "tail/head growth ratio (needs > 1e3)",
        )
    rep.add("h s/2 >= H >= 0", dom, worst["5"], ok["5"])
    rep.add(
        "h <= delta s + C_delta s^(2*-1)",
        dom,
        0.0,
        ok6 and all(math.isfinite(c) for c in C.values()),
        ", ".join(f"C({d:g})={c:.4g}" for d, c in C.items()),
    )
    return rep
