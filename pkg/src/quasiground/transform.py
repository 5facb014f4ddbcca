"""The dual change of variables v = G(u), G(t) = int_0^t g.

A :class:`TransformSpec` bundles the even coefficient function ``g`` with its
derivative, primitive and inverse primitive. Every method accepts scalars or
numpy arrays. Oddness of ``G`` and evenness of ``g`` are enforced by
construction: only the half line ``t >= 0`` is ever evaluated.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np
from scipy.special import ellipeinc, ellipkinc
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .exceptions import DomainError, InvariantViolation, QuadratureError
from .reports import PropertyReport

__all__ = [
    "TransformKind",
    "TransformSpec",
    "g_eval",
    "g_prime_eval",
    "G_eval",
    "G_inverse",
    "G_quadrature",
    "check_g_assumptions",
]

_SQRT2 = math.sqrt(2.0)
_G_INF_LASER = math.sqrt(1.5)



class TransformKind(str, Enum):
    IDENTITY = "identity"
    SUPERFLUID_FILM = "superfluid_film"
    LASER_CHANNELING = "laser_channeling"
    TABULATED = "tabulated"


def _laser_G(a):
    # with t = tan(theta): g^2 = 1 + sin^2(theta)/2, and integrating by parts
    # G(t) = t g(t) - (E(theta | -1/2) - F(theta | -1/2))
    theta = np.arctan(a)
    g = np.sqrt(1.0 + 0.5 * a * a / (1.0 + a * a))
    return a * g - (ellipeinc(theta, -0.5) - ellipkinc(theta, -0.5))


class TransformSpec:
    """Immutable description of ``g`` and the derived maps ``G``, ``G^{-1}``.

    Parameters
    ----------
    kind : TransformKind or str
    quadrature_tol : float
        Absolute tolerance for quadrature and for the inverse solve (the
        latter is relative once ``|s| > 1``).
    table_t, table_g : array_like, optional
        Samples of ``g`` on ``t >= 0`` for the tabulated kind. ``g`` is
        interpolated by a monotone cubic and held constant past the table.
    """

    def __init__(self, kind="identity", quadrature_tol=1e-12, table_t=None, table_g=None):
        self.kind = TransformKind(kind)
        if not quadrature_tol > 0:
            raise DomainError("quadrature_tol must be positive")
        self.quadrature_tol = float(quadrature_tol)
        self._pchip = None
        self._pchip_d = None
        self._pchip_int = None
        self.table_t = None
        self.table_g = None
        if self.kind is TransformKind.TABULATED:
            if table_t is None or table_g is None:
                raise DomainError("tabulated transform needs table_t and table_g")
            t = np.asarray(table_t, dtype=float)
            gv = np.asarray(table_g, dtype=float)
            if t.ndim != 1 or t.shape != gv.shape or t.size < 2:
                raise DomainError("table_t and table_g must be 1-d of equal length >= 2")
            if t[0] != 0.0 or np.any(np.diff(t) <= 0):
                raise DomainError("table_t must start at 0 and be strictly increasing")
            if np.any(gv <= 0) or not np.all(np.isfinite(gv)):
                raise DomainError("g must be positive and finite")
            self.table_t, self.table_g = t, gv
            self._pchip = PchipInterpolator(t, gv, extrapolate=False)
            self._pchip_d = self._pchip.derivative()
            self._pchip_int = self._pchip.antiderivative()
            self._t_max = float(t[-1])
            self._g_max = float(gv[-1])
            self._G_max = float(self._pchip_int(self._t_max))
        # Eager inverse table; avoids any lazily mutated state.
        self._table_t = np.concatenate([[0.0], np.logspace(-8, 8, 961)])
        self._table_s = self._G_half(self._table_t)
        if np.any(np.diff(self._table_s) <= 0):
            raise InvariantViolation("G is not strictly increasing on the inverse table")
        # (G^-1)' = 1/g, so a Hermite cubic gives a starting point close enough
        # for one or two Newton steps
        self._inverse_guess = CubicHermiteSpline(
            self._table_s, self._table_t, 1.0 / self._g_half(self._table_t), extrapolate=True
        )

    def __repr__(self):
        return f"TransformSpec(kind={self.kind.value!r})"

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind is TransformKind.TABULATED:
            d["t"] = self.table_t.tolist()
            d["g"] = self.table_g.tolist()
        return d

    @property
    def g_infinity(self) -> float:
        """Limit of g at infinity (``inf`` when g is unbounded)."""
        return {
            TransformKind.IDENTITY: 1.0,
            TransformKind.SUPERFLUID_FILM: math.inf,
            TransformKind.LASER_CHANNELING: _G_INF_LASER,
        }.get(self.kind, self._g_max if self._pchip is not None else math.inf)

    # -- half-line kernels (a >= 0) -------------------------------------------

    def _g_half(self, a):
        k = self.kind
        if k is TransformKind.IDENTITY:
            return np.ones_like(a)
        if k is TransformKind.SUPERFLUID_FILM:
            return np.sqrt(1.0 + 2.0 * a * a)
        if k is TransformKind.LASER_CHANNELING:
            a2 = a * a
            return np.sqrt(1.0 + 0.5 * a2 / (1.0 + a2))
        out = np.where(a <= self._t_max, self._pchip(np.minimum(a, self._t_max)), self._g_max)
        return np.asarray(out, dtype=float)

    def _g_prime_half(self, a):
        k = self.kind
        if k is TransformKind.IDENTITY:
            return np.zeros_like(a)
        if k is TransformKind.SUPERFLUID_FILM:
            return 2.0 * a / np.sqrt(1.0 + 2.0 * a * a)
        if k is TransformKind.LASER_CHANNELING:
            one = 1.0 + a * a
            return a / (2.0 * self._g_half(a) * one * one)
        out = np.where(a <= self._t_max, self._pchip_d(np.minimum(a, self._t_max)), 0.0)
        return np.asarray(out, dtype=float)

    def _G_half(self, a):
        k = self.kind
        if k is TransformKind.IDENTITY:
            return a.astype(float, copy=True)
        if k is TransformKind.SUPERFLUID_FILM:
            return 0.5 * a * np.sqrt(1.0 + 2.0 * a * a) + np.arcsinh(_SQRT2 * a) / (2.0 * _SQRT2)
        if k is TransformKind.LASER_CHANNELING:
            return _laser_G(a)
        inside = self._pchip_int(np.minimum(a, self._t_max))
        out = np.where(a <= self._t_max, inside, self._G_max + self._g_max * (a - self._t_max))
        return np.asarray(out, dtype=float)

    # -- public vectorized API ------------------------------------------------

    def g(self, t):
        t = np.asarray(t, dtype=float)
        return self._g_half(np.abs(t))

    def g_prime(self, t):
        t = np.asarray(t, dtype=float)
        return np.sign(t) * self._g_prime_half(np.abs(t))

    def G(self, t):
        t = np.asarray(t, dtype=float)
        return np.sign(t) * self._G_half(np.abs(t))

    def G_inverse(self, s, max_iter=200):
        """Solve ``G(t) = s`` nodewise by bracketed Newton iteration.

        ``[0, |s|]`` always brackets the root since ``G(t) >= t``. The
        starting point comes from the inverse table; the stopping test is
        relative to ``|s|``.
        """
        s = np.asarray(s, dtype=float)
        if self.kind is TransformKind.IDENTITY:
            return s.copy()
        shape = s.shape
        s = np.atleast_1d(s)
        a = np.abs(s)
        lo = np.zeros_like(a)
        hi = a.copy()
        t = np.clip(self._inverse_guess(a), lo, hi)
        tol = self.quadrature_tol * a
        tiny = 4 * np.finfo(float).eps
        for _ in range(max_iter):
            resid = self._G_half(t) - a
            done = np.abs(resid) <= tol
            pos = resid > 0
            hi = np.where(pos, np.minimum(hi, t), hi)
            lo = np.where(pos, lo, np.maximum(lo, t))
            # a collapsed bracket also counts as converged
            done |= (hi - lo) <= tiny * np.maximum(hi, 1e-300)
            if done.all():
                break
            with np.errstate(divide="ignore", invalid="ignore"):
                step = t - resid / self._g_half(t)
            bad = ~((step >= lo) & (step <= hi)) | ~np.isfinite(step)
            step = np.where(bad, 0.5 * (lo + hi), step)
            t = np.where(done, t, step)
        else:
            raise InvariantViolation("G_inverse failed to converge inside its bracket")
        return (np.sign(s) * t).reshape(shape)

    # convenience for nodal work: u, g(u) in one go
    def inverse_with_g(self, s):
        u = self.G_inverse(s)
        return u, self.g(u)


def _check_finite(x, what="t"):
    if not np.all(np.isfinite(np.asarray(x, dtype=float))):
        raise DomainError(f"{what} must be finite")


def g_eval(spec: TransformSpec, t):
    _check_finite(t)
    out = spec.g(t)
    return float(out) if np.ndim(out) == 0 else out


def g_prime_eval(spec: TransformSpec, t):
    _check_finite(t)
    out = spec.g_prime(t)
    return float(out) if np.ndim(out) == 0 else out


_LO_X, _LO_W = np.polynomial.legendre.leggauss(15)
_HI_X, _HI_W = np.polynomial.legendre.leggauss(31)


def _adaptive_gauss(f, a, b, tol, depth=0, max_depth=40):
    """Nested-order Gauss-Legendre with bisection; returns (value, error)."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    lo = half * np.dot(_LO_W, f(mid + half * _LO_X))
    hi = half * np.dot(_HI_W, f(mid + half * _HI_X))
    err = abs(hi - lo)
    floor = 64 * np.finfo(float).eps * abs(hi)
    if err <= max(tol, floor):
        return hi, min(err, max(tol, floor))
    if depth >= max_depth:
        raise QuadratureError(f"G quadrature stalled at {err:.2e}", achieved=err)
    left = _adaptive_gauss(f, a, mid, tol / 2, depth + 1, max_depth)
    right = _adaptive_gauss(f, mid, b, tol / 2, depth + 1, max_depth)
    return left[0] + right[0], left[1] + right[1]


def G_quadrature(spec: TransformSpec, t: float, tol: float | None = None) -> float:
    """Adaptive quadrature of ``int_0^t g``, independent of the closed forms.

    Panels ``[0, 1]`` then doubling in length (split further at table knots
    for the tabulated kind), each refined adaptively, summed with compensated
    summation. Raises
    :class:`QuadratureError` when the accumulated error estimate exceeds
    ``tol`` beyond the roundoff floor.
    """
    _check_finite(t)
    tol = spec.quadrature_tol if tol is None else tol
    a = abs(float(t))
    if a == 0.0:
        return 0.0
    if a <= 1.0:
        edges = np.array([0.0, a])
    else:
        edges = np.concatenate([[0.0], np.geomspace(1.0, a, int(math.ceil(math.log2(a))) + 1)])
    if spec.kind is TransformKind.TABULATED:
        edges = np.union1d(edges, spec.table_t[spec.table_t < a])
    f = spec._g_half
    parts, errs = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = _adaptive_gauss(f, lo, hi, tol / (len(edges) - 1))
        parts.append(val)
        errs.append(e)
    total = math.fsum(parts)
    err = math.fsum(errs)
    if err > max(tol, 64 * np.finfo(float).eps * total):
        raise QuadratureError(f"G quadrature reached only {err:.2e}", achieved=err)
    return math.copysign(total, t)


def G_eval(spec: TransformSpec, t):
    """``G(t)`` in closed form (elliptic integrals for the laser kind)."""
    _check_finite(t)
    out = spec.G(t)
    return float(out) if np.ndim(out) == 0 else out


def G_inverse(spec: TransformSpec, s):
    _check_finite(s, "s")
    out = spec.G_inverse(s)
    return float(out) if np.ndim(out) == 0 else out


def _worst_increase(y, scale):
    # largest positive jump of a sequence that should be non-increasing
    d = np.diff(y) / scale
    return float(max(d.max(initial=0.0), 0.0))


def check_g_assumptions(spec: TransformSpec, samples) -> PropertyReport:
    """Sampled checks of the assumptions on g and of the basic properties of G and G^{-1}."""
    x = np.unique(np.abs(np.asarray(samples, dtype=float)))
    _check_finite(x, "samples")
    if x.size == 0:
        raise DomainError("samples must be nonempty")
    pos = x[x > 0]
    rep = PropertyReport(title=f"g assumptions [{spec.kind.value}]")
    dom = f"|t| in [{pos.min():.1e}, {pos.max():.1e}]" if pos.size else "t=0"

    g0 = float(spec.g(0.0))
    rep.add("g(0)=1", "t=0", abs(g0 - 1.0), abs(g0 - 1.0) <= 1e-12)
    gp, gm = spec.g(x), spec.g(-x)
    rep.add("g even", dom, np.max(np.abs(gp - gm)), np.all(gp == gm))
    rep.add("g positive", dom, max(-gp.min(), 0.0), gp.min() > 0)
    dg = spec.g_prime(x)
    rep.add("g' >= 0 on t >= 0", dom, max(-float(dg.min()), 0.0) + 0.0, dg.min() >= -1e-14)

    Gx = spec.G(x)
    odd = np.max(np.abs(spec.G(-x) + Gx))
    inc = np.all(np.diff(Gx) > 0)
    rep.add("G strictly increasing and odd", dom, odd, inc and odd == 0.0)
    s = x
    inv = spec.G_inverse(s)
    inv_odd = np.max(np.abs(spec.G_inverse(-s) + inv))
    rep.add(
        "G^-1 strictly increasing and odd",
        dom.replace("t", "s"),
        inv_odd,
        bool(np.all(np.diff(inv) > 0)) and inv_odd == 0.0,
    )

    slack2 = (Gx - gp * x) / np.maximum(1.0, gp * x)
    rep.add("G(t) <= g(t) t", dom, max(slack2.max(), 0.0), slack2.max() <= 1e-12)

    slack3 = (np.abs(inv) - np.abs(s)) / np.maximum(1.0, np.abs(s))
    rep.add("|G^-1(s)| <= |s|", dom.replace("t", "s"), max(slack3.max(), 0.0), slack3.max() <= 1e-12)

    if pos.size >= 2:
        sp = pos
        u = spec.G_inverse(sp)
        q4 = u / (sp * spec.g(u))
        w4 = _worst_increase(q4, np.maximum(q4[1:], 1e-300))
        rep.add("G^-1(s)/(s g(G^-1(s))) non-increasing", f"s in [{sp[0]:.1e}, {sp[-1]:.1e}]", w4, w4 <= 1e-12)
        q5 = u / sp
        w5 = _worst_increase(q5, np.maximum(q5[1:], 1e-300))
        lim0 = abs(q5[0] - 1.0 / g0)
        rep.add("G^-1(s)/s non-increasing", f"s in [{sp[0]:.1e}, {sp[-1]:.1e}]", w5, w5 <= 1e-12)
        ok0 = lim0 <= max(1e-6, 10 * sp[0])
        rep.add("G^-1(s)/s -> 1/g(0) at 0+", f"s={sp[0]:.1e}", lim0, ok0)
        ginf = spec.g_infinity
        detail = f"ratio at s={sp[-1]:.1e}: {q5[-1]:.6g}, 1/g(inf)={0.0 if math.isinf(ginf) else 1.0 / ginf:.6g}"
        rep.add("limit at infinity (reported)", f"s={sp[-1]:.1e}", 0.0, True, detail)

    rt = np.abs(spec.G(inv) - s) / np.maximum(1.0, np.abs(s))
    rep.add("round trip G(G^-1(s)) = s", dom.replace("t", "s"), rt.max(), rt.max() <= 2 * spec.quadrature_tol)
    return rep
