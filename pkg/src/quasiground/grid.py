"""Discretizations of the ambient space.

``RadialGrid`` (the main backend) samples radial functions at ``r_j = j dr``,
``j = 0..n``, on the ball ``B_R`` with a homogeneous Dirichlet condition at
``r = R``. Energies read a field as the C^2 cubic spline through its nodal
values, so every discrete field is an element of H^1_0(B_R) and the discrete
Sobolev quotient cannot drop below the continuum constant. All integrals
(gradient and zeroth-order terms alike) use 5-point Gauss-Legendre
quadrature in every cell, and the energy inner product is assembled from
the same quadrature.

Nodal weights ``w_j`` (lumped, positive, summing to ``|B_R|`` up to O(dr^2))
are chosen so that the Laplacian ``-K v / w`` is exact on ``r^2``; this gives
the origin closure ``2N (v_1 - v_0) / dr^2`` and exact summation by parts.

``BoxGrid`` is a small periodic cube for periodic potentials (N = 3) and
uses plain nodal quadrature.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import solve_banded, solveh_banded
from scipy.sparse.linalg import LinearOperator, cg
from scipy.special import gamma

from .exceptions import DomainError

__all__ = [
    "RadialGrid",
    "BoxGrid",
    "Field",
    "sphere_area",
    "laplacian_apply",
    "integrate",
    "norm_L2",
    "norm_Lcrit",
    "norm_H1",
    "norm_E",
    "refine",
    "interpolate",
    "field_to_csv",
    "field_to_json",
]


def _tri_matvec(ab, x):
    """Product with a tridiagonal matrix stored in ``solve_banded`` (1, 1) layout."""
    y = ab[1] * x
    y[:-1] += ab[0, 1:] * x[1:]
    y[1:] += ab[2, :-1] * x[:-1]
    return y


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in R^N."""
    return 2.0 * math.pi ** (N / 2.0) / gamma(N / 2.0)


class RadialGrid:
    backend = "radial"

    def __init__(self, dimension: int = 3, radius: float = 40.0, n: int = 4096):
        if int(dimension) != dimension or dimension < 3:
            raise DomainError("dimension must be an integer >= 3")
        if not radius > 0:
            raise DomainError("radius must be positive")
        if int(n) != n or n < 16:
            raise DomainError("need at least 16 cells")
        self.dimension = N = int(dimension)
        self.radius = float(radius)
        self.n = int(n)
        self.dr = self.radius / self.n
        self.sigma = sphere_area(N)
        self.r = np.arange(self.n + 1) * self.dr
        # int over cell of |grad v|^2 = cell_measure * slope^2 for linear v
        self.cell_measure = self.sigma / N * np.diff(self.r**N)
        sl = np.diff(self.r**2) / self.dr
        flux = self.cell_measure * sl / self.dr
        w = np.empty(self.n + 1)
        w[0] = flux[0]
        w[1:-1] = flux[1:] - flux[:-1]
        w /= 2 * N
        w[-1] = self.sigma / N * (self.radius**N - (self.radius - 0.5 * self.dr) ** N)
        self.weights = w
        self.shape = (self.n + 1,)
        self.free = np.ones(self.shape, dtype=bool)
        self.free[-1] = False
        xi, gw = np.polynomial.legendre.leggauss(5)
        xi = 0.5 * (xi + 1.0)
        self.quad_r = self.r[:-1, None] + xi[None, :] * self.dr
        self.quad_weights = self.sigma * self.quad_r ** (N - 1) * (0.5 * gw * self.dr)[None, :]
        # uniform cubic B-spline pieces on one cell, rows = Gauss points
        x = xi[:, None]
        self._Bv = np.hstack([(1 - x) ** 3, 3 * x**3 - 6 * x**2 + 4, -3 * x**3 + 3 * x**2 + 3 * x + 1, x**3]) / 6.0
        self._Bd = np.hstack([-3 * (1 - x) ** 2, 9 * x**2 - 12 * x, -9 * x**2 + 6 * x + 3, 3 * x**2]) / (6.0 * self.dr)
        self._setup_spline()

    def _setup_spline(self):
        n = self.n
        # collocation v_j = (c_{j-1} + 4 c_j + c_{j+1}) / 6 on the free nodes,
        # with c_{-1} = c_1 (v'(0) = 0) and c_n = 0, c_{n+1} = -c_{n-1} (v(R) = v''(R) = 0)
        col = np.zeros((3, n))
        col[1] = 4.0 / 6
        col[0, 1:] = 1.0 / 6
        col[2, :-1] = 1.0 / 6
        col[0, 1] = 2.0 / 6
        self._col = col
        colT = np.zeros((3, n))
        colT[1] = 4.0 / 6
        colT[0, 1:] = col[2, :-1]
        colT[2, :-1] = col[0, 1:]
        self._colT = colT
        # extension E: free coefficients (n) -> padded coefficients c_{-1..n+1} (n+3)
        rows = np.concatenate([[0], np.arange(1, n + 1), [n + 2]])
        cols = np.concatenate([[1], np.arange(n), [n - 1]])
        vals = np.concatenate([[1.0], np.ones(n), [-1.0]])
        E = sparse.csr_matrix((vals, (rows, cols)), shape=(n + 3, n))
        self._E = E
        Kl = np.einsum("cq,qa,qb->cab", self.quad_weights, self._Bd, self._Bd)
        Ml = np.einsum("cq,qa,qb->cab", self.quad_weights, self._Bv, self._Bv)
        idx = np.arange(n)[:, None] + np.arange(4)[None, :]
        I = np.broadcast_to(idx[:, :, None], (n, 4, 4)).ravel()
        J = np.broadcast_to(idx[:, None, :], (n, 4, 4)).ravel()
        Ke = sparse.csr_matrix((Kl.ravel(), (I, J)), shape=(n + 3, n + 3))
        Me = sparse.csr_matrix((Ml.ravel(), (I, J)), shape=(n + 3, n + 3))
        self._Kc = (E.T @ Ke @ E).tocsr()
        self._Mc = (E.T @ Me @ E).tocsr()

    def _coef(self, v):
        c = solve_banded((1, 1), self._col, np.asarray(v, dtype=float)[:-1], check_finite=False)
        ce = np.empty(self.n + 3)
        ce[0] = c[1]
        ce[1:-2] = c
        ce[-2] = 0.0
        ce[-1] = -c[-1]
        return ce

    def _coef_adjoint(self, ge):
        gc = ge[1:-2].copy()
        gc[1] += ge[0]
        gc[-1] -= ge[-1]
        out = np.zeros(self.n + 1)
        out[:-1] = solve_banded((1, 1), self._colT, gc, check_finite=False)
        return out

    @staticmethod
    def _windows(ce):
        return np.lib.stride_tricks.sliding_window_view(ce, 4)

    def _scatter(self, cellvals):
        ge = np.zeros(self.n + 3)
        for k in range(4):
            ge[k : k + self.n] += cellvals[:, k]
        return ge

    def __repr__(self):
        return f"RadialGrid(dimension={self.dimension}, radius={self.radius}, n={self.n})"

    def __eq__(self, other):
        return isinstance(other, RadialGrid) and self.fingerprint() == other.fingerprint()

    def __hash__(self):
        return hash(self.fingerprint())

    def fingerprint(self) -> str:
        return f"radial:N={self.dimension}:R={self.radius!r}:n={self.n}"

    def to_dict(self) -> dict:
        return {"backend": self.backend, "dimension": self.dimension, "R": self.radius, "n": self.n}

    @property
    def volume(self) -> float:
        return self.sigma / self.dimension * self.radius**self.dimension

    def points(self) -> np.ndarray:
        """Node positions embedded along the first axis, shape (n+1, N)."""
        x = np.zeros((self.n + 1, self.dimension))
        x[:, 0] = self.r
        return x

    def radii(self, center=None) -> np.ndarray:
        return self.r

    # -- finite-difference operators -------------------------------------------

    def slopes(self, v):
        return np.diff(v) / self.dr

    def edges(self, v):
        """``(measure, left, right, spacing)`` per edge family, for midpoint rules."""
        return [(self.cell_measure, v[:-1], v[1:], self.dr)]

    def fd_stiffness(self, v):
        flux = self.cell_measure * self.slopes(v) / self.dr
        out = np.zeros_like(v, dtype=float)
        out[:-1] -= flux
        out[1:] += flux
        return out

    def laplacian(self, v):
        """Second-order Laplacian; ``2N (v_1 - v_0)/dr^2`` at the origin, 0 at R."""
        out = -self.fd_stiffness(v) / self.weights
        out[-1] = 0.0
        return out

    def integrate(self, values) -> float:
        """Nodal (lumped) quadrature."""
        return float(np.dot(self.weights, values))

    # -- the interpolating cubic spline profile -------------------------------
    #
    # Energies see the C^2 cubic spline through the nodal values with
    # v'(0) = 0 and v(R) = v''(R) = 0. It lies in H^1_0(B_R), so discrete
    # Sobolev quotients never drop below the continuum constant.

    def interp(self, v):
        """Profile values at the Gauss points, shape (n, 5)."""
        return self._windows(self._coef(v)) @ self._Bv.T

    def interp_grad(self, v):
        return self._windows(self._coef(v)) @ self._Bd.T

    def interp_adjoint(self, q):
        """Transpose of :meth:`interp` (nodal vector, 0 at R)."""
        return self._coef_adjoint(self._scatter(q @ self._Bv))

    def interp_grad_adjoint(self, q):
        return self._coef_adjoint(self._scatter(q @ self._Bd))

    def profile(self, v, r):
        """Evaluate the spline profile of ``v`` at radii ``r`` (0 beyond R)."""
        r = np.asarray(r, dtype=float)
        ce = self._coef(v)
        t = np.clip(r / self.dr, 0.0, self.n)
        j = np.minimum(t.astype(int), self.n - 1)
        x = t - j
        B = np.stack([(1 - x) ** 3, 3 * x**3 - 6 * x**2 + 4, -3 * x**3 + 3 * x**2 + 3 * x + 1, x**3], -1) / 6.0
        out = np.sum(B * ce[j[..., None] + np.arange(4)], axis=-1)
        return np.where(r <= self.radius, out, 0.0)

    def grad_sq(self, v) -> float:
        """``int |grad v|^2`` of the spline profile."""
        d = self.interp_grad(v)
        return float(np.sum(self.quad_weights * d * d))

    def dirichlet(self, v, phi) -> float:
        return float(np.sum(self.quad_weights * self.interp_grad(v) * self.interp_grad(phi)))

    def stiffness(self, v):
        """Gradient of ``grad_sq(v) / 2`` w.r.t. the nodal values."""
        return self.interp_grad_adjoint(self.quad_weights * self.interp_grad(v))

    def quad_potential(self, Vx):
        if np.ndim(Vx) != 0:
            raise DomainError("the radial backend takes a constant potential")
        return float(Vx)

    def quad_integrate(self, q) -> float:
        return float(np.sum(self.quad_weights * q))

    def l2_inner(self, a, b) -> float:
        return float(np.sum(self.quad_weights * self.interp(a) * self.interp(b)))

    def e_inner(self, a, b, Vx) -> float:
        """``int grad a . grad b + V a b`` for the spline profiles."""
        return self.dirichlet(a, b) + float(Vx) * self.l2_inner(a, b)

    def riesz_solve(self, rhs, Vx):
        """Nodal z with ``e_inner(z, phi) = rhs . phi`` for every phi vanishing at R."""
        A = (self._Kc + float(Vx) * self._Mc).todia()
        ab = np.zeros((4, self.n))
        for off, row in zip(A.offsets, A.data):
            if 0 <= off <= 3:
                ab[3 - off, off:] = row[off:]
        # z = C A^{-1} C^T rhs, C the collocation matrix
        y = _tri_matvec(self._colT, rhs[:-1])
        c = solveh_banded(ab, y, check_finite=False)
        z = np.zeros(self.n + 1)
        z[:-1] = _tri_matvec(self._col, c)
        return z

    def test_bank(self):
        """Localized Gaussian shells used to probe weak residuals."""
        R = self.radius
        bank = []
        for width in (R / 64, R / 16):
            for c in (0.0, R / 8, R / 4, 3 * R / 8, R / 2):
                phi = np.exp(-(((self.r - c) / width) ** 2))
                phi[-1] = 0.0
                bank.append(phi)
        return bank

    def gaussian(self, width, center=0.0):
        v = np.exp(-(((self.r - center) / width) ** 2))
        v[-1] = 0.0
        return v

    def ball_masses(self, values, radius):
        """Mass of ``values`` on B_radius(0) and on every annulus of width 2*radius."""
        cum = np.concatenate([[0.0], np.cumsum(self.weights * values)])
        j = np.searchsorted(self.r, np.arange(self.n + 1) * self.dr + 2 * radius, side="right")
        annuli = cum[np.minimum(j, self.n + 1)] - cum[: self.n + 1]
        k = np.searchsorted(self.r, radius, side="right")
        return float(cum[k]), annuli


class BoxGrid:
    """Periodic cube ``[0, L)^3`` with ``m`` cells per side (L integer)."""

    backend = "box"

    def __init__(self, m: int = 16, side: int = 4, dimension: int = 3):
        if dimension != 3:
            raise DomainError("the box backend supports N = 3 only")
        if int(m) != m or not 8 <= m <= 64:
            raise DomainError("need 8 <= m <= 64 cells per side")
        if int(side) != side or side < 1:
            raise DomainError("side length must be a positive integer")
        self.dimension = 3
        self.m = int(m)
        self.side = int(side)
        self.h = self.side / self.m
        self.shape = (self.m,) * 3
        self.weights = np.full(self.shape, self.h**3)
        self.free = np.ones(self.shape, dtype=bool)
        k = 2 * np.pi * np.fft.fftfreq(self.m, d=self.h)
        sym = (2 - 2 * np.cos(k * self.h)) / self.h**2
        self._symbol = sym[:, None, None] + sym[None, :, None] + sym[None, None, :]

    def __repr__(self):
        return f"BoxGrid(m={self.m}, side={self.side})"

    def fingerprint(self) -> str:
        return f"box:N=3:L={self.side}:m={self.m}"

    def to_dict(self) -> dict:
        return {"backend": self.backend, "dimension": 3, "L": self.side, "m": self.m}

    @property
    def volume(self) -> float:
        return float(self.side**3)

    def points(self) -> np.ndarray:
        x = np.arange(self.m) * self.h
        X = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
        return X

    def radii(self, center=None):
        c = np.zeros(3) if center is None else np.asarray(center, dtype=float)
        d = self.points() - c
        d -= self.side * np.round(d / self.side)
        return np.linalg.norm(d, axis=-1)

    def grad_sq(self, v) -> float:
        tot = 0.0
        for ax in range(3):
            tot += np.sum(((np.roll(v, -1, ax) - v) / self.h) ** 2)
        return float(tot * self.h**3)

    def dirichlet(self, v, phi) -> float:
        tot = 0.0
        for ax in range(3):
            tot += np.sum((np.roll(v, -1, ax) - v) * (np.roll(phi, -1, ax) - phi))
        return float(tot * self.h)

    def edges(self, v):
        w = self.h**3
        return [(w, v, np.roll(v, -1, ax), self.h) for ax in range(3)]

    def stiffness(self, v):
        out = np.zeros_like(v, dtype=float)
        for ax in range(3):
            out += 2 * v - np.roll(v, 1, ax) - np.roll(v, -1, ax)
        return out * self.h

    def laplacian(self, v):
        return -self.stiffness(v) / self.h**3

    def integrate(self, values) -> float:
        return float(np.sum(values) * self.h**3)

    # nodal quadrature: the Gauss points are the nodes themselves
    def interp(self, v):
        return np.asarray(v, dtype=float)

    def interp_adjoint(self, q):
        return np.asarray(q, dtype=float)

    @property
    def quad_weights(self):
        return self.weights

    def quad_potential(self, Vx):
        return Vx

    def quad_integrate(self, q) -> float:
        return float(np.sum(q) * self.h**3)

    def l2_inner(self, a, b) -> float:
        return float(np.sum(a * b) * self.h**3)

    def e_inner(self, a, b, Vx) -> float:
        return self.dirichlet(a, b) + float(np.sum(Vx * a * b)) * self.h**3

    def riesz_solve(self, rhs, Vx, tol=1e-12):
        Vx = np.broadcast_to(Vx, self.shape)
        w = self.h**3
        vbar = float(np.mean(Vx))
        size = self.m**3

        def mat(z):
            z = z.reshape(self.shape)
            return (self.stiffness(z) + w * Vx * z).ravel()

        def prec(r):
            r = r.reshape(self.shape)
            return np.real(np.fft.ifftn(np.fft.fftn(r) / (w * (self._symbol + vbar)))).ravel()

        if np.all(Vx == vbar):
            return prec(rhs.ravel()).reshape(self.shape)
        A = LinearOperator((size, size), matvec=mat, dtype=float)
        M = LinearOperator((size, size), matvec=prec, dtype=float)
        z, info = cg(A, rhs.ravel(), M=M, rtol=tol, atol=0.0, maxiter=500)
        return z.reshape(self.shape)

    def test_bank(self):
        L = self.side
        bank = []
        for width in (L / 16, L / 4):
            for c in (0.0, L / 8, L / 4, 3 * L / 8, L / 2):
                bank.append(np.exp(-((self.radii(np.full(3, c)) / width) ** 2)))
        return bank

    def gaussian(self, width, center=0.0):
        c = np.full(3, float(center)) if np.ndim(center) == 0 else np.asarray(center, dtype=float)
        return np.exp(-((self.radii(c) / width) ** 2))

    def ball_masses(self, values, radius):
        """Mass of ``values`` in B_radius(y) for every node y (periodic convolution)."""
        ball = (self.radii() < radius).astype(float)
        conv = np.real(np.fft.ifftn(np.fft.fftn(values) * np.conj(np.fft.fftn(ball))))
        # conv[y] = sum_x values[x + y] ball[x]
        masses = conv * self.h**3
        return float(masses.flat[0]), masses


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal samples of a function on a grid.

    ``bc="dirichlet"`` requires a vanishing value at ``r = R`` on radial grids.
    """

    grid: RadialGrid | BoxGrid
    values: np.ndarray
    bc: str = "dirichlet"

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise DomainError(f"field shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("field values must be finite")
        if self.bc not in ("dirichlet", "none"):
            raise DomainError(f"unknown boundary tag {self.bc!r}")
        if self.bc == "dirichlet" and isinstance(self.grid, RadialGrid) and vals[-1] != 0.0:
            raise DomainError("Dirichlet field must vanish at r = R")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values, bc=None):
        return Field(self.grid, values, self.bc if bc is None else bc)

    def __mul__(self, c):
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__

    def __add__(self, other):
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        return self.with_values(self.values - other.values)


def laplacian_apply(v: Field) -> Field:
    """Discrete Laplacian; the last radial node (boundary) is set to 0."""
    return Field(v.grid, v.grid.laplacian(v.values), bc="none")


def integrate(v: Field) -> float:
    return v.grid.integrate(v.values)


def norm_L2(v: Field) -> float:
    return math.sqrt(v.grid.l2_inner(v.values, v.values))


def norm_Lcrit(v: Field, p: float | None = None) -> float:
    N = v.grid.dimension
    p = 2.0 * N / (N - 2.0) if p is None else p
    return v.grid.quad_integrate(np.abs(v.grid.interp(v.values)) ** p) ** (1.0 / p)


def norm_H1(v: Field) -> float:
    return math.sqrt(v.grid.grad_sq(v.values) + v.grid.l2_inner(v.values, v.values))


def norm_E(model, v: Field) -> float:
    """``(int |grad v|^2 + V v^2)^(1/2)`` with V taken from ``model``."""
    return math.sqrt(v.grid.e_inner(v.values, v.values, potential_on(model, v.grid)))


def potential_on(model, grid):
    pot = model.potential
    if isinstance(grid, RadialGrid):
        if not getattr(pot, "radial", False):
            raise DomainError("a non-radial potential cannot be used on the radial backend")
        return float(pot.V0)
    return pot(grid.points())


def refine(grid: RadialGrid, factor: int) -> RadialGrid:
    if int(factor) != factor or factor < 1:
        raise DomainError("refinement factor must be a positive integer")
    return RadialGrid(grid.dimension, grid.radius, grid.n * int(factor))


def interpolate(v: Field, new_grid: RadialGrid) -> Field:
    """Piecewise-linear transfer; zero extension beyond the old radius."""
    if not isinstance(v.grid, RadialGrid) or not isinstance(new_grid, RadialGrid):
        raise DomainError("interpolation is implemented for radial grids")
    if new_grid.dimension != v.grid.dimension:
        raise DomainError("grids have different dimensions")
    vals = np.interp(new_grid.r, v.grid.r, v.values, right=0.0)
    if v.bc == "dirichlet":
        vals[-1] = 0.0
    return Field(new_grid, vals, v.bc)


def field_to_csv(path, v: Field, name="value"):
    grid = v.grid
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        if isinstance(grid, RadialGrid):
            wr.writerow(["r", name])
            for r, val in zip(grid.r, v.values):
                wr.writerow([repr(float(r)), repr(float(val))])
        else:
            wr.writerow(["x", "y", "z", name])
            pts = grid.points().reshape(-1, 3)
            for p, val in zip(pts, v.values.ravel()):
                wr.writerow([*(repr(float(c)) for c in p), repr(float(val))])


def field_to_json(v: Field) -> dict:
    out = {"grid": v.grid.to_dict(), "bc": v.bc, "values": v.values.ravel().tolist()}
    if isinstance(v.grid, RadialGrid):
        out["r"] = v.grid.r.tolist()
    return out


def dumps_field(v: Field) -> str:
    return json.dumps(field_to_json(v))
