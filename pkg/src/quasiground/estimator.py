"""scikit-learn style wrappers around the ground-state solver and the dual transform."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .nonlinearity import ConstantPotential, ModelSpec, TransformedPower, ZeroNonlinearity
from .solver import SolveConfig, minimize_ground_state
from .transform import TransformKind, TransformSpec

__all__ = ["GroundStateSolver", "DualTransformer", "check_radii", "build_model"]


def check_radii(X) -> np.ndarray:
    """Accept radii as shape (m,) or (m, 1); reject negatives and non-finite values."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    X = check_array(X, ensure_2d=True, dtype=float)
    if X.shape[1] != 1:
        raise ValueError(f"expected a single column of radii, got shape {X.shape}")
    r = X[:, 0]
    if np.any(r < 0):
        raise ValueError("radii must be non-negative")
    return r


def build_model(dimension, transform, V0, nonlinearity, mu, q) -> ModelSpec:
    spec = transform if isinstance(transform, TransformSpec) else TransformSpec(TransformKind(transform))
    if nonlinearity == "zero":
        nl = ZeroNonlinearity()
    elif nonlinearity in ("power", "transformed_power"):
        nl = TransformedPower(float(mu), float(q))
    else:
        raise ValueError(f"unknown nonlinearity {nonlinearity!r}")
    return ModelSpec(int(dimension), spec, ConstantPotential(float(V0)), nl)


class GroundStateSolver(BaseEstimator):
    """Radial ground state of the transformed critical problem.

    ``fit`` runs the sphere descent; ``predict`` evaluates the original
    unknown ``u = G^{-1}(v)`` at given radii, ``transform`` returns the
    pair ``(v, u)``. ``fit`` takes no data.
    """

    def __init__(
        self,
        dimension=3,
        kind="superfluid_film",
        V0=1.0,
        nonlinearity="power",
        mu=1.0,
        q=5.0,
        R=40.0,
        n=4096,
        step_rule="bb",
        tol=1e-6,
        max_iter=10_000,
        clamp=True,
        init_width=None,
    ):
        self.dimension = dimension
        self.kind = kind
        self.V0 = V0
        self.nonlinearity = nonlinearity
        self.mu = mu
        self.q = q
        self.R = R
        self.n = n
        self.step_rule = step_rule
        self.tol = tol
        self.max_iter = max_iter
        self.clamp = clamp
        self.init_width = init_width

    def _config(self):
        return SolveConfig(
            backend="radial",
            R=float(self.R),
            n=int(self.n),
            step_rule=self.step_rule,
            tol=float(self.tol),
            max_iter=int(self.max_iter),
            clamp=bool(self.clamp),
            init_width=self.init_width,
        )

    def fit(self, X=None, y=None):
        model = build_model(self.dimension, self.kind, self.V0, self.nonlinearity, self.mu, self.q)
        if X is not None:
            raise ValueError("fit takes no data; configure the initial guess through init_width")
        cfg = self._config()
        report = minimize_ground_state(model, cfg)
        self.model_ = model
        self.report_ = report
        self.grid_ = report.v_star.grid
        self.v_ = report.v_star.values
        self.u_ = report.u_star.values
        self.level_ = report.level
        self.n_iter_ = report.iterations
        self.converged_ = report.converged
        return self

    def _profiles(self, X):
        check_is_fitted(self, "v_")
        r = check_radii(X)
        v = self.grid_.profile(self.v_, r)
        u = self.model_.transform.G_inverse(v)
        return v, u

    def predict(self, X):
        """``u(r)`` from the spline profile of ``v``."""
        return self._profiles(X)[1]

    def transform(self, X):
        """Columns ``v(r)`` and ``u(r)``."""
        v, u = self._profiles(X)
        return np.column_stack([v, u])

    def score(self, X=None, y=None):
        """Negative ground-state level, so that higher is better."""
        check_is_fitted(self, "level_")
        return -float(self.level_)


class DualTransformer(TransformerMixin, BaseEstimator):
    """Elementwise ``v = G(u)`` with ``inverse_transform`` giving ``u = G^{-1}(v)``."""

    def __init__(self, kind="superfluid_film"):
        self.kind = kind

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_2d=False)
        self.spec_ = TransformSpec(TransformKind(self.kind))
        self.n_features_in_ = 1 if X.ndim == 1 else X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = check_array(X, dtype=float, ensure_2d=False)
        return self.spec_.G(X)

    def inverse_transform(self, X):
        check_is_fitted(self, "spec_")
        X = check_array(X, dtype=float, ensure_2d=False)
        return self.spec_.G_inverse(X)
