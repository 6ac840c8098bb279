"""scikit-learn style facade over the solver.

Rows of ``X`` are coordinate points.  ``fit`` continues a seeded solution
through the rows in order; ``transform`` returns the solved unknowns and
``predict`` the field, each re-seeded from the nearest fitted point.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .calculus import implicit_jet
from .errors import NonConvergence
from .solve import MAX_ITER, NEWTON_TOL, newton_solve

__all__ = ["ImplicitFieldSolver"]


class ImplicitFieldSolver(TransformerMixin, BaseEstimator):
    """Pointwise solver for an :class:`~implicit_ansatz.solve.AnsatzSystem`.

    Parameters
    ----------
    system : AnsatzSystem
    seed : array-like of shape (m,)
        Unknowns near the solution at the first row passed to ``fit``.
    tol, max_iter : Newton settings.
    residual : callable, optional
        Maps a :class:`ScalarFieldSample` to a residual (anything
        ``float()`` accepts); used by :meth:`score`.
    """

    def __init__(self, system=None, seed=None, tol=NEWTON_TOL, max_iter=MAX_ITER, residual=None):
        self.system = system
        self.seed = seed
        self.tol = tol
        self.max_iter = max_iter
        self.residual = residual

    def _check_X(self, X, reset=False):
        X = check_array(X, dtype=np.float64)
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, solver was fitted with {self.n_features_in_}")
        if X.shape[1] != self.system.coord_dim:
            raise ValueError(f"X has {X.shape[1]} columns, system has {self.system.coord_dim} coordinates")
        return X

    def fit(self, X, y=None):
        if self.system is None or self.seed is None:
            raise ValueError("system and seed are required")
        X = self._check_X(X, reset=True)
        z = np.asarray(self.seed, dtype=float)
        out = np.full((X.shape[0], self.system.m), np.nan)
        for i, x in enumerate(X):
            try:
                z = newton_solve(self.system, x, z, tol=self.tol, max_iter=self.max_iter)
            except NonConvergence:
                if i == 0:
                    raise
                continue
            out[i] = z
        ok = ~np.isnan(out[:, 0])
        self.coords_ = X[ok]
        self.unknowns_ = out[ok]
        self.converged_ = ok
        return self

    def _solve(self, X):
        out = np.full((X.shape[0], self.system.m), np.nan)
        for i, x in enumerate(X):
            near = int(np.argmin(np.sum((self.coords_ - x) ** 2, axis=1)))
            try:
                out[i] = newton_solve(self.system, x, self.unknowns_[near], tol=self.tol, max_iter=self.max_iter)
            except NonConvergence:
                pass
        return out

    def transform(self, X):
        """Solved unknowns per row (NaN where Newton fails)."""
        check_is_fitted(self, "unknowns_")
        return self._solve(self._check_X(X))

    def predict(self, X):
        """Field value per row (NaN where Newton fails)."""
        return self.transform(X)[:, self.system.field_index]

    def derivatives(self, X):
        """:class:`ScalarFieldSample` per row, ``None`` where the solve or the derivatives fail."""
        check_is_fitted(self, "unknowns_")
        X = self._check_X(X)
        samples = []
        for x, z in zip(X, self._solve(X)):
            if np.isnan(z).any():
                samples.append(None)
                continue
            try:
                samples.append(implicit_jet(self.system, x, z))
            except NonConvergence:
                samples.append(None)
        return samples

    def score(self, X, y=None):
        """Negated worst residual over solved rows, or the solved fraction without ``residual``."""
        samples = self.derivatives(X)
        ok = [s for s in samples if s is not None]
        if self.residual is None:
            return len(ok) / len(samples)
        if not ok:
            return -np.inf
        return -max(abs(float(self.residual(s))) for s in ok)
