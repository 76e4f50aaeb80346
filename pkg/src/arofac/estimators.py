"""Estimator-style wrappers around the decomposition pipelines.

Both estimators expose the same surface: fit(X) learns factors from a
degree-3 array, transform(X) returns per-slice factor coefficients for a
tensor sharing the first two mode dimensions, inverse_transform maps
coefficients back to a tensor, and score(X) reports the explained variance
fraction of the low-rank fit.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .als import AlsConfig, parafac_als
from .exceptions import InputError, NumericalError
from .pipeline import Arofac2Config, arofac2
from .rankone import FindRankOneConfig
from .validation import check_tensor3


class _SliceCoefficientsMixin(TransformerMixin):
    """transform/inverse_transform/score shared by the tensor estimators."""

    def _uv(self):
        check_is_fitted(self, "factors_")
        if not self.factors_:
            raise InputError("fit found no factors (rank 0); cannot transform")
        U = np.stack([f.u for f in self.factors_], axis=1)
        V = np.stack([f.v for f in self.factors_], axis=1)
        return U, V

    def transform(self, X):
        """Per-slice coefficients of X in the fitted (u, v) component basis.

        X must share the fitted mode-1/2 dimensions; the slice count is
        free. Returns an (n3, rank_) array d with slice k approximated by
        sum_l d[k, l] u_l v_l^T.
        """
        U, V = self._uv()
        X = check_tensor3(X)
        if X.shape[:2] != (U.shape[0], V.shape[0]):
            raise InputError(
                f"mode-1/2 dims {X.shape[:2]} do not match fitted "
                f"({U.shape[0]}, {V.shape[0]})"
            )
        G = (U.T @ U) * (V.T @ V)
        cond = np.linalg.cond(G)
        if not np.isfinite(cond) or cond >= 1e8:
            raise NumericalError(
                f"fitted components are ill-conditioned (cond {cond:.3g})"
            )
        B = np.einsum("il,ijk,jl->lk", U, X, V)
        return np.linalg.solve(G, B).T

    def inverse_transform(self, coeffs):
        U, V = self._uv()
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[1] != U.shape[1]:
            raise InputError(
                f"coefficients must be (n_slices, {U.shape[1]}), "
                f"got {coeffs.shape}"
            )
        return np.einsum("il,jl,kl->ijk", U, V, coeffs)

    def score(self, X, y=None):
        """Explained variance fraction 1 - (||X - fit(X)||/||X||)^2."""
        X = check_tensor3(X)
        nx = np.linalg.norm(X)
        if nx == 0:
            raise InputError("score undefined for a zero tensor")
        resid = X - self.inverse_transform(self.transform(X))
        return 1.0 - (np.linalg.norm(resid) / nx) ** 2


class AROFAC2(_SliceCoefficientsMixin, BaseEstimator):
    """Rank-detecting CP decomposition estimator.

    fit(X) runs the full pipeline and exposes rank_, factors_,
    decomposition_, rel_error_ and diagnostics_. The detected rank is the
    number of linked factor triples, not a user input.
    """

    def __init__(self, restarts_per_mode=200, span_energy_tol=1e-3,
                 span_target_dim=None, min_vote_share=0.2, compute_mode3=True,
                 support_frac=0.01, span_weighting="spectrum", max_iters=1500,
                 conv_tol=1e-10, rankone_tol=0.95, power_iters=50,
                 random_state=0):
        self.restarts_per_mode = restarts_per_mode
        self.span_energy_tol = span_energy_tol
        self.span_target_dim = span_target_dim
        self.min_vote_share = min_vote_share
        self.compute_mode3 = compute_mode3
        self.support_frac = support_frac
        self.span_weighting = span_weighting
        self.max_iters = max_iters
        self.conv_tol = conv_tol
        self.rankone_tol = rankone_tol
        self.power_iters = power_iters
        self.random_state = random_state

    def _config(self):
        return Arofac2Config(
            restarts_per_mode=self.restarts_per_mode,
            findrankone=FindRankOneConfig(
                max_iters=self.max_iters,
                conv_tol=self.conv_tol,
                rankone_tol=self.rankone_tol,
                power_iters=self.power_iters,
            ),
            span_energy_tol=self.span_energy_tol,
            span_target_dim=self.span_target_dim,
            min_vote_share=self.min_vote_share,
            compute_mode3=self.compute_mode3,
            support_frac=self.support_frac,
            span_weighting=self.span_weighting,
        )

    def fit(self, X, y=None):
        X = check_tensor3(X, min_dim=2)
        d = arofac2(X, self._config(), seed=self.random_state)
        self.decomposition_ = d
        self.rank_ = d.rank
        self.factors_ = d.factors
        self.rel_error_ = d.rel_error
        self.diagnostics_ = d.diagnostics
        self.n_features_in_ = X.shape[0]
        return self


class ParafacALS(_SliceCoefficientsMixin, BaseEstimator):
    """Fixed-rank CP decomposition by alternating least squares."""

    def __init__(self, rank=1, max_sweeps=500, fit_tol=1e-8, n_inits=5,
                 random_state=0):
        self.rank = rank
        self.max_sweeps = max_sweeps
        self.fit_tol = fit_tol
        self.n_inits = n_inits
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_tensor3(X)
        cfg = AlsConfig(rank=self.rank, max_sweeps=self.max_sweeps,
                        fit_tol=self.fit_tol, init_seed=self.random_state,
                        n_inits=self.n_inits)
        d = parafac_als(X, cfg)
        self.decomposition_ = d
        self.rank_ = d.rank
        self.factors_ = d.factors
        self.rel_error_ = d.rel_error
        self.diagnostics_ = d.diagnostics
        self.n_features_in_ = X.shape[0]
        return self
