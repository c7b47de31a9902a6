"""scikit-learn style wrappers.

Rows of ``X`` are photon-number distributions: column ``n`` holds ``p_n``.
Rows are renormalized on input, so unnormalized non-negative weights work
too.  The estimators are stateless apart from recording ``n_features_in_``
and therefore compose with :class:`sklearn.pipeline.Pipeline`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, validate_data

from . import engine, witness
from .exceptions import DomainError

__all__ = [
    "AttenuationCurveTransformer",
    "PhotonStatistics",
    "TransformabilityClassifier",
    "ZeroPhotonSubtraction",
    "check_distributions",
]


def check_distributions(X, require_mean: bool = False) -> np.ndarray:
    """Validate a 2-D array of photon-number distributions and row-normalize it."""
    X = check_array(X, dtype=np.float64, ensure_all_finite=True)
    if np.any(X < 0):
        raise DomainError("photon-number probabilities must be non-negative")
    totals = X.sum(axis=1)
    if np.any(totals <= 0):
        raise DomainError("every row needs a positive total probability")
    X = X / totals[:, None]
    if require_mean and np.any(X @ np.arange(X.shape[1]) <= 0):
        raise DomainError("rows with zero mean photon number (vacuum) are not allowed")
    return X


class _DistributionEstimator(BaseEstimator):
    def fit(self, X, y=None):
        validate_data(self, X, dtype=np.float64)
        return self

    def _validated(self, X, require_mean: bool = False) -> np.ndarray:
        check_is_fitted(self, "n_features_in_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return check_distributions(X, require_mean)


class ZeroPhotonSubtraction(TransformerMixin, _DistributionEstimator):
    """Map each row to its heralded output distribution at ``reflectance``."""

    def __init__(self, reflectance: float = 0.5):
        self.reflectance = reflectance

    def transform(self, X):
        X = self._validated(X)
        return np.vstack([engine.apply_zps(row, self.reflectance).probs for row in X])


class PhotonStatistics(TransformerMixin, _DistributionEstimator):
    """Columns ``[mean, variance, mandel_q]``; Q is NaN for vacuum rows."""

    def transform(self, X):
        X = self._validated(X)
        out = np.empty((X.shape[0], 3))
        for i, row in enumerate(X):
            m = engine.moments(row)
            out[i] = (m.mean, m.variance, np.nan if m.mandel_q is None else m.mandel_q)
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(["mean", "variance", "mandel_q"], dtype=object)


class AttenuationCurveTransformer(TransformerMixin, _DistributionEstimator):
    """Sample K(R) of each row on ``np.linspace(0, r_stop, n_points)``."""

    def __init__(self, r_stop: float = 0.99, n_points: int = 50):
        self.r_stop = r_stop
        self.n_points = n_points

    def transform(self, X):
        X = self._validated(X, require_mean=True)
        grid = np.linspace(0.0, self.r_stop, self.n_points)
        return np.vstack([engine._curve_arrays(row, grid)[0] for row in X])


class TransformabilityClassifier(ClassifierMixin, _DistributionEstimator):
    """Label a distribution transformable (1) or not (0).

    ``method="scan"`` looks for an extremum of K(R) on (0, r_stop);
    ``method="criteria"`` uses the sufficient Lee / mean-ratio / Klyshko
    tests, which can miss states that transform an even number of times.
    """

    def __init__(self, method: str = "scan", r_stop: float = engine.DEFAULT_R_STOP,
                 n_grid: int = engine.DEFAULT_GRID):
        self.method = method
        self.r_stop = r_stop
        self.n_grid = n_grid

    def fit(self, X, y=None):
        if self.method not in ("scan", "criteria"):
            raise ValueError(f"method must be 'scan' or 'criteria', got {self.method!r}")
        super().fit(X)
        self.classes_ = np.array([0, 1])
        return self

    def predict(self, X):
        X = self._validated(X, require_mean=True)
        if self.method == "criteria":
            return np.array([int(witness.predict_transformable(row).predicted_transformable)
                             for row in X])
        return np.array([int(bool(engine.find_extrema(row, self.r_stop, self.n_grid)))
                         for row in X])
