"""scikit-learn style wrappers around the fall-off fit and the classifier."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .forms import FALLOFF_FLOOR, FALLOFF_RESIDUAL, FASTER, POWER_LAW, fit_power_law
from .gauge import (
    ASYMPTOTICALLY_TRIVIAL,
    BOUNDARY_PRESERVING,
    EPSILON_0,
    FORMAL,
    NOT_CLASSIFIABLE,
    classify,
)


class FallOffEstimator(RegressorMixin, BaseEstimator):
    """Log-log power-law fit ``y ~ amplitude * r**exponent``.

    ``X`` is a single column of radii, ``y`` the magnitudes. After ``fit``
    the estimator exposes ``kind_`` (power law, faster than any power or no
    power law), ``exponent_``, ``amplitude_`` and ``residual_``.
    """

    def __init__(self, residual_threshold=FALLOFF_RESIDUAL, floor=FALLOFF_FLOOR):
        self.residual_threshold = residual_threshold
        self.floor = floor

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_samples=3)
        if X.shape[1] != 1:
            raise ValueError("FallOffEstimator expects a single column of radii")
        prof = fit_power_law(X[:, 0], y, self.residual_threshold, self.floor)
        self.profile_ = prof
        self.kind_ = prof.kind
        self.exponent_ = prof.exponent
        self.amplitude_ = prof.amplitude
        self.residual_ = prof.residual
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "profile_")
        X = check_array(X)
        r = X[:, 0]
        if self.kind_ == FASTER:
            return np.zeros_like(r)
        if self.kind_ != POWER_LAW:
            raise ValueError("no power law was found; nothing to predict")
        return self.amplitude_ * r**self.exponent_

    def satisfies(self, threshold):
        check_is_fitted(self, "profile_")
        return self.profile_.satisfies(threshold)


class AsymptoticClassifier(ClassifierMixin, BaseEstimator):
    """Labels gauge maps as Formal, BoundaryPreserving or AsymptoticallyTrivial.

    The rule is fixed, so ``fit`` only records the label set; ``X`` is any
    sequence of :class:`~asymptotic_gauge.gauge.GaugeMap` objects.
    """

    def __init__(self, epsilon_0=EPSILON_0, window_fraction=0.25):
        self.epsilon_0 = epsilon_0
        self.window_fraction = window_fraction

    def fit(self, X=None, y=None):
        self.classes_ = np.array([ASYMPTOTICALLY_TRIVIAL, BOUNDARY_PRESERVING, FORMAL, NOT_CLASSIFIABLE])
        return self

    def classify(self, X):
        check_is_fitted(self, "classes_")
        return [classify(g, self.epsilon_0, self.window_fraction) for g in X]

    def predict(self, X):
        return np.array([c.variant for c in self.classify(X)])

    def boundary_constants(self, X):
        return [c.boundary_constant for c in self.classify(X)]
