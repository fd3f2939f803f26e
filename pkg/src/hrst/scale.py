"""Linear MMI-gain to down-scaling factor model with step quantization."""
from dataclasses import dataclass
import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_finite_scalar
from .exceptions import InvalidArgumentError


@dataclass(frozen=True)
class ScaleModel:
    slope: float = -4.626
    intercept: float = 0.792
    step: float = 0.025
    min_phi: float = 0.2
    max_phi: float = 0.9

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidArgumentError(f"step must be positive, got {self.step}")
        if not 0.0 < self.min_phi < self.max_phi < 1.0:
            raise InvalidArgumentError(
                f"need 0 < min_phi < max_phi < 1, got {self.min_phi}, {self.max_phi}"
            )


def estimate_phi(delta, model=None):
    """Raw (unquantized, unclamped) scale factor for an MMI gain."""
    model = model or ScaleModel()
    delta = check_finite_scalar(delta, "delta")
    return model.slope * delta + model.intercept


def quantize_phi(phi, model=None):
    """Round ``phi`` to the nearest step (ties up) and clamp to the model range."""
    model = model or ScaleModel()
    phi = check_finite_scalar(phi, "phi")
    q = math.floor((phi + model.step / 2.0) / model.step) * model.step
    return min(max(q, model.min_phi), model.max_phi)


def select_phi(delta, model=None):
    return quantize_phi(estimate_phi(delta, model), model)


class ScaleFactorRegressor(RegressorMixin, BaseEstimator):
    """Least-squares fit of phi = slope * delta + intercept.

    ``predict`` returns quantized, clamped factors; ``predict_raw`` the
    line itself.

    Parameters
    ----------
    step, min_phi, max_phi : float
        Quantization step and valid factor range used by ``predict``.
    """

    def __init__(self, step=0.025, min_phi=0.2, max_phi=0.9):
        self.step = step
        self.min_phi = min_phi
        self.max_phi = max_phi

    def fit(self, X, y):
        from .complexity import fit_line

        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise InvalidArgumentError("X must hold a single delta feature")
            X = X[:, 0]
        self.slope_, self.intercept_ = fit_line(X, y)
        self.model_ = ScaleModel(self.slope_, self.intercept_, self.step, self.min_phi, self.max_phi)
        self.n_features_in_ = 1
        return self

    def predict_raw(self, X):
        check_is_fitted(self, "model_")
        X = np.asarray(X, dtype=np.float64).reshape(-1)
        return self.slope_ * X + self.intercept_

    def predict(self, X):
        check_is_fitted(self, "model_")
        return np.array([quantize_phi(p, self.model_) for p in self.predict_raw(X)])
