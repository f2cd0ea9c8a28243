"""Exact Gaussian process regression with an RBF kernel."""
from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular
from sklearn.base import BaseEstimator, RegressorMixin

from ..exceptions import IllConditionedKernelError, ValidationError
from ..validation import check_fitted, check_query, check_X_y

MAX_JITTER = 1e-4


def sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A, B = np.ascontiguousarray(A), np.ascontiguousarray(B)
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def rbf(A, B, length_scale: float, signal_variance: float) -> np.ndarray:
    return signal_variance * np.exp(-sq_dists(A, B) / (2.0 * length_scale**2))


class GaussianProcessRegressor(BaseEstimator, RegressorMixin):
    """GP with constant prior mean (the training-target mean) and kernel
    ``signal_variance * exp(-|a - b|^2 / (2 length_scale^2))`` plus
    ``noise_variance`` on the diagonal.

    If the Cholesky factorization fails, jitter is added in decades from
    1e-12 up to 1e-4 before giving up.
    """

    def __init__(self, length_scale=1.0, signal_variance=1.0, noise_variance=1e-4):
        self.length_scale = length_scale
        self.signal_variance = signal_variance
        self.noise_variance = noise_variance

    def fit(self, X, y):
        if self.length_scale <= 0 or self.signal_variance <= 0:
            raise ValidationError("length_scale and signal_variance must be > 0")
        if self.noise_variance < 0:
            raise ValidationError("noise_variance must be >= 0")
        X, y, _ = check_X_y(X, y)
        self.X_train_ = X
        self.y_train_ = y
        self.prior_mean_ = float(y.mean())
        K = rbf(X, X, self.length_scale, self.signal_variance)
        K[np.diag_indices_from(K)] += self.noise_variance
        jitters = [0.0] + [10.0**e for e in range(-12, -3)]
        for jitter in jitters:
            try:
                Kj = K + jitter * np.eye(len(y)) if jitter else K
                self.L_ = np.tril(cho_factor(Kj, lower=True)[0])
                break
            except LinAlgError:
                continue
        else:
            raise IllConditionedKernelError("ill-conditioned kernel")
        self.jitter_ = jitter
        self.alpha_ = cho_solve((self.L_, True), y - self.prior_mean_)
        self.n_features_in_ = X.shape[1]
        return self

    def posterior(self, X):
        """Posterior mean and (non-negative) variance at each row of ``X``."""
        check_fitted(self, "alpha_")
        X = check_query(X, self.n_features_in_)
        Ks = rbf(X, self.X_train_, self.length_scale, self.signal_variance)
        mean = self.prior_mean_ + Ks @ self.alpha_
        v = solve_triangular(self.L_, Ks.T, lower=True)
        var = self.signal_variance - np.einsum("ij,ij->j", v, v)
        return mean, np.maximum(var, 0.0)

    def predict(self, X):
        return self.posterior(X)[0]

    def to_dict(self) -> dict:
        check_fitted(self, "alpha_")
        return {
            "params": self.get_params(),
            "X": self.X_train_.tolist(),
            "y": self.y_train_.tolist(),
            "prior_mean": self.prior_mean_,
            "jitter": self.jitter_,
            "L": self.L_.tolist(),
            "alpha": self.alpha_.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GaussianProcessRegressor":
        gp = cls(**doc["params"])
        gp.X_train_ = np.array(doc["X"], dtype=float)
        gp.y_train_ = np.array(doc["y"], dtype=float)
        gp.prior_mean_ = float(doc["prior_mean"])
        gp.jitter_ = float(doc["jitter"])
        gp.L_ = np.array(doc["L"], dtype=float)
        gp.alpha_ = np.array(doc["alpha"], dtype=float)
        gp.n_features_in_ = gp.X_train_.shape[1]
        return gp


def fit_gp(X, y, length_scale=1.0, signal_variance=1.0, noise_variance=1e-4):
    return GaussianProcessRegressor(length_scale, signal_variance, noise_variance).fit(X, y)


def gp_posterior(gp: GaussianProcessRegressor, x) -> tuple[float, float]:
    mean, var = gp.posterior(np.asarray(x, dtype=float).reshape(1, -1))
    return float(mean[0]), float(var[0])
