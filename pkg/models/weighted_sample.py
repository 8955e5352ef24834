"""
Amostras ponderadas (1-D e 2-D) usadas pelos estimadores log-côncavos
"""

from typing import Dict, Optional

import numpy as np

from utils.exceptions import DegenerateSampleError, DegenerateSupportError, InvalidInputError
from .constants import ModelConstants, validate_finite


def _normalize_weights(weights, size: int) -> np.ndarray:
    if weights is None:
        return np.full(size, 1.0 / size)
    w = validate_finite(weights, "weights").ravel()
    if w.shape[0] != size:
        raise InvalidInputError(f"Expected {size} weights, got {w.shape[0]}")
    if np.any(w < 0):
        raise InvalidInputError(f"weights must be nonnegative (index {int(np.argmax(w < 0))})")
    total = w.sum()
    if total <= 0:
        raise DegenerateSampleError("All weights are zero")
    return w / total


class WeightedSample1D:
    """
    Amostra univariada com pesos

    Pontos repetidos são fundidos (pesos somados) e pontos com peso
    desprezável são descartados. Depois disso os pontos ficam estritamente
    crescentes e os pesos somam 1.
    """

    def __init__(self, points, weights=None):
        z = validate_finite(points, "points").ravel()
        if z.size == 0:
            raise DegenerateSampleError("Empty sample")
        w = _normalize_weights(weights, z.size)

        self._n_observations = int(z.size)
        self._equal_weights = weights is None or bool(np.all(w == w[0]))

        keep = w >= ModelConstants.WEIGHT_DROP_RATIO * w.max()
        z, w = z[keep], w[keep]
        unique, inverse = np.unique(z, return_inverse=True)
        merged = np.bincount(inverse, weights=w)

        positive = merged > 0
        if np.count_nonzero(positive) < 2:
            raise DegenerateSampleError(
                "At least 2 distinct points with positive weight are required"
            )
        self._points = unique[positive]
        self._weights = merged[positive] / merged[positive].sum()
        self._points.setflags(write=False)
        self._weights.setflags(write=False)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def size(self) -> int:
        """Número de pontos distintos"""
        return int(self._points.size)

    @property
    def n_observations(self) -> int:
        return self._n_observations

    @property
    def equal_weights(self) -> bool:
        return self._equal_weights

    def mean(self) -> float:
        return float(np.dot(self._weights, self._points))

    def second_central_moment(self) -> float:
        """Σ w (z - média)², a variância normalizada pelos pesos"""
        centered = self._points - self.mean()
        return float(np.dot(self._weights, centered ** 2))

    def sample_variance(self) -> float:
        """
        Variância usada pela regra da largura de banda

        Pesos iguais: forma N-1 sobre as observações originais.
        Pesos não uniformes: segundo momento central normalizado.
        """
        moment = self.second_central_moment()
        n = self._n_observations
        if self._equal_weights and n > 1:
            return moment * n / (n - 1)
        return moment

    def to_dict(self) -> Dict:
        return {
            'points': self._points.tolist(),
            'weights': self._weights.tolist(),
            'n_observations': self._n_observations,
        }

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"WeightedSample1D(size={self.size}, n_observations={self._n_observations})"


class WeightedSample2D:
    """Amostra bivariada com pesos (pontos repetidos fundidos)"""

    def __init__(self, points, weights=None):
        x = validate_finite(points, "points")
        if x.ndim != 2 or x.shape[1] != 2:
            raise InvalidInputError(f"points must have shape (N, 2), got {x.shape}")
        if x.shape[0] == 0:
            raise DegenerateSupportError("Empty sample")
        w = _normalize_weights(weights, x.shape[0])

        self._n_observations = int(x.shape[0])
        self._equal_weights = weights is None or bool(np.all(w == w[0]))

        keep = w >= ModelConstants.WEIGHT_DROP_RATIO * w.max()
        x, w = x[keep], w[keep]
        unique, inverse = np.unique(x, axis=0, return_inverse=True)
        merged = np.bincount(np.asarray(inverse).ravel(), weights=w)

        if unique.shape[0] < 3 or not self._spans_plane(unique):
            raise DegenerateSupportError(
                "At least 3 affinely independent points with positive weight are required"
            )
        self._points = unique
        self._weights = merged / merged.sum()
        self._points.setflags(write=False)
        self._weights.setflags(write=False)

    @staticmethod
    def _spans_plane(points: np.ndarray) -> bool:
        centered = points - points.mean(axis=0)
        singular = np.linalg.svd(centered, compute_uv=False)
        scale = max(singular[0], 1.0)
        return bool(singular[-1] > 1e-10 * scale)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def size(self) -> int:
        return int(self._points.shape[0])

    @property
    def n_observations(self) -> int:
        return self._n_observations

    @property
    def equal_weights(self) -> bool:
        return self._equal_weights

    def mean(self) -> np.ndarray:
        return self._weights @ self._points

    def second_central_moment(self) -> np.ndarray:
        centered = self._points - self.mean()
        return (centered * self._weights[:, None]).T @ centered

    def sample_covariance(self) -> np.ndarray:
        """Covariância com a mesma convenção de sample_variance (N-1 se pesos iguais)"""
        moment = self.second_central_moment()
        n = self._n_observations
        if self._equal_weights and n > 1:
            moment = moment * n / (n - 1)
        return 0.5 * (moment + moment.T)

    def to_dict(self) -> Dict:
        return {
            'points': self._points.tolist(),
            'weights': self._weights.tolist(),
            'n_observations': self._n_observations,
        }

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"WeightedSample2D(size={self.size}, n_observations={self._n_observations})"


def weighted_sample_variance(z, weights: Optional[np.ndarray] = None) -> float:
    """Variância amostral (N-1 com pesos iguais, momento normalizado caso contrário)"""
    return WeightedSample1D(z, weights).sample_variance()


def weighted_sample_covariance(z, weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Análogo bivariado de weighted_sample_variance"""
    return WeightedSample2D(z, weights).sample_covariance()
