"""
Densidades log-côncavas univariadas

PiecewiseLogLinearDensity guarda o MLE (log-densidade linear por troços
entre nós) e SmoothedLogConcave a sua convolução com um núcleo gaussiano.
"""

from typing import Dict

import numpy as np
from scipy.special import log_ndtr, logsumexp, ndtr

from utils.exceptions import InvalidInputError
from utils.numerics import exp_moments, log_ndtr_diff
from .constants import validate_finite

_QUERY_CHUNK = 2048
_FLAT_CDF_WIDTH = 1e-6


class PiecewiseLogLinearDensity:
    """
    Densidade com log-densidade contínua, linear entre nós consecutivos

    O suporte é [t_1, t_m]; fora dele a densidade é 0.
    """

    def __init__(self, knots, log_values):
        t = validate_finite(knots, "knots").ravel()
        phi = validate_finite(log_values, "log_values").ravel()
        if t.size < 2:
            raise InvalidInputError("A log-linear density needs at least 2 knots")
        if t.size != phi.size:
            raise InvalidInputError("knots and log_values must have the same length")
        if np.any(np.diff(t) <= 0):
            raise InvalidInputError("knots must be strictly increasing")
        self._knots = t
        self._log_values = phi
        self._knots.setflags(write=False)
        self._log_values.setflags(write=False)

    @property
    def knots(self) -> np.ndarray:
        return self._knots

    @property
    def log_values(self) -> np.ndarray:
        return self._log_values

    @property
    def support(self):
        return float(self._knots[0]), float(self._knots[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self._knots)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self._log_values) / self.widths

    def is_concave(self, tol: float = 1e-9) -> bool:
        """Declives entre nós não crescentes (a menos de tol)"""
        return bool(np.all(np.diff(self.slopes) <= tol))

    def _segment_moments(self):
        return exp_moments(self._log_values[:-1], self._log_values[1:])

    def segment_masses(self) -> np.ndarray:
        m0, _, _ = self._segment_moments()
        return self.widths * m0

    def integral(self) -> float:
        return float(self.segment_masses().sum())

    def normalized(self) -> 'PiecewiseLogLinearDensity':
        """Cópia com integral 1"""
        shift = np.log(self.integral())
        return PiecewiseLogLinearDensity(self._knots, self._log_values - shift)

    def log_pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = (x >= self._knots[0]) & (x <= self._knots[-1])
        values = np.interp(x, self._knots, self._log_values)
        return np.where(inside, values, -np.inf)

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.log_pdf(x))

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        masses = self.segment_masses()
        cumulative = np.concatenate([[0.0], np.cumsum(masses)])
        xc = np.clip(x, self._knots[0], self._knots[-1])
        k = np.clip(np.searchsorted(self._knots, xc, side='right') - 1, 0, self._knots.size - 2)
        left = self._knots[k]
        phi_left = self._log_values[k]
        phi_x = np.interp(xc, self._knots, self._log_values)
        m0, _, _ = exp_moments(phi_left, phi_x)
        partial = cumulative[k] + (xc - left) * m0
        return np.clip(partial / cumulative[-1], 0.0, 1.0)

    def mean(self) -> float:
        m0, m1, _ = self._segment_moments()
        d = self.widths
        total = np.sum(d * m0)
        return float(np.sum(self._knots[:-1] * d * m0 + d ** 2 * m1) / total)

    def variance(self) -> float:
        """Integral exacta de (z - média)² f(z), troço a troço"""
        m0, m1, m2 = self._segment_moments()
        d = self.widths
        total = np.sum(d * m0)
        offset = self._knots[:-1] - self.mean()
        second = offset ** 2 * d * m0 + 2.0 * offset * d ** 2 * m1 + d ** 3 * m2
        return float(max(np.sum(second) / total, 0.0))

    def weighted_log_likelihood(self, points, weights) -> float:
        return float(np.dot(weights, self.log_pdf(points)))

    def to_dict(self) -> Dict:
        return {
            'type': 'piecewise_log_linear',
            'knots': [float(v) for v in self._knots],
            'log_values': [float(v) for v in self._log_values],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'PiecewiseLogLinearDensity':
        return cls(data['knots'], data['log_values'])

    def __str__(self) -> str:
        lo, hi = self.support
        return f"Log-concave MLE on [{lo:.4g}, {hi:.4g}] with {self._knots.size} knots"

    def __repr__(self) -> str:
        return f"PiecewiseLogLinearDensity(knots={self._knots.size}, support={self.support})"


class SmoothedLogConcave:
    """
    MLE log-côncavo convoluído com N(0, a²)

    Com a = 0 avalia exactamente como a densidade base.
    """

    def __init__(self, base: PiecewiseLogLinearDensity, bandwidth: float):
        bandwidth = float(validate_finite(bandwidth, "bandwidth"))
        if bandwidth < 0:
            raise InvalidInputError(f"bandwidth must be nonnegative, got {bandwidth}")
        self._base = base
        self._bandwidth = bandwidth

    @property
    def base(self) -> PiecewiseLogLinearDensity:
        return self._base

    @property
    def bandwidth(self) -> float:
        return self._bandwidth

    def _pieces(self):
        t = self._base.knots
        return t[:-1], t[1:], self._base.log_values[:-1], self._base.slopes

    def _piece_log_terms(self, t: np.ndarray) -> np.ndarray:
        """log do contributo de cada troço para a densidade suavizada, shape (q, m-1)"""
        a = self._bandwidth
        lo, hi, phi, beta = self._pieces()
        tt = t[:, None]
        shift = tt + beta * a * a
        return (phi + beta * (tt - lo) + 0.5 * (beta * a) ** 2
                + log_ndtr_diff((lo - shift) / a, (hi - shift) / a))

    def log_pdf(self, t) -> np.ndarray:
        t = validate_finite(t, "t")
        if self._bandwidth == 0.0:
            return self._base.log_pdf(t)
        flat = np.atleast_1d(t).ravel()
        out = np.empty_like(flat)
        for start in range(0, flat.size, _QUERY_CHUNK):
            chunk = flat[start:start + _QUERY_CHUNK]
            out[start:start + _QUERY_CHUNK] = logsumexp(self._piece_log_terms(chunk), axis=1)
        return out.reshape(np.shape(t))

    def pdf(self, t) -> np.ndarray:
        return np.exp(self.log_pdf(t))

    def cdf(self, t) -> np.ndarray:
        t = validate_finite(t, "t")
        if self._bandwidth == 0.0:
            return self._base.cdf(t)
        a = self._bandwidth
        lo, hi, phi, beta = self._pieces()
        flat = np.atleast_1d(t).ravel()
        out = np.empty_like(flat)
        flat_piece = np.abs(beta * (hi - lo)) < _FLAT_CDF_WIDTH
        safe_beta = np.where(flat_piece, 1.0, beta)
        for start in range(0, flat.size, _QUERY_CHUNK):
            tt = flat[start:start + _QUERY_CHUNK][:, None]
            # integração por partes: [E Φ((t-z)/a)] + (1/β) ∫ E' φ_a
            edge_hi = np.exp(phi + beta * (hi - lo)) / safe_beta * ndtr((tt - hi) / a)
            edge_lo = np.exp(phi) / safe_beta * ndtr((tt - lo) / a)
            smooth = np.exp(self._piece_log_terms(tt[:, 0])) / safe_beta
            sloped = edge_hi - edge_lo + smooth
            # troço constante: e^φ a [G((t-l)/a) - G((t-u)/a)], G(x) = xΦ(x) + φ(x)
            g_lo = _phi_antiderivative((tt - lo) / a)
            g_hi = _phi_antiderivative((tt - hi) / a)
            constant = np.exp(phi) * a * (g_lo - g_hi)
            out[start:start + _QUERY_CHUNK] = np.where(flat_piece, constant, sloped).sum(axis=1)
        return np.clip(out, 0.0, 1.0).reshape(np.shape(t))

    def mean(self) -> float:
        return self._base.mean()

    def variance(self) -> float:
        return self._base.variance() + self._bandwidth ** 2

    def to_dict(self) -> Dict:
        return {
            'type': 'smoothed_log_concave',
            'base': self._base.to_dict(),
            'bandwidth': float(self._bandwidth),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'SmoothedLogConcave':
        return cls(PiecewiseLogLinearDensity.from_dict(data['base']), data['bandwidth'])

    def __str__(self) -> str:
        return f"{self._base} smoothed with bandwidth {self._bandwidth:.4g}"

    def __repr__(self) -> str:
        return f"SmoothedLogConcave(bandwidth={self._bandwidth!r}, base={self._base!r})"


def _phi_antiderivative(x: np.ndarray) -> np.ndarray:
    """G(x) = x Φ(x) + φ(x), primitiva de Φ"""
    return x * ndtr(x) + np.exp(-0.5 * x * x - 0.5 * np.log(2.0 * np.pi))


def probit_log_density(z, pvalue_logpdf) -> np.ndarray:
    """
    Log-densidade de Z = Φ⁻¹(1 - P) quando P tem log-densidade pvalue_logpdf

    f_Z(z) = h(1 - Φ(z)) φ(z); usa-se log Φ(-z) = log(1 - Φ(z)) para não
    perder precisão na cauda direita.

    Args:
        z: Pontos onde avaliar
        pvalue_logpdf: Função vectorizada com a log-densidade dos p-values

    Returns:
        np.ndarray: log f_Z(z)
    """
    z = validate_finite(z, "z")
    p = np.exp(log_ndtr(-z))
    return pvalue_logpdf(p) - 0.5 * z * z - 0.5 * np.log(2.0 * np.pi)
