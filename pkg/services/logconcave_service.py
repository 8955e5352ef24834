"""
Estimação log-côncava univariada: MLE por conjunto activo, suavização
gaussiana, escolha da largura de banda e transformação probit
"""

import logging
import warnings
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import solveh_banded
from scipy.special import ndtri

from models.constants import ModelConstants, validate_finite
from models.logconcave_density import PiecewiseLogLinearDensity, SmoothedLogConcave
from models.weighted_sample import WeightedSample1D
from utils.exceptions import BandwidthClippedWarning, InvalidInputError, NonConvergenceError
from utils.numerics import exp_moments

logger = logging.getLogger(__name__)

_NEWTON_MAX_ITER = 100
_ARMIJO = 1e-4


class BandwidthChoice:
    """Largura de banda escolhida e indicação de corte em 0"""

    def __init__(self, bandwidth: float, clipped: bool, sample_variance: float, mle_variance: float):
        self.bandwidth = float(bandwidth)
        self.clipped = bool(clipped)
        self.sample_variance = float(sample_variance)
        self.mle_variance = float(mle_variance)

    def to_dict(self):
        return {
            'bandwidth': self.bandwidth,
            'clipped': self.clipped,
            'sample_variance': self.sample_variance,
            'mle_variance': self.mle_variance,
        }

    def __repr__(self) -> str:
        return f"BandwidthChoice(bandwidth={self.bandwidth:.6g}, clipped={self.clipped})"


class _ActiveSetSolver:
    """
    Maximiza Σ w_i φ(x_i) - ∫ exp φ sobre φ côncava, linear entre nós

    Os nós activos são um subconjunto dos pontos da amostra que contém
    sempre o primeiro e o último. O máximo deste funcional tem ∫ exp φ = 1.
    """

    def __init__(self, sample: WeightedSample1D, tol: float, max_iter: int):
        self.x = sample.points
        self.w = sample.weights
        self.tol = tol
        self.max_iter = max_iter
        n = self.x.size
        # ∑_{i>j} w_i (x_i - x_j), via somas de sufixo
        tail_w = np.cumsum(self.w[::-1])[::-1]
        gaps = np.diff(self.x)
        tail = np.zeros(n)
        for j in range(n - 2, -1, -1):
            tail[j] = tail[j + 1] + gaps[j] * tail_w[j + 1]
        self.data_tail = tail

    # --- objectivo restrito a um conjunto de nós ---

    def _data_coefficients(self, knots_idx: np.ndarray) -> np.ndarray:
        """c tal que Σ w_i φ(x_i) = c · v, com v os valores nos nós"""
        t = self.x[knots_idx]
        seg = np.clip(np.searchsorted(t, self.x, side='right') - 1, 0, t.size - 2)
        lam = (self.x - t[seg]) / (t[seg + 1] - t[seg])
        c = np.bincount(seg, weights=self.w * (1.0 - lam), minlength=t.size)
        c += np.bincount(seg + 1, weights=self.w * lam, minlength=t.size)
        return c

    @staticmethod
    def _objective(t: np.ndarray, v: np.ndarray, c: np.ndarray) -> float:
        m0, _, _ = exp_moments(v[:-1], v[1:])
        return float(np.dot(c, v) - np.sum(np.diff(t) * m0))

    def _newton(self, t: np.ndarray, v: np.ndarray, c: np.ndarray) -> np.ndarray:
        """Máximo sem restrição de concavidade (hessiana tridiagonal)"""
        d = np.diff(t)
        value = self._objective(t, v, c)
        for _ in range(_NEWTON_MAX_ITER):
            m0, m1, m2 = exp_moments(v[:-1], v[1:])
            grad = c.copy()
            grad[:-1] -= d * (m0 - m1)
            grad[1:] -= d * m1
            if np.max(np.abs(grad)) < 1e-14:
                break
            diag = np.zeros(t.size)
            diag[:-1] += d * (m0 - 2.0 * m1 + m2)
            diag[1:] += d * m2
            if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(diag))):
                logger.debug("Newton stopped on a non-finite gradient or curvature")
                break
            banded = np.zeros((2, t.size))
            banded[0, 1:] = d * (m1 - m2)
            banded[1] = diag
            try:
                step = solveh_banded(banded, grad)
            except (np.linalg.LinAlgError, ValueError):
                # hessiana numericamente singular (nós quase coincidentes)
                step = grad / np.maximum(diag, 1e-300)
            slope = float(np.dot(grad, step))
            scale = 1.0
            while scale > 1e-12:
                candidate = v + scale * step
                cand_value = self._objective(t, candidate, c)
                if np.isfinite(cand_value) and cand_value >= value + _ARMIJO * scale * slope:
                    break
                scale *= 0.5
            else:
                break
            improvement = cand_value - value
            v, value = candidate, cand_value
            if improvement <= 1e-15 * max(1.0, abs(value)):
                break
        return v

    @staticmethod
    def _kinks(t: np.ndarray, v: np.ndarray) -> np.ndarray:
        slopes = np.diff(v) / np.diff(t)
        return np.diff(slopes)

    def _directional_derivatives(self, t: np.ndarray, v: np.ndarray) -> np.ndarray:
        """
        Derivada do objectivo na direcção -(x - x_j)_+ para cada ponto x_j

        É ∫_{x_j} (y - x_j) f(y) dy - Σ_i w_i (x_i - x_j)_+; valores positivos
        indicam que vale a pena abrir um nó em x_j.
        """
        d = np.diff(t)
        m0, m1, _ = exp_moments(v[:-1], v[1:])
        mass = d * m0
        m = t.size
        tail_mass = np.zeros(m)
        tail_first = np.zeros(m)
        for k in range(m - 2, -1, -1):
            tail_mass[k] = tail_mass[k + 1] + mass[k]
            tail_first[k] = tail_first[k + 1] + d[k] * tail_mass[k + 1] + d[k] ** 2 * m1[k]

        x = self.x
        seg = np.clip(np.searchsorted(t, x, side='right') - 1, 0, m - 2)
        right = t[seg + 1]
        phi_x = np.interp(x, t, v)
        length = right - x
        _, partial_m1, _ = exp_moments(phi_x, v[seg + 1])
        model_tail = length ** 2 * partial_m1 + tail_first[seg + 1] + length * tail_mass[seg + 1]
        return model_tail - self.data_tail

    def solve(self) -> PiecewiseLogLinearDensity:
        n = self.x.size
        active = np.zeros(n, dtype=bool)
        active[[0, n - 1]] = True
        t = self.x[active]
        spread = t[-1] - t[0]
        v = np.full(2, -np.log(spread))
        v = self._newton(t, v, self._data_coefficients(np.flatnonzero(active)))

        for iteration in range(1, self.max_iter + 1):
            derivs = self._directional_derivatives(self.x[active], v)
            derivs[active] = -np.inf
            j = int(np.argmax(derivs))
            if derivs[j] <= self.tol:
                logger.debug(f"Active set converged after {iteration} iterations "
                             f"with {int(active.sum())} knots")
                return self._build(active, v)

            # abrir o nó j; a função actual continua admissível (kink 0)
            v = np.interp(self.x[np.flatnonzero(active | (np.arange(n) == j))],
                          self.x[active], v)
            active[j] = True
            v = self._fit_feasible(active, v)

        raise NonConvergenceError(
            f"Active-set solver did not reach optimality within {self.max_iter} iterations",
            best=self._build(active, v),
            iterations=self.max_iter,
        )

    def _fit_feasible(self, active: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Óptimo local com recuos até a solução ser côncava (remove nós inactivos)"""
        while True:
            idx = np.flatnonzero(active)
            t = self.x[idx]
            candidate = self._newton(t, v, self._data_coefficients(idx))
            new_kinks = self._kinks(t, candidate)
            if new_kinks.size == 0 or np.all(new_kinks <= 0):
                return candidate
            old_kinks = self._kinks(t, v)
            violating = new_kinks > 0
            ratios = np.full(new_kinks.size, np.inf)
            ratios[violating] = old_kinks[violating] / (old_kinks[violating] - new_kinks[violating])
            step = float(np.clip(ratios.min(), 0.0, 1.0))
            v = v + step * (candidate - v)
            kinks = self._kinks(t, v)
            scale = np.max(np.abs(np.diff(v) / np.diff(t))) + 1.0
            drop = kinks >= -1e-14 * scale
            drop[int(np.argmin(ratios))] = True
            # kinks[k] refere-se ao nó interior k + 1
            active[idx[1:-1][drop]] = False
            v = v[np.concatenate([[True], ~drop, [True]])]

    def _build(self, active: np.ndarray, v: np.ndarray) -> PiecewiseLogLinearDensity:
        return PiecewiseLogLinearDensity(self.x[active], v).normalized()


def logconcave_mle(sample: WeightedSample1D, tol: float = ModelConstants.MLE_TOL,
                   max_iter: int = ModelConstants.MLE_MAX_ITER) -> PiecewiseLogLinearDensity:
    """
    MLE log-côncavo ponderado

    Args:
        sample: Amostra ponderada (pesos somam 1)
        tol: Tolerância para a condição de optimalidade de primeira ordem
        max_iter: Limite de iterações do conjunto activo

    Returns:
        PiecewiseLogLinearDensity normalizada, com nós em pontos da amostra

    Raises:
        InvalidInputError: tol não positiva
        NonConvergenceError: Limite de iterações atingido (com .best)
    """
    if not (np.isfinite(tol) and tol > 0):
        raise InvalidInputError(f"tol must be positive, got {tol}")
    return _ActiveSetSolver(sample, float(tol), int(max_iter)).solve()


def mle_variance(f: PiecewiseLogLinearDensity) -> float:
    """Variância exacta da densidade log-linear por troços"""
    return f.variance()


def choose_bandwidth(sample_variance: float, mle_variance: float) -> BandwidthChoice:
    """
    a = sqrt(max(variância amostral - variância do MLE, 0))

    Não emite avisos; o corte fica em BandwidthChoice.clipped.
    """
    sv = float(validate_finite(sample_variance, "sample_variance"))
    mv = float(validate_finite(mle_variance, "mle_variance"))
    if sv < 0:
        raise InvalidInputError(f"sample_variance must be nonnegative, got {sv}")
    if mv < 0:
        raise InvalidInputError(f"mle_variance must be nonnegative, got {mv}")
    gap = sv - mv
    return BandwidthChoice(np.sqrt(max(gap, 0.0)), gap < 0, sv, mv)


def select_bandwidth(sample_variance: float, mle_variance: float) -> float:
    """
    Largura de banda que iguala a variância suavizada à variância amostral

    Emite BandwidthClippedWarning quando a diferença é negativa.
    """
    choice = choose_bandwidth(sample_variance, mle_variance)
    if choice.clipped:
        message = (f"sample variance {choice.sample_variance:.6g} below MLE variance "
                   f"{choice.mle_variance:.6g}; bandwidth clipped to 0")
        logger.warning(message)
        warnings.warn(message, BandwidthClippedWarning, stacklevel=2)
    return choice.bandwidth


def smooth(f: PiecewiseLogLinearDensity, a: float) -> SmoothedLogConcave:
    return SmoothedLogConcave(f, a)


def smoothed_pdf(g: SmoothedLogConcave, t):
    """Densidade suavizada em t (escalar ou vector)"""
    values = g.pdf(t)
    return float(values) if np.ndim(values) == 0 else values


def fit_smoothed(sample: WeightedSample1D, tol: float = ModelConstants.MLE_TOL,
                 smoothing: bool = True) -> Tuple[SmoothedLogConcave, Optional[BandwidthChoice]]:
    """
    MLE + largura de banda escolhida a partir da própria amostra

    Com smoothing=False devolve a = 0 e nenhuma escolha.
    """
    try:
        base = logconcave_mle(sample, tol)
    except NonConvergenceError as e:
        logger.warning(f"{e}; using best iterate")
        base = e.best
    if not smoothing:
        return SmoothedLogConcave(base, 0.0), None
    choice = choose_bandwidth(sample.sample_variance(), base.variance())
    if choice.clipped:
        logger.warning(f"Bandwidth clipped to 0 (sample variance {choice.sample_variance:.6g} "
                       f"< MLE variance {choice.mle_variance:.6g})")
    return SmoothedLogConcave(base, choice.bandwidth), choice


def probit_transform(p_values) -> np.ndarray:
    """
    z = Φ⁻¹(1 - p), calculado como -Φ⁻¹(p) para manter precisão com p pequeno

    Raises:
        InvalidInputError: p fora de (0, 1), com o índice do primeiro valor inválido
    """
    p = validate_finite(p_values, "p_values")
    flat = np.atleast_1d(p).ravel()
    bad = np.flatnonzero((flat <= 0.0) | (flat >= 1.0))
    if bad.size:
        i = int(bad[0])
        raise InvalidInputError(f"p-value at index {i} is {flat[i]!r}, outside (0, 1)")
    return -ndtri(p)
