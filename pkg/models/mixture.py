"""
Modelo de mistura (nulo gaussiano + alternativa log-côncava suavizada) e
configuração/registo do algoritmo EM
"""

from typing import Dict, List, Optional, Union

import numpy as np
from scipy.stats import multivariate_normal, norm

from utils.exceptions import InvalidInputError
from .constants import ModelConstants, validate_finite
from .logconcave_density import SmoothedLogConcave
from .tent_density import SmoothedTent2D

Alternative = Union[SmoothedLogConcave, SmoothedTent2D]


class MixtureModel:
    """
    f(z) = p0 N(mu, tau2) + (1 - p0) f1(z)

    No caso bivariado mu é um vector de dimensão 2 e tau2 a matriz de
    covariância do nulo.
    """

    def __init__(self, p0: float, mu, tau2, alternative: Alternative):
        p0 = float(validate_finite(p0, "p0"))
        if not 0.0 < p0 < 1.0:
            raise InvalidInputError(f"p0 must lie in (0, 1), got {p0}")
        mu = validate_finite(mu, "mu")
        tau2 = validate_finite(tau2, "tau2")

        if isinstance(alternative, SmoothedTent2D):
            if mu.shape != (2,) or tau2.shape != (2, 2):
                raise InvalidInputError("bivariate null needs a 2-vector mean and a 2x2 covariance")
            tau2 = 0.5 * (tau2 + tau2.T)
            if np.linalg.eigvalsh(tau2)[0] <= 0:
                raise InvalidInputError("null covariance must be positive definite")
            self._dimension = 2
        elif isinstance(alternative, SmoothedLogConcave):
            if mu.ndim != 0 or tau2.ndim != 0:
                raise InvalidInputError("univariate null needs scalar mu and tau2")
            if tau2 <= 0:
                raise InvalidInputError(f"tau2 must be positive, got {float(tau2)}")
            mu, tau2 = float(mu), float(tau2)
            self._dimension = 1
        else:
            raise InvalidInputError(f"unsupported alternative {type(alternative).__name__}")

        self._p0 = p0
        self._mu = mu
        self._tau2 = tau2
        self._alternative = alternative

    @property
    def p0(self) -> float:
        return self._p0

    @property
    def mu(self):
        return self._mu.copy() if self._dimension == 2 else self._mu

    @property
    def tau2(self):
        return self._tau2.copy() if self._dimension == 2 else self._tau2

    @property
    def alternative(self) -> Alternative:
        return self._alternative

    @property
    def dimension(self) -> int:
        return self._dimension

    def null_log_pdf(self, z) -> np.ndarray:
        if self._dimension == 1:
            return norm.logpdf(z, loc=self._mu, scale=np.sqrt(self._tau2))
        pts = np.asarray(z, dtype=float)
        values = multivariate_normal.logpdf(pts, mean=self._mu, cov=self._tau2)
        return np.reshape(values, pts.shape[:-1])

    def alternative_log_pdf(self, z) -> np.ndarray:
        return self._alternative.log_pdf(z)

    def log_pdf(self, z) -> np.ndarray:
        """Log-densidade marginal da mistura"""
        return np.logaddexp(np.log(self._p0) + self.null_log_pdf(z),
                            np.log1p(-self._p0) + self.alternative_log_pdf(z))

    def bandwidth(self):
        if self._dimension == 1:
            return self._alternative.bandwidth
        return self._alternative.bandwidth_matrix

    def to_dict(self) -> Dict:
        return {
            'dimension': self._dimension,
            'p0': self._p0,
            'mu': self._mu.tolist() if self._dimension == 2 else self._mu,
            'tau2': self._tau2.tolist() if self._dimension == 2 else self._tau2,
            'alternative': self._alternative.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'MixtureModel':
        alt = data['alternative']
        if alt.get('type') == 'smoothed_tent_2d':
            alternative = SmoothedTent2D.from_dict(alt)
        elif alt.get('type') == 'smoothed_log_concave':
            alternative = SmoothedLogConcave.from_dict(alt)
        else:
            raise InvalidInputError(f"unknown alternative type {alt.get('type')!r}")
        return cls(data['p0'], data['mu'], data['tau2'], alternative)

    def __str__(self) -> str:
        if self._dimension == 1:
            return (f"MixtureModel(p0={self._p0:.4f}, mu={self._mu:.4f}, "
                    f"tau2={self._tau2:.4f}, bandwidth={self._alternative.bandwidth:.4f})")
        return f"MixtureModel(p0={self._p0:.4f}, mu={self._mu.round(4).tolist()}, dimension=2)"

    def __repr__(self) -> str:
        return self.__str__()


class EmConfig:
    """Parâmetros do EM"""

    def __init__(self, max_iterations: int = ModelConstants.EM_MAX_ITER,
                 rel_tol: float = ModelConstants.EM_REL_TOL,
                 init_seed: int = 0,
                 refit_bandwidth_each_iter: bool = True):
        if int(max_iterations) < 1:
            raise InvalidInputError(f"max_iterations must be >= 1, got {max_iterations}")
        if not (np.isfinite(rel_tol) and rel_tol > 0):
            raise InvalidInputError(f"rel_tol must be positive, got {rel_tol}")
        self._max_iterations = int(max_iterations)
        self._rel_tol = float(rel_tol)
        self._init_seed = int(init_seed)
        self._refit_bandwidth = bool(refit_bandwidth_each_iter)

    @property
    def max_iterations(self) -> int:
        return self._max_iterations

    @property
    def rel_tol(self) -> float:
        return self._rel_tol

    @property
    def init_seed(self) -> int:
        return self._init_seed

    @property
    def refit_bandwidth_each_iter(self) -> bool:
        """False mantém a alternativa sem suavização (a = 0)"""
        return self._refit_bandwidth

    def to_dict(self) -> Dict:
        return {
            'max_iterations': self._max_iterations,
            'rel_tol': self._rel_tol,
            'init_seed': self._init_seed,
            'refit_bandwidth_each_iter': self._refit_bandwidth,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'EmConfig':
        return cls(**data)

    def __repr__(self) -> str:
        return f"EmConfig({self.to_dict()})"


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    return float(value)


class EmIterationRecord:
    """Estado observado numa iteração do EM"""

    def __init__(self, iteration: int, log_likelihood: float, p0: float, mu, tau2,
                 bandwidth, bandwidth_clipped: bool = False):
        self.iteration = int(iteration)
        self.log_likelihood = float(log_likelihood)
        self.p0 = float(p0)
        self.mu = _plain(mu)
        self.tau2 = _plain(tau2)
        self.bandwidth = _plain(bandwidth)
        self.bandwidth_clipped = bool(bandwidth_clipped)

    def to_dict(self) -> Dict:
        return {
            'iteration': self.iteration,
            'log_likelihood': self.log_likelihood,
            'p0': self.p0,
            'mu': self.mu,
            'tau2': self.tau2,
            'bandwidth': self.bandwidth,
            'bandwidth_clipped': self.bandwidth_clipped,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'EmIterationRecord':
        return cls(**data)

    def __repr__(self) -> str:
        return (f"EmIterationRecord(iteration={self.iteration}, "
                f"log_likelihood={self.log_likelihood:.6f}, p0={self.p0:.4f})")


class EmTrace:
    """Histórico completo de um ajuste EM"""

    def __init__(self, records: Optional[List[EmIterationRecord]] = None,
                 converged: bool = False, best_iteration: int = 0,
                 init_fallback: bool = False,
                 indeterminate_responsibilities: bool = False):
        self._records: List[EmIterationRecord] = list(records or [])
        self.converged = bool(converged)
        self.best_iteration = int(best_iteration)
        self.init_fallback = bool(init_fallback)
        self.indeterminate_responsibilities = bool(indeterminate_responsibilities)

    def append(self, record: EmIterationRecord):
        self._records.append(record)

    @property
    def records(self) -> List[EmIterationRecord]:
        return list(self._records)

    @property
    def iterations(self) -> int:
        return len(self._records)

    @property
    def log_likelihoods(self) -> np.ndarray:
        return np.array([r.log_likelihood for r in self._records])

    @property
    def best_log_likelihood(self) -> float:
        if not self._records:
            return float('-inf')
        return float(self.log_likelihoods.max())

    def to_dict(self) -> Dict:
        return {
            'iterations': self.iterations,
            'converged': self.converged,
            'best_iteration': self.best_iteration,
            'init_fallback': self.init_fallback,
            'indeterminate_responsibilities': self.indeterminate_responsibilities,
            'records': [r.to_dict() for r in self._records],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'EmTrace':
        return cls(
            records=[EmIterationRecord.from_dict(r) for r in data.get('records', [])],
            converged=data.get('converged', False),
            best_iteration=data.get('best_iteration', 0),
            init_fallback=data.get('init_fallback', False),
            indeterminate_responsibilities=data.get('indeterminate_responsibilities', False),
        )

    def __repr__(self) -> str:
        return (f"EmTrace(iterations={self.iterations}, converged={self.converged}, "
                f"best_iteration={self.best_iteration})")
