"""
Geração dos cenários de simulação, densidades e fdr verdadeiros, métricas por réplica
"""

import logging
from typing import Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.stats import gamma as gamma_dist
from scipy.stats import multivariate_normal, norm

from models.constants import validate_finite
from models.scenario import ALTERNATIVE_LABEL, NULL_LABEL, LabeledSample, Scenario, ShiftSpec, get_scenario
from utils.exceptions import InvalidInputError, UndefinedMetricError
from utils.numerics import gauss_legendre

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15

COMPONENTS = ('null', 'alternative', 'marginal')

# regra de Gauss-Legendre para o par gama bivariado
_GAMMA_RULE_ORDER = 96
_POINT_CHUNK = 256


def _resolve(scenario: Union[Scenario, str]) -> Scenario:
    return scenario if isinstance(scenario, Scenario) else get_scenario(scenario)


def splitmix64(value: int) -> int:
    """Um passo do gerador splitmix64 a partir do estado value"""
    z = (int(value) + _GOLDEN_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, run_index: int) -> int:
    """Semente da réplica run_index (depende só de master_seed e do índice)"""
    return splitmix64((splitmix64(int(master_seed) & _MASK64) + int(run_index)) & _MASK64)


def _draw_shift(rng: np.random.Generator, shift: ShiftSpec, shape) -> np.ndarray:
    a, b = shift.params
    if shift.kind == 'normal':
        return rng.normal(a, np.sqrt(b), size=shape)
    return rng.gamma(a, b, size=shape)


def generate(scenario: Union[Scenario, str], n: int, seed: int) -> LabeledSample:
    """
    Amostra rotulada do cenário

    Rótulos Bernoulli(p0) por observação; z = ruído base + efeito do
    componente (o efeito nulo N(0, 1e-6) é somado tal como está).

    Args:
        scenario: Scenario ou identificador (U1-U6, B1-B6)
        n: Tamanho da amostra (>= 1)
        seed: Semente do gerador

    Returns:
        LabeledSample
    """
    scenario = _resolve(scenario)
    n = int(n)
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")

    rng = np.random.default_rng(seed)
    is_null = rng.random(n) < scenario.p0
    labels = np.where(is_null, NULL_LABEL, ALTERNATIVE_LABEL)

    if scenario.dimension == 1:
        base = rng.standard_normal(n)
        shape = (n,)
    else:
        chol = np.linalg.cholesky(scenario.base_covariance)
        base = rng.standard_normal((n, 2)) @ chol.T
        shape = (n, 2)
    null_effect = _draw_shift(rng, scenario.null_shift, shape)
    alt_effect = _draw_shift(rng, scenario.alt_shift, shape)
    mask = is_null if scenario.dimension == 1 else is_null[:, None]
    z = base + np.where(mask, null_effect, alt_effect)
    return LabeledSample(z, labels, seed, scenario.scenario_id)


def _gamma_convolution_1d(z: np.ndarray, shift: ShiftSpec) -> np.ndarray:
    shape, scale = shift.params
    upper = shape * scale + 12.0 * np.sqrt(shape) * scale
    dist = gamma_dist(shape, scale=scale)

    def one(t: float) -> float:
        value, _ = quad(lambda d: norm.pdf(t - d) * dist.pdf(d), 0.0, upper,
                        epsabs=1e-10, epsrel=1e-10, limit=200)
        return value

    flat = z.ravel()
    return np.array([one(t) for t in flat]).reshape(z.shape)


def _gamma_convolution_2d(z: np.ndarray, shift: ShiftSpec, cov: np.ndarray) -> np.ndarray:
    shape, scale = shift.params
    upper = shape * scale + 12.0 * np.sqrt(shape) * scale
    nodes, weights = gauss_legendre(0.0, upper, _GAMMA_RULE_ORDER)
    g = gamma_dist.pdf(nodes, shape, scale=scale) * weights
    d1, d2 = np.meshgrid(nodes, nodes, indexing='ij')
    deltas = np.column_stack([d1.ravel(), d2.ravel()])
    mass = np.outer(g, g).ravel()
    prec = np.linalg.inv(cov)
    norm_const = 1.0 / (2.0 * np.pi * np.sqrt(np.linalg.det(cov)))

    pts = z.reshape(-1, 2)
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], _POINT_CHUNK):
        diff = pts[start:start + _POINT_CHUNK, None, :] - deltas[None, :, :]
        quad_form = np.einsum('pqi,ij,pqj->pq', diff, prec, diff)
        out[start:start + _POINT_CHUNK] = norm_const * (np.exp(-0.5 * quad_form) @ mass)
    return out.reshape(z.shape[:-1])


def _component_density(scenario: Scenario, shift: ShiftSpec, z: np.ndarray) -> np.ndarray:
    if scenario.dimension == 1:
        if shift.kind == 'normal':
            return norm.pdf(z, loc=shift.mean, scale=np.sqrt(1.0 + shift.variance))
        return _gamma_convolution_1d(z, shift)
    base = scenario.base_covariance
    if shift.kind == 'normal':
        values = multivariate_normal.pdf(z.reshape(-1, 2), mean=np.full(2, shift.mean),
                                         cov=base + shift.variance * np.eye(2))
        return np.reshape(values, z.shape[:-1])
    return _gamma_convolution_2d(z, shift, base)


def _check_points(scenario: Scenario, z) -> np.ndarray:
    values = validate_finite(z, "z")
    if scenario.dimension == 2 and (values.ndim == 0 or values.shape[-1] != 2):
        raise InvalidInputError(f"bivariate scenario {scenario.scenario_id} needs points of shape (..., 2)")
    return values


def true_density(scenario: Union[Scenario, str], component: str, z):
    """
    Densidade verdadeira de uma componente ('null', 'alternative' ou 'marginal')

    Convoluções normal-normal em forma fechada; normal-gama por quadratura
    adaptativa (1-D) ou Gauss-Legendre produto sobre o par gama (2-D).
    """
    scenario = _resolve(scenario)
    if component not in COMPONENTS:
        raise InvalidInputError(f"component must be one of {COMPONENTS}, got {component!r}")
    values = _check_points(scenario, z)
    if component == 'null':
        out = _component_density(scenario, scenario.null_shift, values)
    elif component == 'alternative':
        out = _component_density(scenario, scenario.alt_shift, values)
    else:
        out = (scenario.p0 * _component_density(scenario, scenario.null_shift, values)
               + (1.0 - scenario.p0) * _component_density(scenario, scenario.alt_shift, values))
    return float(out) if np.ndim(out) == 0 else out


def true_fdr(scenario: Union[Scenario, str], z):
    """fdr verdadeiro; onde as duas densidades dão 0 o resultado é 1"""
    scenario = _resolve(scenario)
    values = _check_points(scenario, z)
    null_part = scenario.p0 * _component_density(scenario, scenario.null_shift, values)
    alt_part = (1.0 - scenario.p0) * _component_density(scenario, scenario.alt_shift, values)
    total = null_part + alt_part
    with np.errstate(invalid='ignore', divide='ignore'):
        out = np.where(total > 0, null_part / total, 1.0)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def rmse(est_fdr, true_fdr_values, cut: float = 0.5) -> float:
    """
    Raiz do erro quadrático médio restrita a fdr verdadeiro <= cut

    Raises:
        UndefinedMetricError: Nenhum índice com fdr verdadeiro <= cut
    """
    est = validate_finite(est_fdr, "est_fdr").ravel()
    truth = validate_finite(true_fdr_values, "true_fdr").ravel()
    if est.shape != truth.shape:
        raise InvalidInputError(f"length mismatch: {est.size} estimates, {truth.size} true values")
    keep = truth <= cut
    if not np.any(keep):
        raise UndefinedMetricError(f"No observation with true fdr <= {cut}")
    return float(np.sqrt(np.mean((est[keep] - truth[keep]) ** 2)))


def empirical_fdr_fnr(decisions, labels) -> Tuple[float, float]:
    """
    FDR e FNR empíricos

    FDR = nulos declarados / declarados; FNR = alternativas não declaradas /
    não declarados. Denominador zero dá 0.
    """
    declared = np.asarray(decisions, dtype=bool).ravel()
    alternative = np.asarray(labels).ravel() == ALTERNATIVE_LABEL
    if declared.shape != alternative.shape:
        raise InvalidInputError(f"length mismatch: {declared.size} decisions, {alternative.size} labels")
    n_declared = int(declared.sum())
    n_kept = declared.size - n_declared
    fdr = float(np.sum(declared & ~alternative)) / n_declared if n_declared else 0.0
    fnr = float(np.sum(~declared & alternative)) / n_kept if n_kept else 0.0
    return fdr, fnr
