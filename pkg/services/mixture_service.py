"""
EM semiparamétrico: nulo gaussiano empírico + alternativa log-côncava suavizada
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp
from scipy.stats import multivariate_normal, norm

from models.constants import ModelConstants, validate_finite
from models.mixture import EmConfig, EmIterationRecord, EmTrace, MixtureModel
from models.weighted_sample import WeightedSample1D, WeightedSample2D
from utils.exceptions import DegenerateSampleError, DegenerateSupportError, InvalidInputError, PosteriorCollapseError
from utils.patterns.observer import FitEventTypes, Subject
from .logconcave_service import fit_smoothed
from .tent_service import fit_smoothed_2d

logger = logging.getLogger(__name__)

# separação mínima (em desvios-padrão) para as duas gaussianas contarem como componentes distintas
_RESOLVED_SEPARATION = 2.0
# distância máxima (em desvios-padrão robustos) da componente maioritária à mediana
_OVERLAP_WINDOW = 0.5
_FLAT_ITERATIONS = 20


def _as_observations(z) -> np.ndarray:
    values = validate_finite(z, "z")
    if values.ndim == 2 and values.shape[1] == 1:
        values = values[:, 0]
    if values.ndim not in (1, 2) or (values.ndim == 2 and values.shape[1] != 2):
        raise InvalidInputError(f"z must have shape (N,) or (N, 2), got {values.shape}")
    return values


class GaussianMixtureInit:
    """Resultado da inicialização por mistura de duas gaussianas"""

    def __init__(self, p0: float, mu, tau2, component_means, responsibilities: np.ndarray,
                 fallback: bool = False, resolved: bool = True):
        self.p0 = float(p0)
        self.mu = mu
        self.tau2 = tau2
        self.component_means = component_means
        self.responsibilities = responsibilities
        self.fallback = bool(fallback)
        self.resolved = bool(resolved)

    def to_dict(self):
        def plain(v):
            return v.tolist() if isinstance(v, np.ndarray) else v
        return {
            'p0': self.p0,
            'mu': plain(self.mu),
            'tau2': plain(self.tau2),
            'component_means': [plain(m) for m in self.component_means],
            'fallback': self.fallback,
            'resolved': self.resolved,
        }

    def __repr__(self) -> str:
        return f"GaussianMixtureInit(p0={self.p0:.4f}, mu={self.mu}, fallback={self.fallback})"


def _component_log_pdf(z: np.ndarray, mean, cov) -> np.ndarray:
    if z.ndim == 1:
        return norm.logpdf(z, loc=mean, scale=np.sqrt(cov))
    return np.reshape(multivariate_normal.logpdf(z, mean=mean, cov=cov), z.shape[:1])


def _kmeanspp_centers(z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    pts = z.reshape(z.shape[0], -1)
    first = pts[rng.integers(pts.shape[0])]
    d2 = np.sum((pts - first) ** 2, axis=1)
    if d2.sum() <= 0:
        raise DegenerateSampleError("All observations are identical")
    second = pts[rng.choice(pts.shape[0], p=d2 / d2.sum())]
    return np.stack([first, second])


def _flat_alternative_responsibilities(z: np.ndarray, p0: float, mu, tau2) -> np.ndarray:
    pts = z.reshape(z.shape[0], -1)
    extent = np.prod(np.maximum(np.ptp(pts, axis=0), 1e-12))
    log_null = np.log(p0) + _component_log_pdf(z, mu, tau2)
    log_alt = np.log1p(-p0) - np.log(extent)
    return np.exp(log_null - np.logaddexp(log_null, log_alt))


def _flat_null_weight(z: np.ndarray, p0: float, mu, tau2, upper: float) -> float:
    """p0 reestimado com o nulo fixo contra uma alternativa uniforme"""
    for _ in range(_FLAT_ITERATIONS):
        p0 = float(np.clip(_flat_alternative_responsibilities(z, p0, mu, tau2).mean(), 0.5, upper))
    return p0


def _robust_start(z: np.ndarray) -> Tuple[object, object]:
    """Mediana e variância pelo intervalo interquartil"""
    if z.ndim == 1:
        q1, med, q3 = np.percentile(z, [25, 50, 75])
        tau2 = ((q3 - q1) / 1.349) ** 2
        if tau2 <= ModelConstants.INIT_MIN_VARIANCE:
            tau2 = float(np.var(z))
        if tau2 <= 0:
            raise DegenerateSampleError("All observations are identical")
        return float(med), float(tau2)
    med = np.median(z, axis=0)
    q1, q3 = np.percentile(z, [25, 75], axis=0)
    scale = (q3 - q1) / 1.349
    cov = np.cov(z, rowvar=False)
    sd = np.sqrt(np.diag(cov))
    scale = np.where(scale > np.sqrt(ModelConstants.INIT_MIN_VARIANCE), scale, sd)
    corr = cov / np.outer(sd, sd) if np.all(sd > 0) else np.eye(2)
    tau2 = corr * np.outer(scale, scale)
    if np.linalg.eigvalsh(tau2)[0] <= 0:
        raise DegenerateSupportError("Observations do not span the plane")
    return med, tau2


def init_gaussian_mixture(z, seed: int = 0,
                          iterations: int = ModelConstants.INIT_ITERATIONS) -> GaussianMixtureInit:
    """
    Valores iniciais por EM de uma mistura de duas gaussianas

    O nulo é a componente com média mais próxima da mediana. Se as duas
    componentes não se separam (distância entre médias abaixo de dois
    desvios-padrão) o nulo passa a ser a componente de maior peso, ou a
    mediana/IQR quando essa componente se afasta da mediana. A mediana/IQR
    com p0 fixo só é usada sem mistura (fallback), quando uma variância colapsa.

    Args:
        z: Observações (N,) ou (N, 2), N >= 10
        seed: Semente para o arranque k-means++
        iterations: Iterações de EM gaussiano

    Returns:
        GaussianMixtureInit (fallback=True quando a mistura degenerou)
    """
    z = _as_observations(z)
    n = z.shape[0]
    if n < ModelConstants.INIT_MIN_SIZE:
        raise InvalidInputError(f"At least {ModelConstants.INIT_MIN_SIZE} observations required, got {n}")

    rng = np.random.default_rng(seed)
    bivariate = z.ndim == 2
    centers = _kmeanspp_centers(z, rng)
    means = [centers[0] if bivariate else float(centers[0, 0]),
             centers[1] if bivariate else float(centers[1, 0])]
    overall = np.cov(z, rowvar=False) if bivariate else float(np.var(z))
    covs = [overall, overall]
    weights = np.array([0.5, 0.5])
    median = np.median(z, axis=0)

    degenerate = False
    resp = np.full((n, 2), 0.5)
    for _ in range(iterations):
        try:
            log_r = np.column_stack([np.log(weights[k]) + _component_log_pdf(z, means[k], covs[k])
                                     for k in range(2)])
        except (ValueError, np.linalg.LinAlgError):
            degenerate = True
            break
        resp = np.exp(log_r - logsumexp(log_r, axis=1, keepdims=True))
        totals = resp.sum(axis=0)
        if np.any(totals <= 0) or not np.all(np.isfinite(resp)):
            degenerate = True
            break
        weights = totals / n
        for k in range(2):
            r = resp[:, k]
            if bivariate:
                means[k] = r @ z / totals[k]
                d = z - means[k]
                covs[k] = (r[:, None] * d).T @ d / totals[k]
                smallest = np.linalg.eigvalsh(covs[k])[0]
            else:
                means[k] = float(r @ z / totals[k])
                covs[k] = float(r @ (z - means[k]) ** 2 / totals[k])
                smallest = covs[k]
            if not np.isfinite(smallest) or smallest < ModelConstants.INIT_MIN_VARIANCE:
                degenerate = True
        if degenerate:
            break

    if degenerate:
        mu, tau2 = _robust_start(z)
        p0 = ModelConstants.INIT_FALLBACK_P0
        logger.warning("Gaussian mixture start degenerate; using median/IQR fallback")
        return GaussianMixtureInit(p0, mu, tau2, [mu, mu],
                                   _flat_alternative_responsibilities(z, p0, mu, tau2),
                                   fallback=True, resolved=False)

    distance = [float(np.linalg.norm(np.atleast_1d(means[k] - median))) for k in range(2)]
    null = int(np.argmin(distance))
    alt = 1 - null
    largest_sd = np.sqrt(max(float(np.max(np.linalg.eigvalsh(np.atleast_2d(c)))) for c in covs))
    separation = float(np.linalg.norm(np.atleast_1d(means[null] - means[alt])))
    resolved = separation >= _RESOLVED_SEPARATION * largest_sd

    if resolved:
        p0 = float(np.clip(weights[null], 1.0 / n, 1.0 - 1.0 / n))
        return GaussianMixtureInit(p0, means[null], covs[null], [means[null], means[alt]],
                                   resp[:, null], resolved=True)

    # componentes sobrepostas: o nulo é a componente maioritária, desde que
    # a sua média fique na janela robusta em torno da mediana
    major = int(np.argmax(weights))
    upper = 1.0 - 1.0 / n
    med, robust_tau2 = _robust_start(z)
    offset = np.atleast_1d(means[major] - med)
    window = np.atleast_2d(robust_tau2)
    if float(offset @ np.linalg.solve(window, offset)) <= _OVERLAP_WINDOW ** 2:
        mu, tau2 = means[major], covs[major]
        logger.info("Gaussian mixture components overlap; starting from the majority component")
    else:
        mu, tau2 = med, robust_tau2
        logger.info("Gaussian mixture components overlap; starting from the median/IQR estimate")
    p0 = _flat_null_weight(z, float(np.clip(weights[major], 0.5, upper)), mu, tau2, upper)
    return GaussianMixtureInit(p0, mu, tau2, [means[null], means[alt]],
                               _flat_alternative_responsibilities(z, p0, mu, tau2), resolved=False)


def _log_components(model: MixtureModel, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """log p0 f0 e log (1 - p0) f1 em cada observação"""
    return (np.log(model.p0) + model.null_log_pdf(z),
            np.log1p(-model.p0) + model.alternative_log_pdf(z))


def _responsibilities(model: MixtureModel, z: np.ndarray, components=None) -> Tuple[np.ndarray, bool]:
    log_null, log_alt = components if components is not None else _log_components(model, z)
    with np.errstate(invalid='ignore'):
        gammas = np.exp(log_null - np.logaddexp(log_null, log_alt))
    bad = ~np.isfinite(gammas)
    if np.any(bad):
        gammas = np.where(bad, model.p0, gammas)
    return np.clip(gammas, 0.0, 1.0), bool(np.any(bad))


def e_step(model: MixtureModel, z) -> np.ndarray:
    """
    Probabilidades a posteriori de pertencer ao nulo

    Valores indeterminados (as duas densidades nulas) ficam iguais a p0.
    """
    values = _as_observations(z)
    gammas, indeterminate = _responsibilities(model, values)
    if indeterminate:
        logger.warning("Indeterminate responsibilities replaced by p0")
    return gammas


def fdr_eval(model: MixtureModel, z):
    """fdr local p0 f0 / f em cada z (escalar devolve float)"""
    values = validate_finite(z, "z")
    if model.dimension == 1:
        gammas, _ = _responsibilities(model, values)
        return float(gammas) if np.ndim(gammas) == 0 else gammas
    if values.shape == (2,):
        return float(_responsibilities(model, values[None, :])[0][0])
    return _responsibilities(model, _as_observations(values))[0]


def threshold_decisions(fdrs, cutoff: float) -> np.ndarray:
    """Declara descoberta quando fdr <= cutoff"""
    cutoff = float(cutoff)
    if not 0.0 < cutoff < 1.0:
        raise InvalidInputError(f"cutoff must lie in (0, 1), got {cutoff}")
    return np.asarray(fdrs, dtype=float) <= cutoff


def log_likelihood(model: MixtureModel, z) -> float:
    """Log-verosimilhança dos dados observados"""
    return float(np.sum(model.log_pdf(_as_observations(z))))


class MStepResult:
    """Parâmetros do passo M"""

    def __init__(self, p0: float, mu, tau2, alternative, bandwidth_clipped: bool = False):
        self.p0 = p0
        self.mu = mu
        self.tau2 = tau2
        self.alternative = alternative
        self.bandwidth_clipped = bool(bandwidth_clipped)

    def to_model(self) -> MixtureModel:
        return MixtureModel(self.p0, self.mu, self.tau2, self.alternative)

    def __repr__(self) -> str:
        return f"MStepResult(p0={self.p0:.4f}, mu={self.mu}, tau2={self.tau2})"


def _warm_start(base, points: np.ndarray) -> Optional[np.ndarray]:
    """Log-valores da tenda anterior; pontos fora do seu suporte ficam abaixo do mínimo"""
    values = base.log_pdf(points)
    inside = np.isfinite(values)
    if not np.any(inside):
        return None
    return np.where(inside, values, values[inside].min() - 1.0)


def m_step(z, gammas, smoothing: bool = True, previous=None) -> MStepResult:
    """
    Momentos ponderados do nulo e MLE log-côncavo suavizado da alternativa

    Args:
        z: Observações (N,) ou (N, 2)
        gammas: Responsabilidades do nulo
        smoothing: False fixa a largura de banda em 0
        previous: Alternativa bivariada anterior (ponto de partida do MLE)

    Raises:
        PosteriorCollapseError: Σγ < 1 ("null") ou Σ(1-γ) < 1 ("alternative")
    """
    z = _as_observations(z)
    g = validate_finite(gammas, "gammas").ravel()
    if g.shape[0] != z.shape[0]:
        raise InvalidInputError(f"Expected {z.shape[0]} responsibilities, got {g.shape[0]}")
    if np.any((g < 0) | (g > 1)):
        raise InvalidInputError("responsibilities must lie in [0, 1]")

    null_mass = float(g.sum())
    alt_mass = float((1.0 - g).sum())
    if null_mass < ModelConstants.COLLAPSE_MIN_EFFECTIVE:
        raise PosteriorCollapseError("null", null_mass)
    if alt_mass < ModelConstants.COLLAPSE_MIN_EFFECTIVE:
        raise PosteriorCollapseError("alternative", alt_mass)

    p0 = null_mass / z.shape[0]
    alt_weights = (1.0 - g) / alt_mass
    clipped = False
    if z.ndim == 1:
        mu = float(np.dot(g, z) / null_mass)
        tau2 = float(np.dot(g, (z - mu) ** 2) / null_mass)
        if not tau2 > 0:
            raise PosteriorCollapseError("null", null_mass)
        try:
            alternative, choice = fit_smoothed(WeightedSample1D(z, alt_weights), smoothing=smoothing)
        except DegenerateSampleError as e:
            raise PosteriorCollapseError("alternative", alt_mass) from e
    else:
        mu = g @ z / null_mass
        d = z - mu
        tau2 = (g[:, None] * d).T @ d / null_mass
        if np.linalg.eigvalsh(tau2)[0] <= 0:
            raise PosteriorCollapseError("null", null_mass)
        try:
            sample = WeightedSample2D(z, alt_weights)
            initial = None
            if previous is not None:
                initial = _warm_start(previous.base, sample.points)
            alternative, choice = fit_smoothed_2d(sample, smoothing=smoothing,
                                                  initial_log_values=initial)
        except (DegenerateSampleError, DegenerateSupportError) as e:
            raise PosteriorCollapseError("alternative", alt_mass) from e
    if choice is not None:
        clipped = choice.clipped
    return MStepResult(p0, mu, tau2, alternative, clipped)


class MixtureService(Subject):
    """
    Serviço de ajuste EM com notificação de progresso

    Padrão Observer: os observadores recebem FitEventTypes a cada iteração.
    """

    def fit(self, z, config: Optional[EmConfig] = None,
            initial_gammas=None) -> Tuple[MixtureModel, EmTrace]:
        """
        Ajusta a mistura por EM

        Args:
            z: Observações (N,) ou (N, 2), N >= 10
            config: EmConfig (omissão: valores por defeito)
            initial_gammas: Responsabilidades iniciais (salta a inicialização gaussiana)

        Returns:
            (modelo com a maior log-verosimilhança observada, EmTrace)
        """
        config = config or EmConfig()
        z = _as_observations(z)
        n = z.shape[0]
        if n < ModelConstants.INIT_MIN_SIZE:
            raise InvalidInputError(f"At least {ModelConstants.INIT_MIN_SIZE} observations required, got {n}")

        dimension = 1 if z.ndim == 1 else 2
        self.notify(FitEventTypes.FIT_STARTED, {'n': n, 'dimension': dimension})
        trace = EmTrace()

        if initial_gammas is None:
            start = init_gaussian_mixture(z, config.init_seed)
            gammas = start.responsibilities
            trace.init_fallback = start.fallback
            if start.fallback:
                self.notify(FitEventTypes.INIT_FALLBACK, start.to_dict())
            self.notify(FitEventTypes.INIT_COMPLETE, start.to_dict())
        else:
            gammas = validate_finite(initial_gammas, "initial_gammas").ravel()

        smoothing = config.refit_bandwidth_each_iter
        best_model, best_ll = None, -np.inf
        previous_ll = None
        previous_alt = None

        for iteration in range(1, config.max_iterations + 1):
            step = m_step(z, gammas, smoothing=smoothing, previous=previous_alt)
            model = step.to_model()
            previous_alt = model.alternative if dimension == 2 else None
            components = _log_components(model, z)
            ll = float(np.sum(np.logaddexp(*components)))

            trace.append(EmIterationRecord(iteration, ll, model.p0, model.mu, model.tau2,
                                           model.bandwidth(), step.bandwidth_clipped))
            self.notify(FitEventTypes.EM_ITERATION,
                        {'iteration': iteration, 'log_likelihood': ll, 'p0': model.p0})
            if step.bandwidth_clipped:
                self.notify(FitEventTypes.BANDWIDTH_CLIPPED, {'iteration': iteration})

            if ll > best_ll:
                best_model, best_ll = model, ll
                trace.best_iteration = iteration

            if previous_ll is not None:
                if ll < previous_ll - 1e-8 * max(1.0, abs(previous_ll)):
                    self.logger.info(f"Log-likelihood decreased at iteration {iteration}: "
                                     f"{previous_ll:.10f} -> {ll:.10f}")
                    self.notify(FitEventTypes.LIKELIHOOD_DECREASE,
                                {'iteration': iteration, 'previous': previous_ll, 'current': ll})
                if abs(ll - previous_ll) <= config.rel_tol * max(abs(previous_ll), 1e-300):
                    trace.converged = True
                    break
            previous_ll = ll

            gammas, indeterminate = _responsibilities(model, z, components)
            if indeterminate:
                trace.indeterminate_responsibilities = True
                self.logger.warning(f"Indeterminate responsibilities at iteration {iteration}")
                self.notify(FitEventTypes.INDETERMINATE_RESPONSIBILITIES, {'iteration': iteration})

        if not trace.converged:
            self.logger.info(f"EM stopped at the iteration cap ({config.max_iterations})")
        self.notify(FitEventTypes.FIT_COMPLETE,
                    {'converged': trace.converged, 'iterations': trace.iterations,
                     'log_likelihood': best_ll, 'p0': best_model.p0})
        return best_model, trace


def em_fit(z, config: Optional[EmConfig] = None, initial_gammas=None,
           observers: Optional[List] = None) -> Tuple[MixtureModel, EmTrace]:
    """Atalho funcional para MixtureService.fit"""
    service = MixtureService()
    for observer in observers or []:
        service.attach(observer)
    return service.fit(z, config, initial_gammas)
