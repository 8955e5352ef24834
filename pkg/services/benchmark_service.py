"""
Benchmark Monte Carlo: M réplicas independentes de gerar → ajustar → avaliar
"""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from models.constants import ModelConstants
from models.metrics_report import MetricsReport, RunMetrics, five_number_summary
from models.mixture import EmConfig
from models.scenario import Scenario, get_scenario
from utils.exceptions import BenchmarkIntegrityError, InvalidInputError
from utils.patterns.observer import BenchmarkEventTypes, Subject
from utils.settings import get_settings
from .mixture_service import em_fit, fdr_eval, threshold_decisions
from .simulation_service import derive_seed, empirical_fdr_fnr, generate, rmse, true_fdr


def curve_grid(dimension: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Grelha fixa das curvas de fdr

    Returns:
        (t, pontos): em 2-D os pontos são a diagonal t·(1, 1)
    """
    bounds = ModelConstants.PLOT_GRID_1D if dimension == 1 else ModelConstants.PLOT_GRID_DIAGONAL
    t = np.linspace(*bounds)
    return t, (t if dimension == 1 else np.column_stack([t, t]))


def run_single(scenario_id: str, n: int, run_index: int, seed: int,
               thresholds: Sequence[float], config: Optional[Dict] = None) -> RunMetrics:
    """Uma réplica: gerar, ajustar, fdr estimado contra o verdadeiro"""
    scenario = get_scenario(scenario_id)
    sample = generate(scenario, n, seed)
    em_config = EmConfig.from_dict({**(config or {}), 'init_seed': seed})
    model, trace = em_fit(sample.z, em_config)

    estimated = fdr_eval(model, sample.z)
    truth = true_fdr(scenario, sample.z)
    error = rmse(estimated, truth, ModelConstants.RMSE_TRUE_FDR_CUT)
    fdrs, fnrs = [], []
    for t in thresholds:
        fdr, fnr = empirical_fdr_fnr(threshold_decisions(estimated, t), sample.labels)
        fdrs.append(fdr)
        fnrs.append(fnr)

    _, points = curve_grid(scenario.dimension)
    curve = fdr_eval(model, points)
    return RunMetrics(run_index, seed, model.p0, error, fdrs, fnrs,
                      trace.iterations, trace.converged, curve)


def _run_task(task: Tuple) -> Tuple[int, Optional[RunMetrics], Optional[str]]:
    """Executa uma réplica e devolve o erro como texto (corre também em processos filhos)"""
    scenario_id, n, run_index, seed, thresholds, config = task
    try:
        return run_index, run_single(scenario_id, n, run_index, seed, thresholds, config), None
    except Exception as e:
        return run_index, None, f"{e.__class__.__name__}: {e}"


def _check_thresholds(thresholds: Optional[Sequence[float]]) -> List[float]:
    values = [float(t) for t in (thresholds if thresholds is not None else ModelConstants.THRESHOLDS)]
    if not values:
        raise InvalidInputError("At least one threshold is required")
    for t in values:
        if not 0.0 < t < 1.0:
            raise InvalidInputError(f"thresholds must lie in (0, 1), got {t}")
    return values


class BenchmarkService(Subject):
    """
    Serviço de benchmark com réplicas em paralelo

    Os resultados são agregados pela ordem do índice da réplica, por isso o
    relatório não depende do número de processos.
    """

    def run(self, scenario: Union[Scenario, str], n: int, m: int,
            thresholds: Optional[Sequence[float]] = None, master_seed: int = 0,
            workers: Optional[int] = None, config: Optional[EmConfig] = None) -> MetricsReport:
        """
        Corre o benchmark

        Args:
            scenario: Scenario ou identificador
            n: Observações por réplica (>= 10)
            m: Número de réplicas (>= 1)
            thresholds: Limiares de fdr (omissão 0.05…0.25)
            master_seed: Semente de onde derivam as sementes das réplicas
            workers: Processos (omissão FDRMIX_THREADS); 1 corre no processo actual
            config: EmConfig base (init_seed é substituído pela semente da réplica)

        Raises:
            BenchmarkIntegrityError: Mais de 10% das réplicas falharam
        """
        scenario = scenario if isinstance(scenario, Scenario) else get_scenario(scenario)
        n, m = int(n), int(m)
        if m < 1:
            raise InvalidInputError(f"m must be >= 1, got {m}")
        if n < ModelConstants.INIT_MIN_SIZE:
            raise InvalidInputError(f"n must be >= {ModelConstants.INIT_MIN_SIZE}, got {n}")
        levels = _check_thresholds(thresholds)
        workers = max(1, min(int(workers or get_settings().threads), m))
        base_config = (config or EmConfig()).to_dict()

        tasks = [(scenario.scenario_id, n, i, derive_seed(master_seed, i), levels, base_config)
                 for i in range(m)]
        self.notify(BenchmarkEventTypes.BENCHMARK_STARTED,
                    {'scenario': scenario.scenario_id, 'm': m, 'n': n, 'workers': workers})
        self.logger.info(f"Benchmark {scenario.scenario_id}: M={m}, N={n}, workers={workers}")

        results = {}
        if workers == 1:
            for task in tasks:
                self._collect(results, _run_task(task), m)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_task, task) for task in tasks]
                for future in as_completed(futures):
                    self._collect(results, future.result(), m)

        runs = [results[i][0] for i in range(m) if results[i][0] is not None]
        failures = [(i, results[i][1]) for i in range(m) if results[i][0] is None]
        if len(failures) > ModelConstants.MAX_FAILURE_RATIO * m:
            raise BenchmarkIntegrityError(len(failures), m)

        t, points = curve_grid(scenario.dimension)
        report = MetricsReport(scenario.scenario_id, n, m, levels, master_seed, runs, failures,
                               curve_grid=t, true_curve=true_fdr(scenario, points))
        self.notify(BenchmarkEventTypes.BENCHMARK_COMPLETE, {'summary': str(report)})
        return report

    def _collect(self, results: Dict, outcome: Tuple, m: int):
        run_index, metrics, error = outcome
        results[run_index] = (metrics, error)
        if metrics is None:
            self.logger.error(f"Run {run_index} failed: {error}")
            self.notify(BenchmarkEventTypes.RUN_FAILED, {'run_index': run_index, 'error': error})
        self.notify(BenchmarkEventTypes.RUN_COMPLETE, {'completed': len(results), 'm': m})


def run_benchmark(scenario: Union[Scenario, str], n: int, m: int,
                  thresholds: Optional[Sequence[float]] = None, master_seed: int = 0,
                  workers: Optional[int] = None, config: Optional[EmConfig] = None,
                  observers: Optional[List] = None) -> MetricsReport:
    service = BenchmarkService()
    for observer in observers or []:
        service.attach(observer)
    return service.run(scenario, n, m, thresholds, master_seed, workers, config)


def compare_fnr(bivariate: MetricsReport, univariate: MetricsReport, threshold: float = 0.2) -> Dict:
    """
    FNR empírico médio bivariado vs univariado num limiar (verificação indicativa)

    O resultado é só registado; nada falha quando o bivariado não é menor.
    """
    biv_mean, biv_se = bivariate.fnr_summary(bivariate.threshold_index(threshold))
    uni_mean, uni_se = univariate.fnr_summary(univariate.threshold_index(threshold))
    lower = biv_mean < uni_mean
    log = logging.getLogger(__name__)
    message = (f"FNR at {threshold:g}: {bivariate.scenario_id} {biv_mean:.4f} ({biv_se:.4f}) vs "
               f"{univariate.scenario_id} {uni_mean:.4f} ({uni_se:.4f})")
    if lower:
        log.info(message)
    else:
        log.warning(message + " (bivariate not lower)")
    return {
        'threshold': float(threshold),
        'bivariate': {'scenario': bivariate.scenario_id, 'fnr_mean': biv_mean, 'fnr_se': biv_se},
        'univariate': {'scenario': univariate.scenario_id, 'fnr_mean': uni_mean, 'fnr_se': uni_se},
        'bivariate_lower': bool(lower),
    }


def plot_data(report: MetricsReport) -> Dict:
    """Dados para boxplots (p0, FDR e FNR por limiar) e curvas de fdr por réplica"""
    runs = report.runs
    boxplots = {
        'p0': five_number_summary([r.p0_estimate for r in runs]) if runs else None,
        'rmse': five_number_summary([r.rmse for r in runs]) if runs else None,
        'fdr': [], 'fnr': [],
    }
    for i, t in enumerate(report.thresholds):
        boxplots['fdr'].append({'threshold': t, **five_number_summary(report.fdr_values(i))} if runs else None)
        boxplots['fnr'].append({'threshold': t, **five_number_summary(report.fnr_values(i))} if runs else None)
    grid = report.curve_grid
    return {
        'scenario': report.scenario_id,
        'n': report.n,
        'm': report.m,
        'thresholds': report.thresholds,
        'boxplots': boxplots,
        'values': {
            'p0': [r.p0_estimate for r in runs],
            'rmse': [r.rmse for r in runs],
            'fdr': [report.fdr_values(i) for i in range(len(report.thresholds))],
            'fnr': [report.fnr_values(i) for i in range(len(report.thresholds))],
        },
        'fdr_curves': {
            'grid': grid.tolist() if grid is not None else [],
            'true': report.true_curve or [],
            'runs': [{'run_index': r.run_index, 'fdr': r.fdr_curve} for r in runs],
        },
    }
