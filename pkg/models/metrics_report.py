"""
Resultados do benchmark Monte Carlo
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np


def mean_and_se(values: Sequence[float]) -> Tuple[float, float]:
    """Média e erro padrão sd/√M (0 com uma só observação)"""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return float('nan'), float('nan')
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(arr.size))


def five_number_summary(values: Sequence[float]) -> Dict[str, float]:
    """Mínimo, quartis e máximo (dados de boxplot)"""
    arr = np.asarray(values, dtype=float)
    q = np.quantile(arr, [0.0, 0.25, 0.5, 0.75, 1.0])
    return {'min': float(q[0]), 'q1': float(q[1]), 'median': float(q[2]),
            'q3': float(q[3]), 'max': float(q[4])}


class RunMetrics:
    """Métricas de uma réplica Monte Carlo"""

    def __init__(self, run_index: int, seed: int, p0_estimate: float, rmse: float,
                 fdr: Sequence[float], fnr: Sequence[float], iterations: int,
                 converged: bool, fdr_curve: Optional[Sequence[float]] = None):
        self.run_index = int(run_index)
        self.seed = int(seed)
        self.p0_estimate = float(p0_estimate)
        self.rmse = float(rmse)
        self.fdr = [float(v) for v in fdr]
        self.fnr = [float(v) for v in fnr]
        self.iterations = int(iterations)
        self.converged = bool(converged)
        self.fdr_curve = [float(v) for v in fdr_curve] if fdr_curve is not None else []

    def to_dict(self) -> Dict:
        return {
            'run_index': self.run_index,
            'seed': self.seed,
            'p0_estimate': self.p0_estimate,
            'rmse': self.rmse,
            'fdr': self.fdr,
            'fnr': self.fnr,
            'iterations': self.iterations,
            'converged': self.converged,
        }

    def __repr__(self) -> str:
        return f"RunMetrics(run={self.run_index}, p0={self.p0_estimate:.4f}, rmse={self.rmse:.4f})"


class MetricsReport:
    """
    Agregados sobre M réplicas: p0 estimado, RMSE, FDR e FNR empíricos por limiar

    As réplicas falhadas ficam registadas em failures (índice, mensagem) e
    não entram nos agregados.
    """

    def __init__(self, scenario_id: str, n: int, m: int, thresholds: Sequence[float],
                 master_seed: int, runs: List[RunMetrics],
                 failures: Optional[List[Tuple[int, str]]] = None,
                 curve_grid: Optional[np.ndarray] = None,
                 true_curve: Optional[Sequence[float]] = None):
        self._scenario_id = scenario_id
        self._n = int(n)
        self._m = int(m)
        self._thresholds = [float(t) for t in thresholds]
        self._master_seed = int(master_seed)
        self._runs = sorted(runs, key=lambda r: r.run_index)
        self._failures = sorted(failures or [])
        self._curve_grid = None if curve_grid is None else np.asarray(curve_grid, dtype=float)
        self._true_curve = None if true_curve is None else [float(v) for v in true_curve]

    @property
    def scenario_id(self) -> str:
        return self._scenario_id

    @property
    def n(self) -> int:
        return self._n

    @property
    def m(self) -> int:
        return self._m

    @property
    def thresholds(self) -> List[float]:
        return list(self._thresholds)

    @property
    def master_seed(self) -> int:
        return self._master_seed

    @property
    def runs(self) -> List[RunMetrics]:
        return list(self._runs)

    @property
    def failures(self) -> List[Tuple[int, str]]:
        return list(self._failures)

    @property
    def failure_count(self) -> int:
        return len(self._failures)

    @property
    def curve_grid(self) -> Optional[np.ndarray]:
        return self._curve_grid

    @property
    def true_curve(self) -> Optional[List[float]]:
        return self._true_curve

    def p0_summary(self) -> Tuple[float, float]:
        return mean_and_se([r.p0_estimate for r in self._runs])

    def rmse_summary(self) -> Tuple[float, float]:
        return mean_and_se([r.rmse for r in self._runs])

    def fdr_values(self, threshold_index: int) -> List[float]:
        return [r.fdr[threshold_index] for r in self._runs]

    def fnr_values(self, threshold_index: int) -> List[float]:
        return [r.fnr[threshold_index] for r in self._runs]

    def fdr_summary(self, threshold_index: int) -> Tuple[float, float]:
        return mean_and_se(self.fdr_values(threshold_index))

    def fnr_summary(self, threshold_index: int) -> Tuple[float, float]:
        return mean_and_se(self.fnr_values(threshold_index))

    def threshold_index(self, threshold: float) -> int:
        for i, t in enumerate(self._thresholds):
            if abs(t - threshold) < 1e-12:
                return i
        raise KeyError(f"threshold {threshold} not in report")

    def to_dict(self) -> Dict:
        p0_mean, p0_se = self.p0_summary()
        rmse_mean, rmse_se = self.rmse_summary()
        per_threshold = []
        for i, t in enumerate(self._thresholds):
            fdr_mean, fdr_se = self.fdr_summary(i)
            fnr_mean, fnr_se = self.fnr_summary(i)
            per_threshold.append({
                'threshold': t,
                'fdr_mean': fdr_mean, 'fdr_se': fdr_se,
                'fnr_mean': fnr_mean, 'fnr_se': fnr_se,
            })
        return {
            'scenario': self._scenario_id,
            'n': self._n,
            'm': self._m,
            'master_seed': self._master_seed,
            'thresholds': self._thresholds,
            'completed_runs': len(self._runs),
            'failed_runs': [{'run_index': i, 'error': msg} for i, msg in self._failures],
            'p0': {'mean': p0_mean, 'se': p0_se},
            'rmse': {'mean': rmse_mean, 'se': rmse_se},
            'per_threshold': per_threshold,
            'runs': [r.to_dict() for r in self._runs],
        }

    def csv_rows(self) -> List[List]:
        """Uma linha por réplica e por limiar"""
        rows = []
        for r in self._runs:
            for i, t in enumerate(self._thresholds):
                rows.append([self._scenario_id, r.run_index, r.seed, t,
                             r.p0_estimate, r.rmse, r.fdr[i], r.fnr[i]])
        return rows

    CSV_HEADER = ['scenario', 'run_index', 'seed', 'threshold',
                  'p0_estimate', 'rmse', 'fdr', 'fnr']

    def __str__(self) -> str:
        p0_mean, p0_se = self.p0_summary()
        rmse_mean, rmse_se = self.rmse_summary()
        return (f"{self._scenario_id} N={self._n} M={self._m}: "
                f"p0 {p0_mean:.4f} ({p0_se:.4f}), RMSE {rmse_mean:.4f} ({rmse_se:.4f}), "
                f"{self.failure_count} failed")

    def __repr__(self) -> str:
        return f"MetricsReport({self._scenario_id!r}, runs={len(self._runs)})"
