"""
Constantes numéricas usadas pelos modelos e serviços
"""

import numpy as np

from utils.exceptions import InvalidInputError


class ModelConstants:
    """Constantes usadas nos modelos"""
    WEIGHT_SUM_TOL = 1e-12
    WEIGHT_DROP_RATIO = 1e-12      # pesos < ratio * max(peso) são descartados

    MLE_TOL = 1e-10
    MLE_MAX_ITER = 500

    TENT_TOL = 1e-8
    TENT_MAX_ITER = 2000
    TENT_WINDOW = 10
    SMOOTHING_PANEL_WIDTH = 2.0    # em desvios-padrão do núcleo
    SMOOTHING_PANEL_ORDER = 8
    SMOOTHING_MAX_PANELS = 4096
    KERNEL_RANK_RATIO = 1e-4

    EM_MAX_ITER = 200
    EM_REL_TOL = 1e-6
    INIT_ITERATIONS = 50
    INIT_MIN_SIZE = 10
    INIT_MIN_VARIANCE = 1e-10
    INIT_FALLBACK_P0 = 0.9
    COLLAPSE_MIN_EFFECTIVE = 1.0

    THRESHOLDS = (0.05, 0.10, 0.15, 0.20, 0.25)
    RMSE_TRUE_FDR_CUT = 0.5
    MAX_FAILURE_RATIO = 0.10

    PLOT_GRID_1D = (-4.0, 8.0, 121)
    PLOT_GRID_DIAGONAL = (-4.0, 8.0, 121)

    FORMAT_VERSION = 1
    FLOAT_FORMAT = '%.17g'


def validate_finite(values, name: str = "values") -> np.ndarray:
    """
    Converte para array de floats e garante que todos os valores são finitos

    Args:
        values: Valor escalar ou sequência
        name: Nome usado na mensagem de erro

    Returns:
        np.ndarray: Valores como float64

    Raises:
        InvalidInputError: Se existir algum NaN/inf
    """
    try:
        arr = np.asarray(values, dtype=float)
    except (TypeError, ValueError) as e:
        raise InvalidInputError(f"{name} must be numeric: {e}") from e
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr.ravel()))[0])
        raise InvalidInputError(f"{name} contains a non-finite value at index {bad}")
    return arr
