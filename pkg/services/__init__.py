"""
Services package for fdrmix
"""

import logging

from utils.settings import get_settings

logger = logging.getLogger(__name__)
logger.setLevel(get_settings().log_level)

if not logger.handlers:
    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.DEBUG)

    formatter = logging.Formatter('[FDRMIX] %(levelname)s - %(message)s')
    console_handler.setFormatter(formatter)

    logger.addHandler(console_handler)

from .logconcave_service import (  # noqa: E402
    BandwidthChoice,
    logconcave_mle,
    mle_variance,
    choose_bandwidth,
    select_bandwidth,
    smooth,
    smoothed_pdf,
    fit_smoothed,
    probit_transform,
)
from .tent_service import (  # noqa: E402
    BandwidthMatrixChoice,
    concave_envelope,
    logconcave_mle_2d,
    covariance_of,
    choose_bandwidth_2d,
    select_bandwidth_2d,
    smooth_2d,
    smoothed_pdf_2d,
    fit_smoothed_2d,
)
from .mixture_service import (  # noqa: E402
    GaussianMixtureInit,
    MStepResult,
    MixtureService,
    init_gaussian_mixture,
    e_step,
    m_step,
    em_fit,
    fdr_eval,
    threshold_decisions,
    log_likelihood,
)
from .simulation_service import (  # noqa: E402
    generate,
    true_density,
    true_fdr,
    rmse,
    empirical_fdr_fnr,
    splitmix64,
    derive_seed,
)
from .benchmark_service import BenchmarkService, run_benchmark, compare_fnr, plot_data, curve_grid  # noqa: E402

__version__ = "1.0.0"

__all__ = [
    'BandwidthChoice', 'logconcave_mle', 'mle_variance', 'choose_bandwidth', 'select_bandwidth',
    'smooth', 'smoothed_pdf', 'fit_smoothed', 'probit_transform',
    'BandwidthMatrixChoice', 'concave_envelope', 'logconcave_mle_2d', 'covariance_of',
    'choose_bandwidth_2d', 'select_bandwidth_2d', 'smooth_2d', 'smoothed_pdf_2d', 'fit_smoothed_2d',
    'GaussianMixtureInit', 'MStepResult', 'MixtureService', 'init_gaussian_mixture', 'e_step',
    'm_step', 'em_fit', 'fdr_eval', 'threshold_decisions', 'log_likelihood',
    'generate', 'true_density', 'true_fdr', 'rmse', 'empirical_fdr_fnr', 'splitmix64', 'derive_seed',
    'BenchmarkService', 'run_benchmark', 'compare_fnr', 'plot_data', 'curve_grid',
]
