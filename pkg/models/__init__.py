"""
Models package for fdrmix
"""

from .constants import ModelConstants, validate_finite
from .weighted_sample import (
    WeightedSample1D,
    WeightedSample2D,
    weighted_sample_variance,
    weighted_sample_covariance,
)
from .logconcave_density import PiecewiseLogLinearDensity, SmoothedLogConcave, probit_log_density
from .tent_density import TentDensity2D, SmoothedTent2D
from .mixture import MixtureModel, EmConfig, EmIterationRecord, EmTrace
from .scenario import Scenario, ShiftSpec, LabeledSample, SCENARIOS, get_scenario
from .metrics_report import MetricsReport, RunMetrics
from .input_table import InputTable
from .fit_artifact import FitArtifact

__version__ = "1.0.0"

__all__ = [
    'ModelConstants',
    'validate_finite',
    'WeightedSample1D',
    'WeightedSample2D',
    'weighted_sample_variance',
    'weighted_sample_covariance',
    'PiecewiseLogLinearDensity',
    'SmoothedLogConcave',
    'probit_log_density',
    'TentDensity2D',
    'SmoothedTent2D',
    'MixtureModel',
    'EmConfig',
    'EmIterationRecord',
    'EmTrace',
    'Scenario',
    'ShiftSpec',
    'LabeledSample',
    'SCENARIOS',
    'get_scenario',
    'MetricsReport',
    'RunMetrics',
    'InputTable',
    'FitArtifact',
]
