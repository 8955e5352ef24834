"""
Artefacto de ajuste (mistura serializada + metadados do EM)
"""

from typing import Dict, Optional

from utils.exceptions import FdrMixError, InvalidInputError
from .constants import ModelConstants
from .mixture import EmConfig, EmTrace, MixtureModel


class FitArtifact:
    """Conteúdo do ficheiro JSON escrito por `fdrmix fit`"""

    def __init__(self, model: MixtureModel, trace: EmTrace, config: EmConfig,
                 pvalue_input: bool = False, source: str = ""):
        self._model = model
        self._trace = trace
        self._config = config
        self._pvalue_input = bool(pvalue_input)
        self._source = source

    @property
    def model(self) -> MixtureModel:
        return self._model

    @property
    def trace(self) -> EmTrace:
        return self._trace

    @property
    def config(self) -> EmConfig:
        return self._config

    @property
    def dimension(self) -> int:
        return self._model.dimension

    @property
    def pvalue_input(self) -> bool:
        return self._pvalue_input

    @property
    def source(self) -> str:
        return self._source

    def to_dict(self) -> Dict:
        return {
            'format_version': ModelConstants.FORMAT_VERSION,
            'dimension': self.dimension,
            'model': self._model.to_dict(),
            'fit': {
                'iterations': self._trace.iterations,
                'converged': self._trace.converged,
                'log_likelihood': self._trace.best_log_likelihood if self._trace.iterations else None,
                'best_iteration': self._trace.best_iteration,
                'init_fallback': self._trace.init_fallback,
                'indeterminate_responsibilities': self._trace.indeterminate_responsibilities,
            },
            'config': self._config.to_dict(),
            'input': {'pvalue': self._pvalue_input, 'source': self._source},
            'trace': self._trace.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'FitArtifact':
        if not isinstance(data, dict):
            raise InvalidInputError(f"fit artifact must be an object, got {type(data).__name__}")
        version = data.get('format_version')
        if version != ModelConstants.FORMAT_VERSION:
            raise InvalidInputError(f"unsupported artifact format_version {version!r}")
        try:
            model = MixtureModel.from_dict(data['model'])
            trace = EmTrace.from_dict(data.get('trace', {}))
            config = EmConfig.from_dict(data.get('config', {}))
        except FdrMixError:
            raise
        except (KeyError, TypeError, AttributeError, IndexError, ValueError) as e:
            raise InvalidInputError(f"malformed fit artifact: {e!r}") from e
        source_info: Optional[Dict] = data.get('input')
        if not isinstance(source_info, dict):
            source_info = {}
        return cls(model, trace, config,
                   pvalue_input=source_info.get('pvalue', False),
                   source=source_info.get('source', ""))

    def __repr__(self) -> str:
        return f"FitArtifact({self._model}, iterations={self._trace.iterations})"
