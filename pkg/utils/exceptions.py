"""
Excepções do fdrmix

Todas derivam de FdrMixError; as de validação também derivam de ValueError
para que quem já apanha ValueError continue a funcionar.
"""

from typing import Any, Optional


class FdrMixError(Exception):
    """Erro base do pacote"""


class InvalidInputError(FdrMixError, ValueError):
    """Entrada inválida (valores não finitos, fora do domínio, etc.)"""


class DegenerateSampleError(InvalidInputError):
    """Amostra univariada com menos de 2 pontos distintos com peso positivo"""


class DegenerateSupportError(InvalidInputError):
    """Amostra bivariada sem envelope convexo 2-D (pontos colineares)"""


class UnknownScenarioError(InvalidInputError):
    """Identificador de cenário desconhecido"""

    def __init__(self, scenario_id: str):
        super().__init__(f"Unknown scenario id: {scenario_id!r}")
        self.scenario_id = scenario_id


class DimensionMismatchError(InvalidInputError):
    """Dimensão do artefacto diferente da dimensão dos dados"""


class InputParseError(InvalidInputError):
    """Falha ao interpretar uma tabela de entrada"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class NonConvergenceError(FdrMixError):
    """
    O algoritmo atingiu o limite de iterações sem verificar a condição de optimalidade

    Attributes:
        best: Melhor iterado encontrado (densidade já construída)
        iterations: Número de iterações efectuadas
    """

    def __init__(self, message: str, best: Any = None, iterations: int = 0):
        super().__init__(message)
        self.best = best
        self.iterations = iterations


class PosteriorCollapseError(FdrMixError):
    """Responsabilidades concentradas numa só componente"""

    def __init__(self, side: str, effective: float):
        super().__init__(
            f"Posterior collapse on the {side} side: "
            f"effective observations {effective:.6g} < 1"
        )
        self.side = side
        self.effective = effective


class UndefinedMetricError(FdrMixError):
    """Métrica sem observações elegíveis"""


class BenchmarkIntegrityError(FdrMixError):
    """Demasiadas réplicas Monte Carlo falharam"""

    def __init__(self, failures: int, total: int):
        super().__init__(f"{failures} of {total} Monte Carlo runs failed")
        self.failures = failures
        self.total = total


class StorageError(FdrMixError):
    """Erro de leitura/escrita de ficheiros"""


class BandwidthClippedWarning(UserWarning):
    """A diferença de variâncias foi negativa e a largura de banda foi cortada em 0"""
