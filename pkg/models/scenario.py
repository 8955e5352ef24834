"""
Cenários de simulação e amostras rotuladas
"""

from typing import Dict, Tuple

import numpy as np

from utils.exceptions import InvalidInputError, UnknownScenarioError

NULL_LABEL = 0
ALTERNATIVE_LABEL = 1

BIVARIATE_BASE_COVARIANCE = ((1.0, 0.3), (0.3, 1.0))


class ShiftSpec:
    """
    Distribuição do efeito δ somado ao ruído base

    kind 'normal': params (mean, variance), aplicado a cada coordenada com
    covariância variance * I. kind 'gamma': params (shape, scale), coordenadas iid.
    """

    KINDS = ('normal', 'gamma')

    def __init__(self, kind: str, params: Tuple[float, float]):
        if kind not in self.KINDS:
            raise InvalidInputError(f"unknown shift kind {kind!r}")
        a, b = (float(v) for v in params)
        if b <= 0 or (kind == 'gamma' and a <= 0):
            raise InvalidInputError(f"invalid {kind} parameters {params}")
        self._kind = kind
        self._params = (a, b)

    @property
    def kind(self) -> str:
        return self._kind

    @property
    def params(self) -> Tuple[float, float]:
        return self._params

    @property
    def mean(self) -> float:
        a, b = self._params
        return a if self._kind == 'normal' else a * b

    @property
    def variance(self) -> float:
        a, b = self._params
        return b if self._kind == 'normal' else a * b * b

    def to_dict(self) -> Dict:
        return {'kind': self._kind, 'params': list(self._params)}

    def __str__(self) -> str:
        a, b = self._params
        if self._kind == 'normal':
            return f"N({a:g}, {b:g})"
        return f"Gamma({a:g}, {b:g})"

    def __repr__(self) -> str:
        return f"ShiftSpec({self._kind!r}, {self._params})"


class Scenario:
    """
    Modelo gerador: ruído base N(0, 1) (ou N(0, Σ) em 2-D) somado a um efeito δ

    Nulos recebem δ ~ null_shift e alternativas δ ~ alt_shift.
    """

    def __init__(self, scenario_id: str, p0: float, dimension: int,
                 null_shift: ShiftSpec, alt_shift: ShiftSpec):
        self._id = scenario_id
        self._p0 = float(p0)
        self._dimension = int(dimension)
        self._null_shift = null_shift
        self._alt_shift = alt_shift

    @property
    def scenario_id(self) -> str:
        return self._id

    @property
    def p0(self) -> float:
        return self._p0

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def null_shift(self) -> ShiftSpec:
        return self._null_shift

    @property
    def alt_shift(self) -> ShiftSpec:
        return self._alt_shift

    @property
    def base_covariance(self) -> np.ndarray:
        if self._dimension == 1:
            return np.array([[1.0]])
        return np.array(BIVARIATE_BASE_COVARIANCE)

    @property
    def paired_univariate_id(self) -> str:
        """Cenário univariado com as mesmas marginais"""
        return 'U' + self._id[1:]

    def to_dict(self) -> Dict:
        return {
            'id': self._id,
            'p0': self._p0,
            'dimension': self._dimension,
            'null_shift': self._null_shift.to_dict(),
            'alt_shift': self._alt_shift.to_dict(),
        }

    def __str__(self) -> str:
        base = "N(0,1)" if self._dimension == 1 else "N(0,Σ)"
        return (f"{self._id}: p0={self._p0:g}, f0={base}*{self._null_shift}, "
                f"f1={base}*{self._alt_shift}")

    def __repr__(self) -> str:
        return f"Scenario({self._id!r})"


def _build_registry() -> Dict[str, Scenario]:
    null_shift = ShiftSpec('normal', (0.0, 1e-6))
    normal_alt = ShiftSpec('normal', (3.5, 0.5))
    # shape 12, scale 0.25: média 3, variância 0.75
    gamma_alt = ShiftSpec('gamma', (12.0, 0.25))
    registry = {}
    for prefix, dimension in (('U', 1), ('B', 2)):
        for index, p0 in enumerate((0.95, 0.90, 0.80, 0.95, 0.90, 0.80), start=1):
            alt = normal_alt if index <= 3 else gamma_alt
            sid = f"{prefix}{index}"
            registry[sid] = Scenario(sid, p0, dimension, null_shift, alt)
    return registry


SCENARIOS: Dict[str, Scenario] = _build_registry()


def get_scenario(scenario_id: str) -> Scenario:
    """
    Obtém um cenário pelo identificador (U1-U6, B1-B6)

    Raises:
        UnknownScenarioError: Se o identificador não existir
    """
    key = str(scenario_id).strip().upper()
    if key not in SCENARIOS:
        raise UnknownScenarioError(scenario_id)
    return SCENARIOS[key]


class LabeledSample:
    """Amostra simulada com os rótulos verdadeiros (0 = nulo, 1 = alternativa)"""

    def __init__(self, z, labels, seed: int, scenario_id: str):
        z = np.asarray(z, dtype=float)
        labels = np.asarray(labels, dtype=np.int8)
        if z.shape[0] != labels.shape[0]:
            raise InvalidInputError("z and labels must have the same length")
        self._z = z
        self._labels = labels
        self._seed = int(seed)
        self._scenario_id = scenario_id
        self._z.setflags(write=False)
        self._labels.setflags(write=False)

    @property
    def z(self) -> np.ndarray:
        return self._z

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def is_null(self) -> np.ndarray:
        return self._labels == NULL_LABEL

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def scenario_id(self) -> str:
        return self._scenario_id

    @property
    def dimension(self) -> int:
        return 1 if self._z.ndim == 1 else self._z.shape[1]

    def __len__(self) -> int:
        return int(self._z.shape[0])

    def __repr__(self) -> str:
        return (f"LabeledSample(scenario={self._scenario_id!r}, n={len(self)}, "
                f"null_fraction={float(self.is_null.mean()) if len(self) else 0.0:.4f})")
