"""
Tabela numérica lida de um ficheiro delimitado
"""

from typing import Dict, List, Optional

import numpy as np

from utils.exceptions import InvalidInputError

LABEL_COLUMN = 'label'
PVALUE_COLUMN = 'pvalue'
# nomes aceites quando o cabeçalho é detectado automaticamente
HEADER_NAMES = ('z', 'z1', 'z2', PVALUE_COLUMN, LABEL_COLUMN)


class InputTable:
    """
    Colunas numéricas de um ficheiro de entrada

    Uma coluna chamada 'label' (como nos ficheiros simulados) não conta como
    dado; uma coluna 'pvalue' indica p-values a transformar em z.
    """

    def __init__(self, values, header: Optional[List[str]] = None, source: str = ""):
        arr = np.asarray(values, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[1] == 0:
            raise InvalidInputError(f"table must be two-dimensional, got shape {arr.shape}")
        if header is not None and len(header) != arr.shape[1]:
            raise InvalidInputError(
                f"header has {len(header)} columns but rows have {arr.shape[1]}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("table contains non-finite cells")
        self._values = arr
        self._header = [h.strip() for h in header] if header is not None else None
        self._source = source
        self._values.setflags(write=False)

    @property
    def header(self) -> Optional[List[str]]:
        return list(self._header) if self._header is not None else None

    @property
    def source(self) -> str:
        return self._source

    @property
    def row_count(self) -> int:
        return int(self._values.shape[0])

    def _lowered(self) -> List[str]:
        return [h.lower() for h in self._header] if self._header else []

    def _data_indices(self) -> List[int]:
        names = self._lowered()
        return [i for i in range(self._values.shape[1])
                if not names or names[i] != LABEL_COLUMN]

    @property
    def dimension(self) -> int:
        return len(self._data_indices())

    @property
    def has_pvalue_column(self) -> bool:
        return PVALUE_COLUMN in self._lowered()

    @property
    def data(self) -> np.ndarray:
        """Colunas de dados: shape (N,) se 1 coluna, (N, 2) se 2"""
        block = self._values[:, self._data_indices()]
        return block[:, 0] if block.shape[1] == 1 else block

    @property
    def labels(self) -> Optional[np.ndarray]:
        names = self._lowered()
        if LABEL_COLUMN not in names:
            return None
        return self._values[:, names.index(LABEL_COLUMN)].astype(np.int8)

    def to_dict(self) -> Dict:
        return {'source': self._source, 'header': self._header,
                'rows': self.row_count, 'dimension': self.dimension}

    def __repr__(self) -> str:
        return f"InputTable(source={self._source!r}, rows={self.row_count}, dimension={self.dimension})"
