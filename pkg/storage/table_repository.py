"""
Table Repository
"""

import csv
import io
import math
from typing import List, Optional, Sequence

from models.constants import ModelConstants
from models.input_table import HEADER_NAMES, InputTable
from utils.exceptions import InputParseError, InvalidInputError
from .file_store import FileStore


def format_cell(value) -> str:
    """Texto de uma célula: floats com 17 algarismos significativos, '.' decimal"""
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or hasattr(value, 'dtype'):
        if hasattr(value, 'dtype') and value.dtype.kind == 'b':
            return 'true' if bool(value) else 'false'
        if hasattr(value, 'dtype') and value.dtype.kind in 'iu':
            return str(int(value))
        return ModelConstants.FLOAT_FORMAT % float(value)
    return str(value)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def _read_rows(reader):
    """Linhas do leitor csv; csv.Error passa a InputParseError"""
    while True:
        try:
            row = next(reader)
        except StopIteration:
            return
        except csv.Error as e:
            raise InputParseError(f"malformed delimited text: {e}", reader.line_num) from None
        yield row


class TableRepository:
    """Repository para tabelas delimitadas (entrada de dados e CSV de saída)"""

    def __init__(self, store: Optional[FileStore] = None):
        self.store = store or FileStore()

    @staticmethod
    def _is_header(cells: List[str], header: Optional[bool], line_number: int) -> bool:
        """
        A primeira linha é cabeçalho?

        Com detecção automática, uma linha não numérica só é cabeçalho se
        todos os nomes forem conhecidos (HEADER_NAMES).
        """
        if header is not None:
            return header
        if all(_is_number(c) for c in cells):
            return False
        unknown = [c for c in cells if c.lower() not in HEADER_NAMES]
        if unknown:
            raise InputParseError(
                f"first row {cells!r} is neither numeric nor a header of "
                f"{', '.join(HEADER_NAMES)} (use --no-header for headerless data)", line_number
            )
        return True

    def parse(self, text: str, delimiter: str = ',', header: Optional[bool] = None,
              source: str = "") -> InputTable:
        """
        Interpreta o texto de uma tabela

        Args:
            text: Conteúdo do ficheiro
            delimiter: Separador de colunas
            header: True/False força; None detecta (primeira linha com nomes conhecidos)
            source: Nome para mensagens

        Raises:
            InputParseError: Célula inválida, cabeçalho desconhecido, número de colunas
                inconsistente, texto delimitado mal formado ou tabela vazia
        """
        names = None
        rows: List[List[float]] = []
        width = None
        first = True
        try:
            reader = csv.reader(io.StringIO(text), delimiter=delimiter)
        except TypeError as e:
            raise InvalidInputError(f"invalid delimiter {delimiter!r}: {e}") from None
        for row in _read_rows(reader):
            line_number = reader.line_num
            cells = [c.strip() for c in row]
            if not cells or all(c == '' for c in cells):
                continue
            if first:
                first = False
                if self._is_header(cells, header, line_number):
                    names = cells
                    width = len(cells)
                    continue
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise InputParseError(f"expected {width} columns, found {len(cells)}", line_number)
            values = []
            for cell in cells:
                try:
                    number = float(cell)
                except ValueError:
                    raise InputParseError(f"cannot parse {cell!r} as a number", line_number) from None
                if not math.isfinite(number):
                    raise InputParseError(f"non-finite value {cell!r}", line_number)
                values.append(number)
            rows.append(values)
        if not rows:
            raise InputParseError(f"no data rows in {source or 'input'}")
        return InputTable(rows, header=names, source=source)

    def read(self, path: str, delimiter: str = ',', header: Optional[bool] = None) -> InputTable:
        return self.parse(self.store.read_text(path), delimiter, header, source=path)

    def write(self, path: str, header: Sequence[str], rows: Sequence[Sequence], delimiter: str = ','):
        """Escreve CSV com cabeçalho"""
        with self.store.open(path, 'w') as handle:
            writer = csv.writer(handle, delimiter=delimiter, lineterminator='\n')
            writer.writerow(list(header))
            for row in rows:
                writer.writerow([format_cell(v) for v in row])
