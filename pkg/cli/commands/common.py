"""
Partes comuns dos sub-comandos: códigos de saída, leitura de dados, observadores
"""

import functools
import logging
import sys
from typing import Callable

import numpy as np

from models.input_table import InputTable
from services.logconcave_service import probit_transform
from utils.exceptions import (
    DimensionMismatchError,
    FdrMixError,
    InputParseError,
    InvalidInputError,
    PosteriorCollapseError,
    StorageError,
    UnknownScenarioError,
)
from utils.observers import ConsoleProgressObserver, FitLogObserver

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_COLLAPSE = 3
EXIT_IO = 4
EXIT_DIMENSION = 5


def exit_code_for(error: Exception) -> int:
    """Código de saída de uma excepção do pacote (a ordem importa: subclasses primeiro)"""
    if isinstance(error, DimensionMismatchError):
        return EXIT_DIMENSION
    if isinstance(error, (InputParseError, UnknownScenarioError, InvalidInputError)):
        return EXIT_USAGE
    if isinstance(error, PosteriorCollapseError):
        return EXIT_COLLAPSE
    if isinstance(error, StorageError):
        return EXIT_IO
    return EXIT_FAILURE


def guarded(command: Callable) -> Callable:
    """Converte excepções em mensagem no stderr e código de saída (nunca um traceback)"""

    @functools.wraps(command)
    def wrapper(args) -> int:
        try:
            return command(args)
        except FdrMixError as e:
            code = exit_code_for(e)
            logging.getLogger('cli').debug(f"{command.__name__} failed", exc_info=True)
            print(f"❌ {e.__class__.__name__}: {e}", file=sys.stderr)
            return code
        except Exception as e:
            logging.getLogger('cli').debug(f"{command.__name__} crashed", exc_info=True)
            print(f"❌ Unexpected error ({e.__class__.__name__}): {e}", file=sys.stderr)
            return EXIT_FAILURE

    return wrapper


def add_table_options(parser):
    parser.add_argument('--delimiter', default=',', help="column delimiter (default ',')")
    parser.add_argument('--no-header', dest='header', action='store_const', const=False, default=None,
                        help="treat the first row as data (default: detect a header)")
    parser.add_argument('--pvalue', action='store_true',
                        help="input holds p-values; use z = Φ⁻¹(1 - p)")


def observations(table: InputTable, pvalue: bool) -> np.ndarray:
    """Dados da tabela, com transformação probit se forem p-values"""
    if table.dimension > 2:
        raise InvalidInputError(f"expected 1 or 2 data columns, found {table.dimension}")
    data = table.data
    if pvalue or table.has_pvalue_column:
        return probit_transform(data)
    return data


def observers_for(args):
    """Observadores: log sempre, consola com --verbose"""
    attached = [FitLogObserver()]
    if getattr(args, 'verbose', False):
        attached.append(ConsoleProgressObserver(every=10, stream=sys.stdout))
    return attached
