"""
Acesso a ficheiros
"""

import os
from contextlib import contextmanager

from utils.exceptions import InputParseError, StorageError


class FileStore:
    """
    Gestor de ficheiros de texto

    OSError passa a StorageError; bytes que não descodificam passam a
    InputParseError com a linha onde aparecem.
    """

    def __init__(self, encoding: str = 'utf-8'):
        self.encoding = encoding

    @contextmanager
    def open(self, path: str, mode: str = 'w'):
        """
        Abre um ficheiro de texto para escrita (as pastas em falta são criadas)

        Args:
            path: Caminho do ficheiro
            mode: 'w' ou 'a'
        """
        handle = None
        try:
            parent = os.path.dirname(os.path.abspath(path))
            os.makedirs(parent, exist_ok=True)
            handle = open(path, mode, encoding=self.encoding, newline='')
            yield handle
        except OSError as e:
            raise StorageError(f"Cannot access {path}: {e}") from e
        finally:
            if handle:
                handle.close()

    def read_text(self, path: str) -> str:
        """Conteúdo do ficheiro, sem conversão de fins de linha"""
        try:
            with open(path, 'rb') as handle:
                raw = handle.read()
        except OSError as e:
            raise StorageError(f"Cannot access {path}: {e}") from e
        try:
            return raw.decode(self.encoding)
        except UnicodeDecodeError as e:
            line = raw[:e.start].count(b'\n') + 1
            raise InputParseError(
                f"{path} is not valid {self.encoding} text (byte {raw[e.start]:#04x})", line
            ) from None

    def write_text(self, path: str, text: str):
        with self.open(path, 'w') as handle:
            handle.write(text)
