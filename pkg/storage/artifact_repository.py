"""
Artifact Repository
"""

import json
from typing import Optional

import numpy as np

from models.fit_artifact import FitArtifact
from utils.exceptions import InputParseError, InvalidInputError
from .file_store import FileStore


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def dumps(data) -> str:
    """JSON estável (chaves pela ordem de inserção, floats em repr mais curto)"""
    return json.dumps(data, indent=2, default=_json_default, allow_nan=False) + "\n"


class ArtifactRepository:
    """Repository para artefactos de ajuste em JSON"""

    def __init__(self, store: Optional[FileStore] = None):
        self.store = store or FileStore()

    def save(self, artifact: FitArtifact, path: str):
        self.store.write_text(path, dumps(artifact.to_dict()))

    def load(self, path: str) -> FitArtifact:
        """
        Lê um artefacto

        Raises:
            InputParseError: JSON inválido
            InvalidInputError: Estrutura ou format_version inválidos
        """
        text = self.store.read_text(path)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise InputParseError(f"invalid JSON in {path}: {e.msg}", e.lineno) from e
        if not isinstance(data, dict):
            raise InvalidInputError(f"{path} holds a JSON {type(data).__name__}, not a fit artifact object")
        return FitArtifact.from_dict(data)
