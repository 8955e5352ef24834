"""
Storage package for fdrmix
"""

from .file_store import FileStore
from .table_repository import TableRepository, format_cell
from .artifact_repository import ArtifactRepository
from .report_repository import ReportRepository

__version__ = "1.0.0"

__all__ = [
    'FileStore',
    'TableRepository',
    'format_cell',
    'ArtifactRepository',
    'ReportRepository',
]
