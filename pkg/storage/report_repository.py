"""
Report Repository
"""

from typing import Dict, Optional

from models.metrics_report import MetricsReport
from .artifact_repository import dumps
from .file_store import FileStore
from .table_repository import TableRepository


class ReportRepository:
    """Repository para relatórios de benchmark (JSON, CSV e dados de gráficos)"""

    def __init__(self, store: Optional[FileStore] = None):
        self.store = store or FileStore()
        self.tables = TableRepository(self.store)

    def save_json(self, report: MetricsReport, path: str):
        self.store.write_text(path, dumps(report.to_dict()))

    def save_csv(self, report: MetricsReport, path: str):
        self.tables.write(path, MetricsReport.CSV_HEADER, report.csv_rows())

    def save_plot_data(self, data: Dict, path: str):
        self.store.write_text(path, dumps(data))
