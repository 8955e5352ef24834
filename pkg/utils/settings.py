"""
Configuração a partir do ambiente (.env)
"""

import os
from dotenv import load_dotenv

load_dotenv()


class Settings:
    """Gestor de configuração do fdrmix"""

    def __init__(self):
        self.config = {
            'threads': self._read_int('FDRMIX_THREADS', os.cpu_count() or 1),
            'log_level': os.getenv('FDRMIX_LOG_LEVEL', 'WARNING').upper(),
            'slow_tests': os.getenv('FDRMIX_SLOW_TESTS', '0').strip().lower() in ('1', 'true', 'yes'),
        }

    @staticmethod
    def _read_int(name: str, default: int) -> int:
        raw = os.getenv(name)
        if raw is None or not raw.strip():
            return default
        try:
            return max(1, int(raw))
        except ValueError:
            print(f"⚠️  Warning: ignoring non-integer {name}={raw!r}")
            return default

    @property
    def threads(self) -> int:
        return self.config['threads']

    @property
    def log_level(self) -> str:
        return self.config['log_level']

    @property
    def slow_tests(self) -> bool:
        return self.config['slow_tests']

    def __repr__(self) -> str:
        return f"Settings({self.config})"


def get_settings() -> Settings:
    """Lê a configuração actual (o ambiente pode mudar entre chamadas)"""
    return Settings()
