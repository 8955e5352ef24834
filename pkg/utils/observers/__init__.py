from .fit_observer import FitLogObserver, ConsoleProgressObserver

__version__ = "1.0.0"

__all__ = [
    'FitLogObserver',
    'ConsoleProgressObserver'
]
