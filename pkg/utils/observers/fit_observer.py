from utils.patterns.observer import Observer, FitEventTypes, BenchmarkEventTypes
import logging


class FitLogObserver(Observer):
    """
    Observador que regista no log todos os eventos de ajuste e de benchmark
    """

    _WARNING_EVENTS = (
        FitEventTypes.INIT_FALLBACK,
        FitEventTypes.BANDWIDTH_CLIPPED,
        FitEventTypes.INDETERMINATE_RESPONSIBILITIES,
    )

    def __init__(self):
        self.logger = logging.getLogger(self.__class__.__name__)
        self.event_count = {}

    def update(self, subject, event_type: str, data):
        self.event_count[event_type] = self.event_count.get(event_type, 0) + 1

        if event_type in self._WARNING_EVENTS:
            self.logger.warning(f"{event_type}: {data}")
        elif event_type == BenchmarkEventTypes.RUN_FAILED:
            self.logger.error(f"{event_type}: {data}")
        else:
            self.logger.debug(f"{event_type}: {data}")

    def get_event_stats(self):
        """Retorna estatísticas dos eventos"""
        return {
            'total_events': sum(self.event_count.values()),
            'event_breakdown': self.event_count.copy()
        }


class ConsoleProgressObserver(Observer):
    """
    Linhas curtas de progresso na consola (usado pela CLI com --verbose)
    """

    def __init__(self, every: int = 10, stream=None):
        self.every = max(1, int(every))
        self.stream = stream

    def _print(self, message: str):
        print(message, file=self.stream)

    def update(self, subject, event_type: str, data):
        data = data or {}
        if event_type == FitEventTypes.FIT_STARTED:
            self._print(f"🚀 Fitting {data.get('n', '?')} observations (dimension {data.get('dimension', '?')})")
        elif event_type == FitEventTypes.INIT_FALLBACK:
            self._print("⚠️  Gaussian-mixture start degenerate, using robust fallback")
        elif event_type == FitEventTypes.EM_ITERATION:
            iteration = data.get('iteration', 0)
            if iteration % self.every == 0:
                self._print(f"   iteration {iteration}: loglik {data.get('log_likelihood', float('nan')):.6f}, "
                            f"p0 {data.get('p0', float('nan')):.4f}")
        elif event_type == FitEventTypes.FIT_COMPLETE:
            status = "converged" if data.get('converged') else "stopped at iteration cap"
            self._print(f"✅ EM {status} after {data.get('iterations', '?')} iterations")
        elif event_type == BenchmarkEventTypes.BENCHMARK_STARTED:
            self._print(f"🎲 {data.get('scenario')}: {data.get('m')} runs of N={data.get('n')} "
                        f"on {data.get('workers')} worker(s)")
        elif event_type == BenchmarkEventTypes.RUN_COMPLETE:
            done = data.get('completed', 0)
            if done % self.every == 0 or done == data.get('m'):
                self._print(f"   {done}/{data.get('m')} runs done")
        elif event_type == BenchmarkEventTypes.RUN_FAILED:
            self._print(f"❌ run {data.get('run_index')} failed: {data.get('error')}")
        elif event_type == BenchmarkEventTypes.BENCHMARK_COMPLETE:
            self._print(f"✅ Benchmark complete: {data.get('summary')}")
