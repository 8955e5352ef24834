from . import fit_command, fdr_command, simulate_command, bench_command

__all__ = [
    'fit_command',
    'fdr_command',
    'simulate_command',
    'bench_command'
]
