"""
fdrmix fit: ajusta a mistura a um ficheiro de z-values (ou p-values)
"""

import numpy as np

from models.fit_artifact import FitArtifact
from models.mixture import EmConfig
from services.mixture_service import MixtureService
from storage import ArtifactRepository, TableRepository
from utils.exceptions import DimensionMismatchError
from .common import EXIT_OK, add_table_options, guarded, observations, observers_for


def register(subparsers):
    parser = subparsers.add_parser('fit', help="fit the null/alternative mixture by EM")
    parser.add_argument('input', help="delimited text file with 1 or 2 data columns")
    add_table_options(parser)
    parser.add_argument('--dim', type=int, choices=(1, 2), default=None,
                        help="expected data dimension (default: from the file)")
    parser.add_argument('--seed', type=int, default=0, help="seed of the Gaussian-mixture start")
    parser.add_argument('--max-iter', type=int, default=None, help="EM iteration cap")
    parser.add_argument('--rel-tol', type=float, default=None,
                        help="relative log-likelihood change that stops EM")
    parser.add_argument('--fixed-bandwidth', action='store_true',
                        help="do not smooth the alternative (bandwidth 0)")
    parser.add_argument('--out', default='fit.json', help="artifact path (default fit.json)")
    parser.set_defaults(handler=run)
    return parser


def build_config(args) -> EmConfig:
    defaults = EmConfig()
    return EmConfig(
        max_iterations=args.max_iter if args.max_iter is not None else defaults.max_iterations,
        rel_tol=args.rel_tol if args.rel_tol is not None else defaults.rel_tol,
        init_seed=args.seed,
        refit_bandwidth_each_iter=not args.fixed_bandwidth,
    )


def summary_lines(artifact: FitArtifact):
    """Resumo das duas componentes"""
    model = artifact.model
    alt = model.alternative
    trace = artifact.trace
    status = "converged" if trace.converged else "iteration cap reached"
    lines = [f"✅ EM {status}: {trace.iterations} iterations, "
             f"log-likelihood {trace.best_log_likelihood:.6f} (iteration {trace.best_iteration})"]
    if model.dimension == 1:
        lines.append(f"   null:        p0 = {model.p0:.6f}, mu = {model.mu:.6f}, "
                     f"tau2 = {model.tau2:.6f} (sd {np.sqrt(model.tau2):.6f})")
        lines.append(f"   alternative: weight = {1 - model.p0:.6f}, mean = {alt.mean():.6f}, "
                     f"sd = {np.sqrt(alt.variance()):.6f}, bandwidth = {alt.bandwidth:.6f}")
    else:
        lines.append(f"   null:        p0 = {model.p0:.6f}, mu = {np.round(model.mu, 6).tolist()}, "
                     f"tau2 = {np.round(model.tau2, 6).tolist()}")
        lines.append(f"   alternative: weight = {1 - model.p0:.6f}, mean = {np.round(alt.mean(), 6).tolist()}, "
                     f"bandwidth = {np.round(alt.bandwidth_matrix, 6).tolist()}")
    if trace.init_fallback:
        lines.append("⚠️  Gaussian-mixture start was degenerate (robust fallback used)")
    if trace.indeterminate_responsibilities:
        lines.append("⚠️  Some responsibilities were indeterminate and set to p0")
    return lines


@guarded
def run(args) -> int:
    table = TableRepository().read(args.input, args.delimiter, args.header)
    if args.dim is not None and table.dimension != args.dim:
        raise DimensionMismatchError(f"--dim {args.dim} but {args.input} has {table.dimension} data columns")
    z = observations(table, args.pvalue)
    config = build_config(args)

    service = MixtureService()
    for observer in observers_for(args):
        service.attach(observer)
    model, trace = service.fit(z, config)

    artifact = FitArtifact(model, trace, config,
                           pvalue_input=args.pvalue or table.has_pvalue_column, source=args.input)
    ArtifactRepository().save(artifact, args.out)
    for line in summary_lines(artifact):
        print(line)
    print(f"💾 Fit saved to {args.out}")
    return EXIT_OK
