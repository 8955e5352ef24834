"""
fdrmix bench: benchmark Monte Carlo de um cenário
"""

import os

from models.constants import ModelConstants
from models.mixture import EmConfig
from services.benchmark_service import BenchmarkService, plot_data
from storage import ReportRepository
from utils.exceptions import InvalidInputError
from .common import EXIT_OK, guarded, observers_for
from .fit_command import build_config


def parse_thresholds(text: str):
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise InvalidInputError(f"cannot parse thresholds {text!r}") from None


def register(subparsers):
    parser = subparsers.add_parser('bench', help="run the Monte Carlo benchmark")
    parser.add_argument('scenario', help="scenario id (U1-U6, B1-B6)")
    parser.add_argument('--n', type=int, default=1000, help="observations per run (default 1000)")
    parser.add_argument('--m', type=int, default=50, help="number of runs (default 50)")
    parser.add_argument('--thresholds', default=','.join(f"{t:g}" for t in ModelConstants.THRESHOLDS),
                        help="comma-separated fdr thresholds")
    parser.add_argument('--seed', type=int, default=0, help="master seed")
    parser.add_argument('--workers', type=int, default=None,
                        help="worker processes (default FDRMIX_THREADS)")
    parser.add_argument('--max-iter', type=int, default=None, help="EM iteration cap per run")
    parser.add_argument('--rel-tol', type=float, default=None,
                        help="relative log-likelihood change that stops EM in each run")
    parser.add_argument('--fixed-bandwidth', action='store_true',
                        help="do not smooth the alternative (bandwidth 0)")
    parser.add_argument('--out', default='report.json', help="JSON report path")
    parser.add_argument('--csv', default=None, help="CSV report path (default: next to --out)")
    parser.add_argument('--plot-data', default=None, help="plot-data JSON path (default: next to --out)")
    parser.set_defaults(handler=run)
    return parser


def output_paths(args):
    stem = os.path.splitext(args.out)[0]
    return args.out, args.csv or f"{stem}.csv", args.plot_data or f"{stem}_plot.json"


@guarded
def run(args) -> int:
    thresholds = parse_thresholds(args.thresholds)
    config = build_config(args)

    service = BenchmarkService()
    for observer in observers_for(args):
        service.attach(observer)
    report = service.run(args.scenario, args.n, args.m, thresholds, args.seed, args.workers, config)

    json_path, csv_path, plot_path = output_paths(args)
    repository = ReportRepository()
    repository.save_json(report, json_path)
    repository.save_csv(report, csv_path)
    repository.save_plot_data(plot_data(report), plot_path)

    p0_mean, p0_se = report.p0_summary()
    rmse_mean, rmse_se = report.rmse_summary()
    print(f"📊 {report.scenario_id} N={report.n} M={report.m} "
          f"({len(report.runs)} completed, {report.failure_count} failed)")
    print(f"   p0   {p0_mean:.4f} (se {p0_se:.4f})")
    print(f"   RMSE {rmse_mean:.4f} (se {rmse_se:.4f})")
    for i, t in enumerate(report.thresholds):
        fdr_mean, _ = report.fdr_summary(i)
        fnr_mean, _ = report.fnr_summary(i)
        print(f"   threshold {t:.2f}: FDR {fdr_mean:.4f}, FNR {fnr_mean:.4f}")
    print(f"💾 Reports saved to {json_path}, {csv_path}, {plot_path}")
    return EXIT_OK
