"""
fdrmix fdr: avalia o fdr local de um artefacto em novos dados
"""

import csv
import sys

from services.mixture_service import fdr_eval, threshold_decisions
from storage import ArtifactRepository, TableRepository, format_cell
from utils.exceptions import DimensionMismatchError
from .common import EXIT_OK, add_table_options, guarded, observations


def register(subparsers):
    parser = subparsers.add_parser('fdr', help="evaluate local fdr with a saved fit")
    parser.add_argument('artifact', help="JSON artifact written by 'fit'")
    parser.add_argument('input', help="delimited text file with the statistics to score")
    add_table_options(parser)
    parser.add_argument('--cutoff', type=float, default=None,
                        help="declare a discovery when fdr <= cutoff")
    parser.add_argument('--out', default=None, help="output CSV (default: standard output)")
    parser.set_defaults(handler=run)
    return parser


@guarded
def run(args) -> int:
    artifact = ArtifactRepository().load(args.artifact)
    table = TableRepository().read(args.input, args.delimiter, args.header)
    if table.dimension != artifact.dimension:
        raise DimensionMismatchError(
            f"artifact is {artifact.dimension}-dimensional but {args.input} has {table.dimension} data columns"
        )
    z = observations(table, args.pvalue or artifact.pvalue_input)
    fdr = fdr_eval(artifact.model, z)

    header = ['z'] if artifact.dimension == 1 else ['z1', 'z2']
    header.append('fdr')
    columns = [z] if artifact.dimension == 1 else [z[:, 0], z[:, 1]]
    columns.append(fdr)
    if args.cutoff is not None:
        header.append('decision')
        columns.append(threshold_decisions(fdr, args.cutoff))
    rows = list(zip(*columns))

    if args.out:
        TableRepository().write(args.out, header, rows)
        print(f"💾 {len(rows)} rows written to {args.out}")
    else:
        writer = csv.writer(sys.stdout, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
    return EXIT_OK
