"""
fdrmix simulate: amostra rotulada de um cenário
"""

from models.scenario import get_scenario
from services.simulation_service import generate
from storage import TableRepository
from .common import EXIT_OK, guarded


def register(subparsers):
    parser = subparsers.add_parser('simulate', help="draw a labeled sample from a scenario")
    parser.add_argument('scenario', help="scenario id (U1-U6, B1-B6)")
    parser.add_argument('--n', type=int, default=1000, help="sample size (default 1000)")
    parser.add_argument('--seed', type=int, default=0, help="generator seed")
    parser.add_argument('--out', default='sample.csv', help="output CSV (default sample.csv)")
    parser.set_defaults(handler=run)
    return parser


@guarded
def run(args) -> int:
    scenario = get_scenario(args.scenario)
    sample = generate(scenario, args.n, args.seed)
    if sample.dimension == 1:
        header = ['z', 'label']
        rows = [(float(z), int(label)) for z, label in zip(sample.z, sample.labels)]
    else:
        header = ['z1', 'z2', 'label']
        rows = [(float(z[0]), float(z[1]), int(label)) for z, label in zip(sample.z, sample.labels)]
    TableRepository().write(args.out, header, rows)
    print(f"🎲 {scenario.scenario_id}: {len(rows)} rows written to {args.out}")
    return EXIT_OK
