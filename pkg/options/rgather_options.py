import argparse
from utils.utils import GENERATOR_KINDS

COMMANDS = ('cluster', 'cluster-outliers', 'cluster-pointwise', 'dynamic-replay', 'gen', 'verify')


def _add_clustering(parser):
    parser.add_argument('--input', dest='input', type=str, required=True, help='Points file (dim=<d> header, then id,x1,...,xd)')
    parser.add_argument('--r', dest='r', type=int, required=True, help='Minimum cluster size')
    parser.add_argument('--power', dest='k_pow', type=int, default=1, help='Exponent of the reported total power cost')
    parser.add_argument('--mode', dest='mode', type=str, choices=('exact', 'lsh', 'lsh-sparse'), default='exact', help='Near neighbor graph construction')
    parser.add_argument('--C', dest='C', type=float, default=2., help='LSH approximation factor')
    parser.add_argument('--beta', dest='beta', type=int, default=1, help='Ruling set parameter, 1 for a maximal independent set')
    parser.add_argument('--eps', dest='eps', type=float, default=None, help='Scale grid ratio 1+eps when --grid-ratio is not given')
    parser.add_argument('--grid-ratio', dest='grid_ratio', type=float, default=None, help='Ratio between consecutive probed scales, 2 by default')
    parser.add_argument('--seed', dest='seed', type=int, default=0, help='Seed of every random choice')
    parser.add_argument('--delta', dest='delta', type=float, default=.5, help='MPC local memory exponent, s = n^delta')
    parser.add_argument('--report-cost', dest='report_cost', action='store_true', default=False, help='Attach the MPC round and space report')
    parser.add_argument('--export-graph', dest='export_graph', type=str, default=None, help='Write the graph of the chosen scale as an edge list')


class RGatherOptions:

    def __init__(self):
        self.parser = argparse.ArgumentParser(description='Options for r-gather clustering tasks.')
        self.parser.add_argument('--loglevel', dest='log_level', type=str, default='WARNING', help='Level of the diagnostics written to stderr')
        commands = self.parser.add_subparsers(dest='command', required=True)

        cluster = commands.add_parser('cluster', help='Plain r-gather')
        _add_clustering(cluster)

        outliers = commands.add_parser('cluster-outliers', help='r-gather with an outlier budget')
        _add_clustering(outliers)
        outliers.add_argument('--outliers', dest='k_out', type=int, required=True, help='Maximum number of unassigned points')

        pointwise = commands.add_parser('cluster-pointwise', help='r-gather with per point radius guarantees')
        _add_clustering(pointwise)

        replay = commands.add_parser('dynamic-replay', help='Replay an operation log through the dynamic structure')
        replay.add_argument('--ops', dest='ops', type=str, required=True, help='Operation log, one of I/D/Q/QALL per line')
        replay.add_argument('--r', dest='r', type=int, required=True, help='Minimum cluster size')
        replay.add_argument('--eps', dest='eps', type=float, default=1., help='Accuracy of the approximate nearest neighbor searches')
        replay.add_argument('--incremental', dest='incremental', action='store_true', default=False, help='Use the insertion-only structure')
        replay.add_argument('--check', dest='check', action='store_true', default=False, help='Run the invariant checkers after every operation')

        gen = commands.add_parser('gen', help='Generate a points file')
        gen.add_argument('--kind', dest='kind', type=str, choices=GENERATOR_KINDS, default='uniform', help='Generator')
        gen.add_argument('--n', dest='n', type=int, required=True, help='Number of points')
        gen.add_argument('--d', dest='d', type=int, default=2, help='Dimension')
        gen.add_argument('--blobs', dest='blobs', type=int, default=5, help='Number of gaussian blobs')
        gen.add_argument('--seed', dest='seed', type=int, default=0, help='Generator seed')
        gen.add_argument('--output', dest='output', type=str, default=None, help='Write to this file instead of stdout')

        verify = commands.add_parser('verify', help='Recompute the metrics of a clustering JSON')
        verify.add_argument('--input', dest='input', type=str, required=True, help='Points file')
        verify.add_argument('--solution', dest='solution', type=str, required=True, help='Clustering JSON')
        verify.add_argument('--r', dest='r', type=int, required=True, help='Minimum cluster size')
        verify.add_argument('--power', dest='k_pow', type=int, default=None, help='Exponent of the power cost, taken from the JSON by default')

    def parse(self, argv=None):
        return self.parser.parse_args(argv)
