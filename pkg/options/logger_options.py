import argparse

class WandbLoggerOptions:

    def __init__(self):
        self.parser = argparse.ArgumentParser(description='Options for WandbLogger.')
        self.parser.add_argument('--project', dest='project', required=True, type=str, help='Wandb project name')
        self.parser.add_argument('--npoints', dest='n_points', type=int, default=200, help='Number of generated points per experiment')
        self.parser.add_argument('--dim', dest='dim', type=int, default=2, help='Dimension of the generated points')
        self.parser.add_argument('--seed', dest='seed', type=int, default=0, help='Seed of data generation and of the pipelines')
        self.parser.add_argument('--delta', dest='delta', type=float, default=.5, help='MPC local memory exponent')

    def parse(self, argv=None):
        return self.parser.parse_args(argv)
