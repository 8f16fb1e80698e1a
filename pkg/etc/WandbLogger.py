import wandb
import os
import itertools
import pandas as pd
from gather.cost import CostLedger, CostModel
from gather.metric import rho_hat, validate
from gather.rgather import rgather
from models.clustering import RGatherParams
from options.logger_options import WandbLoggerOptions
from utils.errors import InfeasibleError
from utils.utils import generate_points

PARAMS = ['INDEX', 'DATASET', 'R', 'MODE', 'BETA', 'GRID_RATIO']

DATASETS = ['uniform', 'gaussian-blobs', 'line']
R = [2, 4, 8]
MODES = ['exact', 'lsh']
BETA = [1, 2]
GRID_RATIO = [2., 1.5]

LIST_OF_LISTS = [DATASETS, R, MODES, BETA, GRID_RATIO]


def build_experiments(lists=LIST_OF_LISTS):
    power_list = []
    for index, seq in enumerate(itertools.product(*lists)):
        power_list.append((index, *seq))
    return pd.DataFrame(power_list, columns=PARAMS)


def evaluate(row, n_points=200, dim=2, seed=0, delta=.5):
    points = generate_points(row['DATASET'], n_points, dim, seed)
    params = RGatherParams(r=int(row['R']), mode=row['MODE'], beta=int(row['BETA']), grid_ratio=float(row['GRID_RATIO']), seed=seed, delta=delta)
    ledger = CostLedger(CostModel(n=n_points, delta=delta))
    try:
        outcome = rgather(points, params.r, params, ledger)
    except InfeasibleError:
        return {'feasible': 0}
    report = validate(points, outcome.clustering)
    lower = rho_hat(points, params.r) / 2.
    cost = ledger.report()
    return {'feasible': 1,
            'max_radius': report.max_radius,
            'lower_bound': lower,
            'radius_ratio': report.max_radius / lower if lower > 0 else 0.,
            'R_used': outcome.R_used,
            'C_eff': outcome.C_eff,
            'clusters': report.num_clusters,
            'rounds': cost.rounds,
            'peak_space': cost.peak_space}


class WandbLogger:

    def __init__(self, project, n_points, dim=2, seed=0, delta=.5):
        self.project = project
        self.n_points = n_points
        self.dim = dim
        self.seed = seed
        self.delta = delta

        # Making Results directory.
        if not os.path.exists('Results'):
            os.mkdir('Results')
            print("Directory Results created.")
        else:
            print("Directory Results already exists.")

        # Building experiments.
        self.experiments = build_experiments()
        self.no_experiments = len(self.experiments)
        print(str(self.no_experiments), 'experiments found.')
        self.experiments.to_csv("Results/experiments.csv", index=False)

    def start(self):
        # Executing row-wise wandb runs.
        print('*** Now executing wandb runs. ***')
        for idx, row in self.experiments.iterrows():
            print('Run ' + str(idx+1) + ' of ' + str(self.no_experiments) + '.')
            self.make_run(row.to_dict())

    def make_run(self, row):
        run = wandb.init(project=self.project, config=row, group=row['DATASET'], reinit=True)
        run.name = str(row['INDEX']) + ' - ' + row['DATASET'] + ' - r' + str(row['R'])

        wandb.define_metric('max_radius', summary='min')      # Largest member to center distance.
        wandb.define_metric('radius_ratio', summary='max')    # max_radius over the rho_hat/2 lower bound.
        wandb.define_metric('rounds', summary='max')          # MPC rounds charged by the pipeline.
        wandb.define_metric('peak_space', summary='max')      # Largest single charge in words.

        run.log(evaluate(row, self.n_points, self.dim, self.seed, self.delta))
        run.finish()


if __name__ == '__main__':
    parser = WandbLoggerOptions()
    options = parser.parse()
    wandb_logger = WandbLogger(options.project, options.n_points, options.dim, options.seed, options.delta)
    wandb_logger.start()
