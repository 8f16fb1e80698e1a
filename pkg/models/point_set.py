import torch
import numpy as np
from utils.errors import RGatherError, DimensionMismatchError


class PointSet:

    def __init__(self, ids, coords, dim=None):
        if type(coords) is np.ndarray:
            coords = torch.from_numpy(coords)
        coords = torch.as_tensor(coords, dtype=torch.float64)
        if coords.dim() == 1:
            coords = coords.unsqueeze(1) if dim in (None, 1) else coords.reshape(-1, dim)
        ids = [int(i) for i in ids]
        if coords.shape[0] != len(ids):
            raise RGatherError('Wrong point data provided: ' + str(len(ids)) + ' ids for ' + str(coords.shape[0]) + ' coordinate rows.')
        if dim is None:
            if coords.shape[0] == 0:
                raise RGatherError('Dimension is required for an empty point set.')
            dim = coords.shape[1]
        if coords.shape[0] > 0 and coords.shape[1] != dim:
            raise DimensionMismatchError('Points have ' + str(coords.shape[1]) + ' coordinates, expected ' + str(dim) + '.')
        if len(set(ids)) != len(ids):
            raise RGatherError('Point ids must be unique.')

        # Rows are kept sorted by id, so the smallest row is the smallest id.
        order = sorted(range(len(ids)), key=lambda i: ids[i])
        self.ids = torch.tensor([ids[i] for i in order], dtype=torch.long)
        self.coords = coords[order].reshape(len(ids), dim).contiguous()
        self.dim = int(dim)
        self.index = {pid: row for row, pid in enumerate(self.ids.tolist())}
        self._distances = None

    @classmethod
    def from_coords(cls, coords, dim=None):
        coords = torch.as_tensor(coords, dtype=torch.float64)
        return cls(range(coords.shape[0]), coords, dim)

    def __len__(self):
        return self.ids.shape[0]

    def __contains__(self, pid):
        return pid in self.index

    @property
    def n(self):
        return len(self)

    def id_list(self):
        return self.ids.tolist()

    def row(self, pid):
        try:
            return self.index[int(pid)]
        except KeyError:
            raise RGatherError('Unknown point id ' + str(pid) + '.')

    def coords_of(self, pid):
        return self.coords[self.row(pid)]

    def distance_matrix(self):
        if self._distances is None:
            self._distances = torch.cdist(self.coords, self.coords, compute_mode='donot_use_mm_for_euclid_dist')
        return self._distances

    def distinct_distances(self):
        # Pairwise distances between different coordinates, upper triangle only.
        if len(self) < 2:
            return self.coords.new_zeros(0)
        d = self.distance_matrix()
        upper = d[torch.triu_indices(len(self), len(self), offset=1).unbind()]
        return upper[upper > 0]

    def min_distance(self):
        d = self.distinct_distances()
        return d.min().item() if d.numel() > 0 else None

    def max_distance(self):
        d = self.distinct_distances()
        return d.max().item() if d.numel() > 0 else 0.

    def aspect_ratio(self):
        d = self.distinct_distances()
        if d.numel() == 0:
            return 1.
        return (d.max() / d.min()).item()

    def has_coincident(self):
        if len(self) < 2:
            return False
        return torch.unique(self.coords, dim=0).shape[0] < len(self)

    def subset(self, pids):
        rows = [self.row(pid) for pid in pids]
        return PointSet([self.ids[r].item() for r in rows], self.coords[rows].reshape(len(rows), self.dim), self.dim)

    def scaled(self, factor):
        return PointSet(self.id_list(), self.coords / factor, self.dim)
