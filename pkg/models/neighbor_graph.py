import torch
import networkx as nx
from torch_geometric.data import Data
from torch_geometric.utils import degree, remove_self_loops, subgraph, to_networkx, to_undirected
from utils.errors import RGatherError
from utils.utils import export_edges

GRAPH_MODES = ('exact', 'lsh_explicit', 'lsh_sparse', 'power', 'given')


class NeighborGraph:
    """Undirected graph over point ids.

    Edges are stored pyg style: a coalesced, symmetric ``edge_index`` over rows
    ``0..n-1`` without self-loops; ``ids[row]`` is the point id of each row, kept
    in increasing order. Metadata (R, r, C, mode, seed) travels with the graph.
    """

    def __init__(self, edge_index, ids, R=None, r=None, C=None, mode='given', seed=None, flags=()):
        self.ids = torch.as_tensor(ids, dtype=torch.long).reshape(-1)
        if self.ids.numel() > 1 and not bool((self.ids[1:] > self.ids[:-1]).all()):
            raise RGatherError('Graph vertex ids must be strictly increasing.')
        self.n = self.ids.numel()
        edge_index = torch.as_tensor(edge_index, dtype=torch.long).reshape(2, -1)
        edge_index, _ = remove_self_loops(edge_index)
        self.edge_index = to_undirected(edge_index, num_nodes=self.n)
        self.index = {pid: row for row, pid in enumerate(self.ids.tolist())}
        self.R, self.r, self.C, self.mode, self.seed = R, r, C, mode, seed
        self.flags = list(flags)
        self._adjacency = None
        self._reach = {}

    @classmethod
    def from_pairs(cls, ids, pairs, **metadata):
        # Pairs are given as point ids.
        ids = sorted(int(i) for i in ids)
        index = {pid: row for row, pid in enumerate(ids)}
        rows = [[index[u] for u, _ in pairs], [index[v] for _, v in pairs]]
        return cls(torch.tensor(rows, dtype=torch.long).reshape(2, -1), ids, **metadata)

    @property
    def num_edges(self):
        return self.edge_index.shape[1] // 2

    def rows_of(self, pids):
        try:
            return [self.index[int(pid)] for pid in pids]
        except KeyError as e:
            raise RGatherError('Unknown vertex id ' + str(e.args[0]) + '.')

    def ids_of(self, rows):
        ids = self.ids.tolist()
        return [ids[row] for row in rows]

    def mask_of(self, pids):
        mask = torch.zeros(self.n, dtype=torch.bool)
        rows = self.rows_of(pids)
        if rows:
            mask[rows] = True
        return mask

    def edges(self):
        row, col = self.edge_index
        keep = row < col
        return list(zip(row[keep].tolist(), col[keep].tolist()))

    def id_edges(self):
        ids = self.ids.tolist()
        return [(ids[u], ids[v]) for u, v in self.edges()]

    def adjacency(self):
        if self._adjacency is None:
            self._adjacency = [[] for _ in range(self.n)]
            for u, v in zip(*self.edge_index.tolist()):
                self._adjacency[u].append(v)
        return self._adjacency

    def neighbors(self, pid):
        return self.ids_of(self.adjacency()[self.index[pid]])

    def degree(self):
        return degree(self.edge_index[0], num_nodes=self.n).long()

    def closed_degree(self):
        return self.degree() + 1

    def khop_reach(self, k):
        # Sparse 0/1 matrix of closed k-hop neighbourhoods.
        if k not in self._reach:
            loops = torch.arange(self.n, dtype=torch.long)
            adj = torch.sparse_coo_tensor(torch.cat([self.edge_index, torch.stack([loops, loops])], dim=1),
                                          torch.ones(self.edge_index.shape[1] + self.n, dtype=torch.float64),
                                          (self.n, self.n)).coalesce()
            reach = torch.sparse_coo_tensor(torch.stack([loops, loops]), torch.ones(self.n, dtype=torch.float64), (self.n, self.n)).coalesce()
            for _ in range(k):
                reach = torch.sparse.mm(adj, reach).coalesce()
                reach = torch.sparse_coo_tensor(reach.indices(), torch.ones(reach.indices().shape[1], dtype=torch.float64), (self.n, self.n)).coalesce()
            self._reach[k] = reach
        return self._reach[k]

    def ball_sizes(self, k):
        return torch.sparse.sum(self.khop_reach(k), dim=1).to_dense().long() if self.n > 0 else torch.zeros(0, dtype=torch.long)

    def power(self, k):
        reach = self.khop_reach(k)
        return NeighborGraph(reach.indices(), self.ids, self.R, self.r, self.C, 'power', self.seed, self.flags)

    def square(self):
        return self.power(2)

    def induced(self, pids):
        rows = sorted(self.rows_of(pids))
        edge_index, _ = subgraph(torch.tensor(rows, dtype=torch.long), self.edge_index, relabel_nodes=True, num_nodes=self.n)
        return NeighborGraph(edge_index, self.ids[rows], self.R, self.r, self.C, self.mode, self.seed, self.flags)

    def to_networkx(self):
        g = to_networkx(Data(edge_index=self.edge_index, num_nodes=self.n), to_undirected=True)
        return nx.relabel_nodes(g, dict(enumerate(self.ids.tolist())))

    def max_edge_length(self, points):
        if self.num_edges == 0:
            return 0.
        coords = points.coords[[points.row(pid) for pid in self.ids.tolist()]]
        row, col = self.edge_index
        return (coords[row] - coords[col]).norm(dim=1).max().item()

    def header(self):
        return 'R=' + str(self.R) + ' r=' + str(self.r) + ' C=' + str(self.C) + ' mode=' + str(self.mode) + ' seed=' + str(self.seed)

    def export(self, filename):
        export_edges(self.id_edges(), filename, header=self.header())
