from typing import Literal, Optional, Union
from pydantic import BaseModel, ConfigDict, Field
from utils.errors import PartitionError

SCHEMA = 'rgather/1'
GRAPH_MODES = ('exact', 'lsh', 'lsh-sparse')


class Cluster(BaseModel):
    center: Union[int, list[float]]
    members: list[int]
    # Scale at which the pointwise pipeline formed the cluster.
    scale: Optional[float] = None

    def center_is_point(self):
        return isinstance(self.center, int)


class Clustering(BaseModel):
    clusters: list[Cluster] = []
    outliers: list[int] = []

    def assigned(self):
        return [pid for cluster in self.clusters for pid in cluster.members]

    def labels(self):
        return {pid: idx for idx, cluster in enumerate(self.clusters) for pid in cluster.members}

    def centers(self):
        return {pid: cluster.center for cluster in self.clusters for pid in cluster.members}

    def check_partition(self, ids):
        ids = set(int(i) for i in ids)
        seen = set()
        for idx, cluster in enumerate(self.clusters):
            if len(cluster.members) == 0:
                raise PartitionError('Cluster ' + str(idx) + ' is empty.')
            if cluster.center_is_point() and cluster.center not in cluster.members:
                raise PartitionError('Cluster ' + str(idx) + ' does not contain its center ' + str(cluster.center) + '.')
            for pid in cluster.members:
                if pid in seen:
                    raise PartitionError('Point ' + str(pid) + ' appears more than once.')
                seen.add(pid)
        for pid in self.outliers:
            if pid in seen:
                raise PartitionError('Point ' + str(pid) + ' appears more than once.')
            seen.add(pid)
        unknown = seen - ids
        if unknown:
            raise PartitionError('Unknown point ids ' + str(sorted(unknown)) + '.')
        missing = ids - seen
        if missing:
            raise PartitionError('Points ' + str(sorted(missing)) + ' are neither clustered nor outliers.')


class RGatherParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    r: int = Field(1, ge=1)
    k_out: int = Field(0, ge=0)
    k_pow: int = Field(1, ge=1)
    C: float = Field(2., ge=1.)
    beta: int = Field(1, ge=1)
    eps: float = Field(.5, gt=0., lt=1.)
    mode: Literal['exact', 'lsh', 'lsh-sparse'] = 'exact'
    grid_ratio: float = Field(2., gt=1.)
    grid_lo: Optional[float] = Field(None, gt=0.)
    seed: int = Field(0, ge=0)
    delta: float = Field(.5, gt=0., lt=1.)
    num_shifts: int = Field(64, ge=1)
    kc_max: int = Field(16, ge=1)
    s_max: int = Field(256, ge=1)
    lsh_fallback: bool = True


class ValidationReport(BaseModel):
    num_clusters: int
    min_size: int
    max_radius: float
    power_cost: float
    outlier_count: int
    k_pow: int = 1


class ClusteringResult(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_: str = Field(SCHEMA, alias='schema')
    command: str
    r: int
    R_used: Optional[float] = None
    mode: str = 'exact'
    C_eff: float = 1.
    clusters: list[Cluster] = []
    outliers: list[int] = []
    max_radius: float = 0.
    min_size: int = 0
    k_pow: int = 1
    power_cost: float = 0.
    flags: list[str] = []
    cost_report: Optional[dict] = None

    def clustering(self):
        return Clustering(clusters=self.clusters, outliers=self.outliers)


class QueryRecord(BaseModel):
    line: int
    op: str
    id: Optional[int] = None
    feasible: bool = True
    center: Optional[int] = None
    radius_bound: Optional[float] = None
    clusters: Optional[list[Cluster]] = None
    max_radius: Optional[float] = None
    min_size: Optional[int] = None
    power_cost: Optional[float] = None


class ReplayResult(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_: str = Field(SCHEMA, alias='schema')
    command: str = 'dynamic-replay'
    r: int
    structure: Literal['dynamic', 'incremental'] = 'dynamic'
    eps: float = 1.
    live_points: int = 0
    queries: list[QueryRecord] = []
    violations: list[str] = []
    warnings: list[str] = []

    def last_snapshot(self):
        # Most recent QALL answer that produced clusters.
        for record in reversed(self.queries):
            if record.op == 'QALL' and record.clusters is not None:
                return record
        return None


class VerifyResult(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_: str = Field(SCHEMA, alias='schema')
    command: str = 'verify'
    ok: bool
    mismatches: list[str] = []
    recomputed: Optional[ValidationReport] = None
