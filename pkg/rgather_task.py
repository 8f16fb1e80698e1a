import json
import math
import sys
import torch
from loguru import logger
from gather import metric
from gather.cost import CostLedger, CostModel
from gather.dynamic_rgather import DynamicRGather, IncrementalRGather
from gather.rgather import rgather, rgather_outliers, rgather_pointwise
from models.clustering import Clustering, ClusteringResult, QueryRecord, ReplayResult, RGatherParams, VerifyResult
from models.point_set import PointSet
from options.rgather_options import RGatherOptions
from utils.errors import InfeasibleError, InputFormatError, PartitionError, RGatherError
from utils.utils import emit_json, generate_points, parse_ops, parse_points, points_text, save_points

RELATIVE_TOLERANCE = 1e-9


def _params(options, k_out=0):
    ratio = options.grid_ratio
    if ratio is None:
        ratio = 1. + options.eps if options.eps is not None else 2.
    extra = {'eps': options.eps} if options.eps is not None else {}
    return RGatherParams(r=options.r, k_out=k_out, k_pow=options.k_pow, C=options.C, beta=options.beta, mode=options.mode,
                         grid_ratio=ratio, seed=options.seed, delta=options.delta, **extra)


def _cluster(options):
    points = parse_points(options.input)
    k_out = getattr(options, 'k_out', 0)
    params = _params(options, k_out)
    ledger = CostLedger(CostModel(n=len(points), delta=params.delta)) if options.report_cost else None

    if options.command == 'cluster':
        outcome = rgather(points, params.r, params, ledger)
    elif options.command == 'cluster-outliers':
        outcome = rgather_outliers(points, params.r, k_out, params, ledger)
    else:
        outcome = rgather_pointwise(points, params.r, params, ledger)

    report = metric.validate(points, outcome.clustering, params.k_pow)
    if options.export_graph is not None and outcome.graph is not None:
        outcome.graph.export(options.export_graph)
    result = ClusteringResult(command=options.command, r=params.r, R_used=outcome.R_used, mode=params.mode, C_eff=outcome.C_eff,
                              clusters=outcome.clustering.clusters, outliers=outcome.clustering.outliers,
                              max_radius=report.max_radius, min_size=report.min_size, k_pow=params.k_pow,
                              power_cost=report.power_cost, flags=list(outcome.flags),
                              cost_report=ledger.report().model_dump() if ledger is not None else None)
    return emit_json(result), 0


def _incremental_scales(ops):
    # Finest scale at the smallest distance of the whole log, enough levels to span its diameter.
    coords = [op.coords for op in ops if op.kind == 'I']
    if len(coords) < 2:
        return 1., 0
    points = PointSet(range(len(coords)), torch.tensor(coords, dtype=torch.float64))
    base = points.min_distance() or 1.
    span = points.max_distance() / base
    levels = max(0, math.ceil(math.log2(span))) + 1 if span > 1. else 1
    return base, levels


def _live_points(structure):
    ids = sorted(structure.space.coords)
    return PointSet(ids, torch.tensor([structure.space.coords[pid].tolist() for pid in ids], dtype=torch.float64), structure.space.dim)


def _replay(options):
    ops = parse_ops(options.ops)
    if options.incremental:
        deletes = [op for op in ops if op.kind == 'D']
        if deletes:
            raise InputFormatError('the insertion-only structure cannot replay deletions', deletes[0].line)
        base, levels = _incremental_scales(ops)
        structure = IncrementalRGather(options.r, options.eps, base, levels)
    else:
        structure = DynamicRGather(options.r, options.eps)

    result = ReplayResult(r=options.r, structure='incremental' if options.incremental else 'dynamic', eps=options.eps)
    for op in ops:
        try:
            if op.kind == 'I':
                structure.insert(op.pid, op.coords)
            elif op.kind == 'D':
                structure.delete(op.pid)
            elif op.kind == 'Q':
                result.queries.append(_query(structure, op))
            else:
                result.queries.append(_query_all(structure, op))
        except RGatherError as e:
            raise InputFormatError(str(e), op.line)
        if options.check:
            result.violations.extend('line ' + str(op.line) + ': ' + v for v in structure.check_invariants())
            if not options.incremental:
                result.warnings.extend('line ' + str(op.line) + ': ' + w for w in structure.adequacy_warnings())

    result.live_points = len(structure.space)
    for violation in result.violations:
        logger.error(violation)
    return emit_json(result), 1 if result.violations else 0


def _query(structure, op):
    try:
        center, radius = structure.query(op.pid)
    except InfeasibleError as e:
        logger.info('line {}: {}', op.line, e)
        return QueryRecord(line=op.line, op='Q', id=op.pid, feasible=False)
    return QueryRecord(line=op.line, op='Q', id=op.pid, center=center, radius_bound=radius)


def _query_all(structure, op):
    try:
        snapshot = structure.query_all()
    except InfeasibleError as e:
        logger.info('line {}: {}', op.line, e)
        return QueryRecord(line=op.line, op='QALL', feasible=False)
    report = metric.validate(_live_points(structure), snapshot.clustering)
    return QueryRecord(line=op.line, op='QALL', radius_bound=snapshot.radius, clusters=snapshot.clustering.clusters,
                       max_radius=report.max_radius, min_size=report.min_size, power_cost=report.power_cost)


def _gen(options):
    points = generate_points(options.kind, options.n, options.d, options.seed, options.blobs)
    if options.output is not None:
        save_points(points, options.output)
        return '', 0
    return points_text(points), 0


def _close(a, b):
    return math.isclose(a, b, rel_tol=RELATIVE_TOLERANCE, abs_tol=1e-12)


def _verify(options):
    points = parse_points(options.input)
    with open(options.solution, 'r', encoding='utf-8') as f:
        data = json.load(f)
    if data.get('command') == 'dynamic-replay':
        record = ReplayResult.model_validate(data).last_snapshot()
        if record is None:
            raise RGatherError('Replay output holds no clustering to verify.')
        claimed = ClusteringResult(command='dynamic-replay', r=options.r, clusters=record.clusters, max_radius=record.max_radius,
                                   min_size=record.min_size, power_cost=record.power_cost)
    else:
        claimed = ClusteringResult.model_validate(data)
    k_pow = options.k_pow if options.k_pow is not None else claimed.k_pow

    mismatches = []
    try:
        report = metric.validate(points, Clustering(clusters=claimed.clusters, outliers=claimed.outliers), k_pow)
    except PartitionError as e:
        return emit_json(VerifyResult(ok=False, mismatches=[str(e)])), 1
    if report.min_size < options.r and report.num_clusters > 0:
        mismatches.append('smallest cluster has ' + str(report.min_size) + ' < ' + str(options.r) + ' points')
    if not _close(report.max_radius, claimed.max_radius):
        mismatches.append('max_radius ' + str(claimed.max_radius) + ' recomputed as ' + str(report.max_radius))
    if report.min_size != claimed.min_size:
        mismatches.append('min_size ' + str(claimed.min_size) + ' recomputed as ' + str(report.min_size))
    if k_pow == claimed.k_pow and not _close(report.power_cost, claimed.power_cost):
        mismatches.append('power_cost ' + str(claimed.power_cost) + ' recomputed as ' + str(report.power_cost))
    result = VerifyResult(ok=not mismatches, mismatches=mismatches, recomputed=report)
    return emit_json(result), 0 if result.ok else 1


COMMANDS = {
    'cluster': _cluster,
    'cluster-outliers': _cluster,
    'cluster-pointwise': _cluster,
    'dynamic-replay': _replay,
    'gen': _gen,
    'verify': _verify,
}


def run(argv=None):
    try:
        options = RGatherOptions().parse(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    logger.remove()
    try:
        logger.add(sys.stderr, level=options.log_level.upper())
    except ValueError:
        logger.add(sys.stderr, level='WARNING')
        logger.error('Unknown log level ' + repr(options.log_level))
        return 2
    try:
        text, code = COMMANDS[options.command](options)
    except InfeasibleError as e:
        logger.error(str(e))
        return 1
    except (ValueError, OSError) as e:
        # RGatherError and pydantic ValidationError are both ValueErrors.
        logger.error(str(e))
        return 2
    sys.stdout.write(text)
    return code


# Computes a single r-gather task
if __name__ == '__main__':
    sys.exit(run())
