import zlib
import numpy as np
import torch
from typing import NamedTuple, Optional
from models.point_set import PointSet
from utils.errors import InputFormatError, RGatherError

GENERATOR_KINDS = ('uniform', 'gaussian-blobs', 'line')


class Op(NamedTuple):
    kind: str
    pid: Optional[int] = None
    coords: Optional[tuple] = None
    line: int = 0


def _stream_word(token):
    if isinstance(token, str):
        return zlib.crc32(token.encode('utf-8'))
    return int(token) % (1 << 32)


def make_rng(seed, *stream):
    # Counter-based generator, one independent stream per (seed, *stream).
    entropy = [int(seed) % (1 << 63)] + [_stream_word(token) for token in stream]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed, *stream):
    return int(make_rng(seed, *stream).integers(0, 1 << 62))


def parse_points(path):
    with open(path, 'r', encoding='utf-8') as f:
        lines = f.read().splitlines()

    # Header first, blank lines skipped.
    dim = None
    ids, coords = [], []
    seen = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if dim is None:
            if not line.startswith('dim='):
                raise InputFormatError('expected header dim=<d>', lineno)
            try:
                dim = int(line[4:])
            except ValueError:
                raise InputFormatError('bad dimension ' + repr(line[4:]), lineno)
            if dim < 1:
                raise InputFormatError('dimension must be positive', lineno)
            continue
        fields = line.split(',')
        if len(fields) != dim + 1:
            raise InputFormatError('expected ' + str(dim + 1) + ' comma separated fields, found ' + str(len(fields)), lineno)
        try:
            pid = int(fields[0])
            values = [float(x) for x in fields[1:]]
        except ValueError:
            raise InputFormatError('malformed point ' + repr(line), lineno)
        if not all(np.isfinite(values)):
            raise InputFormatError('non-finite coordinate', lineno)
        if pid in seen:
            raise InputFormatError('duplicate id ' + str(pid), lineno)
        seen.add(pid)
        ids.append(pid)
        coords.append(values)

    if dim is None:
        raise InputFormatError('empty points file', 1)
    if not ids:
        raise InputFormatError('no points after header', len(lines))
    return PointSet(ids, torch.tensor(coords, dtype=torch.float64), dim)


def points_text(points):
    rows = ['dim=' + str(points.dim)]
    for pid, coords in zip(points.id_list(), points.coords.tolist()):
        rows.append(','.join([str(pid)] + [repr(float(x)) for x in coords]))
    return '\n'.join(rows) + '\n'


def save_points(points, filename):
    with open(filename, 'w', encoding='utf-8') as f:
        f.write(points_text(points))


def parse_ops(path):
    with open(path, 'r', encoding='utf-8') as f:
        lines = f.read().splitlines()

    ops = []
    for lineno, raw in enumerate(lines, start=1):
        fields = raw.split()
        if not fields:
            continue
        kind = fields[0]
        try:
            if kind == 'I':
                if len(fields) < 3:
                    raise InputFormatError('insert needs an id and coordinates', lineno)
                ops.append(Op('I', int(fields[1]), tuple(float(x) for x in fields[2:]), lineno))
            elif kind in ('D', 'Q'):
                if len(fields) != 2:
                    raise InputFormatError(kind + ' takes exactly one id', lineno)
                ops.append(Op(kind, int(fields[1]), None, lineno))
            elif kind == 'QALL':
                if len(fields) != 1:
                    raise InputFormatError('QALL takes no arguments', lineno)
                ops.append(Op('QALL', None, None, lineno))
            else:
                raise InputFormatError('unknown operation ' + repr(kind), lineno)
        except ValueError as e:
            if isinstance(e, InputFormatError):
                raise
            raise InputFormatError('malformed operation ' + repr(raw.strip()), lineno)
    return ops


def emit_json(result):
    return result.model_dump_json(by_alias=True, indent=2) + '\n'


def export_edges(pairs, filename, header=''):
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    np.savetxt(filename, pairs, fmt='%d', delimiter=' ', header=header, comments='# ')


def generate_points(kind, n, d, seed, blobs=5):
    rng = make_rng(seed, 'gen', kind)
    if kind == 'uniform':
        coords = rng.uniform(0., 1., size=(n, d))
    elif kind == 'gaussian-blobs':
        # Blob centers in [0, 10]^d, unit-scale spread around them.
        centers = rng.uniform(0., 10., size=(blobs, d))
        labels = rng.integers(0, blobs, size=n)
        coords = centers[labels] + .5 * rng.standard_normal((n, d))
    elif kind == 'line':
        coords = np.zeros((n, d))
        coords[:, 0] = np.arange(n, dtype=np.float64)
    else:
        raise RGatherError('Unknown generator kind ' + repr(kind) + ', expected one of ' + str(GENERATOR_KINDS) + '.')
    return PointSet(range(n), torch.from_numpy(np.ascontiguousarray(coords)), d)
