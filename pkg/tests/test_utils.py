import json
import pytest
import torch
from models.clustering import ClusteringResult
from utils.errors import InputFormatError, RGatherError
from utils.utils import Op, derive_seed, emit_json, export_edges, generate_points, make_rng, parse_ops, parse_points, points_text, save_points


def test_rng_streams():
    assert make_rng(3, 'mis', 1).random(4).tolist() == make_rng(3, 'mis', 1).random(4).tolist()
    assert make_rng(3, 'mis', 1).random(4).tolist() != make_rng(3, 'mis', 2).random(4).tolist()
    assert make_rng(3).random() != make_rng(4).random()
    assert derive_seed(5, 'scale', 0) == derive_seed(5, 'scale', 0)
    assert derive_seed(5, 'scale', 0) != derive_seed(5, 'scale', 1)


def test_parse_points(write_file):
    points = parse_points(write_file('pts.csv', 'dim=2\n\n3,1.5,2\n1,0,0\n'))
    assert points.id_list() == [1, 3] and points.dim == 2
    assert points.coords_of(3).tolist() == [1.5, 2.]


@pytest.mark.parametrize('text, line', [
    ('', 1),
    ('2,0,0\n', 1),
    ('dim=x\n', 1),
    ('dim=0\n', 1),
    ('dim=2\n0,1,2\n1,1\n', 3),
    ('dim=1\n0,a\n', 2),
    ('dim=1\n0,1\n0,2\n', 3),
    ('dim=1\n0,nan\n', 2),
    ('dim=1\n', 1),
])
def test_parse_points_errors(write_file, text, line):
    with pytest.raises(InputFormatError) as info:
        parse_points(write_file('bad.csv', text))
    assert info.value.line == line
    assert str(info.value).startswith('line ' + str(line) + ':')


def test_points_round_trip(tmp_path):
    points = generate_points('gaussian-blobs', 20, 3, seed=7, blobs=3)
    target = str(tmp_path / 'blobs.csv')
    save_points(points, target)
    again = parse_points(target)
    assert again.id_list() == points.id_list()
    assert torch.equal(again.coords, points.coords)
    assert points_text(again) == points_text(points)


def test_generators():
    for kind in ('uniform', 'gaussian-blobs', 'line'):
        a, b = generate_points(kind, 15, 2, seed=1), generate_points(kind, 15, 2, seed=1)
        assert torch.equal(a.coords, b.coords) and len(a) == 15 and a.dim == 2
    line = generate_points('line', 4, 2, seed=0)
    assert line.coords[:, 0].tolist() == [0., 1., 2., 3.]
    with pytest.raises(RGatherError):
        generate_points('spiral', 4, 2, seed=0)


def test_parse_ops(write_file):
    ops = parse_ops(write_file('trace.ops', 'I 0 0.0 1.0\n\nD 0\nQ 4\nQALL\n'))
    assert ops == [Op('I', 0, (0., 1.), 1), Op('D', 0, None, 3), Op('Q', 4, None, 4), Op('QALL', None, None, 5)]


@pytest.mark.parametrize('text, line', [
    ('I 0\n', 1),
    ('QALL\nD\n', 2),
    ('Q 1 2\n', 1),
    ('QALL 3\n', 1),
    ('X 1\n', 1),
    ('I 0 1.0\nI a 2.0\n', 2),
])
def test_parse_ops_errors(write_file, text, line):
    with pytest.raises(InputFormatError) as info:
        parse_ops(write_file('bad.ops', text))
    assert info.value.line == line


def test_emit_json():
    text = emit_json(ClusteringResult(command='cluster', r=2))
    data = json.loads(text)
    assert data['schema'] == 'rgather/1' and data['command'] == 'cluster'
    assert text.endswith('\n')


def test_export_edges(tmp_path):
    target = tmp_path / 'edges.txt'
    export_edges([(0, 1), (4, 7)], str(target), header='R=1')
    assert target.read_text().splitlines() == ['# R=1', '0 1', '4 7']
