import pytest
from gather.cost import CostLedger, CostModel, account, mis_rounds, pipeline_rounds
from gather.rgather import ScaleGrid, rgather
from models.clustering import RGatherParams
from utils.utils import generate_points


def test_model():
    model = CostModel(n=1024, delta=.5)
    assert model.local_memory == 32
    assert model.total_space > model.n
    with pytest.raises(ValueError):
        CostModel(n=10, delta=1.)


def test_one_round_primitives():
    ledger = CostLedger()
    charge = ledger.account('sort', 500)
    assert charge.rounds == 1 and charge.words == 500
    assert ledger.account('broadcast', 7).rounds == 1


def test_exploration_charge():
    ledger = CostLedger()
    charge = ledger.account('explore', 40, k=3, J=4)
    assert charge.rounds == 3
    assert charge.words == 40 * 5 and charge.per_item == 5


def test_other_charges():
    ledger = CostLedger()
    assert ledger.account('bfs', 12, k=4).rounds == 4
    assert ledger.account('finish', 9, rounds=6).rounds == 6
    assert ledger.account('mis', 100, k=2, n=256, delta_k=64).rounds == mis_rounds(256, 64, 2)
    with pytest.raises(ValueError):
        ledger.account('shuffle', 3)


def test_empty_report():
    report = CostLedger().report()
    assert report.rounds == 0 and report.peak_space == 0
    assert report.breakdown == {} and report.violations == []
    assert account(None, 'sort', 10) is None


def test_report_totals_and_violations():
    ledger = CostLedger(CostModel(n=16, delta=.5))
    ledger.account('sort', 10)
    ledger.account('explore', 10, k=2, J=9)
    report = ledger.report()
    assert report.rounds == 3
    assert report.peak_space == 100
    assert report.breakdown['sort'] == {'count': 1, 'rounds': 1, 'words': 10}
    assert report.local_memory == 4
    assert report.violations == ['explore sends 10 words per item, local memory 4']


def test_extend():
    first, second = CostLedger(), CostLedger()
    first.account('sort', 1)
    second.account('map', 2)
    first.extend(second)
    first.extend(None)
    assert [c.primitive for c in first.charges] == ['sort', 'map']


def test_pipeline_rounds_golden():
    assert [pipeline_rounds(2 ** e) for e in (8, 10, 12)] == [20, 22, 23]
    assert pipeline_rounds(256, beta=2) > pipeline_rounds(256)


def test_rgather_charges(four_points):
    ledger = CostLedger(CostModel(n=len(four_points)))
    outcome = rgather(four_points, 2, RGatherParams(r=2), ledger)
    probed = ScaleGrid(four_points).values.index(outcome.R_used) + 1
    report = ledger.report()
    assert report.breakdown['sort']['count'] >= probed
    assert report.rounds == sum(c.rounds for c in ledger.charges)

    again = CostLedger(CostModel(n=len(four_points)))
    rgather(four_points, 2, RGatherParams(r=2), again)
    assert again.report() == report


def plain_rounds(n):
    points = generate_points('line', n, 1, seed=0)
    ledger = CostLedger(CostModel(n=n))
    rgather(points, 2, RGatherParams(r=2), ledger)
    return ledger.report()


@pytest.mark.slow
def test_reported_rounds_grow_slower_than_log_n():
    reports = [plain_rounds(2 ** e) for e in (8, 10, 12)]
    rounds = [report.rounds for report in reports]
    assert all(report.breakdown['sort']['count'] == 2 for report in reports)
    assert rounds[2] * 8 <= rounds[0] * 12
    assert rounds[1] * 8 <= rounds[0] * 10
    assert plain_rounds(2 ** 8) == reports[0]
