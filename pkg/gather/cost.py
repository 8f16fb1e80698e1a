import math
from typing import Optional
from pydantic import BaseModel, Field

# Primitives charged one round and linear space.
ONE_ROUND = ('sort', 'dedup', 'prefix', 'map', 'broadcast', 'hash', 'graph')


class CostModel(BaseModel):
    n: int = Field(1, ge=1)
    delta: float = Field(.5, gt=0., lt=1.)
    gamma: float = Field(.5, gt=0.)
    space_factor: float = Field(64., gt=0.)
    mis_constant: float = Field(1., gt=0.)

    @property
    def local_memory(self):
        return max(1, math.ceil(self.n ** self.delta))

    @property
    def total_space(self):
        return math.ceil(self.space_factor * self.n ** (1. + self.gamma) * max(1., math.log2(self.n)) ** 2)


class Charge(BaseModel):
    primitive: str
    size: int
    rounds: int
    words: int
    per_item: int = 1
    note: str = ''


class CostReport(BaseModel):
    rounds: int = 0
    peak_space: int = 0
    breakdown: dict[str, dict[str, int]] = {}
    violations: list[str] = []
    local_memory: Optional[int] = None
    total_space: Optional[int] = None


def mis_rounds(n, delta_k, k, gamma=.5, constant=1.):
    # ceil(log Δ_k / sqrt(γ log n)) * (k + log(γ log n)) + log log n, all logs base 2.
    log_n = math.log2(max(n, 2))
    phases = math.ceil(math.log2(max(delta_k, 2)) / math.sqrt(gamma * log_n))
    per_phase = k + max(0., math.log2(max(gamma * log_n, 1.)))
    return max(1, math.ceil(constant * (phases * per_phase + math.log2(max(log_n, 1.)))))


def pipeline_rounds(n, beta=1, degree_bound=None, gamma=.5, constant=1.):
    """Rounds of one plain r-gather probe as a function of sizes only.

    Graph build (hash, sort, dedup), the ruling set of G^2 (dominating rounds
    plus the MIS), and the assignment BFS over 2*beta hops.
    """
    delta_k = degree_bound if degree_bound is not None else max(2, math.ceil(math.log2(max(n, 2))) ** 2)
    rounds = 3
    if beta > 1:
        rounds += math.ceil(math.log2(max(delta_k, 2))) * 2 + 2
    rounds += mis_rounds(n, delta_k, 2, gamma, constant)
    return rounds + 2 * beta


class CostLedger:

    def __init__(self, model=None):
        self.model = model
        self.charges = []

    def account(self, primitive, size, k=None, J=None, n=None, delta_k=None, rounds=None, note=''):
        size = int(size)
        per_item = 1
        if primitive in ONE_ROUND:
            charged, words = 1, size
        elif primitive == 'explore':
            # Truncated k-hop exploration: k rounds, J+1 ids per edge endpoint.
            charged, words, per_item = int(k), size * (int(J) + 1), int(J) + 1
        elif primitive == 'bfs':
            charged, words = int(k), size
        elif primitive == 'mis':
            gamma = self.model.gamma if self.model is not None else .5
            constant = self.model.mis_constant if self.model is not None else 1.
            charged, words = mis_rounds(n if n is not None else size, delta_k if delta_k is not None else 2, int(k), gamma, constant), size
        elif primitive in ('finish', 'iterate'):
            charged, words = int(rounds), size
        else:
            raise ValueError('Unknown MPC primitive ' + repr(primitive) + '.')
        charge = Charge(primitive=primitive, size=size, rounds=charged, words=words, per_item=per_item, note=note)
        self.charges.append(charge)
        return charge

    def extend(self, other):
        if other is not None:
            self.charges.extend(other.charges)

    def report(self, model=None):
        model = model if model is not None else self.model
        breakdown = {}
        violations = []
        for charge in self.charges:
            entry = breakdown.setdefault(charge.primitive, {'count': 0, 'rounds': 0, 'words': 0})
            entry['count'] += 1
            entry['rounds'] += charge.rounds
            entry['words'] += charge.words
            if model is not None:
                if charge.words > model.total_space:
                    violations.append(charge.primitive + ' uses ' + str(charge.words) + ' words, total budget ' + str(model.total_space))
                if charge.per_item > model.local_memory:
                    violations.append(charge.primitive + ' sends ' + str(charge.per_item) + ' words per item, local memory ' + str(model.local_memory))
        return CostReport(rounds=sum(c.rounds for c in self.charges),
                          peak_space=max([c.words for c in self.charges], default=0),
                          breakdown=breakdown,
                          violations=violations,
                          local_memory=model.local_memory if model is not None else None,
                          total_space=model.total_space if model is not None else None)


def account(ledger, primitive, size, **kwargs):
    # Modules call this with ledger=None when no accounting is requested.
    if ledger is None:
        return None
    return ledger.account(primitive, size, **kwargs)
