"""Perfect distinguishability checks and the dimension bounds built on them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .catalog import Measurement
from .cones import is_psd
from .errors import NoSeparatingRowError, NotPSDError, PoptlabError, ShapeError
from .operators import HermitianOperator, support_projector

DISTINGUISH_TOL = 1e-9


@dataclass
class DistinguishReport:
    prob_matrix: np.ndarray  # state x effect, clamped to [0, 1]
    passed: bool
    max_deviation: float
    outcome_permutation: tuple[int, ...] | None  # state index -> effect index
    raw_min: float = 0.0
    raw_max: float = 1.0

    def to_json(self) -> dict:
        return {
            "probMatrix": self.prob_matrix.tolist(),
            "pass": self.passed,
            "maxDeviation": self.max_deviation,
            "outcomePermutation": None if self.outcome_permutation is None
            else list(self.outcome_permutation),
        }


@dataclass
class PairwiseCertificate:
    labels: list[str]
    per_pair: dict[tuple[str, str], tuple[str, DistinguishReport]] = field(default_factory=dict)
    failures: dict[tuple[str, str], str] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        n = len(self.labels)
        return (not self.failures and len(self.per_pair) == n * (n - 1) // 2
                and all(r.passed for _, r in self.per_pair.values()))

    @property
    def passed_pairs(self) -> int:
        return sum(1 for _, r in self.per_pair.values() if r.passed)

    @property
    def max_deviation(self) -> float:
        devs = [r.max_deviation for _, r in self.per_pair.values()]
        return max(devs) if devs else 0.0

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "complete": self.complete,
            "pairs": len(self.per_pair) + len(self.failures),
            "passedPairs": self.passed_pairs,
            "maxDeviation": self.max_deviation,
            "perPair": [
                {"pair": list(k), "measurement": mid, "report": rep.to_json()}
                for k, (mid, rep) in self.per_pair.items()
            ],
            "failures": [{"pair": list(k), "reason": why} for k, why in self.failures.items()],
        }


def probability_matrix(states: Sequence[HermitianOperator], m: Measurement) -> np.ndarray:
    for w in states:
        if w.total != m.effects[0].total:
            raise ShapeError("state and measurement act on different spaces")
    return np.array([[w.expect(e) for e in m.effects] for w in states])


def verify_single_measurement(states: Sequence[HermitianOperator], m: Measurement,
                              tol: float = DISTINGUISH_TOL) -> DistinguishReport:
    """Whether one measurement identifies every state with certainty.

    Outcome labels are arbitrary: the report passes when some bijection between
    states and effects makes the probability table the identity within ``tol``.
    """
    if len(states) != len(m.effects):
        raise ShapeError(f"{len(states)} states vs {len(m.effects)} effects")
    raw = probability_matrix(states, m)
    rows, cols = linear_sum_assignment(-raw)
    perm = np.empty(len(states), dtype=int)
    perm[rows] = cols
    target = np.zeros_like(raw)
    target[np.arange(len(states)), perm] = 1.0
    dev = float(np.max(np.abs(raw - target)))
    passed = dev <= tol
    return DistinguishReport(
        prob_matrix=np.clip(raw, 0.0, 1.0),
        passed=bool(passed),
        max_deviation=dev,
        outcome_permutation=tuple(int(p) for p in perm) if passed else None,
        raw_min=float(raw.min()),
        raw_max=float(raw.max()),
    )


def verify_pair(w1: HermitianOperator, w2: HermitianOperator, m: Measurement,
                tol: float = DISTINGUISH_TOL) -> DistinguishReport:
    if len(m.effects) != 2:
        raise ShapeError("pair verification needs a two-outcome measurement")
    return verify_single_measurement([w1, w2], m, tol)


Lookup = Callable[[Hashable, Hashable], "Measurement | tuple[Measurement, str]"]


def _lookup(lookup: Lookup, a, b) -> tuple[Measurement, str]:
    out = lookup(a, b)
    if isinstance(out, tuple):
        return out
    return out, out.label


def verify_family(states: Mapping[Hashable, HermitianOperator], lookup: Lookup,
                  tol: float = DISTINGUISH_TOL) -> PairwiseCertificate:
    """Check every unordered pair with the measurement ``lookup`` assigns to it.

    Pairs for which the lookup finds no separating row are recorded as failures.
    """
    labels = list(states)
    cert = PairwiseCertificate([str(k) for k in labels])
    for a, b in itertools.combinations(labels, 2):
        key = (str(a), str(b))
        try:
            m, mid = _lookup(lookup, a, b)
        except NoSeparatingRowError as exc:
            cert.failures[key] = str(exc)
            continue
        cert.per_pair[key] = (mid, verify_pair(states[a], states[b], m, tol))
    return cert


def max_clique(adjacency: np.ndarray) -> list[int]:
    """Exact maximum clique (Bron-Kerbosch with pivoting over bitmasks)."""
    n = adjacency.shape[0]
    if n > 32:
        raise ValueError("clique search is limited to 32 vertices")
    nbr = [sum(1 << j for j in range(n) if j != i and adjacency[i, j]) for i in range(n)]
    best = 0

    def popcount(x: int) -> int:
        return bin(x).count("1")

    best_set: list[int] = []

    def expand(r: int, p: int, x: int):
        nonlocal best, best_set
        if p == 0 and x == 0:
            if popcount(r) > best:
                best = popcount(r)
                best_set = [i for i in range(n) if r >> i & 1]
            return
        if popcount(r) + popcount(p) <= best:
            return
        pivot = max((i for i in range(n) if (p | x) >> i & 1), key=lambda i: popcount(p & nbr[i]))
        cand = p & ~nbr[pivot]
        while cand:
            v = (cand & -cand).bit_length() - 1
            cand &= cand - 1
            expand(r | 1 << v, p & nbr[v], x & nbr[v])
            p &= ~(1 << v)
            x |= 1 << v

    if n:
        expand(0, (1 << n) - 1, 0)
    return best_set


def quantum_information_dimension(states: Sequence[HermitianOperator],
                                  tol: float = DISTINGUISH_TOL) -> tuple[int, list[int]]:
    """Largest pairwise-orthogonal subset of a pool of quantum states.

    Two density operators are perfectly distinguishable exactly when their
    supports are orthogonal, which we test as ``||P_1 P_2|| <= tol``.
    """
    for w in states:
        if not is_psd(w):
            raise NotPSDError("quantum information dimension needs PSD states")
    projs = [support_projector(w).data for w in states]
    n = len(states)
    adj = np.zeros((n, n), dtype=bool)
    for i, j in itertools.combinations(range(n), 2):
        ok = np.linalg.norm(projs[i] @ projs[j], 2) <= tol
        adj[i, j] = adj[j, i] = ok
    witness = max_clique(adj)
    return len(witness), witness


def info_dim_lower_bound(states: Mapping[Hashable, HermitianOperator], lookup: Lookup,
                         tol: float = DISTINGUISH_TOL) -> tuple[int, list[Hashable]]:
    """Size of the largest subset whose pairs all pass under ``lookup``."""
    labels = list(states)
    n = len(labels)
    adj = np.zeros((n, n), dtype=bool)
    for i, j in itertools.combinations(range(n), 2):
        try:
            m, _ = _lookup(lookup, labels[i], labels[j])
        except PoptlabError:
            continue
        ok = verify_pair(states[labels[i]], states[labels[j]], m, tol).passed
        adj[i, j] = adj[j, i] = ok
    witness = max_clique(adj)
    return len(witness), [labels[k] for k in witness]


@dataclass
class Theorem2Accounting:
    sum_tr_e: float
    sum_diag: float
    slack: float


def theorem2_accounting(states: Sequence[HermitianOperator], m: Measurement) -> Theorem2Accounting:
    """``sum_i Tr E_i`` (the total dimension) against ``sum_i Tr(E_i W_i)``."""
    if len(states) != len(m.effects):
        raise ShapeError(f"{len(states)} states vs {len(m.effects)} effects")
    sum_tr = float(sum(e.trace() for e in m.effects))
    if abs(sum_tr - m.effects[0].total) > 1e-8:
        raise ShapeError("measurement is not complete")
    diag = float(sum(w.expect(e) for w, e in zip(states, m.effects)))
    return Theorem2Accounting(sum_tr, diag, sum_tr - diag)


def proposition3_inequality(effect_table, reference_column, n_a: int, n_b: int,
                            tol: float = 1e-9) -> float:
    """``n_a n_b sum_i e_i(w') - sum_i e_i(w_i)`` for a distinguishing family.

    ``effect_table[i][j]`` is ``e_i(w_j)``; its diagonal must be one.
    """
    table = np.asarray(effect_table, dtype=float)
    ref = np.asarray(reference_column, dtype=float)
    if table.ndim != 2 or table.shape[0] != table.shape[1]:
        raise ShapeError("effect table must be square")
    if ref.shape != (table.shape[0],):
        raise ShapeError("reference column length must match the table")
    if np.any(np.abs(np.diag(table) - 1.0) > tol):
        raise ShapeError("effect table diagonal must be one")
    if np.any(ref < -tol) or np.any(ref > 1 + tol):
        raise ShapeError("reference column entries must lie in [0, 1]")
    if n_a < 1 or n_b < 1:
        raise ShapeError("operational dimensions must be positive")
    return float(n_a * n_b * ref.sum() - np.trace(table))
