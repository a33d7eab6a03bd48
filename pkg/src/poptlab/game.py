"""The pairwise-distinguishability game.

Each round the referee draws a message ``eta`` for Alice and a second message
``eta' != eta``; Bob, told the unordered pair, must say which one Alice got.
Alice sends one system prepared by her encoder and Bob measures it with a
two-outcome measurement chosen for the pair.  Scoring is per round.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .catalog import S8_LABELS, Measurement, bell_state, s8_state, table1_measurement
from .cones import PoptSearchConfig, is_popt, is_psd
from .distinguish import verify_pair
from .errors import PoptlabError, ShapeError
from .operators import HermitianOperator

NEGATIVE_PROB_TOL = 1e-9
CHUNK = 1 << 16


class Theory(enum.Enum):
    QUANTUM = "Quantum"
    SEPBAR = "SepBar"
    CLASSICAL = "Classical"


@dataclass(frozen=True)
class GameSpec:
    n: int
    message_dist: tuple[float, ...] | None = None
    # question_dist[eta][eta'] = P(eta' | eta); zero on the diagonal
    question_dist: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("the game needs at least two messages")
        if self.message_dist is not None:
            p = np.asarray(self.message_dist, dtype=float)
            if p.shape != (self.n,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
                raise ValueError("message distribution must be a probability vector of length n")
        if self.question_dist is not None:
            q = np.asarray(self.question_dist, dtype=float)
            if q.shape != (self.n, self.n) or np.any(q < 0):
                raise ValueError("question distribution must be an n x n non-negative table")
            if np.any(np.abs(q.sum(axis=1) - 1) > 1e-12) or np.any(np.diag(q) != 0):
                raise ValueError("each question row must be normalized with zero diagonal")

    def messages(self) -> np.ndarray:
        if self.message_dist is None:
            return np.full(self.n, 1.0 / self.n)
        return np.asarray(self.message_dist, dtype=float)

    def questions(self) -> np.ndarray:
        if self.question_dist is None:
            q = np.full((self.n, self.n), 1.0 / (self.n - 1))
            np.fill_diagonal(q, 0.0)
            return q
        return np.asarray(self.question_dist, dtype=float)


Decoder = Callable[[int, int], "tuple[Measurement, tuple[int, ...]]"]


@dataclass
class GameStrategy:
    """``decoder(i, j)`` with ``i < j`` returns a measurement and the message named by each outcome."""

    encoder: Sequence[HermitianOperator]
    decoder: Decoder
    theory: Theory
    name: str = ""

    @property
    def n(self) -> int:
        return len(self.encoder)

    def decode(self, i: int, j: int) -> tuple[Measurement, tuple[int, ...]]:
        a, b = min(i, j), max(i, j)
        m, answers = self.decoder(a, b)
        if len(m.effects) != 2 or len(answers) != 2 or set(answers) - {a, b}:
            raise ShapeError(f"decoder for pair {{{a}, {b}}} must map two outcomes into the pair")
        return m, tuple(answers)

    def validate(self, cfg: PoptSearchConfig | None = None) -> None:
        for k, w in enumerate(self.encoder):
            if abs(w.trace() - 1) > 1e-9:
                raise PoptlabError(f"encoded state {k} does not have unit trace")
            if self.theory is Theory.SEPBAR:
                if not is_popt(w, cfg)[0]:
                    raise PoptlabError(f"encoded state {k} is not POPT")
            elif not is_psd(w):
                raise PoptlabError(f"encoded state {k} is not PSD")
            if self.theory is Theory.CLASSICAL and np.any(np.abs(w.data - np.diag(np.diag(w.data))) > 1e-12):
                raise PoptlabError(f"encoded state {k} is not diagonal")
        for i, j in itertools.combinations(range(self.n), 2):
            m, _ = self.decode(i, j)
            if self.theory is Theory.SEPBAR and not m.certified():
                raise PoptlabError(f"measurement for pair {{{i}, {j}}} lacks a separable certificate")


@dataclass
class GameResult:
    exact_win_prob: float
    empirical_win_rate: float | None
    rounds: int
    seed: int | None

    def to_json(self) -> dict:
        return {"exactWinProb": self.exact_win_prob, "empiricalWinRate": self.empirical_win_rate,
                "rounds": self.rounds, "seed": self.seed}


def _answer_probs(strategy: GameStrategy, eta: int, other: int) -> np.ndarray:
    """Probability of each outcome when Alice holds ``eta`` and the pair is ``{eta, other}``."""
    m, _ = strategy.decode(eta, other)
    p = np.array([strategy.encoder[eta].expect(e) for e in m.effects])
    if np.any(p < -NEGATIVE_PROB_TOL):
        raise PoptlabError(f"negative outcome probability {p.min():.3e} for message {eta}")
    p = np.clip(p, 0.0, 1.0)
    return p / p.sum()


def win_table(strategy: GameStrategy, n: int) -> np.ndarray:
    """``table[eta, other]`` = probability Bob answers ``eta`` correctly."""
    if strategy.n < n:
        raise ShapeError(f"strategy encodes {strategy.n} messages, game needs {n}")
    table = np.zeros((n, n))
    for eta, other in itertools.permutations(range(n), 2):
        _, answers = strategy.decode(eta, other)
        p = _answer_probs(strategy, eta, other)
        table[eta, other] = sum(pk for pk, ans in zip(p, answers) if ans == eta)
    return table


def exact_win_probability(strategy: GameStrategy, spec: GameSpec) -> float:
    table = win_table(strategy, spec.n)
    return float(np.einsum("e,ef,ef->", spec.messages(), spec.questions(), table))


def simulate(strategy: GameStrategy, spec: GameSpec, rounds: int, seed: int) -> GameResult:
    """Monte-Carlo play; chunk ``k`` draws from ``SeedSequence([seed, k])``."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    n = spec.n
    table = win_table(strategy, n)
    pm, pq = spec.messages(), spec.questions()
    cum_q = np.cumsum(pq, axis=1)
    wins = 0
    for k, start in enumerate(range(0, rounds, CHUNK)):
        size = min(CHUNK, rounds - start)
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        eta = rng.choice(n, size=size, p=pm)
        other = np.minimum((rng.random(size)[:, None] > cum_q[eta]).sum(axis=1), n - 1)
        wins += int(np.count_nonzero(rng.random(size) < table[eta, other]))
    exact = float(np.einsum("e,ef,ef->", pm, pq, table))
    return GameResult(exact, wins / rounds, rounds, seed)


# -- built-in strategies --------------------------------------------------------

@lru_cache(maxsize=None)
def _sepbar8_decoder(i: int, j: int) -> tuple[Measurement, tuple[int, ...]]:
    a, b = S8_LABELS[i], S8_LABELS[j]
    m = table1_measurement(a, b)
    report = verify_pair(s8_state(a), s8_state(b), m)
    if not report.passed:
        raise PoptlabError(f"table entry for {a}, {b} does not distinguish them")
    answers = [None, None]
    for state_idx, outcome in enumerate(report.outcome_permutation):
        answers[outcome] = (i, j)[state_idx]
    return m, tuple(answers)


def builtin_sepbar8(n: int = 8) -> GameStrategy:
    """Encode into the eight two-qubit POPT states; decode with the rotated parity table."""
    if not 2 <= n <= 8:
        raise ValueError("sepbar8 supports 2 <= n <= 8")
    return GameStrategy([s8_state(lab) for lab in S8_LABELS[:n]], _sepbar8_decoder,
                        Theory.SEPBAR, name="sepbar8")


_BELL_ORDER = ("Phi+", "Phi-", "Psi+", "Psi-")


def builtin_quantum_baseline(n: int = 8) -> GameStrategy:
    """Bell-state encoding reused cyclically; colliding pairs are answered by a fair coin."""
    if not 2 <= n <= 8:
        raise ValueError("quantum baseline supports 2 <= n <= 8")
    encoder = [bell_state(_BELL_ORDER[k % 4]) for k in range(n)]
    ident = np.eye(4)

    def decoder(i, j):
        if i % 4 == j % 4:
            half = HermitianOperator(ident / 2, (2, 2))
            return Measurement((half, half), label="coin"), (i, j)
        p = encoder[i]
        return Measurement((p, HermitianOperator(ident - p.data, (2, 2))), label=f"bell-{i % 4}"), (i, j)

    return GameStrategy(encoder, decoder, Theory.QUANTUM, name="quantum-baseline")


def builtin_classical(n: int = 2) -> GameStrategy:
    """One ``n``-level classical system; ``n = 2`` is a single bit."""
    if n < 2:
        raise ValueError("classical strategy needs n >= 2")
    basis = np.eye(n)
    encoder = [HermitianOperator(np.diag(basis[k]), (n,)) for k in range(n)]

    def decoder(i, j):
        p = encoder[i]
        return Measurement((p, HermitianOperator(np.eye(n) - p.data, (n,))), label=f"bit-{i}"), (i, j)

    return GameStrategy(encoder, decoder, Theory.CLASSICAL, name="classical")


BUILTIN_STRATEGIES = {
    "sepbar8": builtin_sepbar8,
    "quantum-baseline": builtin_quantum_baseline,
    "classical": builtin_classical,
}
