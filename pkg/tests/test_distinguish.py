import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from poptlab.catalog import (
    BELL_NAMES,
    S8_LABELS,
    A_X,
    A_Y,
    Measurement,
    StateLabel8,
    bell_state,
    parity_measurement_2q,
    rotated_measurement,
    s8,
    s24,
    table1_measurement,
    table2_measurement,
)
from poptlab.cones import PoptSearchConfig, SeparableDecomposition, complement_in_popt_cone, is_popt
from poptlab.distinguish import (
    info_dim_lower_bound,
    max_clique,
    probability_matrix,
    proposition3_inequality,
    quantum_information_dimension,
    theorem2_accounting,
    verify_family,
    verify_pair,
    verify_single_measurement,
)
from poptlab.errors import NotPSDError, ShapeError
from poptlab.operators import HermitianOperator
from poptlab.sampling import random_density, random_popt_state, random_product_measurement, random_pure

from strategies import rng_from, seeds

L8 = StateLabel8.parse


def basis_states():
    return [HermitianOperator(np.diag(np.eye(4)[k]), (2, 2)) for k in range(4)]


def basis_measurement():
    p = [HermitianOperator(np.diag(v)) for v in np.eye(2)]
    certs = tuple(SeparableDecomposition([(1.0, [p[i], p[j]])]) for i in range(2) for j in range(2))
    return Measurement(tuple(c.reconstruct() for c in certs), certificates=certs)


# -- single measurement ---------------------------------------------------------------

def test_computational_basis_is_jointly_distinguishable():
    rep = verify_single_measurement(basis_states(), basis_measurement())
    assert rep.passed and rep.max_deviation == 0.0
    assert rep.outcome_permutation == (0, 1, 2, 3)


def test_identical_states_fail():
    rep = verify_single_measurement([bell_state("Phi+")] * 2, parity_measurement_2q())
    assert not rep.passed and rep.outcome_permutation is None


def test_parity_separates_phi_plus_and_psi_plus():
    rep = verify_pair(bell_state("Phi+"), bell_state("Psi+"), parity_measurement_2q())
    assert rep.passed
    np.testing.assert_allclose(rep.prob_matrix, np.eye(2), atol=1e-15)


def test_permutation_tolerance():
    rep = verify_pair(bell_state("Psi+"), bell_state("Phi+"), parity_measurement_2q())
    assert rep.passed and rep.outcome_permutation == (1, 0)


@pytest.mark.parametrize("a,b,u", [
    ("Phi+", "Phi-", A_Y),
    ("Phi+bar", "Phi+", A_X),
])
def test_pair_examples(a, b, u):
    assert verify_pair(s8()[L8(a)], s8()[L8(b)], rotated_measurement(u, u)).passed


def test_pair_needs_two_outcomes():
    with pytest.raises(ShapeError):
        verify_pair(basis_states()[0], basis_states()[1], basis_measurement())


def test_probability_matrix_shape_mismatch():
    with pytest.raises(ShapeError):
        probability_matrix([HermitianOperator.identity((2,)) / 2], basis_measurement())


@given(seeds)
@settings(max_examples=50)
def test_pair_symmetry_and_self_failure(seed):
    rng = rng_from(seed)
    m = rotated_measurement(*[np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
                             for _ in range(2)])
    w1, w2 = random_popt_state(rng), random_popt_state(rng)
    assert verify_pair(w1, w2, m).passed == verify_pair(w2, w1, m).passed
    assert not verify_pair(w1, w1, m).passed
    raw = probability_matrix([w1, w2], m)
    assert raw.min() >= -1e-9 and raw.max() <= 1 + 1e-9


# -- families -------------------------------------------------------------------------

def brute_force_family(states, lookup):
    """Oracle: for each pair try both outcome assignments explicitly."""
    ok = 0
    for a, b in itertools.combinations(states, 2):
        m = lookup(a, b)
        m = m[0] if isinstance(m, tuple) else m
        p = np.array([[states[x].expect(e) for e in m.effects] for x in (a, b)])
        if min(np.max(np.abs(p - np.eye(2))), np.max(np.abs(p - np.eye(2)[::-1]))) <= 1e-9:
            ok += 1
    return ok


def test_table1_family_complete():
    cert = verify_family(s8(), table1_measurement)
    assert cert.complete and cert.passed_pairs == 28
    assert brute_force_family(s8(), table1_measurement) == 28
    assert cert.max_deviation <= 1e-9
    assert cert.to_json()["pairs"] == 28


def test_table2_family_complete():
    cert = verify_family(s24(), table2_measurement)
    assert cert.complete and cert.passed_pairs == 276
    assert brute_force_family(s24(), table2_measurement) == 276


def test_duplicate_state_makes_family_incomplete():
    states = {"a": bell_state("Phi+"), "b": bell_state("Phi+"), "c": bell_state("Psi+")}
    cert = verify_family(states, lambda x, y: parity_measurement_2q())
    assert not cert.complete
    assert cert.passed_pairs == 2


def test_over_strict_tolerance_fails():
    cert = verify_family(s8(), table1_measurement, tol=1e-17)
    assert not cert.complete


# -- dimensions -----------------------------------------------------------------------

def brute_force_clique(adj):
    n = adj.shape[0]
    for k in range(n, 0, -1):
        for sub in itertools.combinations(range(n), k):
            if all(adj[i, j] for i, j in itertools.combinations(sub, 2)):
                return k
    return 0


@given(seeds)
@settings(max_examples=100)
def test_max_clique_matches_brute_force(seed):
    rng = rng_from(seed)
    n = int(rng.integers(1, 10))
    upper = np.triu(rng.random((n, n)) < rng.uniform(0.2, 0.9), 1)
    adj = upper | upper.T
    clique = max_clique(adj)
    assert len(clique) == brute_force_clique(adj)
    assert all(adj[i, j] for i, j in itertools.combinations(clique, 2))


def test_max_clique_limit():
    with pytest.raises(ValueError):
        max_clique(np.zeros((33, 33), dtype=bool))


def test_quantum_information_dimension_examples():
    bells = [bell_state(b) for b in BELL_NAMES]
    assert quantum_information_dimension(bells)[0] == 4
    pool = bells + [HermitianOperator(np.diag([1.0, 0, 0, 0]), (2, 2))]
    assert quantum_information_dimension(pool)[0] == 4
    assert quantum_information_dimension(bells[:1])[0] == 1
    with pytest.raises(NotPSDError):
        quantum_information_dimension([s8()[L8("Phi+bar")]])


@given(seeds)
@settings(max_examples=20)
def test_quantum_information_dimension_bounded_by_four(seed):
    rng = rng_from(seed)
    pool = [bell_state(b) for b in BELL_NAMES] + basis_states()
    pool += [random_pure(rng, (2, 2)) for _ in range(8)]
    pool += [random_density(rng, (2, 2), rank=1) for _ in range(4)]
    assert quantum_information_dimension(pool)[0] <= 4


def test_info_dim_lower_bound_examples():
    size, labels = info_dim_lower_bound(s8(), table1_measurement)
    assert size == 8 and set(labels) == set(S8_LABELS)
    bells = {k: v for k, v in s8().items() if not k.barred}
    assert info_dim_lower_bound(bells, table1_measurement)[0] == 4
    assert info_dim_lower_bound(s24(), table2_measurement)[0] == 24


# -- accounting and inequality --------------------------------------------------------

def test_accounting_examples():
    acc = theorem2_accounting(basis_states(), basis_measurement())
    assert (acc.sum_tr_e, acc.sum_diag, acc.slack) == (4.0, 4.0, 0.0)
    unbarred = [s8()[L8(b)] for b in BELL_NAMES]
    rng = np.random.default_rng(5)
    assert theorem2_accounting(unbarred, random_product_measurement(rng, (2, 2))).slack >= 0


@given(seeds)
@settings(max_examples=100)
def test_accounting_slack_on_random_popt_instances(seed):
    rng = rng_from(seed)
    states = [random_popt_state(rng) for _ in range(4)]
    cfg = PoptSearchConfig(restarts=16, seed=seed)
    for w in states:
        assert is_popt(w, cfg)[0] and complement_in_popt_cone(w, cfg)
    m = random_product_measurement(rng, (2, 2))
    assert m.certified()
    assert theorem2_accounting(states, m).slack >= -1e-8


def test_accounting_rejects_mismatch():
    with pytest.raises(ShapeError):
        theorem2_accounting(basis_states()[:3], basis_measurement())


def test_dimension_inequality_examples():
    table = np.eye(4)
    assert proposition3_inequality(table, np.full(4, 0.25), 2, 2) == 0.0
    ref = np.array([0.1, 0.2, 0.3, 0.15])
    assert np.isclose(proposition3_inequality(table, ref, 2, 2), 4 * ref.sum() - 4)
    effects = basis_measurement().effects
    mixed = HermitianOperator.identity((2, 2)) / 4
    q_table = probability_matrix(basis_states(), basis_measurement()).T
    q_ref = [mixed.expect(e) for e in effects]
    assert abs(proposition3_inequality(q_table, q_ref, 2, 2)) <= 1e-15


def test_dimension_inequality_validation():
    with pytest.raises(ShapeError):
        proposition3_inequality(np.ones((2, 3)), np.zeros(2), 2, 2)
    with pytest.raises(ShapeError):
        proposition3_inequality(np.eye(2) * 0.5, np.zeros(2), 2, 2)
    with pytest.raises(ShapeError):
        proposition3_inequality(np.eye(2), np.array([1.5, 0]), 2, 2)


@given(seeds)
@settings(max_examples=100)
def test_dimension_inequality_nonnegative_on_generated_instances(seed):
    rng = rng_from(seed)
    base = random_product_measurement(rng, (2, 2))
    k = int(rng.integers(2, 5))
    idx = sorted(rng.choice(4, size=k, replace=False))
    family = [base.effects[i] for i in idx]  # product pure states
    effects = family[:-1] + [HermitianOperator.identity((2, 2)) - sum(family[:-1], HermitianOperator.zeros((2, 2)))]
    m = Measurement(tuple(effects))
    assert verify_single_measurement(family, m).passed
    table = np.array([[w.expect(e) for w in family] for e in m.effects])
    ref_state = random_popt_state(rng)
    ref = np.clip([ref_state.expect(e) for e in m.effects], 0, 1)
    assert proposition3_inequality(table, ref, 2, 2) >= -1e-9
