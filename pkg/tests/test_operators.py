import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from poptlab.catalog import bell_state
from poptlab.errors import NotHermitianError, NotPSDError, NotUnitaryError, ShapeError
from poptlab.operators import (
    ChoiOperator,
    HermitianOperator,
    UnitaryOperator,
    apply_map,
    apply_map_to_last,
    choi_of_map_adjoint,
    compose,
    eig_hermitian,
    frobenius_distance,
    identity_choi,
    operator_from_json,
    operator_to_json,
    partial_trace,
    partial_transpose,
    psd_sqrt_pinv,
    support_projector,
    swap,
    tensor,
)
from poptlab.sampling import random_hermitian, random_unitary

from strategies import rng_from, seeds, small_dims


# -- loop oracles ---------------------------------------------------------------

def ptrace_loop(m, dims, keep):
    """Reference partial trace by explicit index enumeration."""
    dims = list(dims)
    out_dims = [dims[k] for k in keep]
    n_out = int(np.prod(out_dims))
    out = np.zeros((n_out, n_out), dtype=complex)
    for row in itertools.product(*[range(d) for d in dims]):
        for col in itertools.product(*[range(d) for d in dims]):
            if any(row[k] != col[k] for k in range(len(dims)) if k not in keep):
                continue
            r = np.ravel_multi_index([row[k] for k in keep], out_dims)
            c = np.ravel_multi_index([col[k] for k in keep], out_dims)
            out[r, c] += m[np.ravel_multi_index(row, dims), np.ravel_multi_index(col, dims)]
    return out


def ptranspose_loop(m, dims, subset):
    out = np.zeros_like(m)
    for row in itertools.product(*[range(d) for d in dims]):
        for col in itertools.product(*[range(d) for d in dims]):
            r2, c2 = list(row), list(col)
            for k in subset:
                r2[k], c2[k] = col[k], row[k]
            out[np.ravel_multi_index(r2, dims), np.ravel_multi_index(c2, dims)] = \
                m[np.ravel_multi_index(row, dims), np.ravel_multi_index(col, dims)]
    return out


# -- construction ---------------------------------------------------------------

def test_hermitize_small_residual():
    m = np.array([[1.0, 0.5 + 1e-14], [0.5, 2.0]])
    op = HermitianOperator(m)
    assert np.max(np.abs(op.data - op.data.conj().T)) == 0.0
    assert op.dims == (2,)


def test_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        HermitianOperator(np.array([[0, 1], [0, 0]]))


@pytest.mark.parametrize("data,dims", [
    (np.zeros((2, 3)), None),
    (np.eye(4), (2, 3)),
    (np.eye(4), (4, 1)),
    (np.eye(4), ()),
])
def test_shape_errors(data, dims):
    with pytest.raises(ShapeError):
        HermitianOperator(data, dims)


def test_data_is_read_only():
    op = HermitianOperator(np.eye(2))
    with pytest.raises(ValueError):
        op.data[0, 0] = 3


def test_unitary_validation():
    assert UnitaryOperator(np.eye(2)).dims == (2,)
    with pytest.raises(NotUnitaryError):
        UnitaryOperator(np.array([[1, 1], [0, 1]]))


def test_arithmetic_and_expect():
    a = HermitianOperator(np.diag([1.0, 2.0]))
    b = HermitianOperator(np.array([[0, 1], [1, 0]]))
    assert np.allclose((a + b).data, [[1, 1], [1, 2]])
    assert np.allclose((a - b).data, [[1, -1], [-1, 2]])
    assert np.allclose((2 * a / 4).data, np.diag([0.5, 1.0]))
    assert a.expect(b) == 0.0
    assert a.expect(a) == 5.0
    with pytest.raises(NotHermitianError):
        a * 1j


# -- tensor ---------------------------------------------------------------------

def test_tensor_examples():
    z = HermitianOperator(np.diag([1.0, -1.0]))
    np.testing.assert_array_equal(tensor(HermitianOperator.identity((2,)), HermitianOperator.identity((2,))).data,
                                  np.eye(4))
    np.testing.assert_array_equal(tensor(z, z).data, np.diag([1, -1, -1, 1]))
    p0 = HermitianOperator(np.diag([1.0, 0.0]))
    p1 = HermitianOperator(np.diag([0.0, 1.0]))
    out = tensor(p0, p1)
    np.testing.assert_array_equal(out.data, np.diag([0, 1, 0, 0]))
    assert out.dims == (2, 2)


@given(seeds)
def test_tensor_associative_and_trace(seed):
    rng = rng_from(seed)
    a, b, c = (random_hermitian(rng, (d,)) for d in (2, 3, 2))
    left = tensor(tensor(a, b), c)
    right = tensor(a, tensor(b, c))
    assert np.max(np.abs(left.data - right.data)) <= 1e-14 * max(1.0, np.max(np.abs(left.data)))
    assert left.dims == right.dims == (2, 3, 2)
    assert np.isclose(tensor(a, b).trace(), a.trace() * b.trace(), rtol=1e-12, atol=1e-12)


# -- partial trace ----------------------------------------------------------------

def test_partial_trace_examples():
    phi = bell_state("Phi+")
    np.testing.assert_allclose(partial_trace(phi, [1]).data, np.eye(2) / 2, atol=1e-15)
    np.testing.assert_allclose(partial_trace(phi, [1]).data, ptrace_loop(phi.data, (2, 2), [1]))
    np.testing.assert_allclose(partial_trace(HermitianOperator.identity((2, 2)), [1]).data, 2 * np.eye(2))


@given(seeds, small_dims.filter(lambda d: len(d) >= 2))
def test_partial_trace_matches_loop(seed, dims):
    rng = rng_from(seed)
    w = random_hermitian(rng, dims)
    keep = sorted(rng.choice(len(dims), size=rng.integers(1, len(dims)), replace=False).tolist())
    np.testing.assert_allclose(partial_trace(w, keep).data, ptrace_loop(w.data, dims, keep), atol=1e-12)


@given(seeds)
def test_partial_trace_of_product(seed):
    rng = rng_from(seed)
    a, b = random_hermitian(rng, (2,)), random_hermitian(rng, (3,))
    np.testing.assert_allclose(partial_trace(tensor(a, b), [0]).data, b.trace() * a.data, atol=1e-12)


def test_partial_trace_bad_subsystem():
    with pytest.raises(ShapeError):
        partial_trace(HermitianOperator.identity((2, 2)), [2])


# -- partial transpose ------------------------------------------------------------

def test_partial_transpose_of_phi_plus_is_half_swap():
    out = partial_transpose(bell_state("Phi+"), [1])
    np.testing.assert_allclose(out.data, swap(2).data / 2, atol=1e-15)
    vals, _ = eig_hermitian(out)
    np.testing.assert_allclose(vals, [0.5, 0.5, 0.5, -0.5], atol=1e-12)


@given(seeds, small_dims)
def test_partial_transpose_matches_loop_and_involutes(seed, dims):
    rng = rng_from(seed)
    w = random_hermitian(rng, dims)
    subset = [k for k in range(len(dims)) if rng.random() < 0.5]
    pt = partial_transpose(w, subset)
    np.testing.assert_allclose(pt.data, ptranspose_loop(w.data, dims, subset), atol=1e-14)
    np.testing.assert_allclose(partial_transpose(pt, subset).data, w.data, atol=1e-14)
    assert np.isclose(pt.trace(), w.trace(), atol=1e-12)
    assert np.isclose(np.linalg.norm(pt.data), np.linalg.norm(w.data), rtol=1e-12)


@given(seeds)
def test_partial_transpose_product_rule(seed):
    rng = rng_from(seed)
    a, b = random_hermitian(rng, (2,)), random_hermitian(rng, (2,))
    np.testing.assert_allclose(partial_transpose(tensor(a, b), [1]).data,
                               np.kron(a.data, b.data.T), atol=1e-14)


# -- spectral helpers -------------------------------------------------------------

def test_eig_examples():
    vals, _ = eig_hermitian(np.diag([1.0, 3.0]))
    np.testing.assert_allclose(vals, [3, 1])
    vals, vecs = eig_hermitian(bell_state("Phi+"))
    np.testing.assert_allclose(vals, [1, 0, 0, 0], atol=1e-15)
    assert np.isclose(abs(vecs[0, 0]), 2 ** -0.5)
    vals, _ = eig_hermitian(swap(2).data / 2)
    np.testing.assert_allclose(vals, [0.5, 0.5, 0.5, -0.5], atol=1e-15)


@given(seeds, st.integers(min_value=2, max_value=16))
def test_eig_reconstruction(seed, n):
    rng = rng_from(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    m = (a + a.conj().T) / 2
    vals, vecs = eig_hermitian(m)
    assert np.all(np.diff(vals) <= 1e-12)
    rebuilt = vecs @ np.diag(vals) @ vecs.conj().T
    assert np.linalg.norm(rebuilt - m) <= 1e-10 * max(1.0, np.linalg.norm(m))


def test_psd_sqrt_pinv_examples():
    s, p = psd_sqrt_pinv(np.diag([4.0, 9.0]))
    np.testing.assert_allclose(s.data, np.diag([2, 3]), atol=1e-14)
    np.testing.assert_allclose(p.data, np.diag([0.5, 1 / 3]), atol=1e-14)
    s, p = psd_sqrt_pinv(np.diag([4.0, 0.0]))
    np.testing.assert_allclose(p.data, np.diag([0.5, 0.0]), atol=1e-14)
    proj = bell_state("Psi-")
    s, p = psd_sqrt_pinv(proj)
    np.testing.assert_allclose(s.data, proj.data, atol=1e-14)
    np.testing.assert_allclose(p.data, proj.data, atol=1e-14)
    with pytest.raises(NotPSDError):
        psd_sqrt_pinv(np.diag([1.0, -0.1]))


def test_support_projector_examples(rng):
    np.testing.assert_allclose(support_projector(np.diag([2.0, 0.0])).data, np.diag([1, 0]))
    full = random_hermitian(rng, (3,))
    full = HermitianOperator(full.data @ full.data + np.eye(3))
    np.testing.assert_allclose(support_projector(full).data, np.eye(3), atol=1e-12)
    np.testing.assert_array_equal(support_projector(HermitianOperator.zeros((2,))).data, np.zeros((2, 2)))


# -- Choi machinery -----------------------------------------------------------------

def test_identity_channel_choi(rng):
    rho = random_hermitian(rng, (3,))
    np.testing.assert_allclose(apply_map(identity_choi((3,)), rho).data, rho.data, atol=1e-14)


def test_swap_is_the_transpose_map_choi(rng):
    rho = random_hermitian(rng, (2,))
    choi = ChoiOperator(swap(2), (2,), (2,))
    np.testing.assert_allclose(apply_map(choi, rho).data, rho.data.T, atol=1e-14)


def test_depolarizing_to_identity():
    d = 3
    choi = ChoiOperator.from_map(lambda x: np.trace(x) * np.eye(d) / d, (d,), (d,))
    out = apply_map(choi, np.diag([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(out.data, np.eye(d) / d, atol=1e-15)


def test_adjoint_examples(rng):
    ident = identity_choi((2,))
    np.testing.assert_allclose(choi_of_map_adjoint(ident).op.data, ident.op.data)
    unital = ChoiOperator.from_map(lambda x: np.trace(x) * np.eye(2) / 2, (2,), (2,))
    out = apply_map(choi_of_map_adjoint(unital), np.eye(2))
    assert np.isclose(out.trace(), 2.0)
    c = ChoiOperator(random_hermitian(rng, (2, 3)), (2,), (3,))
    np.testing.assert_allclose(choi_of_map_adjoint(choi_of_map_adjoint(c)).op.data, c.op.data)


@given(seeds)
def test_adjoint_pairing(seed):
    rng = rng_from(seed)
    c = ChoiOperator(random_hermitian(rng, (2, 3)), (2,), (3,))
    x, y = random_hermitian(rng, (2,)), random_hermitian(rng, (3,))
    lhs = apply_map(c, x).expect(y)
    rhs = x.expect(apply_map(choi_of_map_adjoint(c), y))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@given(seeds)
def test_local_adjoint_pairing_on_triples(seed):
    rng = rng_from(seed)
    c = ChoiOperator(random_hermitian(rng, (2, 2)), (2,), (2,))
    x = random_hermitian(rng, (2, 2))
    a, b = random_hermitian(rng, (2,)), random_hermitian(rng, (2,))
    lhs = apply_map_to_last(c, x).expect(tensor(a, b))
    rhs = x.expect(tensor(a, apply_map(choi_of_map_adjoint(c), b)))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_compose_matches_sequential_application(rng):
    u = random_unitary(rng, 2)
    first = ChoiOperator.from_map(lambda x: u @ x @ u.conj().T, (2,), (2,))
    second = ChoiOperator(swap(2), (2,), (2,))
    both = compose(second, first)
    x = random_hermitian(rng, (2,))
    np.testing.assert_allclose(apply_map(both, x).data, apply_map(second, apply_map(first, x)).data, atol=1e-13)


def test_frobenius_examples():
    assert frobenius_distance(np.eye(2), np.eye(2)) == 0.0
    assert np.isclose(frobenius_distance(np.diag([1.0, 0]), np.diag([0.0, 1])), np.sqrt(2))
    assert np.isclose(frobenius_distance(bell_state("Phi+"), bell_state("Phi-")), np.sqrt(2))


@given(seeds, small_dims)
def test_json_round_trip(seed, dims):
    w = random_hermitian(rng_from(seed), dims)
    back = operator_from_json(operator_to_json(w))
    assert back.dims == w.dims
    np.testing.assert_array_equal(back.data, w.data)


def test_json_malformed():
    with pytest.raises(ShapeError):
        operator_from_json({"dims": [2]})
    with pytest.raises(ShapeError):
        operator_from_json({"dims": [2], "re": [[1, 0], [0, 1]], "im": [[0]]})
