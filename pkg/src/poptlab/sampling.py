"""Seeded random operators used by property tests and the CLI demos."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .catalog import Measurement
from .cones import SeparableDecomposition
from .operators import HermitianOperator, partial_transpose


def random_unit_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng)


def random_hermitian(rng: np.random.Generator, dims: Sequence[int]) -> HermitianOperator:
    n = int(np.prod(dims))
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return HermitianOperator(0.5 * (a + a.conj().T), dims)


def random_density(rng: np.random.Generator, dims: Sequence[int], rank: int | None = None) -> HermitianOperator:
    """Induced-measure density operator (Ginibre with ``rank`` columns)."""
    n = int(np.prod(dims))
    k = rank or n
    g = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    rho = g @ g.conj().T
    return HermitianOperator(rho / np.trace(rho).real, dims)


def random_pure(rng: np.random.Generator, dims: Sequence[int]) -> HermitianOperator:
    return HermitianOperator.from_vector(random_unit_vector(rng, int(np.prod(dims))), dims)


def random_popt_state(rng: np.random.Generator, dims: Sequence[int] = (2, 2),
                      mix: float | None = None) -> HermitianOperator:
    """Partially transposed random pure state mixed with the maximally mixed state.

    The partial transpose of any product-positive operator is product-positive,
    so every sample is POPT; most are not PSD.
    """
    dims = tuple(dims)
    lam = rng.uniform(0.0, 0.5) if mix is None else mix
    w = partial_transpose(random_pure(rng, dims), [len(dims) - 1])
    n = int(np.prod(dims))
    return w * (1.0 - lam) + HermitianOperator.identity(dims) * (lam / n)


def random_product_measurement(rng: np.random.Generator, dims: Sequence[int]) -> Measurement:
    """Complete product-basis measurement ``{|a_i><a_i| (x) |b_j><b_j| ...}`` in random local bases."""
    bases = [random_unitary(rng, d) for d in dims]
    effects, certs = [], []
    for idx in np.ndindex(*dims):
        factors = [HermitianOperator.from_vector(b[:, i]) for b, i in zip(bases, idx)]
        cert = SeparableDecomposition([(1.0, factors)])
        certs.append(cert)
        effects.append(cert.reconstruct())
    return Measurement(tuple(effects), label="random-product", certificates=tuple(certs))
