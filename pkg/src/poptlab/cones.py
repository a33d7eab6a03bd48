"""Membership tests for the SEP, quantum and SEP-bar (POPT) cones.

The POPT test minimizes ``<a (x) b (x) ...| W |a (x) b (x) ...>`` over pure
product vectors by alternating minimization: with every factor but one held
fixed, ``W`` contracts to a single-site operator whose lowest eigenvector is
the exact optimum for that factor.  The problem is nonconvex, so we run many
seeded restarts and, for qubit factors, seed one extra run from a Bloch-sphere
grid.  The result is a heuristic upper estimate of the true minimum.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NonUnitTraceError, ShapeError
from .operators import HermitianOperator, _as_op, operator_from_json, operator_to_json, tensor

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class PoptSearchConfig:
    restarts: int = 64
    max_iters: int = 500
    convergence_tol: float = 1e-12
    membership_tol: float = 1e-9
    seed: int = 0
    grid: bool = True

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.convergence_tol <= 0 or self.membership_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class PoptReport:
    min_value: float
    argmin: list[np.ndarray]
    is_member: bool
    boundary: bool
    restart_values: list[float]
    grid_value: float | None = None

    def to_json(self) -> dict:
        return {
            "minValue": self.min_value,
            "argmin": [{"re": v.real.tolist(), "im": v.imag.tolist()} for v in self.argmin],
            "isMember": self.is_member,
            "boundary": self.boundary,
            "restartValues": list(self.restart_values),
            "gridValue": self.grid_value,
        }


class StateClass(enum.Enum):
    QUANTUM = "Quantum"
    WITNESS_STATE = "WitnessState"
    NOT_A_STATE = "NotAState"


def _contract_spec(n: int, site: int) -> str:
    """einsum spec contracting all sites but ``site`` of a batched operator."""
    rows = _LETTERS[:n]
    cols = _LETTERS[n:2 * n]
    vecs = []
    for k in range(n):
        if k == site:
            continue
        vecs.append("z" + rows[k])
        vecs.append("z" + cols[k])
    return f"{rows}{cols}," + ",".join(vecs) + f"->z{rows[site]}{cols[site]}"


def _effective(t: np.ndarray, vecs: list[np.ndarray], site: int) -> np.ndarray:
    n = len(vecs)
    operands = []
    for k in range(n):
        if k == site:
            continue
        operands.append(vecs[k].conj())
        operands.append(vecs[k])
    return np.einsum(_contract_spec(n, site), t, *operands, optimize=True)


def product_expectation(w: HermitianOperator, factors: Sequence[np.ndarray]) -> float:
    v = factors[0]
    for f in factors[1:]:
        v = np.kron(v, f)
    return float(np.real(v.conj() @ w.data @ v))


def _random_unit(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def _alternate(t: np.ndarray, vecs: list[np.ndarray], max_iters: int, tol: float):
    """Batched alternating minimization; ``vecs[k]`` has shape (batch, d_k)."""
    vecs = [v.copy() for v in vecs]
    n = len(vecs)
    prev = np.full(vecs[0].shape[0], np.inf)
    vals = prev
    for _ in range(max_iters):
        for k in range(n):
            w, v = np.linalg.eigh(_effective(t, vecs, k))
            vecs[k] = v[:, :, 0]
            vals = w[:, 0]
        if np.all(prev - vals < tol):
            break
        prev = vals
    return vals, vecs


def _bloch_grid(ntheta: int = 12, nphi: int = 24) -> np.ndarray:
    theta = np.linspace(0.0, np.pi, ntheta)
    phi = np.linspace(0.0, 2 * np.pi, nphi, endpoint=False)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    return np.stack([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)], axis=-1).reshape(-1, 2)


def _grid_start(t: np.ndarray, dims: tuple[int, ...]):
    """Best grid point over all-but-last qubit factors, exact on the last factor."""
    n = len(dims)
    grid = _bloch_grid()
    g = len(grid)
    total = int(np.prod(dims))
    eff = t.reshape(1, total, total)
    for k in range(n - 1):
        rest = total // 2
        eff = eff.reshape(-1, 2, rest, 2, rest)
        eff = np.einsum("gi,gj,bixjy->bgxy", grid.conj(), grid, eff, optimize=True)
        eff = eff.reshape(-1, rest, rest)
        total = rest
    if total == 2:
        # closed-form lowest eigenvalue; batched eigh on ~1e5 2x2 blocks is slow
        a, dd = eff[:, 0, 0].real, eff[:, 1, 1].real
        low = 0.5 * (a + dd) - np.sqrt(0.25 * (a - dd) ** 2 + np.abs(eff[:, 0, 1]) ** 2)
    else:
        low = np.linalg.eigvalsh(eff)[:, 0]
    best = int(np.argmin(low))
    w, v = np.linalg.eigh(eff[best])
    idx = np.unravel_index(best, (g,) * (n - 1))
    start = [grid[i][None, :] for i in idx] + [v[None, :, 0]]
    return float(w[0]), start


def min_product_expectation(w, cfg: PoptSearchConfig | None = None) -> PoptReport:
    """Minimum of ``<x|W|x>`` over pure product vectors ``x`` (heuristic search)."""
    cfg = cfg or PoptSearchConfig()
    w = _as_op(w)
    if w.nsys < 2:
        raise ShapeError("product minimization needs at least two subsystems")
    dims = w.dims
    t = w.data.reshape(dims + dims)

    starts = []
    for r in range(cfg.restarts):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed & (2**64 - 1), r]))
        starts.append([_random_unit(rng, d) for d in dims])
    batch = [np.stack([s[k] for s in starts]) for k in range(len(dims))]
    vals, vecs = _alternate(t, batch, cfg.max_iters, cfg.convergence_tol)

    # re-evaluate at the returned vectors so the report is self-consistent
    restart_values = [product_expectation(w, [v[r] for v in vecs]) for r in range(cfg.restarts)]
    best = int(np.argmin(restart_values))
    min_value = restart_values[best]
    argmin = [v[best].copy() for v in vecs]

    grid_value = None
    if cfg.grid and all(d == 2 for d in dims[:-1]) and len(dims) <= 3:
        grid_value, gstart = _grid_start(t, dims)
        _, gvecs = _alternate(t, gstart, cfg.max_iters, cfg.convergence_tol)
        gval = product_expectation(w, [v[0] for v in gvecs])
        if gval < min_value:
            min_value = gval
            argmin = [v[0].copy() for v in gvecs]

    is_member = min_value >= -cfg.membership_tol
    return PoptReport(
        min_value=min_value,
        argmin=argmin,
        is_member=bool(is_member),
        boundary=bool(is_member and min_value < 0),
        restart_values=restart_values,
        grid_value=grid_value,
    )


def is_popt(w, cfg: PoptSearchConfig | None = None, normalized: bool = False):
    cfg = cfg or PoptSearchConfig()
    w = _as_op(w)
    report = min_product_expectation(w, cfg)
    ok = report.is_member
    if normalized:
        ok = ok and abs(w.trace() - 1.0) <= 1e-9
    return bool(ok), report


def is_psd(w, tol: float = 1e-10) -> bool:
    w = _as_op(w)
    return bool(np.linalg.eigvalsh(w.data)[0] >= -tol)


def classify_state(w, cfg: PoptSearchConfig | None = None) -> StateClass:
    w = _as_op(w)
    if abs(w.trace() - 1.0) > 1e-9:
        raise NonUnitTraceError(f"trace {w.trace():.12g} != 1")
    if is_psd(w):
        return StateClass.QUANTUM
    if is_popt(w, cfg)[0]:
        return StateClass.WITNESS_STATE
    return StateClass.NOT_A_STATE


def complement_in_popt_cone(w, cfg: PoptSearchConfig | None = None) -> bool:
    """Whether ``1 - W`` is positive on every product test."""
    w = _as_op(w)
    return min_product_expectation(HermitianOperator.identity(w.dims) - w, cfg).is_member


@dataclass
class SeparableDecomposition:
    """Weighted sum of product operators, ``sum_i p_i A_i (x) B_i (x) ...``."""

    terms: list[tuple[float, list[HermitianOperator]]] = field(default_factory=list)

    def reconstruct(self) -> HermitianOperator:
        if not self.terms:
            raise ShapeError("empty decomposition")
        acc = None
        for weight, factors in self.terms:
            term = tensor(*factors) * weight
            acc = term if acc is None else acc + term
        return acc

    def conjugated(self, local_unitaries: Sequence[np.ndarray]) -> "SeparableDecomposition":
        return SeparableDecomposition([
            (wt, [f.conjugated(u) for f, u in zip(factors, local_unitaries)])
            for wt, factors in self.terms
        ])

    def to_json(self) -> dict:
        return {"terms": [{"weight": float(wt), "factors": [operator_to_json(f) for f in fs]}
                          for wt, fs in self.terms]}

    @classmethod
    def from_json(cls, obj: dict) -> "SeparableDecomposition":
        try:
            terms = [(float(t["weight"]), [operator_from_json(f) for f in t["factors"]])
                     for t in obj["terms"]]
        except (KeyError, TypeError) as exc:
            raise ShapeError(f"malformed decomposition JSON: {exc}") from exc
        return cls(terms)


def verify_separable_decomposition(d: SeparableDecomposition, target, tol: float = 1e-10) -> bool:
    target = _as_op(target)
    for weight, factors in d.terms:
        if weight < 0:
            return False
        if not all(is_psd(f, tol) for f in factors):
            return False
    recon = d.reconstruct()
    if recon.total != target.total:
        raise ShapeError(f"decomposition size {recon.total} vs target {target.total}")
    return bool(np.max(np.abs(recon.data - target.data)) <= tol)
