"""Dense Hermitian operators on multipartite finite-dimensional systems.

Every operator carries its local dimensions ``dims``; the computational basis
is ordered lexicographically (``|00>, |01>, |10>, |11>`` for two qubits) and
subsystem ``k`` is the ``k``-th tensor factor.

Maps are represented by their Choi operator with the unnormalized maximally
entangled vector ``|chi+> = sum_i |i>|i>``::

    C = sum_ij |i><j| (x) L(|i><j|)          (input factor first)
    L(X) = Tr_in[(X^T (x) 1_out) C]
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import NotHermitianError, NotPSDError, NotUnitaryError, ShapeError

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10


def _check_dims(dims: Iterable[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise ShapeError("dims must be non-empty")
    if any(d < 2 for d in dims):
        raise ShapeError(f"every local dimension must be >= 2, got {dims}")
    return dims


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Hermitian matrix tagged with the local dimensions of its tensor factors.

    Construction hermitizes ``(M + M^dag)/2`` when the input is Hermitian up to
    ``1e-12`` (relative to its largest entry) and raises otherwise.
    """

    data: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, data, dims: Sequence[int] | None = None):
        m = np.array(data, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {m.shape}")
        dims = _check_dims(dims if dims is not None else (m.shape[0],))
        if int(np.prod(dims)) != m.shape[0]:
            raise ShapeError(f"dims {dims} do not match matrix size {m.shape[0]}")
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        resid = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        if resid > HERMITIAN_TOL * scale:
            raise NotHermitianError(f"max |M - M^dag| = {resid:.3e}")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "data", m)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_vector(cls, vec, dims: Sequence[int] | None = None) -> "HermitianOperator":
        """Rank-one projector ``|v><v|`` (no normalization applied)."""
        v = np.asarray(vec, dtype=complex).ravel()
        return cls(np.outer(v, v.conj()), dims)

    @classmethod
    def identity(cls, dims: Sequence[int]) -> "HermitianOperator":
        dims = _check_dims(dims)
        return cls(np.eye(int(np.prod(dims))), dims)

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> "HermitianOperator":
        dims = _check_dims(dims)
        n = int(np.prod(dims))
        return cls(np.zeros((n, n)), dims)

    @property
    def total(self) -> int:
        return self.data.shape[0]

    @property
    def nsys(self) -> int:
        return len(self.dims)

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def expect(self, other: "HermitianOperator | np.ndarray") -> float:
        """Real part of ``Tr(self @ other)``."""
        o = other.data if isinstance(other, HermitianOperator) else np.asarray(other)
        return float(np.einsum("ij,ji->", self.data, o).real)

    def conjugated(self, u) -> "HermitianOperator":
        """``U M U^dag``; ``u`` may be a :class:`UnitaryOperator` or any matrix."""
        um = u.data if isinstance(u, UnitaryOperator) else np.asarray(u, dtype=complex)
        return HermitianOperator(um @ self.data @ um.conj().T, self.dims)

    def with_dims(self, dims: Sequence[int]) -> "HermitianOperator":
        return HermitianOperator(self.data, dims)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, HermitianOperator):
            if other.total != self.total:
                raise ShapeError(f"size mismatch {self.total} vs {other.total}")
            return other.data
        return np.asarray(other, dtype=complex)

    def __add__(self, other):
        return HermitianOperator(self.data + self._coerce(other), self.dims)

    def __sub__(self, other):
        return HermitianOperator(self.data - self._coerce(other), self.dims)

    def __neg__(self):
        return HermitianOperator(-self.data, self.dims)

    def __mul__(self, scalar):
        if np.iscomplexobj(scalar) and np.imag(scalar) != 0:
            raise NotHermitianError("complex scalar breaks Hermiticity")
        return HermitianOperator(self.data * float(np.real(scalar)), self.dims)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __repr__(self) -> str:
        return f"HermitianOperator(dims={self.dims}, trace={self.trace():.6g})"


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    data: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, data, dims: Sequence[int] | None = None):
        m = np.array(data, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {m.shape}")
        dims = _check_dims(dims if dims is not None else (m.shape[0],))
        if int(np.prod(dims)) != m.shape[0]:
            raise ShapeError(f"dims {dims} do not match matrix size {m.shape[0]}")
        resid = float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))
        if resid > HERMITIAN_TOL:
            raise NotUnitaryError(f"max |U^dag U - 1| = {resid:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "data", m)
        object.__setattr__(self, "dims", dims)

    def tensor(self, other: "UnitaryOperator") -> "UnitaryOperator":
        return UnitaryOperator(np.kron(self.data, other.data), self.dims + other.dims)


@dataclass(frozen=True, eq=False)
class ChoiOperator:
    """Choi operator of a linear map from ``in_dims`` to ``out_dims``."""

    op: HermitianOperator
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]

    def __post_init__(self):
        in_dims = _check_dims(self.in_dims)
        out_dims = _check_dims(self.out_dims)
        if self.op.total != int(np.prod(in_dims)) * int(np.prod(out_dims)):
            raise ShapeError("Choi operator size does not match in/out dims")
        object.__setattr__(self, "in_dims", in_dims)
        object.__setattr__(self, "out_dims", out_dims)
        if self.op.dims != in_dims + out_dims:
            object.__setattr__(self, "op", self.op.with_dims(in_dims + out_dims))

    @property
    def din(self) -> int:
        return int(np.prod(self.in_dims))

    @property
    def dout(self) -> int:
        return int(np.prod(self.out_dims))

    def tensor4(self) -> np.ndarray:
        return self.op.data.reshape(self.din, self.dout, self.din, self.dout)

    @classmethod
    def from_map(cls, fn, in_dims: Sequence[int], out_dims: Sequence[int]) -> "ChoiOperator":
        """Build the Choi operator by applying ``fn`` to every matrix unit.

        ``fn`` receives and returns plain complex arrays.
        """
        in_dims, out_dims = _check_dims(in_dims), _check_dims(out_dims)
        din, dout = int(np.prod(in_dims)), int(np.prod(out_dims))
        c = np.zeros((din, dout, din, dout), dtype=complex)
        for i in range(din):
            for j in range(din):
                unit = np.zeros((din, din), dtype=complex)
                unit[i, j] = 1.0
                c[i, :, j, :] = np.asarray(fn(unit))
        return cls(HermitianOperator(c.reshape(din * dout, din * dout), in_dims + out_dims),
                   in_dims, out_dims)


def _as_op(m, dims=None) -> HermitianOperator:
    if isinstance(m, HermitianOperator):
        return m
    return HermitianOperator(m, dims)


def tensor(*ops: HermitianOperator) -> HermitianOperator:
    """Kronecker product; the result's dims are the concatenation of the inputs'."""
    if not ops:
        raise ShapeError("tensor of nothing")
    ops = [_as_op(o) for o in ops]
    data = reduce(np.kron, (o.data for o in ops))
    dims = sum((o.dims for o in ops), ())
    return HermitianOperator(data, dims)


def _check_subsystems(idx: Iterable[int], n: int) -> list[int]:
    idx = sorted(set(int(i) for i in idx))
    for i in idx:
        if not 0 <= i < n:
            raise ShapeError(f"subsystem index {i} out of range for {n} subsystems")
    return idx


def partial_trace(m: HermitianOperator, keep: Iterable[int]) -> HermitianOperator:
    """Trace out every subsystem not listed in ``keep``."""
    m = _as_op(m)
    keep = _check_subsystems(keep, m.nsys)
    if not keep:
        raise ShapeError("keep must name at least one subsystem")
    n = m.nsys
    t = m.data.reshape(m.dims + m.dims)
    # trace from the highest index down so earlier axis positions stay valid
    for k in sorted(set(range(n)) - set(keep), reverse=True):
        t = np.trace(t, axis1=k, axis2=k + t.ndim // 2)
    kd = tuple(m.dims[k] for k in keep)
    size = int(np.prod(kd))
    return HermitianOperator(t.reshape(size, size), kd)


def partial_transpose(m: HermitianOperator, subset: Iterable[int]) -> HermitianOperator:
    """Transpose (computational basis) on the listed tensor factors."""
    m = _as_op(m)
    subset = _check_subsystems(subset, m.nsys)
    n = m.nsys
    perm = list(range(2 * n))
    for k in subset:
        perm[k], perm[n + k] = perm[n + k], perm[k]
    t = m.data.reshape(m.dims + m.dims).transpose(perm)
    return HermitianOperator(t.reshape(m.total, m.total), m.dims)


def eig_hermitian(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and the matching orthonormal eigenvectors (columns)."""
    m = _as_op(m)
    w, v = np.linalg.eigh(m.data)
    return w[::-1].copy(), v[:, ::-1].copy()


def _clamped_eig(m: HermitianOperator, tol: float):
    w, v = np.linalg.eigh(m.data)
    if w[0] < -tol:
        raise NotPSDError(f"minimum eigenvalue {w[0]:.3e} below -{tol:g}")
    return np.clip(w, 0.0, None), v


def psd_sqrt_pinv(m, tol: float = PSD_TOL) -> tuple[HermitianOperator, HermitianOperator]:
    """Square root and support-restricted inverse square root of a PSD operator."""
    m = _as_op(m)
    w, v = _clamped_eig(m, tol)
    sq = np.sqrt(w)
    inv = np.zeros_like(sq)
    mask = w > tol
    inv[mask] = 1.0 / sq[mask]
    return (HermitianOperator((v * sq) @ v.conj().T, m.dims),
            HermitianOperator((v * inv) @ v.conj().T, m.dims))


def support_projector(m, tol: float = PSD_TOL) -> HermitianOperator:
    m = _as_op(m)
    w, v = _clamped_eig(m, tol)
    vs = v[:, w > tol]
    return HermitianOperator(vs @ vs.conj().T, m.dims)


def apply_map(choi: ChoiOperator, x) -> HermitianOperator:
    """``L(X) = Tr_in[(X^T (x) 1) C]``."""
    x = _as_op(x)
    if x.total != choi.din:
        raise ShapeError(f"input size {x.total} does not match map input {choi.din}")
    out = np.einsum("ji,jbic->bc", x.data, choi.tensor4())
    return HermitianOperator(out, choi.out_dims)


def choi_of_map_adjoint(choi: ChoiOperator) -> ChoiOperator:
    """Choi operator of the adjoint map, defined by Tr[L(X) Y] = Tr[X L*(Y)]."""
    d = choi.tensor4().transpose(3, 2, 1, 0).reshape(choi.op.total, choi.op.total)
    return ChoiOperator(HermitianOperator(d, choi.out_dims + choi.in_dims),
                        choi.out_dims, choi.in_dims)


def compose(outer: ChoiOperator, inner: ChoiOperator) -> ChoiOperator:
    """Choi operator of ``outer o inner``."""
    if inner.dout != outer.din:
        raise ShapeError("inner output does not match outer input")

    # matrix units are not Hermitian: split into Hermitian parts and use linearity
    def chain(unit):
        herm = 0.5 * (unit + unit.conj().T)
        anti = -0.5j * (unit - unit.conj().T)
        mid_h = apply_map(inner, HermitianOperator(herm, inner.in_dims))
        mid_a = apply_map(inner, HermitianOperator(anti, inner.in_dims))
        return apply_map(outer, mid_h).data + 1j * apply_map(outer, mid_a).data

    return ChoiOperator.from_map(chain, inner.in_dims, outer.out_dims)


def identity_choi(dims: Sequence[int]) -> ChoiOperator:
    dims = _check_dims(dims)
    d = int(np.prod(dims))
    chi = np.eye(d).reshape(-1)
    return ChoiOperator(HermitianOperator.from_vector(chi, dims + dims), dims, dims)


def frobenius_distance(a, b) -> float:
    a, b = _as_op(a), _as_op(b)
    if a.dims != b.dims:
        raise ShapeError(f"dims mismatch {a.dims} vs {b.dims}")
    return float(np.linalg.norm(a.data - b.data))


def swap(d: int = 2) -> HermitianOperator:
    s = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1.0
    return HermitianOperator(s, (d, d))


# -- JSON ---------------------------------------------------------------------

def operator_to_json(m: HermitianOperator) -> dict:
    return {"dims": list(m.dims), "re": m.data.real.tolist(), "im": m.data.imag.tolist()}


def operator_from_json(obj: dict) -> HermitianOperator:
    try:
        dims = obj["dims"]
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeError(f"malformed operator JSON: {exc}") from exc
    if re.shape != im.shape:
        raise ShapeError("re and im parts differ in shape")
    return HermitianOperator(re + 1j * im, dims)


def apply_map_to_last(choi: ChoiOperator, x) -> HermitianOperator:
    """``(I (x) L)(X)`` where ``L`` acts on the trailing ``choi.din`` dimensions of ``X``."""
    x = _as_op(x)
    if x.total % choi.din or x.total == choi.din:
        raise ShapeError(f"operator size {x.total} has no factor matching map input {choi.din}")
    dkeep = x.total // choi.din
    x4 = x.data.reshape(dkeep, choi.din, dkeep, choi.din)
    out = np.einsum("arcs,rbsd->abcd", x4, choi.tensor4())
    lead = next((x.dims[:k] for k in range(1, x.nsys) if int(np.prod(x.dims[:k])) == dkeep),
                (dkeep,))
    return HermitianOperator(out.reshape(dkeep * choi.dout, -1), lead + choi.out_dims)
