"""Named states, rotations and separable parity measurements.

Two families are built here:

* ``s8``: the four Bell projectors and their partial transposes on the second
  qubit, pairwise distinguished by rotated two-qubit parity measurements
  looked up in :func:`table1_measurement`.
* ``s24``: eight GHZ-type three-qubit projectors, each also transposed on
  qubit 2 and on qubits 2 and 3, separated by three-qubit Pauli parity
  measurements (:func:`table2_measurement`).

Up-spin convention: ``|r>`` is the +1 eigenvector of ``r . sigma``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .cones import SeparableDecomposition, verify_separable_decomposition
from .errors import InvalidMeasurementError, NoSeparatingRowError, SameStateError, ShapeError
from .operators import HermitianOperator, UnitaryOperator, partial_transpose

SQRT_HALF = 1.0 / np.sqrt(2.0)
BELL_NAMES = ("Phi+", "Phi-", "Psi+", "Psi-")
GHZ_INDICES = ("000", "001", "010", "011")
PAULI_AXES = ("x", "y", "z")


class StateLabel8(NamedTuple):
    bell: str
    barred: bool = False

    def __str__(self) -> str:
        return self.bell + ("bar" if self.barred else "")

    @classmethod
    def parse(cls, text: str) -> "StateLabel8":
        barred = text.endswith("bar")
        bell = text[:-3] if barred else text
        if bell not in BELL_NAMES:
            raise ValueError(f"unknown two-qubit label {text!r}")
        return cls(bell, barred)


class StateLabel24(NamedTuple):
    ghz: str
    sign: str
    bar_level: int = 0

    def __str__(self) -> str:
        return f"Phi{self.sign}{self.ghz}" + "bar" * self.bar_level

    @classmethod
    def parse(cls, text: str) -> "StateLabel24":
        level = 0
        while text.endswith("bar"):
            text = text[:-3]
            level += 1
        if len(text) != 7 or not text.startswith("Phi") or text[3] not in "+-" \
                or text[4:] not in GHZ_INDICES or level > 2:
            raise ValueError(f"unknown three-qubit label {text!r}")
        return cls(text[4:], text[3], level)


S8_LABELS = tuple(StateLabel8(b, False) for b in BELL_NAMES) + \
    tuple(StateLabel8(b, True) for b in BELL_NAMES)
S24_LABELS = tuple(StateLabel24(g, s, lvl) for lvl in range(3) for g in GHZ_INDICES for s in "+-")


@dataclass(frozen=True, eq=False)
class Measurement:
    """Complete set of effects, optionally with separable certificates per effect."""

    effects: tuple[HermitianOperator, ...]
    label: str = ""
    certificates: tuple[SeparableDecomposition, ...] | None = field(default=None)

    def __post_init__(self):
        effects = tuple(self.effects)
        if not effects:
            raise InvalidMeasurementError("measurement has no effects")
        dims = effects[0].dims
        if any(e.dims != dims for e in effects):
            raise InvalidMeasurementError("effects act on different systems")
        total = sum(e.data for e in effects)
        resid = float(np.max(np.abs(total - np.eye(effects[0].total))))
        if resid > 1e-10:
            raise InvalidMeasurementError(f"effects sum to identity only within {resid:.3e}")
        for e in effects:
            ev = np.linalg.eigvalsh(e.data)
            if ev[0] < -1e-10 or ev[-1] > 1 + 1e-10:
                raise InvalidMeasurementError("effect eigenvalues outside [0, 1]")
        if self.certificates is not None and len(self.certificates) != len(effects):
            raise InvalidMeasurementError("one certificate per effect required")
        object.__setattr__(self, "effects", effects)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.effects[0].dims

    def __len__(self) -> int:
        return len(self.effects)

    def certified(self, tol: float = 1e-10) -> bool:
        """True when every effect carries a separable certificate that reproduces it."""
        if self.certificates is None:
            return False
        return all(verify_separable_decomposition(c, e, tol)
                   for c, e in zip(self.certificates, self.effects))


# -- two-qubit family -----------------------------------------------------------

def _ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


_BELL_VECTORS = {
    "Phi+": SQRT_HALF * (_ket("00") + _ket("11")),
    "Phi-": SQRT_HALF * (_ket("00") - _ket("11")),
    "Psi+": SQRT_HALF * (_ket("01") + _ket("10")),
    "Psi-": SQRT_HALF * (_ket("01") - _ket("10")),
}


def bell_state(label) -> HermitianOperator:
    name = label.bell if isinstance(label, StateLabel8) else str(label)
    if name not in _BELL_VECTORS:
        raise ValueError(f"unknown Bell state {name!r}")
    return HermitianOperator.from_vector(_BELL_VECTORS[name], (2, 2))


def s8_state(label: StateLabel8) -> HermitianOperator:
    w = bell_state(label)
    return partial_transpose(w, [1]) if label.barred else w


def s8() -> dict[StateLabel8, HermitianOperator]:
    """The eight two-qubit states, Bell states first then their partial transposes."""
    return {lab: s8_state(lab) for lab in S8_LABELS}


IDENTITY_2 = UnitaryOperator(np.eye(2))
A_X = UnitaryOperator(SQRT_HALF * np.array([[1, -1j], [-1j, 1]]))
A_Y = UnitaryOperator(SQRT_HALF * np.array([[1, -1], [1, 1]]))


def rotation_unitaries() -> dict[str, UnitaryOperator]:
    return {"1": IDENTITY_2, "Ax": A_X, "Ay": A_Y}


def _proj(v) -> HermitianOperator:
    return HermitianOperator.from_vector(v)


def parity_measurement_2q() -> Measurement:
    """``{E_even, E_odd}`` in the computational basis, with product certificates."""
    p0, p1 = _proj(_ket("0")), _proj(_ket("1"))
    even_cert = SeparableDecomposition([(1.0, [p0, p0]), (1.0, [p1, p1])])
    odd_cert = SeparableDecomposition([(1.0, [p0, p1]), (1.0, [p1, p0])])
    return Measurement((even_cert.reconstruct(), odd_cert.reconstruct()),
                       label="M[1(x)1]", certificates=(even_cert, odd_cert))


def _as_unitary(u) -> UnitaryOperator:
    return u if isinstance(u, UnitaryOperator) else UnitaryOperator(u)


def rotated_measurement(u, v, label: str | None = None) -> Measurement:
    """Parity measurement conjugated by ``U (x) V``."""
    u, v = _as_unitary(u), _as_unitary(v)
    if u.data.shape != (2, 2) or v.data.shape != (2, 2):
        raise ShapeError("rotated_measurement expects 2x2 unitaries")
    base = parity_measurement_2q()
    uv = u.tensor(v)
    effects = tuple(e.conjugated(uv) for e in base.effects)
    certs = tuple(c.conjugated([u.data, v.data]) for c in base.certificates)
    return Measurement(effects, label=label or "M[U(x)V]", certificates=certs)


# rows/columns ordered as BELL_NAMES; entries name the local rotation used on both qubits
_TABLE1_SAME_LEVEL = (
    (None, "Ay", "1", "1"),
    ("Ay", None, "1", "1"),
    ("1", "1", None, "Ay"),
    ("1", "1", "Ay", None),
)
# row: barred state, column: unbarred state
_TABLE1_CROSS_LEVEL = (
    ("Ax", "Ay", "1", "1"),
    ("Ay", "Ax", "1", "1"),
    ("1", "1", "Ax", "Ay"),
    ("1", "1", "Ay", "Ax"),
)


def table1_entry(i: StateLabel8, j: StateLabel8) -> str:
    """Name of the rotation (``"1"``, ``"Ax"`` or ``"Ay"``) listed for the pair."""
    if i == j:
        raise SameStateError(f"{i} cannot be distinguished from itself")
    if i.barred == j.barred:
        entry = _TABLE1_SAME_LEVEL[BELL_NAMES.index(i.bell)][BELL_NAMES.index(j.bell)]
    else:
        bar, plain = (i, j) if i.barred else (j, i)
        entry = _TABLE1_CROSS_LEVEL[BELL_NAMES.index(bar.bell)][BELL_NAMES.index(plain.bell)]
    return entry


@lru_cache(maxsize=None)
def _rotated_by_name(name: str) -> Measurement:
    u = rotation_unitaries()[name]
    return rotated_measurement(u, u, label=f"M[{name}(x){name}]")


def table1_measurement(i: StateLabel8, j: StateLabel8) -> Measurement:
    return _rotated_by_name(table1_entry(i, j))


# -- three-qubit family ---------------------------------------------------------

def ghz_vector(ghz: str, sign: str) -> np.ndarray:
    flipped = "".join("1" if b == "0" else "0" for b in ghz)
    s = 1.0 if sign == "+" else -1.0
    return SQRT_HALF * (_ket(ghz) + s * _ket(flipped))


def s24_state(label: StateLabel24) -> HermitianOperator:
    w = HermitianOperator.from_vector(ghz_vector(label.ghz, label.sign), (2, 2, 2))
    if label.bar_level == 1:
        return partial_transpose(w, [1])
    if label.bar_level == 2:
        return partial_transpose(w, [1, 2])
    return w


def ghz_states() -> dict[StateLabel24, HermitianOperator]:
    return {lab: s24_state(lab) for lab in S24_LABELS if lab.bar_level == 0}


def s24() -> dict[StateLabel24, HermitianOperator]:
    return {lab: s24_state(lab) for lab in S24_LABELS}


_UP = {
    "x": SQRT_HALF * np.array([1, 1], dtype=complex),
    "y": SQRT_HALF * np.array([1, 1j], dtype=complex),
    "z": np.array([1, 0], dtype=complex),
}
_DOWN = {
    "x": SQRT_HALF * np.array([1, -1], dtype=complex),
    "y": SQRT_HALF * np.array([1, -1j], dtype=complex),
    "z": np.array([0, 1], dtype=complex),
}


def spin_projectors(axis: str) -> tuple[HermitianOperator, HermitianOperator]:
    """``(|r><r|, |r_perp><r_perp|)`` for the +1 / -1 eigenvectors of ``r . sigma``."""
    if axis not in PAULI_AXES:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    return _proj(_UP[axis]), _proj(_DOWN[axis])


def parity_measurement_3q(m: str, n: str, p: str,
                          counted: Sequence[int] | None = None) -> Measurement:
    """``{E_odd, E_even}`` for local spin measurements along ``(m, n, p)``.

    ``E_odd`` collects the product outcomes with an odd number of up spins among
    the ``counted`` sites (all three by default).  Uncounted sites are summed
    over, so their factor in the certificate is the identity.
    """
    axes = (m, n, p)
    counted = tuple(range(3)) if counted is None else tuple(sorted(set(counted)))
    if not counted or any(k not in (0, 1, 2) for k in counted):
        raise ValueError(f"invalid counted sites {counted}")
    projs = [spin_projectors(a) for a in axes]
    ident = HermitianOperator.identity((2,))
    odd_terms, even_terms = [], []
    for bits in itertools.product((0, 1), repeat=len(counted)):
        factors = []
        for site in range(3):
            if site in counted:
                factors.append(projs[site][bits[counted.index(site)]])
            else:
                factors.append(ident)
        ups = sum(1 for b in bits if b == 0)
        (odd_terms if ups % 2 else even_terms).append((1.0, factors))
    odd, even = SeparableDecomposition(odd_terms), SeparableDecomposition(even_terms)
    tag = "".join(axes)
    if len(counted) < 3:
        tag += "@" + "".join(str(k + 1) for k in counted)
    return Measurement((odd.reconstruct().with_dims((2, 2, 2)),
                        even.reconstruct().with_dims((2, 2, 2))),
                       label=f"parity({tag})", certificates=(odd, even))


class Table2Row(NamedTuple):
    axes: tuple[str, str, str]
    counted: tuple[int, ...]

    @property
    def row_id(self) -> str:
        return "(" + ",".join(self.axes) + ")"

    def measurement(self) -> Measurement:
        return _parity3_cached(self.axes, self.counted)


@lru_cache(maxsize=None)
def _parity3_cached(axes, counted) -> Measurement:
    return parity_measurement_3q(*axes, counted=counted)


_ROW_AXES = (
    ("y", "y", "x"), ("y", "x", "y"), ("x", "x", "x"), ("x", "y", "y"),
    ("y", "z", "z"), ("z", "z", "y"), ("z", "y", "z"),
)


def table2_rows(literal: bool = False) -> tuple[Table2Row, ...]:
    """The seven Pauli parity rows.

    A single ``y`` factor next to two ``z`` factors has zero expectation on
    every state of the family, so three-site parity is uninformative for the
    last three rows.  Unless ``literal`` is set, those rows count up spins on
    the ``z`` sites only (the ``y`` outcome is discarded).
    """
    rows = []
    for axes in _ROW_AXES:
        zs = tuple(k for k, a in enumerate(axes) if a == "z")
        counted = (0, 1, 2) if literal or not zs else zs
        rows.append(Table2Row(axes, counted))
    return tuple(rows)


def _outcome_bit(w: HermitianOperator, m: Measurement, tol: float = 1e-9) -> int | None:
    p = w.expect(m.effects[0])
    if abs(p - 1.0) <= tol:
        return 1
    if abs(p) <= tol:
        return 0
    return None


@lru_cache(maxsize=None)
def table2_codewords(literal: bool = False) -> dict[StateLabel24, tuple[int | None, ...]]:
    """Per state, the odd-outcome bit under each row (``None`` if not deterministic)."""
    states = s24()
    rows = table2_rows(literal)
    return {lab: tuple(_outcome_bit(w, r.measurement()) for r in rows) for lab, w in states.items()}


def table2_measurement(i: StateLabel24, j: StateLabel24,
                       row: str | None = None) -> tuple[Measurement, str]:
    """First parity row whose recomputed columns place ``i`` and ``j`` apart.

    With ``row`` (e.g. ``"(z,y,z)"``) only that row is tried.
    """
    if i == j:
        raise SameStateError(f"{i} cannot be distinguished from itself")
    codes = table2_codewords()
    for k, candidate in enumerate(table2_rows()):
        if row is not None and candidate.row_id != row:
            continue
        a, b = codes[i][k], codes[j][k]
        if a is not None and b is not None and a != b:
            return candidate.measurement(), candidate.row_id
    raise NoSeparatingRowError(f"no parity row separates {i} and {j}"
                               + (f" (restricted to {row})" if row else ""))


# Columns exactly as printed (odd column first), one entry per bar level.
PRINTED_TABLE2 = {
    "(y,y,x)": (
        (("Phi-000", "Phi-001", "Phi+010", "Phi+011"), ("Phi+000", "Phi+001", "Phi-010", "Phi-011")),
        (("Phi+000", "Phi+001", "Phi-010", "Phi-011"), ("Phi-000", "Phi-001", "Phi+010", "Phi+011")),
        (("Phi+000", "Phi+001", "Phi-010", "Phi-011"), ("Phi-000", "Phi-001", "Phi+010", "Phi+011")),
    ),
    "(y,x,y)": (
        (("Phi-000", "Phi+001", "Phi-010", "Phi+011"), ("Phi+000", "Phi-001", "Phi+010", "Phi-011")),
        (("Phi-000", "Phi+001", "Phi-010", "Phi+011"), ("Phi+000", "Phi-001", "Phi+010", "Phi-011")),
        (("Phi+000", "Phi-001", "Phi+010", "Phi-011"), ("Phi-000", "Phi+001", "Phi-010", "Phi+011")),
    ),
    "(x,x,x)": (
        (("Phi+000", "Phi+001", "Phi+010", "Phi+011"), ("Phi-000", "Phi-001", "Phi-010", "Phi-011")),
        (("Phi+000", "Phi+001", "Phi+010", "Phi+011"), ("Phi-000", "Phi-001", "Phi-010", "Phi-011")),
        (("Phi+000", "Phi+001", "Phi+010", "Phi+011"), ("Phi-000", "Phi-001", "Phi-010", "Phi-011")),
    ),
    "(x,y,y)": (
        (("Phi-000", "Phi+001", "Phi+010", "Phi-011"), ("Phi+000", "Phi-001", "Phi-010", "Phi+011")),
        (("Phi+000", "Phi-001", "Phi-010", "Phi+011"), ("Phi-000", "Phi+001", "Phi+010", "Phi-011")),
        (("Phi-000", "Phi+001", "Phi+010", "Phi-011"), ("Phi+000", "Phi-001", "Phi-010", "Phi+011")),
    ),
    "(y,z,z)": (
        (("Phi+000", "Phi-000", "Phi+011", "Phi-011"), ("Phi+001", "Phi-001", "Phi+010", "Phi-010")),
        (("Phi+000", "Phi-000", "Phi+011", "Phi-011"), ("Phi+001", "Phi-001", "Phi+010", "Phi-010")),
        (("Phi+000", "Phi-000", "Phi+011", "Phi-011"), ("Phi+001", "Phi-001", "Phi+010", "Phi-010")),
    ),
    "(z,z,y)": (
        (("Phi+000", "Phi-000", "Phi+001", "Phi-011"), ("Phi+010", "Phi-010", "Phi+011", "Phi-011")),
        (("Phi+000", "Phi-000", "Phi+001", "Phi-001"), ("Phi+010", "Phi-010", "Phi+011", "Phi-011")),
        (("Phi+000", "Phi-000", "Phi+001", "Phi-001"), ("Phi+010", "Phi-010", "Phi+011", "Phi-011")),
    ),
    "(z,y,z)": (
        (("Phi+000", "Phi-000", "Phi+010", "Phi-010"), ("Phi+001", "Phi-001", "Phi+011", "Phi-011")),
        (("Phi+000", "Phi-000", "Phi+010", "Phi-010"), ("Phi+001", "Phi-001", "Phi+011", "Phi-011")),
        (("Phi+000", "Phi-000", "Phi+010", "Phi-010"), ("Phi+001", "Phi-001", "Phi+011", "Phi-011")),
    ),
}


@dataclass
class Table2Divergence:
    row_id: str
    bar_level: int
    state: str
    printed: str
    computed: str


def table2_crosscheck() -> list[Table2Divergence]:
    """Compare recomputed columns against the printed table.

    Column labels are arbitrary, so each row is first aligned by whichever
    labelling (odd/even or swapped) agrees with more printed entries.
    """
    codes = table2_codewords()
    divergences = []
    for k, row in enumerate(table2_rows()):
        printed = PRINTED_TABLE2[row.row_id]
        placements = []  # (level, state name, printed columns containing it, computed bit)
        for level in range(3):
            odd_col, even_col = printed[level]
            for g in GHZ_INDICES:
                for s in "+-":
                    name = f"Phi{s}{g}"
                    cols = {1} if name in odd_col else set()
                    if name in even_col:
                        cols.add(0)
                    placements.append((level, name, cols, codes[StateLabel24(g, s, level)][k]))
        agree = sum(1 for _, _, cols, bit in placements if cols == {bit})
        agree_swapped = sum(1 for _, _, cols, bit in placements if bit is not None and cols == {1 - bit})
        flip = agree_swapped > agree
        names = {1: "odd", 0: "even"}
        for level, name, cols, bit in placements:
            want = None if bit is None else (1 - bit if flip else bit)
            if cols != {want}:
                shown = "+".join(names[c] for c in sorted(cols, reverse=True)) or "missing"
                divergences.append(Table2Divergence(
                    row.row_id, level, name + "bar" * level, shown,
                    "nondeterministic" if want is None else names[want]))
    return divergences
