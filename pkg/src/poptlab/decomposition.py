"""Writing a POPT state as a positive unital map applied to a fixed pure state.

Pipeline for ``W`` on ``A (x) B`` (``S`` is a copy of ``A``, ``C`` a qubit)::

    P_B    support projector of W_B = Tr_A W
    W'     = W + 1_A (x) (1 - P_B)                      (W'_B is full rank)
    W''    = (1 (x) W'_B^-1/2) W' (1 (x) W'_B^-1/2)     (Tr_A W'' = 1_B)
    U      map S -> B with Choi operator W''            (positive, unital)
    V      = W'_B^1/2 P_B,   V' = sqrt(1 - V^dag V)
    Y(M)   = V^dag <0|M|0> V + V'^dag <1|M|1> V'        (CP, unital; BC -> B)
    Lambda = Y o (U (x) id_C)                           (positive, unital; SC -> B)
    psi    = |chi+>_AS |0>_C / sqrt(d_S)

and then ``W = d_S (I (x) Lambda)(psi)``.  The factor ``d_S`` cannot be folded
into ``Lambda`` without breaking unitality, nor into ``psi`` without breaking
its normalization, so it is carried explicitly as ``weight``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cones import PoptSearchConfig, PoptReport, is_popt, is_psd, min_product_expectation
from .errors import NonUnitTraceError, NotPOPTError, NotPSDError, ShapeError
from .operators import (
    ChoiOperator,
    HermitianOperator,
    _as_op,
    apply_map,
    apply_map_to_last,
    choi_of_map_adjoint,
    frobenius_distance,
    operator_from_json,
    operator_to_json,
    partial_trace,
    psd_sqrt_pinv,
    support_projector,
    tensor,
)

RESIDUAL_TOL = 1e-8


@dataclass
class Prop1Decomposition:
    w: HermitianOperator
    w_prime: HermitianOperator
    p_b: HermitianOperator
    p_b_perp: HermitianOperator
    w_prime_b: HermitianOperator
    w_double_prime: HermitianOperator
    v_b: HermitianOperator
    v_b_prime: HermitianOperator
    choi_u: ChoiOperator
    choi_lambda: ChoiOperator
    psi_ar: HermitianOperator
    weight: float

    @property
    def d_a(self) -> int:
        return self.w_double_prime.dims[0]

    def reconstruct(self) -> HermitianOperator:
        return apply_map_to_last(self.choi_lambda, self.psi_ar) * self.weight

    def to_json(self) -> dict:
        ops = {
            "W": self.w, "WPrime": self.w_prime, "PB": self.p_b, "PBPerp": self.p_b_perp,
            "WPrimeB": self.w_prime_b, "WDoublePrime": self.w_double_prime,
            "VB": self.v_b, "VBPrime": self.v_b_prime, "psiAR": self.psi_ar,
        }
        out = {k: operator_to_json(v) for k, v in ops.items()}
        for name, c in (("choiU", self.choi_u), ("choiLambda", self.choi_lambda)):
            out[name] = {"inDims": list(c.in_dims), "outDims": list(c.out_dims),
                         "op": operator_to_json(c.op)}
        out["weight"] = self.weight
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Prop1Decomposition":
        def op(k):
            return operator_from_json(obj[k])

        def choi(k):
            c = obj[k]
            return ChoiOperator(operator_from_json(c["op"]), tuple(c["inDims"]), tuple(c["outDims"]))

        try:
            return cls(op("W"), op("WPrime"), op("PB"), op("PBPerp"), op("WPrimeB"),
                       op("WDoublePrime"), op("VB"), op("VBPrime"), choi("choiU"),
                       choi("choiLambda"), op("psiAR"), float(obj["weight"]))
        except (KeyError, TypeError) as exc:
            raise ShapeError(f"malformed decomposition JSON: {exc}") from exc


def _bipartite(w: HermitianOperator) -> HermitianOperator:
    if w.nsys < 2:
        raise ShapeError("decomposition needs at least two subsystems")
    d_a = int(np.prod(w.dims[:-1]))
    return w.with_dims((d_a, w.dims[-1]))


def _raw_apply(c4: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("ji,jbic->bc", x, c4)


def prop1_decompose(w, cfg: PoptSearchConfig | None = None, check_popt: bool = True) -> Prop1Decomposition:
    """Run the construction above; ``B`` is the last tensor factor of ``w``."""
    w = _as_op(w)
    if abs(w.trace() - 1.0) > 1e-9:
        raise NonUnitTraceError(f"trace {w.trace():.12g} != 1")
    if check_popt:
        ok, report = is_popt(w, cfg)
        if not ok:
            raise NotPOPTError(f"state is not POPT (product minimum {report.min_value:.3e})")
    wab = _bipartite(w)
    d_a, d_b = wab.dims
    id_a = HermitianOperator.identity((d_a,))
    id_b = np.eye(d_b)

    w_b = partial_trace(wab, [1])
    p_b = support_projector(w_b)
    p_perp = HermitianOperator(id_b - p_b.data, (d_b,))
    w_prime = wab + tensor(id_a, p_perp)
    w_prime_b = partial_trace(w_prime, [1])
    sqrt_b, inv_sqrt_b = psd_sqrt_pinv(w_prime_b)
    left = np.kron(np.eye(d_a), inv_sqrt_b.data)
    w_dprime = HermitianOperator(left @ w_prime.data @ left, (d_a, d_b))
    choi_u = ChoiOperator(w_dprime, (d_a,), (d_b,))

    v_b = HermitianOperator(sqrt_b.data @ p_b.data, (d_b,))
    rest = HermitianOperator(id_b - v_b.data.conj().T @ v_b.data, (d_b,))
    if not is_psd(rest, 1e-10):
        raise NotPSDError("1 - V^dag V is not positive; reduced state exceeds identity")
    v_b_prime = psd_sqrt_pinv(rest)[0]

    u4 = choi_u.tensor4()
    v, vp = v_b.data, v_b_prime.data

    def lam(x):
        # x acts on S (x) C; U acts blockwise on S, then Y reads the C blocks
        x4 = x.reshape(d_a, 2, d_a, 2)
        out0 = _raw_apply(u4, x4[:, 0, :, 0])
        out1 = _raw_apply(u4, x4[:, 1, :, 1])
        return v.conj().T @ out0 @ v + vp.conj().T @ out1 @ vp

    a_dims = tuple(w.dims[:-1])
    choi_lambda = ChoiOperator.from_map(lam, a_dims + (2,), (d_b,))

    chi = np.eye(d_a).reshape(-1)
    psi = np.kron(chi, np.array([1.0, 0.0])) / np.sqrt(d_a)
    psi_ar = HermitianOperator.from_vector(psi, a_dims + a_dims + (2,))

    return Prop1Decomposition(
        w=w, w_prime=w_prime, p_b=p_b, p_b_perp=p_perp, w_prime_b=w_prime_b,
        w_double_prime=w_dprime, v_b=v_b, v_b_prime=v_b_prime, choi_u=choi_u,
        choi_lambda=choi_lambda, psi_ar=psi_ar, weight=float(d_a),
    )


@dataclass
class Prop1Verification:
    reconstruction_residual: float
    unitality_residual: float
    lambda_positive: bool
    lambda_min_product: float
    lambda_argmin: list[np.ndarray]
    lambda_completely_positive: bool
    marginal_residual: float  # ||Tr_A W'' - 1_B||
    kraus_residual: float  # ||V^dag V + V'^dag V' - 1_B||
    psi_rank_one: bool
    psi_trace: float
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        return {
            "reconstructionResidual": self.reconstruction_residual,
            "unitalityResidual": self.unitality_residual,
            "lambdaPositive": self.lambda_positive,
            "lambdaMinProduct": self.lambda_min_product,
            "lambdaArgmin": [{"re": a.real.tolist(), "im": a.imag.tolist()} for a in self.lambda_argmin],
            "lambdaCompletelyPositive": self.lambda_completely_positive,
            "marginalResidual": self.marginal_residual,
            "krausResidual": self.kraus_residual,
            "psiRankOne": self.psi_rank_one,
            "psiTrace": self.psi_trace,
            "checks": dict(self.checks),
            "pass": self.passed,
        }


def lambda_block_positivity(choi_lambda: ChoiOperator,
                            cfg: PoptSearchConfig | None = None) -> PoptReport:
    """Product minimum of the Choi operator of ``Lambda``.

    The qubit ``C`` is grouped with the last factor of ``S``.  For a single
    ``S`` factor this is the input | output cut, and a non-negative minimum means
    ``Lambda`` is positive.  With several ``S`` factors the state was only tested
    on fully product effects, so positivity is certified on inputs separable
    across the ``S`` factors.
    """
    ins = choi_lambda.in_dims
    grouped = ins[:-2] + (ins[-2] * ins[-1],) if len(ins) >= 2 else ins
    op = choi_lambda.op.with_dims(grouped + (choi_lambda.dout,))
    return min_product_expectation(op, cfg)


def verify_prop1(w, d: Prop1Decomposition, cfg: PoptSearchConfig | None = None,
                 tol: float = RESIDUAL_TOL) -> Prop1Verification:
    w = _as_op(w)
    recon = d.reconstruct()
    if recon.total != w.total:
        raise ShapeError("decomposition does not match the state's size")
    recon_res = float(np.linalg.norm(recon.data - w.data))

    d_b = d.choi_lambda.dout
    unital = apply_map(d.choi_lambda, HermitianOperator.identity(d.choi_lambda.in_dims))
    unital_res = float(np.linalg.norm(unital.data - np.eye(d_b)))

    pos = lambda_block_positivity(d.choi_lambda, cfg)
    marginal = partial_trace(d.w_double_prime, [1])
    marginal_res = float(np.linalg.norm(marginal.data - np.eye(d_b)))
    v, vp = d.v_b.data, d.v_b_prime.data
    kraus_res = float(np.linalg.norm(v.conj().T @ v + vp.conj().T @ vp - np.eye(d_b)))
    ev = np.linalg.eigvalsh(d.psi_ar.data)
    rank_one = bool(np.sum(np.abs(ev) > 1e-10) == 1)

    checks = {
        "reconstruction": recon_res <= tol,
        "unital": unital_res <= tol,
        "positive": pos.is_member,
        "marginal": marginal_res <= tol,
        "kraus": kraus_res <= tol,
        "psiPure": rank_one and abs(d.psi_ar.trace() - 1.0) <= tol,
    }
    return Prop1Verification(
        reconstruction_residual=recon_res,
        unitality_residual=unital_res,
        lambda_positive=pos.is_member,
        lambda_min_product=pos.min_value,
        lambda_argmin=pos.argmin,
        lambda_completely_positive=is_psd(d.choi_lambda.op, 1e-10),
        marginal_residual=marginal_res,
        kraus_residual=kraus_res,
        psi_rank_one=rank_one,
        psi_trace=d.psi_ar.trace(),
        checks=checks,
    )


@dataclass
class CorrelationReport:
    max_deviation: float
    direct: np.ndarray  # [x, y, a, b] = Tr[W (pi^a_x (x) pi^b_y)]
    simulated: np.ndarray  # [x, y, a, b] = weight * Tr[psi (pi^a_x (x) Lambda*(pi^b_y))]
    normalization_defect: list[float]  # per y: ||sum_b Lambda*(pi^b_y) - 1_R||


def correlation_identity_check(w, povms_a, povms_b, d: Prop1Decomposition) -> CorrelationReport:
    """Evaluate product-measurement statistics of ``W`` directly and through ``Lambda*``."""
    w = _as_op(w)
    wab = _bipartite(w)
    adj = choi_of_map_adjoint(d.choi_lambda)
    nx, ny = len(povms_a), len(povms_b)
    na = max(len(m) for m in povms_a)
    nb = max(len(m) for m in povms_b)
    direct = np.zeros((nx, ny, na, nb))
    simulated = np.zeros_like(direct)
    defects = []
    id_r = np.eye(adj.dout)
    for y, mb in enumerate(povms_b):
        pulled = [apply_map(adj, e) for e in mb.effects]
        defects.append(float(np.linalg.norm(sum(p.data for p in pulled) - id_r)))
        for x, ma in enumerate(povms_a):
            for a, ea in enumerate(ma.effects):
                for b, eb in enumerate(mb.effects):
                    direct[x, y, a, b] = wab.expect(np.kron(ea.data, eb.data))
                    simulated[x, y, a, b] = d.weight * d.psi_ar.expect(np.kron(ea.data, pulled[b].data))
    return CorrelationReport(
        max_deviation=float(np.max(np.abs(direct - simulated))),
        direct=direct,
        simulated=simulated,
        normalization_defect=defects,
    )


def reconstruction_residual(w, d: Prop1Decomposition) -> float:
    return frobenius_distance(_as_op(w).with_dims(d.reconstruct().dims), d.reconstruct())
