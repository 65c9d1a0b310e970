"""Executable no-go checks over finite ontological models.

theorem1_check runs the overlap argument for one measurement M:

1. hypotheses: statistical completeness and compatibility of every joint
   preparation Psi_k with its factors; the Born-zero statistics
   p(k | M, Psi_k) <= zero_tol are recorded alongside;
2. S = {lambda : p(lambda|M,P_psi) p(lambda|M,P_phi) > support_tol};
3. S empty means zero overlap;
4. otherwise every lambda in S carries weight p(lambda|M,Psi_k) > 0 for all k,
   so p(k | M, Psi_k) <= zero_tol caps p(k|M,lambda) by zero_tol / p(lambda|M,Psi_k).
   When the caps sum to less than one the response row at lambda cannot be
   normalized (the 1 = 0 contradiction); when a single entry exceeds its cap
   the outcome-k zero is broken at lambda. Either is returned as a witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ontic import (
    OnticModel,
    StructureError,
    check_compatibility,
    check_local_compatibility,
    check_measurement_independence,
    check_statistical_completeness,
    joint_preparations,
    overlap,
)
from .quantum import index_to_bits

ZERO_TOL = 1e-12
ROW_TOL = 1e-12
OVERLAP_ZERO = "overlap_zero"
WITNESS_FOUND = "witness_found"
HYPOTHESES_NOT_MET = "hypotheses_not_met"

RESPONSE_ROW_DEFICIT = "response_row_deficit"
ZERO_CONSTRAINT_VIOLATION = "zero_constraint_violation"
COMPATIBILITY_VIOLATION = "compatibility_violation"


@dataclass(frozen=True)
class ContradictionWitness:
    lam: int
    kind: str
    magnitude: float
    outcome: int | None = None

    def to_json(self) -> dict:
        return {"lambda": self.lam, "kind": self.kind, "magnitude": self.magnitude, "outcome": self.outcome}

    @classmethod
    def from_json(cls, data: dict) -> "ContradictionWitness":
        return cls(int(data["lambda"]), str(data["kind"]), float(data["magnitude"]), data.get("outcome"))


@dataclass(frozen=True)
class NoGoVerdict:
    theorem: str
    status: str
    overlap_value: float
    witness: ContradictionWitness | None = None
    hypothesis_report: dict = field(default_factory=dict)
    support: tuple[int, ...] = ()
    measurement: str | None = None
    theorem1: "NoGoVerdict | None" = None

    def __post_init__(self) -> None:
        if self.status == OVERLAP_ZERO and self.overlap_value > 1e-12:
            raise ValueError(f"overlap_zero verdict with overlap {self.overlap_value!r}")
        if self.status == HYPOTHESES_NOT_MET and all(self.hypothesis_report.values()):
            raise ValueError("hypotheses_not_met verdict without a failing hypothesis")

    def to_json(self) -> dict:
        out = {
            "theorem": self.theorem,
            "status": self.status,
            "overlap": self.overlap_value,
            "witness": self.witness.to_json() if self.witness else None,
            "hypotheses": dict(self.hypothesis_report),
            "support": list(self.support),
            "measurement": self.measurement,
        }
        if self.theorem1 is not None:
            out["theorem1"] = self.theorem1.to_json()
        return out


def _check_structure(model: OnticModel, M: str, P_psi: str, P_phi: str, joint_preps: Sequence[str]) -> int:
    K = len(joint_preps)
    n = int(round(math.log2(K))) if K > 0 else 0
    if K < 4 or 2**n != K:
        raise StructureError(f"expected 2**n joint preparations with n > 1, got {K}")
    if M not in model.response:
        raise StructureError(f"unknown measurement {M!r}")
    if model.response[M].shape[1] != K:
        raise StructureError(f"measurement {M!r} has {model.response[M].shape[1]} outcomes, expected {K}")
    for k, pid in enumerate(joint_preps, start=1):
        prep = model.preparation(pid)
        want = tuple(P_phi if b else P_psi for b in index_to_bits(k, n))
        if prep.factors is None or tuple(prep.factors) != want:
            raise StructureError(f"joint preparation {pid!r} is linked to {prep.factors}, expected {want}")
        model.vector(M, pid)
    model.vector(M, P_psi)
    model.vector(M, P_phi)
    return n


def _zero_statistics(model: OnticModel, M: str, joint_preps: Sequence[str]) -> np.ndarray:
    """p(k | M, Psi_k) for each k."""
    R = model.response[M]
    return np.array([float(model.full_vector(M, pid) @ R[:, k]) for k, pid in enumerate(joint_preps)])


def _witness_at(
    model: OnticModel, M: str, joint_preps: Sequence[str], lam: int, zero_tol: float
) -> ContradictionWitness | None:
    R = model.response[M]
    weights = np.array([model.full_vector(M, pid)[lam] for pid in joint_preps])
    with np.errstate(divide="ignore"):
        caps = np.where(weights > 0, zero_tol / weights, np.inf)
    contrib = weights * R[lam]
    deficit = 1.0 - float(np.minimum(caps, 1.0).sum())
    worst = int(np.argmax(contrib))
    if deficit > ROW_TOL:
        return ContradictionWitness(lam, RESPONSE_ROW_DEFICIT, deficit, worst + 1)
    if contrib[worst] > zero_tol:
        return ContradictionWitness(lam, ZERO_CONSTRAINT_VIOLATION, float(contrib[worst]), worst + 1)
    return None


def witness_magnitude(
    model: OnticModel,
    M: str,
    joint_preps: Sequence[str],
    witness: ContradictionWitness,
    zero_tol: float = ZERO_TOL,
    local: bool = False,
) -> float:
    """Recompute a witness magnitude from raw model data."""
    lam = witness.lam
    if witness.kind == RESPONSE_ROW_DEFICIT:
        total = 0.0
        for pid in joint_preps:
            w = model.full_vector(M, pid)[lam]
            total += min(zero_tol / w, 1.0) if w > 0 else 1.0
        return 1.0 - total
    if witness.kind == ZERO_CONSTRAINT_VIOLATION:
        k = witness.outcome
        return float(model.full_vector(M, joint_preps[k - 1])[lam] * model.response[M][lam, k - 1])
    if witness.kind == COMPATIBILITY_VIOLATION:
        factors = model.preparation(joint_preps[witness.outcome - 1]).factors
        return _compat_evidence(model, M, factors, lam, local)
    raise ValueError(f"unknown witness kind {witness.kind!r}")


def _run_overlap_argument(
    model: OnticModel,
    M: str,
    joint_preps: Sequence[str],
    S: Sequence[int],
    overlap_value: float,
    report: dict,
    compat_failures: list[tuple[int, int]],
    zero_tol: float,
    theorem: str,
    local: bool = False,
) -> NoGoVerdict:
    S = tuple(sorted(S))
    if compat_failures or not report["statistical_completeness"]:
        witness = None
        for lam, k in compat_failures:
            if lam in S:
                factors = model.preparation(joint_preps[k - 1]).factors
                witness = ContradictionWitness(lam, COMPATIBILITY_VIOLATION, _compat_evidence(model, M, factors, lam, local), k)
                break
        return NoGoVerdict(theorem, HYPOTHESES_NOT_MET, overlap_value, witness, report, S, M)
    if not S:
        if overlap_value > 1e-12:
            # relaxed support_tol hides mass below the threshold
            return NoGoVerdict(theorem, HYPOTHESES_NOT_MET, overlap_value, None, {**report, "support_resolution": False}, S, M)
        return NoGoVerdict(theorem, OVERLAP_ZERO, overlap_value, None, report, S, M)
    for lam in S:
        witness = _witness_at(model, M, joint_preps, lam, zero_tol)
        if witness is not None:
            return NoGoVerdict(theorem, WITNESS_FOUND, overlap_value, witness, report, S, M)
    # overlap survives only because zero_tol is too coarse to force the zeros
    report = {**report, "zero_resolution": False}
    return NoGoVerdict(theorem, HYPOTHESES_NOT_MET, overlap_value, None, report, S, M)


def theorem1_check(
    model: OnticModel,
    M: str,
    P_psi: str,
    P_phi: str,
    joint_preps: Sequence[str] | None = None,
    zero_tol: float = ZERO_TOL,
) -> NoGoVerdict:
    """Overlap argument for a single measurement under compatibility (no measurement independence)."""
    joint_preps = list(joint_preps) if joint_preps is not None else joint_preparations(model, P_psi, P_phi)
    n = _check_structure(model, M, P_psi, P_phi, joint_preps)
    report: dict[str, bool] = {"statistical_completeness": check_statistical_completeness(model).passed}
    compat_failures = []
    for k, pid in enumerate(joint_preps, start=1):
        factors = [P_phi if b else P_psi for b in index_to_bits(k, n)]
        v = check_compatibility(model, M, factors, pid)
        report[f"compatibility[{k}]"] = v.passed
        if not v.passed:
            compat_failures.extend((lam, k) for lam in _compat_violations(model, M, factors, pid))
    stats = _zero_statistics(model, M, joint_preps)
    for k, s in enumerate(stats, start=1):
        report[f"born_zero[{k}]"] = bool(s <= zero_tol)
    # single-device (factor-length) preparations are compared on the first slot
    value, S = overlap(model, M, P_psi, P_phi, slot=0)
    return _run_overlap_argument(model, M, joint_preps, list(S), value, report, compat_failures, zero_tol, "one")


def _compat_evidence(model: OnticModel, M: str, factors: Sequence[str], lam: int, local: bool = False) -> float:
    """Smallest factor weight at lambda: how strongly lambda is compatible with every factor."""
    if local:
        comps = model.space.unravel(lam)
        return min(float(model.factor_vector(M, f, slot)[comps[slot]]) for slot, f in enumerate(factors))
    return min(float(model.full_vector(M, f, slot)[lam]) for slot, f in enumerate(factors))


def _compat_violations(model: OnticModel, M: str, factors: Sequence[str], joint: str) -> list[int]:
    tol = model.support_tol
    ok = np.ones(model.size, dtype=bool)
    for slot, f in enumerate(factors):
        ok &= model.full_vector(M, f, slot) > tol
    return [int(i) for i in np.flatnonzero(ok & ~(model.full_vector(M, joint) > tol))]


def theorem1_check_local(
    model: OnticModel,
    M: str,
    P_psi: str,
    P_phi: str,
    joint_preps: Sequence[str] | None = None,
    zero_tol: float = ZERO_TOL,
) -> NoGoVerdict:
    """Reductionist variant: S is the diagonal {(l, ..., l)} of the factor-level overlap."""
    joint_preps = list(joint_preps) if joint_preps is not None else joint_preparations(model, P_psi, P_phi)
    shape = model.space.product_structure
    if shape is None:
        raise StructureError("theorem1_check_local needs a product-structured ontic space")
    if len(set(shape)) != 1:
        raise StructureError(f"factor spaces must have equal size, got {shape}")
    n = _check_structure(model, M, P_psi, P_phi, joint_preps)
    if len(shape) != n:
        raise StructureError(f"{len(shape)} factor spaces for n = {n}")
    tol = model.support_tol
    report: dict[str, bool] = {"statistical_completeness": check_statistical_completeness(model).passed}
    compat_failures = []
    for k, pid in enumerate(joint_preps, start=1):
        factors = [P_phi if b else P_psi for b in index_to_bits(k, n)]
        v = check_local_compatibility(model, M, factors, pid)
        report[f"local_compatibility[{k}]"] = v.passed
        if not v.passed:
            compat_failures.append((v.witness["lambda"], k))
    stats = _zero_statistics(model, M, joint_preps)
    for k, s in enumerate(stats, start=1):
        report[f"born_zero[{k}]"] = bool(s <= zero_tol)
    p = model.factor_vector(M, P_psi, 0)
    q = model.factor_vector(M, P_phi, 0)
    diag = [model.space.ravel([lam] * n) for lam in np.flatnonzero((p > tol) & (q > tol))]
    value = float(np.dot(p, q))
    return _run_overlap_argument(model, M, joint_preps, diag, value, report, compat_failures, zero_tol, "one", local=True)


def theorem2_check(
    model: OnticModel,
    P_psi: str,
    P_phi: str,
    joint_preps: Sequence[str] | None = None,
    measurements: Sequence[str] | None = None,
    zero_tol: float = ZERO_TOL,
) -> NoGoVerdict:
    """Measurement-free overlap: theorem1_check plus measurement independence.

    The verdict for the measurement with the Born zeros (or the first
    measurement when none has them) is attached as `theorem1`.
    """
    measurements = list(measurements) if measurements is not None else list(model.measurements)
    mi = check_measurement_independence(model)
    per_m = {M: theorem1_check(model, M, P_psi, P_phi, joint_preps, zero_tol) for M in measurements}
    zero_ms = [M for M, v in per_m.items() if all(val for key, val in v.hypothesis_report.items() if key.startswith("born_zero"))]
    lead = per_m[zero_ms[0]] if zero_ms else per_m[measurements[0]]
    report = {"measurement_independence": mi.passed, "born_zeros_some_measurement": bool(zero_ms)}
    for key, val in lead.hypothesis_report.items():
        if not key.startswith("born_zero"):
            report[key] = val
    if not mi.passed or not zero_ms:
        return NoGoVerdict("two", HYPOTHESES_NOT_MET, lead.overlap_value, lead.witness, report, lead.support, lead.measurement, lead)
    if lead.status != OVERLAP_ZERO:
        return NoGoVerdict("two", lead.status, lead.overlap_value, lead.witness, report, lead.support, lead.measurement, lead)
    others = [v for v in per_m.values() if v.status != OVERLAP_ZERO]
    if others:
        report["all_measurements_consistent"] = False
        return NoGoVerdict("two", HYPOTHESES_NOT_MET, lead.overlap_value, others[0].witness, report, lead.support, lead.measurement, lead)
    # epistemic vectors no longer depend on M, so any measurement gives p(lambda|P)
    value, S = overlap(model, measurements[0], P_psi, P_phi, slot=0)
    return NoGoVerdict("two", OVERLAP_ZERO, value, None, report, tuple(S), None, lead)
