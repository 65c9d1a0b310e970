"""Finite ontological models and checkers for the assumptions placed on them.

A model has a finite ontic space {0, ..., size-1}, optionally a product
structure (lambda_1, ..., lambda_n) flattened in C order. Preparations induce
epistemic vectors p(lambda | M, P), one per (measurement id, preparation id)
pair, and each measurement id has a row-stochastic response matrix
p(m | M, lambda) of shape (size, outcomes).

An epistemic vector normally lives on the full space. With a product
structure it may instead live on one factor space (a single device operated
on its own); such vectors are lifted to the full space with the remaining
components uniform, and full vectors are marginalized when a factor view is
needed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterator, Mapping, Sequence

import numpy as np

from .quantum import Measurement, PureState, born_vector, tensor_product

PROB_TOL = 1e-10
MI_TOL = 1e-10
MI_FLAG_TOL = 1e-12
FACTORISABILITY_TOL = 1e-9
EXTENDED_RESPONSE_TOL = 1e-10


class ModelValidationError(ValueError):
    """Raised when a model violates its structural invariants."""


class MissingPairError(KeyError):
    pass


class StructureError(ValueError):
    """Preparation links or product structure do not fit the requested check."""


@dataclass(frozen=True)
class OnticSpace:
    size: int
    product_structure: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ModelValidationError(f"ontic space size must be >= 1, got {self.size}")
        if self.product_structure is not None:
            factors = tuple(int(f) for f in self.product_structure)
            if any(f < 1 for f in factors) or math.prod(factors) != self.size:
                raise ModelValidationError(f"product structure {factors} does not multiply to {self.size}")
            object.__setattr__(self, "product_structure", factors)

    def unravel(self, lam: int) -> tuple[int, ...]:
        if self.product_structure is None:
            return (lam,)
        return tuple(int(i) for i in np.unravel_index(lam, self.product_structure))

    def ravel(self, components: Sequence[int]) -> int:
        if self.product_structure is None:
            (lam,) = components
            return int(lam)
        return int(np.ravel_multi_index(tuple(components), self.product_structure))


@dataclass(frozen=True)
class PreparationLabel:
    id: str
    prepared_state: PureState
    factors: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.factors is not None:
            object.__setattr__(self, "factors", tuple(self.factors))


@dataclass(frozen=True)
class SupportSet:
    indices: frozenset
    support_tol: float = 0.0

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, lam: object) -> bool:
        return lam in self.indices

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.indices))


@dataclass(frozen=True)
class Verdict:
    check: str
    passed: bool
    deviation: float = 0.0
    witness: dict | None = None

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return {"check": self.check, "passed": self.passed, "deviation": self.deviation, "witness": self.witness}


def _as_prob_vector(values, what: str, tol: float = PROB_TOL) -> np.ndarray:
    vec = np.array(values, dtype=float).reshape(-1)
    if vec.size == 0:
        raise ModelValidationError(f"{what}: empty probability vector")
    if not np.all(np.isfinite(vec)):
        raise ModelValidationError(f"{what}: non-finite entries")
    if vec.min() < 0:
        raise ModelValidationError(f"{what}: negative entry {vec.min()!r}")
    if abs(vec.sum() - 1.0) > tol:
        raise ModelValidationError(f"{what}: sums to {vec.sum()!r}, not 1 within {tol}")
    vec.setflags(write=False)
    return vec


def _as_stochastic(values, what: str, rows: int, tol: float = PROB_TOL) -> np.ndarray:
    mat = np.array(values, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != rows:
        raise ModelValidationError(f"{what}: shape {mat.shape}, expected ({rows}, outcomes)")
    if not np.all(np.isfinite(mat)):
        raise ModelValidationError(f"{what}: non-finite entries")
    if mat.min() < 0:
        raise ModelValidationError(f"{what}: negative entry {mat.min()!r}")
    err = np.abs(mat.sum(axis=1) - 1.0).max()
    if err > tol:
        raise ModelValidationError(f"{what}: a row sums to 1 only within {err!r}")
    mat.setflags(write=False)
    return mat


@dataclass(frozen=True, eq=False)
class OnticModel:
    space: OnticSpace
    preparations: tuple[PreparationLabel, ...]
    measurements: tuple[str, ...]
    epistemic: Mapping[tuple[str, str], np.ndarray]
    response: Mapping[str, np.ndarray]
    measurement_independent: bool = False
    support_tol: float = 0.0
    outcome_labels: Mapping[str, tuple] = field(default_factory=dict)
    # (measurement id, preparation id) -> response table; only for imported models
    extended_response: Mapping[tuple[str, str], np.ndarray] | None = None

    def __post_init__(self) -> None:
        preps = tuple(self.preparations)
        ids = [p.id for p in preps]
        if len(set(ids)) != len(ids):
            raise ModelValidationError("preparation ids must be unique")
        by_id = {p.id: p for p in preps}
        for p in preps:
            if p.factors is None:
                continue
            missing = [f for f in p.factors if f not in by_id]
            if missing:
                raise ModelValidationError(f"preparation {p.id!r} links unknown factors {missing}")
            expected = tensor_product([by_id[f].prepared_state for f in p.factors])
            if not expected.equivalent(p.prepared_state):
                raise ModelValidationError(f"preparation {p.id!r} does not prepare the product of its factors")
        meas = tuple(self.measurements)
        if len(set(meas)) != len(meas):
            raise ModelValidationError("measurement ids must be unique")

        size = self.space.size
        allowed = {size} | set(self.space.product_structure or ())
        epistemic = {}
        for (m, p), vec in self.epistemic.items():
            if m not in meas:
                raise ModelValidationError(f"epistemic entry for unknown measurement {m!r}")
            if p not in by_id:
                raise ModelValidationError(f"epistemic entry for unknown preparation {p!r}")
            v = _as_prob_vector(vec, f"epistemic[{m!r}, {p!r}]")
            if v.size not in allowed:
                raise ModelValidationError(f"epistemic[{m!r}, {p!r}] has length {v.size}; allowed {sorted(allowed)}")
            epistemic[(m, p)] = v
        response = {}
        for m in meas:
            if m not in self.response:
                raise ModelValidationError(f"no response function for measurement {m!r}")
            response[m] = _as_stochastic(self.response[m], f"response[{m!r}]", size)
        labels = {}
        for m in meas:
            k = response[m].shape[1]
            lab = tuple(self.outcome_labels.get(m, ())) or tuple(range(1, k + 1))
            if len(lab) != k:
                raise ModelValidationError(f"{len(lab)} outcome labels for {k} outcomes of {m!r}")
            labels[m] = lab
        extended = None
        if self.extended_response is not None:
            extended = {}
            for (m, p), mat in self.extended_response.items():
                if m not in meas or p not in by_id:
                    raise ModelValidationError(f"extended response for unknown pair {(m, p)!r}")
                extended[(m, p)] = _as_stochastic(mat, f"extended_response[{m!r}, {p!r}]", size)
        if self.measurement_independent:
            dev, where = _mi_deviation(epistemic, meas, ids)
            if dev > MI_FLAG_TOL:
                raise ModelValidationError(f"flagged measurement independent but {where} differ by {dev!r}")
        object.__setattr__(self, "preparations", preps)
        object.__setattr__(self, "measurements", meas)
        object.__setattr__(self, "epistemic", epistemic)
        object.__setattr__(self, "response", response)
        object.__setattr__(self, "outcome_labels", labels)
        object.__setattr__(self, "extended_response", extended)

    @property
    def size(self) -> int:
        return self.space.size

    def preparation(self, pid: str) -> PreparationLabel:
        for p in self.preparations:
            if p.id == pid:
                return p
        raise MissingPairError(f"unknown preparation {pid!r}")

    def vector(self, M: str, P: str) -> np.ndarray:
        try:
            return self.epistemic[(M, P)]
        except KeyError:
            raise MissingPairError(f"no epistemic vector for (M={M!r}, P={P!r})") from None

    def has_pair(self, M: str, P: str) -> bool:
        return (M, P) in self.epistemic

    def full_vector(self, M: str, P: str, slot: int | None = None) -> np.ndarray:
        """Epistemic vector on the full space; factor vectors are lifted at `slot`."""
        v = self.vector(M, P)
        if v.size == self.size:
            return v
        if slot is None:
            raise StructureError(f"preparation {P!r} is local; a slot is needed to lift it")
        shape = self.space.product_structure
        if shape[slot] != v.size:
            raise StructureError(f"factor vector of {P!r} has length {v.size}, slot {slot} has size {shape[slot]}")
        out = np.ones(1)
        for j, d in enumerate(shape):
            out = np.kron(out, v if j == slot else np.full(d, 1.0 / d))
        return out

    def factor_vector(self, M: str, P: str, slot: int) -> np.ndarray:
        """Marginal of p(lambda | M, P) on factor `slot`."""
        shape = self.space.product_structure
        if shape is None:
            raise StructureError("model has no product structure")
        v = self.vector(M, P)
        if v.size == self.size:
            axes = tuple(j for j in range(len(shape)) if j != slot)
            return v.reshape(shape).sum(axis=axes)
        if v.size != shape[slot]:
            raise StructureError(f"factor vector of {P!r} has length {v.size}, slot {slot} has size {shape[slot]}")
        return v

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        epistemic: dict[str, dict[str, list]] = {}
        for (m, p), v in self.epistemic.items():
            epistemic.setdefault(m, {})[p] = v.tolist()
        out = {
            "space": {
                "size": self.space.size,
                "product_structure": list(self.space.product_structure) if self.space.product_structure else None,
            },
            "preparations": [
                {
                    "id": p.id,
                    "state": p.prepared_state.to_json(),
                    "factors": list(p.factors) if p.factors is not None else None,
                }
                for p in self.preparations
            ],
            "measurements": list(self.measurements),
            "epistemic": epistemic,
            "response": {m: r.tolist() for m, r in self.response.items()},
            "outcome_labels": {m: list(lab) for m, lab in self.outcome_labels.items()},
            "measurement_independent": self.measurement_independent,
            "support_tol": self.support_tol,
        }
        if self.extended_response is not None:
            ext: dict[str, dict[str, list]] = {}
            for (m, p), r in self.extended_response.items():
                ext.setdefault(m, {})[p] = r.tolist()
            out["extended_response"] = ext
        return out

    @classmethod
    def from_json(cls, data: dict) -> "OnticModel":
        try:
            space = data["space"]
            ps = space.get("product_structure")
            preps = tuple(
                PreparationLabel(
                    id=str(p["id"]),
                    prepared_state=PureState.from_json(p["state"]),
                    factors=tuple(p["factors"]) if p.get("factors") is not None else None,
                )
                for p in data["preparations"]
            )
            measurements = tuple(data.get("measurements") or data["response"].keys())
            epistemic = {(m, p): v for m, row in data["epistemic"].items() for p, v in row.items()}
            extended = None
            if data.get("extended_response") is not None:
                extended = {(m, p): v for m, row in data["extended_response"].items() for p, v in row.items()}
            return cls(
                space=OnticSpace(int(space["size"]), tuple(ps) if ps else None),
                preparations=preps,
                measurements=measurements,
                epistemic=epistemic,
                response=data["response"],
                measurement_independent=bool(data.get("measurement_independent", False)),
                support_tol=float(data.get("support_tol", 0.0)),
                outcome_labels={m: tuple(v) for m, v in (data.get("outcome_labels") or {}).items()},
                extended_response=extended,
            )
        except ModelValidationError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelValidationError(f"malformed model file: {exc}") from exc


def save_model(model: OnticModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_json(), indent=1))


def load_model(path: str | Path) -> OnticModel:
    return OnticModel.from_json(json.loads(Path(path).read_text()))


# -- predictions ---------------------------------------------------------------


def predicted_vector(model: OnticModel, P: str, M: str) -> np.ndarray:
    if M not in model.response:
        raise MissingPairError(f"unknown measurement {M!r}")
    v = model.vector(M, P)
    if v.size != model.size:
        raise StructureError(f"preparation {P!r} is local; it has no joint statistics under {M!r}")
    return v @ model.response[M]


def predicted_statistics(model: OnticModel, P: str, M: str) -> dict[Hashable, float]:
    """sum_lambda p(m | M, lambda) p(lambda | M, P) for every outcome m."""
    p = np.clip(predicted_vector(model, P, M), 0.0, 1.0)
    return dict(zip(model.outcome_labels[M], (float(x) for x in p)))


# -- assumption checkers ---------------------------------------------------------


def check_statistical_completeness(model: OnticModel) -> Verdict:
    """Outcome probabilities depend on the preparation only through lambda.

    The canonical representation indexes responses by (M, lambda) alone, so it
    always passes. Imported preparation-indexed tables must coincide.
    """
    if not model.extended_response:
        return Verdict("statistical_completeness", True, 0.0)
    worst, witness = 0.0, None
    for M in model.measurements:
        tables = [(p, r) for (m, p), r in model.extended_response.items() if m == M]
        for i in range(len(tables)):
            for j in range(i + 1, len(tables)):
                (p1, r1), (p2, r2) = tables[i], tables[j]
                diff = np.abs(r1 - r2)
                idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
                if diff[idx] > worst:
                    worst = float(diff[idx])
                    witness = {
                        "m": model.outcome_labels[M][idx[1]],
                        "M": M,
                        "lambda": int(idx[0]),
                        "P": p1,
                        "P_prime": p2,
                    }
    passed = worst <= EXTENDED_RESPONSE_TOL
    return Verdict("statistical_completeness", passed, worst, None if passed else witness)


def compatible(model: OnticModel, lam: int, M: str, P: str) -> bool:
    """lambda ~ (M, P): p(lambda | M, P) > support_tol (strict)."""
    return bool(model.vector(M, P)[lam] > model.support_tol)


def support(model: OnticModel, M: str, P: str, slot: int | None = None) -> SupportSet:
    v = model.full_vector(M, P, slot)
    return SupportSet(frozenset(int(i) for i in np.flatnonzero(v > model.support_tol)), model.support_tol)


def _joint_links(model: OnticModel, factor_preps: Sequence[str], joint_prep: str) -> PreparationLabel:
    joint = model.preparation(joint_prep)
    if joint.factors is None:
        raise StructureError(f"joint preparation {joint_prep!r} has no factor links")
    if tuple(joint.factors) != tuple(factor_preps):
        raise StructureError(f"{joint_prep!r} links {joint.factors}, not {tuple(factor_preps)}")
    return joint


def check_compatibility(model: OnticModel, M: str, factor_preps: Sequence[str], joint_prep: str) -> Verdict:
    """Every lambda compatible with each factor preparation is compatible with the joint one."""
    _joint_links(model, factor_preps, joint_prep)
    tol = model.support_tol
    ok = np.ones(model.size, dtype=bool)
    for slot, f in enumerate(factor_preps):
        ok &= model.full_vector(M, f, slot) > tol
    joint = model.full_vector(M, joint_prep)
    bad = np.flatnonzero(ok & ~(joint > tol))
    if bad.size:
        lam = int(bad[0])
        return Verdict("compatibility", False, float(tol - joint[lam]), {"lambda": lam, "M": M, "joint": joint_prep})
    return Verdict("compatibility", True, 0.0)


def _require_product(model: OnticModel, n: int) -> tuple[int, ...]:
    shape = model.space.product_structure
    if shape is None:
        raise StructureError("model has no product structure")
    if len(shape) != n:
        raise StructureError(f"product structure has {len(shape)} factors, joint preparation has {n}")
    return shape


def check_local_compatibility(model: OnticModel, M: str, factor_preps: Sequence[str], joint_prep: str) -> Verdict:
    """Tuples whose every component is compatible with its own factor are compatible jointly."""
    _joint_links(model, factor_preps, joint_prep)
    shape = _require_product(model, len(factor_preps))
    tol = model.support_tol
    mask = np.ones(1, dtype=bool)
    for slot, f in enumerate(factor_preps):
        mask = np.kron(mask, model.factor_vector(M, f, slot) > tol).astype(bool)
    joint = model.full_vector(M, joint_prep)
    bad = np.flatnonzero(mask & ~(joint > tol))
    if bad.size:
        lam = int(bad[0])
        return Verdict(
            "local_compatibility",
            False,
            float(tol - joint[lam]),
            {"lambda": lam, "components": list(model.space.unravel(lam)), "M": M, "joint": joint_prep},
        )
    return Verdict("local_compatibility", True, 0.0)


def check_factorisability(
    model: OnticModel, M: str, factor_preps: Sequence[str], joint_prep: str, tol: float = FACTORISABILITY_TOL
) -> Verdict:
    """Joint distribution equals the product of the factor marginals entrywise."""
    _joint_links(model, factor_preps, joint_prep)
    _require_product(model, len(factor_preps))
    product = np.ones(1)
    for slot, f in enumerate(factor_preps):
        product = np.kron(product, model.factor_vector(M, f, slot))
    joint = model.full_vector(M, joint_prep)
    diff = np.abs(joint - product)
    lam = int(np.argmax(diff))
    dev = float(diff[lam])
    if dev <= tol:
        return Verdict("factorisability", True, dev)
    return Verdict(
        "factorisability",
        False,
        dev,
        {"lambda": lam, "components": list(model.space.unravel(lam)), "joint": float(joint[lam]), "product": float(product[lam])},
    )


def _mi_deviation(epistemic: Mapping, measurements: Sequence[str], prep_ids: Sequence[str]) -> tuple[float, dict | None]:
    worst, where = 0.0, None
    for p in prep_ids:
        present = [(m, epistemic[(m, p)]) for m in measurements if (m, p) in epistemic]
        for i in range(len(present)):
            for j in range(i + 1, len(present)):
                (m1, v1), (m2, v2) = present[i], present[j]
                if v1.size != v2.size:
                    return math.inf, {"P": p, "M": m1, "M_prime": m2, "lambda": None}
                diff = np.abs(v1 - v2)
                lam = int(np.argmax(diff))
                if diff[lam] > worst:
                    worst, where = float(diff[lam]), {"P": p, "M": m1, "M_prime": m2, "lambda": lam}
    return worst, where


def check_measurement_independence(model: OnticModel, tol: float = MI_TOL) -> Verdict:
    """p(lambda | M, P) is the same for every measurement M."""
    dev, where = _mi_deviation(model.epistemic, model.measurements, [p.id for p in model.preparations])
    passed = dev <= tol
    return Verdict("measurement_independence", passed, dev, None if passed else where)


def overlap(model: OnticModel, M: str, P: str, Q: str, slot: int | None = None) -> tuple[float, SupportSet]:
    """sum_lambda p(lambda|M,P) p(lambda|M,Q) and the common support S.

    Factor-length vectors are lifted at `slot` (if given) before comparing.
    """
    p = model.full_vector(M, P, slot)
    q = model.full_vector(M, Q, slot)
    tol = model.support_tol
    common = frozenset(int(i) for i in np.flatnonzero((p > tol) & (q > tol)))
    return float(np.dot(p, q)), SupportSet(common, tol)


def distinguishing_overlap(p: np.ndarray, q: np.ndarray) -> float:
    """sum_lambda min(p, q): the classical overlap used by the LP layer."""
    return float(np.minimum(p, q).sum())


# -- constructors --------------------------------------------------------------


def _point_mass(size: int, at: int) -> np.ndarray:
    v = np.zeros(size)
    v[at] = 1.0
    return v


def build_psi_ontic_model(
    states: Sequence[PureState],
    meas: Measurement,
    ids: Sequence[str] | None = None,
    measurement_id: str = "M",
    factors: Mapping[str, Sequence[str]] | None = None,
    extra_preparations: Sequence[tuple[PreparationLabel, int]] = (),
) -> OnticModel:
    """One ontic state per input state; point-mass epistemics and Born responses.

    extra_preparations attaches further labels as point masses on existing
    atoms (label, atom index).
    """
    ids = list(ids) if ids is not None else [f"P{i}" for i in range(len(states))]
    if len(ids) != len(states):
        raise ValueError("one id per state")
    for s in states:
        if s.dim != meas.dim:
            raise ValueError(f"state dim {s.dim} != measurement dim {meas.dim}")
    size = len(states)
    factors = factors or {}
    preps = [PreparationLabel(pid, s, tuple(factors[pid]) if pid in factors else None) for pid, s in zip(ids, states)]
    epistemic = {(measurement_id, pid): _point_mass(size, i) for i, pid in enumerate(ids)}
    for label, atom in extra_preparations:
        preps.insert(0, label)
        epistemic[(measurement_id, label.id)] = _point_mass(size, atom)
    response = np.array([born_vector(s, meas) for s in states])
    return OnticModel(
        space=OnticSpace(size),
        preparations=tuple(preps),
        measurements=(measurement_id,),
        epistemic=epistemic,
        response={measurement_id: response},
        measurement_independent=True,
        outcome_labels={measurement_id: meas.labels},
    )


def build_deterministic_model(
    states: Sequence[PureState],
    meas: Measurement,
    ids: Sequence[str] | None = None,
    measurement_id: str = "M",
) -> OnticModel:
    """Outcome-determining hidden variables: one atom per (state, outcome).

    Atom (i, m) answers m with certainty and carries weight Born_i(m) under
    preparation i, so every response row is a point mass and the statistics
    are reproduced exactly.
    """
    ids = list(ids) if ids is not None else [f"P{i}" for i in range(len(states))]
    if len(ids) != len(states):
        raise ValueError("one id per state")
    K = meas.num_outcomes
    size = len(states) * K
    response = np.zeros((size, K))
    epistemic = {}
    for i, (pid, s) in enumerate(zip(ids, states)):
        if s.dim != meas.dim:
            raise ValueError(f"state dim {s.dim} != measurement dim {meas.dim}")
        v = np.zeros(size)
        v[i * K : (i + 1) * K] = born_vector(s, meas)
        epistemic[(measurement_id, pid)] = v / v.sum()
        response[i * K : (i + 1) * K] = np.eye(K)
    return OnticModel(
        space=OnticSpace(size),
        preparations=tuple(PreparationLabel(pid, s) for pid, s in zip(ids, states)),
        measurements=(measurement_id,),
        epistemic=epistemic,
        response={measurement_id: response},
        measurement_independent=True,
        outcome_labels={measurement_id: meas.labels},
    )


def build_overlapping_toy_model(
    psi: PureState,
    phi: PureState,
    meas: Measurement,
    mix: float,
    shared_response: np.ndarray | None = None,
    measurement_id: str = "M",
) -> OnticModel:
    """A psi-epistemic fixture: P_psi and P_phi share the atom lambda_shared.

    Atoms: 0 = lambda_psi, 1 = lambda_shared, 2 = lambda_phi, then one atom
    per mixed product state Psi_k (1 < k < 2**n). p(.|P_psi) = (1-mix, mix, 0, ...),
    p(.|P_phi) = (0, mix, 1-mix, ...). Each joint preparation Psi_k keeps mass
    mix**2 on lambda_shared and the rest on its own atom (lambda_psi for k=1,
    lambda_phi for k=2**n), so compatibility holds. Atoms other than
    lambda_shared respond with Born rows of their product state; lambda_shared
    responds uniformly unless shared_response is given.
    """
    from .quantum import enumerate_product_states

    if not 0.0 < mix < 1.0:
        raise ValueError(f"mix must lie in (0, 1), got {mix}")
    K = meas.num_outcomes
    n = int(round(math.log2(K)))
    if 2**n != K or psi.dim**n != meas.dim:
        raise ValueError("measurement must have 2**n outcomes on n copies of the state space")
    products = enumerate_product_states(psi, phi, n)
    size = 3 + (K - 2)
    atom_of = {1: 0, K: 2}
    for k in range(2, K):
        atom_of[k] = 3 + (k - 2)
    pp, pf = "P_psi", "P_phi"
    preps = [PreparationLabel(pp, psi), PreparationLabel(pf, phi)]
    epistemic = {}
    v = np.zeros(size)
    v[0], v[1] = 1.0 - mix, mix
    epistemic[(measurement_id, pp)] = v
    v = np.zeros(size)
    v[2], v[1] = 1.0 - mix, mix
    epistemic[(measurement_id, pf)] = v
    response = np.zeros((size, K))
    for k, (bits, state) in enumerate(products, start=1):
        pid = joint_id(bits)
        preps.append(PreparationLabel(pid, state, tuple(pf if b else pp for b in bits)))
        w = np.zeros(size)
        w[1] = mix**2
        w[atom_of[k]] = 1.0 - mix**2
        epistemic[(measurement_id, pid)] = w
        response[atom_of[k]] = born_vector(state, meas)
    response[1] = np.full(K, 1.0 / K) if shared_response is None else np.asarray(shared_response, dtype=float)
    return OnticModel(
        space=OnticSpace(size),
        preparations=tuple(preps),
        measurements=(measurement_id,),
        epistemic=epistemic,
        response={measurement_id: response},
        measurement_independent=True,
        outcome_labels={measurement_id: meas.labels},
    )


def joint_id(bits: Sequence[int]) -> str:
    """Conventional id of the joint preparation with the given psi/phi bits."""
    return "P_" + "".join(str(int(b)) for b in bits)


def joint_preparations(model: OnticModel, psi_id: str, phi_id: str) -> list[str]:
    """Joint preparation ids ordered by product-state index k (bit 0 = psi)."""
    found: dict[tuple[int, ...], str] = {}
    for p in model.preparations:
        if p.factors and set(p.factors) <= {psi_id, phi_id}:
            bits = tuple(0 if f == psi_id else 1 for f in p.factors)
            found.setdefault(bits, p.id)
    if not found:
        raise StructureError(f"no joint preparations built from {psi_id!r} and {phi_id!r}")
    n = len(next(iter(found)))
    from .quantum import product_bits

    missing = [b for b in product_bits(n) if b not in found]
    if missing:
        raise StructureError(f"missing joint preparations for bit patterns {missing}")
    return [found[b] for b in product_bits(n)]
