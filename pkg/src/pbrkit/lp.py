"""How much overlap survives when the Born zeros only hold to within epsilon.

The search is over finite models with lambda_count ontic states and a single
measurement with 2**n outcomes. The objective sum_lambda min(p_psi, p_phi) is
linear once the response function is fixed, and the epsilon constraints
sum_lambda p(lambda|Psi_k) p(k|lambda) <= epsilon are linear in either factor
alone, so the solver alternates between the two linear programs and keeps the
best feasible point. The value is therefore a certified lower bound on the
maximal overlap, realized by the returned model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .ontic import OnticModel, OnticSpace, PreparationLabel, joint_id
from .quantum import Measurement, PureState, enumerate_product_states

COMPAT_FLOOR = 1e-6
ROUNDS = 50
CLEAN_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class OverlapLPResult:
    value: float
    model: OnticModel | None
    feasible: bool
    epsilon: float
    lambda_count: int
    floor: float
    history: tuple[float, ...] = field(default=())

    def to_row(self) -> dict:
        return {
            "lambda_count": self.lambda_count,
            "epsilon": self.epsilon,
            "value": self.value,
            "feasible": self.feasible,
        }


def _linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None):
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    return res if res.status == 0 else None


def _epistemic_lp(R: np.ndarray, eps: float, floor: float):
    """Maximize sum t subject to t <= p_psi, t <= p_phi and the epsilon and floor constraints."""
    L, K = R.shape
    # x = [p_psi (L), p_phi (L), p_1..p_K (K*L), t (L)]
    nv = L * (K + 3)
    psi_sl = slice(0, L)
    phi_sl = slice(L, 2 * L)

    def pk(k: int) -> slice:
        return slice(2 * L + k * L, 2 * L + (k + 1) * L)

    t_sl = slice(2 * L + K * L, nv)
    rows, rhs = [], []
    for lam in range(L):
        for other in (psi_sl, phi_sl):
            row = np.zeros(nv)
            row[t_sl.start + lam] = 1.0
            row[other.start + lam] = -1.0
            rows.append(row)
            rhs.append(0.0)
    bounds = [(0.0, None)] * nv
    for k in range(K):
        s = pk(k)
        # compatibility floors: Psi_1 above psi, Psi_K above phi, mixed above t = min(psi, phi)
        src = psi_sl if k == 0 else phi_sl if k == K - 1 else t_sl
        for lam in range(L):
            row = np.zeros(nv)
            row[src.start + lam] = floor
            row[s.start + lam] = -1.0
            rows.append(row)
            rhs.append(0.0)
        if eps == 0.0:
            for lam in range(L):
                if R[lam, k] > 0:
                    bounds[s.start + lam] = (0.0, 0.0)
        else:
            row = np.zeros(nv)
            row[s] = R[:, k]
            rows.append(row)
            rhs.append(eps)
    A_eq = np.zeros((K + 2, nv))
    A_eq[0, psi_sl] = 1.0
    A_eq[1, phi_sl] = 1.0
    for k in range(K):
        A_eq[2 + k, pk(k)] = 1.0
    c = np.zeros(nv)
    c[t_sl] = -1.0
    res = _linprog(c, np.array(rows), np.array(rhs), A_eq, np.ones(K + 2), bounds)
    if res is None:
        return None
    x = res.x
    return x[psi_sl], x[phi_sl], np.array([x[pk(k)] for k in range(K)])


def _response_lp(p_psi, p_phi, p_joint: np.ndarray, eps: float, floor: float):
    """Response rows that minimize the epsilon budget spent, given epistemic vectors."""
    K, L = p_joint.shape
    nv = L * K  # R[lam, k] at lam * K + k
    # anticipate the floors that extra overlap would require
    weight = p_joint.T + floor * (p_psi + p_phi)[:, None]
    c = weight.reshape(-1)
    A_eq = np.zeros((L, nv))
    for lam in range(L):
        A_eq[lam, lam * K : (lam + 1) * K] = 1.0
    A_ub = np.zeros((K, nv))
    for k in range(K):
        A_ub[k, k::K] = p_joint[k]
    res = _linprog(c, A_ub, np.full(K, eps), A_eq, np.ones(L), [(0.0, 1.0)] * nv)
    if res is None:
        return None
    return res.x.reshape(L, K)


def _clean(v: np.ndarray) -> np.ndarray:
    v = np.where(v > CLEAN_TOL, v, 0.0)
    return v / v.sum()


def _initial_response(L: int, K: int, rng: np.random.Generator) -> np.ndarray:
    """Deterministic responses, atom lambda -> outcome (lambda + offset) mod K."""
    offset = int(rng.integers(K))
    R = np.zeros((L, K))
    for lam in range(L):
        R[lam, (lam + offset) % K] = 1.0
    return R


def _build_model(psi, phi, meas, products, p_psi, p_phi, p_joint, R) -> OnticModel:
    M = "M"
    preps = [PreparationLabel("P_psi", psi), PreparationLabel("P_phi", phi)]
    epistemic = {(M, "P_psi"): p_psi, (M, "P_phi"): p_phi}
    for k, (bits, state) in enumerate(products):
        pid = joint_id(bits)
        preps.append(PreparationLabel(pid, state, tuple("P_phi" if b else "P_psi" for b in bits)))
        epistemic[(M, pid)] = p_joint[k]
    return OnticModel(
        space=OnticSpace(R.shape[0]),
        preparations=tuple(preps),
        measurements=(M,),
        epistemic=epistemic,
        response={M: R},
        measurement_independent=True,
        outcome_labels={M: meas.labels},
    )


def backed_overlap(model: OnticModel, floor: float = COMPAT_FLOOR) -> float:
    """sum_lambda min(p_psi, p_phi, p_k / floor over mixed k).

    Overlap counts only where every mixed joint preparation keeps the floor
    weight that quantitative compatibility demands.
    """
    M = model.measurements[0]
    joint = _joint_ids(model)
    t = np.minimum(model.vector(M, "P_psi"), model.vector(M, "P_phi"))
    for pid in joint[1:-1]:
        t = np.minimum(t, model.vector(M, pid) / floor)
    return float(t.sum())


def raw_overlap(model: OnticModel) -> float:
    M = model.measurements[0]
    return float(np.minimum(model.vector(M, "P_psi"), model.vector(M, "P_phi")).sum())


def _joint_ids(model: OnticModel) -> list[str]:
    from .ontic import joint_preparations

    return joint_preparations(model, "P_psi", "P_phi")


def check_lp_model(model: OnticModel, epsilon: float, floor: float = COMPAT_FLOOR, tol: float = 1e-9) -> bool:
    """Re-evaluate the epsilon and floor constraints on a realized model."""
    M = model.measurements[0]
    R = model.response[M]
    joint = _joint_ids(model)
    K = len(joint)
    p_psi = model.vector(M, "P_psi")
    p_phi = model.vector(M, "P_phi")
    for k, pid in enumerate(joint):
        v = model.vector(M, pid)
        if float(v @ R[:, k]) > epsilon + tol:
            return False
        if k == 0 and np.any(v < floor * p_psi - tol):
            return False
        if k == K - 1 and np.any(v < floor * p_phi - tol):
            return False
    return True


def _separate_unbacked(p_psi, p_phi, p_joint, floor):
    """Move p_phi mass off atoms where it overlaps p_psi without floor backing.

    p_psi and the joint vectors stay fixed; p_phi keeps at least the backed
    overlap and its own floor. Returns the new p_phi, or the old one if the
    program has no solution.
    """
    K, L = p_joint.shape
    t = np.minimum(p_psi, p_phi)
    for v in p_joint[1:-1]:
        t = np.minimum(t, v / floor)
    unbacked = (p_psi > CLEAN_TOL) & (np.minimum(p_psi, p_phi) > t + CLEAN_TOL)
    if not unbacked.any():
        return p_phi
    c = unbacked.astype(float)
    lower = np.minimum(t, p_phi)
    upper = np.where(floor > 0, p_joint[-1] / floor, np.inf)
    bounds = [(lower[i], max(lower[i], upper[i])) for i in range(L)]
    res = _linprog(c, A_eq=np.ones((1, L)), b_eq=[1.0], bounds=bounds)
    return p_phi if res is None else res.x


def max_overlap_lp(
    psi: PureState,
    phi: PureState,
    meas: Measurement,
    lambda_count: int,
    epsilon: float,
    floor: float = COMPAT_FLOOR,
    rounds: int = ROUNDS,
    seed: int = 0,
    init: OnticModel | None = None,
) -> OverlapLPResult:
    """Lower bound on the floor-backed overlap with Born zeros relaxed to epsilon."""
    if lambda_count < 2:
        raise ValueError("lambda_count must be >= 2")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    K = meas.num_outcomes
    n = int(round(math.log2(K)))
    if 2**n != K or n < 2 or psi.dim**n != meas.dim:
        raise ValueError("measurement must have 2**n outcomes on n >= 2 copies")
    products = enumerate_product_states(psi, phi, n)
    L = lambda_count
    rng = np.random.default_rng([seed, L])
    R = _initial_response(L, K, rng)
    best_value, best_model, history = -1.0, None, []
    if init is not None and init.size == L and check_lp_model(init, epsilon, floor):
        M0 = init.measurements[0]
        best_model = init
        best_value = backed_overlap(init, floor)
        R = np.array(init.response[M0])
    for _ in range(rounds):
        sol = _epistemic_lp(R, epsilon, floor)
        if sol is None:
            history.append(math.nan)
            break
        p_psi, p_phi, p_joint = sol
        p_psi, p_phi = _clean(p_psi), _clean(p_phi)
        p_joint = np.array([_clean(v) for v in p_joint])
        p_phi = _clean(_separate_unbacked(p_psi, p_phi, p_joint, floor))
        model = _build_model(psi, phi, meas, products, p_psi, p_phi, p_joint, R)
        value = backed_overlap(model, floor)
        history.append(value)
        if check_lp_model(model, epsilon, floor) and value > best_value + 1e-12:
            best_value, best_model = value, model
        if best_value >= 1.0 - 1e-12:
            break
        R_new = _response_lp(p_psi, p_phi, p_joint, epsilon, floor)
        if R_new is None:
            break
        R_new = np.where(R_new > CLEAN_TOL, R_new, 0.0)
        R_new = R_new / R_new.sum(axis=1, keepdims=True)
        if np.allclose(R_new, R, atol=1e-12):
            break
        R = R_new
    if best_model is None:
        return OverlapLPResult(0.0, None, False, epsilon, L, floor, tuple(history))
    return OverlapLPResult(best_value, best_model, True, epsilon, L, floor, tuple(history))


def max_overlap_curve(
    psi: PureState,
    phi: PureState,
    meas: Measurement,
    lambda_count: int,
    epsilons: Sequence[float],
    floor: float = COMPAT_FLOOR,
    rounds: int = ROUNDS,
    seed: int = 0,
) -> list[OverlapLPResult]:
    """Solve an epsilon grid in increasing order, warm-starting from the previous model.

    A model feasible at epsilon stays feasible at any larger epsilon, so the
    reported values are nondecreasing along the sorted grid.
    """
    results: dict[float, OverlapLPResult] = {}
    prev: OnticModel | None = None
    for eps in sorted(set(float(e) for e in epsilons)):
        res = max_overlap_lp(psi, phi, meas, lambda_count, eps, floor, rounds, seed, init=prev)
        results[eps] = res
        if res.model is not None:
            prev = res.model
    return [results[float(e)] for e in epsilons]
