"""Measurements on n copies whose outcome k never fires on the k-th product state.

For the half-overlap qubit pair there is a closed-form basis on two copies.
Otherwise the basis is found numerically: an orthonormal basis {b_k} of the
2**n-dimensional product space is rotated pair by pair (two-level rotations)
to minimize sum_k |<Psi_k|b_k>|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .quantum import (
    DEFAULT_DIM_CAP,
    DimensionError,
    Measurement,
    PureState,
    enumerate_product_states,
    haar_unitary,
)

EXPLICIT_HALF_OVERLAP = "explicit_half_overlap"
NUMERICAL_SEARCH = "numerical_search"


class OverlapMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class SearchOptions:
    restarts: int = 32
    iterations: int = 2000
    seed: int = 0
    target_residual: float = 1e-8
    # sweeps stop once the penalty improves by less than this (relative) in one sweep
    stall_tol: float = 1e-9
    polish: bool = True
    polish_steps: int = 40
    stop_on_target: bool = True
    dim_cap: int = DEFAULT_DIM_CAP


@dataclass(frozen=True, eq=False)
class AntidistinguishingResult:
    n: int
    measurement: Measurement
    residual: float
    method: str
    achieved: bool = True
    restarts_used: int = 0
    history: tuple = ()
    attempts: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"n must be > 1, got {self.n}")
        if self.measurement.num_outcomes != 2**self.n:
            raise ValueError(f"measurement has {self.measurement.num_outcomes} outcomes, expected {2 ** self.n}")
        if self.residual < 0:
            raise ValueError("residual must be nonnegative")

    def to_json(self) -> dict:
        out = self.measurement.to_json()
        out.update(
            {
                "n": self.n,
                "residual": self.residual,
                "method": self.method,
                "achieved": self.achieved,
            }
        )
        if self.attempts:
            out["attempts"] = {str(k): v for k, v in self.attempts.items()}
        return out

    @classmethod
    def from_json(cls, data: dict) -> "AntidistinguishingResult":
        return cls(
            n=int(data["n"]),
            measurement=Measurement.from_json(data),
            residual=float(data["residual"]),
            method=str(data["method"]),
            achieved=bool(data.get("achieved", True)),
        )


@dataclass(frozen=True)
class AntidistinguishingReport:
    residuals: tuple[float, ...]
    completeness_error: float
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol and self.completeness_error <= self.tol

    def failing(self) -> list[int]:
        """1-based indices k whose residual exceeds tol."""
        return [k + 1 for k, r in enumerate(self.residuals) if r > self.tol]


def product_state_matrix(psi: PureState, phi: PureState, n: int, dim_cap: int = DEFAULT_DIM_CAP) -> np.ndarray:
    """Row k-1 holds the amplitudes of Psi_k."""
    return np.array([s.amplitudes for _, s in enumerate_product_states(psi, phi, n, dim_cap)])


def residuals(meas: Measurement, states: Sequence[PureState]) -> np.ndarray:
    """<Psi_k|M_k|Psi_k> for each k, effects taken in label order."""
    out = np.empty(len(states))
    for k, (state, effect) in enumerate(zip(states, meas.effects)):
        v = state.amplitudes
        out[k] = max(float(np.real(np.vdot(v, effect @ v))), 0.0)
    return out


def verify_antidistinguishing(meas: Measurement, states: Sequence[PureState], tol: float = 1e-10) -> AntidistinguishingReport:
    if len(states) != meas.num_outcomes:
        raise DimensionError(f"{len(states)} states for {meas.num_outcomes} outcomes")
    for s in states:
        if s.dim != meas.dim:
            raise DimensionError(f"state dim {s.dim} != measurement dim {meas.dim}")
    return AntidistinguishingReport(tuple(float(r) for r in residuals(meas, states)), meas.completeness_error(), tol)


def annihilation_pattern(meas: Measurement, states: Sequence[PureState], tol: float = 1e-8) -> np.ndarray:
    """Boolean table z[k, m]: effect m has Born probability <= tol on state k."""
    table = np.array([[np.real(np.vdot(s.amplitudes, e @ s.amplitudes)) for e in meas.effects] for s in states])
    return table <= tol


def _half_overlap_frame(psi: PureState, phi: PureState) -> np.ndarray:
    """Unitary U with U|0> = psi and U|+> = phi up to phase."""
    c = psi.inner(phi)
    phase = c / abs(c)
    # phi = phase * (psi + perp) / sqrt(2)
    perp = math.sqrt(2.0) * np.conj(phase) * phi.amplitudes - psi.amplitudes
    perp = perp / np.linalg.norm(perp)
    return np.column_stack([psi.amplitudes, perp])


# rows are the two-copy basis vectors for psi = |0>, phi = |+>; row k is orthogonal to Psi_{k+1}
_S = 1.0 / math.sqrt(2.0)
_KET0 = np.array([1.0, 0.0])
_KET1 = np.array([0.0, 1.0])
_PLUS = np.array([_S, _S])
_MINUS = np.array([_S, -_S])
_HALF_OVERLAP_BASIS = np.array(
    [
        _S * (np.kron(_KET0, _KET1) + np.kron(_KET1, _KET0)),
        _S * (np.kron(_KET0, _MINUS) + np.kron(_KET1, _PLUS)),
        _S * (np.kron(_PLUS, _KET1) + np.kron(_MINUS, _KET0)),
        _S * (np.kron(_PLUS, _MINUS) + np.kron(_MINUS, _PLUS)),
    ],
    dtype=complex,
)


def build_half_overlap_measurement(psi: PureState, phi: PureState, tol: float = 1e-9) -> AntidistinguishingResult:
    """Two-copy basis measurement for qubits with |<psi|phi>|^2 = 1/2."""
    if psi.dim != 2 or phi.dim != 2:
        raise OverlapMismatchError("the half-overlap construction needs qubit states")
    overlap2 = abs(psi.inner(phi)) ** 2
    if abs(overlap2 - 0.5) > tol:
        raise OverlapMismatchError(f"|<psi|phi>|^2 = {overlap2!r}, expected 1/2")
    u = _half_overlap_frame(psi, phi)
    uu = np.kron(u, u)
    basis = (uu @ _HALF_OVERLAP_BASIS.T).T
    meas = Measurement.from_basis(list(_orthonormalize(basis.T).T))
    states = [s for _, s in enumerate_product_states(psi, phi, 2)]
    res = float(residuals(meas, states).max())
    return AntidistinguishingResult(n=2, measurement=meas, residual=res, method=EXPLICIT_HALF_OVERLAP)


def _orthonormalize(cols: np.ndarray) -> np.ndarray:
    """Nearest unitary (polar factor) to a square matrix of basis columns."""
    u, _, vh = np.linalg.svd(cols)
    return u @ vh


def _min_eigvec(p: float, q: complex, s: float) -> np.ndarray | None:
    """Eigenvector of [[p, q], [conj(q), s]] for the smaller eigenvalue, or None if degenerate."""
    half = 0.5 * (p - s)
    rad = math.sqrt(half * half + abs(q) ** 2)
    if rad < 1e-300:
        return None
    lam = 0.5 * (p + s) - rad
    v1 = np.array([q, lam - p])
    v2 = np.array([lam - s, np.conj(q)])
    v = v1 if abs(v1[0]) ** 2 + abs(v1[1]) ** 2 >= abs(v2[0]) ** 2 + abs(v2[1]) ** 2 else v2
    return v / np.linalg.norm(v)


def _sweep(basis: np.ndarray, gram: np.ndarray) -> None:
    """One pass of exact two-level rotations over every column pair, in place.

    gram[k, j] = <Psi_k|b_j>. Rotating columns (i, j) by a 2x2 unitary W only
    changes the i and j penalty terms; the optimal first column of W is the
    lowest eigenvector of a_i^H a_i - a_j^H a_j with a_i = gram[i, (i, j)].
    """
    dim = basis.shape[1]
    for i in range(dim - 1):
        for j in range(i + 1, dim):
            ai0, ai1 = gram[i, i], gram[i, j]
            aj0, aj1 = gram[j, i], gram[j, j]
            p = abs(ai0) ** 2 - abs(aj0) ** 2
            s = abs(ai1) ** 2 - abs(aj1) ** 2
            q = np.conj(ai0) * ai1 - np.conj(aj0) * aj1
            v = _min_eigvec(p, q, s)
            if v is None:
                continue
            w = np.array([[v[0], -np.conj(v[1])], [v[1], np.conj(v[0])]])
            idx = [i, j]
            basis[:, idx] = basis[:, idx] @ w
            gram[:, idx] = gram[:, idx] @ w


def _penalty(gram: np.ndarray) -> tuple[float, float]:
    d = np.abs(np.diag(gram)) ** 2
    return float(d.sum()), float(d.max())


def _hermitian_generators(dim: int) -> list[np.ndarray]:
    gens = []
    for a in range(dim):
        for b in range(a, dim):
            if a == b:
                h = np.zeros((dim, dim), dtype=complex)
                h[a, a] = 1.0
                gens.append(h)
            else:
                h = np.zeros((dim, dim), dtype=complex)
                h[a, b] = h[b, a] = 1.0
                gens.append(h)
                h = np.zeros((dim, dim), dtype=complex)
                h[a, b], h[b, a] = 1j, -1j
                gens.append(h)
    return gens


def _polish(basis: np.ndarray, states: np.ndarray, steps: int) -> np.ndarray:
    """Gauss-Newton on the equations <Psi_k|b_k> = 0 over B -> B exp(iH)."""
    from scipy.linalg import expm

    dim = basis.shape[1]
    gens = _hermitian_generators(dim)
    for _ in range(steps):
        gram = states.conj() @ basis
        c = np.diag(gram)
        if np.max(np.abs(c)) < 1e-15:
            break
        # d<Psi_k|b_k>/dH = i sum_j gram[k, j] H[j, k]
        cols = [1j * np.einsum("kj,jk->k", gram, h) for h in gens]
        jac = np.array([np.concatenate([d.real, d.imag]) for d in cols]).T
        rhs = np.concatenate([c.real, c.imag])
        x = -np.linalg.lstsq(jac, rhs, rcond=None)[0]
        h = sum(xi * g for xi, g in zip(x, gens))
        basis = basis @ expm(1j * h)
    return _orthonormalize(basis)


def _run_restart(states: np.ndarray, rng: np.random.Generator, opts: SearchOptions) -> tuple[np.ndarray, list[float]]:
    dim = states.shape[1]
    basis = haar_unitary(dim, rng)
    gram = states.conj() @ basis
    total, worst = _penalty(gram)
    history = [worst]
    stop_at = opts.target_residual * 1e-4
    for _ in range(opts.iterations):
        _sweep(basis, gram)
        new_total, worst = _penalty(gram)
        history.append(worst)
        if worst <= stop_at or total - new_total <= opts.stall_tol * max(total, 1e-300):
            total = new_total
            break
        total = new_total
    basis = _orthonormalize(basis)
    if opts.polish and worst > stop_at * 1e-8:
        polished = _polish(basis, states, opts.polish_steps)
        p_worst = _penalty(states.conj() @ polished)[1]
        if p_worst < worst:
            basis, worst = polished, p_worst
            history.append(worst)
    return basis, history


def search_measurement(psi: PureState, phi: PureState, n: int, opts: SearchOptions | None = None) -> AntidistinguishingResult:
    """Multi-restart two-level-rotation search for an antidistinguishing basis on n copies."""
    opts = opts or SearchOptions()
    if psi.equivalent(phi):
        raise ValueError("psi and phi must be distinct up to phase")
    states = product_state_matrix(psi, phi, n, opts.dim_cap)
    best_basis, best_res, histories = None, math.inf, []
    used = 0
    for r in range(opts.restarts):
        rng = np.random.default_rng([opts.seed, n, r])
        basis, history = _run_restart(states, rng, opts)
        histories.append(tuple(history))
        used = r + 1
        res = float(np.max(np.abs(np.einsum("kd,dk->k", states.conj(), basis)) ** 2))
        if res < best_res:
            best_basis, best_res = basis, res
        if opts.stop_on_target and best_res <= opts.target_residual:
            break
    meas = Measurement.from_basis(list(best_basis.T))
    psi_states = [PureState(v / np.linalg.norm(v)) for v in states]
    final = float(residuals(meas, psi_states).max())
    return AntidistinguishingResult(
        n=n,
        measurement=meas,
        residual=final,
        method=NUMERICAL_SEARCH,
        achieved=final <= opts.target_residual,
        restarts_used=used,
        history=tuple(histories),
    )


def minimal_copies(
    psi: PureState,
    phi: PureState,
    target_residual: float = 1e-8,
    n_max: int = 5,
    opts: SearchOptions | None = None,
) -> AntidistinguishingResult:
    """Smallest n in 2..n_max whose search reaches target_residual.

    If none does, the lowest-residual attempt is returned with achieved=False.
    attempts maps each tried n to its best residual.
    """
    opts = opts or SearchOptions()
    opts = SearchOptions(**{**opts.__dict__, "target_residual": target_residual})
    attempts: dict[int, float] = {}
    best: AntidistinguishingResult | None = None
    for n in range(2, n_max + 1):
        result = search_measurement(psi, phi, n, opts)
        attempts[n] = result.residual
        if best is None or result.residual < best.residual:
            best = result
        if result.residual <= target_residual:
            best = result
            break
    assert best is not None
    return AntidistinguishingResult(
        n=best.n,
        measurement=best.measurement,
        residual=best.residual,
        method=best.method,
        achieved=best.residual <= target_residual,
        restarts_used=best.restarts_used,
        history=best.history,
        attempts=attempts,
    )


def antidistinguish(psi: PureState, phi: PureState, n: int | None = None, opts: SearchOptions | None = None) -> AntidistinguishingResult:
    """Closed form when it applies, numerical search otherwise."""
    if psi.dim == 2 and abs(abs(psi.inner(phi)) ** 2 - 0.5) <= 1e-9 and n in (None, 2):
        return build_half_overlap_measurement(psi, phi)
    opts = opts or SearchOptions()
    if n is None:
        return minimal_copies(psi, phi, opts.target_residual, opts=opts)
    return search_measurement(psi, phi, n, opts)


def transform_result(result: AntidistinguishingResult, unitary: np.ndarray) -> AntidistinguishingResult:
    """Conjugate the measurement by U tensor ... tensor U (n copies)."""
    big = np.ones((1, 1), dtype=complex)
    for _ in range(result.n):
        big = np.kron(big, unitary)
    return AntidistinguishingResult(
        n=result.n,
        measurement=result.measurement.conjugated(big),
        residual=result.residual,
        method=result.method,
        achieved=result.achieved,
    )
