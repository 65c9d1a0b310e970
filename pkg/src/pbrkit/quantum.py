"""Pure-state linear algebra on small finite-dimensional Hilbert spaces.

States are unit complex vectors, measurements are lists of positive effects
summing to the identity. Everything here is an immutable value; functions are
pure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

NORM_TOL = 1e-12
COMPLETENESS_TOL = 1e-10
PSD_TOL = 1e-12
PHASE_TOL = 1e-10
DEFAULT_DIM_CAP = 2**14


class DimensionError(ValueError):
    """Dimension mismatch between states and effects, or a product too large."""


class StateValidationError(ValueError):
    pass


class MeasurementValidationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    norm_tol: float = NORM_TOL

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size < 2:
            raise StateValidationError(f"state dimension must be >= 2, got {amps.size}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > self.norm_tol:
            raise StateValidationError(f"state norm {norm!r} differs from 1 by more than {self.norm_tol}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, amplitudes: Sequence[complex]) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise StateValidationError("zero vector cannot be normalized")
        return cls(amps / norm)

    @classmethod
    def basis(cls, index: int, dim: int = 2) -> "PureState":
        amps = np.zeros(dim, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)

    def inner(self, other: "PureState") -> complex:
        """<self|other>."""
        if other.dim != self.dim:
            raise DimensionError(f"inner product of dim {self.dim} and dim {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def equivalent(self, other: "PureState", tol: float = PHASE_TOL) -> bool:
        """Equality up to a global phase."""
        if other.dim != self.dim:
            return False
        return abs(abs(self.inner(other)) - 1.0) <= tol

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "re": [float(x) for x in self.amplitudes.real],
            "im": [float(x) for x in self.amplitudes.imag],
        }

    @classmethod
    def from_json(cls, data: dict) -> "PureState":
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data["im"], dtype=float)
        if re.shape != im.shape:
            raise StateValidationError("re and im parts have different lengths")
        if "dim" in data and int(data["dim"]) != re.size:
            raise StateValidationError(f"dim {data['dim']} does not match {re.size} amplitudes")
        return cls(re + 1j * im)

    def __repr__(self) -> str:
        return f"PureState(dim={self.dim}, amplitudes={np.array2string(self.amplitudes, precision=4)})"


def qubit(overlap2: float, phase: float = 0.0) -> PureState:
    """Qubit state sqrt(x)|0> + e^{i phase} sqrt(1-x)|1>, so |<0|state>|^2 = overlap2."""
    if not 0.0 <= overlap2 <= 1.0:
        raise ValueError(f"overlap2 must lie in [0, 1], got {overlap2}")
    return PureState([math.sqrt(overlap2), np.exp(1j * phase) * math.sqrt(1.0 - overlap2)])


def plus_state() -> PureState:
    return PureState(np.array([1.0, 1.0]) / math.sqrt(2.0))


@dataclass(frozen=True, eq=False)
class Measurement:
    """Complete set of effects E_m >= 0 with sum_m E_m = 1.

    Outcome labels default to 1..K.
    """

    effects: tuple
    labels: tuple = field(default=())
    completeness_tol: float = COMPLETENESS_TOL
    psd_tol: float = PSD_TOL

    def __post_init__(self) -> None:
        effects = []
        for e in self.effects:
            arr = np.array(e, dtype=complex)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise MeasurementValidationError(f"effect has shape {arr.shape}, expected square")
            arr.setflags(write=False)
            effects.append(arr)
        if not effects:
            raise MeasurementValidationError("a measurement needs at least one effect")
        dim = effects[0].shape[0]
        if any(e.shape != (dim, dim) for e in effects):
            raise MeasurementValidationError("effects have inconsistent dimensions")
        labels = tuple(self.labels) if self.labels else tuple(range(1, len(effects) + 1))
        if len(labels) != len(effects):
            raise MeasurementValidationError(f"{len(labels)} labels for {len(effects)} effects")
        if len(set(labels)) != len(labels):
            raise MeasurementValidationError("outcome labels must be distinct")
        for m, e in zip(labels, effects):
            if np.abs(e - e.conj().T).max() > self.completeness_tol:
                raise MeasurementValidationError(f"effect {m!r} is not Hermitian")
            lo = np.linalg.eigvalsh((e + e.conj().T) / 2).min()
            if lo < -self.psd_tol:
                raise MeasurementValidationError(f"effect {m!r} has eigenvalue {lo!r} < -{self.psd_tol}")
        total = np.sum(effects, axis=0)
        err = np.abs(total - np.eye(dim)).max()
        if err > self.completeness_tol:
            raise MeasurementValidationError(f"effects sum to identity only within {err!r}")
        object.__setattr__(self, "effects", tuple(effects))
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_basis(cls, vectors: Sequence, labels: Sequence[Hashable] = ()) -> "Measurement":
        """Projective measurement onto the given orthonormal vectors (rows or PureStates)."""
        rows = [v.amplitudes if isinstance(v, PureState) else np.asarray(v, dtype=complex) for v in vectors]
        return cls(tuple(np.outer(v, v.conj()) for v in rows), tuple(labels))

    @classmethod
    def computational(cls, dim: int = 2, labels: Sequence[Hashable] = ()) -> "Measurement":
        return cls.from_basis(list(np.eye(dim, dtype=complex)), labels)

    @property
    def dim(self) -> int:
        return int(self.effects[0].shape[0])

    @property
    def num_outcomes(self) -> int:
        return len(self.effects)

    def index(self, m: Hashable) -> int:
        try:
            return self.labels.index(m)
        except ValueError:
            raise KeyError(f"unknown outcome label {m!r}") from None

    def effect(self, m: Hashable) -> np.ndarray:
        return self.effects[self.index(m)]

    def completeness_error(self) -> float:
        return float(np.abs(np.sum(self.effects, axis=0) - np.eye(self.dim)).max())

    def conjugated(self, unitary: np.ndarray) -> "Measurement":
        """Effects U E U^dagger, same labels."""
        u = np.asarray(unitary, dtype=complex)
        return Measurement(tuple(u @ e @ u.conj().T for e in self.effects), self.labels)

    def relabeled(self, order: Sequence[int]) -> "Measurement":
        """Effect at new position i is the old effect order[i]; labels stay 1..K."""
        return Measurement(tuple(self.effects[i] for i in order), self.labels)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "effects": [{"re": e.real.tolist(), "im": e.imag.tolist()} for e in self.effects],
            "labels": list(self.labels),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Measurement":
        effects = tuple(np.asarray(e["re"], dtype=float) + 1j * np.asarray(e["im"], dtype=float) for e in data["effects"])
        labels = tuple(data.get("labels", ()))
        meas = cls(effects, labels)
        if "dim" in data and int(data["dim"]) != meas.dim:
            raise MeasurementValidationError(f"dim {data['dim']} does not match effect size {meas.dim}")
        return meas


def tensor_product(states: Sequence[PureState], dim_cap: int = DEFAULT_DIM_CAP) -> PureState:
    if not states:
        raise ValueError("tensor_product needs at least one state")
    dim = math.prod(s.dim for s in states)
    if dim > dim_cap:
        raise DimensionError(f"product dimension {dim} exceeds cap {dim_cap}")
    amps = np.ones(1, dtype=complex)
    for s in states:
        amps = np.kron(amps, s.amplitudes)
    # renormalize to absorb rounding in long products
    return PureState(amps / np.linalg.norm(amps))


def product_bits(n: int) -> list[tuple[int, ...]]:
    """All n-bit tuples in lexicographic order; bit 0 selects psi, 1 selects phi."""
    if n < 2:
        raise ValueError(f"n must be > 1, got {n}")
    return list(itertools.product((0, 1), repeat=n))


def enumerate_product_states(
    psi: PureState, phi: PureState, n: int, dim_cap: int = DEFAULT_DIM_CAP
) -> list[tuple[tuple[int, ...], PureState]]:
    """The 2**n products of psi and phi. Position k-1 holds Psi_k; first is psi^n, last phi^n."""
    if psi.dim != phi.dim:
        raise DimensionError(f"psi has dim {psi.dim}, phi has dim {phi.dim}")
    if psi.dim**n > dim_cap:
        raise DimensionError(f"product dimension {psi.dim ** n} exceeds cap {dim_cap}")
    return [(bits, tensor_product([phi if b else psi for b in bits], dim_cap)) for bits in product_bits(n)]


def bits_to_index(bits: Sequence[int]) -> int:
    """1-based product-state index k of a bit tuple."""
    k = 0
    for b in bits:
        k = 2 * k + int(b)
    return k + 1


def index_to_bits(k: int, n: int) -> tuple[int, ...]:
    if not 1 <= k <= 2**n:
        raise ValueError(f"index {k} out of range for n={n}")
    return tuple((k - 1) >> (n - 1 - j) & 1 for j in range(n))


def born_probability(state: PureState, meas: Measurement, m: Hashable) -> float:
    if state.dim != meas.dim:
        raise DimensionError(f"state dim {state.dim} != measurement dim {meas.dim}")
    v = state.amplitudes
    p = float(np.real(np.vdot(v, meas.effect(m) @ v)))
    return min(max(p, 0.0), 1.0)


def outcome_distribution(state: PureState, meas: Measurement) -> dict[Hashable, float]:
    return {m: born_probability(state, meas, m) for m in meas.labels}


def born_vector(state: PureState, meas: Measurement) -> np.ndarray:
    """Born probabilities in label order, clamped at 0 and renormalized."""
    p = np.array([born_probability(state, meas, m) for m in meas.labels])
    return p / p.sum()


def helstrom_error_bound(psi: PureState, phi: PureState) -> float:
    """Minimum error probability for discriminating psi from phi with equal priors.

    1 - |<psi|phi>|^2 is evaluated as the squared norm of the part of phi
    orthogonal to psi, which stays accurate when the states nearly coincide.
    """
    if psi.dim != phi.dim:
        raise DimensionError(f"dimension mismatch {psi.dim} vs {phi.dim}")
    perp = phi.amplitudes - psi.inner(phi) * psi.amplitudes
    return 0.5 * (1.0 - min(float(np.linalg.norm(perp)), 1.0))


def helstrom_from_overlap2(overlap2: float) -> float:
    return 0.5 * (1.0 - math.sqrt(1.0 - min(max(overlap2, 0.0), 1.0)))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(dim: int, rng: np.random.Generator) -> PureState:
    return PureState.from_unnormalized(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))
