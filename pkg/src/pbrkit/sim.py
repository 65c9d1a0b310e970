"""Seeded Monte Carlo runs of the n-device preparation / joint-measurement protocol.

Each trial: every device picks psi or phi (bit 0 or 1), the joint product
state Psi_k is prepared, and the measurement returns an outcome m. Outcome
m == k is the forbidden event. Outcomes come either from the Born rule or
from an ontological model (draw lambda, then m).

Randomness uses numpy's PCG64 with SeedSequence splitting: trials are cut
into fixed-size chunks, each chunk gets its own child seed, and inside a chunk
every device, the shared source, the ontic draw and the outcome draw get
separate streams.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .antidistinguish import residuals
from .ontic import OnticModel, OnticSpace, PreparationLabel, joint_id, joint_preparations
from .quantum import Measurement, PureState, born_vector, enumerate_product_states

RNG_ID = "numpy.PCG64+SeedSequence"
CHUNK = 1 << 16
INDEPENDENT = "independent"
SHARED_RANDOMNESS = "shared_randomness"
COMMON_SUPPLY = "common_supply"
CORRELATIONS = (INDEPENDENT, SHARED_RANDOMNESS, COMMON_SUPPLY)


class VerificationError(ValueError):
    """The supplied measurement does not antidistinguish the product states."""


@dataclass(frozen=True)
class DeviceConfig:
    """n devices; device j prepares psi with probability choice_bias[j].

    shared_randomness: with probability `strength` a trial uses one common
    uniform draw for every device's choice (and, for device models, one
    common hidden value). common_supply: a common supply level s ~ U(0, 1)
    shifts every bias by strength * (s - 1/2).
    """

    n: int = 2
    choice_bias: tuple[float, ...] | float = 0.5
    correlation: str = INDEPENDENT
    strength: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"n must be > 1, got {self.n}")
        bias = self.choice_bias
        bias = (float(bias),) * self.n if np.isscalar(bias) else tuple(float(b) for b in bias)
        if len(bias) != self.n:
            raise ValueError(f"{len(bias)} biases for {self.n} devices")
        if any(not 0.0 <= b <= 1.0 for b in bias):
            raise ValueError("choice biases must lie in [0, 1]")
        object.__setattr__(self, "choice_bias", bias)
        if self.correlation not in CORRELATIONS:
            raise ValueError(f"unknown correlation {self.correlation!r}")
        if self.correlation == INDEPENDENT and self.strength != 0.0:
            raise ValueError("independent devices have strength 0")
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError("strength must lie in [0, 1]")

    @classmethod
    def parse(cls, n: int, spec: str, bias: float | Sequence[float] = 0.5) -> "DeviceConfig":
        """Build from 'independent', 'shared:0.5' or 'common:0.3'."""
        name, _, value = spec.partition(":")
        aliases = {"shared": SHARED_RANDOMNESS, "common": COMMON_SUPPLY}
        name = aliases.get(name, name)
        return cls(n=n, choice_bias=bias, correlation=name, strength=float(value) if value else 0.0)


@dataclass(frozen=True)
class TrialRecord:
    chosen_bits: tuple[int, ...]
    outcome: int
    forbidden: bool


@dataclass
class SimulationSummary:
    counts: np.ndarray  # counts[k-1, m-1]
    predicted: np.ndarray  # p(m | Psi_k) used to draw outcomes
    trials: int
    seed: int
    config: DeviceConfig
    source: str
    chi2: float = math.nan
    dof: int = 0
    p_value: float = math.nan
    metadata: dict = field(default_factory=dict)
    records: list = field(default_factory=list, repr=False)

    @property
    def forbidden_count(self) -> int:
        return int(np.trace(self.counts))

    @property
    def forbidden_frequency(self) -> float:
        return self.forbidden_count / self.trials

    @property
    def prepared(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def total_variation(self) -> float:
        """TV distance between empirical and predicted joint (k, m) frequencies."""
        emp = self.counts / self.trials
        pred = self.predicted * (self.prepared / self.trials)[:, None]
        return 0.5 * float(np.abs(emp - pred).sum())

    def to_json(self) -> dict:
        K = self.counts.shape[0]
        return {
            "metadata": self.metadata,
            "trials": self.trials,
            "forbidden_count": self.forbidden_count,
            "forbidden_frequency": self.forbidden_frequency,
            "chi2": self.chi2,
            "dof": self.dof,
            "p_value": self.p_value,
            "cells": [
                {"k": k + 1, "m": m + 1, "count": int(self.counts[k, m]), "predicted": float(self.predicted[k, m])}
                for k in range(K)
                for m in range(K)
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}: {value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "m", "count", "predicted", "residual"])
        prepared = self.prepared
        K = self.counts.shape[0]
        for k in range(K):
            for m in range(K):
                freq = self.counts[k, m] / prepared[k] if prepared[k] else 0.0
                pred = self.predicted[k, m]
                writer.writerow([k + 1, m + 1, int(self.counts[k, m]), f"{pred:.17g}", f"{freq - pred:.17g}"])
        return buf.getvalue()


def _chunks(trials: int, seed: int) -> Iterator[tuple[int, np.random.SeedSequence]]:
    root = np.random.SeedSequence(seed)
    n_chunks = max(1, math.ceil(trials / CHUNK))
    for i, child in enumerate(root.spawn(n_chunks)):
        size = min(CHUNK, trials - i * CHUNK)
        if size > 0:
            yield size, child


def _streams(child: np.random.SeedSequence, n: int) -> dict:
    seqs = child.spawn(n + 3)
    gens = [np.random.Generator(np.random.PCG64(s)) for s in seqs]
    return {"devices": gens[:n], "shared": gens[n], "ontic": gens[n + 1], "outcome": gens[n + 2]}


def sample_device_bits(cfg: DeviceConfig, size: int, streams: dict) -> tuple[np.ndarray, np.ndarray | None]:
    """Bits (size x n) and, under shared randomness, the per-trial 'common' flags."""
    bias = np.array(cfg.choice_bias)
    u = np.column_stack([g.random(size) for g in streams["devices"]])
    common = None
    if cfg.correlation == SHARED_RANDOMNESS:
        common = streams["shared"].random(size) < cfg.strength
        u_common = streams["shared"].random(size)
        u = np.where(common[:, None], u_common[:, None], u)
    elif cfg.correlation == COMMON_SUPPLY:
        level = streams["shared"].random(size)
        bias = np.clip(bias[None, :] + cfg.strength * (level[:, None] - 0.5), 0.0, 1.0)
    return (u >= bias).astype(np.int64), common


def _bits_to_k(bits: np.ndarray) -> np.ndarray:
    n = bits.shape[1]
    weights = 1 << np.arange(n - 1, -1, -1)
    return bits @ weights  # zero-based k


def _sample_rows(prob_rows: np.ndarray, which: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw from prob_rows[which[i]] using uniform u[i]."""
    cdf = np.cumsum(prob_rows, axis=1)
    cdf[:, -1] = 1.0
    out = np.empty(which.size, dtype=np.int64)
    for r in np.unique(which):
        sel = which == r
        out[sel] = np.searchsorted(cdf[r], u[sel], side="right")
    return np.minimum(out, prob_rows.shape[1] - 1)


def _metadata(seed: int, trials: int, cfg: DeviceConfig, source: str, **extra) -> dict:
    meta = {
        "tool": "pbrkit",
        "version": __version__,
        "rng": RNG_ID,
        "chunk": CHUNK,
        "seed": seed,
        "trials": trials,
        "source": source,
        "config": {**asdict(cfg), "choice_bias": list(cfg.choice_bias)},
    }
    meta.update(extra)
    return meta


def _chi_square(counts: np.ndarray, predicted: np.ndarray, min_expected: float = 5.0) -> tuple[float, int, float]:
    prepared = counts.sum(axis=1)
    expected = predicted * prepared[:, None]
    mask = expected >= min_expected
    if not mask.any():
        return math.nan, 0, math.nan
    chi2 = float((((counts - expected) ** 2)[mask] / expected[mask]).sum())
    # each prepared row with usable cells loses one degree of freedom to its fixed total
    dof = int(mask.sum() - np.count_nonzero(mask.any(axis=1)))
    if dof <= 0:
        return chi2, 0, math.nan
    return chi2, dof, float(stats.chi2.sf(chi2, dof))


def _run(
    draw_outcomes,
    K: int,
    cfg: DeviceConfig,
    trials: int,
    seed: int,
    keep_records: bool,
) -> tuple[np.ndarray, list[TrialRecord]]:
    counts = np.zeros((K, K), dtype=np.int64)
    records: list[TrialRecord] = []
    for size, child in _chunks(trials, seed):
        streams = _streams(child, cfg.n)
        bits, common = sample_device_bits(cfg, size, streams)
        k = _bits_to_k(bits)
        m = draw_outcomes(k, streams, common)
        np.add.at(counts, (k, m), 1)
        if keep_records:
            records.extend(TrialRecord(tuple(int(b) for b in row), int(mm) + 1, bool(kk == mm)) for row, kk, mm in zip(bits, k, m))
    return counts, records


def simulate_quantum(
    psi: PureState,
    phi: PureState,
    meas: Measurement,
    cfg: DeviceConfig,
    trials: int,
    seed: int,
    max_residual: float = 1e-8,
    keep_records: bool = False,
) -> SimulationSummary:
    """Born-rule outcomes for randomly prepared products of psi and phi."""
    K = 2**cfg.n
    if meas.num_outcomes != K:
        raise VerificationError(f"measurement has {meas.num_outcomes} outcomes, expected {K}")
    products = [s for _, s in enumerate_product_states(psi, phi, cfg.n)]
    res = float(residuals(meas, products).max())
    if res > max_residual:
        raise VerificationError(f"measurement residual {res!r} exceeds {max_residual}")
    predicted = np.array([born_vector(s, meas) for s in products])

    def draw(k, streams, common):
        return _sample_rows(predicted, k, streams["outcome"].random(k.size))

    counts, records = _run(draw, K, cfg, trials, seed, keep_records)
    chi2, dof, p = _chi_square(counts, predicted)
    meta = _metadata(seed, trials, cfg, "quantum", residual=res)
    return SimulationSummary(counts, predicted, trials, seed, cfg, "quantum", chi2, dof, p, meta, records)


def simulate_model(
    model: OnticModel,
    M: str,
    cfg: DeviceConfig,
    trials: int,
    seed: int,
    P_psi: str = "P_psi",
    P_phi: str = "P_phi",
    keep_records: bool = False,
) -> SimulationSummary:
    """Outcomes drawn through the model: lambda ~ p(.|M, Psi_k), then m ~ p(.|M, lambda)."""
    joint = joint_preparations(model, P_psi, P_phi)
    K = len(joint)
    if K != 2**cfg.n:
        raise ValueError(f"model has {K} joint preparations, config has n = {cfg.n}")
    epistemic = np.array([model.full_vector(M, pid) for pid in joint])
    R = np.asarray(model.response[M])
    if R.shape[1] != K:
        raise ValueError(f"measurement {M!r} has {R.shape[1]} outcomes, expected {K}")
    predicted = epistemic @ R

    def draw(k, streams, common):
        lam = _sample_rows(epistemic, k, streams["ontic"].random(k.size))
        return _sample_rows(R, lam, streams["outcome"].random(k.size))

    counts, records = _run(draw, K, cfg, trials, seed, keep_records)
    chi2, dof, p = _chi_square(counts, predicted)
    meta = _metadata(seed, trials, cfg, "model", measurement=M)
    return SimulationSummary(counts, predicted, trials, seed, cfg, "model", chi2, dof, p, meta, records)


def estimate_discrimination_error(psi: PureState, phi: PureState, trials: int, seed: int) -> float:
    """Empirical error of the optimal two-outcome test between psi and phi, equal priors.

    The test projects onto the positive part of |psi><psi| - |phi><phi| and
    guesses psi on that outcome.
    """
    a, b = psi.amplitudes, phi.amplitudes
    gamma = np.outer(a, a.conj()) - np.outer(b, b.conj())
    w, v = np.linalg.eigh(gamma)
    pos = v[:, w > 1e-15]
    proj = pos @ pos.conj().T
    p_correct_psi = float(np.real(np.vdot(a, proj @ a)))
    p_wrong_phi = float(np.real(np.vdot(b, proj @ b)))
    error_given = np.clip(np.array([1.0 - p_correct_psi, p_wrong_phi]), 0.0, 1.0)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    which = rng.integers(0, 2, size=trials)
    errors = rng.random(trials) < error_given[which]
    return float(errors.mean())


def device_model(
    psi: PureState,
    phi: PureState,
    meas: Measurement,
    cfg: DeviceConfig,
    hidden: int = 2,
    measurement_id: str = "M",
) -> OnticModel:
    """Reductionist model of n devices with a correlated internal variable.

    Device j's ontic state is (label, h): label 0/1 records whether it made
    psi or phi (so the model is psi-ontic at the device level) and
    h in {0..hidden-1} is an internal variable irrelevant to responses.
    Internal variables are jointly distributed as
    strength * (all equal, uniform) + (1 - strength) * (independent uniform)
    under shared_randomness or common_supply, and independently otherwise.
    P_psi / P_phi are the all-psi / all-phi ensembles on the full space;
    their single-device marginals feed the local checks.
    """
    n = cfg.n
    K = 2**n
    if meas.num_outcomes != K or psi.dim**n != meas.dim:
        raise ValueError("measurement must have 2**n outcomes on n copies")
    f = 2 * hidden
    shape = (f,) * n
    space = OnticSpace(f**n, shape)
    alpha = 0.0 if cfg.correlation == INDEPENDENT else cfg.strength
    h_joint = np.full((hidden,) * n, (1.0 - alpha) / hidden**n)
    for h in range(hidden):
        h_joint[(h,) * n] += alpha / hidden
    products = enumerate_product_states(psi, phi, n)
    born = np.array([born_vector(s, meas) for _, s in products])

    def ensemble(bits) -> np.ndarray:
        full = np.zeros(shape)
        for hs in np.ndindex(*h_joint.shape):
            full[tuple(b * hidden + h for b, h in zip(bits, hs))] = h_joint[hs]
        return full.reshape(-1)

    response = np.zeros((space.size, K))
    for lam in range(space.size):
        comps = space.unravel(lam)
        labels = tuple(c // hidden for c in comps)
        response[lam] = born[_bits_to_k(np.array([labels]))[0]]
    preps = [PreparationLabel("P_psi", psi), PreparationLabel("P_phi", phi)]
    epistemic = {(measurement_id, "P_psi"): ensemble((0,) * n), (measurement_id, "P_phi"): ensemble((1,) * n)}
    for bits, state in products:
        pid = joint_id(bits)
        preps.append(PreparationLabel(pid, state, tuple("P_phi" if b else "P_psi" for b in bits)))
        epistemic[(measurement_id, pid)] = ensemble(bits)
    return OnticModel(
        space=space,
        preparations=tuple(preps),
        measurements=(measurement_id,),
        epistemic=epistemic,
        response={measurement_id: response},
        measurement_independent=True,
        outcome_labels={measurement_id: meas.labels},
    )


def binomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


__all__ = [
    "DeviceConfig",
    "SimulationSummary",
    "TrialRecord",
    "VerificationError",
    "binomial_sigma",
    "device_model",
    "estimate_discrimination_error",
    "simulate_model",
    "simulate_quantum",
]
