"""Fixture models and seeded random model generators.

The named fixtures cover the qualitatively different cases: psi-ontic,
overlapping (psi-epistemic), reductionist models with independent or
correlated devices, and a measurement-dependent model. The generators feed
the property tests: random models that satisfy the overlap-argument
hypotheses exactly, models with a planted violation, and random
product-structured models for the compatibility hierarchy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .antidistinguish import AntidistinguishingResult, build_half_overlap_measurement
from .ontic import (
    OnticModel,
    OnticSpace,
    PreparationLabel,
    build_overlapping_toy_model,
    build_psi_ontic_model,
    joint_id,
    save_model,
)
from .quantum import Measurement, PureState, born_vector, enumerate_product_states, plus_state, random_state, tensor_product
from .sim import DeviceConfig, device_model

PSI, PHI = "P_psi", "P_phi"


@dataclass(frozen=True, eq=False)
class ZooEntry:
    name: str
    model: OnticModel
    measurement: str
    description: str
    local: bool = False  # verify with the diagonal (reductionist) variant


def _n_of(meas: Measurement) -> int:
    n = int(round(math.log2(meas.num_outcomes)))
    if 2**n != meas.num_outcomes or n < 2:
        raise ValueError("measurement must have 2**n outcomes with n > 1")
    return n


def _factor_links(bits) -> tuple[str, ...]:
    return tuple(PHI if b else PSI for b in bits)


def pbr_psi_ontic_model(psi: PureState, phi: PureState, meas: Measurement, measurement_id: str = "M") -> OnticModel:
    """psi-ontic model over the 2**n products; P_psi / P_phi sit on the Psi_1 / Psi_K atoms."""
    n = _n_of(meas)
    products = enumerate_product_states(psi, phi, n)
    ids = [joint_id(b) for b, _ in products]
    return build_psi_ontic_model(
        [s for _, s in products],
        meas,
        ids=ids,
        measurement_id=measurement_id,
        factors={joint_id(b): _factor_links(b) for b, _ in products},
        extra_preparations=[(PreparationLabel(PHI, phi), len(products) - 1), (PreparationLabel(PSI, psi), 0)],
    )


def comonotone_coupling(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Perfectly correlated joint with the given marginals.

    A single uniform u picks every component through its own inverse CDF, so
    the support is a monotone path through the product space.
    """
    cdfs = [np.cumsum(f) for f in factors]
    cuts = np.unique(np.concatenate([[0.0], *cdfs]).clip(0.0, 1.0))
    joint = np.zeros(tuple(len(f) for f in factors))
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= 0:
            continue
        mid = 0.5 * (lo + hi)
        idx = tuple(min(int(np.searchsorted(c, mid, side="right")), len(c) - 1) for c in cdfs)
        joint[idx] += hi - lo
    return joint.reshape(-1)


def reductionist_model(
    psi: PureState,
    phi: PureState,
    meas: Measurement,
    mix: float = 0.0,
    correlation: float = 0.0,
    measurement_id: str = "M",
) -> OnticModel:
    """Product-structured model; each device has ontic states {l_psi, l_shared, l_phi}.

    A single device preparing psi gives (1-mix, mix, 0), preparing phi gives
    (0, mix, 1-mix); these are stored as factor-length vectors. The joint
    preparation of Psi_k is (1-correlation) * product + correlation * comonotone
    coupling of the factor distributions, so the factor marginals are kept.
    Tuples without l_shared answer with the Born row of their product state;
    tuples containing l_shared answer uniformly.

    mix = 0 is a factorisable psi-ontic product model. With mix > 0,
    correlation = 1 breaks local compatibility and a small positive
    correlation keeps local compatibility while breaking factorisability.
    """
    if not 0.0 <= mix < 1.0 or not 0.0 <= correlation <= 1.0:
        raise ValueError("need 0 <= mix < 1 and 0 <= correlation <= 1")
    n = _n_of(meas)
    K = 2**n
    f_psi = np.array([1.0 - mix, mix, 0.0])
    f_phi = np.array([0.0, mix, 1.0 - mix])
    space = OnticSpace(3**n, (3,) * n)
    products = enumerate_product_states(psi, phi, n)
    born = {bits: born_vector(s, meas) for bits, s in products}
    response = np.zeros((space.size, K))
    for lam in range(space.size):
        comps = space.unravel(lam)
        if 1 in comps:
            response[lam] = 1.0 / K
        else:
            response[lam] = born[tuple(c // 2 for c in comps)]
    preps = [PreparationLabel(PSI, psi), PreparationLabel(PHI, phi)]
    epistemic = {(measurement_id, PSI): f_psi, (measurement_id, PHI): f_phi}
    for bits, state in products:
        factors = [f_phi if b else f_psi for b in bits]
        product = np.ones(1)
        for f in factors:
            product = np.kron(product, f)
        joint = (1.0 - correlation) * product + correlation * comonotone_coupling(factors)
        pid = joint_id(bits)
        preps.append(PreparationLabel(pid, state, _factor_links(bits)))
        epistemic[(measurement_id, pid)] = joint / joint.sum()
    return OnticModel(
        space=space,
        preparations=tuple(preps),
        measurements=(measurement_id,),
        epistemic=epistemic,
        response={measurement_id: response},
        measurement_independent=True,
        outcome_labels={measurement_id: meas.labels},
    )


def shared_born_floor(born: np.ndarray) -> np.ndarray:
    """Largest common sub-distribution u with u_m <= born[k, m] for every k (an LP)."""
    K, m = born.shape
    A_ub = np.vstack([np.eye(m)] * K)
    res = linprog(-np.ones(m), A_ub=A_ub, b_ub=born.reshape(-1), bounds=[(0.0, None)] * m, method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"floor LP failed: {res.message}")
    return np.clip(res.x, 0.0, None)


def measurement_dependent_model(psi: PureState, phi: PureState, meas: Measurement, pbr_id: str = "PBR", other_id: str = "Z") -> OnticModel:
    """Two measurements; epistemic vectors differ between them but all statistics are Born.

    Under the antidistinguishing measurement the model is psi-ontic (one atom
    per product state). Under the computational-basis measurement every
    Psi_k puts weight w on an extra shared atom whose response u / w is the
    LP-optimal common part of the Born rows, and the remainder on its own atom.
    """
    n = _n_of(meas)
    K = 2**n
    products = enumerate_product_states(psi, phi, n)
    z = Measurement.computational(meas.dim)
    born_pbr = np.array([born_vector(s, meas) for _, s in products])
    born_z = np.array([born_vector(s, z) for _, s in products])
    u = shared_born_floor(born_z)
    w = float(u.sum())
    if not 0.0 < w < 1.0:
        raise ValueError(f"shared weight {w} leaves nothing to distinguish")
    size = K + 1
    shared = K
    r_pbr = np.vstack([born_pbr, np.full(K, 1.0 / K)])
    own = np.clip(born_z - u, 0.0, None)
    own /= own.sum(axis=1, keepdims=True)
    r_z = np.vstack([own, u / w])
    preps = [PreparationLabel(PSI, psi), PreparationLabel(PHI, phi)]
    epistemic = {}
    for k, (bits, state) in enumerate(products):
        pid = joint_id(bits)
        preps.append(PreparationLabel(pid, state, _factor_links(bits)))
        v = np.zeros(size)
        v[k] = 1.0
        epistemic[(pbr_id, pid)] = v
        v = np.zeros(size)
        v[k], v[shared] = 1.0 - w, w
        epistemic[(other_id, pid)] = v
    for pid, k in ((PSI, 0), (PHI, K - 1)):
        epistemic[(pbr_id, pid)] = epistemic[(pbr_id, joint_id(products[k][0]))]
        epistemic[(other_id, pid)] = epistemic[(other_id, joint_id(products[k][0]))]
    return OnticModel(
        space=OnticSpace(size),
        preparations=tuple(preps),
        measurements=(pbr_id, other_id),
        epistemic=epistemic,
        response={pbr_id: r_pbr, other_id: r_z},
        measurement_independent=False,
        outcome_labels={pbr_id: meas.labels, other_id: z.labels},
    )


def model_zoo(
    psi: PureState | None = None,
    phi: PureState | None = None,
    result: AntidistinguishingResult | None = None,
) -> dict[str, ZooEntry]:
    """Named fixtures for the half-overlap pair (or the given pair and measurement)."""
    psi = psi if psi is not None else PureState.basis(0, 2)
    phi = phi if phi is not None else plus_state()
    result = result if result is not None else build_half_overlap_measurement(psi, phi)
    meas = result.measurement
    n = result.n
    entries = [
        ZooEntry("psi_ontic", pbr_psi_ontic_model(psi, phi, meas), "M", "one atom per product state; disjoint supports"),
        ZooEntry(
            "overlapping_toy",
            build_overlapping_toy_model(psi, phi, meas, 0.5),
            "M",
            "P_psi and P_phi share an atom with a uniform response row",
        ),
        ZooEntry("factorisable_product", reductionist_model(psi, phi, meas), "M", "product of psi-ontic devices", local=True),
        ZooEntry(
            "diagonal_correlated",
            reductionist_model(psi, phi, meas, mix=0.5, correlation=1.0),
            "M",
            "perfectly correlated devices; breaks local compatibility and factorisability",
            local=True,
        ),
        ZooEntry(
            "weakly_correlated",
            reductionist_model(psi, phi, meas, mix=0.5, correlation=0.1),
            "M",
            "10% correlated devices with a shared atom; locally compatible, not factorisable",
            local=True,
        ),
        ZooEntry(
            "shared_randomness_devices",
            device_model(psi, phi, meas, DeviceConfig(n=n, correlation="shared_randomness", strength=1.0)),
            "M",
            "psi-ontic devices with perfectly correlated internal variables; compatible, not locally compatible",
        ),
        ZooEntry(
            "measurement_dependent",
            measurement_dependent_model(psi, phi, meas),
            "PBR",
            "Born statistics under two measurements with measurement-dependent epistemic vectors",
        ),
    ]
    return {e.name: e for e in entries}


def write_zoo(directory: str | Path, zoo: dict[str, ZooEntry] | None = None) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    zoo = zoo if zoo is not None else model_zoo()
    paths = []
    for name, entry in zoo.items():
        path = directory / f"{name}.json"
        save_model(entry.model, path)
        paths.append(path)
    return paths


# -- random generators ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RandomCase:
    model: OnticModel
    planted: str | None  # None for valid models, else the kind of planted defect
    planted_lambda: int | None = None


def _random_qubit_pair(rng: np.random.Generator) -> tuple[PureState, PureState]:
    while True:
        psi, phi = random_state(2, rng), random_state(2, rng)
        if abs(psi.inner(phi)) < 1 - 1e-6:
            return psi, phi


def _random_subset(rng: np.random.Generator, pool: np.ndarray, min_size: int = 1) -> np.ndarray:
    if pool.size < min_size:
        return pool[:0]
    size = int(rng.integers(min_size, pool.size + 1))
    return np.sort(rng.choice(pool, size=size, replace=False))


def _dirichlet_on(rng: np.random.Generator, size: int, idx: np.ndarray) -> np.ndarray:
    v = np.zeros(size)
    v[idx] = rng.dirichlet(np.ones(idx.size))
    return v


def _assemble(psi, phi, n, L, R, vectors: dict[str, np.ndarray]) -> OnticModel:
    K = 2**n
    products = enumerate_product_states(psi, phi, n)
    preps = [PreparationLabel(PSI, psi), PreparationLabel(PHI, phi)]
    preps += [PreparationLabel(joint_id(b), s, _factor_links(b)) for b, s in products]
    return OnticModel(
        space=OnticSpace(L),
        preparations=tuple(preps),
        measurements=("M",),
        epistemic={("M", pid): v for pid, v in vectors.items()},
        response={"M": R},
        measurement_independent=True,
        outcome_labels={"M": tuple(range(1, K + 1))},
    )


def random_valid_model(rng: np.random.Generator, max_tries: int = 1000) -> OnticModel:
    """Random model meeting completeness, compatibility and the Born zeros exactly.

    Response zero patterns are drawn first; Z_k = {lambda : p(k|lambda) = 0}.
    P_psi and P_phi get random supports inside Z_1 and Z_K, and each joint
    preparation gets a random support inside Z_k that contains every lambda
    compatible with all of its factors. Draws that admit no such support are
    rejected and redrawn.
    """
    for _ in range(max_tries):
        n = int(rng.integers(2, 4))
        K = 2**n
        L = int(rng.integers(3, 13))
        allowed = rng.random((L, K)) < rng.uniform(0.2, 0.8)
        for lam in range(L):
            if not allowed[lam].any():
                allowed[lam, rng.integers(K)] = True
            if allowed[lam].all():
                allowed[lam, rng.integers(K)] = False
        zero_sets = [np.flatnonzero(~allowed[:, k]) for k in range(K)]
        if any(z.size == 0 for z in zero_sets):
            continue
        s_psi = _random_subset(rng, zero_sets[0])
        s_phi = _random_subset(rng, zero_sets[-1])
        if s_psi.size == 0 or s_phi.size == 0:
            continue
        psi_mask = np.zeros(L, bool)
        psi_mask[s_psi] = True
        phi_mask = np.zeros(L, bool)
        phi_mask[s_phi] = True
        supports = []
        ok = True
        for k, bits in enumerate(itertools.product((0, 1), repeat=n)):
            need = np.ones(L, bool)
            for b in bits:
                need &= phi_mask if b else psi_mask
            zmask = np.zeros(L, bool)
            zmask[zero_sets[k]] = True
            if (need & ~zmask).any():
                ok = False
                break
            extra = _random_subset(rng, np.flatnonzero(zmask & ~need), min_size=0 if need.any() else 1)
            supp = np.union1d(np.flatnonzero(need), extra).astype(int)
            if supp.size == 0:
                ok = False
                break
            supports.append(supp)
        if not ok:
            continue
        R = np.where(allowed, rng.random((L, K)) + 0.05, 0.0)
        R /= R.sum(axis=1, keepdims=True)
        psi, phi = _random_qubit_pair(rng)
        vectors = {PSI: _dirichlet_on(rng, L, s_psi), PHI: _dirichlet_on(rng, L, s_phi)}
        for bits, supp in zip(itertools.product((0, 1), repeat=n), supports):
            vectors[joint_id(bits)] = _dirichlet_on(rng, L, supp)
        return _assemble(psi, phi, n, L, R, vectors)
    raise RuntimeError("could not draw a valid model")


def _with_overlap_atom(model: OnticModel, rng: np.random.Generator, skip_k: int | None) -> tuple[OnticModel, int]:
    """Append an atom shared by P_psi and P_phi and by every joint preparation except skip_k."""
    L = model.size + 1
    lam = L - 1
    K = model.response["M"].shape[1]
    n = int(round(math.log2(K)))
    R = np.vstack([model.response["M"], rng.dirichlet(np.ones(K))])
    vectors = {}
    for (_, pid), v in model.epistemic.items():
        w = np.append(v, 0.0)
        vectors[pid] = w
    joint = [joint_id(b) for b in itertools.product((0, 1), repeat=n)]
    targets = [PSI, PHI] + [pid for k, pid in enumerate(joint, start=1) if k != skip_k]
    for pid in targets:
        eps = rng.uniform(0.05, 0.5)
        vectors[pid] = np.append(model.epistemic[("M", pid)] * (1.0 - eps), eps)
    psi = model.preparation(PSI).prepared_state
    phi = model.preparation(PHI).prepared_state
    return _assemble(psi, phi, n, L, R, vectors), lam


def random_planted_model(rng: np.random.Generator, kind: str) -> RandomCase:
    """A valid model plus one defect.

    'overlap': an atom in the support of P_psi, P_phi and every Psi_k; the
    overlap argument must produce a contradiction witness there.
    'compatibility': the same atom left out of one mixed Psi_k, breaking
    compatibility at that atom.
    """
    base = random_valid_model(rng)
    K = base.response["M"].shape[1]
    if kind == "overlap":
        model, lam = _with_overlap_atom(base, rng, None)
    elif kind == "compatibility":
        model, lam = _with_overlap_atom(base, rng, int(rng.integers(1, K + 1)))
    else:
        raise ValueError(f"unknown planted kind {kind!r}")
    return RandomCase(model, kind, lam)


def random_product_model(rng: np.random.Generator) -> OnticModel:
    """Random product-structured model with factor preparations A0..A{n-1} and joint J."""
    n = int(rng.integers(2, 4))
    dims = tuple(int(d) for d in rng.integers(2, 4, size=n))
    space = OnticSpace(math.prod(dims), dims)
    factors = []
    for d in dims:
        idx = _random_subset(rng, np.arange(d))
        factors.append(_dirichlet_on(rng, d, idx))
    product = np.ones(1)
    for f in factors:
        product = np.kron(product, f)
    style = rng.integers(5)
    if style == 0:
        joint = product
    elif style == 1:
        joint = (1 - rng.uniform(0.01, 0.5)) * product + rng.uniform(0.01, 0.5) * comonotone_coupling(factors)
    elif style == 2:
        joint = comonotone_coupling(factors)
    elif style == 3:
        joint = product * (rng.random(space.size) < 0.7)
        if joint.sum() == 0:
            joint = product
    else:
        joint = rng.dirichlet(np.ones(space.size)) * (rng.random(space.size) < 0.6)
        if joint.sum() == 0:
            joint = product
    joint = joint / joint.sum()
    states = [random_state(2, rng) for _ in range(n)]
    ids = [f"A{j}" for j in range(n)]
    preps = [PreparationLabel(i, s) for i, s in zip(ids, states)]
    preps.append(PreparationLabel("J", tensor_product(states), tuple(ids)))
    epistemic = {("M", i): f for i, f in zip(ids, factors)}
    epistemic[("M", "J")] = joint
    R = rng.dirichlet(np.ones(2), size=space.size)
    return OnticModel(space, tuple(preps), ("M",), epistemic, {"M": R}, measurement_independent=True)
