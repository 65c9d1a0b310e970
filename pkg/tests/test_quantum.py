from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SQRT_HALF, kron_oracle
from pbrkit.quantum import (
    DimensionError,
    Measurement,
    MeasurementValidationError,
    PureState,
    StateValidationError,
    born_probability,
    enumerate_product_states,
    helstrom_error_bound,
    helstrom_from_overlap2,
    index_to_bits,
    bits_to_index,
    outcome_distribution,
    qubit,
    random_state,
    tensor_product,
)

ZERO, ONE = PureState.basis(0, 2), PureState.basis(1, 2)
PLUS = PureState([SQRT_HALF, SQRT_HALF])


def test_state_invariants():
    with pytest.raises(StateValidationError):
        PureState([1.0, 1.0])
    with pytest.raises(StateValidationError):
        PureState([1.0])
    s = PureState.from_unnormalized([3.0, 4.0j])
    assert s.dim == 2
    assert math.isclose(np.linalg.norm(s.amplitudes), 1.0, abs_tol=1e-12)


def test_phase_invariant_equality():
    assert ZERO.equivalent(PureState([1j, 0.0]))
    assert not ZERO.equivalent(PLUS)


def test_tensor_basis_product():
    assert np.allclose(tensor_product([ZERO, ZERO]).amplitudes, [1, 0, 0, 0], atol=0)


def test_tensor_zero_plus():
    out = tensor_product([ZERO, PLUS]).amplitudes
    assert np.allclose(out, [SQRT_HALF, SQRT_HALF, 0, 0], atol=1e-15)


def test_tensor_random_against_double_loop():
    rng = np.random.default_rng(7)
    a, b = random_state(2, rng), random_state(3, rng)
    out = tensor_product([a, b])
    assert out.dim == 6
    assert np.abs(out.amplitudes - kron_oracle(a.amplitudes, b.amplitudes)).max() < 1e-15


def test_tensor_dimension_cap():
    with pytest.raises(DimensionError):
        tensor_product([ZERO] * 5, dim_cap=16)
    with pytest.raises(ValueError):
        tensor_product([])


def test_enumerate_orthogonal_basis():
    products = enumerate_product_states(ZERO, ONE, 2)
    assert [b for b, _ in products] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    for i, (_, s) in enumerate(products):
        assert s.equivalent(PureState.basis(i, 4))


def test_enumerate_order_first_and_last():
    psi, phi = ZERO, PLUS
    products = enumerate_product_states(psi, phi, 2)
    assert len(products) == 4
    assert products[0][1].equivalent(tensor_product([psi, psi]))
    assert products[1][1].equivalent(tensor_product([psi, phi]))
    assert products[2][1].equivalent(tensor_product([phi, psi]))
    assert products[-1][1].equivalent(tensor_product([phi, phi]))


def test_enumerate_n3_middle_state():
    rng = np.random.default_rng(3)
    psi, phi = random_state(2, rng), random_state(2, rng)
    products = dict(enumerate_product_states(psi, phi, 3))
    expected = kron_oracle(kron_oracle(psi.amplitudes, phi.amplitudes), psi.amplitudes)
    assert len(products) == 8
    assert np.abs(products[(0, 1, 0)].amplitudes - expected).max() < 1e-15


def test_enumerate_rejects_n1():
    with pytest.raises(ValueError):
        enumerate_product_states(ZERO, PLUS, 1)


def test_index_bits_roundtrip():
    for n in (2, 3, 4):
        for k in range(1, 2**n + 1):
            assert bits_to_index(index_to_bits(k, n)) == k
    assert index_to_bits(1, 3) == (0, 0, 0)
    assert index_to_bits(8, 3) == (1, 1, 1)


def test_born_eigenstate_and_symmetry():
    z = Measurement.computational(2, labels=("0", "1"))
    assert born_probability(ZERO, z, "0") == 1.0
    assert math.isclose(born_probability(PLUS, z, "0"), 0.5, abs_tol=1e-15)


def test_born_dimension_mismatch():
    with pytest.raises(DimensionError):
        born_probability(ZERO, Measurement.computational(4), 1)


def test_measurement_validation():
    with pytest.raises(MeasurementValidationError):
        Measurement((np.diag([1.0, 0.0]), np.diag([0.0, 0.5])))
    with pytest.raises(MeasurementValidationError):
        Measurement((np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])))
    # a trine POVM is fine
    vecs = [np.array([math.cos(t), math.sin(t)]) for t in (0, 2 * math.pi / 3, 4 * math.pi / 3)]
    trine = Measurement(tuple(2 / 3 * np.outer(v, v) for v in vecs))
    assert trine.completeness_error() < 1e-12


def test_helstrom_values():
    assert helstrom_error_bound(ZERO, ONE) == 0.0
    assert helstrom_error_bound(PLUS, PLUS) == pytest.approx(0.5, abs=1e-12)
    assert helstrom_error_bound(ZERO, PLUS) == pytest.approx((1 - 1 / math.sqrt(2)) / 2, abs=1e-12)
    assert helstrom_from_overlap2(0.5) == pytest.approx(0.14644660940672624, abs=1e-12)


def test_helstrom_monotone_grid():
    grid = np.linspace(0.0, 1.0, 100)
    values = [helstrom_error_bound(ZERO, qubit(x)) for x in grid]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_json_roundtrip_exact():
    rng = np.random.default_rng(11)
    s = random_state(4, rng)
    back = PureState.from_json(json.loads(json.dumps(s.to_json())))
    assert np.array_equal(back.amplitudes, s.amplitudes)
    u = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
    meas = Measurement.from_basis(list(u.T), labels=("a", "b", "c"))
    back = Measurement.from_json(json.loads(json.dumps(meas.to_json())))
    assert back.labels == meas.labels
    assert all(np.array_equal(x, y) for x, y in zip(back.effects, meas.effects))


# -- properties ----------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(2, 5))
def test_outcome_distribution_sums_to_one(seed, dim):
    rng = np.random.default_rng(seed)
    state = random_state(dim, rng)
    u = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))[0]
    dist = outcome_distribution(state, Measurement.from_basis(list(u.T)))
    assert abs(sum(dist.values()) - 1.0) <= 1e-10
    assert all(0.0 <= p <= 1.0 for p in dist.values())


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_tensor_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_state(d, rng) for d in (2, 3, 2))
    left = tensor_product([tensor_product([a, b]), c])
    right = tensor_product([a, tensor_product([b, c])])
    flat = tensor_product([a, b, c])
    assert np.abs(left.amplitudes - flat.amplitudes).max() <= 1e-12
    assert np.abs(right.amplitudes - flat.amplitudes).max() <= 1e-12


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 4))
def test_product_overlap_modulus(seed, n):
    rng = np.random.default_rng(seed)
    psi, phi = random_state(2, rng), random_state(2, rng)
    c = abs(psi.inner(phi))
    first = enumerate_product_states(psi, phi, n)[0][1]
    for bits, state in enumerate_product_states(psi, phi, n):
        r = bits.count(0)
        assert abs(abs(first.inner(state)) - c ** (n - r)) <= 1e-10
