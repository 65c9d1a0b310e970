from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbrkit import sim
from pbrkit.antidistinguish import build_half_overlap_measurement
from pbrkit.nogo import theorem1_check
from pbrkit.ontic import build_overlapping_toy_model
from pbrkit.quantum import Measurement, PureState, helstrom_error_bound, qubit
from pbrkit.sim import (
    DeviceConfig,
    VerificationError,
    binomial_sigma,
    device_model,
    estimate_discrimination_error,
    simulate_model,
    simulate_quantum,
)
from pbrkit.zoo import PHI, PSI, pbr_psi_ontic_model

CFG = DeviceConfig(n=2)


def test_config_validation():
    with pytest.raises(ValueError):
        DeviceConfig(n=1)
    with pytest.raises(ValueError):
        DeviceConfig(n=2, strength=0.3)
    with pytest.raises(ValueError):
        DeviceConfig(n=2, correlation="shared_randomness", strength=1.5)
    with pytest.raises(ValueError):
        DeviceConfig(n=2, choice_bias=(0.5,))
    cfg = DeviceConfig.parse(3, "shared:0.5")
    assert cfg.correlation == "shared_randomness" and cfg.strength == 0.5 and cfg.choice_bias == (0.5,) * 3


def test_quantum_forbidden_rare(half_pair, half_result):
    s = simulate_quantum(*half_pair, half_result.measurement, CFG, 100_000, seed=1)
    assert s.counts.sum() == 100_000
    assert s.forbidden_frequency <= 1e-4


def test_degenerate_bias(half_pair, half_result):
    s = simulate_quantum(*half_pair, half_result.measurement, DeviceConfig(n=2, choice_bias=1.0), 5_000, seed=2)
    assert s.prepared[0] == 5_000 and s.prepared[1:].sum() == 0
    assert s.counts[0, 0] == 0


def test_chi_square_self_test(half_pair, half_result):
    s = simulate_quantum(*half_pair, half_result.measurement, CFG, 100_000, seed=42)
    assert s.dof > 0
    assert s.p_value >= 0.001


def test_verification_failure(half_pair):
    with pytest.raises(VerificationError):
        simulate_quantum(*half_pair, Measurement.computational(4), CFG, 10, seed=0)


def test_psi_ontic_model_never_forbidden(half_pair, half_result):
    m = pbr_psi_ontic_model(*half_pair, half_result.measurement)
    s = simulate_model(m, "M", CFG, 50_000, seed=3)
    assert s.forbidden_count == 0


def test_toy_model_forbidden_rate(half_pair, half_result):
    mix, trials = 0.5, 100_000
    m = build_overlapping_toy_model(*half_pair, half_result.measurement, mix)
    s = simulate_model(m, "M", CFG, trials, seed=4)
    expected = mix**2 / 4
    assert abs(s.forbidden_frequency - expected) <= 3 * binomial_sigma(expected, trials)


def test_correlated_devices_same_verdict(half_pair, half_result):
    meas = half_result.measurement
    ind = device_model(*half_pair, meas, DeviceConfig(n=2))
    cor = device_model(*half_pair, meas, DeviceConfig(n=2, correlation="shared_randomness", strength=1.0))
    a = theorem1_check(ind, "M", PSI, PHI)
    b = theorem1_check(cor, "M", PSI, PHI)
    assert a.status == b.status == "overlap_zero"
    assert simulate_model(cor, "M", DeviceConfig(n=2, correlation="shared_randomness", strength=1.0), 20_000, 5).forbidden_count == 0


def test_reproducible_records(half_pair, half_result):
    cfg = DeviceConfig(n=2, correlation="common_supply", strength=0.7)
    a = simulate_quantum(*half_pair, half_result.measurement, cfg, 3_000, seed=9, keep_records=True)
    b = simulate_quantum(*half_pair, half_result.measurement, cfg, 3_000, seed=9, keep_records=True)
    assert a.records == b.records and len(a.records) == 3_000
    assert all(r.forbidden == (r.outcome == 1 + int("".join(map(str, r.chosen_bits)), 2)) for r in a.records)
    c = simulate_quantum(*half_pair, half_result.measurement, cfg, 3_000, seed=10)
    assert not np.array_equal(a.counts, c.counts)


def test_shared_randomness_correlates_choices(half_pair, half_result):
    cfg = DeviceConfig(n=2, correlation="shared_randomness", strength=1.0)
    s = simulate_quantum(*half_pair, half_result.measurement, cfg, 10_000, seed=0)
    # a common uniform draw gives every device the same choice
    assert s.prepared[1] == s.prepared[2] == 0


def test_law_of_large_numbers(half_pair, half_result):
    trials = 1_000_000
    s = simulate_quantum(*half_pair, half_result.measurement, CFG, trials, seed=123)
    assert s.total_variation() <= 5 / math.sqrt(trials)


def test_outputs(half_pair, half_result):
    s = simulate_quantum(*half_pair, half_result.measurement, CFG, 1_000, seed=0)
    data = s.to_json()
    assert data["metadata"]["rng"] and data["metadata"]["seed"] == 0 and data["metadata"]["trials"] == 1_000
    assert len(data["cells"]) == 16
    lines = [ln for ln in s.to_csv().splitlines() if not ln.startswith("#")]
    assert lines[0] == "k,m,count,predicted,residual" and len(lines) == 17


def test_discrimination_error():
    zero, one = PureState.basis(0, 2), PureState.basis(1, 2)
    assert estimate_discrimination_error(zero, one, 10_000, 0) == 0.0
    assert abs(estimate_discrimination_error(zero, zero, 100_000, 1) - 0.5) <= 3 * binomial_sigma(0.5, 100_000)
    bound = helstrom_error_bound(zero, qubit(0.5))
    est = estimate_discrimination_error(zero, qubit(0.5), 100_000, 2)
    assert abs(est - bound) <= 3 * binomial_sigma(bound, 100_000)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5000))
def test_forbidden_within_residual(seed, trials):
    psi, phi = PureState.basis(0, 2), qubit(0.5)
    result = build_half_overlap_measurement(psi, phi)
    s = simulate_quantum(psi, phi, result.measurement, CFG, trials, seed)
    assert s.counts.sum() == trials
    assert sum(size for size, _ in sim._chunks(trials, seed)) == trials
    bound = result.residual + 3 * binomial_sigma(result.residual, trials)
    assert s.forbidden_frequency <= bound
