import itertools

import numpy as np
import pytest

from switchcert import ActivationBounds, SwitchedSystem, InvalidInput
from switchcert.signals import (HiddenMarkovSpec, PeriodicSignal, chain_period, check_assumption1,
                                empirical_frequencies, gilbert_elliott, is_irreducible, limit_oracle,
                                periodic_chain, random_hidden_markov, sample_signal, sample_states,
                                simulate_lognorm)


def cycle4_chain():
    return periodic_chain([1, 2, 2, 2])


def test_cycle4_oracle_exact():
    spec = cycle4_chain()
    assert chain_period(spec) == 4
    t1 = limit_oracle(spec, 1)
    assert t1[(1,)] == pytest.approx(0.25) and t1[(2,)] == pytest.approx(0.75)
    t2 = limit_oracle(spec, 2)
    assert t2.entries == pytest.approx({(1, 2): 0.5, (2, 2): 0.5})
    t3 = limit_oracle(spec, 3)
    assert len(t3.entries) == 4
    assert all(v == pytest.approx(0.25) for v in t3.entries.values())
    assert t3[(1, 1, 1)] == 0.0


def test_oracle_sums_to_one_and_aggregates():
    rng = np.random.default_rng(0)
    for _ in range(20):
        spec = random_hidden_markov(int(rng.integers(2, 7)), 3, rng)
        base = limit_oracle(spec, 1).per_mode(3)
        for h in (2, 3):
            t = limit_oracle(spec, h)
            assert sum(t.entries.values()) == pytest.approx(1.0, abs=1e-12)
            np.testing.assert_allclose(t.per_mode(3), base, atol=1e-12)


def test_oracle_vs_monte_carlo_ge():
    spec = gilbert_elliott(0.5, 0.5, 0.05, 0.9)
    sig = sample_signal(spec, 200_000, seed=3)
    for h in (1, 2):
        stats = empirical_frequencies(sig, h, 2)
        ref = limit_oracle(spec, h)
        for q in itertools.product((1, 2), repeat=h):
            assert stats.per_sequence.get(q, 0.0) == pytest.approx(ref[q], abs=1e-2)


def test_gilbert_elliott_restriction():
    spec = gilbert_elliott(0.1, 0.3, 0.0, 0.5)
    assert spec.n_states == 3
    assert is_irreducible(spec)
    full = gilbert_elliott(0.1, 0.3, 0.02, 0.5)
    assert full.n_states == 4
    # loss frequency: stationary Bad probability times f plus Good times e
    pb = 0.1 / 0.4
    assert limit_oracle(full, 1)[(2,)] == pytest.approx(pb * 0.5 + (1 - pb) * 0.02, abs=1e-12)


def test_periodic_chain_period():
    assert chain_period(periodic_chain([1, 2, 1, 2, 2, 1])) == 6
    aperiodic = HiddenMarkovSpec([[0.5, 0.5], [1.0, 0.0]], 0, [[0], [1]])
    assert chain_period(aperiodic) == 1


def test_reducible_rejected():
    spec = HiddenMarkovSpec([[1.0, 0.0], [0.5, 0.5]], 0, [[0], [1]])
    assert not is_irreducible(spec)
    with pytest.raises(InvalidInput):
        limit_oracle(spec, 1)


@pytest.mark.parametrize("P,part", [
    ([[0.5, 0.6], [1.0, 0.0]], [[0], [1]]),
    ([[1.0, 0.0], [0.0, 1.0]], [[0]]),
    ([[-0.5, 1.5], [1.0, 0.0]], [[0], [1]]),
])
def test_spec_validation(P, part):
    with pytest.raises(InvalidInput):
        HiddenMarkovSpec(P, 0, part)


def test_sampling_reproducible_and_backends_agree():
    spec = gilbert_elliott(0.2, 0.4, 0.05, 0.8)
    a = sample_states(spec, 5000, seed=9, backend="python")
    b = sample_states(spec, 5000, seed=9)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, sample_states(spec, 5000, seed=10))
    P = spec.transition
    assert np.all(P[a[:-1], a[1:]] > 0)


def test_periodic_and_explicit_signals():
    np.testing.assert_array_equal(sample_signal(PeriodicSignal([1, 2, 2]), 7), [1, 2, 2, 1, 2, 2, 1])
    np.testing.assert_array_equal(sample_signal([2, 1, 2], 2), [2, 1])
    with pytest.raises(InvalidInput):
        sample_signal([1, 2], 5)


def test_empirical_and_assumption_check():
    sig = sample_signal(PeriodicSignal([1, 2, 2, 2]), 4000)
    stats = empirical_frequencies(sig, 2)
    np.testing.assert_allclose(stats.per_mode, [0.25, 0.75])
    assert stats.per_sequence == {(1, 2): 0.5, (2, 2): 0.5}
    assert check_assumption1(stats, ActivationBounds((0.2, 0.7), (0.3, 0.8))).ok
    rep = check_assumption1(stats, ActivationBounds((0.5, 0.0), (1.0, 0.5)))
    assert not rep.ok and "mode 1" in rep.violations[0]


def test_simulate_lognorm():
    system = SwitchedSystem(([[2.0, 0.0], [0.0, 0.5]], [[0.0, 1.0], [1.0, 0.0]]))
    sig = np.array([1, 1, 2, 1] * 100)
    out = simulate_lognorm(system, sig, [1.0, 0.0])
    x = np.array([1.0, 0.0])
    for t, s in enumerate(sig[:20]):
        x = system[s] @ x
        assert out[t + 1] == pytest.approx(np.log(np.linalg.norm(x)), abs=1e-12)
    py = simulate_lognorm(system, sig, [1.0, 0.0], backend="python")
    np.testing.assert_allclose(out, py, atol=1e-12)
    assert np.isfinite(out[-1])


def test_simulate_zero_state():
    system = SwitchedSystem(([[0.0, 1.0], [0.0, 0.0]],))
    out = simulate_lognorm(system, [1, 1, 1], [1.0, 1.0])
    assert out[2] == -np.inf and out[3] == -np.inf
