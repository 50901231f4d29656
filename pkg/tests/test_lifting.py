import itertools
import math

import numpy as np
import pytest
from math import comb

from conftest import random_system
from switchcert import SwitchedSystem, InvalidInput
from switchcert.lifting import (build_gamma_tables, composition_rank, count_vector, enumerate_compositions,
                                gamma_of, lifted_product, variable_counts)
from switchcert.matlib import mat_norm


def brute_force(system, h, norm, eps):
    best = {}
    for q in itertools.product(range(1, system.M + 1), repeat=h):
        prod = np.eye(system.n)
        for s in q:
            prod = system[s] @ prod
        g = math.log(max(mat_norm(prod, norm), eps))
        z = count_vector(q, system.M)
        if z not in best or g > best[z][0]:
            best[z] = (g, q)
    return best


def test_lifted_product_order(example3):
    np.testing.assert_array_equal(lifted_product(example3, (1, 2)), example3[2] @ example3[1])
    assert gamma_of(example3, (1, 1), epsilon=1e-24) == pytest.approx(math.log(1e-24))
    assert gamma_of(example3, (2, 1)) == pytest.approx(math.log(math.sqrt(5)))


@pytest.mark.parametrize("M,h", [(1, 5), (2, 1), (2, 7), (3, 5), (3, 3)])
@pytest.mark.parametrize("norm", ["spectral", "one", "frobenius"])
def test_matches_brute_force(M, h, norm):
    rng = np.random.default_rng(M * 100 + h)
    system = random_system(rng, M)
    tables = build_gamma_tables(system, h, norm, 1e-24, materialize_sequences=True, workers=2)
    ref = brute_force(system, h, norm, 1e-24)
    assert len(tables.compositions) == len(ref)
    for z, (g, q) in ref.items():
        k = tables.index_of(z)
        assert tables.gamma_prime[k] == pytest.approx(g, abs=1e-10)
        w = tables.witness(z)
        assert count_vector(w, M) == z
        assert tables.gamma_q(w) == pytest.approx(g, abs=1e-10)


def test_witness_is_first_maximizer():
    # every sequence of a composition has the same norm under identity modes
    system = SwitchedSystem((np.eye(2), np.eye(2)))
    tables = build_gamma_tables(system, 4, "spectral")
    assert tables.witness((2, 2)) == (1, 1, 2, 2)


def test_gamma_prime_is_max_over_sequences():
    rng = np.random.default_rng(7)
    system = random_system(rng, 3)
    t = build_gamma_tables(system, 5, materialize_sequences=True)
    counts = t.sequence_counts()
    for k, z in enumerate(t.compositions):
        mask = np.all(counts == np.array(z), axis=1)
        assert t.gamma_prime[k] == t.per_sequence[mask].max()


def test_worker_determinism():
    rng = np.random.default_rng(11)
    system = random_system(rng, 3, n=3)
    ref = build_gamma_tables(system, 8, workers=1)
    for w, depth in [(2, 4), (4, 2), (3, 0), (1, 8)]:
        t = build_gamma_tables(system, 8, workers=w, split_depth=depth)
        np.testing.assert_array_equal(t.gamma_prime, ref.gamma_prime)
        np.testing.assert_array_equal(t.witnesses, ref.witnesses)


def test_permutation_symmetry():
    rng = np.random.default_rng(5)
    system = random_system(rng, 3)
    perm = (2, 0, 1)
    permuted = SwitchedSystem(tuple(system.matrices[p] for p in perm))
    a = build_gamma_tables(system, 6)
    b = build_gamma_tables(permuted, 6)
    for k, z in enumerate(b.compositions):
        zo = [0] * 3
        for i, p in enumerate(perm):
            zo[p] = z[i]
        assert b.gamma_prime[k] == pytest.approx(a.gamma_prime[a.index_of(zo)], abs=1e-12)


def test_composition_order_and_rank():
    comps = enumerate_compositions(6, 3)
    assert comps == sorted(comps)
    assert len(comps) == comb(8, 2)
    for k, z in enumerate(comps):
        assert composition_rank(z, 6) == k


def test_variable_counts_table():
    assert variable_counts(15, 3) == (14_348_907, 136)
    for h in range(1, 16):
        for M in range(1, 6):
            f, fp = variable_counts(h, M)
            assert f == M ** h
            assert fp == comb(h + M - 1, M - 1)
            if h <= 6:
                assert fp == len(enumerate_compositions(h, M))


def test_guards(example3):
    with pytest.raises(InvalidInput):
        build_gamma_tables(example3, 0)
    with pytest.raises(InvalidInput):
        build_gamma_tables(example3, 3, epsilon=0.0)
    with pytest.raises(InvalidInput):
        build_gamma_tables(example3, 25, materialize_sequences=True)
    with pytest.raises(InvalidInput):
        build_gamma_tables(example3, 40)
    with pytest.raises(InvalidInput):
        lifted_product(example3, (1, 3))
    t = build_gamma_tables(example3, 3)
    with pytest.raises(InvalidInput):
        t.index_of((1, 1))
    with pytest.raises(InvalidInput):
        t.gamma_q((1, 1, 1))


def test_zero_product_uses_epsilon(example3):
    t = build_gamma_tables(example3, 2, epsilon=1e-16)
    assert t.gamma_prime[t.index_of((2, 0))] == pytest.approx(math.log(1e-16))
