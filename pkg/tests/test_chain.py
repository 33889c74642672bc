import json

import numpy as np
import pytest
from conftest import random_reversible, swap_chain

from curvlab.chain import (ChainError, MappingChain, MoveSet, build_generator, check_reversibility,
                           discrete_gradient, distance_from_generator, graph_distance)
from curvlab.models import curie_weiss, ising


def loop_generator(chain):
    """Dense generator by walking every (state, move) pair."""
    n = chain.n
    L = np.zeros((n, n))
    for x in range(n):
        for g in range(chain.move_set.n_moves):
            y = chain.maps[g, x]
            if y != x:
                L[x, y] += chain.rates[x, g]
                L[x, x] -= chain.rates[x, g]
    return L


def test_swap_generator(swap):
    assert np.array_equal(build_generator(swap), [[-1.0, 1.0], [1.0, -1.0]])


def test_identity_only_generator_is_zero():
    moves = MoveSet(np.array([[0, 1, 2]]), 0, np.array([0]))
    chain = MappingChain(moves, np.ones((3, 1)), np.ones(3))
    assert np.array_equal(build_generator(chain), np.zeros((3, 3)))


def test_curie_weiss_two_sites_at_infinite_temperature():
    L = build_generator(curie_weiss(2, 0.0).chain)
    off = L - np.diag(np.diag(L))
    hamming_one = np.array([[bin(a ^ b).count("1") == 1 for b in range(4)] for a in range(4)])
    assert np.array_equal(off, hamming_one.astype(float))
    assert np.allclose(np.diag(L), -2.0)


def test_generator_matches_loops_on_models():
    for chain in (curie_weiss(3, 0.4).chain, ising(3, 0.2).chain):
        assert np.allclose(build_generator(chain), loop_generator(chain), atol=1e-14)


def test_apply_generator_batched(rng):
    chain = curie_weiss(3, 0.3).chain
    psi = rng.standard_normal((5, chain.n))
    assert np.allclose(chain.apply_generator(psi), psi @ loop_generator(chain).T)


def test_reversibility_examples():
    assert check_reversibility(swap_chain()).ok
    bad = check_reversibility(swap_chain(rates=(1.0, 2.0)))
    assert not bad.ok
    assert bad.max_violation == pytest.approx(0.25)
    for beta in (0.0, 0.3, 1.5):
        rep = check_reversibility(curie_weiss(4, beta).chain, 1e-12)
        assert rep.ok, rep.max_violation


def test_reversibility_with_test_functions(rng):
    # sum m c F(eta, s) = sum m c F(s eta, s^-1) for random F
    chain = ising(3, 0.3).chain
    e = chain.edges
    inv = chain.move_set.inverse
    F = rng.standard_normal((chain.n, chain.move_set.n_moves))
    lhs = np.sum(e.weight * F[e.src, e.move])
    rhs = np.sum(e.weight * F[e.dst, inv[e.move]])
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_distances():
    assert graph_distance(swap_chain())[0, 1] == 1
    d = graph_distance(curie_weiss(3, 0.1).chain)
    hamming = np.array([[bin(a ^ b).count("1") for b in range(8)] for a in range(8)])
    assert np.array_equal(d, hamming)
    Q = np.array([[-1, 1, 0], [1, -2, 1], [0, 1, -1]], float)
    assert graph_distance(MappingChain.from_rate_matrix(Q))[0, 2] == 2
    assert distance_from_generator(Q)[0, 2] == 2


def test_reducible_chain_rejected():
    Q = np.zeros((3, 3))
    Q[0, 1] = Q[1, 0] = 1.0
    chain = MappingChain.from_rate_matrix(Q, measure=np.ones(3))
    with pytest.raises(ChainError, match="irreducible"):
        graph_distance(chain)


def test_discrete_gradient(swap):
    assert np.array_equal(discrete_gradient(swap, [0.0, 1.0], 1), [1.0, -1.0])
    assert np.array_equal(discrete_gradient(swap, [0.0, 1.0], 0), [0.0, 0.0])
    assert np.array_equal(discrete_gradient(swap, [3.0, 3.0], 1), [0.0, 0.0])


def test_from_rate_matrix_round_trip(rng, tmp_path):
    Q, m = random_reversible(5, rng)
    chain = MappingChain.from_rate_matrix(Q)
    assert np.allclose(chain.measure, m)
    assert np.allclose(build_generator(chain), Q)
    path = tmp_path / "chain.json"
    chain.save(path)
    again = MappingChain.load(path)
    assert np.allclose(build_generator(again), Q)


def test_validation_errors(tmp_path):
    moves = MoveSet(np.array([[0, 1], [1, 0]]), 0, np.array([0, 1]))
    with pytest.raises(ChainError):
        MappingChain(moves, -np.ones((2, 2)), np.ones(2))
    with pytest.raises(ChainError):
        MappingChain(moves, np.ones((2, 2)), np.array([1.0, 0.0]))
    with pytest.raises(ChainError):
        MoveSet(np.array([[1, 0], [1, 0]]), 0, np.array([0, 1]))
    # a move whose claimed inverse does not undo it on the support
    shift = MoveSet(np.array([[0, 1, 2], [1, 2, 0], [2, 0, 1]]), 0, np.array([0, 1, 2]))
    with pytest.raises(ChainError, match="inverse"):
        MappingChain(shift, np.array([[0, 1, 0], [0, 1, 0], [0, 1, 0]], float), np.ones(3))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ChainError):
        MappingChain.load(bad)
    bad.write_text(json.dumps({"n": 2}))
    with pytest.raises(ChainError):
        MappingChain.load(bad)
