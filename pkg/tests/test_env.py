import itertools
import math
import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcollide import env, qmat
from qcollide.env import ChainConstraintError, ChainParams

TOL = 1e-13


def special_chain():
    return env.build_chain(ChainParams(0.0, 0.5, 0.0, 0.5))


def test_build_chain_factorized():
    prm = ChainParams.from_p_r_delta(0.3, 0.1, 0.0)
    chain = env.build_chain(prm)
    for j in range(4):
        assert np.abs(chain.T[:, j] - chain.stationary).max() < TOL


def test_build_chain_special_matrix():
    T = special_chain().T
    expected = np.zeros((4, 4))
    expected[1, :] = expected[2, :] = 0.5
    expected[1, 1] = expected[2, 2] = 1.0
    expected[1, 2] = expected[2, 1] = 0.0
    assert np.abs(T - expected).max() < TOL


def test_build_chain_uniform_stationary():
    chain = env.build_chain(ChainParams.from_p_r_delta(0.25, 0.25, 0.125))
    assert np.abs(chain.stationary - 0.25).max() < TOL
    assert np.abs(chain.T @ chain.stationary - chain.stationary).max() < TOL
    assert np.abs(chain.T.sum(axis=0) - 1).max() < TOL


@pytest.mark.parametrize(
    "args, needle",
    [
        ((0.3, 0.2, 0.1, 0.4), "delta <= p"),
        ((-0.1, 0.5, 0.1, 0.1), "p0 >= 0"),
        ((0.1, 0.3, 0.2, 0.1), "p0 + 2p + r = 1"),
        ((0.0, 0.3, 0.4, -0.1), "0 <= delta"),
        ((0.2, 0.45, -0.1, 0.1), "r >= 0"),
    ],
)
def test_constraint_errors_name_the_inequality(args, needle):
    with pytest.raises(ChainConstraintError, match=re.escape(needle)):
        ChainParams(*args)


def test_path_probability_examples():
    prm = ChainParams.from_p_r_delta(0.2, 0.3, 0.0)
    chain = env.build_chain(prm)
    for path in [(0, 1, 3), (2, 2, 1, 0), (3,)]:
        expected = np.prod([chain.stationary[s] for s in path])
        assert abs(env.path_probability(chain, path) - expected) < TOL
    sp = special_chain()
    assert abs(env.path_probability(sp, (1, 1, 1, 1)) - 0.5) < TOL
    assert env.path_probability(sp, (1, 2, 1, 2)) == 0.0
    for k in range(4):
        assert env.path_probability(chain, [k]) == chain.stationary[k]


def test_path_probability_errors():
    chain = special_chain()
    with pytest.raises(ValueError):
        env.path_probability(chain, [])
    with pytest.raises(ValueError):
        env.path_probability(chain, [0, 4])


def test_enumerate_paths_examples():
    chain = env.build_chain(ChainParams.from_p_r_delta(0.2, 0.3, 0.1))
    one = env.enumerate_paths(chain, 1)
    assert len(one) == 4
    assert np.abs(one.probabilities - chain.stationary).max() < TOL

    sp = env.enumerate_paths(special_chain(), 8)
    assert len(sp) == 2
    assert sorted(p.symbols for p in sp) == [(1,) * 8, (2,) * 8]
    assert np.abs(sp.probabilities - 0.5).max() < TOL

    fac = env.build_chain(ChainParams(0.1, 0.3, 0.3, 0.0))
    paths = env.enumerate_paths(fac, 3)
    assert len(paths) == 64
    for path in paths:
        assert abs(path.probability - np.prod(fac.stationary[list(path.symbols)])) < TOL


def test_enumerate_paths_matches_path_probability():
    chain = env.build_chain(ChainParams.from_p_r_delta(0.2, 0.1, 0.15))
    paths = env.enumerate_paths(chain, 5)
    assert abs(paths.probabilities.sum() - 1) < TOL
    for path in paths:
        assert abs(path.probability - env.path_probability(chain, path.symbols)) < TOL


def test_enumerate_paths_guard_and_pruning():
    chain = env.build_chain(ChainParams.from_p_r_delta(0.2, 0.1, 0.15))
    with pytest.raises(ValueError):
        env.enumerate_paths(chain, 13)
    with pytest.raises(ValueError):
        env.enumerate_paths(chain, 0)
    pruned = env.enumerate_paths(chain, 6, prune_below=1e-3)
    assert pruned.pruned_mass > 0
    assert abs(pruned.probabilities.sum() + pruned.pruned_mass - 1) < 1e-12
    assert np.all(pruned.probabilities > 1e-3)
    # long horizons are allowed once pruning is on
    long = env.enumerate_paths(special_chain(), 20, prune_below=1e-9)
    assert len(long) == 2


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 6))
def test_marginal_consistency(seed, n):
    rng = np.random.default_rng(seed)
    chain = env.build_chain(env.random_chain_params(rng))
    for _ in range(10):
        path = list(rng.integers(0, 4, size=n - 1))
        total = sum(env.path_probability(chain, path + [s]) for s in range(4))
        assert abs(total - env.path_probability(chain, path)) < TOL


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_shift_invariance(seed):
    rng = np.random.default_rng(seed)
    chain = env.build_chain(env.random_chain_params(rng))
    m, total = 2, 5
    # distribution of the window [k, k + m] inside a length-`total` path
    paths = env.enumerate_paths(chain, total)
    dists = []
    for k in range(total - m):
        d = {}
        for sym, pr in zip(paths.symbols, paths.probabilities):
            key = tuple(sym[k:k + m + 1])
            d[key] = d.get(key, 0.0) + pr
        dists.append(d)
    for key in itertools.product(range(4), repeat=m + 1):
        vals = [d.get(key, 0.0) for d in dists]
        assert max(vals) - min(vals) < 1e-13


def test_neighbor_mutual_information_examples():
    assert abs(env.neighbor_mutual_information(ChainParams.from_p_r_delta(0.3, 0.1, 0.0))) < TOL
    p = 0.3
    mi = env.neighbor_mutual_information(ChainParams.from_p_r_delta(p, 0.1, p))
    assert abs(mi - 4 * p * p * math.log(2)) < TOL
    mi = env.neighbor_mutual_information(ChainParams(0.0, 0.5, 0.0, 0.25))
    h34 = 0.75 * math.log(4 / 3) + 0.25 * math.log(4)
    assert abs(mi - (math.log(2) - h34)) < TOL
    assert abs(mi - 0.1308) < 1e-4
    with pytest.raises(ValueError):
        env.neighbor_mutual_information(ChainParams(1.0, 0.0, 0.0, 0.0))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_neighbor_mutual_information_matches_two_site_state(seed):
    rng = np.random.default_rng(seed)
    prm = env.random_chain_params(rng)
    if prm.p <= 0:
        return
    rho = env.two_site_state(env.build_chain(prm))
    assert abs(np.trace(rho) - 1) < TOL
    assert abs(env.neighbor_mutual_information(prm) - qmat.mutual_information(rho, (4, 4))) < 1e-12


@pytest.mark.parametrize("p, r", [(0.1, 0.0), (0.3, 0.2), (0.5, 0.0)])
def test_neighbor_mutual_information_monotone_in_delta(p, r):
    vals = [env.neighbor_mutual_information(ChainParams.from_p_r_delta(p, r, d)) for d in np.linspace(0, p, 101)]
    assert np.all(np.diff(vals) >= -1e-15)
