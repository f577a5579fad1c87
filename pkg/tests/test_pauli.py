import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcollide import pauli, qmat
from qcollide.pauli import PauliDiagonalMap

TOL = 1e-12


def random_map(rng, spread=1.2):
    return PauliDiagonalMap(1.0, *rng.uniform(-spread, spread, size=3))


def test_apply_examples():
    assert np.abs(pauli.apply(PauliDiagonalMap.identity(), qmat.SZ) - qmat.SZ).max() < TOL
    rho = qmat.random_density_matrix(2, np.random.default_rng(0))
    assert np.abs(pauli.apply(PauliDiagonalMap(1, 0, 0, 0), rho) - np.eye(2) / 2).max() < TOL
    p, a = 0.25, 0.5
    m = PauliDiagonalMap(1, a, a, 1 - 4 * p)
    assert np.abs(m(qmat.SX) - qmat.SX / 2).max() < TOL
    with pytest.raises(ValueError):
        pauli.apply(m, np.eye(4))


def test_trace_scaled_by_lam0():
    h = np.array([[0.7, 0.1j], [-0.1j, 0.3]])
    out = pauli.apply(PauliDiagonalMap(0.4, 0.2, 0.1, 0.3), h)
    assert abs(np.trace(out) - 0.4) < TOL


def test_compose_and_inverse():
    rng = np.random.default_rng(1)
    m = random_map(rng)
    assert np.abs((m @ pauli.inverse(m)).array - 1).max() < 1e-12
    a, b = 0.3, -0.6
    sq = pauli.compose(PauliDiagonalMap(1, a, a, b), PauliDiagonalMap(1, a, a, b))
    assert np.abs(sq.array - [1, a * a, a * a, b * b]).max() < TOL
    # two equal steps give a trivial intertwiner
    eps = 0.01
    lam = 1 - 2 * (0.25 + eps)
    step = PauliDiagonalMap(1, lam, lam, 1) @ pauli.inverse(PauliDiagonalMap(1, lam, lam, 1))
    assert abs(step.lam[1] - 1) < TOL
    assert np.abs(pauli.power(m, 3).array - m.array ** 3).max() < 1e-12


def test_inverse_singular():
    with pytest.raises(ValueError):
        pauli.inverse(PauliDiagonalMap(1, 0.5, 0.0, 0.5))


def test_constructor_validation():
    with pytest.raises(ValueError):
        PauliDiagonalMap(1, 2, 3)
    with pytest.raises(ValueError):
        PauliDiagonalMap(1, np.nan, 0, 0)
    assert PauliDiagonalMap([1, 0.5, 0.5, 0.2]).lam == (1, 0.5, 0.5, 0.2)
    assert PauliDiagonalMap(1, 0, 0, 0).is_trace_preserving
    assert not PauliDiagonalMap(0.5, 0, 0, 0).is_trace_preserving


def test_choi_examples():
    assert np.abs(pauli.choi_matrix(PauliDiagonalMap.identity()) - qmat.P2_PLUS).max() < TOL
    ev = qmat.hermitian_eigenvalues(pauli.choi_matrix(PauliDiagonalMap(1, 1, 1, -1)))
    assert abs(ev.min() + 0.5) < TOL
    for p, lam in [(0.1, 0.3), (0.2, -0.4), (0.05, 0.95)]:
        m = PauliDiagonalMap(1, lam, lam, 1 - 4 * p)
        ev = np.sort(qmat.hermitian_eigenvalues(pauli.choi_matrix(m)))
        expected = np.sort([p, p, (1 - 2 * p) / 2 + lam / 2, (1 - 2 * p) / 2 - lam / 2])
        assert np.abs(ev - expected).max() < TOL


def test_choi_is_map_on_half_of_p2plus():
    rng = np.random.default_rng(2)
    m = random_map(rng)
    direct = pauli.apply_product(m, PauliDiagonalMap.identity(), qmat.P2_PLUS)
    assert np.abs(direct - pauli.choi_matrix(m)).max() < TOL


def test_positivity_examples():
    assert pauli.is_completely_positive(PauliDiagonalMap.identity())
    transpose = PauliDiagonalMap(1, 1, -1, 1)
    assert pauli.is_positive(transpose)
    assert not pauli.is_completely_positive(transpose)
    flip = PauliDiagonalMap(1, 1, 1, -1)
    assert pauli.is_positive(flip) and not pauli.is_completely_positive(flip)
    # Bell coefficient c3 = 0 exactly: boundary counts as CP
    p = 0.1
    edge = PauliDiagonalMap(1, 1 - 2 * p, 1 - 2 * p, 1 - 4 * p)
    assert abs(pauli.bell_coefficients(edge)[3]) < TOL
    assert pauli.is_completely_positive(edge)
    assert not pauli.is_completely_positive(PauliDiagonalMap(1, 1 - 2 * p + 1e-6, 1 - 2 * p + 1e-6, 1 - 4 * p))
    assert not pauli.is_positive(PauliDiagonalMap(1, 1.01, 0, 0))


def test_tensor_square_examples():
    assert pauli.tensor_square_is_positive(PauliDiagonalMap.identity())
    m = PauliDiagonalMap(1, 0.9, 0.9, 0.5)
    assert 1 + 0.5 ** 2 - 2 * 0.9 ** 2 < 0
    assert not pauli.tensor_square_is_positive(m)
    assert pauli.is_positive(m)
    # small p, Q > 1/2 step map
    p, q = 1e-3, 0.8
    lam = 1 + 4 * p * p * (2 * q - 1)
    assert not pauli.tensor_square_is_positive(PauliDiagonalMap(1, lam, lam, 1 - 4 * p))
    with pytest.raises(ValueError):
        pauli.tensor_square_is_positive(PauliDiagonalMap(0.5, 0, 0, 0))


def test_bell_coefficients_and_diamond_examples():
    c = pauli.bell_coefficients(PauliDiagonalMap.identity())
    assert np.abs(c - [1, 0, 0, 0]).max() < TOL
    assert abs(pauli.diamond_norm(PauliDiagonalMap.identity()) - 1) < TOL
    c = pauli.bell_coefficients(PauliDiagonalMap(1, 1, 1, -1))
    assert np.abs(c - [0.5, 0.5, 0.5, -0.5]).max() < TOL
    assert abs(pauli.diamond_norm(PauliDiagonalMap(1, 1, 1, -1)) - 2) < TOL
    assert np.abs(pauli.PauliDiagonalMap.from_bell(c).array - [1, 1, 1, -1]).max() < TOL


def test_channels_have_unit_diamond_norm():
    rng = np.random.default_rng(3)
    n = 0
    while n < 50:
        m = random_map(rng, 1.0)
        if pauli.is_completely_positive(m):
            assert abs(pauli.diamond_norm(m) - 1) < 1e-12
            n += 1


def test_walsh_squares_to_four():
    assert np.abs(pauli.WALSH @ pauli.WALSH - 4 * np.eye(4)).max() < TOL


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_walsh_round_trip(lam):
    lam = np.array(lam)
    assert np.abs(pauli.WALSH @ (pauli.WALSH @ lam) / 4 - lam).max() < 1e-14 * max(1, np.abs(lam).max())


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_choi_eigenvalues_are_bell_coefficients(seed):
    m = random_map(np.random.default_rng(seed))
    ev = np.sort(qmat.hermitian_eigenvalues(pauli.choi_matrix(m)))
    assert np.abs(ev - np.sort(pauli.bell_coefficients(m))).max() < 1e-10


def test_cp_implies_positive():
    rng = np.random.default_rng(4)
    lams = np.column_stack([np.ones(10_000), rng.uniform(-1.2, 1.2, size=(10_000, 3))])
    n_cp = 0
    for lam in lams:
        m = PauliDiagonalMap(lam)
        if pauli.is_completely_positive(m):
            n_cp += 1
            assert pauli.is_positive(m)
    assert n_cp > 100


def test_diamond_norm_dominates_induced_norm():
    rng = np.random.default_rng(5)
    for _ in range(5):
        m = random_map(rng)
        assert pauli.diamond_norm(m) >= pauli.induced_trace_norm_lower_bound(m, rng, 1000) - 1e-12


@pytest.mark.parametrize("lam", [(1, 1, 1, -1), (1, 0.3, -0.8, 0.5), (1, 0.9, 0.9, 0.5), (1, 1.1, -0.2, 0.4)])
def test_diamond_norm_matches_bruteforce(lam):
    m = PauliDiagonalMap(*lam)
    brute = pauli.diamond_norm_lower_bound(m, np.random.default_rng(6))
    assert brute <= pauli.diamond_norm(m) + 1e-9
    assert abs(brute - pauli.diamond_norm(m)) < 1e-6


def random_pure_states(k, rng):
    psi = rng.normal(size=(k, 4)) + 1j * rng.normal(size=(k, 4))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    return np.einsum("ka,kb->kab", psi, psi.conj())


def test_tensor_square_agrees_with_sampled_states():
    rng = np.random.default_rng(7)
    bell = [qmat.P2_PLUS]
    for s1, s2 in [(qmat.I2, qmat.SX), (qmat.I2, qmat.SY), (qmat.I2, qmat.SZ)]:
        u = np.kron(s1, s2)
        bell.append(u @ qmat.P2_PLUS @ u.conj().T)
    states = np.concatenate([random_pure_states(1000, rng), np.array(bell)])
    for _ in range(40):
        m = random_map(rng, 1.0)
        out = np.array([pauli.apply_product(m, m, s) for s in states])
        min_ev = np.linalg.eigvalsh(out)[:, 0].min()
        assert pauli.tensor_square_is_positive(m) == (min_ev >= -1e-10)
