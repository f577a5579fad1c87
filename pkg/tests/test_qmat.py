import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcollide import qmat
from qcollide.correlations import evolved_symmetric_projector

TOL = 1e-12


def rng_for(seed):
    return np.random.default_rng(seed)


def random_hermitian(dim, rng):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2


def test_tensor_product_examples():
    assert np.abs(qmat.tensor_product(qmat.I2, qmat.I2) - np.eye(4)).max() < TOL
    assert np.abs(qmat.tensor_product(qmat.SX, qmat.SX) - np.fliplr(np.eye(4))).max() < TOL
    p = (np.eye(4) + np.kron(qmat.SX, qmat.SX) - np.kron(qmat.SY, qmat.SY) + np.kron(qmat.SZ, qmat.SZ)) / 4
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[0, 3] = expected[3, 0] = expected[3, 3] = 0.5
    assert np.abs(p - expected).max() < TOL
    assert np.abs(qmat.P2_PLUS - expected).max() < TOL


def test_tensor_product_dimension_guard():
    with pytest.raises(ValueError):
        qmat.tensor_product(np.eye(4), np.eye(8))


def test_partial_trace_examples():
    rng = rng_for(1)
    rho, sigma = qmat.random_density_matrix(2, rng), qmat.random_density_matrix(2, rng)
    assert np.abs(qmat.partial_trace(np.kron(rho, sigma), [2, 2], 1) - rho).max() < TOL
    assert np.abs(qmat.partial_trace(qmat.P2_PLUS, [2, 2], 0) - np.eye(2) / 2).max() < TOL
    m = evolved_symmetric_projector(1, 0.01)
    assert np.abs(qmat.partial_trace(m, [2, 2], 1) - np.eye(2) / 2).max() < TOL


def test_partial_trace_errors():
    with pytest.raises(ValueError):
        qmat.partial_trace(np.eye(4), [2, 3], 0)
    with pytest.raises(ValueError):
        qmat.partial_trace(np.eye(4), [2, 2], 2)


def test_eigenvalue_examples():
    assert np.abs(qmat.hermitian_eigenvalues(qmat.SZ) - [1, -1]).max() < TOL
    assert np.abs(qmat.hermitian_eigenvalues(qmat.P2_PLUS) - [1, 0, 0, 0]).max() < TOL
    # the printed two-step matrix at eps = 0 has corners 1/8, so the spectrum
    # is 1/4 +- 1/8 and 1/4 twice
    ev = qmat.hermitian_eigenvalues(evolved_symmetric_projector(1, 0.0))
    assert np.abs(ev - [3 / 8, 1 / 4, 1 / 4, 1 / 8]).max() < TOL


def test_eigenvalues_reject_non_hermitian():
    with pytest.raises(ValueError):
        qmat.hermitian_eigenvalues(np.array([[0, 1], [0, 0]]))


@pytest.mark.parametrize("dim", [2, 4, 8, 16])
def test_eigenvalues_characteristic_residual(dim):
    rng = rng_for(dim)
    h = random_hermitian(dim, rng)
    ev = qmat.hermitian_eigenvalues(h)
    assert np.all(np.diff(ev) <= 0)
    scale = np.abs(ev).max()
    for e in ev:
        # smallest singular value of h - e is the distance to the spectrum
        resid = np.linalg.svd(h - e * np.eye(dim), compute_uv=False).min()
        assert resid < 1e-10 * max(1.0, scale)
    assert abs(ev.sum() - np.trace(h).real) < 1e-10


def test_trace_norm_examples():
    rng = rng_for(2)
    rho = qmat.random_density_matrix(4, rng)
    assert abs(qmat.trace_norm(rho) - 1) < TOL
    assert qmat.trace_norm(rho - rho) < TOL
    assert abs(qmat.trace_norm(qmat.SZ / 2) - 1) < TOL


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 4]))
def test_trace_norm_dominates_trace(seed, dim):
    rng = rng_for(seed)
    h = random_hermitian(dim, rng)
    assert qmat.trace_norm(h) >= abs(np.trace(h).real) - 1e-12
    psd = h @ h
    assert abs(qmat.trace_norm(psd) - np.trace(psd).real) < 1e-10
    assert abs(qmat.trace_norm(-psd) - np.trace(psd).real) < 1e-10


def test_entropy_examples():
    assert abs(qmat.von_neumann_entropy(qmat.P2_PLUS)) < TOL
    assert abs(qmat.von_neumann_entropy(np.eye(4) / 4) - math.log(4)) < TOL
    s = qmat.von_neumann_entropy(evolved_symmetric_projector(1, 0.0))
    assert abs(s - (20 * math.log(2) - 3 * math.log(3)) / 8) < TOL


def test_entropy_clipping():
    assert qmat.entropy_from_eigenvalues([1.0, -5e-11]) == 0.0
    with pytest.raises(ValueError):
        qmat.entropy_from_eigenvalues([1.0, -1e-8])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 4, 8]))
def test_entropy_unitary_invariance(seed, dim):
    rng = rng_for(seed)
    rho = qmat.random_density_matrix(dim, rng)
    u = qmat.random_unitary(dim, rng)
    s1 = qmat.von_neumann_entropy(rho)
    s2 = qmat.von_neumann_entropy(u @ rho @ u.conj().T)
    assert abs(s1 - s2) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([(2, 2), (2, 4), (4, 2), (2, 8)]))
def test_partial_trace_recovers_factors(seed, dims):
    rng = rng_for(seed)
    a, b = qmat.random_density_matrix(dims[0], rng), qmat.random_density_matrix(dims[1], rng)
    ab = qmat.tensor_product(a, b)
    assert np.abs(qmat.partial_trace(ab, dims, 1) - a).max() < 1e-14
    assert np.abs(qmat.partial_trace(ab, dims, 0) - b).max() < 1e-14
    assert abs(qmat.mutual_information(ab, dims)) < 1e-10


def test_qubit_entropy_from_bloch_matches_matrix():
    rng = rng_for(3)
    for _ in range(20):
        rho = qmat.random_density_matrix(2, rng)
        r = qmat.bloch_vector(rho)
        assert abs(qmat.qubit_entropy_from_bloch(r) - qmat.von_neumann_entropy(rho)) < 1e-12


def test_mutual_information_bell_state():
    assert abs(qmat.mutual_information(qmat.P2_PLUS, (2, 2)) - 2 * math.log(2)) < TOL


def test_partial_transpose_examples():
    rng = rng_for(4)
    rho, sigma = qmat.random_density_matrix(2, rng), qmat.random_density_matrix(2, rng)
    pt = qmat.partial_transpose(np.kron(rho, sigma))
    assert np.abs(pt - np.kron(rho.T, sigma)).max() < TOL
    assert qmat.hermitian_eigenvalues(pt).min() > -1e-12
    pt2 = qmat.partial_transpose(np.kron(rho, sigma), on_first=False)
    assert np.abs(pt2 - np.kron(rho, sigma.T)).max() < TOL
    assert abs(qmat.hermitian_eigenvalues(qmat.partial_transpose(qmat.P2_PLUS)).min() + 0.5) < TOL
    with pytest.raises(ValueError):
        qmat.partial_transpose(np.eye(8))


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        qmat.check_density_matrix(np.eye(2))
    with pytest.raises(ValueError):
        qmat.check_density_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        qmat.as_hermitian(np.array([[1, 1j], [1j, 0]]))
    with pytest.raises(ValueError):
        qmat.as_matrix(np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_pauli_coefficient_round_trip(seed):
    rng = rng_for(seed)
    h2, h4 = random_hermitian(2, rng), random_hermitian(4, rng)
    assert np.abs(qmat.from_pauli_coefficients(qmat.pauli_coefficients(h2)) - h2).max() < 1e-12
    assert np.abs(qmat.from_pauli_coefficients2(qmat.pauli_coefficients2(h4)) - h4).max() < 1e-12


def test_ket():
    assert np.abs(qmat.ket("01") - np.diag([0, 1, 0, 0])).max() < TOL
    with pytest.raises(ValueError):
        qmat.ket("012")
