"""Small dense complex-matrix kernel.

Everything here works on plain ``numpy`` arrays. Composite indices of
tensor products follow the row-major (Kronecker) convention: the basis
vector ``|i_a, i_b>`` sits at position ``i_a * dim_b + i_b``.
"""

from __future__ import annotations

import numpy as np

MAX_DIM = 16
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
NEGATIVITY_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([I2, SX, SY, SZ])

# two-qubit Pauli products, PAULI2[i, j] = sigma_i (x) sigma_j
PAULI2 = np.einsum("iab,jcd->ijacbd", PAULI, PAULI).reshape(4, 4, 4, 4)

_BELL = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
P2_PLUS = np.outer(_BELL, _BELL.conj())


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    a = as_matrix(m)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def as_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate Hermiticity and return the exactly symmetrised matrix."""
    a = as_matrix(m)
    err = np.max(np.abs(a - a.conj().T), initial=0.0)
    if err > tol:
        raise ValueError(f"matrix is not Hermitian (max deviation {err:.3e})")
    return (a + a.conj().T) / 2


def check_density_matrix(m, tol: float = TRACE_TOL) -> np.ndarray:
    a = as_hermitian(m)
    tr = np.trace(a).real
    if abs(tr - 1) > tol:
        raise ValueError(f"density matrix must have unit trace, got {tr!r}")
    e_min = np.linalg.eigvalsh(a)[0]
    if e_min < -NEGATIVITY_TOL:
        raise ValueError(f"density matrix has negative eigenvalue {e_min:.3e}")
    return a


def tensor_product(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    dim = a.shape[0] * b.shape[0]
    if dim > MAX_DIM:
        raise ValueError(f"tensor product dimension {dim} exceeds {MAX_DIM}")
    return np.kron(a, b)


def partial_trace(m, subsystem_dims, traced_index: int) -> np.ndarray:
    a = as_matrix(m)
    dims = [int(d) for d in subsystem_dims]
    if any(d <= 0 for d in dims) or int(np.prod(dims)) != a.shape[0]:
        raise ValueError(f"subsystem dims {dims} do not match matrix dimension {a.shape[0]}")
    k = len(dims)
    if not 0 <= traced_index < k:
        raise ValueError(f"traced_index {traced_index} out of range for {k} subsystems")
    t = a.reshape(dims + dims)
    t = np.trace(t, axis1=traced_index, axis2=traced_index + k)
    keep = int(np.prod([d for i, d in enumerate(dims) if i != traced_index]))
    return t.reshape(keep, keep)


def hermitian_eigenvalues(h) -> np.ndarray:
    """Real spectrum of a Hermitian matrix, sorted in descending order."""
    a = as_hermitian(h)
    return np.linalg.eigvalsh(a)[::-1]


def trace_norm(h) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(as_hermitian(h)))))


def entropy_from_eigenvalues(e) -> float:
    e = np.asarray(e, dtype=float)
    if np.any(e < -NEGATIVITY_TOL):
        raise ValueError(f"negative eigenvalue {e.min():.3e} in entropy")
    e = e[e > 0]
    return float(-np.sum(e * np.log(e)))


def von_neumann_entropy(d) -> float:
    """Entropy in nats; eigenvalues in [-1e-10, 0] count as zero."""
    return entropy_from_eigenvalues(np.linalg.eigvalsh(as_hermitian(d)))


def qubit_entropy_from_bloch(r) -> np.ndarray:
    """Vectorised entropy of qubit states with Bloch vectors ``r[..., 3]``."""
    norm = np.clip(np.linalg.norm(np.asarray(r, dtype=float), axis=-1), 0.0, 1.0)
    out = np.zeros_like(norm)
    for sign in (1.0, -1.0):
        e = (1 + sign * norm) / 2
        with np.errstate(divide="ignore", invalid="ignore"):
            out -= np.where(e > 0, e * np.log(np.where(e > 0, e, 1.0)), 0.0)
    return out


def mutual_information(rho, dims) -> float:
    """S(A) + S(B) - S(AB) for a bipartite state with ``dims = (dA, dB)``."""
    rho = as_hermitian(rho)
    s_a = von_neumann_entropy(partial_trace(rho, dims, 1))
    s_b = von_neumann_entropy(partial_trace(rho, dims, 0))
    return s_a + s_b - von_neumann_entropy(rho)


def partial_transpose(m, on_first: bool = True) -> np.ndarray:
    a = as_matrix(m)
    if a.shape != (4, 4):
        raise ValueError("partial_transpose expects a 4x4 two-qubit matrix")
    t = a.reshape(2, 2, 2, 2)  # (i_a, i_b, j_a, j_b)
    if on_first:
        t = t.transpose(2, 1, 0, 3)
    else:
        t = t.transpose(0, 3, 2, 1)
    return t.reshape(4, 4)


def bloch_vector(rho) -> np.ndarray:
    rho = as_matrix(rho)
    return np.array([np.trace(PAULI[k] @ rho).real for k in (1, 2, 3)])


def pauli_coefficients(x) -> np.ndarray:
    """Coefficients ``x_j`` with ``X = sum_j x_j sigma_j`` (qubit)."""
    a = as_matrix(x)
    if a.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    return np.einsum("kba,ab->k", PAULI, a) / 2


def from_pauli_coefficients(c) -> np.ndarray:
    return np.einsum("k,kab->ab", np.asarray(c, dtype=complex), PAULI)


def pauli_coefficients2(x) -> np.ndarray:
    """Coefficients ``c_ij`` with ``X = sum_ij c_ij sigma_i (x) sigma_j``."""
    a = as_matrix(x)
    if a.shape != (4, 4):
        raise ValueError("expected a 4x4 matrix")
    return np.einsum("ijba,ab->ij", PAULI2, a) / 4


def from_pauli_coefficients2(c) -> np.ndarray:
    return np.einsum("ij,ijab->ab", np.asarray(c, dtype=complex), PAULI2)


def ket(bits: str) -> np.ndarray:
    """Computational-basis projector, e.g. ``ket("01")``."""
    if not bits or any(b not in "01" for b in bits):
        raise ValueError(f"invalid basis label {bits!r}")
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return np.outer(v, v)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
