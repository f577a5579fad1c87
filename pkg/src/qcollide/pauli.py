"""Qubit maps that are diagonal in the Pauli basis.

A map is stored as its four Pauli eigenvalues ``lam``, acting as
``sum_j x_j sigma_j -> sum_j lam[j] x_j sigma_j``.  The equivalent
Bell-coefficient form ``X -> sum_k c[k] sigma_k X sigma_k`` is related by
``lam = WALSH @ c`` and ``c = WALSH @ lam / 4``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import qmat

POSITIVITY_TOL = 1e-10
SINGULAR_TOL = 1e-12

WALSH = np.array(
    [
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
    ],
    dtype=float,
)

# P2+ = sum_j _CHOI_SIGNS[j] sigma_j (x) sigma_j / 4
_CHOI_SIGNS = np.array([1.0, 1.0, -1.0, 1.0])


@dataclass(frozen=True)
class PauliDiagonalMap:
    lam: tuple[float, float, float, float]

    def __init__(self, *lam):
        if len(lam) == 1:
            lam = tuple(np.asarray(lam[0], dtype=float).ravel())
        if len(lam) != 4:
            raise ValueError(f"a Pauli-diagonal map needs 4 eigenvalues, got {len(lam)}")
        vals = tuple(float(x) for x in lam)
        if not all(np.isfinite(vals)):
            raise ValueError(f"non-finite Pauli eigenvalues {vals}")
        object.__setattr__(self, "lam", vals)

    @classmethod
    def identity(cls) -> PauliDiagonalMap:
        return cls(1.0, 1.0, 1.0, 1.0)

    @classmethod
    def from_bell(cls, c) -> PauliDiagonalMap:
        return cls(WALSH @ np.asarray(c, dtype=float))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.lam)

    @property
    def is_trace_preserving(self) -> bool:
        return abs(self.lam[0] - 1) <= SINGULAR_TOL

    def __call__(self, h) -> np.ndarray:
        return apply(self, h)

    def __matmul__(self, other: PauliDiagonalMap) -> PauliDiagonalMap:
        return compose(self, other)


def apply(m: PauliDiagonalMap, h) -> np.ndarray:
    h = qmat.as_matrix(h)
    if h.shape != (2, 2):
        raise ValueError(f"Pauli maps act on 2x2 matrices, got {h.shape}")
    return qmat.from_pauli_coefficients(m.array * qmat.pauli_coefficients(h))


def apply_product(a: PauliDiagonalMap, b: PauliDiagonalMap, x) -> np.ndarray:
    """Apply ``a (x) b`` to a two-qubit operator."""
    x = qmat.as_matrix(x)
    if x.shape != (4, 4):
        raise ValueError(f"product maps act on 4x4 matrices, got {x.shape}")
    scale = np.outer(a.array, b.array)
    return qmat.from_pauli_coefficients2(scale * qmat.pauli_coefficients2(x))


def compose(a: PauliDiagonalMap, b: PauliDiagonalMap) -> PauliDiagonalMap:
    return PauliDiagonalMap(a.array * b.array)


def inverse(a: PauliDiagonalMap) -> PauliDiagonalMap:
    lam = a.array
    if np.any(np.abs(lam) <= SINGULAR_TOL):
        raise ValueError(f"Pauli map with eigenvalues {a.lam} is not invertible")
    return PauliDiagonalMap(1.0 / lam)


def power(a: PauliDiagonalMap, n: int) -> PauliDiagonalMap:
    return PauliDiagonalMap(a.array ** n)


def choi_matrix(m: PauliDiagonalMap) -> np.ndarray:
    """``(m (x) id)[P2+]`` as a 4x4 matrix."""
    return _choi_stack(m.array[None, :])[0]


def _choi_stack(lams: np.ndarray) -> np.ndarray:
    coeffs = np.zeros((lams.shape[0], 4, 4))
    idx = np.arange(4)
    coeffs[:, idx, idx] = lams * _CHOI_SIGNS / 4
    return np.einsum("nij,ijab->nab", coeffs, qmat.PAULI2)


def _min_choi_eigenvalues(lams: np.ndarray) -> np.ndarray:
    choi = _choi_stack(np.atleast_2d(np.asarray(lams, dtype=float)))
    return np.linalg.eigvalsh(choi)[:, 0]


def bell_coefficients(m: PauliDiagonalMap) -> np.ndarray:
    return WALSH @ m.array / 4


def is_completely_positive(m: PauliDiagonalMap, tol: float = POSITIVITY_TOL) -> bool:
    """Choi matrix PSD, decided by numerically diagonalising the Choi matrix."""
    return bool(_min_choi_eigenvalues(m.array)[0] >= -tol)


def is_positive(m: PauliDiagonalMap, tol: float = POSITIVITY_TOL) -> bool:
    # Bloch ball mapped into the cone: |lam_j| <= lam_0 for j = 1, 2, 3
    lam = m.array
    return bool(np.max(np.abs(lam[1:])) <= lam[0] + tol)


def tensor_square_is_positive(m: PauliDiagonalMap, tol: float = POSITIVITY_TOL) -> bool:
    """``m (x) m`` positive, which for Pauli maps means ``m o m`` is CP."""
    if not m.is_trace_preserving:
        raise ValueError("tensor_square_is_positive expects a trace-preserving map")
    return is_completely_positive(compose(m, m), tol)


def diamond_norm(m: PauliDiagonalMap) -> float:
    # Choi matrix is Bell-diagonal with maximally mixed marginals, so the
    # triangle-inequality upper bound sum|c_k| is attained at P2+.
    return float(np.sum(np.abs(bell_coefficients(m))))


def induced_trace_norm_lower_bound(m: PauliDiagonalMap, rng: np.random.Generator, samples: int = 1000) -> float:
    """Largest ``||m[X]||_1`` over random Hermitian ``X`` with ``||X||_1 = 1``."""
    best = 0.0
    for _ in range(samples):
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        x = g + g.conj().T
        x /= qmat.trace_norm(x)
        best = max(best, qmat.trace_norm(apply(m, x)))
    return best


def diamond_norm_lower_bound(m: PauliDiagonalMap, rng: np.random.Generator, starts: int = 8) -> float:
    """Maximise ``||(m (x) id)[|psi><psi|]||_1`` over pure two-qubit states.

    Independent of the Bell-coefficient shortcut; used to confirm it.
    """
    def negnorm(x):
        psi = x[:4] + 1j * x[4:]
        psi = psi / np.linalg.norm(psi)
        out = apply_product(m, PauliDiagonalMap.identity(), np.outer(psi, psi.conj()))
        return -qmat.trace_norm(out)

    best = 0.0
    for _ in range(starts):
        res = optimize.minimize(negnorm, rng.normal(size=8), method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 20000})
        best = max(best, -res.fun)
    return best
