"""System-chain joint states and mutual information.

The joint state of the qubit and a window of chain sites is block diagonal in
the chain's symbol basis: each window configuration ``l`` carries weight
``p_l`` and the conditional qubit state ``phi_l[rho]`` (the composed collision
maps of the sites already collided).  Unital Pauli maps are self-adjoint, so
the dual maps coincide with the maps.  Entropies use the natural log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import pauli, qmat
from .dynamics import CollisionModel, path_map_distribution, reduced_map
from .env import ChainParams, enumerate_paths
from .pauli import PauliDiagonalMap

WEIGHT_TOL = 1e-12
MAX_WINDOW = 8

_V = (qmat.SX + qmat.SZ) / math.sqrt(2)
SIGMA1_BASIS = np.kron(_V, _V)


@dataclass(frozen=True)
class CQBlock:
    path: tuple[int, ...]
    weight: float
    conditional: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ClassicalQuantumState:
    """Block-diagonal qubit-chain state on the sites ``window[0] .. window[1]``."""

    blocks: tuple[CQBlock, ...]
    window: tuple[int, int]

    def __post_init__(self):
        total = sum(b.weight for b in self.blocks)
        if abs(total - 1) > WEIGHT_TOL:
            raise ValueError(f"block weights sum to {total}, not 1")

    @property
    def sites(self) -> int:
        return self.window[1] - self.window[0] + 1

    def system_marginal(self) -> np.ndarray:
        return sum(b.weight * b.conditional for b in self.blocks)

    def chain_marginal(self) -> dict[tuple[int, ...], float]:
        return {b.path: b.weight for b in self.blocks}

    def mutual_information(self) -> float:
        """``S(sum_l p_l rho_l) - sum_l p_l S(rho_l)``, from block diagonality."""
        weights = np.array([b.weight for b in self.blocks])
        conds = np.array([b.conditional for b in self.blocks])
        avg = qmat.von_neumann_entropy(np.einsum("k,kab->ab", weights, conds))
        return float(avg - weights @ _entropies(conds))

    def to_matrix(self) -> np.ndarray:
        """Dense joint matrix, system factor first; only for small windows."""
        dim_e = 4 ** self.sites
        if 2 * dim_e > 2 * 4 ** 3:
            raise ValueError("dense joint matrix limited to windows of at most 3 sites")
        out = np.zeros((2, dim_e, 2, dim_e), dtype=complex)
        for b in self.blocks:
            idx = 0
            for s in b.path:
                idx = 4 * idx + s
            out[:, idx, :, idx] += b.weight * b.conditional
        return out.reshape(2 * dim_e, 2 * dim_e)


def evolve_joint_state(model: CollisionModel, rho_s, n: int, window=(0, 0)) -> ClassicalQuantumState:
    """Joint qubit-chain state after ``n`` collisions.

    ``window = (a, b)`` labels the sites ``[-a, b]``.  It is widened on the left
    to ``-n + 1`` so that every collided site is included; the sites
    ``-n + 1 .. 0`` are the ones that have interacted with the qubit.
    """
    rho = qmat.check_density_matrix(rho_s)
    if rho.shape != (2, 2):
        raise ValueError("rho_s must be a qubit density matrix")
    if n < 0:
        raise ValueError("n must be >= 0")
    a, b = int(window[0]), int(window[1])
    if a < 0 or b < 0:
        raise ValueError("window (a, b) needs a, b >= 0")
    lo = min(-a, -n + 1)
    length = b - lo + 1
    if length > MAX_WINDOW:
        raise ValueError(f"window of {length} sites exceeds the guard ({MAX_WINDOW})")
    paths = enumerate_paths(model.env, length)
    # columns of the collided sites -n+1 .. 0
    active = paths.symbols[:, -lo - n + 1 : -lo + 1].astype(int)
    lams = np.prod(model.mu[active], axis=1)
    conds = np.einsum("kj,j,jab->kab", lams, qmat.pauli_coefficients(rho), qmat.PAULI)
    blocks = tuple(
        CQBlock(tuple(int(x) for x in sym), float(pr), c)
        for sym, pr, c in zip(paths.symbols, paths.probabilities, conds)
    )
    return ClassicalQuantumState(blocks, (lo, b))


def _entropies(states: np.ndarray) -> np.ndarray:
    ev = np.linalg.eigvalsh(states)
    if np.any(ev < -qmat.NEGATIVITY_TOL):
        raise ValueError(f"negative eigenvalue {ev.min():.3e} in entropy")
    ev = np.where(ev > 0, ev, 1.0)
    return -np.sum(ev * np.log(ev), axis=-1)


def mutual_information_discrete(model: CollisionModel, rho_s, n: int) -> float:
    """Qubit-chain mutual information ``S(Lambda_n[rho]) - sum_l p_l S(phi_l[rho])``."""
    rho = qmat.check_density_matrix(rho_s)
    dist = path_map_distribution(model, n)
    r = qmat.bloch_vector(rho)
    lams = np.array([m.array[1:] for m, _ in dist])
    probs = np.array([pr for _, pr in dist])
    s_cond = qmat.qubit_entropy_from_bloch(lams * r[None, :])
    s_avg = qmat.qubit_entropy_from_bloch(probs @ lams * r)
    return float(s_avg - probs @ s_cond)


def _product_apply_batch(lam_a: np.ndarray, lam_b: np.ndarray, c: np.ndarray) -> np.ndarray:
    # states[k] = sum_ij lam_a[k, i] lam_b[k, j] c_ij sigma_i (x) sigma_j
    scaled = lam_a[:, :, None] * lam_b[:, None, :] * c[None]
    return np.einsum("kij,ijab->kab", scaled, qmat.PAULI2)


def mutual_information_two_qubits_discrete(model: CollisionModel, rho_ss, n: int) -> float:
    """Each qubit collides with its own copy of the chain; the sum runs over path pairs."""
    rho = qmat.check_density_matrix(rho_ss)
    if rho.shape != (4, 4):
        raise ValueError("rho_ss must be a two-qubit density matrix")
    dist = path_map_distribution(model, n)
    lams = np.array([m.array for m, _ in dist])
    probs = np.array([pr for _, pr in dist])
    c = qmat.pauli_coefficients2(rho)
    k = len(dist)
    ia, ib = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    ia, ib = ia.ravel(), ib.ravel()
    s_cond = _entropies(_product_apply_batch(lams[ia], lams[ib], c))
    weights = probs[ia] * probs[ib]
    lam_n = reduced_map(model, n)
    s_avg = qmat.von_neumann_entropy(pauli.apply_product(lam_n, lam_n, rho))
    return float(s_avg - weights @ s_cond)


# -- the two-step symmetric projector example ------------------------------


def choice_params(epsilon: float) -> ChainParams:
    """``r = 0``, ``p = 1/4 + epsilon``, ``delta = (1 - 2p)/2``: P-divisibility saturated."""
    p = 0.25 + epsilon
    return ChainParams.from_p_r_delta(p, 0.0, (1 - 2 * p) / 2)


def evolved_symmetric_projector(n: int, epsilon: float) -> np.ndarray:
    """Explicit ``Lambda_n (x) Lambda_n [P2+]`` at steps 1 and 2 for :func:`choice_params`."""
    if n == 1:
        d = 4 * epsilon ** 2
    elif n == 2:
        d = 64 * epsilon ** 4
    else:
        raise ValueError("explicit form only for n = 1, 2")
    off = (1 - 4 * epsilon) ** 2 / 8
    m = np.diag([0.25 + d, 0.25 - d, 0.25 - d, 0.25 + d]).astype(complex)
    m[0, 3] = m[3, 0] = off
    return m


# -- X states ----------------------------------------------------------------


@dataclass(frozen=True)
class XStateParams:
    mu1: float
    mu2: float
    nu: float
    u: complex = 0.0
    v: complex = 0.0
    tol: float = 1e-12

    def __post_init__(self):
        m1, m2, nu, t = self.mu1, self.mu2, self.nu, self.tol
        rest = 1 - m1 - m2 - nu
        checks = [
            (m1 >= -t, f"mu1 >= 0 (mu1={m1})"),
            (m2 >= -t, f"mu2 >= 0 (mu2={m2})"),
            (nu >= -t, f"nu >= 0 (nu={nu})"),
            (rest >= -t, f"nu <= 1 - (mu1 + mu2) (nu={nu}, mu1+mu2={m1 + m2})"),
            (abs(self.u) <= math.sqrt(max(m1 * m2, 0.0)) + t, f"|u| <= sqrt(mu1 mu2) (|u|={abs(self.u)})"),
            (
                abs(self.v) <= math.sqrt(max(nu * rest, 0.0)) + t,
                f"|v| <= sqrt(nu (1 - mu1 - mu2 - nu)) (|v|={abs(self.v)})",
            ),
        ]
        for ok, what in checks:
            if not ok:
                raise ValueError(f"X-state positivity violated: {what}")


def x_state(params: XStateParams, basis: str = "sigma1") -> np.ndarray:
    """X-shaped state in the computational basis or in the ``sigma_1 (x) sigma_1`` eigenbasis."""
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0], m[1, 1] = params.mu1, params.nu
    m[2, 2], m[3, 3] = 1 - params.mu1 - params.mu2 - params.nu, params.mu2
    m[0, 3], m[3, 0] = params.u, np.conj(params.u)
    m[1, 2], m[2, 1] = params.v, np.conj(params.v)
    if basis == "computational":
        return m
    if basis == "sigma1":
        return SIGMA1_BASIS @ m @ SIGMA1_BASIS.conj().T
    raise ValueError(f"unknown basis {basis!r}")


# -- continuous time, special chain with two surviving sequences ------------


def branch_maps(t: float, gamma: float = 1.0) -> tuple[PauliDiagonalMap, PauliDiagonalMap]:
    """The two path maps of the ``kappa = 0`` chain: ``sigma_1`` resp. ``sigma_2`` kept."""
    e = math.exp(-2 * gamma * t)
    return PauliDiagonalMap(1.0, 1.0, e, e), PauliDiagonalMap(1.0, e, 1.0, e)


def mutual_information_continuous(rho_ss, t: float, gamma: float = 1.0) -> float:
    """``S(Lambda_t (x) Lambda_t [rho]) - 1/4 sum_ij S(phi_i (x) phi_j [rho])`` at ``kappa = 0``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    rho = qmat.check_density_matrix(rho_ss)
    if rho.shape != (4, 4):
        raise ValueError("rho_ss must be a two-qubit density matrix")
    b1, b2 = branch_maps(t, gamma)
    lams = np.array([b1.array, b2.array])
    avg = lams.mean(axis=0)
    c = qmat.pauli_coefficients2(rho)
    ia = np.array([0, 0, 1, 1])
    ib = np.array([0, 1, 0, 1])
    s_cond = _entropies(_product_apply_batch(lams[ia], lams[ib], c))
    s_avg = _entropies(_product_apply_batch(avg[None], avg[None], c))[0]
    return float(s_avg - s_cond.mean())
