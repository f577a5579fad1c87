"""Backflow witnesses: Helstrom trajectories, the symmetric-projector witness,
ensemble quantumness of correlations and the classical no-go check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from . import pauli, qmat
from .ctime import ContinuousModel
from .dynamics import CollisionModel, EigenvalueTrajectory, eigenvalues_recurrence
from .env import ChainParams
from .pauli import PauliDiagonalMap

REVIVAL_THRESHOLD = 1e-9
OPTIMIZER_SLACK = 1e-6
STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class HelstromEnsemble:
    mu: float
    rho: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 0 <= self.mu <= 1:
            raise ValueError(f"bias mu must lie in [0, 1], got {self.mu}")
        rho = qmat.check_density_matrix(self.rho)
        sigma = qmat.check_density_matrix(self.sigma)
        if rho.shape != sigma.shape:
            raise ValueError(f"state dimensions differ: {rho.shape} vs {sigma.shape}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "sigma", sigma)

    @property
    def helstrom_matrix(self) -> np.ndarray:
        return self.mu * self.rho - (1 - self.mu) * self.sigma

    def evolved(self, m: PauliDiagonalMap) -> HelstromEnsemble:
        """Both states pushed through ``m`` (or ``m (x) m`` for two qubits)."""
        return HelstromEnsemble(self.mu, _apply_power(m, self.rho), _apply_power(m, self.sigma))


def _apply_power(m: PauliDiagonalMap, x: np.ndarray) -> np.ndarray:
    if x.shape == (2, 2):
        return pauli.apply(m, x)
    return pauli.apply_product(m, m, x)


def _map_source(source) -> Callable[[float], PauliDiagonalMap]:
    if isinstance(source, EigenvalueTrajectory):
        return lambda n: source.map(int(n))
    if isinstance(source, ContinuousModel):
        return source.map
    if callable(source):
        return source
    raise TypeError("source must be an EigenvalueTrajectory, a ContinuousModel or a callable")


def _norms_batch(lams: np.ndarray, x: np.ndarray, tensor_power: int) -> np.ndarray:
    if tensor_power == 1:
        c = qmat.pauli_coefficients(x)
        mats = np.einsum("tk,kab->tab", lams * c[None], qmat.PAULI)
    else:
        c = qmat.pauli_coefficients2(x)
        scaled = lams[:, :, None] * lams[:, None, :] * c[None]
        mats = np.einsum("tij,ijab->tab", scaled, qmat.PAULI2)
    mats = (mats + np.conj(np.swapaxes(mats, -1, -2))) / 2
    return np.sum(np.abs(np.linalg.eigvalsh(mats)), axis=-1)


@dataclass(frozen=True)
class HelstromSeries:
    times: np.ndarray
    norms: np.ndarray
    diffs: np.ndarray

    def revivals(self, threshold: float = REVIVAL_THRESHOLD) -> np.ndarray:
        """Indices ``k`` with ``norms[k + 1] - norms[k] > threshold``."""
        return np.nonzero(self.diffs > threshold)[0]

    def has_revival(self, threshold: float = REVIVAL_THRESHOLD) -> bool:
        return len(self.revivals(threshold)) > 0

    def revival_after_decrease(self, threshold: float = REVIVAL_THRESHOLD) -> bool:
        dec = np.nonzero(self.diffs < 0)[0]
        return bool(len(dec)) and bool(np.any(self.diffs[dec[0] + 1 :] > threshold))


def helstrom_trajectory(source, ensemble: HelstromEnsemble, tensor_power: int, times) -> HelstromSeries:
    """``||(Lambda or Lambda (x) Lambda)[Delta_mu]||_1`` at ``times`` and its increments."""
    if tensor_power not in (1, 2):
        raise ValueError("tensor_power must be 1 or 2")
    dim = ensemble.rho.shape[0]
    if dim != 2 ** tensor_power:
        raise ValueError(f"ensemble dimension {dim} does not match tensor_power {tensor_power}")
    get = _map_source(source)
    times = np.asarray(times)
    lams = np.array([get(t).array for t in times]).reshape(len(times), 4)
    norms = _norms_batch(lams, ensemble.helstrom_matrix, tensor_power)
    return HelstromSeries(times, norms, np.diff(norms))


# -- perturbative witnesses --------------------------------------------------


def _unitary_step(params: ChainParams, n: int) -> PauliDiagonalMap:
    if n < 1:
        raise ValueError("step intertwiner needs n >= 1")
    traj = eigenvalues_recurrence(CollisionModel.from_params(params, -1.0), n)
    lam = traj.lam[n] / traj.lam[n - 1]
    lam3 = traj.lam3[n] / traj.lam3[n - 1]
    return PauliDiagonalMap(1.0, lam, lam, lam3)


def symmetric_projector_norm(step: PauliDiagonalMap) -> float:
    """``||step (x) step [P2+]||_1`` from the closed-form eigenvalues.

    The image is Bell diagonal with eigenvalues ``(1 - l3^2)/4`` (twice) and
    ``(1 + l3^2 +- 2 l^2)/4``.
    """
    _, l1, l2, l3 = step.lam
    if abs(l1 - l2) > 1e-15:
        raise ValueError("expects equal sigma_1 and sigma_2 eigenvalues")
    a, b = l1 * l1, l3 * l3
    return (2 * abs(1 - b) + abs(1 + b + 2 * a) + abs(1 + b - 2 * a)) / 4


@dataclass(frozen=True)
class SymmetricProjectorWitness:
    n: int
    exact: float
    leading_order: float


def symmetric_projector_witness(params: ChainParams, n: int) -> SymmetricProjectorWitness:
    """``||Lambda_{n,n-1} (x) Lambda_{n,n-1} [P2+]||_1 - 1`` for unitary collisions at ``r = 0``."""
    if abs(params.r) > 1e-15:
        raise ValueError("symmetric projector witness assumes r = 0")
    step = _unitary_step(params, n)
    return SymmetricProjectorWitness(
        n, symmetric_projector_norm(step) - 1, 4 * params.p ** 2 * (2 * params.q - 1)
    )


@dataclass(frozen=True)
class SingleQubitExpansion:
    x: np.ndarray
    norm_sq_exact: float
    norm_sq_expansion: float
    trace_norm_change: float

    @property
    def residual(self) -> float:
        return self.norm_sq_exact - self.norm_sq_expansion


def single_qubit_expansion(params: ChainParams, X, n: int = 2) -> SingleQubitExpansion:
    """Bloch-part squared norm of ``Lambda_{n,n-1}[X]`` against its second-order expansion.

    ``||y||^2 = ||x||^2 - 4p (x1^2 + x2^2 + 2 x3^2) + 4p^2 ((1 + 2Q)(x1^2 + x2^2) + 4 x3^2) + O(p^3)``
    with ``X = x0 + x . sigma`` and ``y`` the image Bloch part.
    """
    if abs(params.r) > 1e-15:
        raise ValueError("expansion assumes r = 0")
    X = qmat.as_hermitian(X)
    if X.shape != (2, 2):
        raise ValueError("X must be a 2x2 Hermitian matrix")
    step = _unitary_step(params, n)
    x = qmat.pauli_coefficients(X).real
    y = step.array * x
    p, q = params.p, params.q
    perp, par = x[1] ** 2 + x[2] ** 2, x[3] ** 2
    expansion = perp + par - 4 * p * (perp + 2 * par) + 4 * p * p * ((1 + 2 * q) * perp + 4 * par)
    change = qmat.trace_norm(pauli.apply(step, X)) - qmat.trace_norm(X)
    return SingleQubitExpansion(x, float(y[1:] @ y[1:]), float(expansion), change)


# -- ensemble quantumness of correlations -------------------------------------


@dataclass(frozen=True)
class MeasurementPair:
    """Local projective measurements given by Bloch directions (polar, azimuth) in radians."""

    theta1: float
    phi1: float
    theta2: float
    phi2: float

    @property
    def directions(self) -> np.ndarray:
        t = np.array([self.theta1, self.theta2])
        f = np.array([self.phi1, self.phi2])
        return np.stack([np.sin(t) * np.cos(f), np.sin(t) * np.sin(f), np.cos(t)], axis=1)

    def projectors(self) -> list[np.ndarray]:
        out = []
        for nvec in self.directions:
            ns = np.einsum("k,kab->ab", nvec, qmat.PAULI[1:])
            out.append([(qmat.I2 + ns) / 2, (qmat.I2 - ns) / 2])
        return [np.kron(a, b) for a in out[0] for b in out[1]]

    def dephase(self, rho) -> np.ndarray:
        rho = qmat.as_matrix(rho)
        return sum(P @ rho @ P for P in self.projectors())


def _basis_unitaries(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Columns are the eigenvectors of ``n . sigma`` for each direction."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    e = np.exp(1j * phi)
    u = np.empty(theta.shape + (2, 2), dtype=complex)
    u[..., 0, 0], u[..., 1, 0] = c, e * s
    u[..., 0, 1], u[..., 1, 1] = -np.conj(e) * s, c
    return u


def _disturbances(states: np.ndarray, weights: np.ndarray, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """``sum_i w_i ||rho_i - P1 (x) P2 [rho_i]||_1`` for each basis pair ``(u1[k], u2[k])``.

    In the rotated basis ``M = B^dag rho B`` the disturbance is the trace norm
    of the off-diagonal part of ``M``.
    """
    b = np.einsum("kac,kbd->kabcd", u1, u2).reshape(len(u1), 1, 4, 4)
    m = np.swapaxes(b.conj(), -1, -2) @ states[None] @ b
    idx = np.arange(4)
    m[..., idx, idx] = 0
    norms = np.sum(np.abs(np.linalg.eigvalsh(m)), axis=-1)
    return norms @ weights


@dataclass(frozen=True)
class QuantumnessResult:
    value: float
    measurement: MeasurementPair
    grid_value: float


def ensemble_quantumness(
    ensemble: HelstromEnsemble, n_theta: int = 12, n_phi: int = 24, refine: bool = True
) -> QuantumnessResult:
    """``1/2 min sum_i mu_i ||rho_i - P1 (x) P2 [rho_i]||_1`` over local projective measurements.

    A deterministic grid over one hemisphere per qubit (a direction and its
    antipode define the same basis) is followed by Nelder-Mead refinement.
    """
    if ensemble.rho.shape != (4, 4):
        raise ValueError("ensemble quantumness is defined for two-qubit ensembles")
    states, weights = [], []
    for w, st in ((ensemble.mu, ensemble.rho), (1 - ensemble.mu, ensemble.sigma)):
        # multiples of the identity are never disturbed
        if w > 0 and np.max(np.abs(st - np.trace(st) * np.eye(4) / 4)) > 1e-15:
            states.append(st)
            weights.append(w)
    if not states:
        return QuantumnessResult(0.0, MeasurementPair(0.0, 0.0, 0.0, 0.0), 0.0)
    states, weights = np.stack(states), np.array(weights)
    th = np.linspace(0, np.pi / 2, n_theta)
    ph = np.linspace(0, 2 * np.pi, n_phi, endpoint=False)
    T, F = np.meshgrid(th[1:], ph, indexing="ij")
    # the pole is a single direction whatever the azimuth
    T, F = np.concatenate([[0.0], T.ravel()]), np.concatenate([[0.0], F.ravel()])
    u = _basis_unitaries(T, F)
    k1, k2 = np.meshgrid(np.arange(len(T)), np.arange(len(T)), indexing="ij")
    k1, k2 = k1.ravel(), k2.ravel()
    vals = np.empty(len(k1))
    chunk = 8192
    for start in range(0, len(k1), chunk):
        sl = slice(start, start + chunk)
        vals[sl] = _disturbances(states, weights, u[k1[sl]], u[k2[sl]])
    best = int(np.argmin(vals))
    x0 = np.array([T[k1[best]], F[k1[best]], T[k2[best]], F[k2[best]]])
    grid_value = float(vals[best]) / 2
    value, x = grid_value, x0
    if refine:

        def f(z):
            uu = _basis_unitaries(np.array([z[0], z[2]]), np.array([z[1], z[3]]))
            return float(_disturbances(states, weights, uu[:1], uu[1:])[0]) / 2

        res = minimize(f, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        if res.fun < value:
            value, x = float(res.fun), res.x
    return QuantumnessResult(max(value, 0.0), MeasurementPair(*map(float, x)), grid_value)


@dataclass(frozen=True)
class BoundCheck:
    t: float
    tau: float
    lhs: float
    diamond: float
    quantumness: float
    rhs: float
    holds: bool


def quantumness_bound_check(
    source, ensemble: HelstromEnsemble, t: float, tau: float, slack: float = OPTIMIZER_SLACK, **opts
) -> BoundCheck:
    """Compare ``Delta D(t + tau, t)`` with ``2 ||Lambda_{t+tau,t}||_diamond^2 Q(ensemble at t)``."""
    if tau <= 0:
        raise ValueError("tau must be > 0")
    get = _map_source(source)
    m_t, m_next = get(t), get(t + tau)
    inter = pauli.compose(m_next, pauli.inverse(m_t))
    if not pauli.is_positive(inter):
        raise ValueError("the bound assumes a positive intertwiner (P-divisible dynamics)")
    series = helstrom_trajectory(lambda s: m_t if s == 0 else m_next, ensemble, 2, [0, 1])
    lhs = float(series.diffs[0])
    q = ensemble_quantumness(ensemble.evolved(m_t), **opts).value
    d = pauli.diamond_norm(inter)
    rhs = 2 * d * d * q
    if lhs > rhs + slack:
        raise RuntimeError(
            f"bound violated beyond optimizer slack at t={t}, tau={tau}: {lhs:.3e} > {rhs:.3e}; "
            "the quantumness minimisation likely failed"
        )
    return BoundCheck(float(t), float(tau), lhs, d, q, rhs, lhs <= rhs + slack)


# -- constructions -------------------------------------------------------------


def isotropic_state(a: float) -> np.ndarray:
    return (1 - a) * np.eye(4) / 4 + a * qmat.P2_PLUS


def preimage_ensemble(m: PauliDiagonalMap, a: float, bias: float | None = None) -> HelstromEnsemble:
    """Ensemble whose Helstrom matrix is mapped by ``m (x) m`` onto a multiple of ``P2+``.

    ``rho = (m^-1 (x) m^-1)[rho_a]`` with ``rho_a`` isotropic, ``sigma = I/4``.  The
    bias ``1/(2 - a)`` cancels the identity part; any other bias can be passed.
    """
    inv = pauli.inverse(m)
    rho0 = pauli.apply_product(inv, inv, isotropic_state(a))
    mu = 1 / (2 - a) if bias is None else bias
    return HelstromEnsemble(mu, rho0, np.eye(4, dtype=complex) / 4)


@dataclass(frozen=True)
class SeparableConstruction:
    a: float
    s: float
    ensemble: HelstromEnsemble
    min_pt_eigenvalue: float
    ppt: bool
    trajectory: HelstromSeries
    triggered: bool
    quantumness: float


def separable_sbfi_construction(
    a: float,
    s: float = math.atanh(0.5),
    bias: float | None = None,
    t_max: float = 3.0,
    step: float = 0.01,
    gamma: float = 1.0,
) -> SeparableConstruction:
    """Separable pair whose two-qubit Helstrom norm revives after time ``s``."""
    if not 0 < a <= math.exp(-4 * s) + 1e-15:
        raise ValueError(f"need 0 < a <= exp(-4 s) = {math.exp(-4 * s):.6g}, got a={a}")
    model = ContinuousModel(gamma, 0.0)
    ens = preimage_ensemble(model.map(s), a, bias)
    pt_min = float(np.linalg.eigvalsh(qmat.as_hermitian(qmat.partial_transpose(ens.rho)))[0])
    before = np.linspace(0.0, s, max(int(math.ceil(s / step)), 1), endpoint=False)
    after = s + step * np.arange(int(math.floor((t_max - s) / step)) + 1)
    times = np.concatenate([before, after])
    series = helstrom_trajectory(model, ens, 2, times)
    start = len(before)
    triggered = bool(np.any(series.diffs[start:] > REVIVAL_THRESHOLD))
    q = ensemble_quantumness(ens.evolved(model.map(s))).value
    return SeparableConstruction(a, s, ens, pt_min, pt_min >= -qmat.NEGATIVITY_TOL, series, triggered, q)


@dataclass(frozen=True)
class ClassicalReport:
    norms: np.ndarray
    max_increase: float
    monotone: bool


def classical_no_sbfi(T_family, x, tol: float = STOCHASTIC_TOL) -> ClassicalReport:
    """l1 norms of ``(T (x) T) x`` under successive column-stochastic steps."""
    mats = [np.asarray(T, dtype=float) for T in T_family]
    if not mats:
        raise ValueError("need at least one stochastic matrix")
    d = mats[0].shape[0]
    for T in mats:
        if T.shape != (d, d):
            raise ValueError("all matrices must be square and of equal size")
        if np.any(T < -tol) or np.max(np.abs(T.sum(axis=0) - 1)) > tol:
            raise ValueError("matrix is not column stochastic")
    X = np.asarray(x, dtype=float).reshape(d, d)
    norms = [np.abs(X).sum()]
    for T in mats:
        X = T @ X @ T.T  # (T (x) T) acting on the row-major vectorisation
        norms.append(np.abs(X).sum())
    norms = np.array(norms)
    inc = float(np.max(np.diff(norms))) if len(norms) > 1 else 0.0
    return ClassicalReport(norms, inc, inc <= tol)
