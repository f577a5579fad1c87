"""Continuous-time dynamics obtained as the stroboscopic limit of the collision model.

With ``Delta = exp(-kappa tau) / 2``, ``p -> 1/2`` and ``varphi = exp(-2 gamma tau)``
the two equal Pauli eigenvalues solve

    d/dt lam = -gamma lam + gamma**2 int_0^t exp(-(kappa + gamma)(t - s)) lam_s ds

and ``lam3 = exp(-2 gamma t)``.

Generator convention: ``L_t[rho] = 1/2 sum_i gamma_i(t) (sigma_i rho sigma_i - rho)``,
so ``sigma_j`` decays at rate ``sum_{i != j} gamma_i``.  With ``gamma_1 = gamma_2 = gamma``
this gives ``d/dt lam = -Gamma_t lam`` with ``Gamma_t = gamma + gamma_3(t)`` and
``d/dt lam3 = -2 gamma lam3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import pauli
from .dynamics import CollisionModel, eigenvalues_recurrence
from .env import ChainParams
from .pauli import PauliDiagonalMap

VOLTERRA_TOL = 1e-6


class StepTooCoarse(RuntimeError):
    """The Richardson error estimate of the Volterra integrator exceeds the tolerance."""


@dataclass(frozen=True)
class ContinuousModel:
    gamma: float
    kappa: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not self.kappa >= 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")

    @property
    def K(self) -> float:
        return math.sqrt(self.kappa ** 2 + 4 * self.gamma ** 2) / 2

    @property
    def poles(self) -> tuple[float, float]:
        """Laplace poles ``(z_plus, z_minus)``, both <= 0."""
        c = -(self.kappa + 2 * self.gamma) / 2
        return c + self.K, c - self.K

    @property
    def slow_weight(self) -> float:
        """Weight of ``exp(z_plus t)`` in ``lam_t``."""
        return 0.5 + self.kappa / (4 * self.K)

    def map(self, t: float) -> PauliDiagonalMap:
        lam, lam3 = lambda_t(self, t)
        return PauliDiagonalMap(1.0, lam, lam, lam3)

    def intertwiner(self, t: float, s: float) -> PauliDiagonalMap:
        """``Lambda_t o Lambda_s^{-1}`` for ``t >= s``."""
        if t < s:
            raise ValueError(f"need t >= s, got t={t}, s={s}")
        return pauli.compose(self.map(t), pauli.inverse(self.map(s)))


def lambda_t(model: ContinuousModel, t):
    """``(lam_t, lam3_t)``; vectorised over ``t``.

    Written as a two-pole sum so that large ``t`` cannot overflow cosh/sinh.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("lambda_t needs t >= 0")
    zp, zm = model.poles
    a = model.slow_weight
    lam = a * np.exp(zp * t) + (1 - a) * np.exp(zm * t)
    lam3 = np.exp(-2 * model.gamma * t)
    if lam.ndim == 0:
        return float(lam), float(lam3)
    return lam, lam3


@dataclass(frozen=True)
class VolterraSolution:
    times: np.ndarray
    lam: np.ndarray
    error_estimate: float


def _rk4(model: ContinuousModel, h: float, n_steps: int) -> np.ndarray:
    g, k = model.gamma, model.kappa
    # y = (lam, m) with m_t = int_0^t exp(-(kappa + gamma)(t - s)) lam_s ds
    A = np.array([[-g, g * g], [1.0, -(k + g)]])
    y = np.array([1.0, 0.0])
    out = np.empty(n_steps + 1)
    out[0] = 1.0
    for i in range(n_steps):
        k1 = A @ y
        k2 = A @ (y + h / 2 * k1)
        k3 = A @ (y + h / 2 * k2)
        k4 = A @ (y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = y[0]
    return out


def volterra_oracle(model: ContinuousModel, t_max: float, step: float, tol: float = VOLTERRA_TOL) -> VolterraSolution:
    """Integrate the memory equation with classic RK4 on an exact two-variable embedding.

    The error is estimated by Richardson extrapolation against a half-step run;
    the returned samples come from the half-step run at the requested grid.
    """
    if not step > 0:
        raise ValueError("step must be > 0")
    if not t_max >= 0:
        raise ValueError("t_max must be >= 0")
    n = int(round(t_max / step))
    if abs(n * step - t_max) > 1e-9 * max(1.0, t_max):
        raise ValueError(f"t_max={t_max} is not a multiple of step={step}")
    coarse = _rk4(model, step, n)
    fine = _rk4(model, step / 2, 2 * n)[::2]
    err = float(np.max(np.abs(coarse - fine)) / 15) if n else 0.0
    if err > tol:
        raise StepTooCoarse(f"Richardson error estimate {err:.2e} exceeds {tol:.0e}; reduce the step")
    return VolterraSolution(np.arange(n + 1) * step, fine, err)


@dataclass(frozen=True)
class Rates:
    t: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray
    Gamma: np.ndarray


def rates(model: ContinuousModel, t) -> Rates:
    """Canonical rates at ``t > 0`` (``gamma_3`` extends continuously to 0 at ``t = 0``)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("rates need t >= 0")
    g, k, K = model.gamma, model.kappa, model.K
    th = np.tanh(K * t)
    g3 = -2 * g * g * th / (2 * K + k * th)
    const = np.full_like(t, g)
    return Rates(t, const, const.copy(), g3, g + g3)


def stroboscopic_params(model: ContinuousModel, tau: float) -> tuple[ChainParams, float]:
    """Chain parameters and ``varphi`` of the discrete model at collision time ``tau``."""
    if not tau > 0:
        raise ValueError("tau must be > 0")
    prm = ChainParams(p0=0.0, p=0.5, r=0.0, delta=math.exp(-model.kappa * tau) / 2)
    return prm, math.exp(-2 * model.gamma * tau)


@dataclass(frozen=True)
class ConvergenceRow:
    tau: float
    n: int
    lam_discrete: float
    lam3_discrete: float
    error: float
    error3: float


def stroboscopic_convergence(model: ContinuousModel, t: float, taus) -> list[ConvergenceRow]:
    """Discrete eigenvalues at ``n = round(t / tau)`` against the continuous ones."""
    if not t > 0:
        raise ValueError("t must be > 0")
    lam_c, lam3_c = lambda_t(model, t)
    rows = []
    for tau in taus:
        prm, varphi = stroboscopic_params(model, tau)
        n = int(round(t / tau))
        traj = eigenvalues_recurrence(CollisionModel.from_params(prm, varphi), n)
        rows.append(
            ConvergenceRow(
                float(tau), n, float(traj.lam[n]), float(traj.lam3[n]),
                abs(traj.lam[n] - lam_c), abs(traj.lam3[n] - lam3_c),
            )
        )
    return rows


@dataclass(frozen=True)
class SemigroupBranch:
    weight: float
    rate: float  # decay rate of the sigma_1, sigma_2 eigenvalue
    rate3: float
    completely_positive: bool

    def map(self, t: float) -> PauliDiagonalMap:
        lam = math.exp(-self.rate * t)
        return PauliDiagonalMap(1.0, lam, lam, math.exp(-self.rate3 * t))


@dataclass(frozen=True)
class TwoSemigroups:
    slow: SemigroupBranch
    fast: SemigroupBranch

    @property
    def a(self) -> float:
        return self.slow.weight

    def map(self, t: float) -> PauliDiagonalMap:
        return PauliDiagonalMap(
            self.slow.weight * self.slow.map(t).array + self.fast.weight * self.fast.map(t).array
        )


def _branch_is_cp(rate: float, rate3: float, times) -> bool:
    lams = np.array([[1.0, math.exp(-rate * s), math.exp(-rate * s), math.exp(-rate3 * s)] for s in times])
    return bool(np.all(pauli._min_choi_eigenvalues(lams) >= -pauli.POSITIVITY_TOL))


def convex_two_semigroups(model: ContinuousModel, cp_times=None) -> TwoSemigroups:
    """``Lambda_t`` as a convex mix of two Pauli semigroups.

    The weight ``a = 1/2 + kappa / (2 sqrt(kappa^2 + 4 gamma^2))`` goes with the slow
    pole.  Complete positivity of each branch is decided from its Choi matrix on
    ``cp_times`` rather than assumed.
    """
    if cp_times is None:
        cp_times = np.linspace(0.01, 10.0, 200)
    zp, zm = model.poles
    r3 = 2 * model.gamma
    a = model.slow_weight
    slow = SemigroupBranch(a, abs(zp), r3, _branch_is_cp(abs(zp), r3, cp_times))
    fast = SemigroupBranch(1 - a, abs(zm), r3, _branch_is_cp(abs(zm), r3, cp_times))
    return TwoSemigroups(slow, fast)
