"""Discrete-time reduced dynamics of a qubit colliding with the Markov chain.

Each chain symbol ``k`` selects a unital Pauli map ``phi_k``; ``phi_0`` is the
identity and, for ``k = 1, 2, 3``, ``phi_k`` keeps ``sigma_k`` and multiplies
the other two Pauli matrices by ``varphi``.  The reduced map after ``n``
collisions is the path average of the composed maps.  Three routes to its
eigenvalues are provided: an explicit path sum, the memory recurrence, and
(for ``varphi = -1``) a closed form.
"""

from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import pauli
from .env import ChainParams, MarkovChainEnv, build_chain, enumerate_paths
from .pauli import PauliDiagonalMap

BOUNDARY_BAND = 1e-9
DEFAULT_SCAN_DEPTH = 40
FIXED_POINT_TOL = 1e-12
MAX_BRUTEFORCE_STEPS = 12
UNDERFLOW_GUARD = 1e-250


class OutsideAnalyticRegime(UserWarning):
    """The analytic results assume alpha = 1 - 2(p + r) > 0."""


class DivisibilityMismatch(RuntimeError):
    """Analytic and numerical divisibility verdicts disagree off the boundary."""


def collision_eigenvalues(varphi: float) -> np.ndarray:
    """Row ``k`` holds the Pauli eigenvalues of ``phi_k``."""
    mu = np.ones((4, 4))
    for k in (1, 2, 3):
        for j in (1, 2, 3):
            if j != k:
                mu[k, j] = varphi
    return mu


@dataclass(frozen=True)
class CollisionModel:
    env: MarkovChainEnv
    varphi: float = -1.0
    mu: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not abs(self.varphi) <= 1:
            raise ValueError(f"|varphi| must be <= 1, got {self.varphi}")
        object.__setattr__(self, "mu", collision_eigenvalues(self.varphi))

    @classmethod
    def from_params(cls, params: ChainParams, varphi: float = -1.0) -> CollisionModel:
        return cls(build_chain(params), varphi)

    @property
    def params(self) -> ChainParams:
        return self.env.params

    def collision_map(self, k: int) -> PauliDiagonalMap:
        return PauliDiagonalMap(self.mu[k])

    @property
    def is_unitary(self) -> bool:
        return self.varphi == -1.0


@dataclass(frozen=True)
class EigenvalueTrajectory:
    """Pauli eigenvalues ``lam[n]`` (sigma_1 = sigma_2 branch) and ``lam3[n]``."""

    params: ChainParams
    lam: np.ndarray
    lam3: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.lam) - 1

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def beta(self) -> float:
        return self.params.beta

    @property
    def gamma_hat(self) -> float:
        return (self.beta + self.alpha) / 2

    @property
    def delta_hat(self) -> float:
        return (self.beta - self.alpha) / 2

    def map(self, n: int) -> PauliDiagonalMap:
        return PauliDiagonalMap(1.0, self.lam[n], self.lam[n], self.lam3[n])


def bruteforce_eigenvalue_table(model: CollisionModel, n_max: int) -> np.ndarray:
    """Path-sum Pauli eigenvalues for every ``n <= n_max``, shape ``(n_max + 1, 4)``.

    Every path is carried explicitly: its probability times the product of the
    collision eigenvalues along it.  Paths are extended one symbol at a time so
    that all horizons come out of a single pass.
    """
    if n_max > MAX_BRUTEFORCE_STEPS:
        raise ValueError(f"brute-force path sum limited to n <= {MAX_BRUTEFORCE_STEPS}")
    env, mu = model.env, model.mu
    out = np.empty((n_max + 1, 4))
    out[0] = 1.0
    if n_max == 0:
        return out
    # factor[j, next, last] = T[next, last] * mu[next, j]
    factor = (env.T[None, :, :] * mu.T[:, :, None])[..., None]
    # weight[j, last, rest]: one entry per path, grouped by its latest symbol
    weight = (mu.T * env.stationary[None, :])[:, :, None]
    out[1] = weight.sum(axis=(1, 2))
    for n in range(2, n_max + 1):
        # sum over the final symbol without materialising the last level
        out[n] = np.einsum("jlr,jnl->j", weight, factor[..., 0])
        if n < n_max:
            weight = (weight[:, None, :, :] * factor).reshape(4, 4, -1)
    return out


def reduced_map_bruteforce(model: CollisionModel, n: int) -> PauliDiagonalMap:
    if n == 0:
        return PauliDiagonalMap.identity()
    return PauliDiagonalMap(bruteforce_eigenvalue_table(model, n)[n])


def eigenvalues_recurrence(model: CollisionModel, n_max: int) -> EigenvalueTrajectory:
    prm, phi = model.params, model.varphi
    p, r, d = prm.p, prm.r, prm.delta
    a = 1 - (p + r) * (1 - phi)
    b = p * d * (1 - phi) ** 2
    kernel = (1 + phi) * d
    lam = np.empty(n_max + 1)
    lam[0] = 1.0
    for n in range(1, n_max + 1):
        if n < 2:
            memory = 0.0
        elif kernel == 0:
            memory = lam[n - 2]  # only the j = n - 2 term survives (0**0 = 1)
        else:
            memory = float(np.dot(lam[: n - 1], kernel ** np.arange(n - 2, -1, -1)))
        lam[n] = a * lam[n - 1] + b * memory
    lam3 = (1 - 2 * p * (1 - phi)) ** np.arange(n_max + 1)
    return EigenvalueTrajectory(prm, lam, lam3)


def _check_alpha(params: ChainParams) -> None:
    if params.alpha <= 0:
        warnings.warn(
            f"alpha = {params.alpha:.3g} <= 0 lies outside the analytic regime",
            OutsideAnalyticRegime,
            stacklevel=3,
        )


def eigenvalues_unitary_closed_form(params: ChainParams, n) -> tuple:
    """``(lam_n, lam3_n)`` for unitary collisions (``varphi = -1``)."""
    _check_alpha(params)
    alpha, beta = params.alpha, params.beta
    if beta <= 0:
        raise ValueError("closed form needs beta > 0")
    n = np.asarray(n)
    lam = (beta + alpha) / (2 * beta) * ((beta + alpha) / 2) ** n + (beta - alpha) / (2 * beta) * (
        (alpha - beta) / 2
    ) ** n
    lam3 = (1 - 4 * params.p) ** n
    if lam.ndim == 0:
        return float(lam), float(lam3)
    return lam, lam3


def closed_form_trajectory(params: ChainParams, n_max: int) -> EigenvalueTrajectory:
    lam, lam3 = eigenvalues_unitary_closed_form(params, np.arange(n_max + 1))
    return EigenvalueTrajectory(params, np.asarray(lam, dtype=float), np.asarray(lam3, dtype=float))


def intertwiner(traj: EigenvalueTrajectory, n: int, m: int) -> PauliDiagonalMap:
    """``Lambda_n o Lambda_m^{-1}``."""
    if not 0 <= m <= n <= traj.n_max:
        raise ValueError(f"need 0 <= m <= n <= {traj.n_max}, got n={n}, m={m}")
    return pauli.compose(traj.map(n), pauli.inverse(traj.map(m)))


@dataclass(frozen=True)
class SemigroupDecomposition:
    weight_plus: float
    psi_plus: PauliDiagonalMap
    weight_minus: float
    psi_minus: PauliDiagonalMap

    def reconstruct(self, n: int) -> PauliDiagonalMap:
        return PauliDiagonalMap(
            self.weight_plus * pauli.power(self.psi_plus, n).array
            + self.weight_minus * pauli.power(self.psi_minus, n).array
        )


def semigroup_decomposition(params: ChainParams) -> SemigroupDecomposition:
    alpha, beta = params.alpha, params.beta
    if beta <= 0:
        raise ValueError("semigroup decomposition needs beta > 0")
    l3 = 1 - 4 * params.p
    plus = (alpha + beta) / 2
    minus = (alpha - beta) / 2
    return SemigroupDecomposition(
        weight_plus=(beta + alpha) / (2 * beta),
        psi_plus=PauliDiagonalMap(1.0, plus, plus, l3),
        weight_minus=(beta - alpha) / (2 * beta),
        psi_minus=PauliDiagonalMap(1.0, minus, minus, l3),
    )


# -- divisibility --------------------------------------------------------


def p_divisibility_margin(params: ChainParams) -> float:
    """``alpha (r + p) - 2 p delta``; non-negative iff P-divisible."""
    return params.alpha * (params.r + params.p) - 2 * params.p * params.delta


def cp_divisibility_margin(params: ChainParams) -> float:
    """``r alpha - 2 p delta``; non-negative iff CP-divisible."""
    return params.r * params.alpha - 2 * params.p * params.delta


def tensor_p_divisibility_margin(params: ChainParams) -> float:
    """Margin of the tensor-square P-divisibility inequality.

    Written as ``alpha (r + p) - alpha (1 - sqrt(1 - 4p(1 - 2p))) / 2 - 2 p delta``.
    The ``1 - sqrt`` sign is the one whose small-``p`` limit is ``Q <= 1/2``.
    """
    p, r, alpha = params.p, params.r, params.alpha
    root = math.sqrt(1 - 4 * p * (1 - 2 * p))
    return alpha * (r + p) - alpha * (1 - root) / 2 - 2 * p * params.delta


@dataclass(frozen=True)
class DivisibilityReport:
    params: ChainParams
    P: bool | None
    CP: bool | None
    tensorP: bool | None
    numeric_P: bool
    numeric_CP: bool
    numeric_tensorP: bool
    margins: dict
    steps_checked: int


def _step_intertwiner_eigenvalues(traj: EigenvalueTrajectory) -> np.ndarray:
    lam, lam3 = traj.lam, traj.lam3
    # eigenvalues decay geometrically; stop before they reach the subnormal range
    small = np.nonzero((np.abs(lam) < UNDERFLOW_GUARD) | (np.abs(lam3) < UNDERFLOW_GUARD))[0]
    n = int(small[0]) - 1 if len(small) else len(lam) - 1
    if n < 1:
        raise ValueError("reduced maps are not invertible (a Pauli eigenvalue vanishes)")
    lam, lam3 = lam[: n + 1], lam3[: n + 1]
    out = np.ones((n, 4))
    out[:, 1] = out[:, 2] = lam[1:] / lam[:-1]
    out[:, 3] = lam3[1:] / lam3[:-1]
    return out


def numerical_divisibility(
    model_or_traj, n_max: int = DEFAULT_SCAN_DEPTH, tol: float = pauli.POSITIVITY_TOL
) -> tuple[bool, bool, bool, int]:
    """Test every step intertwiner ``Lambda_{n,n-1}``, ``n <= n_max``.

    Positivity is read off the Pauli eigenvalues, complete positivity and
    tensor-square positivity off diagonalised Choi matrices.  Stops early once
    the step eigenvalues stop changing.
    """
    if isinstance(model_or_traj, EigenvalueTrajectory):
        traj = model_or_traj
    else:
        traj = eigenvalues_recurrence(model_or_traj, n_max)
    steps = _step_intertwiner_eigenvalues(traj)
    diffs = np.max(np.abs(np.diff(steps, axis=0)), axis=1)
    settled = np.nonzero(diffs < FIXED_POINT_TOL)[0]
    if len(settled):
        steps = steps[: settled[0] + 2]
    is_p = bool(np.all(np.max(np.abs(steps[:, 1:]), axis=1) <= 1 + tol))
    is_cp = bool(np.all(pauli._min_choi_eigenvalues(steps) >= -tol))
    is_tp = bool(np.all(pauli._min_choi_eigenvalues(steps ** 2) >= -tol))
    return is_p, is_cp, is_tp, len(steps)


def classify_divisibility(
    params: ChainParams, n_max: int = DEFAULT_SCAN_DEPTH, band: float = BOUNDARY_BAND
) -> DivisibilityReport:
    """Analytic P / CP / tensor-P divisibility for unitary collisions, cross-checked numerically.

    Outside the analytic regime (alpha <= 0) only the numerical verdicts are
    returned and the analytic fields are ``None``.
    """
    model = CollisionModel.from_params(params, -1.0)
    traj = eigenvalues_recurrence(model, n_max)
    num_p, num_cp, num_tp, checked = numerical_divisibility(traj, n_max)
    margins = {
        "P": p_divisibility_margin(params),
        "CP": cp_divisibility_margin(params),
        "tensorP": tensor_p_divisibility_margin(params),
    }
    if params.alpha <= 0:
        return DivisibilityReport(params, None, None, None, num_p, num_cp, num_tp, margins, checked)
    verdicts = {k: v >= 0 for k, v in margins.items()}
    numeric = {"P": num_p, "CP": num_cp, "tensorP": num_tp}
    for key, ana in verdicts.items():
        if ana != numeric[key] and abs(margins[key]) > band:
            raise DivisibilityMismatch(
                f"{key}-divisibility: analytic {ana} vs numerical {numeric[key]} "
                f"(margin {margins[key]:.3e}) at {params}"
            )
    return DivisibilityReport(
        params, verdicts["P"], verdicts["CP"], verdicts["tensorP"], num_p, num_cp, num_tp, margins, checked
    )


# -- path-map distributions ------------------------------------------------


def path_map_distribution(model: CollisionModel, n: int) -> list[tuple[PauliDiagonalMap, float]]:
    """Distinct composed collision maps after ``n`` steps with their total probability.

    The collision maps commute, so a path's composed map depends only on how
    often each symbol occurs.  A dynamic program over (last symbol, counts)
    aggregates paths without enumerating them.
    """
    env, mu = model.env, model.mu
    if n == 0:
        return [(PauliDiagonalMap.identity(), 1.0)]
    state: dict[tuple[int, tuple[int, int, int, int]], float] = {}
    for k in range(4):
        if env.stationary[k] > 0:
            c = [0, 0, 0, 0]
            c[k] = 1
            state[(k, tuple(c))] = float(env.stationary[k])
    for _ in range(n - 1):
        nxt: dict = defaultdict(float)
        for (last, counts), pr in state.items():
            for k in range(4):
                t = env.T[k, last]
                if t > 0:
                    c = list(counts)
                    c[k] += 1
                    nxt[(k, tuple(c))] += pr * t
        state = nxt
    by_counts: dict = defaultdict(float)
    for (_, counts), pr in state.items():
        by_counts[counts] += pr
    out = []
    for counts, pr in sorted(by_counts.items()):
        lam = np.prod(mu ** np.array(counts)[:, None], axis=0)
        out.append((PauliDiagonalMap(lam), pr))
    return out


def reduced_map(model: CollisionModel, n: int) -> PauliDiagonalMap:
    total = np.zeros(4)
    for m, pr in path_map_distribution(model, n):
        total += pr * m.array
    return PauliDiagonalMap(total)


def bruteforce_paths_maps(model: CollisionModel, n: int):
    """Explicit per-path maps ``(symbols, probability, map)``; small ``n`` only."""
    paths = enumerate_paths(model.env, n)
    for path in paths:
        lam = np.prod(model.mu[list(path.symbols)], axis=0)
        yield path.symbols, path.probability, PauliDiagonalMap(lam)
