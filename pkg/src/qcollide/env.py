"""Four-symbol stationary Markov chain used as a classical collisional environment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from . import qmat

PARAM_TOL = 1e-12
STOCHASTIC_TOL = 1e-12
MAX_UNPRUNED_LENGTH = 12


class ChainConstraintError(ValueError):
    """Raised when chain parameters violate their defining inequalities."""


@dataclass(frozen=True)
class ChainParams:
    p0: float
    p: float
    r: float
    delta: float

    def __post_init__(self):
        p0, p, r, d = self.p0, self.p, self.r, self.delta
        tol = PARAM_TOL
        checks = [
            (p0 >= -tol, f"p0 >= 0 (p0={p0})"),
            (r >= -tol, f"r >= 0 (r={r})"),
            (d >= -tol, f"0 <= delta (delta={d})"),
            (d <= p + tol, f"delta <= p (delta={d}, p={p})"),
            (p <= 0.5 + tol, f"p <= 1/2 (p={p})"),
            (abs(p0 + 2 * p + r - 1) <= tol, f"p0 + 2p + r = 1 (sum={p0 + 2 * p + r})"),
        ]
        for ok, what in checks:
            if not ok:
                raise ChainConstraintError(f"chain parameter constraint violated: {what}")

    @classmethod
    def from_p_r_delta(cls, p: float, r: float, delta: float) -> ChainParams:
        return cls(p0=1 - 2 * p - r, p=p, r=r, delta=delta)

    @property
    def q(self) -> float:
        """Correlation ratio delta / p."""
        return self.delta / self.p if self.p > 0 else 0.0

    @property
    def alpha(self) -> float:
        return 1 - 2 * (self.p + self.r)

    @property
    def beta(self) -> float:
        return math.sqrt(self.alpha ** 2 + 16 * self.p * self.delta)


@dataclass(frozen=True)
class MarkovChainEnv:
    params: ChainParams
    T: np.ndarray = field(repr=False)
    stationary: np.ndarray = field(repr=False)


class Path(NamedTuple):
    symbols: tuple[int, ...]
    probability: float


@dataclass
class PathSet:
    """Enumerated paths of a fixed length (rows of ``symbols``)."""

    symbols: np.ndarray
    probabilities: np.ndarray
    pruned_mass: float = 0.0

    def __len__(self) -> int:
        return len(self.probabilities)

    def __iter__(self) -> Iterator[Path]:
        for s, pr in zip(self.symbols, self.probabilities):
            yield Path(tuple(int(x) for x in s), float(pr))


def transition_matrix(params: ChainParams) -> np.ndarray:
    p0, p, r, d = params.p0, params.p, params.r, params.delta
    return np.array(
        [
            [p0, p0, p0, p0],
            [p, p + d, p - d, p],
            [p, p - d, p + d, p],
            [r, r, r, r],
        ]
    )


def build_chain(params: ChainParams) -> MarkovChainEnv:
    T = transition_matrix(params)
    stationary = np.array([params.p0, params.p, params.p, params.r])
    col_err = np.max(np.abs(T.sum(axis=0) - 1))
    if col_err > STOCHASTIC_TOL:
        raise ChainConstraintError(f"transition matrix columns do not sum to 1 (err {col_err:.2e})")
    fix_err = np.max(np.abs(T @ stationary - stationary))
    if fix_err > STOCHASTIC_TOL:
        raise ChainConstraintError(f"stationary vector is not invariant (err {fix_err:.2e})")
    T.setflags(write=False)
    stationary.setflags(write=False)
    return MarkovChainEnv(params, T, stationary)


def path_probability(env: MarkovChainEnv, symbols: Sequence[int]) -> float:
    symbols = list(symbols)
    if not symbols:
        raise ValueError("path must contain at least one symbol")
    if any(not 0 <= int(s) <= 3 for s in symbols):
        raise ValueError(f"path symbols must lie in 0..3, got {symbols}")
    prob = float(env.stationary[symbols[0]])
    for prev, nxt in zip(symbols, symbols[1:]):
        prob *= env.T[nxt, prev]
    return prob


def enumerate_paths(env: MarkovChainEnv, n: int, prune_below: float = 0.0) -> PathSet:
    """All length-``n`` paths with probability strictly above ``prune_below``.

    Zero-probability paths are always dropped. The mass of paths removed by a
    positive threshold is returned in ``pruned_mass``.
    """
    if n < 1:
        raise ValueError("path length must be at least 1")
    if n > MAX_UNPRUNED_LENGTH and prune_below <= 0:
        raise ValueError(
            f"enumerating 4**{n} paths exceeds the guard (n <= {MAX_UNPRUNED_LENGTH}); "
            "pass prune_below > 0 to enable pruning"
        )
    symbols = np.arange(4, dtype=np.int8)[:, None]
    probs = env.stationary.copy()
    pruned = 0.0
    for step in range(n):
        if step > 0:
            last = symbols[:, -1]
            probs = (env.T[:, last] * probs[None, :]).T.ravel()
            symbols = np.concatenate(
                [np.repeat(symbols, 4, axis=0), np.tile(np.arange(4, dtype=np.int8), len(last))[:, None]],
                axis=1,
            )
        keep = probs > prune_below
        pruned += float(probs[~keep].sum())
        symbols, probs = symbols[keep], probs[keep]
    return PathSet(symbols, probs, pruned)


def binary_entropy(x: float) -> float:
    return qmat.entropy_from_eigenvalues([x, 1 - x])


def neighbor_mutual_information(params: ChainParams) -> float:
    """Mutual information (nats) between two successive chain sites."""
    if params.p <= 0:
        raise ValueError("neighbor mutual information needs p > 0")
    q = params.q
    if q > 1 + PARAM_TOL:
        raise ValueError(f"correlation ratio delta/p = {q} exceeds 1")
    q = min(q, 1.0)
    return 4 * params.p ** 2 * (math.log(2) - binary_entropy((1 + q) / 2))


def two_site_state(env: MarkovChainEnv) -> np.ndarray:
    """Diagonal 16x16 density matrix of two neighbouring sites (earlier site first)."""
    joint = env.T * env.stationary[None, :]  # joint[next, prev]
    return np.diag(joint.T.ravel()).astype(complex)


def random_chain_params(rng: np.random.Generator) -> ChainParams:
    """Draw a valid chain: ``p`` uniform in [0, 1/2), then ``r``, then ``delta``."""
    p = float(rng.uniform(0.0, 0.5))
    r = float(rng.uniform(0.0, 1 - 2 * p))
    delta = float(rng.uniform(0.0, p))
    return ChainParams(max(1 - 2 * p - r, 0.0), p, r, delta)
