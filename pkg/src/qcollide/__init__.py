"""Open-qubit dynamics driven by a classical Markov-chain collisional environment."""

from .ctime import ContinuousModel, lambda_t
from .dynamics import CollisionModel, classify_divisibility, eigenvalues_recurrence, reduced_map
from .env import ChainParams, MarkovChainEnv, build_chain
from .pauli import PauliDiagonalMap
from .witness import HelstromEnsemble, ensemble_quantumness, helstrom_trajectory

__all__ = [
    "ChainParams",
    "CollisionModel",
    "ContinuousModel",
    "HelstromEnsemble",
    "MarkovChainEnv",
    "PauliDiagonalMap",
    "build_chain",
    "classify_divisibility",
    "eigenvalues_recurrence",
    "ensemble_quantumness",
    "helstrom_trajectory",
    "lambda_t",
    "reduced_map",
]
