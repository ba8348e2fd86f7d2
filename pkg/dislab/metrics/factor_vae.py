"""FactorVAE metric: majority vote over lowest-variance latent dimensions."""

from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np

from dislab.exceptions import DataError

Sampler = Callable[[int, np.random.Generator, int], np.ndarray]

DEFAULT_VOTES = 10000
DEFAULT_SUBSET = 64
DEFAULT_PRUNE_FRACTION = 0.05


@dataclass
class FactorVAEResult:
    """Score, the (d, m) vote matrix and the kept latent dimensions."""

    score: float
    votes: np.ndarray
    active_dims: list[int]
    global_std: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        """Serialize to JSON-compatible form."""
        return {
            "score": self.score,
            "votes": self.votes.tolist(),
            "active_dims": self.active_dims,
            "global_std": self.global_std.tolist(),
        }


def factor_vae_score(
    sampler: Sampler,
    reference_codes: np.ndarray,
    n_factors: int,
    rng: np.random.Generator,
    n_votes: int = DEFAULT_VOTES,
    subset_size: int = DEFAULT_SUBSET,
    prune_fraction: float = DEFAULT_PRUNE_FRACTION,
) -> FactorVAEResult:
    """Accuracy of the majority-vote classifier from argmin-variance dimension to factor.

    Every vote fixes a random factor, draws ``subset_size`` codes sharing one
    level of it, divides them by the global per-dimension std of
    ``reference_codes`` and votes for the dimension of least variance.
    Dimensions whose std is below ``prune_fraction`` times the mean std never
    receive votes.

    Raises:
        DataError: If every dimension is pruned ("collapsed representation").
    """
    global_std = reference_codes.std(axis=0)
    mean_std = float(global_std.mean())
    active = np.flatnonzero((global_std > 0) & (global_std >= prune_fraction * mean_std))
    if active.size == 0:
        collapsed_msg = "collapsed representation: every latent dimension was pruned"
        raise DataError(collapsed_msg)

    votes = np.zeros((reference_codes.shape[1], n_factors), dtype=np.int64)
    for _ in range(n_votes):
        factor = int(rng.integers(n_factors))
        codes = sampler(factor, rng, subset_size)
        normalized = codes[:, active] / global_std[active]
        dim = int(active[np.argmin(normalized.var(axis=0, ddof=1))])
        votes[dim, factor] += 1

    score = float(votes.max(axis=1).sum() / votes.sum())
    return FactorVAEResult(
        score=score, votes=votes, active_dims=active.tolist(), global_std=global_std
    )
