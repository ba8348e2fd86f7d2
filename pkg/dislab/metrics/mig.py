"""Mutual Information Gap."""

from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from loguru import logger

from dislab.exceptions import ConfigurationError
from dislab.metrics.mi import DEFAULT_BINS, discrete_entropy, mutual_info_matrix
from dislab.metrics.sample import RepresentationSample, clamp_unit

MigDenominator = Literal["paper", "entropy"]


@dataclass
class MIGResult:
    """MIG score with its per-factor terms and the MI matrix."""

    score: float
    raw_score: float
    gaps: list[float]
    mutual_information: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        """Serialize to JSON-compatible form."""
        return {
            "score": self.score,
            "raw_score": self.raw_score,
            "gaps": self.gaps,
            "mutual_information": self.mutual_information.tolist(),
        }


def mig(
    sample: RepresentationSample,
    bins: int = DEFAULT_BINS,
    denominator: MigDenominator = "paper",
) -> MIGResult:
    """Mean over factors of the normalized gap between the two most informative latents.

    With the ``paper`` denominator each gap is divided by the factor's total
    MI over all latents; ``entropy`` divides by the factor's entropy instead.
    A factor whose denominator is zero contributes 0.

    Raises:
        ConfigurationError: If there are fewer than two latents.
    """
    if sample.n_latents < 2:
        few_latents_msg = f"MIG needs at least 2 latents, got {sample.n_latents}"
        raise ConfigurationError(few_latents_msg)
    if denominator not in ("paper", "entropy"):
        denom_msg = f"Unknown MIG denominator '{denominator}'"
        raise ConfigurationError(denom_msg)

    matrix = mutual_info_matrix(sample.codes, sample.factor_indices, bins)
    gaps = []
    for j, name in enumerate(sample.space.names):
        column = np.sort(matrix[:, j])[::-1]
        if denominator == "paper":
            total = float(matrix[:, j].sum())
        else:
            total = discrete_entropy(sample.factor_indices[:, j])
        if total <= 0:
            logger.warning(f"Factor {name} has zero {denominator} MIG denominator; its term is 0")
            gaps.append(0.0)
            continue
        gaps.append(float((column[0] - column[1]) / total))
    raw = float(np.mean(gaps))
    return MIGResult(score=clamp_unit(raw), raw_score=raw, gaps=gaps, mutual_information=matrix)
