"""Separated Attribute Predictability."""

from dataclasses import dataclass
from typing import Any

import numpy as np
from loguru import logger
from sklearn.linear_model import LinearRegression
from sklearn.metrics import balanced_accuracy_score, r2_score
from sklearn.tree import DecisionTreeClassifier

from dislab.exceptions import MetricError
from dislab.metrics.sample import RepresentationSample, clamp_unit
from dislab.utils import derive_seed

DEFAULT_SPLIT = 0.3
TREE_DEPTH = 3


@dataclass
class SAPResult:
    """SAP score, the (m, d) score matrix and the per-factor gaps.

    Rows of skipped factors are NaN and their gap is None.
    """

    score: float
    raw_score: float
    scores: np.ndarray
    gaps: list[float | None]
    skipped: list[str]

    def to_dict(self) -> dict[str, Any]:
        """Serialize to JSON-compatible form (NaN becomes None)."""
        return {
            "score": self.score,
            "raw_score": self.raw_score,
            "scores": [[None if np.isnan(v) else float(v) for v in row] for row in self.scores],
            "gaps": self.gaps,
            "skipped": self.skipped,
        }


def _single_feature_score(
    kind: str, x_train: np.ndarray, y_train: np.ndarray, x_test: np.ndarray,
    y_test: np.ndarray, seed: int,
) -> float:
    if kind == "categorical":
        tree = DecisionTreeClassifier(max_depth=TREE_DEPTH, random_state=seed % 2**32)
        tree.fit(x_train, y_train)
        return float(balanced_accuracy_score(y_test, tree.predict(x_test)))
    regression = LinearRegression().fit(x_train, y_train)
    return max(0.0, float(r2_score(y_test, regression.predict(x_test))))


def sap(
    sample: RepresentationSample, split_fraction: float = DEFAULT_SPLIT, seed: int = 0
) -> SAPResult:
    """Mean over factors of the gap between the two best single-latent predictors.

    A held-out ``split_fraction`` of the rows scores every (factor, latent)
    pair: R^2 of a 1-D least-squares fit for ordered factors (clamped at 0)
    and balanced accuracy of a depth-3 tree for categorical factors. Factors
    with a single level on either side are skipped with a warning.

    Raises:
        MetricError: If every factor is skipped or there are fewer than two latents.
    """
    if sample.n_latents < 2:
        few_latents_msg = f"SAP needs at least 2 latents, got {sample.n_latents}"
        raise MetricError(few_latents_msg)
    rng = np.random.default_rng(derive_seed(seed, "sap", "split"))
    order = rng.permutation(len(sample))
    n_test = round(len(sample) * split_fraction)
    test, train = order[:n_test], order[n_test:]
    values = sample.factor_values

    scores = np.full((sample.n_factors, sample.n_latents), np.nan)
    gaps: list[float | None] = []
    skipped: list[str] = []
    for j, factor in enumerate(sample.space.factors):
        target = sample.factor_indices[:, j] if factor.kind == "categorical" else values[:, j]
        if np.unique(target[train]).size < 2 or np.unique(target[test]).size < 2:
            logger.warning(f"SAP skips degenerate factor {factor.name} (single level present)")
            skipped.append(factor.name)
            gaps.append(None)
            continue
        fit_seed = derive_seed(seed, "sap", j)
        for i in range(sample.n_latents):
            column = sample.codes[:, i : i + 1]
            scores[j, i] = _single_feature_score(
                factor.kind, column[train], target[train], column[test], target[test], fit_seed
            )
        best = np.sort(scores[j])[::-1]
        gaps.append(float(best[0] - best[1]))

    kept = [gap for gap in gaps if gap is not None]
    if not kept:
        all_skipped_msg = "SAP skipped every factor"
        raise MetricError(all_skipped_msg)
    raw = float(np.mean(kept))
    return SAPResult(
        score=clamp_unit(raw), raw_score=raw, scores=scores, gaps=gaps, skipped=skipped
    )
