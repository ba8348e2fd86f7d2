"""Disentanglement, completeness and informativeness from regressor importances."""

import hashlib
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from scipy.stats import entropy
from sklearn.ensemble import RandomForestRegressor
from sklearn.linear_model import Lasso

from dislab.exceptions import ConfigurationError, MetricError
from dislab.metrics.sample import RepresentationSample, clamp_unit
from dislab.utils import derive_seed

ImportanceKind = Literal["forest", "l1"]


@dataclass(frozen=True)
class RegressorConfig:
    """Per-factor regressor used to derive importances."""

    importance: ImportanceKind = "forest"
    n_estimators: int = 10
    max_depth: int = 8
    lasso_alpha: float = 0.01
    test_fraction: float = 0.3


@dataclass
class ImportanceResult:
    """(d, m) importance matrix plus held-out errors of real and shuffled fits."""

    importances: np.ndarray
    errors: np.ndarray
    random_errors: np.ndarray


@dataclass
class DCIResult:
    """Aggregate DCI scores and their per-latent / per-factor terms."""

    disentanglement: float
    completeness: float
    informativeness: float
    per_latent_disentanglement: np.ndarray
    latent_weights: np.ndarray
    per_factor_completeness: np.ndarray
    per_factor_informativeness: np.ndarray
    importances: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        """Serialize to JSON-compatible form."""
        return {
            "disentanglement": self.disentanglement,
            "completeness": self.completeness,
            "informativeness": self.informativeness,
            "per_latent_disentanglement": self.per_latent_disentanglement.tolist(),
            "latent_weights": self.latent_weights.tolist(),
            "per_factor_completeness": self.per_factor_completeness.tolist(),
            "per_factor_informativeness": self.per_factor_informativeness.tolist(),
            "importances": self.importances.tolist(),
        }


def canonical_column_order(codes: np.ndarray) -> np.ndarray:
    """Column order determined by column contents alone."""
    keys = [
        hashlib.sha256(np.ascontiguousarray(codes[:, i], dtype=np.float64).tobytes()).hexdigest()
        for i in range(codes.shape[1])
    ]
    return np.asarray(sorted(range(codes.shape[1]), key=lambda i: (keys[i], i)), dtype=np.int64)


def _fit(
    config: RegressorConfig, x_train: np.ndarray, y_train: np.ndarray, seed: int
) -> RandomForestRegressor | Lasso:
    if config.importance == "forest":
        regressor = RandomForestRegressor(
            n_estimators=config.n_estimators,
            max_depth=config.max_depth,
            max_features="sqrt",
            random_state=seed % 2**32,
        )
    else:
        regressor = Lasso(alpha=config.lasso_alpha, random_state=seed % 2**32)
    return regressor.fit(x_train, y_train)


def _normalized_error(regressor: Any, x: np.ndarray, y: np.ndarray) -> float:
    variance = float(np.var(y))
    mse = float(np.mean((regressor.predict(x) - y) ** 2))
    return mse / variance if variance > 0 else 0.0


def estimate_importances(
    sample: RepresentationSample, config: RegressorConfig | None = None, seed: int = 0
) -> ImportanceResult:
    """Fit one regressor per factor on all latents and read off importances.

    Latent columns are presented to the regressors in a content-derived
    order, so permuting the columns permutes the importances and nothing
    else. ``forest`` uses the normalized variance reduction of a random
    forest; ``l1`` uses absolute Lasso coefficients on standardized codes.
    Errors are held-out MSE over the factor variance; random errors come from
    the same fit on row-shuffled latents.

    Raises:
        ConfigurationError: If the importance kind is unknown.
    """
    config = config or RegressorConfig()
    if config.importance not in ("forest", "l1"):
        kind_msg = f"Unknown importance kind '{config.importance}', expected 'forest' or 'l1'"
        raise ConfigurationError(kind_msg)

    order = canonical_column_order(sample.codes)
    codes = sample.codes[:, order]
    if config.importance == "l1":
        std = codes.std(axis=0)
        codes = (codes - codes.mean(axis=0)) / np.where(std > 0, std, 1.0)
    values = sample.factor_values

    rng = np.random.default_rng(derive_seed(seed, "dci", "split"))
    rows = rng.permutation(len(sample))
    n_test = round(len(sample) * config.test_fraction)
    test, train = rows[:n_test], rows[n_test:]
    shuffled = rng.permutation(train)

    canonical = np.zeros((sample.n_latents, sample.n_factors))
    errors = np.zeros(sample.n_factors)
    random_errors = np.zeros(sample.n_factors)
    for j in range(sample.n_factors):
        fit_seed = derive_seed(seed, "dci", j)
        y = values[:, j]
        regressor = _fit(config, codes[train], y[train], fit_seed)
        if config.importance == "forest":
            canonical[:, j] = regressor.feature_importances_
        else:
            canonical[:, j] = np.abs(regressor.coef_)
        errors[j] = _normalized_error(regressor, codes[test], y[test])
        shuffled_fit = _fit(config, codes[shuffled], y[train], fit_seed)
        random_errors[j] = _normalized_error(shuffled_fit, codes[test], y[test])

    column_sums = canonical.sum(axis=0, keepdims=True)
    canonical = np.divide(
        canonical, column_sums, out=np.zeros_like(canonical), where=column_sums > 0
    )
    importances = np.zeros_like(canonical)
    importances[order] = canonical
    return ImportanceResult(importances=importances, errors=errors, random_errors=random_errors)


def dci_from_importances(
    importances: np.ndarray, errors: np.ndarray, random_errors: np.ndarray
) -> DCIResult:
    """Entropy-based D and C plus error-based I.

    Disentanglement of latent i uses its distribution over the m factors
    (entropy base m) and is weighted by the latent's share of the total
    importance. Completeness of factor j uses its distribution over the d
    latents (entropy base d). Informativeness is the mean over factors of
    ``clamp(1 - error / random_error)``.

    Raises:
        MetricError: If an importance is negative or a factor column is all zero.
    """
    importances = np.asarray(importances, dtype=np.float64)
    if np.any(importances < 0):
        negative_msg = "DCI importances must be non-negative"
        raise MetricError(negative_msg)
    column_sums = importances.sum(axis=0)
    if np.any(column_sums <= 0):
        zero_msg = f"DCI importance columns {np.flatnonzero(column_sums <= 0).tolist()} are all zero"
        raise MetricError(zero_msg)
    d, m = importances.shape

    row_sums = importances.sum(axis=1)
    per_latent = np.zeros(d)
    for i in range(d):
        if row_sums[i] > 0:
            per_latent[i] = 1.0 if m == 1 else 1.0 - entropy(importances[i] / row_sums[i], base=m)
    weights = row_sums / row_sums.sum()

    per_factor_c = np.array(
        [
            1.0 if d == 1 else 1.0 - entropy(importances[:, j] / column_sums[j], base=d)
            for j in range(m)
        ]
    )
    per_factor_i = np.array(
        [
            clamp_unit(1.0 - err / rand) if rand > 0 else 0.0
            for err, rand in zip(errors, random_errors)
        ]
    )
    return DCIResult(
        disentanglement=clamp_unit(float(np.sum(weights * per_latent))),
        completeness=clamp_unit(float(per_factor_c.mean())),
        informativeness=clamp_unit(float(per_factor_i.mean())),
        per_latent_disentanglement=per_latent,
        latent_weights=weights,
        per_factor_completeness=per_factor_c,
        per_factor_informativeness=per_factor_i,
        importances=importances,
    )
