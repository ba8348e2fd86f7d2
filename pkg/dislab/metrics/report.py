"""Metric configuration, the combined report and its JSON form."""

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from loguru import logger

from dislab.data.io import LabeledDataset
from dislab.exceptions import ConfigurationError, DataError, MetricError
from dislab.metrics.dci import RegressorConfig, dci_from_importances, estimate_importances
from dislab.metrics.factor_vae import factor_vae_score
from dislab.metrics.mig import mig
from dislab.metrics.sample import RepresentationSample, RowSampler
from dislab.metrics.sap import sap
from dislab.models.model import TrainedModel
from dislab.utils import canonical_json, make_rng, read_json, write_json_atomic

SCALAR_KEYS = (
    "mig",
    "factor_vae_score",
    "sap",
    "dci_disentanglement",
    "dci_completeness",
    "dci_informativeness",
)


@dataclass(frozen=True)
class MetricConfig:
    """Every knob of the four metrics; echoed in each report."""

    bins: int = 20
    mig_denominator: str = "paper"
    n_votes: int = 10000
    subset_size: int = 64
    prune_fraction: float = 0.05
    sap_split: float = 0.3
    dci_importance: str = "forest"
    dci_trees: int = 10
    dci_depth: int = 8
    dci_lasso_alpha: float = 0.01
    dci_test_fraction: float = 0.3
    min_samples: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        """Reject unknown conventions."""
        if self.mig_denominator not in ("paper", "entropy"):
            mig_msg = f"mig_denominator must be 'paper' or 'entropy', got '{self.mig_denominator}'"
            raise ConfigurationError(mig_msg)
        if self.dci_importance not in ("forest", "l1"):
            dci_msg = f"dci_importance must be 'forest' or 'l1', got '{self.dci_importance}'"
            raise ConfigurationError(dci_msg)

    @property
    def regressor(self) -> RegressorConfig:
        """DCI regressor settings."""
        return RegressorConfig(
            importance=self.dci_importance,  # type: ignore[arg-type]
            n_estimators=self.dci_trees,
            max_depth=self.dci_depth,
            lasso_alpha=self.dci_lasso_alpha,
            test_fraction=self.dci_test_fraction,
        )

    def to_dict(self) -> dict[str, Any]:
        """Serialize, noting conventions that differ from common practice."""
        echo = asdict(self)
        echo["factor_vae_std_reference"] = "all sample codes"
        echo["dci_entropy_bases"] = "m for a latent over factors, d for a factor over latents"
        return echo


@dataclass
class MetricReport:
    """All six scalars in [0, 1] plus the sub-scores they were computed from."""

    mig: float
    factor_vae_score: float
    sap: float
    dci_disentanglement: float
    dci_completeness: float
    dci_informativeness: float
    details: dict[str, Any] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def scalars(self) -> dict[str, float]:
        """The six headline scores."""
        return {key: getattr(self, key) for key in SCALAR_KEYS}

    def to_dict(self) -> dict[str, Any]:
        """Serialize to JSON-compatible form."""
        return asdict(self)

    def to_json(self) -> str:
        """Key-sorted JSON."""
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MetricReport":
        """Rebuild from :meth:`to_dict`."""
        return cls(**data)


def save_report(path: Path, report: MetricReport) -> Path:
    """Write the report as key-sorted JSON."""
    write_json_atomic(Path(path), report.to_dict())
    return Path(path)


def load_report(path: Path) -> MetricReport:
    """Read a report written by :func:`save_report`."""
    return MetricReport.from_dict(read_json(Path(path)))


def _run(name: str, func: Any, *args: Any, **kwargs: Any) -> Any:
    try:
        return func(*args, **kwargs)
    except (DataError, ValueError) as err:
        metric_msg = f"{name}: {err}"
        raise MetricError(metric_msg) from err


def report_from_sample(
    sample: RepresentationSample, config: MetricConfig | None = None, *, verbose: bool = False
) -> MetricReport:
    """Run all four metrics on one sample with a shared seed plan.

    Raises:
        DataError: If the sample is smaller than ``config.min_samples``.
        MetricError: If a metric fails; the message starts with its name.
    """
    config = config or MetricConfig()
    if len(sample) < config.min_samples:
        small_msg = f"Sample has {len(sample)} rows, metrics need at least {config.min_samples}"
        raise DataError(small_msg)

    mig_result = _run("mig", mig, sample, config.bins, config.mig_denominator)  # type: ignore[arg-type]
    fvae = _run(
        "factor_vae_score",
        factor_vae_score,
        RowSampler(sample),
        sample.codes,
        sample.n_factors,
        make_rng(config.seed, "factor_vae"),
        config.n_votes,
        config.subset_size,
        config.prune_fraction,
    )
    sap_result = _run("sap", sap, sample, config.sap_split, config.seed)
    importance = _run("dci", estimate_importances, sample, config.regressor, config.seed)
    dci = _run(
        "dci", dci_from_importances, importance.importances, importance.errors,
        importance.random_errors,
    )

    report = MetricReport(
        mig=mig_result.score,
        factor_vae_score=fvae.score,
        sap=sap_result.score,
        dci_disentanglement=dci.disentanglement,
        dci_completeness=dci.completeness,
        dci_informativeness=dci.informativeness,
        details={
            "mig": mig_result.to_dict(),
            "factor_vae": fvae.to_dict(),
            "sap": sap_result.to_dict(),
            "dci": {
                **dci.to_dict(),
                "errors": importance.errors.tolist(),
                "random_errors": importance.random_errors.tolist(),
                "importance_axes": "rows are latents, columns are factors",
            },
        },
        config=config.to_dict(),
        provenance=dict(sample.provenance),
    )
    if verbose:
        summary = ", ".join(f"{key}={value:.3f}" for key, value in report.scalars.items())
        logger.success(f"Metrics: {summary}")
    return report


def full_report(
    model: TrainedModel,
    dataset: LabeledDataset,
    config: MetricConfig | None = None,
    *,
    verbose: bool = False,
) -> MetricReport:
    """Encode the test split and score it with every metric."""
    sample = RepresentationSample.from_model(model, dataset, "test")
    return report_from_sample(sample, config, verbose=verbose)
