"""Supervised disentanglement metrics: MIG, FactorVAE score, SAP and DCI."""

from dislab.metrics.dci import (
    RegressorConfig,
    dci_from_importances,
    estimate_importances,
)
from dislab.metrics.factor_vae import factor_vae_score
from dislab.metrics.mi import discretized_mutual_information, mutual_info_matrix
from dislab.metrics.mig import mig
from dislab.metrics.report import (
    SCALAR_KEYS,
    MetricConfig,
    MetricReport,
    full_report,
    load_report,
    report_from_sample,
    save_report,
)
from dislab.metrics.sample import RepresentationSample, RowSampler
from dislab.metrics.sap import sap

__all__ = [
    "SCALAR_KEYS",
    "MetricConfig",
    "MetricReport",
    "RegressorConfig",
    "RepresentationSample",
    "RowSampler",
    "dci_from_importances",
    "discretized_mutual_information",
    "estimate_importances",
    "factor_vae_score",
    "full_report",
    "load_report",
    "mig",
    "mutual_info_matrix",
    "report_from_sample",
    "sap",
    "save_report",
]
