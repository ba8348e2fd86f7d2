"""Multi-task learning and disentanglement experiments on rendered sprites."""

from dislab.data import LabeledDataset, SpriteProfile, make_minisprites
from dislab.metrics import MetricConfig, MetricReport
from dislab.models import TrainedModel
from dislab.pipeline import ExperimentManifest
from dislab.store import RunStore

__version__ = "0.1.0"
__all__ = [
    "ExperimentManifest",
    "LabeledDataset",
    "MetricConfig",
    "MetricReport",
    "RunStore",
    "SpriteProfile",
    "TrainedModel",
    "make_minisprites",
]
