"""Factor spaces, the MiniSprites dataset and dataset persistence."""

from dislab.data.factors import Factor, FactorSpace
from dislab.data.io import LabeledDataset, load_dataset, save_dataset, split
from dislab.data.sprites import SHAPES, SpriteProfile, make_minisprites, render_sprite

__all__ = [
    "SHAPES",
    "Factor",
    "FactorSpace",
    "LabeledDataset",
    "SpriteProfile",
    "load_dataset",
    "make_minisprites",
    "render_sprite",
    "save_dataset",
    "split",
]
