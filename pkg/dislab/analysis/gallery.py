"""Reconstruction galleries of decoder probes."""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from dislab.analysis.files import write_graymap, write_table
from dislab.analysis.traversals import tile
from dislab.models.model import TrainedModel, decode, encode

INPUT_ROW = "input"


@dataclass
class Gallery:
    """Inputs and their reconstructions, one row per source."""

    sources: list[str]
    images: np.ndarray
    mse: pd.DataFrame

    def panel(self) -> np.ndarray:
        """uint8 canvas: first row inputs, then one row per probe."""
        return tile(self.images)

    def save(self, panel_path: Path, table_path: Path, stage_hash: Optional[str] = None) -> None:
        """Write the panel as a graymap and the MSE table as CSV."""
        write_graymap(self.panel(), panel_path)
        write_table(self.mse, table_path, stage_hash)


def reconstruction_gallery(
    probes: dict[str, TrainedModel], images: np.ndarray
) -> Gallery:
    """Decode ``images`` through every probe and tabulate per-pixel MSE.

    The table starts with an ``input`` row comparing the inputs to themselves.

    Args:
        probes (dict[str, TrainedModel]): Decoder probes keyed by source label.
        images (np.ndarray): (n, C, H, W) test images.

    Returns:
        Gallery: The stacked images (1 + len(probes), n, C, H, W) and the table.
    """
    rows = [images]
    records = [{"source": INPUT_ROW, "mse": float(np.mean((images - images) ** 2))}]
    for source, probe in probes.items():
        recon = decode(probe, encode(probe, images))
        rows.append(recon)
        records.append(
            {"source": source, "mse": float(np.mean((recon.astype(np.float64) - images) ** 2))}
        )
    return Gallery(
        sources=[INPUT_ROW, *probes],
        images=np.stack(rows),
        mse=pd.DataFrame.from_records(records),
    )
