"""Atomic writers for report tables, charts and graymaps.

Every writer takes an optional ``stage_hash``: tables get a ``stage_hash``
column and SVGs carry it as their description. Graymaps have no metadata
slot, so their hash lives in the directory's ``manifest.json``.
"""

import io
from pathlib import Path
from typing import Optional

import matplotlib as mpl
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from matplotlib.figure import Figure
from PIL import Image

from dislab.utils import write_bytes_atomic, write_json_atomic

mpl.rcParams["svg.hashsalt"] = "dislab"

FIGURE_MANIFEST = "manifest.json"


def write_table(frame: pd.DataFrame, path: Path, stage_hash: Optional[str] = None) -> Path:
    """Write a CSV table, with a ``stage_hash`` column when a hash is given."""
    path = Path(path)
    if stage_hash is not None:
        frame = frame.assign(stage_hash=stage_hash)
    write_bytes_atomic(path, frame.to_csv(index=False).encode("utf-8"))
    return path


def write_svg(figure: Figure, path: Path, stage_hash: Optional[str] = None) -> Path:
    """Write a figure as SVG without a timestamp and close it."""
    path = Path(path)
    metadata = {"Date": None}
    if stage_hash is not None:
        metadata["Description"] = stage_hash
    buffer = io.BytesIO()
    figure.savefig(buffer, format="svg", metadata=metadata)
    plt.close(figure)
    write_bytes_atomic(path, buffer.getvalue())
    return path


def write_graymap(pixels: np.ndarray, path: Path) -> Path:
    """Write a uint8 (H, W) canvas as a portable graymap."""
    path = Path(path)
    buffer = io.BytesIO()
    Image.fromarray(pixels).save(buffer, format="PPM")
    write_bytes_atomic(path, buffer.getvalue())
    return path


def write_figure_manifest(directory: Path, files: list[Path], stage_hash: Optional[str]) -> Path:
    """List the files of a figure directory together with the hash that produced them."""
    path = Path(directory) / FIGURE_MANIFEST
    write_json_atomic(path, {"stage_hash": stage_hash, "files": sorted(Path(f).name for f in files)})
    return path
