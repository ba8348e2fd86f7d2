"""Qualitative probes and report assembly."""

from dislab.analysis.embedding import PCAEmbedding, pca_embedding, save_embedding
from dislab.analysis.files import write_figure_manifest, write_graymap, write_svg, write_table
from dislab.analysis.gallery import Gallery, reconstruction_gallery
from dislab.analysis.report import (
    ReportTables,
    aggregate,
    assemble_report,
    claim_flags,
    write_qualitative,
    write_report,
)
from dislab.analysis.traversals import (
    TRAVERSAL_VALUES,
    TraversalGrid,
    make_traversal,
    make_traversals,
    save_grid,
    tile,
)

__all__ = [
    "TRAVERSAL_VALUES",
    "Gallery",
    "PCAEmbedding",
    "ReportTables",
    "TraversalGrid",
    "aggregate",
    "assemble_report",
    "claim_flags",
    "make_traversal",
    "make_traversals",
    "pca_embedding",
    "reconstruction_gallery",
    "save_embedding",
    "save_grid",
    "tile",
    "write_figure_manifest",
    "write_graymap",
    "write_qualitative",
    "write_report",
    "write_svg",
    "write_table",
]
