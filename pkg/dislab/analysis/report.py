"""Report assembly: tables aggregated over seeds, claim flags and charts."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from loguru import logger
from matplotlib.axes import Axes
from matplotlib.figure import Figure

from dislab.analysis.embedding import pca_embedding, save_embedding
from dislab.analysis.files import write_figure_manifest, write_svg, write_table
from dislab.analysis.gallery import reconstruction_gallery
from dislab.analysis.traversals import make_traversals, save_grid
from dislab.container import load_container
from dislab.data.io import LabeledDataset
from dislab.exceptions import MissingRunsError
from dislab.metrics.report import SCALAR_KEYS, load_report
from dislab.metrics.sample import RepresentationSample
from dislab.models.model import TrainedModel
from dislab.store import RunStore, regime_dirname
from dislab.utils import make_rng, read_json, write_json_atomic

DATASET_NAME = "minisprites"
KEYS = ["regime", "dataset"]
SINGLE_PREFIX = "single:"
FIG2_METRICS = (
    "factor_vae_score",
    "dci_disentanglement",
    "dci_completeness",
    "dci_informativeness",
    "mig",
)
FACTOR_VAE_MARGIN = 0.05

@dataclass
class ReportTables:
    """Per-run and aggregated tables plus the claim flags."""

    metric_runs: pd.DataFrame
    metrics: pd.DataFrame
    task_mse_runs: pd.DataFrame
    task_mse: pd.DataFrame
    reconstruction_runs: pd.DataFrame
    reconstruction: pd.DataFrame
    rmse: pd.DataFrame
    claims: dict[str, Any] = field(default_factory=dict)

    def tables(self) -> dict[str, pd.DataFrame]:
        """Every table keyed by its file stem."""
        return {
            "metrics_runs": self.metric_runs,
            "metrics": self.metrics,
            "task_mse_runs": self.task_mse_runs,
            "task_mse": self.task_mse,
            "reconstruction_runs": self.reconstruction_runs,
            "reconstruction": self.reconstruction,
            "rmse": self.rmse,
        }


def aggregate(runs: pd.DataFrame, columns: list[str]) -> pd.DataFrame:
    """Mean and sample std over seeds per regime, plus single-task summary rows.

    ``single_mean`` averages the per-task seed means over tasks and carries
    their spread over tasks as std; ``single_min`` and ``single_max`` are the
    extreme per-task seed means (their std cells are empty).
    """
    out_columns = [*KEYS, "n_seeds"] + [
        f"{column}_{stat}" for column in columns for stat in ("mean", "std")
    ]
    if runs.empty:
        return pd.DataFrame(columns=out_columns)
    grouped = runs.groupby(KEYS, sort=False)
    summary = grouped[columns].mean().add_suffix("_mean")
    summary = summary.join(grouped[columns].std(ddof=1).fillna(0.0).add_suffix("_std"))
    summary.insert(0, "n_seeds", grouped.size())
    summary = summary.reset_index()

    singles = summary[summary["regime"].str.startswith(SINGLE_PREFIX)]
    extra = []
    for dataset, per_task in singles.groupby("dataset", sort=False):
        means = per_task[[f"{column}_mean" for column in columns]]
        rows = {
            "single_mean": (means.mean(), means.std(ddof=1).fillna(0.0)),
            "single_min": (means.min(), None),
            "single_max": (means.max(), None),
        }
        for label, (value, spread) in rows.items():
            record: dict[str, Any] = {
                "regime": label,
                "dataset": dataset,
                "n_seeds": int(per_task["n_seeds"].min()),
            }
            for column in columns:
                record[f"{column}_mean"] = float(value[f"{column}_mean"])
                record[f"{column}_std"] = (
                    np.nan if spread is None else float(spread[f"{column}_mean"])
                )
            extra.append(record)
    if extra:
        summary = pd.concat([summary, pd.DataFrame.from_records(extra)], ignore_index=True)
    return summary[out_columns]


def _lookup(summary: pd.DataFrame, regime: str, column: str) -> Optional[float]:
    if summary.empty or f"{column}_mean" not in summary:
        return None
    rows = summary.loc[summary["regime"] == regime, f"{column}_mean"]
    return None if rows.empty else float(rows.iloc[0])


def _greater(a: Optional[float], b: Optional[float], *, strict: bool = True) -> Optional[bool]:
    if a is None or b is None:
        return None
    return bool(a > b) if strict else bool(a >= b)


def claim_flags(
    metrics: pd.DataFrame,
    task_mse: pd.DataFrame,
    reconstruction: pd.DataFrame,
    rmse: pd.DataFrame,
    dataset: str = DATASET_NAME,
) -> dict[str, Any]:
    """Evaluate the directional claims; a flag is None when its inputs are absent."""
    fig2 = {
        metric: _greater(_lookup(metrics, "multi_head", metric), _lookup(metrics, "single_mean", metric))
        for metric in FIG2_METRICS
    }
    fvae_multi = _lookup(metrics, "multi_head", "factor_vae_score")
    fvae_single = _lookup(metrics, "single_mean", "factor_vae_score")
    margin = None if fvae_multi is None or fvae_single is None else fvae_multi - fvae_single
    fig2["factor_vae_score_margin"] = margin
    fig2["factor_vae_score_margin_holds"] = None if margin is None else bool(margin >= FACTOR_VAE_MARGIN)

    dci_d = "dci_disentanglement"
    fig3 = {
        "multi_head_ge_one_head": _greater(
            _lookup(metrics, "multi_head", dci_d), _lookup(metrics, "one_head", dci_d), strict=False
        ),
        "one_head_ge_single_mean": _greater(
            _lookup(metrics, "one_head", dci_d), _lookup(metrics, "single_mean", dci_d), strict=False
        ),
    }
    table2 = {
        "reconstruction_multi_lt_random": _greater(
            _lookup(reconstruction, "random", "test_reconstruction_mse"),
            _lookup(reconstruction, "multi_head", "test_reconstruction_mse"),
        ),
        "task_mse_multi_lt_random": _greater(
            _lookup(task_mse, "random", "test_task_mse"),
            _lookup(task_mse, "multi_head", "test_task_mse"),
        ),
    }
    rmse_of = {str(row["source"]): float(row["rmse_mean"]) for _, row in rmse.iterrows()}
    table1 = {
        "ground_truth_lt_random": _greater(rmse_of.get("random"), rmse_of.get("ground_truth")),
        "ae_lt_random": _greater(rmse_of.get("random"), rmse_of.get("ae")),
    }
    return {
        "dataset": dataset,
        "multi_task_outperforms_single_task": fig2,
        "multi_head_ordering": fig3,
        "reconstruction_and_task_error": table2,
        "frozen_representation_heads": table1,
    }


def _missing(store: RunStore, regimes: list[str], seeds: list[int], probes: list[str]) -> list[tuple[str, int]]:
    missing = [
        (regime, seed)
        for regime in regimes
        for seed in seeds
        if not store.metrics_path(regime, seed).exists()
        or not store.model_path(regime, seed).exists()
    ]
    missing += [
        (f"{regime} probe", seed)
        for regime in probes
        for seed in seeds
        if not store.probe_path(regime, seed).exists()
    ]
    return missing


def _training_manifest(path: Path) -> dict[str, Any]:
    return load_container(path).manifest.get("training", {})


def _rmse_table(store: RunStore) -> pd.DataFrame:
    columns = ["source", "n_seeds", "rmse_mean", "rmse_std"]
    if not store.heads_path.exists():
        return pd.DataFrame(columns=columns)
    results = load_heads(store.heads_path)
    records = [
        {
            "source": source,
            "n_seeds": len(result["seeds"]),
            "rmse_mean": float(np.mean(result["mean_rmse_per_seed"])),
            "rmse_std": (
                float(np.std(result["mean_rmse_per_seed"], ddof=1))
                if len(result["seeds"]) > 1
                else 0.0
            ),
        }
        for source, result in results["sources"].items()
    ]
    return pd.DataFrame.from_records(records, columns=columns)


def load_heads(path: Path) -> dict[str, Any]:
    """Read the frozen-representation head results."""
    return read_json(Path(path))


def assemble_report(
    store: RunStore,
    regimes: list[str],
    seeds: list[int],
    probe_regimes: Optional[list[str]] = None,
    *,
    dataset: str = DATASET_NAME,
    verbose: bool = False,
) -> ReportTables:
    """Collect stored metric reports and run manifests into report tables.

    Args:
        store (RunStore): Store holding the runs.
        regimes (list[str]): Expanded regimes, e.g. ``["random", "single:0", ...]``.
        seeds (list[int]): Seeds every regime must have been run with.
        probe_regimes (list[str], optional): Regimes with decoder probes.
        dataset (str, optional): Dataset label of the rows.
        verbose (bool, optional): Log progress. Defaults to False.

    Returns:
        ReportTables: Tables and claim flags.

    Raises:
        MissingRunsError: Listing every absent (regime, seed) pair.
    """
    probe_regimes = list(probe_regimes or [])
    missing = _missing(store, regimes, seeds, probe_regimes)
    if missing:
        raise MissingRunsError(missing)

    metric_records, mse_records = [], []
    for regime in regimes:
        for seed in seeds:
            report = load_report(store.metrics_path(regime, seed))
            metric_records.append({"regime": regime, "dataset": dataset, "seed": seed, **report.scalars})
            training = _training_manifest(store.model_path(regime, seed))
            per_task = training.get("test_task_mse")
            if per_task is None:
                continue
            if regime.startswith(SINGLE_PREFIX):
                value = float(per_task[int(regime[len(SINGLE_PREFIX) :])])
            else:
                value = float(np.mean(per_task))
            mse_records.append({"regime": regime, "dataset": dataset, "seed": seed, "test_task_mse": value})

    recon_records = [
        {
            "regime": regime,
            "dataset": dataset,
            "seed": seed,
            "test_reconstruction_mse": float(
                _training_manifest(store.probe_path(regime, seed))["test_reconstruction_mse"]
            ),
        }
        for regime in probe_regimes
        for seed in seeds
    ]

    metric_runs = pd.DataFrame.from_records(metric_records, columns=[*KEYS, "seed", *SCALAR_KEYS])
    task_mse_runs = pd.DataFrame.from_records(mse_records, columns=[*KEYS, "seed", "test_task_mse"])
    recon_runs = pd.DataFrame.from_records(
        recon_records, columns=[*KEYS, "seed", "test_reconstruction_mse"]
    )
    metrics = aggregate(metric_runs, list(SCALAR_KEYS))
    task_mse = aggregate(task_mse_runs, ["test_task_mse"])
    reconstruction = aggregate(recon_runs, ["test_reconstruction_mse"])
    rmse = _rmse_table(store)
    tables = ReportTables(
        metric_runs=metric_runs,
        metrics=metrics,
        task_mse_runs=task_mse_runs,
        task_mse=task_mse,
        reconstruction_runs=recon_runs,
        reconstruction=reconstruction,
        rmse=rmse,
        claims=claim_flags(metrics, task_mse, reconstruction, rmse, dataset),
    )
    if verbose:
        logger.success(f"Assembled report over {len(regimes)} regimes x {len(seeds)} seeds")
    return tables


def bar_rows(summary: pd.DataFrame) -> pd.DataFrame:
    """Rows drawn in bar charts: every regime except the individual single-task runs."""
    keep = ~summary["regime"].str.startswith(SINGLE_PREFIX) & ~summary["regime"].isin(
        ["single_min", "single_max"]
    )
    return summary[keep].reset_index(drop=True)


def plot_bars(summary: pd.DataFrame, columns: list[str], title: str = "") -> tuple[Figure, list[Axes]]:
    """One bar panel per column with std error bars; single-task bars span min to max."""
    figure, axes = plt.subplots(1, len(columns), figsize=(3 * len(columns), 3))
    axes_list = list(np.atleast_1d(axes))
    rows = bar_rows(summary)
    positions = np.arange(len(rows))
    for ax, column in zip(axes_list, columns):
        means = rows[f"{column}_mean"].to_numpy(dtype=np.float64)
        lower = rows[f"{column}_std"].fillna(0.0).to_numpy(dtype=np.float64)
        upper = lower.copy()
        single = np.flatnonzero(rows["regime"].to_numpy() == "single_mean")
        for i in single:
            lo = _lookup(summary, "single_min", column)
            hi = _lookup(summary, "single_max", column)
            lower[i] = means[i] - (lo if lo is not None else means[i])
            upper[i] = (hi if hi is not None else means[i]) - means[i]
        colors = ["tab:red" if regime == "multi_head" else "tab:gray" for regime in rows["regime"]]
        ax.bar(positions, means, yerr=np.vstack([lower, upper]), color=colors, capsize=2)
        ax.set_xticks(positions)
        ax.set_xticklabels(rows["regime"], rotation=45, ha="right", fontsize=7)
        ax.set_title(column, fontsize=8)
    if title:
        figure.suptitle(title)
    figure.tight_layout()
    return figure, axes_list


def write_report(tables: ReportTables, directory: Path, stage_hash: Optional[str] = None) -> list[Path]:
    """Write every table as CSV, the claim flags as JSON and the bar charts as SVG.

    A ``stage_hash`` is stamped into every CSV row and every SVG description.
    """
    directory = Path(directory)
    written = [
        write_table(table, directory / f"{stem}.csv", stage_hash) for stem, table in tables.tables().items()
    ]
    claims_path = directory / "claims.json"
    write_json_atomic(claims_path, tables.claims)
    written.append(claims_path)
    charts = {
        "metrics.svg": (tables.metrics, list(SCALAR_KEYS)),
        "task_mse.svg": (tables.task_mse, ["test_task_mse"]),
        "reconstruction.svg": (tables.reconstruction, ["test_reconstruction_mse"]),
    }
    for name, (summary, columns) in charts.items():
        if summary.empty:
            continue
        figure, _ = plot_bars(summary, columns)
        written.append(write_svg(figure, directory / name, stage_hash))
    return written


def write_qualitative(
    probes: dict[str, TrainedModel],
    dataset: LabeledDataset,
    directory: Path,
    *,
    example_seed: int = 0,
    n_gallery: int = 8,
    embedding_seed: int = 0,
    stage_hash: Optional[str] = None,
) -> list[Path]:
    """Traversal grids, the reconstruction gallery and PCA embeddings of the probes.

    Ends with ``manifest.json`` listing every written file and ``stage_hash``.
    """
    directory = Path(directory)
    written = []
    for clamp in (False, True):
        suffix = "_clamped" if clamp else ""
        for source, grid in make_traversals(probes, dataset, example_seed, clamp=clamp).items():
            name = f"traversal_{regime_dirname(source)}{suffix}.pgm"
            written.append(save_grid(grid, directory / name))

    test = dataset.rows("test")
    rng = make_rng(example_seed, "gallery")
    picks = test[rng.choice(test.size, size=min(n_gallery, test.size), replace=False)]
    gallery = reconstruction_gallery(probes, dataset.images[np.sort(picks)])
    gallery.save(directory / "gallery.pgm", directory / "gallery_mse.csv", stage_hash)
    written += [directory / "gallery.pgm", directory / "gallery_mse.csv"]

    for source, probe in probes.items():
        sample = RepresentationSample.from_model(probe, dataset, "test")
        embedding = pca_embedding(sample.codes, embedding_seed)
        written += list(
            save_embedding(
                embedding, sample, directory / f"embedding_{regime_dirname(source)}", source, stage_hash
            )
        )
    written.append(write_figure_manifest(directory, written, stage_hash))
    return written
