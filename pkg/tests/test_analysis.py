"""Test traversals, galleries, embeddings and report assembly."""

import json

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import pytest
from PIL import Image

from dislab.analysis import (
    TRAVERSAL_VALUES,
    aggregate,
    assemble_report,
    claim_flags,
    make_traversal,
    make_traversals,
    pca_embedding,
    reconstruction_gallery,
    save_embedding,
    save_grid,
    tile,
    write_qualitative,
    write_report,
)
from dislab.analysis.embedding import METHOD
from dislab.analysis.files import FIGURE_MANIFEST, write_graymap, write_svg, write_table
from dislab.container import DTBContainer, save_container
from dislab.exceptions import DataError, MissingRunsError
from dislab.metrics import MetricReport, RepresentationSample, save_report
from dislab.models.training import build_autoencoder
from dislab.store import RunStore
from dislab.utils import write_json_atomic


@pytest.fixture(scope="module")
def probe(tiny_dataset):
    """An untrained auto-encoder standing in for a decoder probe."""
    return build_autoencoder(tiny_dataset.image_shape, "ae", seed=0)


def _runs(values: dict[str, list[float]], column: str = "score") -> pd.DataFrame:
    records = [
        {"regime": regime, "dataset": "minisprites", "seed": seed, column: value}
        for regime, series in values.items()
        for seed, value in enumerate(series)
    ]
    return pd.DataFrame.from_records(records)


class TestTraversals:
    """Tests latent traversal grids."""

    def test_shape(self, probe, tiny_dataset):
        """Test one row per latent and 21 columns."""
        grid = make_traversal(probe, tiny_dataset, 0)
        assert grid.images.shape == (8, 21, 1, 16, 16)
        np.testing.assert_array_equal(grid.values, TRAVERSAL_VALUES)
        assert grid.adjacent_change().shape == (8,)

    def test_clamp(self, probe, tiny_dataset):
        """Test that the clamped base latent lies in [-1, 1]."""
        grid = make_traversal(probe, tiny_dataset, 0, clamp=True)
        assert grid.clamped
        assert np.abs(grid.base_latent).max() <= 1.0

    def test_shared_base(self, probe, tiny_dataset):
        """Test that every source uses the same seeded test row."""
        grids = make_traversals({"a": probe, "b": probe}, tiny_dataset, example_seed=4)
        assert grids["a"].base_index == grids["b"].base_index
        assert tiny_dataset.is_test[grids["a"].base_index]
        np.testing.assert_array_equal(grids["a"].images, grids["b"].images)

    def test_tile(self):
        """Test the canvas size and pixel quantization of a tiled grid."""
        images = np.ones((2, 3, 1, 4, 4), dtype=np.float32)
        canvas = tile(images)
        assert canvas.shape == (9, 14)
        assert canvas.dtype == np.uint8
        assert canvas[0, 0] == 255
        assert canvas[4, 0] == 0

    def test_save_grid(self, probe, tiny_dataset, tmp_path):
        """Test that the graymap starts with the P5 header."""
        path = save_grid(make_traversal(probe, tiny_dataset, 0), tmp_path / "grid.pgm")
        assert path.read_bytes().startswith(b"P5")


class TestGallery:
    """Tests reconstruction galleries."""

    def test_input_row(self, probe, tiny_dataset):
        """Test that the first row holds the inputs with zero error."""
        images = tiny_dataset.images[:4]
        gallery = reconstruction_gallery({"ae": probe}, images)
        assert gallery.sources == ["input", "ae"]
        assert gallery.images.shape == (2, 4, 1, 16, 16)
        np.testing.assert_array_equal(gallery.images[0], images)
        assert gallery.mse["mse"].iloc[0] == 0.0
        assert gallery.mse["mse"].iloc[1] > 0.0

    def test_save(self, probe, tiny_dataset, tmp_path):
        """Test the panel and table files."""
        gallery = reconstruction_gallery({"ae": probe}, tiny_dataset.images[:2])
        gallery.save(tmp_path / "g.pgm", tmp_path / "g.csv")
        assert list(pd.read_csv(tmp_path / "g.csv")["source"]) == ["input", "ae"]


class TestEmbedding:
    """Tests the power-iteration PCA."""

    def test_two_dimensional_isometry(self):
        """Test that projecting 2-D codes on two components preserves distances."""
        codes = np.random.default_rng(0).standard_normal((50, 2)) * [3.0, 1.0]
        coordinates = pca_embedding(codes).coordinates
        original = np.linalg.norm(codes[:, None] - codes[None], axis=-1)
        projected = np.linalg.norm(coordinates[:, None] - coordinates[None], axis=-1)
        np.testing.assert_allclose(projected, original, atol=1e-8)

    def test_matches_eigh(self):
        """Test the leading eigenpairs against a dense eigensolver."""
        codes = np.random.default_rng(1).standard_normal((400, 5)) * [5.0, 3.0, 2.0, 1.0, 0.5]
        embedding = pca_embedding(codes, n_components=5)
        centered = codes - codes.mean(axis=0)
        values, vectors = np.linalg.eigh(centered.T @ centered / 399)
        values, vectors = values[::-1], vectors[:, ::-1].T
        for expected, actual in zip(vectors, embedding.components):
            sign = np.sign(expected[np.argmax(np.abs(expected))])
            np.testing.assert_allclose(actual, sign * expected, atol=1e-6)
        np.testing.assert_allclose(embedding.eigenvalues, values, rtol=1e-6)

    def test_ratios(self):
        """Test that explained variance ratios are non-increasing and sum below 1."""
        codes = np.random.default_rng(2).standard_normal((100, 6)) * [3.0, 2.5, 2.0, 1.5, 1.0, 0.5]
        ratios = pca_embedding(codes, n_components=4).explained_variance_ratio
        assert np.all(np.diff(ratios) <= 1e-12)
        assert ratios.sum() <= 1.0 + 1e-12

    def test_deterministic(self):
        """Test that a seed fixes the embedding exactly."""
        codes = np.random.default_rng(3).standard_normal((30, 4))
        np.testing.assert_array_equal(pca_embedding(codes, 5).coordinates, pca_embedding(codes, 5).coordinates)

    def test_errors(self):
        """Test too few rows and zero variance."""
        with pytest.raises(DataError, match="at least 3"):
            pca_embedding(np.zeros((2, 3)))
        with pytest.raises(DataError, match="zero variance"):
            pca_embedding(np.ones((10, 3)))

    def test_save(self, probe, tiny_dataset, tmp_path):
        """Test the CSV columns and the SVG of a saved embedding."""
        sample = RepresentationSample.from_model(probe, tiny_dataset, "test")
        csv_path, svg_path = save_embedding(pca_embedding(sample.codes), sample, tmp_path / "emb", "ae")
        table = pd.read_csv(csv_path)
        assert list(table.columns) == ["pc1", "pc2", *tiny_dataset.space.names, "method"]
        assert (table["method"] == METHOD).all()
        assert svg_path.read_text().lstrip().startswith("<?xml")


class TestAggregate:
    """Tests seed aggregation and single-task summary rows."""

    def test_hand_computed(self):
        """Test means, sample stds and the single-task rows."""
        runs = _runs({"multi_head": [1.0, 2.0, 3.0], "single:0": [1.0, 3.0], "single:1": [4.0, 4.0]})
        summary = aggregate(runs, ["score"]).set_index("regime")
        assert summary.loc["multi_head", "score_mean"] == pytest.approx(2.0)
        assert summary.loc["multi_head", "score_std"] == pytest.approx(1.0)
        assert summary.loc["multi_head", "n_seeds"] == 3
        assert summary.loc["single:1", "score_std"] == 0.0
        assert summary.loc["single_mean", "score_mean"] == pytest.approx(3.0)
        assert summary.loc["single_mean", "score_std"] == pytest.approx(np.sqrt(2.0))
        assert summary.loc["single_min", "score_mean"] == pytest.approx(2.0)
        assert summary.loc["single_max", "score_mean"] == pytest.approx(4.0)
        assert np.isnan(summary.loc["single_max", "score_std"])

    def test_single_seed(self):
        """Test that one seed gives zero std."""
        summary = aggregate(_runs({"ae": [0.5]}), ["score"])
        assert summary["score_std"].iloc[0] == 0.0

    def test_empty(self):
        """Test that no runs give an empty table with the full header."""
        summary = aggregate(pd.DataFrame(columns=["regime", "dataset", "seed", "score"]), ["score"])
        assert summary.empty
        assert list(summary.columns) == ["regime", "dataset", "n_seeds", "score_mean", "score_std"]


class TestClaims:
    """Tests the directional claim flags."""

    def test_flags(self):
        """Test flags computed from hand-made summaries."""
        columns = ["factor_vae_score", "dci_disentanglement", "dci_completeness", "dci_informativeness", "mig"]
        metric_runs = _runs({"multi_head": [0.8, 0.9], "one_head": [0.6, 0.6], "single:0": [0.5, 0.5]}, columns[0])
        for column in columns[1:]:
            metric_runs[column] = metric_runs[columns[0]]
        metrics = aggregate(metric_runs, columns)
        task_mse = aggregate(_runs({"random": [2.0], "multi_head": [1.0]}, "test_task_mse"), ["test_task_mse"])
        recon = aggregate(_runs({"random": [0.1], "multi_head": [0.2]}, "test_reconstruction_mse"), ["test_reconstruction_mse"])
        rmse = pd.DataFrame({"source": ["ground_truth", "random"], "rmse_mean": [1.0, 3.0]})

        claims = claim_flags(metrics, task_mse, recon, rmse)
        fig2 = claims["multi_task_outperforms_single_task"]
        assert fig2["factor_vae_score"] is True
        assert fig2["factor_vae_score_margin"] == pytest.approx(0.35)
        assert fig2["factor_vae_score_margin_holds"] is True
        assert claims["multi_head_ordering"] == {"multi_head_ge_one_head": True, "one_head_ge_single_mean": True}
        assert claims["reconstruction_and_task_error"] == {
            "reconstruction_multi_lt_random": False,
            "task_mse_multi_lt_random": True,
        }
        assert claims["frozen_representation_heads"] == {"ground_truth_lt_random": True, "ae_lt_random": None}

    def test_missing_inputs(self):
        """Test that absent regimes give None flags."""
        empty = aggregate(pd.DataFrame(columns=["regime", "dataset", "seed", "x"]), ["x"])
        claims = claim_flags(empty, empty, empty, pd.DataFrame(columns=["source", "rmse_mean"]))
        assert claims["multi_task_outperforms_single_task"]["mig"] is None
        assert claims["multi_task_outperforms_single_task"]["factor_vae_score_margin_holds"] is None


def _fake_store(root, seeds=(0, 1)) -> RunStore:
    store = RunStore(root)
    for regime, base in [("random", 0.1), ("multi_head", 0.6), ("single:0", 0.3), ("single:1", 0.4)]:
        for seed in seeds:
            value = base + 0.1 * seed
            save_report(
                store.metrics_path(regime, seed),
                MetricReport(value, value, value, value, value, value),
            )
            training = {"seed": seed, "test_task_mse": [1.0 - value, 2.0 - value]}
            save_container(store.model_path(regime, seed), DTBContainer(manifest={"training": training}))
    for regime in ("random", "multi_head"):
        for seed in seeds:
            training = {"test_reconstruction_mse": 0.05 if regime == "multi_head" else 0.09}
            save_container(store.probe_path(regime, seed), DTBContainer(manifest={"training": training}))
    write_json_atomic(
        store.heads_path,
        {
            "sources": {
                "ground_truth": {"seeds": [0, 1], "mean_rmse_per_seed": [1.0, 1.2]},
                "random": {"seeds": [0, 1], "mean_rmse_per_seed": [2.0, 2.0]},
            }
        },
    )
    return store


class TestAssembleReport:
    """Tests report assembly from a store."""

    REGIMES = ["random", "multi_head", "single:0", "single:1"]

    def test_tables(self, tmp_path):
        """Test the aggregated values and the per-task MSE of single-task runs."""
        store = _fake_store(tmp_path)
        tables = assemble_report(store, self.REGIMES, [0, 1], ["random", "multi_head"])
        metrics = tables.metrics.set_index("regime")
        assert metrics.loc["multi_head", "mig_mean"] == pytest.approx(0.65)
        assert metrics.loc["single_mean", "mig_mean"] == pytest.approx(0.4)
        task = tables.task_mse_runs.set_index(["regime", "seed"])
        assert task.loc[("single:1", 0), "test_task_mse"] == pytest.approx(1.6)
        assert task.loc[("multi_head", 0), "test_task_mse"] == pytest.approx(0.9)
        rmse = tables.rmse.set_index("source")
        assert rmse.loc["ground_truth", "rmse_mean"] == pytest.approx(1.1)
        assert tables.claims["reconstruction_and_task_error"]["reconstruction_multi_lt_random"] is True
        assert tables.claims["frozen_representation_heads"]["ground_truth_lt_random"] is True

    def test_missing_runs(self, tmp_path):
        """Test that every absent run and probe is listed."""
        store = _fake_store(tmp_path, seeds=(0,))
        with pytest.raises(MissingRunsError) as err:
            assemble_report(store, self.REGIMES, [0, 1], ["multi_head"])
        assert ("multi_head", 1) in err.value.missing
        assert ("multi_head probe", 1) in err.value.missing
        assert ("random", 0) not in err.value.missing

    def test_write_report(self, tmp_path):
        """Test the written files and that CSV tables read back unchanged."""
        store = _fake_store(tmp_path / "store")
        tables = assemble_report(store, self.REGIMES, [0, 1], ["random", "multi_head"])
        out = tmp_path / "report"
        write_report(tables, out)
        for name in ["metrics.csv", "task_mse.csv", "rmse.csv", "claims.json", "metrics.svg", "reconstruction.svg"]:
            assert (out / name).exists(), name
        pd.testing.assert_frame_equal(pd.read_csv(out / "metrics_runs.csv"), tables.metric_runs, check_dtype=False)
        assert json.loads((out / "claims.json").read_text()) == tables.claims

    def test_write_report_deterministic(self, tmp_path):
        """Test that writing twice gives byte-identical files."""
        store = _fake_store(tmp_path / "store")
        tables = assemble_report(store, self.REGIMES, [0, 1], ["random", "multi_head"])
        write_report(tables, tmp_path / "a")
        write_report(tables, tmp_path / "b")
        for path in (tmp_path / "a").iterdir():
            assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes(), path.name


class TestQualitative:
    """Tests the qualitative figure bundle."""

    def test_files(self, probe, tiny_dataset, tmp_path):
        """Test that traversals, the gallery and embeddings are written."""
        written = write_qualitative({"single:0": probe}, tiny_dataset, tmp_path, n_gallery=3)
        names = {path.name for path in written}
        assert {"traversal_single_0.pgm", "traversal_single_0_clamped.pgm", "gallery.pgm", "gallery_mse.csv"} <= names
        assert {"embedding_single_0.csv", "embedding_single_0.svg"} <= names
        assert all(path.exists() for path in written)

    def test_manifest_lists_files(self, tiny_dataset, tmp_path):
        """Test that manifest.json lists every other file with the given hash."""
        model = build_autoencoder(tiny_dataset.image_shape, "ae", seed=0)
        write_qualitative({"single:0": model}, tiny_dataset, tmp_path, n_gallery=2, stage_hash="abc123")
        manifest = json.loads((tmp_path / FIGURE_MANIFEST).read_text())
        assert manifest["stage_hash"] == "abc123"
        assert set(manifest["files"]) == {path.name for path in tmp_path.iterdir()} - {FIGURE_MANIFEST}
        assert set(pd.read_csv(tmp_path / "gallery_mse.csv")["stage_hash"]) == {"abc123"}


class TestFiles:
    """Tests the atomic artifact writers."""

    def test_table_hash_column(self, tmp_path):
        """Test that a hash adds a constant column and no hash leaves the table alone."""
        frame = pd.DataFrame({"regime": ["ae", "vae"], "score": [0.5, 0.25]})
        write_table(frame, tmp_path / "hashed.csv", "abc123")
        write_table(frame, tmp_path / "plain.csv")
        assert list(pd.read_csv(tmp_path / "hashed.csv")["stage_hash"]) == ["abc123", "abc123"]
        pd.testing.assert_frame_equal(pd.read_csv(tmp_path / "plain.csv"), frame)
        assert "stage_hash" not in frame.columns

    def test_svg_description(self, tmp_path):
        """Test that the hash is embedded in the SVG and the figure is closed."""
        figure, ax = plt.subplots()
        ax.plot([0, 1], [1, 0])
        path = write_svg(figure, tmp_path / "chart.svg", "abc123")
        assert "abc123" in path.read_text()
        assert not plt.fignum_exists(figure.number)

    def test_graymap(self, tmp_path):
        """Test that a graymap reads back with the same pixels."""
        pixels = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
        path = write_graymap(pixels, tmp_path / "tile.pgm")
        np.testing.assert_array_equal(np.asarray(Image.open(path)), pixels)

    def test_no_temporaries(self, tmp_path):
        """Test that writing leaves only the destination files behind."""
        frame = pd.DataFrame({"score": [1.0]})
        write_table(frame, tmp_path / "sub" / "a.csv")
        write_graymap(np.zeros((2, 2), dtype=np.uint8), tmp_path / "sub" / "b.pgm")
        assert sorted(path.name for path in (tmp_path / "sub").iterdir()) == ["a.csv", "b.pgm"]

    def test_overwrite(self, tmp_path):
        """Test that rewriting a table replaces it in place."""
        path = tmp_path / "a.csv"
        write_table(pd.DataFrame({"score": [1.0]}), path)
        write_table(pd.DataFrame({"score": [2.0]}), path)
        assert list(pd.read_csv(path)["score"]) == [2.0]
