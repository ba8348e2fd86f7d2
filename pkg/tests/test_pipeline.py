"""Test the experiment manifest and the resumable pipeline."""

import json
import shutil

import pandas as pd
import pytest

from dislab.analysis.files import FIGURE_MANIFEST
from dislab.container import load_container
from dislab.exceptions import ConfigurationError, MissingArtifactError
from dislab.models.profiles import PROFILES
from dislab.pipeline import (
    ExperimentManifest,
    gen_data,
    is_current,
    mark_stage,
    reproduce,
    train_run,
)
from dislab.store import RunStore
from dislab.utils import read_json
from tests.conftest import TINY_PROFILES, tiny_experiment

FRESH_COUNTS = {
    "gen_data": 1,
    "gen_tasks": 1,
    "train": 14,
    "metrics": 14,
    "probe": 6,
    "heads": 1,
    "report": 1,
}


@pytest.fixture(scope="module")
def reproduced(tmp_path_factory):
    """The tiny experiment reproduced into two independent stores."""
    PROFILES["tiny"] = TINY_PROFILES
    manifest = tiny_experiment()
    stores = [RunStore(tmp_path_factory.mktemp(name)) for name in ("a", "b")]
    executed = [reproduce(manifest, store) for store in stores]
    yield manifest, stores, executed
    PROFILES.pop("tiny", None)


def _files(store: RunStore) -> dict[str, bytes]:
    return {
        str(path.relative_to(store.root)): path.read_bytes()
        for path in sorted(store.root.rglob("*"))
        if path.is_file()
    }


class TestManifest:
    """Tests manifest parsing, overrides and digests."""

    def test_defaults(self):
        """Test the desk defaults and single-task expansion."""
        manifest = ExperimentManifest()
        assert manifest.profile == "desk"
        assert manifest.seeds == (0, 1, 2)
        regimes = manifest.expanded_regimes()
        assert len(regimes) == 15
        assert regimes[1:3] == ["single:0", "single:1"]
        assert manifest.latent_seed == 0

    def test_unknown_key(self):
        """Test that unknown keys are rejected."""
        with pytest.raises(ConfigurationError, match="epochs"):
            ExperimentManifest.from_dict({"epochs": 3})

    def test_dict_round_trip(self, tiny_manifest):
        """Test that to_dict/from_dict reproduce the manifest."""
        assert ExperimentManifest.from_dict(tiny_manifest.to_dict()) == tiny_manifest

    def test_load(self, tmp_path, tiny_manifest):
        """Test loading a JSON manifest and the defaults without a path."""
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"n_tasks": 3, "seeds": [4]}))
        loaded = ExperimentManifest.load(path)
        assert loaded.n_tasks == 3
        assert loaded.seeds == (4,)
        assert ExperimentManifest.load() == ExperimentManifest()

    @pytest.mark.parametrize(
        "bad",
        [{"profile": "huge"}, {"seeds": []}, {"regimes": ["bogus"]}, {"probe_regimes": ["single:10"]}],
    )
    def test_invalid(self, bad):
        """Test that invalid manifests fail at construction."""
        with pytest.raises(ConfigurationError):
            ExperimentManifest.from_dict(bad)

    def test_overrides(self):
        """Test that None overrides are ignored and metric overrides are routed."""
        manifest = ExperimentManifest().with_overrides(
            profile="paper", seeds=None, mig_denominator="entropy", dci_importance=None
        )
        assert manifest.profile == "paper"
        assert manifest.seeds == (0, 1, 2)
        assert manifest.metrics.mig_denominator == "entropy"
        assert manifest.metrics.dci_importance == "forest"

    def test_digests(self):
        """Test which stages a change invalidates."""
        base = ExperimentManifest()
        reseeded = base.with_overrides(master_seed=1)
        assert reseeded.data_digest() == base.data_digest()
        assert reseeded.tasks_digest() != base.tasks_digest()
        assert reseeded.train_digest("multi_head", 0) != base.train_digest("multi_head", 0)
        assert reseeded.train_digest("ae", 0) == base.train_digest("ae", 0)

        rescored = base.with_overrides(mig_denominator="entropy")
        assert rescored.train_digest("multi_head", 0) == base.train_digest("multi_head", 0)
        assert rescored.metrics_digest("multi_head", 0) != base.metrics_digest("multi_head", 0)
        assert rescored.report_digest() != base.report_digest()

    def test_digest_stable(self):
        """Test that equal manifests hash equally."""
        assert ExperimentManifest().report_digest() == ExperimentManifest().report_digest()


class TestStages:
    """Tests single stages."""

    def test_stage_records(self, tmp_path):
        """Test that a marked stage is current only while its outputs exist."""
        output = tmp_path / "out.bin"
        output.write_bytes(b"x")
        mark_stage(tmp_path, "train", "abc", {"seed": 0})
        mark_stage(tmp_path, "metrics", "def", {})
        assert is_current(tmp_path, "train", "abc", [output])
        assert not is_current(tmp_path, "train", "abd", [output])
        assert not is_current(tmp_path, "probe", "abc", [output])
        output.unlink()
        assert not is_current(tmp_path, "train", "abc", [output])
        assert set(read_json(tmp_path / "stage.json")) == {"train", "metrics"}

    def test_gen_data(self, tmp_path, tiny_manifest):
        """Test byte-identical datasets, skipping and forcing."""
        a, b = RunStore(tmp_path / "a"), RunStore(tmp_path / "b")
        assert gen_data(tiny_manifest, a)
        assert gen_data(tiny_manifest, b)
        assert a.dataset_path.read_bytes() == b.dataset_path.read_bytes()
        assert not gen_data(tiny_manifest, a)
        assert gen_data(tiny_manifest, a, force=True)
        manifest = load_container(a.dataset_path).manifest
        assert manifest["dataset"]["stage_hash"] == tiny_manifest.data_digest()

    def test_missing_prerequisite(self, tmp_path, tiny_manifest):
        """Test that training without data names the producing subcommand."""
        with pytest.raises(MissingArtifactError, match="gen-data"):
            train_run(tiny_manifest, RunStore(tmp_path), "multi_head", 0)

    def test_untrained_probe_regime(self, tmp_path, tiny_manifest):
        """Test that probes of regimes that are not trained are refused upfront."""
        manifest = tiny_manifest.with_overrides(regimes=("multi_head",), probe_regimes=("random",))
        with pytest.raises(ConfigurationError, match="random"):
            reproduce(manifest, RunStore(tmp_path))
        assert not (tmp_path / "data").exists()


class TestReproduce:
    """End-to-end runs of the tiny experiment."""

    def test_fresh_counts(self, reproduced):
        """Test that a fresh store runs every unit once."""
        _, _, executed = reproduced
        assert executed == [FRESH_COUNTS, FRESH_COUNTS]

    def test_artifacts(self, reproduced):
        """Test the report files and embedded stage hashes."""
        manifest, (store, _), _ = reproduced
        report_dir = store.report_dir
        for name in ["metrics.csv", "task_mse.csv", "reconstruction.csv", "rmse.csv", "claims.json", "metrics.svg"]:
            assert (report_dir / name).exists(), name
        assert (report_dir / "figures" / "gallery.pgm").exists()
        assert (report_dir / "figures" / "traversal_single_0.pgm").exists()
        claims = read_json(report_dir / "claims.json")
        assert claims["stage_hash"] == manifest.report_digest()
        assert claims["dataset"] == "minisprites"
        heads = read_json(store.heads_path)
        assert set(heads["sources"]) == set(manifest.head_sources)
        assert heads["stage_hash"] == manifest.heads_digest()
        metrics = read_json(store.metrics_path("vae", 1))
        assert metrics["provenance"]["stage_hash"] == manifest.metrics_digest("vae", 1)

    def test_report_files_carry_hash(self, reproduced):
        """Test that every file under the report directory is tied to the report hash."""
        manifest, (store, _), _ = reproduced
        digest = manifest.report_digest()
        figures = store.report_dir / "figures"
        listed = set(read_json(figures / FIGURE_MANIFEST)["files"])
        assert read_json(figures / FIGURE_MANIFEST)["stage_hash"] == digest
        for path in sorted(store.report_dir.rglob("*")):
            if not path.is_file():
                continue
            if path.parent == figures and path.name != FIGURE_MANIFEST:
                assert path.name in listed, path.name
            if path.suffix == ".csv":
                assert set(pd.read_csv(path)["stage_hash"]) == {digest}, path.name
            elif path.suffix == ".svg":
                assert digest in path.read_text(), path.name
            elif path.name == "stage.json":
                assert read_json(path)["report"]["hash"] == digest
            elif path.suffix == ".json" and path.name != FIGURE_MANIFEST:
                assert read_json(path)["stage_hash"] == digest, path.name
            else:
                assert path.suffix == ".pgm" or path.name == FIGURE_MANIFEST, path.name
        assert listed == {path.name for path in figures.iterdir()} - {FIGURE_MANIFEST}

    def test_deterministic(self, reproduced):
        """Test that two stores hold byte-identical artifacts."""
        _, (a, b), _ = reproduced
        files_a, files_b = _files(a), _files(b)
        assert files_a.keys() == files_b.keys()
        differing = [name for name in files_a if files_a[name] != files_b[name]]
        assert differing == []

    def test_up_to_date(self, reproduced):
        """Test that rerunning an unchanged experiment does nothing."""
        manifest, (store, _), _ = reproduced
        assert reproduce(manifest, store) == dict.fromkeys(FRESH_COUNTS, 0)

    def test_resume_report(self, reproduced):
        """Test that deleting the report reruns only the report."""
        manifest, (store, _), _ = reproduced
        before = _files(store)
        shutil.rmtree(store.report_dir)
        executed = reproduce(manifest, store)
        assert executed == {**dict.fromkeys(FRESH_COUNTS, 0), "report": 1}
        assert _files(store) == before

    def test_metric_change_reruns_metrics(self, reproduced):
        """Test that a metric setting invalidates metrics and report only."""
        manifest, (_, store), _ = reproduced
        executed = reproduce(manifest.with_overrides(mig_denominator="entropy"), store)
        assert executed == {**dict.fromkeys(FRESH_COUNTS, 0), "metrics": 14, "report": 1}
