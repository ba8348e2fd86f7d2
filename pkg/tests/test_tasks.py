"""Test the random-network task bank."""

import numpy as np
import pytest

from dislab import tasks
from dislab.exceptions import DataError
from dislab.tasks import (
    MAX_ATTEMPTS,
    apply_standardization,
    build_bank,
    build_targets,
    eval_task,
    load_bank,
    save_bank,
)


class TestTaskBank:
    """Tests drawing, evaluating and persisting task banks."""

    def test_deterministic(self):
        """Test that a master seed fully determines the bank."""
        a = build_bank(5, 3, master_seed=7)
        b = build_bank(5, 3, master_seed=7)
        assert a.task_seeds == b.task_seeds
        assert a.checksum() == b.checksum()
        assert build_bank(5, 3, master_seed=8).checksum() != a.checksum()

    def test_prefix_stable(self):
        """Test that adding tasks does not change the earlier ones."""
        short = build_bank(5, 2, master_seed=0)
        long = build_bank(5, 4, master_seed=0)
        assert long.task_seeds[:2] == short.task_seeds

    def test_eval_task(self, tiny_bank, tiny_dataset):
        """Test that eval_task agrees with the cached targets."""
        values = tiny_dataset.factor_values
        np.testing.assert_allclose(eval_task(tiny_bank, 1, values), tiny_bank.targets[:, 1])
        scalar = eval_task(tiny_bank, 0, values[3])
        assert isinstance(scalar, float)
        assert scalar == pytest.approx(tiny_bank.targets[3, 0])

    def test_eval_task_by_hand(self, tiny_bank, tiny_dataset):
        """Test eval_task against a direct tanh forward pass of the task weights."""
        params = tiny_bank.networks[0].params
        hidden = tiny_dataset.factor_values
        for layer in (0, 2, 4, 6):
            hidden = np.tanh(hidden @ params[f"layer{layer}.weight"] + params[f"layer{layer}.bias"])
        expected = (hidden @ params["layer8.weight"] + params["layer8.bias"])[:, 0]
        np.testing.assert_allclose(eval_task(tiny_bank, 0, tiny_dataset.factor_values), expected, rtol=1e-10)

    def test_parameter_count(self):
        """Test the size of a task network over five factors."""
        bank = build_bank(5, 1, master_seed=0)
        assert bank.networks[0].parameter_count == 273_001

    def test_eval_errors(self, tiny_bank):
        """Test out-of-range task indices and wrong factor dimensions."""
        with pytest.raises(DataError, match="out of range"):
            eval_task(tiny_bank, 2, np.zeros(5))
        with pytest.raises(DataError, match="dimension"):
            eval_task(tiny_bank, 0, np.zeros(4))

    def test_targets_shape_and_spread(self, tiny_targets):
        """Test that every task varies over the dataset."""
        assert tiny_targets.shape == (108, 2)
        assert (tiny_targets.std(axis=0) > 1e-6).all()
        assert abs(np.corrcoef(tiny_targets.T)[0, 1]) < 0.99

    def test_constant_reference(self):
        """Test that a constant reference exhausts the redraws."""
        with pytest.raises(DataError, match=f"{MAX_ATTEMPTS} attempts"):
            build_bank(5, 1, master_seed=0, reference=np.zeros((10, 5)))

    def test_guard_without_reference(self, monkeypatch):
        """Test that the degenerate-task guard runs when no reference is given."""
        monkeypatch.setattr(tasks, "MIN_TARGET_STD", 1e9)
        with pytest.raises(DataError, match=f"{MAX_ATTEMPTS} attempts"):
            build_bank(5, 1, master_seed=0)

    def test_invalid_sizes(self):
        """Test that empty banks are rejected."""
        with pytest.raises(DataError):
            build_bank(5, 0, master_seed=0)

    def test_save_load(self, tiny_bank, tmp_path):
        """Test that a bank regenerates from its manifest."""
        path = save_bank(tmp_path / "bank.dtb", tiny_bank)
        loaded = load_bank(path)
        assert loaded.checksum() == tiny_bank.checksum()
        assert loaded.task_seeds == tiny_bank.task_seeds
        assert not loaded.standardized

    def test_tampered_checksum(self, tiny_bank, tmp_path):
        """Test that a modified seed list fails the checksum."""
        from dislab.container import DTBContainer, save_container

        manifest = tiny_bank.to_manifest()
        manifest["task_seeds"] = [s + 1 for s in manifest["task_seeds"]]
        path = save_container(tmp_path / "bank.dtb", DTBContainer(manifest=manifest))
        with pytest.raises(DataError, match="checksum"):
            load_bank(path)

    def test_standardization(self, tiny_dataset, tmp_path):
        """Test that standardized targets have zero mean and unit std on train."""
        bank = build_bank(5, 2, master_seed=0)
        raw = build_targets(bank, tiny_dataset)
        targets = build_targets(bank, tiny_dataset, standardize=True)
        train = tiny_dataset.rows("train")
        np.testing.assert_allclose(targets[train].mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(targets[train].std(axis=0), 1.0, atol=1e-9)
        loaded = load_bank(save_bank(tmp_path / "bank.dtb", bank))
        assert loaded.standardized
        np.testing.assert_allclose(apply_standardization(loaded, raw), targets)
