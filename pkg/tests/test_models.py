"""Test regimes, architectures, training loops and model persistence."""

import numpy as np
import pytest

from dislab.exceptions import ConfigurationError, DataError
from dislab.models import (
    GROUND_TRUTH,
    TrainingProfile,
    build_multitask_model,
    decode,
    decoder_specs,
    encode,
    encoder_specs,
    get_profile,
    latent_head_probe,
    load_model,
    parse_regime,
    save_model,
    train_autoencoder,
    train_decoder_probe,
    train_multitask,
)
from dislab.engine import Network
from dislab.models.model import Regime
from tests.conftest import TINY_PROFILES


def _assert_same_params(a: Network, b: Network) -> None:
    assert set(a.params) == set(b.params)
    for name in a.params:
        np.testing.assert_array_equal(a.params[name], b.params[name])


class TestRegimes:
    """Tests regime parsing."""

    @pytest.mark.parametrize(
        ("text", "expected"),
        [("random", Regime("random")), ("single:3", Regime("single", 3)), ("vae", Regime("vae"))],
    )
    def test_parse(self, text, expected):
        """Test valid regime names."""
        regime = parse_regime(text, n_tasks=10)
        assert regime == expected
        assert str(regime) == text

    @pytest.mark.parametrize("text", ["multi", "single", "single:x", "ae:1", "single:10"])
    def test_invalid(self, text):
        """Test that malformed regimes are rejected."""
        with pytest.raises(ConfigurationError):
            parse_regime(text, n_tasks=10)

    def test_families(self):
        """Test the multi-task and auto-encoder families."""
        assert parse_regime("one_head").is_multitask
        assert parse_regime("ae").is_autoencoder
        assert not parse_regime("vae").is_multitask


class TestArchitectures:
    """Tests declared shapes."""

    @pytest.mark.parametrize("size", [16, 32, 64])
    def test_encoder_decoder_shapes(self, size):
        """Test that encoder and decoder mirror each other."""
        encoder = Network(encoder_specs((1, size, size), 8), (1, size, size))
        decoder = Network(decoder_specs((1, size, size)), (8, 1, 1))
        assert encoder.output_shape == (8,)
        assert decoder.output_shape == (1, size, size)

    def test_encoder_64_stages(self):
        """Test that 64px images halve to 1x1 through the six conv stages."""
        encoder = Network(encoder_specs((1, 64, 64), 10), (1, 64, 64))
        conv_shapes = [layer.out_shape for layer in encoder.layers if layer.spec.kind == "conv2d"]
        assert conv_shapes == [
            (32, 32, 32),
            (32, 16, 16),
            (64, 8, 8),
            (128, 4, 4),
            (256, 2, 2),
            (256, 1, 1),
        ]
        assert encoder.output_shape == (10,)

    def test_variational_encoder(self):
        """Test that the variational encoder doubles its output."""
        encoder = Network(encoder_specs((1, 16, 16), 8, variational=True), (1, 16, 16))
        assert encoder.output_shape == (16,)

    @pytest.mark.parametrize("shape", [(1, 24, 24), (1, 16, 32)])
    def test_unsupported_images(self, shape):
        """Test that non-power-of-two or non-square images are rejected."""
        with pytest.raises(ConfigurationError):
            encoder_specs(shape)


class TestProfiles:
    """Tests training profiles."""

    def test_lr_schedule(self):
        """Test step halving of the learning rate."""
        profile = TrainingProfile(epochs=30, batch_size=8, lr=2e-4, lr_halving_every=10)
        assert profile.lr_at(0) == pytest.approx(2e-4)
        assert profile.lr_at(9) == pytest.approx(2e-4)
        assert profile.lr_at(10) == pytest.approx(1e-4)
        assert profile.lr_at(25) == pytest.approx(5e-5)

    def test_constant_lr(self):
        """Test that no halving keeps the rate constant."""
        assert TrainingProfile(epochs=1, batch_size=1, lr=0.1).lr_at(100) == 0.1

    def test_invalid(self):
        """Test that non-positive settings are rejected."""
        with pytest.raises(ConfigurationError):
            TrainingProfile(epochs=1, batch_size=0, lr=0.1)
        with pytest.raises(ConfigurationError):
            TrainingProfile(epochs=1, batch_size=1, lr=0.1, lr_halving_every=0)

    def test_lookup_errors(self):
        """Test unknown profile and stage names."""
        with pytest.raises(ConfigurationError, match="Unknown profile"):
            get_profile("huge", "multitask")
        with pytest.raises(ConfigurationError, match="no stage"):
            get_profile("desk", "pretraining")  # type: ignore[arg-type]
        assert get_profile("tiny", "multitask") == TINY_PROFILES["multitask"]


class TestMultitask:
    """Tests multi-task training."""

    def test_random_is_untrained(self, tiny_dataset, tiny_targets):
        """Test that the random regime keeps the initial parameters."""
        model = train_multitask(tiny_dataset, tiny_targets, "random", TINY_PROFILES["multitask"], 0)
        initial = build_multitask_model(tiny_dataset.image_shape, 2, Regime("random"), 0)
        _assert_same_params(model.encoder, initial.encoder)
        assert model.manifest["loss_history"] == []

    def test_single_trains_one_head(self, tiny_dataset, tiny_targets):
        """Test that single:1 updates the encoder and head 1 only."""
        model = train_multitask(tiny_dataset, tiny_targets, "single:1", TINY_PROFILES["multitask"], 0)
        initial = build_multitask_model(tiny_dataset.image_shape, 2, Regime("single", 1), 0)
        _assert_same_params(model.heads[0], initial.heads[0])
        assert not np.array_equal(model.heads[1].params["layer0.weight"], initial.heads[1].params["layer0.weight"])
        assert not np.array_equal(model.encoder.params["layer0.weight"], initial.encoder.params["layer0.weight"])

    def test_one_head_shape(self, tiny_dataset, tiny_targets):
        """Test that one_head uses a single multi-output head."""
        model = train_multitask(tiny_dataset, tiny_targets, "one_head", TINY_PROFILES["multitask"], 0)
        assert len(model.heads) == 1
        assert model.heads[0].output_shape == (2,)
        assert len(model.manifest["test_task_mse"]) == 2

    def test_multi_head_reduces_loss(self, tiny_dataset, tiny_targets):
        """Test that training lowers the objective below its initial value."""
        profile = TrainingProfile(epochs=4, batch_size=16, lr=1e-3)
        model = train_multitask(tiny_dataset, tiny_targets, "multi_head", profile, 0)
        assert len(model.manifest["loss_history"]) == 4
        assert model.manifest["loss_history"][-1] < model.manifest["initial_loss"]

    def test_deterministic(self, tiny_dataset, tiny_targets):
        """Test that a seed fully determines the trained model."""
        a = train_multitask(tiny_dataset, tiny_targets, "multi_head", TINY_PROFILES["multitask"], 3)
        b = train_multitask(tiny_dataset, tiny_targets, "multi_head", TINY_PROFILES["multitask"], 3)
        _assert_same_params(a.encoder, b.encoder)
        assert a.manifest == b.manifest

    def test_rejects_autoencoder_regime(self, tiny_dataset, tiny_targets):
        """Test that auto-encoder regimes are refused."""
        with pytest.raises(ConfigurationError):
            train_multitask(tiny_dataset, tiny_targets, "ae", TINY_PROFILES["multitask"], 0)

    def test_target_rows(self, tiny_dataset, tiny_targets):
        """Test that misaligned targets are rejected."""
        with pytest.raises(DataError):
            train_multitask(tiny_dataset, tiny_targets[:10], "multi_head", TINY_PROFILES["multitask"], 0)

    def test_save_load(self, tiny_dataset, tiny_targets, tmp_path):
        """Test that a saved model encodes identically after loading."""
        model = train_multitask(tiny_dataset, tiny_targets, "multi_head", TINY_PROFILES["multitask"], 0)
        loaded = load_model(save_model(tmp_path / "model.dtb", model))
        assert loaded.regime == model.regime
        assert len(loaded.heads) == 2
        assert loaded.manifest == model.manifest
        np.testing.assert_array_equal(encode(loaded, tiny_dataset.images), encode(model, tiny_dataset.images))


class TestAutoencoders:
    """Tests AE, VAE and decoder probes."""

    def test_ae(self, tiny_dataset):
        """Test that the AE reconstructs images of the right shape."""
        model = train_autoencoder(tiny_dataset, "ae", TINY_PROFILES["autoencoder"], 0)
        recon = decode(model, encode(model, tiny_dataset.images[:4]))
        assert recon.shape == (4, 1, 16, 16)
        assert model.manifest["beta"] is None
        assert np.isfinite(model.manifest["test_reconstruction_mse"])

    def test_vae(self, tiny_dataset):
        """Test that VAE latents are the posterior mean."""
        model = train_autoencoder(tiny_dataset, "vae", TINY_PROFILES["autoencoder"], 0)
        assert model.variational
        assert encode(model, tiny_dataset.images[:3]).shape == (3, 8)
        assert model.manifest["beta"] == 1.0

    def test_unknown_kind(self, tiny_dataset):
        """Test that only ae and vae are accepted."""
        with pytest.raises(ConfigurationError):
            train_autoencoder(tiny_dataset, "gan", TINY_PROFILES["autoencoder"], 0)

    def test_probe_freezes_encoder(self, tiny_dataset, tiny_targets):
        """Test that the decoder probe leaves the encoder untouched."""
        model = train_multitask(tiny_dataset, tiny_targets, "multi_head", TINY_PROFILES["multitask"], 0)
        before = {name: value.copy() for name, value in model.encoder.params.items()}
        probe = train_decoder_probe(model, tiny_dataset, TINY_PROFILES["decoder_probe"], 0)
        for name, value in before.items():
            np.testing.assert_array_equal(model.encoder.params[name], value)
        assert probe.encoder is model.encoder
        assert probe.manifest["source_regime"] == "multi_head"
        assert len(probe.manifest["loss_history"]) == 2


class TestHeadProbe:
    """Tests task heads on frozen representations."""

    def test_ground_truth(self, tiny_dataset, tiny_targets):
        """Test per-seed, per-task RMSE on ground-truth factors."""
        result = latent_head_probe(GROUND_TRUTH, tiny_dataset, tiny_targets, TINY_PROFILES["latent_heads"], [0, 1])
        assert np.asarray(result.rmse).shape == (2, 2)
        assert result.mean > 0
        assert result.to_dict()["seeds"] == [0, 1]

    def test_single_seed_std(self, tiny_dataset, tiny_targets):
        """Test that one seed gives zero std."""
        result = latent_head_probe(GROUND_TRUTH, tiny_dataset, tiny_targets, TINY_PROFILES["latent_heads"], [0])
        assert result.std == 0.0
