"""Training loops for multi-task models, auto-encoders, decoder probes and latent heads."""

from collections.abc import Iterator
from typing import Any, Union

import numpy as np
from loguru import logger
from tqdm import tqdm

from dislab.data.io import LabeledDataset
from dislab.engine import (
    AdamState,
    Network,
    adam_step,
    gaussian_kl,
    mse_loss,
    summed_sse_loss,
)
from dislab.exceptions import ConfigurationError, DataError, NumericError
from dislab.models.architectures import LATENT_DIM, decoder_specs, encoder_specs, head_specs
from dislab.models.model import Regime, TrainedModel, decode, encode, parse_regime
from dislab.models.profiles import TrainingProfile
from dislab.utils import derive_seed, make_rng

LOGVAR_BOUND = 10.0


def _minibatches(n_rows: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    order = rng.permutation(n_rows)
    for start in range(0, n_rows, batch_size):
        yield order[start : start + batch_size]


def _check_loss(loss: float, snapshot: dict[str, Any]) -> None:
    if not np.isfinite(loss):
        nan_msg = (
            f"Non-finite loss {loss} in {snapshot.get('regime')} training at epoch "
            f"{snapshot.get('epoch')}, batch {snapshot.get('batch')}"
        )
        raise NumericError(nan_msg, snapshot={**snapshot, "loss": float(loss)})


def _set_lr(states: list[AdamState], lr: float) -> None:
    for state in states:
        state.lr = lr


def _encoder_of(model: TrainedModel) -> Network:
    if model.encoder is None:
        no_encoder_msg = f"Model with regime {model.regime} has no encoder"
        raise ConfigurationError(no_encoder_msg)
    return model.encoder


def _decoder_of(model: TrainedModel) -> Network:
    if model.decoder is None:
        no_decoder_msg = f"Model with regime {model.regime} has no decoder"
        raise ConfigurationError(no_decoder_msg)
    return model.decoder


def build_multitask_model(
    image_shape: tuple[int, int, int],
    n_tasks: int,
    regime: Regime,
    seed: int,
    latent_dim: int = LATENT_DIM,
) -> TrainedModel:
    """Initialize an encoder plus task heads.

    The encoder seed does not depend on the regime, so every regime trained
    with the same seed starts from the same encoder.
    """
    encoder = Network(encoder_specs(image_shape, latent_dim), image_shape).initialize(
        derive_seed(seed, "encoder")
    )
    if regime.name == "one_head":
        heads = [
            Network(head_specs(n_tasks), (latent_dim,)).initialize(derive_seed(seed, "head", 0))
        ]
    else:
        heads = [
            Network(head_specs(1), (latent_dim,)).initialize(derive_seed(seed, "head", i))
            for i in range(n_tasks)
        ]
    return TrainedModel(regime=regime, latent_dim=latent_dim, encoder=encoder, heads=heads)


def predict_tasks(model: TrainedModel, images: np.ndarray) -> np.ndarray:
    """(N, n_tasks) task predictions of a multi-task model."""
    latents = encode(model, images)
    if model.regime.name == "one_head":
        return model.heads[0].predict(latents)
    return np.concatenate([head.predict(latents) for head in model.heads], axis=1)


def task_mse(model: TrainedModel, images: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Per-task mean squared error on ``images``."""
    predictions = predict_tasks(model, images).astype(np.float64)
    return np.mean((predictions - targets) ** 2, axis=0)


def _multitask_objective(regime: Regime, per_task: np.ndarray) -> float:
    if regime.name == "one_head":
        return float(per_task.mean())
    if regime.name == "single":
        return float(per_task[regime.task])
    return float(per_task.sum())


def _multitask_step(
    model: TrainedModel,
    x: np.ndarray,
    t: np.ndarray,
    trained_heads: list[int],
    encoder_state: AdamState,
    head_states: dict[int, AdamState],
    snapshot: dict[str, Any],
) -> float:
    encoder = _encoder_of(model)
    z = encoder.forward(x)
    grad_z = np.zeros_like(z)
    head_grads = {}
    total = 0.0
    for i in trained_heads:
        head = model.heads[i]
        prediction = head.forward(z)
        target = t if model.regime.name == "one_head" else t[:, i : i + 1]
        loss, grad_out = mse_loss(prediction, target)
        head_grads[i], grad_in = head.backward(grad_out)
        grad_z += grad_in
        total += loss
    _check_loss(total, snapshot)

    encoder_grads, _ = encoder.backward(grad_z)
    adam_step(encoder_state, encoder.params, encoder_grads)
    for i, grads in head_grads.items():
        adam_step(head_states[i], model.heads[i].params, grads)
    return total


def train_multitask(
    dataset: LabeledDataset,
    targets: np.ndarray,
    regime: Union[Regime, str],
    profile: TrainingProfile,
    seed: int,
    *,
    latent_dim: int = LATENT_DIM,
    verbose: bool = False,
) -> TrainedModel:
    """Train a shared encoder with task heads on the train split.

    ``multi_head`` minimizes the sum of per-task MSEs and feeds the sum of the
    heads' input gradients into the encoder. ``one_head`` minimizes the MSE of
    one shared head predicting all tasks. ``single:i`` builds every head but
    only trains head ``i`` (other heads stay at initialization). ``random``
    performs no update at all.

    Args:
        dataset (LabeledDataset): Split dataset.
        targets (np.ndarray): (N, n_tasks) target matrix aligned with the dataset.
        regime (Regime | str): Training regime.
        profile (TrainingProfile): Epochs, batch size and learning rate.
        seed (int): Run seed.
        latent_dim (int, optional): Representation size. Defaults to 8.
        verbose (bool, optional): Log per-epoch losses. Defaults to False.

    Returns:
        TrainedModel: The model; its manifest holds the loss history and the
        per-task train and test MSE.

    Raises:
        ConfigurationError: If the regime is not a multi-task regime.
        NumericError: If the loss becomes non-finite.
    """
    n_tasks = targets.shape[1]
    regime = parse_regime(regime, n_tasks) if isinstance(regime, str) else regime
    if not regime.is_multitask:
        regime_msg = f"train_multitask does not handle regime '{regime}'"
        raise ConfigurationError(regime_msg)
    if regime.name == "single" and not 0 <= int(regime.task or 0) < n_tasks:
        task_msg = f"Task index {regime.task} out of range for {n_tasks} tasks"
        raise ConfigurationError(task_msg)
    if targets.shape[0] != len(dataset):
        rows_msg = f"Targets have {targets.shape[0]} rows, dataset has {len(dataset)}"
        raise DataError(rows_msg)

    model = build_multitask_model(dataset.image_shape, n_tasks, regime, seed, latent_dim)
    train, test = dataset.rows("train"), dataset.rows("test")
    x_train = dataset.images[train]
    t_train = targets[train].astype(np.float32)

    if regime.name == "single":
        trained_heads = [int(regime.task)]  # type: ignore[arg-type]
    else:
        trained_heads = list(range(len(model.heads)))
    initial_loss = _multitask_objective(regime, task_mse(model, x_train, targets[train]))

    history: list[float] = []
    if regime.name != "random":
        encoder_state = AdamState(lr=profile.lr)
        head_states = {i: AdamState(lr=profile.lr) for i in trained_heads}
        rng = make_rng(seed, "batches", str(regime))
        for epoch in tqdm(range(profile.epochs), desc=str(regime), disable=not verbose):
            _set_lr([encoder_state, *head_states.values()], profile.lr_at(epoch))
            losses = []
            for batch, idx in enumerate(_minibatches(len(train), profile.batch_size, rng)):
                snapshot = {"regime": str(regime), "epoch": epoch, "batch": batch, "seed": seed}
                losses.append(
                    _multitask_step(
                        model, x_train[idx], t_train[idx], trained_heads,
                        encoder_state, head_states, snapshot,
                    )
                )
            history.append(float(np.mean(losses)))
            if verbose:
                logger.debug(f"{regime} epoch {epoch}: loss {history[-1]:.4f}")

    train_mse = task_mse(model, x_train, targets[train])
    test_mse = task_mse(model, dataset.images[test], targets[test])
    model.manifest = {
        "regime": str(regime),
        "seed": seed,
        "profile": profile.to_dict(),
        "latent_dim": latent_dim,
        "n_tasks": n_tasks,
        "initial_loss": initial_loss,
        "loss_history": history,
        "train_task_mse": train_mse.tolist(),
        "test_task_mse": test_mse.tolist(),
        "test_objective": _multitask_objective(regime, test_mse),
    }
    if verbose:
        logger.success(
            f"Trained {regime} (seed {seed}): test task MSE {float(test_mse.mean()):.4f}"
        )
    return model


def build_autoencoder(
    image_shape: tuple[int, int, int],
    kind: str,
    seed: int,
    latent_dim: int = LATENT_DIM,
) -> TrainedModel:
    """Initialize an encoder (variational for ``vae``) and a decoder."""
    encoder = Network(
        encoder_specs(image_shape, latent_dim, variational=kind == "vae"), image_shape
    ).initialize(derive_seed(seed, "encoder"))
    decoder = Network(decoder_specs(image_shape), (latent_dim, 1, 1)).initialize(
        derive_seed(seed, "decoder")
    )
    return TrainedModel(
        regime=Regime(kind), latent_dim=latent_dim, encoder=encoder, decoder=decoder
    )


def reconstruction_mse(model: TrainedModel, images: np.ndarray) -> float:
    """Per-pixel MSE of decode(encode(images)); variational models use the mean."""
    recon = decode(model, encode(model, images))
    return float(np.mean((recon.astype(np.float64) - images) ** 2))


def _vae_step(
    model: TrainedModel,
    x: np.ndarray,
    beta: float,
    rng: np.random.Generator,
    states: tuple[AdamState, AdamState],
    snapshot: dict[str, Any],
) -> float:
    encoder, decoder = _encoder_of(model), _decoder_of(model)
    d = model.latent_dim
    stats = encoder.forward(x)
    mu = stats[:, :d]
    raw_logvar = stats[:, d:]
    logvar = np.clip(raw_logvar, -LOGVAR_BOUND, LOGVAR_BOUND)
    std = np.exp(0.5 * logvar)
    eps = rng.standard_normal(mu.shape).astype(mu.dtype)
    z = mu + std * eps

    recon = decoder.forward(z.reshape(-1, d, 1, 1))
    rec_loss, grad_recon = summed_sse_loss(recon, x)
    kl, grad_mu_kl, grad_logvar_kl = gaussian_kl(mu, logvar)
    loss = rec_loss + beta * kl
    _check_loss(loss, snapshot)

    decoder_grads, grad_z = decoder.backward(grad_recon)
    grad_z = grad_z.reshape(-1, d)
    grad_mu = grad_z + beta * grad_mu_kl
    grad_logvar = grad_z * eps * 0.5 * std + beta * grad_logvar_kl
    # Clipped entries receive no gradient.
    grad_logvar = grad_logvar * (np.abs(raw_logvar) < LOGVAR_BOUND)
    encoder_grads, _ = encoder.backward(np.concatenate([grad_mu, grad_logvar], axis=1))
    adam_step(states[0], encoder.params, encoder_grads)
    adam_step(states[1], decoder.params, decoder_grads)
    return loss


def _ae_step(
    model: TrainedModel,
    x: np.ndarray,
    states: tuple[AdamState, AdamState],
    snapshot: dict[str, Any],
) -> float:
    encoder, decoder = _encoder_of(model), _decoder_of(model)
    z = encoder.forward(x)
    recon = decoder.forward(z.reshape(-1, model.latent_dim, 1, 1))
    loss, grad_recon = mse_loss(recon, x)
    _check_loss(loss, snapshot)
    decoder_grads, grad_z = decoder.backward(grad_recon)
    encoder_grads, _ = encoder.backward(grad_z.reshape(z.shape))
    adam_step(states[0], encoder.params, encoder_grads)
    adam_step(states[1], decoder.params, decoder_grads)
    return loss


def train_autoencoder(
    dataset: LabeledDataset,
    kind: str,
    profile: TrainingProfile,
    seed: int,
    *,
    beta: float = 1.0,
    latent_dim: int = LATENT_DIM,
    verbose: bool = False,
) -> TrainedModel:
    """Train an auto-encoder (``ae``) or a variational auto-encoder (``vae``).

    The AE minimizes per-pixel MSE. The VAE minimizes the per-image summed
    squared error plus ``beta`` times the analytic Gaussian KL, sampling the
    latent with the reparameterization trick.

    Raises:
        ConfigurationError: If ``kind`` is not ``ae`` or ``vae``.
        NumericError: If the loss becomes non-finite.
    """
    if kind not in ("ae", "vae"):
        kind_msg = f"Auto-encoder kind must be 'ae' or 'vae', got '{kind}'"
        raise ConfigurationError(kind_msg)
    model = build_autoencoder(dataset.image_shape, kind, seed, latent_dim)
    train, test = dataset.rows("train"), dataset.rows("test")
    x_train = dataset.images[train]
    initial_mse = reconstruction_mse(model, x_train)

    states = (AdamState(lr=profile.lr), AdamState(lr=profile.lr))
    batch_rng = make_rng(seed, "batches", kind)
    noise_rng = make_rng(seed, "reparameterization")
    history: list[float] = []
    for epoch in tqdm(range(profile.epochs), desc=kind, disable=not verbose):
        _set_lr(list(states), profile.lr_at(epoch))
        losses = []
        for batch, idx in enumerate(_minibatches(len(train), profile.batch_size, batch_rng)):
            snapshot = {"regime": kind, "epoch": epoch, "batch": batch, "seed": seed}
            if kind == "vae":
                losses.append(_vae_step(model, x_train[idx], beta, noise_rng, states, snapshot))
            else:
                losses.append(_ae_step(model, x_train[idx], states, snapshot))
        history.append(float(np.mean(losses)))
        if verbose:
            logger.debug(f"{kind} epoch {epoch}: loss {history[-1]:.4f}")

    model.manifest = {
        "regime": kind,
        "seed": seed,
        "profile": profile.to_dict(),
        "latent_dim": latent_dim,
        "beta": beta if kind == "vae" else None,
        "loss_history": history,
        "initial_reconstruction_mse": initial_mse,
        "train_reconstruction_mse": reconstruction_mse(model, x_train),
        "test_reconstruction_mse": reconstruction_mse(model, dataset.images[test]),
    }
    if verbose:
        logger.success(
            f"Trained {kind} (seed {seed}): test reconstruction MSE "
            f"{model.manifest['test_reconstruction_mse']:.5f}"
        )
    return model


def train_decoder_probe(
    model: TrainedModel,
    dataset: LabeledDataset,
    profile: TrainingProfile,
    seed: int,
    *,
    verbose: bool = False,
) -> TrainedModel:
    """Train a fresh decoder on the frozen encoder's latents.

    The encoder never enters the optimizer; latents are computed once.

    Returns:
        TrainedModel: Regime ``decoder_probe`` sharing ``model.encoder``; its
        manifest records the source regime and the test reconstruction MSE.
    """
    if model.encoder is None:
        no_encoder_msg = f"Cannot probe model with regime {model.regime}: it has no encoder"
        raise ConfigurationError(no_encoder_msg)
    d = model.latent_dim
    train, test = dataset.rows("train"), dataset.rows("test")
    x_train = dataset.images[train]
    z_train = encode(model, x_train).reshape(-1, d, 1, 1)

    decoder = Network(decoder_specs(dataset.image_shape), (d, 1, 1)).initialize(
        derive_seed(seed, "probe_decoder")
    )
    probe = TrainedModel(
        regime=Regime("decoder_probe"), latent_dim=d, encoder=model.encoder, decoder=decoder
    )
    state = AdamState(lr=profile.lr)
    rng = make_rng(seed, "batches", "decoder_probe", str(model.regime))
    history: list[float] = []
    for epoch in tqdm(range(profile.epochs), desc="decoder probe", disable=not verbose):
        state.lr = profile.lr_at(epoch)
        losses = []
        for batch, idx in enumerate(_minibatches(len(train), profile.batch_size, rng)):
            recon = decoder.forward(z_train[idx])
            loss, grad = mse_loss(recon, x_train[idx])
            _check_loss(loss, {"regime": "decoder_probe", "epoch": epoch, "batch": batch})
            grads, _ = decoder.backward(grad)
            adam_step(state, decoder.params, grads)
            losses.append(loss)
        history.append(float(np.mean(losses)))
        if verbose:
            logger.debug(f"decoder probe epoch {epoch}: loss {history[-1]:.5f} (lr {state.lr:.2e})")

    probe.manifest = {
        "regime": "decoder_probe",
        "source_regime": str(model.regime),
        "source_seed": model.manifest.get("seed"),
        "seed": seed,
        "profile": profile.to_dict(),
        "loss_history": history,
        "train_reconstruction_mse": reconstruction_mse(probe, x_train),
        "test_reconstruction_mse": reconstruction_mse(probe, dataset.images[test]),
    }
    if verbose:
        logger.success(
            f"Decoder probe on {model.regime}: test MSE "
            f"{probe.manifest['test_reconstruction_mse']:.5f}"
        )
    return probe


def standardize_inputs(
    train_inputs: np.ndarray, *others: np.ndarray
) -> tuple[np.ndarray, ...]:
    """Scale every array with the train mean and std (constant columns are only centered)."""
    mean = train_inputs.mean(axis=0)
    std = train_inputs.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return tuple(((array - mean) / std).astype(np.float32) for array in (train_inputs, *others))


def train_heads_on_latents(
    train_inputs: np.ndarray,
    train_targets: np.ndarray,
    test_inputs: np.ndarray,
    test_targets: np.ndarray,
    profile: TrainingProfile,
    seed: int,
    *,
    verbose: bool = False,
) -> dict[str, Any]:
    """Fit one tanh head per task on frozen inputs and report test RMSE.

    Inputs are latents or ground-truth factors, standardized with the train
    statistics.

    Returns:
        dict: ``rmse`` (per task), ``mean_rmse`` and the loss history.
    """
    if train_inputs.shape[0] != train_targets.shape[0]:
        rows_msg = (
            f"Inputs have {train_inputs.shape[0]} rows, targets have {train_targets.shape[0]}"
        )
        raise DataError(rows_msg)
    x_train, x_test = standardize_inputs(train_inputs, test_inputs)
    t_train = train_targets.astype(np.float32)
    n_tasks = train_targets.shape[1]
    heads = [
        Network(head_specs(1, "tanh"), (x_train.shape[1],)).initialize(
            derive_seed(seed, "latent_head", i)
        )
        for i in range(n_tasks)
    ]
    states = [AdamState(lr=profile.lr) for _ in heads]
    rng = make_rng(seed, "batches", "latent_heads")
    history: list[float] = []
    for epoch in tqdm(range(profile.epochs), desc="latent heads", disable=not verbose):
        _set_lr(states, profile.lr_at(epoch))
        losses = []
        for batch, idx in enumerate(_minibatches(len(x_train), profile.batch_size, rng)):
            total = 0.0
            for i, (head, state) in enumerate(zip(heads, states)):
                loss, grad = mse_loss(head.forward(x_train[idx]), t_train[idx, i : i + 1])
                _check_loss(loss, {"regime": "latent_heads", "epoch": epoch, "batch": batch})
                grads, _ = head.backward(grad)
                adam_step(state, head.params, grads)
                total += loss
            losses.append(total)
        history.append(float(np.mean(losses)))

    predictions = np.concatenate([head.predict(x_test) for head in heads], axis=1)
    rmse = np.sqrt(np.mean((predictions.astype(np.float64) - test_targets) ** 2, axis=0))
    return {"rmse": rmse.tolist(), "mean_rmse": float(rmse.mean()), "loss_history": history}

