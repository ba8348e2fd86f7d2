"""Experiment manifest and the resumable pipeline stages.

Every stage hashes the manifest slice it depends on together with the
hashes of its upstream stages. The digest is written to the ``stage.json``
of the stage's directory and embedded in its artifacts; a stage whose
digest matches and whose outputs exist is skipped.
"""

from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
from loguru import logger

from dislab.analysis.report import assemble_report, write_qualitative, write_report
from dislab.data import LabeledDataset, SpriteProfile, load_dataset, make_minisprites, save_dataset, split
from dislab.exceptions import ConfigurationError
from dislab.metrics import MetricConfig, full_report, save_report
from dislab.models import (
    GROUND_TRUTH,
    TrainedModel,
    get_profile,
    latent_head_probe,
    load_model,
    parse_regime,
    save_model,
    train_autoencoder,
    train_decoder_probe,
    train_multitask,
)
from dislab.models.profiles import PROFILES
from dislab.store import RunStore
from dislab.tasks import build_bank, build_targets, load_bank, save_bank
from dislab.utils import read_json, stable_hash, write_json_atomic

STAGES = ("gen_data", "gen_tasks", "train", "metrics", "probe", "heads", "report")


@dataclass(frozen=True)
class ExperimentManifest:
    """The complete closure of an experiment; defaults give the desk run."""

    sprites: SpriteProfile = field(default_factory=SpriteProfile)
    test_fraction: float = 0.2
    data_seed: int = 0
    n_tasks: int = 10
    master_seed: int = 0
    standardize_targets: bool = False
    regimes: tuple[str, ...] = ("random", "single", "multi_head", "one_head", "ae", "vae")
    seeds: tuple[int, ...] = (0, 1, 2)
    profile: str = "desk"
    probe_regimes: tuple[str, ...] = ("random", "single:0", "multi_head")
    head_sources: tuple[str, ...] = (GROUND_TRUTH, "random", "ae", "vae", "multi_head")
    metrics: MetricConfig = field(default_factory=MetricConfig)
    example_seed: int = 0

    def __post_init__(self) -> None:
        """Validate names early so a bad manifest fails before any stage runs."""
        if self.profile not in PROFILES:
            profile_msg = f"Unknown profile '{self.profile}', expected one of {sorted(PROFILES)}"
            raise ConfigurationError(profile_msg)
        if not self.seeds:
            seeds_msg = "At least one seed is required"
            raise ConfigurationError(seeds_msg)
        for regime in (*self.regimes, *self.probe_regimes):
            if regime != "single":
                parse_regime(regime, self.n_tasks)
        for source in self.head_sources:
            if source != GROUND_TRUTH:
                parse_regime(source, self.n_tasks)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentManifest":
        """Build from a JSON-compatible dict; missing keys take their defaults.

        Raises:
            ConfigurationError: If a key is unknown.
        """
        known = {item.name for item in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            unknown_msg = f"Unknown manifest keys: {', '.join(unknown)}"
            raise ConfigurationError(unknown_msg)
        values = dict(data)
        if "sprites" in values:
            values["sprites"] = SpriteProfile(**values["sprites"])
        if "metrics" in values:
            values["metrics"] = MetricConfig(**values["metrics"])
        for key in ("regimes", "seeds", "probe_regimes", "head_sources"):
            if key in values:
                values[key] = tuple(values[key])
        return cls(**values)

    @classmethod
    def load(cls, path: Optional[Path] = None) -> "ExperimentManifest":
        """Read a manifest file, or return the defaults when ``path`` is None."""
        return cls() if path is None else cls.from_dict(read_json(Path(path)))

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a JSON-compatible dict."""
        data = asdict(self)
        for key in ("regimes", "seeds", "probe_regimes", "head_sources"):
            data[key] = list(data[key])
        return data

    def with_overrides(self, **overrides: Any) -> "ExperimentManifest":
        """Copy with every non-None override applied."""
        metric_keys = {"mig_denominator", "dci_importance"}
        metric_overrides = {k: v for k, v in overrides.items() if k in metric_keys and v is not None}
        top = {k: v for k, v in overrides.items() if k not in metric_keys and v is not None}
        if metric_overrides:
            top["metrics"] = replace(self.metrics, **metric_overrides)
        return replace(self, **top)

    @property
    def latent_seed(self) -> int:
        """Seed whose runs provide latents for the frozen-representation heads."""
        return self.seeds[0]

    def expanded_regimes(self) -> list[str]:
        """Regimes with ``single`` expanded to ``single:0`` ... ``single:n-1``."""
        expanded: list[str] = []
        for regime in self.regimes:
            if regime == "single":
                expanded += [f"single:{i}" for i in range(self.n_tasks)]
            else:
                expanded.append(regime)
        return expanded

    # Stage digests: a pure function of the manifest.

    def data_digest(self) -> str:
        """Hash of the dataset stage inputs."""
        return stable_hash(
            {
                "stage": "gen_data",
                "sprites": asdict(self.sprites),
                "test_fraction": self.test_fraction,
                "data_seed": self.data_seed,
            }
        )

    def tasks_digest(self) -> str:
        """Hash of the task-bank stage inputs."""
        return stable_hash(
            {
                "stage": "gen_tasks",
                "data": self.data_digest(),
                "n_tasks": self.n_tasks,
                "master_seed": self.master_seed,
                "standardize_targets": self.standardize_targets,
            }
        )

    def train_digest(self, regime: str, seed: int) -> str:
        """Hash of one training run's inputs."""
        kind = "autoencoder" if parse_regime(regime).is_autoencoder else "multitask"
        upstream = self.data_digest() if kind == "autoencoder" else self.tasks_digest()
        return stable_hash(
            {
                "stage": "train",
                "upstream": upstream,
                "regime": regime,
                "seed": seed,
                "profile": get_profile(self.profile, kind).to_dict(),  # type: ignore[arg-type]
            }
        )

    def metrics_digest(self, regime: str, seed: int) -> str:
        """Hash of one metric report's inputs."""
        return stable_hash(
            {
                "stage": "metrics",
                "train": self.train_digest(regime, seed),
                "config": self.metrics.to_dict(),
            }
        )

    def probe_digest(self, regime: str, seed: int) -> str:
        """Hash of one decoder probe's inputs."""
        return stable_hash(
            {
                "stage": "probe",
                "train": self.train_digest(regime, seed),
                "profile": get_profile(self.profile, "decoder_probe").to_dict(),
            }
        )

    def heads_digest(self) -> str:
        """Hash of the frozen-representation head stage inputs."""
        return stable_hash(
            {
                "stage": "heads",
                "tasks": self.tasks_digest(),
                "sources": {
                    source: None if source == GROUND_TRUTH else self.train_digest(source, self.latent_seed)
                    for source in self.head_sources
                },
                "seeds": list(self.seeds),
                "profile": get_profile(self.profile, "latent_heads").to_dict(),
            }
        )

    def report_digest(self) -> str:
        """Hash of everything the report reads."""
        regimes = self.expanded_regimes()
        return stable_hash(
            {
                "stage": "report",
                "metrics": [self.metrics_digest(r, s) for r in regimes for s in self.seeds],
                "probes": [self.probe_digest(r, s) for r in self.probe_regimes for s in self.seeds],
                "heads": self.heads_digest(),
                "example_seed": self.example_seed,
            }
        )


def _read_stages(directory: Path) -> dict[str, Any]:
    path = RunStore.stage_file(directory)
    return read_json(path) if path.exists() else {}


def is_current(directory: Path, stage: str, digest: str, outputs: list[Path]) -> bool:
    """Whether ``stage`` last ran in ``directory`` with ``digest`` and left all ``outputs``."""
    recorded = _read_stages(directory).get(stage, {})
    return recorded.get("hash") == digest and all(Path(p).exists() for p in outputs)


def mark_stage(directory: Path, stage: str, digest: str, inputs: dict[str, Any]) -> None:
    """Record a finished stage in the directory's ``stage.json``."""
    stages = _read_stages(directory)
    stages[stage] = {"hash": digest, "inputs": inputs}
    write_json_atomic(RunStore.stage_file(directory), stages)


def _load_dataset(store: RunStore) -> LabeledDataset:
    return load_dataset(store.require(store.dataset_path, "gen-data"))


def _load_targets(manifest: ExperimentManifest, store: RunStore, dataset: LabeledDataset) -> np.ndarray:
    bank = load_bank(store.require(store.bank_path, "gen-tasks"))
    return build_targets(bank, dataset, standardize=manifest.standardize_targets)


def gen_data(manifest: ExperimentManifest, store: RunStore, *, force: bool = False, verbose: bool = False) -> bool:
    """Render and split the dataset. Returns whether the stage ran."""
    digest = manifest.data_digest()
    if not force and is_current(store.data_dir, "gen_data", digest, [store.dataset_path]):
        logger.success(f"gen_data is up to date ({digest[:12]})")
        return False
    logger.info("Running gen_data")
    dataset = make_minisprites(manifest.sprites, manifest.data_seed, verbose=verbose)
    dataset = split(dataset, manifest.test_fraction, manifest.data_seed)
    dataset = replace(dataset, manifest={**dataset.manifest, "stage_hash": digest})
    save_dataset(store.dataset_path, dataset)
    mark_stage(store.data_dir, "gen_data", digest, {"test_fraction": manifest.test_fraction})
    logger.success(f"Wrote {store.dataset_path}")
    return True


def gen_tasks(manifest: ExperimentManifest, store: RunStore, *, force: bool = False, verbose: bool = False) -> bool:
    """Draw the task bank, guarding against degenerate tasks on the train split."""
    digest = manifest.tasks_digest()
    if not force and is_current(store.tasks_dir, "gen_tasks", digest, [store.bank_path]):
        logger.success(f"gen_tasks is up to date ({digest[:12]})")
        return False
    logger.info("Running gen_tasks")
    dataset = _load_dataset(store)
    reference = dataset.factor_values[dataset.rows("train")]
    bank = build_bank(
        len(dataset.space), manifest.n_tasks, manifest.master_seed, reference=reference, verbose=verbose
    )
    build_targets(bank, dataset, standardize=manifest.standardize_targets)
    bank.provenance = {"stage_hash": digest}
    save_bank(store.bank_path, bank)
    mark_stage(store.tasks_dir, "gen_tasks", digest, {"n_tasks": manifest.n_tasks, "master_seed": manifest.master_seed})
    logger.success(f"Wrote {store.bank_path}")
    return True


def train_run(
    manifest: ExperimentManifest, store: RunStore, regime: str, seed: int, *, force: bool = False, verbose: bool = False
) -> bool:
    """Train one (regime, seed) run."""
    digest = manifest.train_digest(regime, seed)
    directory = store.run_dir(regime, seed)
    if not force and is_current(directory, "train", digest, [store.model_path(regime, seed)]):
        logger.success(f"train {regime} seed {seed} is up to date")
        return False
    logger.info(f"Running train {regime} seed {seed}")
    parsed = parse_regime(regime, manifest.n_tasks)
    dataset = _load_dataset(store)
    model: TrainedModel
    if parsed.is_autoencoder:
        profile = get_profile(manifest.profile, "autoencoder")
        model = train_autoencoder(dataset, parsed.name, profile, seed, verbose=verbose)
    else:
        targets = _load_targets(manifest, store, dataset)
        profile = get_profile(manifest.profile, "multitask")
        model = train_multitask(dataset, targets, parsed, profile, seed, verbose=verbose)
    model.manifest["stage_hash"] = digest
    save_model(store.model_path(regime, seed), model)
    mark_stage(directory, "train", digest, {"regime": regime, "seed": seed, "profile": manifest.profile})
    logger.success(f"Wrote {store.model_path(regime, seed)}")
    return True


def metrics_run(
    manifest: ExperimentManifest, store: RunStore, regime: str, seed: int, *, force: bool = False, verbose: bool = False
) -> bool:
    """Score one trained run with every metric."""
    digest = manifest.metrics_digest(regime, seed)
    directory = store.run_dir(regime, seed)
    if not force and is_current(directory, "metrics", digest, [store.metrics_path(regime, seed)]):
        logger.success(f"metrics {regime} seed {seed} are up to date")
        return False
    logger.info(f"Running metrics {regime} seed {seed}")
    model = load_model(store.require(store.model_path(regime, seed), "train"))
    dataset = _load_dataset(store)
    report = full_report(model, dataset, manifest.metrics, verbose=verbose)
    report.provenance["stage_hash"] = digest
    save_report(store.metrics_path(regime, seed), report)
    mark_stage(directory, "metrics", digest, {"config": manifest.metrics.to_dict()})
    return True


def probe_run(
    manifest: ExperimentManifest, store: RunStore, regime: str, seed: int, *, force: bool = False, verbose: bool = False
) -> bool:
    """Train the decoder probe of one run."""
    digest = manifest.probe_digest(regime, seed)
    directory = store.probe_dir(regime, seed)
    if not force and is_current(directory, "probe", digest, [store.probe_path(regime, seed)]):
        logger.success(f"probe {regime} seed {seed} is up to date")
        return False
    logger.info(f"Running probe {regime} seed {seed}")
    model = load_model(store.require(store.model_path(regime, seed), "train"))
    dataset = _load_dataset(store)
    profile = get_profile(manifest.profile, "decoder_probe")
    probe = train_decoder_probe(model, dataset, profile, seed, verbose=verbose)
    probe.manifest["stage_hash"] = digest
    save_model(store.probe_path(regime, seed), probe)
    mark_stage(directory, "probe", digest, {"regime": regime, "seed": seed})
    return True


def heads(manifest: ExperimentManifest, store: RunStore, *, force: bool = False, verbose: bool = False) -> bool:
    """Train task heads on frozen representations (latents from the first seed's runs)."""
    digest = manifest.heads_digest()
    if not force and is_current(store.heads_dir, "heads", digest, [store.heads_path]):
        logger.success("heads are up to date")
        return False
    logger.info("Running heads")
    dataset = _load_dataset(store)
    targets = _load_targets(manifest, store, dataset)
    profile = get_profile(manifest.profile, "latent_heads")
    results = {}
    for source in manifest.head_sources:
        model = None
        if source != GROUND_TRUTH:
            model = load_model(store.require(store.model_path(source, manifest.latent_seed), "train"))
        result = latent_head_probe(
            source, dataset, targets, profile, list(manifest.seeds), model, verbose=verbose
        )
        results[source] = result.to_dict()
    write_json_atomic(
        store.heads_path,
        {"sources": results, "latent_seed": manifest.latent_seed, "stage_hash": digest},
    )
    mark_stage(store.heads_dir, "heads", digest, {"sources": list(manifest.head_sources)})
    return True


def report(manifest: ExperimentManifest, store: RunStore, *, force: bool = False, verbose: bool = False) -> bool:
    """Assemble tables, claim flags, charts and the qualitative figures."""
    digest = manifest.report_digest()
    claims_path = store.report_dir / "claims.json"
    if not force and is_current(store.report_dir, "report", digest, [claims_path]):
        logger.success("report is up to date")
        return False
    logger.info("Running report")
    tables = assemble_report(
        store, manifest.expanded_regimes(), list(manifest.seeds), list(manifest.probe_regimes), verbose=verbose
    )
    tables.claims["stage_hash"] = digest
    write_report(tables, store.report_dir, stage_hash=digest)
    if manifest.probe_regimes:
        dataset = _load_dataset(store)
        seed = manifest.seeds[0]
        probes = {regime: load_model(store.probe_path(regime, seed)) for regime in manifest.probe_regimes}
        write_qualitative(
            probes,
            dataset,
            store.report_dir / "figures",
            example_seed=manifest.example_seed,
            stage_hash=digest,
        )
    mark_stage(store.report_dir, "report", digest, {"regimes": manifest.expanded_regimes()})
    logger.success(f"Wrote report to {store.report_dir}")
    return True


def _run_job(job: tuple[Callable[..., bool], ExperimentManifest, Path, str, int, bool, bool]) -> bool:
    func, manifest, root, regime, seed, force, verbose = job
    return func(manifest, RunStore(root), regime, seed, force=force, verbose=verbose)


def run_many(
    func: Callable[..., bool],
    manifest: ExperimentManifest,
    store: RunStore,
    pairs: list[tuple[str, int]],
    *,
    threads: int = 1,
    force: bool = False,
    verbose: bool = False,
) -> list[bool]:
    """Run a per-run stage over (regime, seed) pairs, in worker processes if ``threads`` > 1."""
    jobs = [(func, manifest, store.root, regime, seed, force, verbose) for regime, seed in pairs]
    if threads <= 1 or len(jobs) <= 1:
        return [_run_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(_run_job, jobs))


def reproduce(
    manifest: ExperimentManifest,
    store: RunStore,
    *,
    threads: int = 1,
    force: bool = False,
    verbose: bool = False,
) -> dict[str, int]:
    """Run every stage in order, skipping stages that are up to date.

    Returns:
        dict[str, int]: Number of executed units per stage.

    Raises:
        Exception: The failing stage's error, after logging the stage name.
    """
    regimes = manifest.expanded_regimes()
    pairs = [(regime, seed) for regime in regimes for seed in manifest.seeds]
    probe_pairs = [(regime, seed) for regime in manifest.probe_regimes for seed in manifest.seeds]
    missing_probes = [regime for regime in manifest.probe_regimes if regime not in regimes]
    missing_sources = [s for s in manifest.head_sources if s != GROUND_TRUTH and s not in regimes]
    if missing_probes or missing_sources:
        absent_msg = f"Regimes used by probes or heads are not trained: {missing_probes + missing_sources}"
        raise ConfigurationError(absent_msg)

    steps: list[tuple[str, Callable[[], list[bool]]]] = [
        ("gen_data", lambda: [gen_data(manifest, store, force=force, verbose=verbose)]),
        ("gen_tasks", lambda: [gen_tasks(manifest, store, force=force, verbose=verbose)]),
        ("train", lambda: run_many(train_run, manifest, store, pairs, threads=threads, force=force, verbose=verbose)),
        ("metrics", lambda: run_many(metrics_run, manifest, store, pairs, threads=threads, force=force, verbose=verbose)),
        ("probe", lambda: run_many(probe_run, manifest, store, probe_pairs, threads=threads, force=force, verbose=verbose)),
        ("heads", lambda: [heads(manifest, store, force=force, verbose=verbose)]),
        ("report", lambda: [report(manifest, store, force=force, verbose=verbose)]),
    ]
    executed: dict[str, int] = {}
    for name, step in steps:
        try:
            executed[name] = sum(step())
        except Exception:
            logger.error(f"Stage {name} failed; completed artifacts are kept in {store.root}")
            raise
    logger.success(f"Reproduced {store.root}: {executed}")
    return executed
