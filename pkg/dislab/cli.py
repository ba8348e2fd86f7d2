"""Command-line interface for dislab."""

import sys
from pathlib import Path
from typing import Any, Optional

import click
from loguru import logger

from dislab import pipeline
from dislab.exceptions import (
    ConfigurationError,
    DataError,
    EngineStateError,
    MissingArtifactError,
    NumericError,
)
from dislab.models.model import REGIMES, parse_regime
from dislab.models.profiles import PROFILES
from dislab.pipeline import ExperimentManifest
from dislab.store import RunStore

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class DislabGroup(click.Group):
    """Click group mapping dislab errors onto documented exit codes."""

    def main(  # noqa: D102
        self,
        args: Any = None,
        prog_name: Optional[str] = None,
        complete_var: Optional[str] = None,
        standalone_mode: bool = True,  # noqa: FBT001, FBT002
        **extra: Any,
    ) -> Any:
        try:
            result = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.exceptions.Abort:
            click.echo("Aborted!", err=True)
            code = EXIT_USAGE
        except click.ClickException as err:
            err.show()
            code = EXIT_USAGE
        except ConfigurationError as err:
            logger.error(str(err))
            code = EXIT_USAGE
        except (DataError, MissingArtifactError) as err:
            logger.error(str(err))
            code = EXIT_DATA
        except (NumericError, EngineStateError) as err:
            logger.error(str(err))
            code = EXIT_NUMERIC
        else:
            code = result if isinstance(result, int) else 0
        if not standalone_mode:
            return code
        sys.exit(code)


class RegimeType(click.ParamType):
    """A regime name such as ``multi_head`` or ``single:3``."""

    name = "regime"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> str:  # noqa: D102
        if value == "single":
            return value
        try:
            return str(parse_regime(str(value)))
        except ConfigurationError:
            self.fail(
                f"unknown regime '{value}', valid regimes are {', '.join(REGIMES)} "
                "(single takes a task index, e.g. single:0)",
                param,
                ctx,
            )


manifest_option = click.option(
    "--manifest", type=click.Path(exists=True, dir_okay=False, path_type=Path), help="Experiment manifest JSON."
)
out_option = click.option(
    "--out", type=click.Path(file_okay=False, path_type=Path), default=Path("dislab-out"), show_default=True,
    help="Output directory of the run store.",
)
profile_option = click.option("--profile", type=click.Choice(sorted(PROFILES)), help="Training profile.")
seeds_option = click.option("--seeds", type=click.IntRange(min=1), help="Number of seeds (0 .. N-1).")
threads_option = click.option(
    "--threads", type=click.IntRange(min=1), default=1, show_default=True, help="Worker processes."
)
regime_option = click.option(
    "--regime", "regimes", type=RegimeType(), multiple=True, help="Regime(s); defaults to the manifest's."
)
force_option = click.option("--force", is_flag=True, default=False, help="Rerun even if up to date.")
verbose_option = click.option("--verbose", is_flag=True, default=False, help="Enable verbose mode.")


def _manifest(manifest: Optional[Path], **overrides: Any) -> ExperimentManifest:
    seeds = overrides.pop("seeds", None)
    loaded = ExperimentManifest.load(manifest)
    return loaded.with_overrides(seeds=tuple(range(seeds)) if seeds else None, **overrides)


def _pairs(loaded: ExperimentManifest, regimes: tuple[str, ...], *, probes: bool = False) -> list[tuple[str, int]]:
    if regimes:
        chosen = _expand(loaded, regimes)
    else:
        chosen = list(loaded.probe_regimes) if probes else loaded.expanded_regimes()
    return [(regime, seed) for regime in chosen for seed in loaded.seeds]


def _expand(loaded: ExperimentManifest, regimes: tuple[str, ...]) -> list[str]:
    expanded: list[str] = []
    for regime in regimes:
        if regime == "single":
            expanded += [f"single:{i}" for i in range(loaded.n_tasks)]
        else:
            parse_regime(regime, loaded.n_tasks)
            expanded.append(regime)
    return expanded


@click.group(cls=DislabGroup)
def dislab() -> None:
    """Multi-task disentanglement experiments on procedurally rendered sprites."""


@dislab.command("gen-data", help="Render and split the MiniSprites dataset.")
@manifest_option
@out_option
@force_option
@verbose_option
def gen_data(manifest: Optional[Path], out: Path, *, force: bool, verbose: bool) -> None:
    """Write data/dataset.dtb."""
    pipeline.gen_data(_manifest(manifest), RunStore(out), force=force, verbose=verbose)


@dislab.command("gen-tasks", help="Draw the random-network task bank.")
@manifest_option
@out_option
@click.option("--standardize-targets", is_flag=True, default=False, help="Standardize task targets.")
@force_option
@verbose_option
def gen_tasks(
    manifest: Optional[Path], out: Path, *, standardize_targets: bool, force: bool, verbose: bool
) -> None:
    """Write tasks/bank.dtb."""
    loaded = _manifest(manifest, standardize_targets=standardize_targets or None)
    pipeline.gen_tasks(loaded, RunStore(out), force=force, verbose=verbose)


@dislab.command(help="Train models for the given regimes and seeds.")
@manifest_option
@out_option
@regime_option
@profile_option
@seeds_option
@threads_option
@click.option("--standardize-targets", is_flag=True, default=False, help="Standardize task targets.")
@force_option
@verbose_option
def train(
    manifest: Optional[Path],
    out: Path,
    regimes: tuple[str, ...],
    profile: Optional[str],
    seeds: Optional[int],
    threads: int,
    *,
    standardize_targets: bool,
    force: bool,
    verbose: bool,
) -> None:
    """Write runs/<regime>/seed<k>/model.dtb."""
    loaded = _manifest(manifest, profile=profile, seeds=seeds, standardize_targets=standardize_targets or None)
    pipeline.run_many(
        pipeline.train_run, loaded, RunStore(out), _pairs(loaded, regimes),
        threads=threads, force=force, verbose=verbose,
    )


@dislab.command(help="Compute MIG, FactorVAE score, SAP and DCI of trained runs.")
@manifest_option
@out_option
@regime_option
@seeds_option
@threads_option
@click.option("--mig-denominator", type=click.Choice(["paper", "entropy"]), help="MIG normalization.")
@click.option("--dci-importance", type=click.Choice(["forest", "l1"]), help="DCI importance estimator.")
@force_option
@verbose_option
def metrics(
    manifest: Optional[Path],
    out: Path,
    regimes: tuple[str, ...],
    seeds: Optional[int],
    threads: int,
    mig_denominator: Optional[str],
    dci_importance: Optional[str],
    *,
    force: bool,
    verbose: bool,
) -> None:
    """Write runs/<regime>/seed<k>/metrics.json."""
    loaded = _manifest(
        manifest, seeds=seeds, mig_denominator=mig_denominator, dci_importance=dci_importance
    )
    pipeline.run_many(
        pipeline.metrics_run, loaded, RunStore(out), _pairs(loaded, regimes),
        threads=threads, force=force, verbose=verbose,
    )


@dislab.command(help="Train decoder probes on frozen encoders.")
@manifest_option
@out_option
@regime_option
@profile_option
@seeds_option
@threads_option
@force_option
@verbose_option
def probe(
    manifest: Optional[Path],
    out: Path,
    regimes: tuple[str, ...],
    profile: Optional[str],
    seeds: Optional[int],
    threads: int,
    *,
    force: bool,
    verbose: bool,
) -> None:
    """Write probes/<regime>/seed<k>/probe.dtb."""
    loaded = _manifest(manifest, profile=profile, seeds=seeds)
    pipeline.run_many(
        pipeline.probe_run, loaded, RunStore(out), _pairs(loaded, regimes, probes=True),
        threads=threads, force=force, verbose=verbose,
    )


@dislab.command(help="Train task heads on frozen representations.")
@manifest_option
@out_option
@profile_option
@seeds_option
@force_option
@verbose_option
def heads(
    manifest: Optional[Path], out: Path, profile: Optional[str], seeds: Optional[int], *, force: bool, verbose: bool
) -> None:
    """Write latent_heads/results.json."""
    loaded = _manifest(manifest, profile=profile, seeds=seeds)
    pipeline.heads(loaded, RunStore(out), force=force, verbose=verbose)


@dislab.command(help="Assemble tables, claim flags and figures.")
@manifest_option
@out_option
@seeds_option
@force_option
@verbose_option
def report(manifest: Optional[Path], out: Path, seeds: Optional[int], *, force: bool, verbose: bool) -> None:
    """Write report/."""
    pipeline.report(_manifest(manifest, seeds=seeds), RunStore(out), force=force, verbose=verbose)


@dislab.command(help="Run every stage, skipping those that are up to date.")
@manifest_option
@out_option
@profile_option
@seeds_option
@threads_option
@click.option("--standardize-targets", is_flag=True, default=False, help="Standardize task targets.")
@click.option("--mig-denominator", type=click.Choice(["paper", "entropy"]), help="MIG normalization.")
@click.option("--dci-importance", type=click.Choice(["forest", "l1"]), help="DCI importance estimator.")
@force_option
@verbose_option
def reproduce(
    manifest: Optional[Path],
    out: Path,
    profile: Optional[str],
    seeds: Optional[int],
    threads: int,
    mig_denominator: Optional[str],
    dci_importance: Optional[str],
    *,
    standardize_targets: bool,
    force: bool,
    verbose: bool,
) -> None:
    """Write the full artifact tree."""
    loaded = _manifest(
        manifest,
        profile=profile,
        seeds=seeds,
        standardize_targets=standardize_targets or None,
        mig_denominator=mig_denominator,
        dci_importance=dci_importance,
    )
    pipeline.reproduce(loaded, RunStore(out), threads=threads, force=force, verbose=verbose)
