"""On-disk layout of an experiment's artifacts."""

from pathlib import Path

from dislab.exceptions import MissingArtifactError


def regime_dirname(regime: str) -> str:
    """Directory-safe form of a regime string (``single:3`` -> ``single_3``)."""
    return regime.replace(":", "_")


class RunStore:
    """Paths of every artifact under one output directory.

    Layout::

        data/dataset.dtb
        tasks/bank.dtb
        runs/<regime>/seed<k>/{model.dtb, metrics.json}
        probes/<regime>/seed<k>/probe.dtb
        latent_heads/results.json
        report/...

    Every stage directory also holds a ``stage.json`` with its input hash.
    """

    def __init__(self, root: Path) -> None:
        """Root the store at ``root`` (created lazily by writers)."""
        self.root = Path(root)

    @property
    def data_dir(self) -> Path:
        """Directory of the rendered dataset."""
        return self.root / "data"

    @property
    def dataset_path(self) -> Path:
        """Dataset container."""
        return self.data_dir / "dataset.dtb"

    @property
    def tasks_dir(self) -> Path:
        """Directory of the task bank."""
        return self.root / "tasks"

    @property
    def bank_path(self) -> Path:
        """Task bank container."""
        return self.tasks_dir / "bank.dtb"

    def run_dir(self, regime: str, seed: int) -> Path:
        """Directory of one training run."""
        return self.root / "runs" / regime_dirname(regime) / f"seed{seed}"

    def model_path(self, regime: str, seed: int) -> Path:
        """Trained model container of one run."""
        return self.run_dir(regime, seed) / "model.dtb"

    def metrics_path(self, regime: str, seed: int) -> Path:
        """Metric report of one run."""
        return self.run_dir(regime, seed) / "metrics.json"

    def probe_dir(self, regime: str, seed: int) -> Path:
        """Directory of the decoder probe of one run."""
        return self.root / "probes" / regime_dirname(regime) / f"seed{seed}"

    def probe_path(self, regime: str, seed: int) -> Path:
        """Decoder probe container of one run."""
        return self.probe_dir(regime, seed) / "probe.dtb"

    @property
    def heads_dir(self) -> Path:
        """Directory of the frozen-representation head results."""
        return self.root / "latent_heads"

    @property
    def heads_path(self) -> Path:
        """Head RMSE results."""
        return self.heads_dir / "results.json"

    @property
    def report_dir(self) -> Path:
        """Directory of report tables and figures."""
        return self.root / "report"

    @staticmethod
    def stage_file(directory: Path) -> Path:
        """Stage manifest inside ``directory``."""
        return Path(directory) / "stage.json"

    @staticmethod
    def require(path: Path, producer: str) -> Path:
        """Return ``path`` or fail naming the subcommand that creates it.

        Raises:
            MissingArtifactError: If ``path`` does not exist.
        """
        if not Path(path).exists():
            missing_msg = f"{path} does not exist; run `dislab {producer}` first"
            raise MissingArtifactError(missing_msg)
        return Path(path)
