"""Component ablations and the GAT depth sweep.

Every row retrains from the same seed and data order; only the model
configuration differs. Rows are independent, so they can run in worker
processes.
"""

from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from loguru import logger
from pydantic import BaseModel, ConfigDict

from crossgraph_absa.corpus import CorpusSplits
from crossgraph_absa.errors import ConfigError, DatasetError
from crossgraph_absa.settings import ABLATION_SETTINGS, BASE_SETTING_LABEL, ExperimentSettings
from crossgraph_absa.train.metrics import EvalReport
from crossgraph_absa.train.trainer import train
from crossgraph_absa.utils import write_csv, write_text

DEFAULT_SWEEP_DEPTHS = tuple(range(1, 8))


class Scores(BaseModel):
    model_config = ConfigDict(frozen=True)

    accuracy: float
    micro_f1: float
    macro_f1: float

    @classmethod
    def from_report(cls, report: EvalReport) -> "Scores":
        return cls(accuracy=report.accuracy, micro_f1=report.micro_f1, macro_f1=report.macro_f1)


class ResultRow(BaseModel):
    setting: str
    flag: str | None = None
    scores: dict[str, Scores]


class ResultTable(BaseModel):
    """Test scores per row and dataset; the CSV "F1" column is macro-F1."""

    row_header: str = "Setting"
    datasets: list[str]
    rows: list[ResultRow]

    def csv_rows(self) -> list[list[str]]:
        return [
            [
                row.setting,
                *(
                    f"{100 * value:.2f}"
                    for name in self.datasets
                    for value in (row.scores[name].accuracy, row.scores[name].macro_f1)
                ),
            ]
            for row in self.rows
        ]

    def write(self, out_dir: Path, stem: str) -> tuple[Path, Path]:
        header = [self.row_header, *(f"{name} {col}" for name in self.datasets for col in ("Acc", "F1"))]
        csv_path = write_csv(out_dir / f"{stem}.csv", header, self.csv_rows())
        json_path = write_text(out_dir / f"{stem}.json", self.model_dump_json(indent=2))
        return csv_path, json_path


def _test_scores(settings: ExperimentSettings, splits: CorpusSplits) -> Scores:
    outcome = train(settings, splits)
    if outcome.metrics.test is None:
        raise DatasetError(f"{splits.name}: a test split is required for table rows")
    return Scores.from_report(outcome.metrics.test)


def _run_rows(
    jobs: Sequence[tuple[str, str | None, ExperimentSettings]],
    datasets: Mapping[str, CorpusSplits],
    workers: int,
) -> list[ResultRow]:
    tasks = [(label, name, settings) for label, _, settings in jobs for name in datasets]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_test_scores, s, datasets[name]) for _, name, s in tasks]
            results = [future.result() for future in futures]
    else:
        results = [_test_scores(s, datasets[name]) for _, name, s in tasks]

    scores: dict[str, dict[str, Scores]] = {label: {} for label, _, _ in jobs}
    for (label, name, _), result in zip(tasks, results, strict=True):
        scores[label][name] = result
        logger.info(f"{label} / {name}: acc={result.accuracy:.4f} macro_f1={result.macro_f1:.4f}")
    return [ResultRow(setting=label, flag=flag, scores=scores[label]) for label, flag, _ in jobs]


def _resolve_only(only: Iterable[str]) -> list[str]:
    by_flag = {flag: label for label, flag in ABLATION_SETTINGS.items()}
    labels: list[str] = []
    for item in only:
        if item in ABLATION_SETTINGS:
            labels.append(item)
        elif item in by_flag:
            labels.append(by_flag[item])
        else:
            raise ConfigError(f"unknown ablation {item!r}; choose from {sorted(by_flag)}")
    return [label for label in ABLATION_SETTINGS if label in labels]


def run_ablation(
    settings: ExperimentSettings,
    datasets: Mapping[str, CorpusSplits],
    only: Iterable[str] | None = None,
    workers: int = 1,
) -> ResultTable:
    """One row per ablation (or the ``only`` subset) followed by the full model."""
    if settings.model.ablation.enabled():
        raise ConfigError(
            f"ablation runs start from the full model, got flags {settings.model.ablation.enabled()}"
        )
    labels = list(ABLATION_SETTINGS) if only is None else _resolve_only(only)
    jobs: list[tuple[str, str | None, ExperimentSettings]] = [
        (
            label,
            ABLATION_SETTINGS[label],
            settings.with_overrides({"model": {"ablation": {ABLATION_SETTINGS[label]: True}}}),
        )
        for label in labels
    ]
    jobs.append((BASE_SETTING_LABEL, None, settings))
    logger.info(f"Ablation: {len(jobs)} settings x {len(datasets)} datasets")
    return ResultTable(datasets=list(datasets), rows=_run_rows(jobs, datasets, workers))


def _depth_label(depth: int) -> str:
    return f"{depth} GAT layer" if depth == 1 else f"{depth} GAT layers"


def run_layer_sweep(
    settings: ExperimentSettings,
    datasets: Mapping[str, CorpusSplits],
    depths: Iterable[int] = DEFAULT_SWEEP_DEPTHS,
    workers: int = 1,
) -> ResultTable:
    """One row per GAT depth; all other settings fixed."""
    jobs: list[tuple[str, str | None, ExperimentSettings]] = [
        (_depth_label(depth), None, settings.with_overrides({"model": {"gat_layers": depth}}))
        for depth in depths
    ]
    if not jobs:
        raise ConfigError("layer sweep needs at least one depth")
    return ResultTable(
        row_header="GAT layers", datasets=list(datasets), rows=_run_rows(jobs, datasets, workers)
    )
