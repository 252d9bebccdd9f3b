"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or configuration, 2 I/O failure.
"""

import sys
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Annotated, Any

import numpy as np
import typer
from loguru import logger
from pydantic import BaseModel, ValidationError

from crossgraph_absa.corpus import (
    CorpusSplits,
    DatasetSplit,
    EncodedInstance,
    Instance,
    Vocab,
    build_vocab,
    encode,
    instance_from_text,
    load_dataset,
    load_tabular,
)
from crossgraph_absa.corpus.loader import split_paths
from crossgraph_absa.errors import (
    AbsaError,
    ConfigError,
    ContractError,
    DatasetError,
    UnencodableInstanceError,
)
from crossgraph_absa.graphbuild import (
    GraphStats,
    average_stats,
    build_syntactic,
    graph_stats,
    semantic_raw,
)
from crossgraph_absa.model import (
    Checkpoint,
    PrecomputedEmbeddings,
    context_encode,
    export_attention,
)
from crossgraph_absa.settings import ExperimentSettings, GraphConfig
from crossgraph_absa.train import evaluate_split, run_ablation, run_layer_sweep, train
from crossgraph_absa.utils import sha256_file, write_csv, write_text

try:
    TOOL_VERSION = version("crossgraph-absa")
except PackageNotFoundError:
    TOOL_VERSION = "0+unknown"

app = typer.Typer(name="crossgraph-absa", no_args_is_help=True, add_completion=False)

ConfigOption = Annotated[
    Path | None, typer.Option("--config", help="UTF-8 JSON settings document")
]
OutOption = Annotated[Path, typer.Option("--out", help="Output directory (overwritten)")]
SeedOption = Annotated[int | None, typer.Option("--seed", min=0, help="Overrides train.seed")]
CheckpointOption = Annotated[Path, typer.Option("--checkpoint", help="Checkpoint JSON")]
WorkersOption = Annotated[int, typer.Option("--workers", min=1, help="Parallel worker processes")]


class RunManifest(BaseModel):
    """Everything needed to replay a training run."""

    tool_version: str
    command: str = "train"
    settings: dict[str, Any]
    seed: int
    data_dir: str
    inputs: dict[str, str]
    artifacts: dict[str, str]


@app.callback()
def configure_logging(
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging")] = False,
    quiet: Annotated[bool, typer.Option("--quiet", "-q", help="Warnings and errors only")] = False,
) -> None:
    """Aspect sentiment with cross-attention over syntactic and semantic graphs."""
    logger.remove()
    level = "DEBUG" if verbose else "WARNING" if quiet else "INFO"
    logger.add(sys.stderr, level=level)


@contextmanager
def exit_codes() -> Iterator[None]:
    try:
        yield
    except (AbsaError, ValidationError) as e:
        logger.error(str(e))
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(code=1) from e
    except OSError as e:
        logger.error(str(e))
        typer.echo(f"I/O error: {e}", err=True)
        raise typer.Exit(code=2) from e


def _settings(config: Path | None, **train_overrides: Any) -> ExperimentSettings:
    return ExperimentSettings.load(config, {"train": train_overrides})


def _input_digests(data_dir: Path) -> dict[str, str]:
    return {path.name: sha256_file(path) for path in split_paths(data_dir).values()}


def _load_datasets(paths: list[Path]) -> dict[str, CorpusSplits]:
    datasets: dict[str, CorpusSplits] = {}
    for path in paths:
        splits = load_dataset(path)
        if splits.name in datasets:
            raise ConfigError(f"two datasets named {splits.name!r}")
        datasets[splits.name] = splits
    return datasets


def _replay(manifest_path: Path, data: Path | None) -> tuple[ExperimentSettings, Path]:
    manifest = RunManifest.model_validate_json(manifest_path.read_text(encoding="utf-8"))
    data_dir = data or Path(manifest.data_dir)
    digests = _input_digests(data_dir)
    if digests != manifest.inputs:
        changed = sorted(
            name
            for name in set(digests) | set(manifest.inputs)
            if digests.get(name) != manifest.inputs.get(name)
        )
        raise DatasetError(f"{data_dir}: inputs differ from the manifest: {changed}")
    logger.info(f"Replaying {manifest_path} (tool {manifest.tool_version})")
    return ExperimentSettings(**manifest.settings), data_dir


@app.command("train")
def cmd_train(
    out: OutOption,
    data: Annotated[Path | None, typer.Option("--data", help="Dataset directory")] = None,
    config: ConfigOption = None,
    seed: SeedOption = None,
    epochs: Annotated[int | None, typer.Option("--epochs", min=1)] = None,
    manifest: Annotated[
        Path | None, typer.Option("--manifest", help="Replay a previous run's manifest")
    ] = None,
) -> None:
    """Train one model; writes manifest.json, checkpoint.json and metrics.json."""
    with exit_codes():
        if manifest is not None:
            settings, data_dir = _replay(manifest, data)
        elif data is None:
            raise ConfigError("--data or --manifest is required")
        else:
            settings, data_dir = _settings(config, seed=seed, epochs=epochs), data
        splits = load_dataset(data_dir)

        out.mkdir(parents=True, exist_ok=True)
        artifacts = {
            name: str(out / f"{name}.json") for name in ("manifest", "checkpoint", "metrics")
        }
        run_manifest = RunManifest(
            tool_version=TOOL_VERSION,
            settings=settings.model_dump(mode="json"),
            seed=settings.train.seed,
            data_dir=str(data_dir),
            inputs=_input_digests(data_dir),
            artifacts=artifacts,
        )
        write_text(Path(artifacts["manifest"]), run_manifest.model_dump_json(indent=2))

        outcome = train(settings, splits)
        outcome.checkpoint.save(Path(artifacts["checkpoint"]))
        write_text(Path(artifacts["metrics"]), outcome.metrics.model_dump_json(indent=2))
        logger.success(f"Run written to {out}")


def _eval_split(data: Path) -> DatasetSplit:
    if data.is_dir():
        paths = split_paths(data)
        if "test" not in paths:
            raise FileNotFoundError(f"no test.tsv under {data}")
        return load_tabular(paths["test"], "test").split
    return load_tabular(data, "test").split


@app.command("eval")
def cmd_eval(
    checkpoint: CheckpointOption,
    data: Annotated[Path, typer.Option("--data", help="Dataset directory or split file")],
    out: Annotated[Path | None, typer.Option("--out", help="Directory for eval.json")] = None,
) -> None:
    """Score a checkpoint on a test split."""
    with exit_codes():
        split = _eval_split(data)
        if not split.instances:
            raise DatasetError(f"{data}: empty split")
        stored = Checkpoint.load(checkpoint)
        net, vocab = stored.restore()
        report = evaluate_split(net, vocab, split, stored.max_length)
        typer.echo(report.model_dump_json(indent=2))
        if out is not None:
            write_text(out / "eval.json", report.model_dump_json(indent=2))


def _table_command(
    runner: Callable[..., Any], config: Path | None, seed: int | None, data: list[Path], **kwargs: Any
) -> Any:
    settings = _settings(config, seed=seed)
    return runner(settings, _load_datasets(data), **kwargs)


@app.command("ablate")
def cmd_ablate(
    data: Annotated[list[Path], typer.Option("--data", help="Dataset directory (repeatable)")],
    out: OutOption,
    config: ConfigOption = None,
    seed: SeedOption = None,
    only: Annotated[
        list[str] | None, typer.Option("--only", help="Ablation flag or label (repeatable)")
    ] = None,
    workers: WorkersOption = 1,
) -> None:
    """Retrain once per ablation setting plus the full model; writes ablation.csv/json."""
    with exit_codes():
        table = _table_command(run_ablation, config, seed, data, only=only, workers=workers)
        csv_path, _ = table.write(out, "ablation")
        logger.success(f"Ablation table written to {csv_path}")


@app.command("sweep-layers")
def cmd_sweep_layers(
    data: Annotated[list[Path], typer.Option("--data", help="Dataset directory (repeatable)")],
    out: OutOption,
    config: ConfigOption = None,
    seed: SeedOption = None,
    depths: Annotated[
        list[int] | None, typer.Option("--depth", min=1, max=7, help="GAT depth (repeatable)")
    ] = None,
    workers: WorkersOption = 1,
) -> None:
    """Retrain once per GAT depth; writes layer_sweep.csv/json."""
    with exit_codes():
        kwargs: dict[str, Any] = {"workers": workers}
        if depths:
            kwargs["depths"] = depths
        table = _table_command(run_layer_sweep, config, seed, data, **kwargs)
        csv_path, _ = table.write(out, "layer_sweep")
        logger.success(f"Layer sweep written to {csv_path}")


def _find_instance(data: Path, instance_id: str) -> Instance:
    splits = load_dataset(data)
    for split in (splits.train, splits.validation, splits.test):
        if split is not None and (instance := split.get(instance_id)) is not None:
            return instance
    raise ContractError(f"instance {instance_id!r} not found under {data}")


@app.command("export-attention")
def cmd_export_attention(
    checkpoint: CheckpointOption,
    out: OutOption,
    data: Annotated[Path | None, typer.Option("--data", help="Dataset directory")] = None,
    instance_id: Annotated[str | None, typer.Option("--instance", help="Instance id")] = None,
    text: Annotated[str | None, typer.Option("--text", help="Inline sentence")] = None,
    aspect: Annotated[str | None, typer.Option("--aspect", help="Inline aspect term")] = None,
) -> None:
    """Write attention matrices and token importance for one instance."""
    with exit_codes():
        if instance_id is not None and data is not None:
            instance = _find_instance(data, instance_id)
        elif text is not None and aspect is not None:
            instance = instance_from_text("inline", text, aspect)
        else:
            raise ConfigError("give --data with --instance, or --text with --aspect")
        stored = Checkpoint.load(checkpoint)
        net, vocab = stored.restore()
        encoded = encode(instance, vocab, stored.max_length)
        trace = net.forward(encoded)
        written = export_attention(trace, encoded, out)
        logger.success(f"{len(written)} files written to {out} (prediction {trace.prediction.label})")


def _dataset_stats(
    splits: CorpusSplits,
    graph: GraphConfig,
    vocab: Vocab | None,
    embed: Callable[[EncodedInstance], np.ndarray],
    max_length: int,
) -> GraphStats:
    vocab = vocab or build_vocab(splits.train)
    collected: list[GraphStats] = []
    for split in (splits.train, splits.validation, splits.test):
        for instance in split.instances if split is not None else ():
            try:
                encoded = encode(instance, vocab, max_length)
            except UnencodableInstanceError as e:
                logger.warning(f"{splits.name}: skipping {instance.id}: {e}")
                continue
            syntactic = build_syntactic(encoded.sentence_tokens, encoded, graph.syntax)
            cosines = semantic_raw(embed(encoded), encoded.pad_mask)
            collected.append(graph_stats(syntactic, cosines, encoded))
    return average_stats(collected)


@app.command("graph-stats")
def cmd_graph_stats(
    data: Annotated[list[Path], typer.Option("--data", help="Dataset directory (repeatable)")],
    out: OutOption,
    checkpoint: Annotated[
        Path | None, typer.Option("--checkpoint", help="Contextual embeddings from a checkpoint")
    ] = None,
    embeddings: Annotated[
        Path | None, typer.Option("--embeddings", help="Precomputed per-token vectors")
    ] = None,
    embed_dim: Annotated[int | None, typer.Option("--embed-dim", min=1)] = None,
    config: ConfigOption = None,
) -> None:
    """Mean aspect-to-context syntactic and semantic distances per dataset."""
    with exit_codes():
        settings = _settings(config)
        graph, max_length = settings.graph, settings.train.max_length
        vocab: Vocab | None = None
        if checkpoint is not None:
            stored = Checkpoint.load(checkpoint)
            net, vocab = stored.restore()
            graph, max_length = stored.graph, stored.max_length

            def embed(encoded: EncodedInstance) -> np.ndarray:
                h, _ = context_encode(encoded, net.params, net.config, net.precomputed)
                return h.value

        elif embeddings is not None and embed_dim is not None:
            vectors = PrecomputedEmbeddings.load(embeddings, embed_dim)

            def embed(encoded: EncodedInstance) -> np.ndarray:
                return vectors.matrix(encoded)

        else:
            raise ConfigError("give --checkpoint, or --embeddings with --embed-dim")

        rows = []
        for name, splits in _load_datasets(data).items():
            stats = _dataset_stats(splits, graph, vocab, embed, max_length)
            rows.append(
                [name, f"{stats.mean_syntactic_distance:.6f}", f"{stats.mean_semantic_distance:.6f}"]
            )
            typer.echo(
                f"{name}: syntactic={stats.mean_syntactic_distance:.4f} "
                f"semantic={stats.mean_semantic_distance:.4f} coverage={stats.coverage:.3f}"
            )
        csv_path = write_csv(out / "graph_stats.csv", ["dataset", "syntactic", "semantic"], rows)
        logger.success(f"Graph statistics written to {csv_path}")


@app.command("serve")
def cmd_serve(
    checkpoint: CheckpointOption,
    host: Annotated[str, typer.Option("--host")] = "127.0.0.1",
    port: Annotated[int, typer.Option("--port", min=1, max=65535)] = 8000,
) -> None:
    """Serve POST /predict and GET /health over HTTP."""
    import uvicorn

    from crossgraph_absa.service import create_app

    with exit_codes():
        uvicorn.run(create_app(checkpoint), host=host, port=port)
