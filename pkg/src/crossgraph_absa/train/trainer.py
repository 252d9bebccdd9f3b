"""Seeded training loop with validation-based early stopping."""

from collections.abc import Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict

from crossgraph_absa.corpus import (
    CorpusSplits,
    DatasetSplit,
    EncodedInstance,
    Vocab,
    build_vocab,
    class_weights,
    encode,
)
from crossgraph_absa.errors import (
    DatasetError,
    NumericalError,
    TrainingDivergedError,
    UnencodableInstanceError,
)
from crossgraph_absa.model import Checkpoint, CrosGraphNet, InstanceGraphs, ModelParams
from crossgraph_absa.model.embeddings import PrecomputedEmbeddings
from crossgraph_absa.numkit import backward, scale
from crossgraph_absa.settings import ExperimentSettings
from crossgraph_absa.train.loss import cross_entropy_loss
from crossgraph_absa.train.metrics import EpochMetrics, EvalReport, RunMetrics, score_predictions
from crossgraph_absa.train.optim import Optimizer


class PreparedInstance(BaseModel):
    """An encoded instance with its static graphs."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    encoded: EncodedInstance
    graphs: InstanceGraphs


def prepare_split(
    split: DatasetSplit, vocab: Vocab, net: CrosGraphNet, max_length: int
) -> tuple[list[PreparedInstance], int]:
    """Encode and build graphs; instances that cannot be laid out are skipped and counted."""
    prepared: list[PreparedInstance] = []
    skipped = 0
    for instance in split.instances:
        try:
            encoded = encode(instance, vocab, max_length)
        except UnencodableInstanceError as e:
            logger.warning(f"{split.name}: skipping {instance.id}: {e}")
            skipped += 1
            continue
        prepared.append(PreparedInstance(encoded=encoded, graphs=net.graphs_for(encoded)))
    return prepared, skipped


def evaluate(net: CrosGraphNet, instances: Sequence[PreparedInstance]) -> EvalReport:
    gold = [int(item.encoded.label) for item in instances]
    predicted = [int(net.predict(item.encoded, item.graphs)) for item in instances]
    return score_predictions(gold, predicted)


def evaluate_split(
    net: CrosGraphNet, vocab: Vocab, split: DatasetSplit, max_length: int
) -> EvalReport:
    prepared, _ = prepare_split(split, vocab, net, max_length)
    return evaluate(net, prepared)


class EarlyStopping:
    """Tracks the best score; improvement means strictly greater."""

    def __init__(self, patience: int) -> None:
        self.patience = patience
        self.best_score = -np.inf
        self.best_epoch: int | None = None
        self.bad_epochs = 0

    def update(self, epoch: int, score: float) -> bool:
        if score > self.best_score:
            self.best_score, self.best_epoch, self.bad_epochs = score, epoch, 0
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad_epochs >= self.patience


class TrainingOutcome(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    checkpoint: Checkpoint
    metrics: RunMetrics
    net: CrosGraphNet
    vocab: Vocab


def loss_weights(settings: ExperimentSettings, instances: Sequence[PreparedInstance]) -> np.ndarray:
    """Per-class loss weights over the instances that actually train."""
    if settings.train.class_weighting == "none":
        return np.ones(settings.model.num_classes)
    labels = [item.encoded.label for item in instances]
    return class_weights(labels, settings.model.num_classes)


def _run_epoch(
    net: CrosGraphNet,
    instances: Sequence[PreparedInstance],
    optimizer: Optimizer,
    weights: np.ndarray,
    epoch: int,
    batch_size: int,
    order_rng: np.random.Generator,
    dropout_rng: np.random.Generator | None,
) -> float:
    order = order_rng.permutation(len(instances))
    losses: list[float] = []
    for start in range(0, len(order), batch_size):
        batch = [instances[i] for i in order[start : start + batch_size]]
        net.params.zero_grad()
        for item in batch:
            try:
                trace = net.forward(item.encoded, item.graphs, rng=dropout_rng)
                loss = cross_entropy_loss(trace.logits, int(item.encoded.label), weights)
            except NumericalError as e:
                raise TrainingDivergedError(
                    f"epoch {epoch}, instance {item.encoded.instance_id}: {e}"
                ) from e
            if not np.isfinite(loss.item()):
                raise TrainingDivergedError(
                    f"epoch {epoch}, instance {item.encoded.instance_id}: loss {loss.item()}"
                )
            backward(scale(loss, 1.0 / len(batch)))
            losses.append(loss.item())
        grads = {name: node.grad for name, node in net.params.items()}
        optimizer.step(net.params, grads)
    return float(np.mean(losses))


def train(
    settings: ExperimentSettings,
    splits: CorpusSplits,
    precomputed: PrecomputedEmbeddings | None = None,
) -> TrainingOutcome:
    """Train on ``splits.train``, select by validation micro-F1, score the test split."""
    cfg = settings.train
    if not splits.train.instances:
        raise DatasetError(f"{splits.name}: empty training split")
    if splits.validation is None or not splits.validation.instances:
        raise DatasetError(f"{splits.name}: a non-empty validation split is required")

    vocab = build_vocab(splits.train, settings.corpus.min_freq)
    model_config = settings.model.with_vocab(len(vocab))
    params = ModelParams.initialize(model_config, cfg.seed)
    net = CrosGraphNet(model_config, params, settings.graph, precomputed)
    logger.info(
        f"Training {splits.name}: {params.count()} weights in {len(params)} tensors, "
        f"ablation={model_config.ablation.enabled() or 'none'}, seed={cfg.seed}"
    )

    metrics = RunMetrics()
    train_items, metrics.skipped_instances["train"] = prepare_split(
        splits.train, vocab, net, cfg.max_length
    )
    val_items, metrics.skipped_instances["validation"] = prepare_split(
        splits.validation, vocab, net, cfg.max_length
    )
    if not train_items:
        raise DatasetError(f"{splits.name}: no training instance fits max_length={cfg.max_length}")

    weights = loss_weights(settings, train_items)
    optimizer = Optimizer(cfg)
    order_rng = np.random.default_rng([cfg.seed, 0])
    dropout_rng = np.random.default_rng([cfg.seed, 1]) if model_config.dropout_rate > 0 else None
    stopping = EarlyStopping(cfg.early_stop_patience)
    best_values = params.snapshot()

    for epoch in range(1, cfg.epochs + 1):
        train_loss = _run_epoch(
            net, train_items, optimizer, weights, epoch, cfg.batch_size, order_rng, dropout_rng
        )
        report = evaluate(net, val_items)
        metrics.epochs.append(EpochMetrics(epoch=epoch, train_loss=train_loss, validation=report))
        improved = stopping.update(epoch, report.micro_f1)
        if improved:
            best_values = params.snapshot()
        logger.info(
            f"epoch {epoch}: loss={train_loss:.6f} val_acc={report.accuracy:.4f} "
            f"val_micro_f1={report.micro_f1:.4f} val_macro_f1={report.macro_f1:.4f}"
            + (" *" if improved else "")
        )
        if stopping.should_stop:
            metrics.stopped_early = epoch < cfg.epochs
            logger.info(f"Early stopping after epoch {epoch}; best epoch {stopping.best_epoch}")
            break

    params.restore(best_values)
    metrics.best_epoch = stopping.best_epoch
    if splits.test is not None and splits.test.instances:
        test_items, metrics.skipped_instances["test"] = prepare_split(
            splits.test, vocab, net, cfg.max_length
        )
        metrics.test = evaluate(net, test_items)
        logger.success(
            f"Test {splits.name}: acc={metrics.test.accuracy:.4f} "
            f"micro_f1={metrics.test.micro_f1:.4f} macro_f1={metrics.test.macro_f1:.4f}"
        )
    else:
        logger.warning(f"{splits.name}: no test split; test block left empty")

    checkpoint = Checkpoint.from_network(net, vocab, cfg.max_length, epoch=stopping.best_epoch)
    return TrainingOutcome(checkpoint=checkpoint, metrics=metrics, net=net, vocab=vocab)
