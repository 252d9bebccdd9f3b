"""Loss, optimisers, metrics, the training loop and the experiment tables."""

import csv
import math
from pathlib import Path

import numpy as np
import pytest

from crossgraph_absa.corpus import CorpusSplits, DatasetSplit, Instance, build_vocab, class_weights
from crossgraph_absa.errors import ConfigError, ContractError, DatasetError, EmptyInputError
from crossgraph_absa.model import CrosGraphNet, ModelParams
from crossgraph_absa.numkit import backward, parameter
from crossgraph_absa.settings import ABLATION_SETTINGS, BASE_SETTING_LABEL, ExperimentSettings
from crossgraph_absa.train import (
    evaluate_split,
    loss_weights,
    prepare_split,
    run_ablation,
    run_layer_sweep,
    train,
)
from crossgraph_absa.train.loss import cross_entropy_loss
from crossgraph_absa.train.metrics import score_predictions
from crossgraph_absa.train.optim import AdamState, adam_step, adamw_step, clip_by_global_norm
from crossgraph_absa.train.trainer import EarlyStopping
from tests.factories import separable_instances, separable_splits, tiny_settings

# -----------------------------------------------------------------------------
# Loss
# -----------------------------------------------------------------------------


def test_uniform_logits_cost_log_three() -> None:
    assert cross_entropy_loss(np.zeros((1, 3)), 0).item() == pytest.approx(math.log(3))


def test_class_weight_scales_loss() -> None:
    """A weight of 2 on the gold class doubles the loss."""
    logits = np.array([[0.3, -1.2, 0.5]])
    plain = cross_entropy_loss(logits, 1).item()
    assert cross_entropy_loss(logits, 1, [1.0, 2.0, 1.0]).item() == pytest.approx(2 * plain)


def test_confident_correct_prediction_costs_almost_nothing() -> None:
    assert cross_entropy_loss(np.array([[20.0, 0.0, 0.0]]), 0).item() < 1e-3


def test_loss_rejects_bad_label() -> None:
    with pytest.raises(ContractError):
        cross_entropy_loss(np.zeros((1, 3)), 3)


def test_loss_gradient_is_softmax_minus_onehot() -> None:
    """d loss / d logits = p - y."""
    logits = parameter(np.array([[1.0, 2.0, 0.5]]))
    backward(cross_entropy_loss(logits, 2))
    p = np.exp(logits.value) / np.exp(logits.value).sum()
    assert np.allclose(logits.grad, p - np.array([[0.0, 0.0, 1.0]]))


# -----------------------------------------------------------------------------
# Optimisers
# -----------------------------------------------------------------------------


def test_adamw_first_step_matches_hand_formula() -> None:
    """With g = 1 the bias-corrected direction is ~1, plus decoupled decay."""
    p = parameter(np.array([[2.0]]))
    adamw_step({"p": p}, {"p": np.ones((1, 1))}, AdamState(), lr=0.1, weight_decay=0.01)
    expected = 2.0 - 0.1 * (1.0 / (1.0 + 1e-8) + 0.01 * 2.0)
    assert p.value[0, 0] == pytest.approx(expected, abs=1e-12)


def test_zero_gradient_without_decay_is_a_fixed_point() -> None:
    p = parameter(np.array([[1.5, -0.5]]))
    adamw_step({"p": p}, {"p": np.zeros((1, 2))}, AdamState(), lr=0.1, weight_decay=0.0)
    assert np.array_equal(p.value, [[1.5, -0.5]])


def test_zero_gradient_decay_shrinks_by_lr_times_decay() -> None:
    p = parameter(np.array([[1.5, -0.5]]))
    adamw_step({"p": p}, {"p": np.zeros((1, 2))}, AdamState(), lr=0.1, weight_decay=0.2)
    assert np.allclose(p.value, np.array([[1.5, -0.5]]) * (1 - 0.1 * 0.2))


def test_adam_couples_decay_into_the_moments() -> None:
    """Coupled L2 turns decay into a gradient, so the first step moves by ~lr."""
    p = parameter(np.array([[2.0]]))
    adam_step({"p": p}, {"p": np.zeros((1, 1))}, AdamState(), lr=0.1, weight_decay=0.5)
    assert p.value[0, 0] == pytest.approx(1.9, abs=1e-6)


def test_moment_state_persists_across_steps() -> None:
    state = AdamState()
    p = parameter(np.array([[0.0]]))
    for _ in range(3):
        adamw_step({"p": p}, {"p": np.ones((1, 1))}, state, lr=0.01, weight_decay=0.0)
    assert state.step == 3
    assert p.value[0, 0] == pytest.approx(-0.03, abs=1e-6)


def test_clip_by_global_norm() -> None:
    """Gradients with joint norm 5 are scaled to norm 1; no limit leaves them alone."""
    grads = {"a": np.array([[3.0]]), "b": np.array([[4.0]])}
    clipped, norm = clip_by_global_norm(grads, 1.0)
    assert norm == pytest.approx(5.0)
    assert clipped["a"][0, 0] == pytest.approx(0.6)
    assert clipped["b"][0, 0] == pytest.approx(0.8)
    unclipped, _ = clip_by_global_norm(grads, None)
    assert unclipped["a"] is grads["a"]


# -----------------------------------------------------------------------------
# Early stopping and metrics
# -----------------------------------------------------------------------------


def test_early_stopping_patience_arithmetic() -> None:
    """A peak at epoch 2 with patience 5 stops after epoch 7."""
    stopping = EarlyStopping(patience=5)
    scores = [0.1, 0.5, 0.4, 0.5, 0.3, 0.2, 0.45, 0.9]
    stopped_at = None
    for epoch, score in enumerate(scores, start=1):
        stopping.update(epoch, score)
        if stopping.should_stop:
            stopped_at = epoch
            break
    assert stopped_at == 7
    assert stopping.best_epoch == 2


def test_perfect_predictions() -> None:
    report = score_predictions([0, 1, 2, 1], [0, 1, 2, 1])
    assert report.accuracy == report.micro_f1 == report.macro_f1 == 1.0
    assert report.support == 4


def test_micro_f1_equals_accuracy() -> None:
    """Single-label classification makes micro-F1 identical to accuracy."""
    rng = np.random.default_rng(0)
    for _ in range(20):
        gold, predicted = rng.integers(0, 3, size=30).tolist(), rng.integers(0, 3, size=30).tolist()
        report = score_predictions(gold, predicted)
        assert abs(report.micro_f1 - report.accuracy) < 1e-12


def test_always_first_class_confusion() -> None:
    """Predicting class 0 for everything: accuracy 1/2, macro-F1 2/9."""
    report = score_predictions([0, 1, 2, 0], [0, 0, 0, 0])
    assert report.accuracy == 0.5
    assert report.confusion == [[2, 0, 0], [1, 0, 0], [1, 0, 0]]
    assert report.macro_f1 == pytest.approx(2 / 9)
    assert report.labels == ["positive", "negative", "neutral"]


def test_empty_split_cannot_be_scored() -> None:
    with pytest.raises(EmptyInputError):
        score_predictions([], [])


# -----------------------------------------------------------------------------
# Training loop
# -----------------------------------------------------------------------------


def test_training_overfits_separable_data() -> None:
    """60 instances whose label is fixed by one opinion word are learned almost perfectly."""
    train_set = separable_instances(60, "o", seed=5)
    splits = CorpusSplits(
        name="overfit",
        train=DatasetSplit(name="train", instances=train_set),
        validation=DatasetSplit(name="validation", instances=train_set),
    )
    settings = tiny_settings(epochs=300, early_stop_patience=25).with_overrides(
        {"model": {"hidden_dim": 16, "embed_dim": 16}}
    )
    outcome = train(settings, splits)
    best = outcome.metrics.best
    assert best is not None
    assert best.validation.micro_f1 >= 0.95
    assert outcome.metrics.test is None


def test_training_is_deterministic(settings: ExperimentSettings, splits: CorpusSplits) -> None:
    """Same seed, same data: byte-identical metrics and checkpoints."""
    first, second = train(settings, splits), train(settings, splits)
    assert first.metrics.model_dump_json() == second.metrics.model_dump_json()
    assert first.checkpoint == second.checkpoint


def test_training_records_epochs_and_test_scores(
    settings: ExperimentSettings, splits: CorpusSplits
) -> None:
    outcome = train(settings, splits)
    metrics = outcome.metrics
    assert [e.epoch for e in metrics.epochs] == [1, 2]
    assert metrics.best_epoch in (1, 2)
    assert metrics.test is not None
    assert metrics.test.support == len(splits.test)  # type: ignore[arg-type]
    assert outcome.checkpoint.epoch == metrics.best_epoch
    assert outcome.checkpoint.vocab == outcome.vocab.tokens


def test_training_restores_best_epoch(settings: ExperimentSettings, splits: CorpusSplits) -> None:
    """The returned network scores on validation exactly as its best epoch did."""
    outcome = train(settings.with_overrides({"train": {"epochs": 3}}), splits)
    best = outcome.metrics.best
    assert best is not None
    report = evaluate_split(outcome.net, outcome.vocab, splits.validation, 12)  # type: ignore[arg-type]
    assert report == best.validation


def test_best_epoch_is_first_maximum_of_validation_micro_f1(
    settings: ExperimentSettings, splits: CorpusSplits
) -> None:
    outcome = train(settings.with_overrides({"train": {"epochs": 4, "early_stop_patience": 4}}), splits)
    scores = [epoch.validation.micro_f1 for epoch in outcome.metrics.epochs]
    assert len(scores) == 4
    assert outcome.metrics.best_epoch == 1 + scores.index(max(scores))


def test_training_counts_unencodable_instances(settings: ExperimentSettings) -> None:
    """Instances too long for max_length are skipped and counted per split."""
    wide = Instance(
        id="wide", tokens=tuple("abcdefgh"), aspect_start=0, aspect_end=6, polarity="neutral"
    )
    base = separable_splits()
    splits = base.model_copy(
        update={"train": DatasetSplit(name="train", instances=(*base.train.instances, wide))}
    )
    outcome = train(settings, splits)
    assert outcome.metrics.skipped_instances["train"] == 1
    assert outcome.metrics.skipped_instances["validation"] == 0


def test_class_weights_ignore_unencodable_instances() -> None:
    """Only instances that reach the loss count towards the class weights."""
    settings = tiny_settings(class_weighting="weighted")
    wide = Instance(
        id="wide", tokens=tuple("abcdefgh"), aspect_start=0, aspect_end=6, polarity="neutral"
    )
    split = DatasetSplit(name="train", instances=(*separable_instances(12), wide))
    vocab = build_vocab(split)
    config = settings.model.with_vocab(len(vocab))
    net = CrosGraphNet(config, ModelParams.initialize(config, 0), settings.graph)
    prepared, skipped = prepare_split(split, vocab, net, settings.train.max_length)

    assert skipped == 1
    assert np.allclose(loss_weights(settings, prepared), [1.0, 1.0, 1.0])
    assert not np.allclose(class_weights(split.labels), [1.0, 1.0, 1.0])


def test_training_requires_validation(settings: ExperimentSettings, splits: CorpusSplits) -> None:
    with pytest.raises(DatasetError, match="validation"):
        train(settings, splits.model_copy(update={"validation": None}))


def test_training_requires_train_instances(settings: ExperimentSettings) -> None:
    empty = CorpusSplits(
        name="empty",
        train=DatasetSplit(name="train"),
        validation=DatasetSplit(name="validation", instances=separable_instances(3)),
    )
    with pytest.raises(DatasetError, match="empty training split"):
        train(settings, empty)


# -----------------------------------------------------------------------------
# Ablation table and layer sweep
# -----------------------------------------------------------------------------


@pytest.fixture
def one_epoch() -> ExperimentSettings:
    return tiny_settings(epochs=1)


def test_ablation_table_rows_and_csv(tmp_path: Path, one_epoch: ExperimentSettings) -> None:
    """Eight ablations then the base row; two score columns per dataset."""
    datasets = {"synthetic": separable_splits()}
    table = run_ablation(one_epoch, datasets)
    assert [row.setting for row in table.rows] == [*ABLATION_SETTINGS, BASE_SETTING_LABEL]
    assert table.rows[-1].flag is None

    csv_path, json_path = table.write(tmp_path, "ablation")
    assert json_path.is_file()
    with csv_path.open(encoding="utf-8", newline="") as handle:
        header, *rows = list(csv.reader(handle))
    assert header == ["Setting", "synthetic Acc", "synthetic F1"]
    assert [row[0] for row in rows] == [
        "No Syntax Graph",
        "No Semantic Graph",
        "No Graph Branches",
        "No Cross-Attention",
        "No Transformer",
        "No Highway Gate",
        "No Aspect Embedding",
        "Fixed Adjacency",
        "CrosGrpsABS Base",
    ]
    for row in rows:
        assert all(0.0 <= float(cell) <= 100.0 for cell in row[1:])
        assert all(len(cell.split(".")[1]) == 2 for cell in row[1:])


def test_ablation_base_row_equals_standalone_training(one_epoch: ExperimentSettings) -> None:
    splits = separable_splits()
    table = run_ablation(one_epoch, {"synthetic": splits}, only=["no_semantic_graph"])
    assert [row.setting for row in table.rows] == ["No Semantic Graph", BASE_SETTING_LABEL]
    standalone = train(one_epoch, splits).metrics.test
    assert standalone is not None
    base = table.rows[-1].scores["synthetic"]
    assert base.accuracy == standalone.accuracy
    assert base.macro_f1 == standalone.macro_f1


def test_ablation_only_accepts_labels_and_flags(one_epoch: ExperimentSettings) -> None:
    """Labels and flag names both select rows, which keep table order."""
    table = run_ablation(
        one_epoch, {"synthetic": separable_splits()}, only=["Fixed Adjacency", "no_highway_gate"]
    )
    assert [row.setting for row in table.rows] == [
        "No Highway Gate",
        "Fixed Adjacency",
        BASE_SETTING_LABEL,
    ]


def test_ablation_rejects_unknown_setting(one_epoch: ExperimentSettings) -> None:
    with pytest.raises(ConfigError, match="unknown ablation"):
        run_ablation(one_epoch, {"synthetic": separable_splits()}, only=["no_dropout"])


def test_ablation_must_start_from_full_model(one_epoch: ExperimentSettings) -> None:
    flagged = one_epoch.with_overrides({"model": {"ablation": {"no_highway_gate": True}}})
    with pytest.raises(ConfigError, match="full model"):
        run_ablation(flagged, {"synthetic": separable_splits()})


def test_layer_sweep_rows(tmp_path: Path, one_epoch: ExperimentSettings) -> None:
    table = run_layer_sweep(one_epoch, {"synthetic": separable_splits()}, depths=[1, 2])
    assert table.row_header == "GAT layers"
    assert [row.setting for row in table.rows] == ["1 GAT layer", "2 GAT layers"]
    csv_path, _ = table.write(tmp_path, "layer_sweep")
    assert csv_path.read_text(encoding="utf-8").startswith("GAT layers,synthetic Acc,synthetic F1\n")


def test_layer_sweep_needs_depths(one_epoch: ExperimentSettings) -> None:
    with pytest.raises(ConfigError):
        run_layer_sweep(one_epoch, {"synthetic": separable_splits()}, depths=[])
