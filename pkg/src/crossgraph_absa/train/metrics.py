from collections.abc import Sequence
from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field
from sklearn.metrics import accuracy_score, confusion_matrix, f1_score

from crossgraph_absa.corpus.instances import Polarity
from crossgraph_absa.errors import EmptyInputError

Score = Annotated[float, Field(ge=0.0, le=1.0)]
CLASS_LABELS = [p.label for p in Polarity]


class EvalReport(BaseModel):
    """Scores over one split; ``confusion[i][j]`` counts gold ``i`` predicted ``j``."""

    model_config = ConfigDict(frozen=True)

    accuracy: Score
    micro_f1: Score
    macro_f1: Score
    support: Annotated[int, Field(ge=1)]
    labels: list[str] = CLASS_LABELS
    confusion: list[list[int]]


class EpochMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    epoch: Annotated[int, Field(ge=1)]
    train_loss: Annotated[float, Field(ge=0.0)]
    validation: EvalReport


class RunMetrics(BaseModel):
    epochs: list[EpochMetrics] = []
    best_epoch: int | None = None
    stopped_early: bool = False
    skipped_instances: dict[str, int] = {}
    test: EvalReport | None = None

    @property
    def best(self) -> EpochMetrics | None:
        return next((e for e in self.epochs if e.epoch == self.best_epoch), None)


def score_predictions(gold: Sequence[int], predicted: Sequence[int]) -> EvalReport:
    if not gold:
        raise EmptyInputError("empty split: nothing to evaluate")
    classes = [int(p) for p in Polarity]
    return EvalReport(
        accuracy=float(accuracy_score(gold, predicted)),
        micro_f1=float(f1_score(gold, predicted, labels=classes, average="micro", zero_division=0)),
        macro_f1=float(f1_score(gold, predicted, labels=classes, average="macro", zero_division=0)),
        support=len(gold),
        confusion=confusion_matrix(gold, predicted, labels=classes).tolist(),
    )
