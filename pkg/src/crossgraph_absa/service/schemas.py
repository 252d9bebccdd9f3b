from typing import Annotated
from uuid import uuid4

from pydantic import BaseModel, Field, computed_field

from crossgraph_absa.settings import AblationFlags

SentimentLabel = Annotated[str, "One of positive / negative / neutral"]


class PredictRequest(BaseModel):
    text: Annotated[str, Field(min_length=1, max_length=5000, description="Review sentence")]
    aspect: Annotated[
        str, Field(min_length=1, max_length=500, description="Aspect term occurring in the text")
    ]


class PredictResponse(BaseModel):
    request_id: Annotated[str, Field(default_factory=lambda: uuid4().hex)]
    label: SentimentLabel
    probabilities: dict[SentimentLabel, Annotated[float, Field(ge=0.0, le=1.0)]]
    tokens: list[str]
    aspect_tokens: list[str]
    truncated: bool = False


class HealthResponse(BaseModel):
    status: str = "ok"
    checkpoint: str
    epoch: int | None
    embedding_source: str
    hidden_dim: int
    gat_layers: int
    max_length: int
    vocab_tokens: int
    ablation: AblationFlags

    @computed_field
    def disabled_components(self) -> list[str]:
        return self.ablation.enabled()
