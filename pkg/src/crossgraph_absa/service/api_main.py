from collections.abc import AsyncIterator
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Annotated, Any

from fastapi import Body, FastAPI, HTTPException, status
from loguru import logger

from crossgraph_absa.corpus import encode, instance_from_text
from crossgraph_absa.corpus.instances import Polarity
from crossgraph_absa.errors import CheckpointError, ContractError, DatasetError
from crossgraph_absa.model import Checkpoint
from crossgraph_absa.service.schemas import HealthResponse, PredictRequest, PredictResponse


def load_registry(checkpoint_path: Path) -> dict[str, Any]:
    checkpoint = Checkpoint.load(checkpoint_path)
    if checkpoint.model.embedding_source == "precomputed":
        raise CheckpointError(
            f"{checkpoint_path}: models using precomputed vectors cannot score free text"
        )
    net, vocab = checkpoint.restore()
    logger.info(f"Serving {checkpoint_path} ({len(vocab)} vocabulary tokens)")
    return {"checkpoint": checkpoint, "net": net, "vocab": vocab, "path": str(checkpoint_path)}


def create_app(checkpoint_path: Path) -> FastAPI:
    models: dict[str, Any] = {}

    @asynccontextmanager
    async def lifespan(app: FastAPI) -> AsyncIterator[None]:
        models.update(load_registry(checkpoint_path))

        yield

        models.clear()

    app = FastAPI(title="crossgraph-absa", lifespan=lifespan)

    @app.get("/health")
    def health_controller() -> HealthResponse:
        checkpoint: Checkpoint = models["checkpoint"]
        return HealthResponse(
            checkpoint=models["path"],
            epoch=checkpoint.epoch,
            embedding_source=checkpoint.model.embedding_source,
            hidden_dim=checkpoint.model.hidden_dim,
            gat_layers=checkpoint.model.gat_layers,
            max_length=checkpoint.max_length,
            vocab_tokens=len(checkpoint.vocab),
            ablation=checkpoint.model.ablation,
        )

    @app.post("/predict")
    def predict_controller(
        body: Annotated[PredictRequest, Body(description="Sentence and aspect term")],
    ) -> PredictResponse:
        checkpoint: Checkpoint = models["checkpoint"]
        try:
            instance = instance_from_text("request", body.text, body.aspect)
            encoded = encode(instance, models["vocab"], checkpoint.max_length)
        except (ContractError, DatasetError) as e:
            raise HTTPException(
                status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e)
            ) from e
        trace = models["net"].forward(encoded)
        probabilities = trace.probabilities()
        return PredictResponse(
            label=trace.prediction.label,
            probabilities={p.label: float(probabilities[int(p)]) for p in Polarity},
            tokens=list(encoded.sentence_tokens),
            aspect_tokens=list(instance.aspect_tokens),
            truncated=encoded.was_truncated,
        )

    return app
