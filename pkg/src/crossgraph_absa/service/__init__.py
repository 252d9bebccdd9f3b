"""HTTP inference over a trained checkpoint."""

from crossgraph_absa.service.api_main import create_app, load_registry

__all__ = ["create_app", "load_registry"]
