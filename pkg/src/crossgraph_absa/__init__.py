"""crossgraph-absa: aspect sentiment over syntactic and semantic token graphs."""

from crossgraph_absa.cli import TOOL_VERSION, app

__version__ = TOOL_VERSION


def main() -> None:
    """Entry point for the crossgraph-absa command."""
    app()
