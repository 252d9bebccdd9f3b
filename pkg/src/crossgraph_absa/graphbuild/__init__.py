"""Syntactic, semantic and aspect adjacency over encoded token sequences."""

from crossgraph_absa.graphbuild.adjacency import (
    AdjacencyMatrix,
    GraphKind,
    export_matrix_csv,
)
from crossgraph_absa.graphbuild.aspect import (
    build_aspect,
    build_aspect_from_syntax,
    build_fixed,
)
from crossgraph_absa.graphbuild.semantic import build_semantic, semantic_raw
from crossgraph_absa.graphbuild.stats import GraphStats, average_stats, graph_stats
from crossgraph_absa.graphbuild.syntax import (
    CoarseClass,
    CoarseLexicon,
    EdgeList,
    LinkRule,
    SyntaxRuleSet,
    build_syntactic,
    load_edge_list,
    syntactic_from_edges,
)

__all__ = [
    "AdjacencyMatrix",
    "CoarseClass",
    "CoarseLexicon",
    "EdgeList",
    "GraphKind",
    "GraphStats",
    "LinkRule",
    "SyntaxRuleSet",
    "average_stats",
    "build_aspect",
    "build_aspect_from_syntax",
    "build_fixed",
    "build_semantic",
    "build_syntactic",
    "export_matrix_csv",
    "graph_stats",
    "load_edge_list",
    "semantic_raw",
    "syntactic_from_edges",
]
