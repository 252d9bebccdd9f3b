"""The cross-graph aspect sentiment network."""

from crossgraph_absa.model.checkpoint import Checkpoint, TensorRecord
from crossgraph_absa.model.embeddings import PrecomputedEmbeddings
from crossgraph_absa.model.interpret import export_attention, token_importance
from crossgraph_absa.model.layers import (
    HighwayOutput,
    aspect_extract,
    context_encode,
    cross_attention,
    encoder_block,
    fuse,
    gat_layer,
    highway_fuse,
    multi_head_attention,
    pooled_mean,
    predict,
    refine,
    sinusoidal_positions,
)
from crossgraph_absa.model.network import (
    CrosGraphNet,
    ForwardTrace,
    InstanceGraphs,
    build_instance_graphs,
    forward,
)
from crossgraph_absa.model.params import ModelParams, ParamSpec, parameter_specs

__all__ = [
    "Checkpoint",
    "CrosGraphNet",
    "ForwardTrace",
    "HighwayOutput",
    "InstanceGraphs",
    "ModelParams",
    "ParamSpec",
    "PrecomputedEmbeddings",
    "TensorRecord",
    "aspect_extract",
    "build_instance_graphs",
    "context_encode",
    "cross_attention",
    "encoder_block",
    "export_attention",
    "forward",
    "fuse",
    "gat_layer",
    "highway_fuse",
    "multi_head_attention",
    "parameter_specs",
    "pooled_mean",
    "predict",
    "refine",
    "sinusoidal_positions",
    "token_importance",
]
