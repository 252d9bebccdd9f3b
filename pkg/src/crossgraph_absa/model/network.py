"""The full classifier: context, graph branches, cross-attention, refinement, gating."""

from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict

from crossgraph_absa.corpus.encoding import EncodedInstance
from crossgraph_absa.corpus.instances import Polarity
from crossgraph_absa.errors import ConfigError, ContractError
from crossgraph_absa.graphbuild import (
    AdjacencyMatrix,
    build_aspect,
    build_aspect_from_syntax,
    build_fixed,
    build_semantic,
    build_syntactic,
    load_edge_list,
    syntactic_from_edges,
)
from crossgraph_absa.model.embeddings import PrecomputedEmbeddings
from crossgraph_absa.model.layers import (
    Params,
    aspect_extract,
    context_encode,
    cross_attention,
    fuse,
    gat_stack,
    highway_fuse,
    linear,
    pooled_mean,
    predict,
    refine,
)
from crossgraph_absa.model.params import ModelParams
from crossgraph_absa.numkit import DiffNode, Matrix, dropout, softmax_rows
from crossgraph_absa.settings import GraphConfig, ModelConfig


class InstanceGraphs(BaseModel):
    """Adjacency inputs for one instance.

    ``semantic`` is normally left empty and built from ``H`` during the forward
    pass; setting it pins the graph (fixed adjacency, gradient checks).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    syntactic: AdjacencyMatrix | None = None
    semantic: AdjacencyMatrix | None = None
    aspect: AdjacencyMatrix


def _syntactic_graph(encoded: EncodedInstance, graph: GraphConfig) -> AdjacencyMatrix:
    if graph.syntax_edges_dir is not None:
        edges_path = Path(graph.syntax_edges_dir) / f"{encoded.instance_id}.edges"
        if edges_path.is_file():
            return syntactic_from_edges(load_edge_list(edges_path), encoded)
    return build_syntactic(encoded.sentence_tokens, encoded, graph.syntax)


def build_instance_graphs(
    encoded: EncodedInstance,
    config: ModelConfig,
    graph: GraphConfig,
    fixed: AdjacencyMatrix | None = None,
) -> InstanceGraphs:
    """Graphs the configured network needs for ``encoded``.

    Under ``fixed_adjacency`` both branches share ``fixed`` masked to the
    instance's real positions.
    """
    flags = config.ablation
    rule_graph = None
    if graph.aspect_graph == "syntax" or not (flags.skip_syntax or flags.fixed_adjacency):
        rule_graph = _syntactic_graph(encoded, graph)

    syntactic, semantic = rule_graph, None
    if flags.fixed_adjacency:
        if fixed is None:
            fixed = build_fixed(encoded.max_length, graph.syntax.window_radius)
        syntactic = semantic = fixed.masked(encoded.pad_mask)

    if rule_graph is not None and graph.aspect_graph == "syntax":
        aspect = build_aspect_from_syntax(rule_graph, encoded)
    else:
        aspect = build_aspect(encoded.max_length, encoded, graph.aspect_radius)
    return InstanceGraphs(
        syntactic=None if flags.skip_syntax else syntactic,
        semantic=None if flags.skip_semantic else semantic,
        aspect=aspect,
    )


class ForwardTrace(BaseModel):
    """Every intermediate of one forward pass; attention matrices are plain arrays."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    H: DiffNode
    H_syntax: DiffNode
    H_semantic: DiffNode
    alpha_syntax: list[np.ndarray] = []
    alpha_semantic: list[np.ndarray] = []
    semantic_graph: AdjacencyMatrix | None = None
    context_attention: list[np.ndarray] = []
    C_syn: DiffNode | None = None
    C_sem: DiffNode | None = None
    cross_syn: np.ndarray | None = None
    cross_sem: np.ndarray | None = None
    H_cat: DiffNode
    H_refined: DiffNode
    refine_attention: list[np.ndarray] = []
    H_aspect: DiffNode | None = None
    alpha_aspect: np.ndarray | None = None
    z_aspect: DiffNode
    h_bar: DiffNode
    u: DiffNode
    gate: np.ndarray | None = None
    z_H: DiffNode
    logits: DiffNode

    def attention_matrices(self) -> dict[str, Matrix]:
        """All softmax-normalised matrices of the pass, keyed by export name."""
        named: dict[str, Matrix] = {}
        named |= {f"context_head{i}": m for i, m in enumerate(self.context_attention)}
        named |= {f"gat_syntax_layer{i}": m for i, m in enumerate(self.alpha_syntax)}
        named |= {f"gat_semantic_layer{i}": m for i, m in enumerate(self.alpha_semantic)}
        if self.cross_syn is not None and self.cross_sem is not None:
            named["cross_syntax"] = self.cross_syn
            named["cross_semantic"] = self.cross_sem
        named |= {f"refine_head{i}": m for i, m in enumerate(self.refine_attention)}
        if self.alpha_aspect is not None:
            named["gat_aspect"] = self.alpha_aspect
        return named

    def probabilities(self) -> Matrix:
        return softmax_rows(self.logits.value).value.reshape(-1)

    @property
    def prediction(self) -> Polarity:
        return Polarity(predict(self.logits.value))


def forward(
    encoded: EncodedInstance,
    params: Params,
    config: ModelConfig,
    graphs: InstanceGraphs,
    graph: GraphConfig,
    *,
    precomputed: PrecomputedEmbeddings | None = None,
    rng: np.random.Generator | None = None,
) -> ForwardTrace:
    """One pass over ``encoded``; dropout is active only when ``rng`` is given."""
    flags, real, slope = config.ablation, encoded.pad_mask, config.leaky_slope
    h, context_attention = context_encode(encoded, params, config, precomputed, rng)

    alpha_syntax: list[Matrix] = []
    h_syntax = h
    if not flags.skip_syntax:
        if graphs.syntactic is None:
            raise ContractError(f"instance {encoded.instance_id}: syntactic graph missing")
        h_syntax, alpha_syntax = gat_stack(
            h, graphs.syntactic, params, "gat_syn", config.gat_layers, slope
        )

    alpha_semantic: list[Matrix] = []
    h_semantic, semantic_graph = h, graphs.semantic
    if not flags.skip_semantic:
        if semantic_graph is None:
            semantic_graph = build_semantic(h.value, graph.top_k, graph.threshold, real)
        h_semantic, alpha_semantic = gat_stack(
            h, semantic_graph, params, "gat_sem", config.gat_layers, slope
        )

    c_syn = c_sem = None
    cross_syn = cross_sem = None
    if flags.no_cross_attention:
        h_cat = fuse(h_syntax, h_semantic)
    else:
        c_syn, cross_syn = cross_attention(
            h, h_syntax, params["xattn_syn.Wq"], params["xattn_syn.Wk"], params["xattn_syn.Wv"], real
        )
        c_sem, cross_sem = cross_attention(
            h, h_semantic, params["xattn_sem.Wq"], params["xattn_sem.Wk"], params["xattn_sem.Wv"], real
        )
        h_cat = fuse(c_syn, c_sem)
    h_cat = dropout(h_cat, config.dropout_rate, rng)

    h_refined, refine_attention = refine(h_cat, params, config, real, rng)

    h_aspect = alpha_aspect = None
    if flags.no_aspect_embedding:
        z_aspect = pooled_mean(h_refined, real)
    else:
        z_aspect, h_aspect, alpha_aspect = aspect_extract(
            h_refined, graphs.aspect, params, encoded, slope
        )

    highway = highway_fuse(h_refined, z_aspect, params, real, gated=not flags.no_highway_gate)
    logits = linear(dropout(highway.z, config.dropout_rate, rng), params, "classifier")
    return ForwardTrace(
        H=h,
        H_syntax=h_syntax,
        H_semantic=h_semantic,
        alpha_syntax=alpha_syntax,
        alpha_semantic=alpha_semantic,
        semantic_graph=semantic_graph,
        context_attention=context_attention,
        C_syn=c_syn,
        C_sem=c_sem,
        cross_syn=cross_syn,
        cross_sem=cross_sem,
        H_cat=h_cat,
        H_refined=h_refined,
        refine_attention=refine_attention,
        H_aspect=h_aspect,
        alpha_aspect=alpha_aspect,
        z_aspect=z_aspect,
        h_bar=highway.h_bar,
        u=highway.u,
        gate=highway.gate,
        z_H=highway.z,
        logits=logits,
    )


class CrosGraphNet:
    """Parameters plus the configuration needed to run them on encoded instances."""

    def __init__(
        self,
        config: ModelConfig,
        params: ModelParams,
        graph: GraphConfig,
        precomputed: PrecomputedEmbeddings | None = None,
    ) -> None:
        if config.embedding_source == "precomputed" and precomputed is None:
            if config.precomputed_path is None:
                raise ConfigError("precomputed embedding source without a path")
            precomputed = PrecomputedEmbeddings.load(config.precomputed_path, config.embed_dim)
        self.config = config
        self.params = params
        self.graph = graph
        self.precomputed = precomputed
        self._fixed: AdjacencyMatrix | None = None

    def graphs_for(self, encoded: EncodedInstance) -> InstanceGraphs:
        if self.config.ablation.fixed_adjacency and self._fixed is None:
            self._fixed = build_fixed(encoded.max_length, self.graph.syntax.window_radius)
            logger.info(
                f"Using one fixed band adjacency (radius {self.graph.syntax.window_radius}) "
                f"for every instance"
            )
        return build_instance_graphs(encoded, self.config, self.graph, self._fixed)

    def forward(
        self,
        encoded: EncodedInstance,
        graphs: InstanceGraphs | None = None,
        rng: np.random.Generator | None = None,
    ) -> ForwardTrace:
        return forward(
            encoded,
            self.params,
            self.config,
            graphs if graphs is not None else self.graphs_for(encoded),
            self.graph,
            precomputed=self.precomputed,
            rng=rng,
        )

    def predict(self, encoded: EncodedInstance, graphs: InstanceGraphs | None = None) -> Polarity:
        return self.forward(encoded, graphs).prediction
