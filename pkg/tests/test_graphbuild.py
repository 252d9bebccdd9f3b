"""Syntactic, semantic and aspect graphs plus distance statistics."""

import csv
from pathlib import Path

import numpy as np
import pytest

from crossgraph_absa.corpus import DatasetSplit, EncodedInstance, build_vocab, encode
from crossgraph_absa.corpus.loader import instance_from_text
from crossgraph_absa.errors import ConfigError, ContractError, DatasetError
from crossgraph_absa.graphbuild import (
    AdjacencyMatrix,
    CoarseClass,
    GraphStats,
    SyntaxRuleSet,
    average_stats,
    build_aspect,
    build_aspect_from_syntax,
    build_fixed,
    build_semantic,
    build_syntactic,
    graph_stats,
    load_edge_list,
    semantic_raw,
    syntactic_from_edges,
)


def _encoded(text: str, aspect: str, max_length: int = 12) -> EncodedInstance:
    instance = instance_from_text("g", text, aspect)
    vocab = build_vocab(DatasetSplit(name="train", instances=(instance,)))
    return encode(instance, vocab, max_length)


def _symmetric(pairs: set[tuple[int, int]]) -> set[tuple[int, int]]:
    return pairs | {(j, i) for i, j in pairs}


def _self_loops(encoded: EncodedInstance) -> set[tuple[int, int]]:
    return {(i, i) for i in range(encoded.length)}


def test_lexicon_classes() -> None:
    """Word lists win over suffixes; unknown words default to NOUN."""
    rules = SyntaxRuleSet()
    assert rules.classes(["and", "arrived", "pizza", "great", "!"]) == [
        CoarseClass.PARTICLE,
        CoarseClass.VERB,
        CoarseClass.NOUN,
        CoarseClass.MODIFIER,
        CoarseClass.OTHER,
    ]


def test_syntactic_two_tokens_window() -> None:
    """Two adjacent tokens link to each other; specials keep only self-loops."""
    encoded = _encoded("nice pizza", "pizza")
    graph = build_syntactic(encoded.sentence_tokens, encoded, SyntaxRuleSet(window_radius=1))
    assert graph.edges() == _self_loops(encoded) | _symmetric({(1, 2)})


def test_syntactic_single_token() -> None:
    """A one-token sentence gets nothing but self-loops."""
    encoded = _encoded("pizza", "pizza")
    graph = build_syntactic(encoded.sentence_tokens, encoded, SyntaxRuleSet(window_radius=1))
    assert graph.edges() == _self_loops(encoded)


def test_syntactic_rules_match_hand_enumeration() -> None:
    """Window links plus NOUN-VERB links within four tokens, enumerated by hand."""
    # pizza/NOUN and/PARTICLE crust/NOUN really/PARTICLE arrived/VERB at positions 1..5
    encoded = _encoded("pizza and crust really arrived", "pizza")
    graph = build_syntactic(encoded.sentence_tokens, encoded, SyntaxRuleSet(window_radius=1))
    window = {(1, 2), (2, 3), (3, 4), (4, 5)}
    noun_verb = {(1, 5), (3, 5)}
    assert graph.edges() == _self_loops(encoded) | _symmetric(window | noun_verb)


def test_syntactic_is_symmetric_binary_and_masks_padding() -> None:
    """Binary, symmetric, and padded rows/columns are zero."""
    encoded = _encoded("the waiter was very rude to us", "waiter", max_length=16)
    graph = build_syntactic(encoded.sentence_tokens, encoded, SyntaxRuleSet())
    assert graph.is_symmetric()
    assert set(np.unique(graph.weights)) <= {0.0, 1.0}
    padding = ~np.asarray(encoded.pad_mask)
    assert not graph.weights[padding].any()
    assert not graph.weights[:, padding].any()


def test_syntactic_rejects_misaligned_tokens() -> None:
    """Tokens that differ from the sentence region are a contract error."""
    encoded = _encoded("nice pizza", "pizza")
    with pytest.raises(ContractError):
        build_syntactic(["nice"], encoded, SyntaxRuleSet())


def test_weighted_edges_are_rejected() -> None:
    """Only binary syntactic graphs are supported."""
    with pytest.raises(ValueError, match="binary"):
        SyntaxRuleSet(weighted_edges=True)


def test_edge_list_round_trip(tmp_path: Path) -> None:
    """A precomputed edge list lands on sentence positions with self-loops."""
    path = tmp_path / "g.edges"
    path.write_text("#edges T=3\n0 2\n\n1 1\n", encoding="utf-8")
    encoded = _encoded("nice warm pizza", "pizza")
    graph = syntactic_from_edges(load_edge_list(path), encoded)
    assert graph.edges() == _self_loops(encoded) | _symmetric({(1, 3)})


@pytest.mark.parametrize(
    ("content", "message"),
    [("0 1\n", "header"), ("#edges T=2\n0 x\n", "line 2"), ("#edges T=2\n0 5\n", "outside")],
)
def test_edge_list_errors(tmp_path: Path, content: str, message: str) -> None:
    """Malformed edge files fail with a located message."""
    path = tmp_path / "bad.edges"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(DatasetError, match=message):
        load_edge_list(path)


def test_edge_list_length_must_match_sentence(tmp_path: Path) -> None:
    """Edges for a different sentence length are rejected."""
    path = tmp_path / "g.edges"
    path.write_text("#edges T=5\n0 1\n", encoding="utf-8")
    with pytest.raises(ContractError):
        syntactic_from_edges(load_edge_list(path), _encoded("nice pizza", "pizza"))


def _brute_force_semantic(h: np.ndarray, top_k: int, threshold: float) -> np.ndarray:
    norms = np.linalg.norm(h, axis=1)
    cos = np.maximum((h @ h.T) / np.outer(norms, norms), 0.0)
    out = np.zeros_like(cos)
    for i in range(len(h)):
        ranked = sorted(
            (j for j in range(len(h)) if j != i and cos[i, j] >= threshold),
            key=lambda j: (-cos[i, j], j),
        )
        for j in ranked[:top_k]:
            out[i, j] = cos[i, j]
        out[i, i] = 1.0
    return out


@pytest.mark.parametrize("seed", range(10))
def test_semantic_matches_full_sort_oracle(seed: int) -> None:
    """Row-wise top-k with threshold equals a full-sort oracle on random 8x4 inputs."""
    h = np.random.default_rng(seed).normal(size=(8, 4))
    graph = build_semantic(h, top_k=2, threshold=0.1)
    assert np.allclose(graph.weights, _brute_force_semantic(h, 2, 0.1), atol=1e-12)
    assert ((graph.weights > 0).sum(axis=1) <= 3).all()


def test_semantic_identical_rows() -> None:
    """Identical embeddings keep weight 1 on every retained neighbour."""
    graph = build_semantic(np.ones((5, 3)), top_k=2, threshold=0.2)
    kept = graph.weights[graph.weights > 0]
    assert np.allclose(kept, 1.0)
    assert ((graph.weights > 0).sum(axis=1) == 3).all()


def test_semantic_orthogonal_rows_keep_only_self_loops() -> None:
    """One-hot rows are orthogonal, so a 0.5 threshold prunes every edge."""
    graph = build_semantic(np.eye(4), top_k=2, threshold=0.5)
    assert np.array_equal(graph.weights, np.eye(4))


def test_semantic_top_k_bounds() -> None:
    """top_k must be below the number of positions."""
    with pytest.raises(ConfigError):
        build_semantic(np.eye(3), top_k=3, threshold=0.0)


def test_semantic_padding_rows_zero() -> None:
    """Padded positions neither send nor receive edges."""
    h = np.random.default_rng(4).normal(size=(5, 3))
    graph = build_semantic(h, top_k=2, threshold=-1.0, pad_mask=[True, True, True, False, False])
    assert not graph.weights[3:].any()
    assert not graph.weights[:, 3:].any()


def test_semantic_raw_symmetric_unit_diagonal() -> None:
    """The unpruned cosine matrix is symmetric with ones on the diagonal."""
    sims = semantic_raw(np.random.default_rng(8).normal(size=(6, 5)))
    assert np.abs(sims - sims.T).max() < 1e-9
    assert np.allclose(np.diag(sims), 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_semantic_commutes_with_permutation(seed: int) -> None:
    """Permuting embedding rows permutes the graph the same way."""
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(7, 4))
    perm = rng.permutation(7)
    base = build_semantic(h, top_k=3, threshold=0.0).weights
    permuted = build_semantic(h[perm], top_k=3, threshold=0.0).weights
    assert np.allclose(permuted, base[np.ix_(perm, perm)], atol=1e-12)


def test_aspect_window_hand_enumeration() -> None:
    """Aspect at sentence index 3 of 7 tokens with radius 2 links positions 2..6."""
    encoded = _encoded("a b c pizza e f g", "pizza", max_length=14)
    graph = build_aspect(encoded.max_length, encoded, radius=2)
    links = {(4, j) for j in (2, 3, 5, 6)}
    assert graph.edges() == _self_loops(encoded) | _symmetric(links)


def test_aspect_radius_zero_is_clique() -> None:
    """Radius 0 keeps the aspect tokens mutually linked and nothing else."""
    encoded = _encoded("the garlic bread was cold", "garlic bread")
    graph = build_aspect(encoded.max_length, encoded, radius=0)
    assert graph.edges() == _self_loops(encoded) | _symmetric({(2, 3)})


def test_aspect_radius_saturates_over_sentence() -> None:
    """A radius beyond the sentence connects the aspect row to every sentence token."""
    encoded = _encoded("the soup was cold", "soup")
    graph = build_aspect(encoded.max_length, encoded, radius=10)
    aspect = encoded.aspect_positions[0]
    assert set(np.flatnonzero(graph.weights[aspect])) == set(encoded.sentence_positions)


def test_aspect_from_syntax_restricts_to_aspect_rows() -> None:
    """Edges not touching the aspect are dropped; the aspect clique is kept."""
    encoded = _encoded("pizza and crust really arrived", "pizza")
    syntax = build_syntactic(encoded.sentence_tokens, encoded, SyntaxRuleSet(window_radius=1))
    graph = build_aspect_from_syntax(syntax, encoded)
    assert graph.edges() == _self_loops(encoded) | _symmetric({(1, 2), (1, 5)})


def test_fixed_band_masked_per_instance() -> None:
    """The fixed band graph depends only on positions and is masked to real tokens."""
    band = build_fixed(6, radius=1)
    assert band.edges() == {(i, j) for i in range(6) for j in range(6) if abs(i - j) <= 1}
    masked = band.masked([True] * 4 + [False] * 2)
    assert not masked.weights[4:].any()
    assert masked.weights[3, 2] == 1.0


def _path_graph(encoded: EncodedInstance, links: set[tuple[int, int]]) -> AdjacencyMatrix:
    weights = np.diag(np.asarray(encoded.pad_mask, dtype=float))
    for i, j in links:
        weights[i, j] = weights[j, i] = 1.0
    return AdjacencyMatrix(kind="syntactic", weights=weights)


def test_graph_stats_path() -> None:
    """Path 1-2-3 with the aspect at 1 averages (1 + 2) / 2 hops."""
    encoded = _encoded("soup was cold", "soup", max_length=8)
    cosines = np.ones((8, 8))
    stats = graph_stats(_path_graph(encoded, {(1, 2), (2, 3)}), cosines, encoded)
    assert stats.mean_syntactic_distance == 1.5
    assert stats.mean_semantic_distance == 0.0
    assert stats.coverage == 1.0
    assert stats.pairs == 2


def test_graph_stats_star() -> None:
    """Every context token one hop from the aspect gives a mean distance of exactly 1."""
    encoded = _encoded("soup was very cold", "soup", max_length=10)
    star = _path_graph(encoded, {(1, 2), (1, 3), (1, 4)})
    stats = graph_stats(star, np.ones((10, 10)), encoded)
    assert stats.mean_syntactic_distance == 1.0


def test_graph_stats_unreachable_pairs_lower_coverage() -> None:
    """Unreachable pairs are excluded from the mean and reported as coverage."""
    encoded = _encoded("soup was cold", "soup", max_length=8)
    stats = graph_stats(_path_graph(encoded, {(1, 2)}), np.zeros((8, 8)), encoded)
    assert stats.mean_syntactic_distance == 1.0
    assert stats.coverage == 0.5
    assert stats.mean_semantic_distance == 1.0


def test_average_stats_weights_by_pairs() -> None:
    """Instances with more aspect/context pairs count more."""
    merged = average_stats(
        [
            GraphStats(mean_syntactic_distance=1.0, mean_semantic_distance=0.0, pairs=1),
            GraphStats(mean_syntactic_distance=4.0, mean_semantic_distance=0.6, pairs=2),
        ]
    )
    assert merged.mean_syntactic_distance == pytest.approx(3.0)
    assert merged.mean_semantic_distance == pytest.approx(0.4)
    assert merged.pairs == 3


def test_adjacency_csv_export(tmp_path: Path) -> None:
    """Labelled export writes a header row and one labelled row per token."""
    graph = build_fixed(3, radius=1)
    path = graph.to_csv(tmp_path / "fixed.csv", ["a", "b", "c"])
    with path.open(encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["", "a", "b", "c"]
    assert rows[1][0] == "a"
    assert [float(v) for v in rows[1][1:]] == [1.0, 1.0, 0.0]


def test_semantic_rows_are_pruned_independently() -> None:
    """With top_k = 1 a token can keep an edge its neighbour does not return."""
    h = np.array([[1.0, 0.0], [1.0, 0.5], [0.0, 1.0]])
    graph = build_semantic(h, top_k=1, threshold=0.2)
    assert graph.weights[2, 1] > 0
    assert graph.weights[1, 2] == 0
    assert not graph.is_symmetric()
