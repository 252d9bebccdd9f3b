"""Attention exports and per-token importance scores."""

from pathlib import Path

import numpy as np
from loguru import logger

from crossgraph_absa.corpus.encoding import EncodedInstance
from crossgraph_absa.errors import ContractError
from crossgraph_absa.graphbuild import export_matrix_csv
from crossgraph_absa.model.network import ForwardTrace
from crossgraph_absa.numkit import Matrix
from crossgraph_absa.utils import write_csv


def _sentence_block(matrix: Matrix, encoded: EncodedInstance) -> Matrix:
    start, end = encoded.sentence_region
    block = np.asarray(matrix)[start:end, start:end]
    totals = block.sum(axis=1, keepdims=True)
    return np.divide(block, totals, out=np.zeros_like(block), where=totals > 0)


def token_importance(trace: ForwardTrace, encoded: EncodedInstance) -> list[tuple[str, float]]:
    """Column means of the final cross-attention restricted to the sentence.

    Each matrix is cut to sentence rows and columns and renormalised per row;
    the two branches are averaged, so the scores over the sentence sum to 1.
    Without cross-attention the last GAT layers stand in.
    """
    if trace.cross_syn is not None and trace.cross_sem is not None:
        sources = [trace.cross_syn, trace.cross_sem]
    else:
        sources = [alphas[-1] for alphas in (trace.alpha_syntax, trace.alpha_semantic) if alphas]
    if not sources:
        raise ContractError("no cross-attention or graph attention in this configuration to score")
    scores = np.mean([_sentence_block(m, encoded).mean(axis=0) for m in sources], axis=0)
    return list(zip(encoded.sentence_tokens, map(float, scores), strict=True))


def export_attention(trace: ForwardTrace, encoded: EncodedInstance, out_dir: Path) -> list[Path]:
    """Write every attention matrix over the real tokens plus ``importance.csv``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    size = encoded.length
    written: list[Path] = []
    for name, matrix in trace.attention_matrices().items():
        written.append(
            export_matrix_csv(out_dir / f"{name}.csv", np.asarray(matrix)[:size, :size], encoded.layout)
        )
    importance = token_importance(trace, encoded)
    written.append(
        write_csv(out_dir / "importance.csv", ["token", "score"], [[t, repr(s)] for t, s in importance])
    )
    logger.info(f"Wrote {len(written)} attention files for {encoded.instance_id} to {out_dir}")
    return written
