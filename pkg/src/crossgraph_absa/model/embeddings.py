"""Precomputed per-token vectors: ``instance_id<TAB>position<TAB>v1 v2 ...``.

Positions are sequence coordinates of the encoded layout (0 is [CLS]).
"""

from pathlib import Path

import numpy as np
from loguru import logger

from crossgraph_absa.corpus.encoding import EncodedInstance
from crossgraph_absa.errors import DatasetError
from crossgraph_absa.numkit import Matrix


class PrecomputedEmbeddings:
    def __init__(self, vectors: dict[str, dict[int, np.ndarray]], dim: int) -> None:
        self._vectors = vectors
        self.dim = dim

    @classmethod
    def load(cls, path: Path, dim: int) -> "PrecomputedEmbeddings":
        vectors: dict[str, dict[int, np.ndarray]] = {}
        with Path(path).open(encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                fields = line.rstrip("\n").split("\t")
                if len(fields) != 3:
                    raise DatasetError(f"{path}: line {line_no}: expected 3 tab-separated fields")
                instance_id, position, values = fields
                try:
                    vector = np.array([float(v) for v in values.split()], dtype=np.float64)
                    index = int(position)
                except ValueError as e:
                    raise DatasetError(f"{path}: line {line_no}: {e}") from e
                if vector.shape != (dim,) or not np.all(np.isfinite(vector)):
                    raise DatasetError(
                        f"{path}: line {line_no}: expected {dim} finite values, got {vector.size}"
                    )
                vectors.setdefault(instance_id, {})[index] = vector
        logger.info(f"Loaded precomputed vectors for {len(vectors)} instances from {path}")
        return cls(vectors, dim)

    def __contains__(self, instance_id: object) -> bool:
        return instance_id in self._vectors

    def matrix(self, encoded: EncodedInstance, dtype: np.dtype = np.dtype(np.float64)) -> Matrix:
        """``max_length x dim`` input rows; padded rows are zero."""
        per_position = self._vectors.get(encoded.instance_id)
        if per_position is None:
            raise DatasetError(f"no precomputed vectors for instance {encoded.instance_id!r}")
        out = np.zeros((encoded.max_length, self.dim), dtype=dtype)
        for position in range(encoded.length):
            if position not in per_position:
                raise DatasetError(
                    f"instance {encoded.instance_id!r}: precomputed vector missing for position {position}"
                )
            out[position] = per_position[position]
        return out
