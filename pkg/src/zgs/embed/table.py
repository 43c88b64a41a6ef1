"""Node embedding table with CSV persistence."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ParseError
from ..registry import format_real
from ..zoograph import NodeRef


@dataclass
class EmbeddingTable:
    """One fixed-length real vector per graph node."""

    vectors: dict[NodeRef, np.ndarray]
    dim: int

    def __getitem__(self, node: NodeRef) -> np.ndarray:
        return self.vectors[node]

    def __contains__(self, node: NodeRef) -> bool:
        return node in self.vectors

    def write_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "id"] + [f"v{i}" for i in range(self.dim)])
            for node in sorted(self.vectors):
                writer.writerow(
                    [node.kind, node.id] + [format_real(v) for v in self.vectors[node]]
                )
        return path

    @classmethod
    def read_csv(cls, path) -> "EmbeddingTable":
        path = Path(path)
        vectors: dict[NodeRef, np.ndarray] = {}
        dim = None
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or header[:2] != ["kind", "id"]:
                raise ParseError(f"{path}:1: expected header kind,id,v0,...")
            dim = len(header) - 2
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != dim + 2:
                    raise ParseError(f"{path}:{line_no}: expected {dim + 2} cells")
                vectors[NodeRef(row[0], row[1])] = np.array(
                    [float(c) for c in row[2:]], dtype=float
                )
        return cls(vectors=vectors, dim=dim)
