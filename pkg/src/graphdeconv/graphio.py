"""Plain-text edge-list input/output.

Format: one undirected edge per line as ``i j`` or ``i j weight`` with
0-based node indices; ``#`` starts a comment; blank lines are skipped.
Each undirected edge appears once.  The first non-comment line may be
``n <count>`` to declare the node count (needed for trailing isolated
nodes); otherwise the count is one plus the largest index seen.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DataValidationError, ParseError
from .gsp import Graph


def read_edgelist(path):
    edges = []
    declared_n = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "n" and declared_n is None and not edges:
                if len(parts) != 2:
                    raise ParseError("malformed node-count line", path, lineno)
                try:
                    declared_n = int(parts[1])
                except ValueError:
                    raise ParseError(
                        f"node count must be an integer, got {parts[1]!r}", path, lineno
                    ) from None
                if declared_n < 1:
                    raise ParseError("node count must be >= 1", path, lineno)
                continue
            if len(parts) not in (2, 3):
                raise ParseError(
                    f"expected 'i j' or 'i j weight', got {line!r}", path, lineno
                )
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(
                    f"node indices must be integers, got {line!r}", path, lineno
                ) from None
            w = 1.0
            if len(parts) == 3:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise ParseError(
                        f"weight must be a number, got {parts[2]!r}", path, lineno
                    ) from None
            if i < 0 or j < 0:
                raise ParseError("node indices must be >= 0", path, lineno)
            if i == j:
                raise ParseError(f"self-loop on node {i} not allowed", path, lineno)
            if w < 0:
                raise ParseError("edge weights must be non-negative", path, lineno)
            edges.append((i, j, w, lineno))

    n = declared_n
    if n is None:
        if not edges:
            raise DataValidationError(f"{path}: empty edge list and no node count")
        n = max(max(i, j) for i, j, _, _ in edges) + 1
    A = np.zeros((n, n))
    for i, j, w, lineno in edges:
        if i >= n or j >= n:
            raise ParseError(
                f"node index {max(i, j)} exceeds declared count {n}", path, lineno
            )
        if A[i, j] != 0.0:
            raise ParseError(f"duplicate edge ({i}, {j})", path, lineno)
        A[i, j] = A[j, i] = w
    return Graph(A)


def write_edgelist(graph, path):
    A = graph.adjacency
    n = graph.n_nodes
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"n {n}\n")
        for i in range(n):
            for j in range(i + 1, n):
                if A[i, j] != 0.0:
                    if A[i, j] == 1.0:
                        fh.write(f"{i} {j}\n")
                    else:
                        fh.write(f"{i} {j} {A[i, j]:.17g}\n")
