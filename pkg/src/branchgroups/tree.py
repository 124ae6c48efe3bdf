"""Vertices of the d-regular rooted tree and the descendance order.

A vertex is a tuple of letters in {0, ..., d-1}; the empty tuple is the
root.  Vertices serialize as digit strings ("" for the root, "010", ...),
which is the form used in files, CLI arguments and JSON reports.
"""

from __future__ import annotations

from itertools import product

Vertex = tuple[int, ...]

ROOT: Vertex = ()


class InvalidDegreeError(ValueError):
    """Raised for tree degrees < 2."""


def check_degree(d: int) -> None:
    if d < 2:
        raise InvalidDegreeError(f"tree degree must be >= 2, got {d}")


def level(v: Vertex) -> int:
    return len(v)


def parse_vertex(s: str, d: int | None = None) -> Vertex:
    """Parse a digit string into a vertex.  "" denotes the root."""
    if not all(c.isdigit() for c in s):
        raise ValueError(f"invalid vertex string {s!r}")
    v = tuple(int(c) for c in s)
    if d is not None:
        for x in v:
            if x >= d:
                raise ValueError(f"letter {x} out of range for degree {d}")
    return v


def format_vertex(v: Vertex) -> str:
    if any(x > 9 for x in v):
        raise ValueError("vertex serialization requires degree <= 10")
    return "".join(str(x) for x in v)


def level_vertices(d: int, n: int) -> list[Vertex]:
    """All d^n vertices of level n, in lexicographic order."""
    check_degree(d)
    if n < 0:
        raise ValueError(f"level must be >= 0, got {n}")
    return [tuple(w) for w in product(range(d), repeat=n)]


def vertex_leq(w: Vertex, v: Vertex) -> bool:
    """True iff w lies in the subtree rooted at v (v is a prefix of w)."""
    return len(w) >= len(v) and w[: len(v)] == v
