"""Weighted directed index graph on the positive integers.

Vertex 1 has three outgoing edges (two loops onto itself and one edge
to 2); every vertex i >= 2 has four, targeting 2i-2, 2i-1 (in two
variants) and 2i.  Admissible paths walk this graph and label the wires
of the electrical networks built in :mod:`nel.network`; the product of
edge weights along a path is the resistance of the wire it labels.

Paths are stored compactly as a start vertex plus a string of step
codes, one character per edge:

    ``'2'``  step to 2i-2
    ``'1'``  step to 2i-1, plain variant
    ``'p'``  step to 2i-1, primed variant
    ``'0'``  step to 2i
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple

from .errors import ResourceCapError

STEP_DOWN = "2"
STEP_MID = "1"
STEP_MID_PRIME = "p"
STEP_UP = "0"
STEP_CODES = (STEP_DOWN, STEP_MID, STEP_MID_PRIME, STEP_UP)

#: Default cap on the number of paths materialized by an enumeration.
DEFAULT_PATH_CAP = 2**26


def step_target(vertex: int, code: str) -> int:
    """Vertex reached from ``vertex`` by the step with the given code."""
    if vertex < 1:
        raise ValueError(f"vertex must be >= 1, got {vertex}")
    if code == STEP_DOWN:
        if vertex == 1:
            raise ValueError("vertex 1 has no edge to 0")
        return 2 * vertex - 2
    if code in (STEP_MID, STEP_MID_PRIME):
        return 2 * vertex - 1
    if code == STEP_UP:
        return 2 * vertex
    raise ValueError(f"unknown step code {code!r}")


@dataclass(frozen=True)
class Edge:
    """Directed edge of the index graph.

    ``prime`` only applies to the 2i-1 target, which carries two
    parallel edges distinguished by the flag.
    """

    src: int
    dst: int
    prime: bool = False

    def __post_init__(self):
        if self.src < 1:
            raise ValueError(f"edge source must be >= 1, got {self.src}")
        if self.dst not in (2 * self.src - 2, 2 * self.src - 1, 2 * self.src):
            raise ValueError(f"no edge from {self.src} to {self.dst}")
        if self.dst == 0:
            raise ValueError("the pair (1, 0) is not an edge")
        if self.prime and self.dst != 2 * self.src - 1:
            raise ValueError("primed edges only exist for the 2i-1 target")

    @property
    def step_code(self) -> str:
        if self.dst == 2 * self.src - 2:
            return STEP_DOWN
        if self.dst == 2 * self.src - 1:
            return STEP_MID_PRIME if self.prime else STEP_MID
        return STEP_UP

    @property
    def label(self) -> str:
        suffix = "'" if self.prime else ""
        return f"e({self.src},{self.dst}){suffix}"


def out_edges(vertex: int) -> list[Edge]:
    """All edges leaving ``vertex``: three for vertex 1, four otherwise."""
    if vertex < 1:
        raise ValueError(f"vertex must be >= 1, got {vertex}")
    edges = []
    if vertex >= 2:
        edges.append(Edge(vertex, 2 * vertex - 2))
    edges.append(Edge(vertex, 2 * vertex - 1))
    edges.append(Edge(vertex, 2 * vertex - 1, prime=True))
    edges.append(Edge(vertex, 2 * vertex))
    return edges


class Path:
    """Admissible path, stored as a start vertex and step-code string."""

    __slots__ = ("start", "codes")

    def __init__(self, start: int, codes: str = ""):
        if start < 1:
            raise ValueError(f"start vertex must be >= 1, got {start}")
        vertex = start
        for code in codes:
            vertex = step_target(vertex, code)  # validates the code
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "codes", codes)

    def __setattr__(self, name, value):
        raise AttributeError("Path is immutable")

    @classmethod
    def from_edges(cls, edges: list[Edge]) -> "Path":
        if not edges:
            raise ValueError("use Path(start) for the empty path")
        for a, b in zip(edges, edges[1:]):
            if a.dst != b.src:
                raise ValueError(f"edges do not chain: {a.label} -> {b.label}")
        return cls(edges[0].src, "".join(e.step_code for e in edges))

    @property
    def length(self) -> int:
        return len(self.codes)

    @property
    def vertices(self) -> tuple[int, ...]:
        out = [self.start]
        for code in self.codes:
            out.append(step_target(out[-1], code))
        return tuple(out)

    @property
    def terminal(self) -> int:
        return self.vertices[-1]

    @property
    def edges(self) -> tuple[Edge, ...]:
        verts = self.vertices
        return tuple(
            Edge(verts[k], verts[k + 1], prime=(code == STEP_MID_PRIME))
            for k, code in enumerate(self.codes)
        )

    def prefix(self, length: int) -> "Path":
        if not 0 <= length <= self.length:
            raise ValueError(f"prefix length {length} out of range")
        return Path(self.start, self.codes[:length])

    def concat(self, other: "Path") -> "Path":
        if other.start != self.terminal:
            raise ValueError("paths do not chain")
        return Path(self.start, self.codes + other.codes)

    def __mul__(self, other: "Path") -> "Path":
        return self.concat(other)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Path)
            and self.start == other.start
            and self.codes == other.codes
        )

    def __hash__(self) -> int:
        return hash((self.start, self.codes))

    def __repr__(self) -> str:
        return f"Path(start={self.start}, codes={self.codes!r})"


def path_count(start: int, length: int) -> int:
    """Number of admissible paths of the given length from ``start``.

    Equals the wire count of the matching electrical network:
    (2^n + 1) 2^n / 2 from vertex 1 and 4^n from any vertex > 1.
    """
    if length < 0:
        raise ValueError("length must be >= 0")
    if start == 1:
        return (2**length + 1) * 2**length // 2
    return 4**length


def iter_paths(start: int, length: int) -> Iterator[Path]:
    """Depth-first enumeration of all paths of ``length`` from ``start``."""
    if length == 0:
        yield Path(start)
        return
    # Stack of (vertex, codes-so-far); children pushed in reverse so the
    # emitted order is lexicographic in step codes ('0' < '1' < '2' < 'p').
    stack = [(start, "")]
    while stack:
        vertex, codes = stack.pop()
        if len(codes) == length:
            yield Path(start, codes)
            continue
        children = [STEP_UP, STEP_MID, STEP_MID_PRIME]
        if vertex >= 2:
            children.append(STEP_DOWN)
        for code in sorted(children, reverse=True):
            stack.append((step_target(vertex, code), codes + code))


def enumerate_paths(
    start: int, length: int, cap: int = DEFAULT_PATH_CAP
) -> list[Path]:
    """All admissible paths of the given length, erroring beyond ``cap``."""
    count = path_count(start, length)
    if count > cap:
        raise ResourceCapError(
            f"{count} paths from vertex {start} at length {length} "
            f"exceed the cap of {cap}"
        )
    return list(iter_paths(start, length))


@dataclass(frozen=True)
class WeightAssignment:
    """Positive edge weights as a pure rule ``(src, dst) -> weight``.

    The two parallel edges onto 2i-1 share a weight by construction,
    which the (src, dst) keying enforces.
    """

    rule: Callable[[int, int], float]
    name: str = "custom"

    def of(self, src: int, dst: int) -> float:
        value = float(self.rule(src, dst))
        if not value > 0.0:
            raise ValueError(f"weight r({src},{dst}) = {value} is not positive")
        return value

    def of_edge(self, edge: Edge) -> float:
        return self.of(edge.src, edge.dst)

    @classmethod
    def constant(cls, value: float) -> "WeightAssignment":
        value = float(value)
        if not value > 0.0:
            raise ValueError("constant weight must be positive")
        return cls(rule=lambda i, j: value, name=f"constant({value})")

    @classmethod
    def from_table(
        cls,
        table: dict[tuple[int, int], float],
        default: float | None = None,
    ) -> "WeightAssignment":
        frozen = dict(table)

        def rule(i: int, j: int) -> float:
            if (i, j) in frozen:
                return frozen[(i, j)]
            if default is None:
                raise KeyError(f"no weight for edge ({i},{j}) and no default")
            return default

        return cls(rule=rule, name="table")


def path_resistance(path: Path, weights: WeightAssignment) -> float:
    """Product of edge weights along the path; 1 for the empty path."""
    value = 1.0
    verts = path.vertices
    for a, b in zip(verts, verts[1:]):
        value *= weights.of(a, b)
    return value


class TailProduct(NamedTuple):
    value: float
    log_sum: float


def tail_product(start: int, terms: int, weights: WeightAssignment) -> TailProduct:
    """Product of the doubling-chain weights r(2^k i0, 2^(k+1) i0), k < terms.

    The partial log-sum is reported alongside for divergence
    diagnostics; only finite partial products are ever computed.
    """
    if terms < 0:
        raise ValueError("terms must be >= 0")
    value = 1.0
    log_sum = 0.0
    vertex = start
    for _ in range(terms):
        r = weights.of(vertex, 2 * vertex)
        value *= r
        log_sum += math.log(r)
        vertex *= 2
    return TailProduct(value=value, log_sum=log_sum)
