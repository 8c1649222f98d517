"""Exact dyadic geometry: contraction maps, node sets, cells, measures.

All coordinates, map parameters, cell endpoints and masses are exact
rationals (:class:`fractions.Fraction`); conversion to floating point
happens only when kernels or energies are evaluated.  This makes the
path/wire matching and the set identities of the construction exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Union

import numpy as np

from .errors import OutOfDomainError, ResourceCapError
from .index_space import Edge, Path

Rational = Union[Fraction, int]

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class AffineMap:
    """Order-preserving affine contraction x -> slope*x + shift on [0,1]."""

    slope: Fraction
    shift: Fraction

    def __post_init__(self):
        if self.slope <= 0:
            raise ValueError("slope must be positive")
        if self.slope > 1 or self.shift < 0 or self.slope + self.shift > 1:
            raise ValueError("map must send [0,1] into [0,1]")

    def __call__(self, x: Rational) -> Fraction:
        return self.slope * Fraction(x) + self.shift

    def after(self, inner: "AffineMap") -> "AffineMap":
        """Composition self o inner (inner applied first)."""
        return AffineMap(self.slope * inner.slope, self.slope * inner.shift + self.shift)

    def invert(self, y: Rational) -> Fraction:
        return (Fraction(y) - self.shift) / self.slope

    @property
    def image(self) -> tuple[Fraction, Fraction]:
        return (self.shift, self.shift + self.slope)

    @classmethod
    def identity(cls) -> "AffineMap":
        return cls(ONE, ZERO)


def phi_edge(edge: Edge) -> AffineMap:
    """Contraction attached to an edge: slope dst/(2 src), shift 0 or 1/(2 src).

    The shift is 1/(2 src) exactly for the 2i-2 edge and the primed
    2i-1 edge, so the four images from vertex i are [0,1], [0,1-1/2i],
    [1/2i,1] and [1/2i,1-1/2i].
    """
    slope = Fraction(edge.dst, 2 * edge.src)
    shifted = edge.dst == 2 * edge.src - 2 or (edge.dst == 2 * edge.src - 1 and edge.prime)
    shift = Fraction(1, 2 * edge.src) if shifted else ZERO
    return AffineMap(slope, shift)


def phi_path(path: Path) -> AffineMap:
    """Composed contraction of a path, first edge outermost.

    The first edge selects the coarse sub-block of the starting space
    and later edges refine within it, matching the graph-directed
    recursions: the map of edge+tail is phi_edge composed after the
    tail's map, and node/wire sets decompose accordingly.
    """
    result = AffineMap.identity()
    for edge in path.edges:
        result = result.after(phi_edge(edge))
    return result


class NodeSet:
    """Stage-n node set of physical space i, sorted ascending.

    For i = 1 the nodes are the dyadics k/2^n; for i > 1 they are
    k/(i 2^n) and their mirror images 1 - k/(i 2^n) for k < 2^n, split
    into a left half below 1/i and a right half above 1 - 1/i.
    """

    __slots__ = ("i", "n", "nodes", "left_size", "_index", "_floats")

    def __init__(self, i: int, n: int, nodes: tuple[Fraction, ...], left_size: int):
        self.i = i
        self.n = n
        self.nodes = nodes
        self.left_size = left_size
        self._index: dict[Fraction, int] | None = None
        self._floats: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.nodes)

    def __contains__(self, x) -> bool:
        return is_node(self.i, self.n, x)

    @property
    def left(self) -> tuple[Fraction, ...]:
        if self.i == 1:
            raise ValueError("left/right split only exists for i > 1")
        return self.nodes[: self.left_size]

    @property
    def right(self) -> tuple[Fraction, ...]:
        if self.i == 1:
            raise ValueError("left/right split only exists for i > 1")
        return self.nodes[self.left_size:]

    def index(self, x: Rational) -> int:
        if self._index is None:
            self._index = {node: k for k, node in enumerate(self.nodes)}
        return self._index[Fraction(x)]

    def floats(self) -> np.ndarray:
        if self._floats is None:
            self._floats = np.array([float(x) for x in self.nodes])
        return self._floats


@lru_cache(maxsize=256)
def node_set(i: int, n: int, cap: int = 2**26) -> NodeSet:
    """Stage-n nodes of space i (2^n + 1 of them for i=1, else 2^(n+1))."""
    if i < 1 or n < 0:
        raise ValueError("need i >= 1 and n >= 0")
    count = 2**n + 1 if i == 1 else 2 ** (n + 1)
    if count > cap:
        raise ResourceCapError(f"{count} nodes exceed the cap of {cap}")
    if i == 1:
        nodes = tuple(Fraction(k, 2**n) for k in range(2**n + 1))
        return NodeSet(i, n, nodes, left_size=len(nodes))
    den = i * 2**n
    left = [Fraction(k, den) for k in range(2**n)]
    right = [ONE - Fraction(k, den) for k in reversed(range(2**n))]
    return NodeSet(i, n, tuple(left + right), left_size=len(left))


def is_node(i: int, n: int, x: Rational) -> bool:
    """Exact membership test for the stage-n node set of space i."""
    x = Fraction(x)
    if x < 0 or x > 1:
        return False
    if i == 1:
        return (x * 2**n).denominator == 1
    den = i * 2**n
    k = x * den
    if k.denominator == 1 and k.numerator < 2**n:
        return True
    k = (ONE - x) * den
    return k.denominator == 1 and k.numerator < 2**n


@dataclass(frozen=True)
class Cell:
    """Half-open (or endpoint-closed) interval attached to a node."""

    lo: Fraction
    hi: Fraction
    include_lo: bool
    include_hi: bool

    def __contains__(self, x) -> bool:
        x = Fraction(x)
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo:
            return self.include_lo
        if x == self.hi:
            return self.include_hi
        return True

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo


class CellMeasure:
    """Per-node cells and masses of the stage-(i,n) discrete measure.

    For i = 1 the cells are centered at the nodes with the two endpoint
    cells halved, so interior masses are 2^-n and the endpoints carry
    2^-(n+1).  For i > 1 the cells use the nodes as endpoints (left
    cells closed on the left, right cells closed on the right) and all
    masses equal 1/(i 2^n).  Total mass is 1 for i = 1 and 2/i else.
    """

    __slots__ = ("i", "n", "nodes", "cells", "_mass_floats")

    def __init__(self, i: int, n: int, nodes: tuple[Fraction, ...], cells: tuple[Cell, ...]):
        self.i = i
        self.n = n
        self.nodes = nodes
        self.cells = cells
        self._mass_floats: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.nodes)

    def cell(self, x: Rational) -> Cell:
        x = Fraction(x)
        for node, cell in zip(self.nodes, self.cells):
            if node == x:
                return cell
        raise KeyError(f"{x} is not a node")

    def mass(self, x: Rational) -> Fraction:
        return self.cell(x).width

    @property
    def masses(self) -> tuple[Fraction, ...]:
        return tuple(c.width for c in self.cells)

    @property
    def total_mass(self) -> Fraction:
        return sum((c.width for c in self.cells), start=ZERO)

    def mass_floats(self) -> np.ndarray:
        if self._mass_floats is None:
            self._mass_floats = np.array([float(c.width) for c in self.cells])
        return self._mass_floats


@lru_cache(maxsize=256)
def cells_and_measure(i: int, n: int) -> CellMeasure:
    """Cells and masses for stage (i, n); see :class:`CellMeasure`."""
    ns = node_set(i, n)
    cells = []
    if i == 1:
        h = Fraction(1, 2 ** (n + 1))
        for node in ns.nodes:
            lo = max(node - h, ZERO)
            hi = min(node + h, ONE)
            # [lo, hi) except at the right endpoint, where the
            # intersection with [0,1] closes the interval at 1.
            cells.append(Cell(lo, hi, include_lo=True, include_hi=(node == ONE)))
    else:
        h = Fraction(1, i * 2**n)
        for node in ns.left:
            cells.append(Cell(node, node + h, include_lo=True, include_hi=False))
        for node in ns.right:
            cells.append(Cell(node - h, node, include_lo=False, include_hi=True))
    return CellMeasure(i, n, ns.nodes, tuple(cells))


def locate(i: int, n: int, x: Rational | float) -> Fraction:
    """Node whose cell contains ``x``, following the bracket types exactly.

    Raises :class:`OutOfDomainError` when no cell contains ``x``: in
    the gap (1/i, 1-1/i) for i > 2, at the excluded point 1/2 for
    i = 2, at the uncovered points 1/i and 1-1/i for i > 2, and
    outside [0,1].
    """
    x = Fraction(x)
    if x < 0 or x > 1:
        raise OutOfDomainError(f"{float(x)} lies outside [0,1]")
    if i == 1:
        # Cell of k/2^n is [k/2^n - h, k/2^n + h) with h = 2^-(n+1),
        # so k = floor(x * 2^n + 1/2); x = 1 belongs to the last cell.
        k = int(x * 2**n + Fraction(1, 2))
        k = min(k, 2**n)
        return Fraction(k, 2**n)
    den = i * 2**n
    if x < Fraction(1, i):
        k = int(x * den)  # cell [k/den, (k+1)/den)
        return Fraction(k, den)
    if x > 1 - Fraction(1, i):
        # Cell of 1 - k/den is (1 - (k+1)/den, 1 - k/den].
        k = int((ONE - x) * den)
        return ONE - Fraction(k, den)
    raise OutOfDomainError(
        f"{float(x)} is not covered by any cell of stage ({i},{n})"
    )


def physical_space(i: int) -> tuple[tuple[Fraction, Fraction], ...]:
    """Closed intervals making up physical space i."""
    if i == 1:
        return ((ZERO, ONE),)
    gap = Fraction(1, i)
    if i == 2:
        return ((ZERO, ONE),)
    return ((ZERO, gap), (ONE - gap, ONE))
