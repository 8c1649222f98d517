"""Electrical networks on the dyadic node sets.

A stage-(i, n) network wires every node pair for i = 1 (complete
graph) and every left/right pair for i > 1 (complete bipartite).  Each
wire corresponds to a unique admissible path in the index graph; its
resistance is either the product of edge weights along that path
(weight-driven) or the inverse of kernel * mass * mass (kernel-driven).

Resistance machinery (Laplacians, effective resistance, star-mesh
reduction, Nash-Williams bounds) works with the wire-sum form of the
energy: conductances 1/delta on unordered wires.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Union

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import (
    DisconnectedNetworkError,
    KernelBoundError,
    NotAWireError,
    ResourceCapError,
)
from .geometry import CellMeasure, NodeSet, cells_and_measure, is_node, node_set, phi_edge
from .index_space import (
    Edge,
    Path,
    STEP_DOWN,
    STEP_MID,
    STEP_MID_PRIME,
    STEP_UP,
    WeightAssignment,
    path_count,
)

#: Node cap for dense Laplacian solves.
SOLVER_NODE_CAP = 4100

#: Wire cap for materialized network builds.
DEFAULT_MAX_WIRES = 2**22


# ---------------------------------------------------------------------------
# Matching condition machinery (stage 0 <-> stage 1 electrical equivalence)

def series_parallel_stage1(alpha: float, beta: float, gamma: float) -> float:
    """Reduced resistance (alpha + 2 beta) gamma / (alpha + 2 beta + gamma).

    This is the series/parallel reduction of a stage-1 network with
    inner-chain resistances alpha, beta, beta and a direct wire gamma;
    alpha = 0 encodes the three-node case.  The stage-1 network is
    electrically equivalent to the stage-0 unit wire iff the value is 1.
    """
    if alpha < 0 or beta <= 0 or gamma <= 0:
        raise ValueError("need alpha >= 0 and beta, gamma > 0")
    chain = alpha + 2.0 * beta
    return chain * gamma / (chain + gamma)


def solve_matching(xi: float) -> float:
    """Unique gamma > 1 with xi*gamma/(xi+gamma) = 1, for xi > 1.

    For xi <= 1 there is no positive solution (the degenerate local
    case xi = 1 forces gamma = +inf), which is reported as an error.
    """
    if not xi > 1.0:
        raise ValueError(f"no positive matching solution for xi = {xi} <= 1")
    return xi / (xi - 1.0)


def matching_weights(alpha: float, beta: float) -> WeightAssignment:
    """Weight family with the stage-0/1 matching satisfied at every vertex.

    r(i, 2i-2) = alpha (that edge only exists for i >= 2; the vertex-1
    chain is alpha-free), r(i, 2i-1) = beta, and r(i, 2i) solves the
    matching condition for the resulting chain.
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError("need alpha > 0 and beta > 0")

    def rule(i: int, j: int) -> float:
        if j == 2 * i - 2 and i >= 2:
            return alpha
        if j == 2 * i - 1:
            return beta
        if j == 2 * i:
            xi = (alpha if i > 1 else 0.0) + 2.0 * beta
            return solve_matching(xi)
        raise KeyError(f"no edge ({i},{j})")

    return WeightAssignment(rule=rule, name=f"matching(alpha={alpha},beta={beta})")


# ---------------------------------------------------------------------------
# Jump kernel families

@dataclass(frozen=True)
class KernelSpec:
    """Jump kernel family with fractional comparability constants.

    ``family(i, n, x, y)`` evaluates the kernel on (arrays of) node
    coordinates; the comparability constants lam(i), Lam(i) must
    sandwich it between multiples of |x-y|^-(1+2s) on every wire, which
    the network builder checks rather than assumes.
    """

    s: float
    family: Callable[[int, int, np.ndarray, np.ndarray], np.ndarray]
    lam: Callable[[int], float]
    Lam: Callable[[int], float]
    name: str = "custom"

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0,1), got {self.s}")

    def evaluate(self, i: int, n: int, x, y):
        return self.family(i, n, np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    @staticmethod
    def _scale_rule(scale) -> tuple[Callable[[int], float], str]:
        if scale == "one":
            return (lambda i: 1.0), "one"
        if scale == "isq":
            return (lambda i: float(i) ** 2), "isq"
        value = float(scale)
        return (lambda i: value), repr(value)

    @classmethod
    def fractional(cls, s: float, scale="one") -> "KernelSpec":
        """Exact kernel scale(i) * |x-y|^-(1+2s), so lam = Lam = scale."""
        rule, label = cls._scale_rule(scale)

        def family(i, n, x, y):
            return rule(i) * np.abs(x - y) ** (-(1.0 + 2.0 * s))

        return cls(s=s, family=family, lam=rule, Lam=rule,
                   name=f"frac(s={s},scale={label})")

    @classmethod
    def perturbed_fractional(
        cls, s: float, amplitude: float = 0.5, frequency: float = 7.0, scale="one"
    ) -> "KernelSpec":
        """Kernel scale(i) (1 + amplitude sin(freq (x+y))) |x-y|^-(1+2s)."""
        if not 0.0 <= amplitude < 1.0:
            raise ValueError("amplitude must lie in [0,1)")
        rule, label = cls._scale_rule(scale)

        def family(i, n, x, y):
            osc = 1.0 + amplitude * np.sin(frequency * (x + y))
            return rule(i) * osc * np.abs(x - y) ** (-(1.0 + 2.0 * s))

        return cls(
            s=s,
            family=family,
            lam=lambda i: rule(i) * (1.0 - amplitude),
            Lam=lambda i: rule(i) * (1.0 + amplitude),
            name=f"perturbed(s={s},amp={amplitude},freq={frequency},scale={label})",
        )


# ---------------------------------------------------------------------------
# Wire combinatorics

def wire_pair_indices(i: int, node_count: int, left_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Canonical (ix, iy) node-index arrays of the stage wire set."""
    if i == 1:
        ix, iy = np.triu_indices(node_count, k=1)
        return ix.astype(np.int64), iy.astype(np.int64)
    left = np.arange(left_size, dtype=np.int64)
    right = np.arange(left_size, node_count, dtype=np.int64)
    ix = np.repeat(left, right.size)
    iy = np.tile(right, left.size)
    return ix, iy


def _wire_slot(i: int, node_count: int, left_size: int, a: int, b: int) -> int:
    """Position of the wire (a, b), a < b, in the canonical order."""
    if i == 1:
        return a * (2 * node_count - a - 1) // 2 + (b - a - 1)
    return a * (node_count - left_size) + (b - left_size)


class _WireStructure:
    """Weight-independent wire data of a stage network.

    Holds the canonical pair arrays, the per-wire path codes, and a
    sparse wire-by-edge multiplicity matrix so that resistances for any
    weight assignment come from one sparse mat-vec in log space.
    """

    def __init__(self, i: int, n: int, ns: NodeSet, ix, iy, codes, edge_keys, incidence):
        self.i = i
        self.n = n
        self.ns = ns
        self.ix = ix
        self.iy = iy
        self.codes = codes
        self.edge_keys = edge_keys
        self.incidence = incidence

    def deltas(self, weights: WeightAssignment) -> np.ndarray:
        log_r = np.array([np.log(weights.of(a, b)) for a, b in self.edge_keys])
        return np.exp(self.incidence @ log_r)


def _cache_dir():
    import os

    path = os.environ.get("NEL_CACHE_DIR")
    return None if not path else path


def _load_cached_structure(i: int, n: int):
    directory = _cache_dir()
    if directory is None:
        return None
    import os

    path = os.path.join(directory, f"wires_{i}_{n}.npz")
    if not os.path.exists(path):
        return None
    data = np.load(path)
    ns = node_set(i, n)
    edge_keys = [tuple(row) for row in data["edge_keys"]]
    incidence = scipy.sparse.csr_matrix(
        (data["inc_data"], data["inc_indices"], data["inc_indptr"]),
        shape=(len(data["ix"]), len(edge_keys)),
    )
    return _WireStructure(
        i, n, ns, data["ix"], data["iy"], data["codes"], edge_keys, incidence
    )


def _store_cached_structure(structure: _WireStructure) -> None:
    directory = _cache_dir()
    if directory is None:
        return
    import os

    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, f"wires_{structure.i}_{structure.n}.npz")
    inc = structure.incidence
    np.savez(
        path,
        ix=structure.ix,
        iy=structure.iy,
        codes=structure.codes,
        edge_keys=np.array(structure.edge_keys, dtype=np.int64),
        inc_data=inc.data,
        inc_indices=inc.indices,
        inc_indptr=inc.indptr,
    )


@lru_cache(maxsize=64)
def _wire_structure(i: int, n: int, max_wires: int = DEFAULT_MAX_WIRES) -> _WireStructure:
    count = path_count(i, n)
    if count > max_wires:
        raise ResourceCapError(
            f"stage ({i},{n}) has {count} wires, above the cap of {max_wires}"
        )
    cached = _load_cached_structure(i, n)
    if cached is not None:
        return cached
    ns = node_set(i, n)
    node_count = len(ns)
    left_size = ns.left_size if i > 1 else node_count
    ix, iy = wire_pair_indices(i, node_count, left_size)
    codes = np.full(count, b"", dtype=f"S{max(n, 1)}")
    filled = np.zeros(count, dtype=bool)

    edge_ids: dict[tuple[int, int], int] = {}
    rows: list[int] = []
    cols: list[int] = []

    index_of = {x: k for k, x in enumerate(ns.nodes)}

    # Depth-first walk sharing prefix maps: stack entries carry the
    # current vertex, accumulated step codes, the composed map (slope,
    # shift) with the first edge outermost, and the edge-id trail.
    one = Fraction(1)
    zero = Fraction(0)
    stack = [(i, "", one, zero, ())]
    while stack:
        vertex, trail, slope, shift, ids = stack.pop()
        depth = len(trail)
        if depth == n:
            a = index_of[shift]
            b = index_of[shift + slope]
            slot = _wire_slot(i, node_count, left_size, a, b)
            if filled[slot]:
                raise AssertionError(
                    f"two paths map onto the wire slot {slot} at stage ({i},{n})"
                )
            filled[slot] = True
            codes[slot] = trail.encode()
            for eid in ids:
                rows.append(slot)
                cols.append(eid)
            continue
        steps = [STEP_UP, STEP_MID, STEP_MID_PRIME]
        if vertex >= 2:
            steps.append(STEP_DOWN)
        for code in steps:
            prime = code == STEP_MID_PRIME
            if code == STEP_DOWN:
                target = 2 * vertex - 2
            elif code == STEP_UP:
                target = 2 * vertex
            else:
                target = 2 * vertex - 1
            key = (vertex, target)
            eid = edge_ids.setdefault(key, len(edge_ids))
            emap = phi_edge(Edge(vertex, target, prime=prime))
            # first edge outermost: new = old_composed o phi_edge
            new_slope = slope * emap.slope
            new_shift = slope * emap.shift + shift
            stack.append((target, trail + code, new_slope, new_shift, ids + (eid,)))

    if not filled.all():
        raise AssertionError(f"wire slots left unfilled at stage ({i},{n})")
    edge_keys = [None] * len(edge_ids)
    for key, eid in edge_ids.items():
        edge_keys[eid] = key
    incidence = scipy.sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(count, len(edge_ids))
    )
    structure = _WireStructure(i, n, ns, ix, iy, codes, edge_keys, incidence)
    _store_cached_structure(structure)
    return structure


# ---------------------------------------------------------------------------
# Wire type and the stage network

@dataclass(frozen=True)
class Wire:
    """Oriented wire x < y with its index path and resistance."""

    x: Fraction
    y: Fraction
    delta: float
    path: Path

    @property
    def conductance(self) -> float:
        return 1.0 / self.delta


Source = Union[WeightAssignment, KernelSpec]


class Network:
    """Stage-(i, n) electrical network; immutable after construction."""

    def __init__(self, i, n, ns, cm, ix, iy, delta, codes, kind, source):
        self.i = i
        self.n = n
        self.node_set: NodeSet = ns
        self.measure: CellMeasure = cm
        self.ix = ix
        self.iy = iy
        self.delta = delta
        self.codes = codes
        self.kind = kind
        self.source = source
        self._conductance = None
        self._jump = None

    # -- basic queries ------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self.node_set)

    @property
    def wire_count(self) -> int:
        return len(self.delta)

    def pair_count(self, ordered: bool = False) -> int:
        """Wire count; doubled under the ordered-pair convention."""
        return 2 * self.wire_count if ordered else self.wire_count

    @property
    def nodes(self) -> tuple[Fraction, ...]:
        return self.node_set.nodes

    def x_float(self) -> np.ndarray:
        return self.node_set.floats()

    def mu_float(self) -> np.ndarray:
        return self.measure.mass_floats()

    @property
    def conductance(self) -> np.ndarray:
        if self._conductance is None:
            self._conductance = 1.0 / self.delta
        return self._conductance

    def jump_values(self) -> np.ndarray:
        """Kernel values on the wires: 1 / (delta * mu(x) * mu(y))."""
        if self._jump is None:
            mu = self.mu_float()
            self._jump = 1.0 / (self.delta * mu[self.ix] * mu[self.iy])
        return self._jump

    def wire_index(self, x, y) -> int:
        x, y = Fraction(x), Fraction(y)
        if x > y:
            x, y = y, x
        try:
            a = self.node_set.index(x)
            b = self.node_set.index(y)
        except KeyError:
            raise NotAWireError(f"({x},{y}) endpoints are not both nodes")
        if a == b:
            raise NotAWireError("a wire needs two distinct nodes")
        left_size = self.node_set.left_size
        if self.i > 1 and not (a < left_size <= b):
            raise NotAWireError(f"({x},{y}) are on the same side; not a wire")
        return _wire_slot(self.i, self.node_count, left_size, a, b)

    def is_wire(self, x, y) -> bool:
        try:
            self.wire_index(x, y)
            return True
        except NotAWireError:
            return False

    def wire(self, k: int) -> Wire:
        x = self.nodes[self.ix[k]]
        y = self.nodes[self.iy[k]]
        if self.codes is not None:
            path = Path(self.i, self.codes[k].decode())
        else:
            path = wire_to_path(self.i, self.n, x, y)
        return Wire(x=x, y=y, delta=float(self.delta[k]), path=path)

    def wires(self) -> Iterator[Wire]:
        for k in range(self.wire_count):
            yield self.wire(k)

    def weighted_degree(self, x) -> float:
        idx = self.node_set.index(Fraction(x))
        mask = (self.ix == idx) | (self.iy == idx)
        return float(np.sum(self.conductance[mask]))

    # -- linear algebra -----------------------------------------------

    def laplacian(self, node_cap: int = SOLVER_NODE_CAP) -> np.ndarray:
        if self.node_count > node_cap:
            raise ResourceCapError(
                f"{self.node_count} nodes exceed the dense-solver cap {node_cap}"
            )
        N = self.node_count
        L = np.zeros((N, N))
        c = self.conductance
        np.add.at(L, (self.ix, self.iy), -c)
        np.add.at(L, (self.iy, self.ix), -c)
        diag = np.zeros(N)
        np.add.at(diag, self.ix, c)
        np.add.at(diag, self.iy, c)
        L[np.diag_indices(N)] = diag
        return L

    def conductance_network(self) -> "ConductanceNetwork":
        C = np.zeros((self.node_count, self.node_count))
        C[self.ix, self.iy] = self.conductance
        C[self.iy, self.ix] = self.conductance
        return ConductanceNetwork(self.nodes, C)

    # -- serialization ------------------------------------------------

    def to_json_dict(self) -> dict:
        wires = []
        for k in range(self.wire_count):
            x = self.nodes[self.ix[k]]
            y = self.nodes[self.iy[k]]
            entry = {
                "x": f"{x.numerator}/{x.denominator}",
                "y": f"{y.numerator}/{y.denominator}",
                "delta": float(self.delta[k]),
            }
            if self.codes is not None:
                entry["path"] = self.codes[k].decode()
            else:
                entry["path"] = wire_to_path(self.i, self.n, x, y).codes
            wires.append(entry)
        return {
            "i": self.i,
            "n": self.n,
            "kind": self.kind,
            "nodes": [f"{x.numerator}/{x.denominator}" for x in self.nodes],
            "wires": wires,
        }

    def save_json(self, path) -> None:
        with open(path, "w") as handle:
            json.dump(self.to_json_dict(), handle, indent=1)


def _parse_fraction(text: str) -> Fraction:
    num, _, den = text.partition("/")
    return Fraction(int(num), int(den)) if den else Fraction(int(num))


def load_network_json(path) -> Network:
    with open(path) as handle:
        data = json.load(handle)
    i, n = int(data["i"]), int(data["n"])
    ns = node_set(i, n)
    cm = cells_and_measure(i, n)
    expected = [f"{x.numerator}/{x.denominator}" for x in ns.nodes]
    if data["nodes"] != expected:
        raise ValueError("node list does not match the stage (i, n) node set")
    count = path_count(i, n)
    if len(data["wires"]) != count:
        raise ValueError("wire list does not match the stage wire count")
    node_count = len(ns)
    left_size = ns.left_size if i > 1 else node_count
    ix, iy = wire_pair_indices(i, node_count, left_size)
    delta = np.empty(count)
    codes = np.full(count, b"", dtype=f"S{max(n, 1)}")
    for entry in data["wires"]:
        a = ns.index(_parse_fraction(entry["x"]))
        b = ns.index(_parse_fraction(entry["y"]))
        slot = _wire_slot(i, node_count, left_size, a, b)
        delta[slot] = float(entry["delta"])
        codes[slot] = entry["path"].encode()
    return Network(i, n, ns, cm, ix, iy, delta, codes, data.get("kind", "imported"), None)


def build_network(
    i: int,
    n: int,
    source: Source,
    *,
    max_wires: int = DEFAULT_MAX_WIRES,
    kernel_bound_rtol: float = 1e-12,
) -> Network:
    """Construct the stage-(i, n) network from weights or a jump kernel.

    Weight-driven resistances are the edge-weight products along each
    wire's path; kernel-driven resistances invert the jump-kernel
    definition, delta = 1/(j(x,y) mu(x) mu(y)).  Kernel positivity and
    the comparability bounds are verified on every wire.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if isinstance(source, WeightAssignment):
        structure = _wire_structure(i, n, max_wires)
        delta = structure.deltas(source)
        return Network(
            i, n, structure.ns, cells_and_measure(i, n),
            structure.ix, structure.iy, delta, structure.codes, "weights", source,
        )
    if isinstance(source, KernelSpec):
        count = path_count(i, n)
        if count > max_wires:
            raise ResourceCapError(
                f"stage ({i},{n}) has {count} wires, above the cap of {max_wires}"
            )
        ns = node_set(i, n)
        cm = cells_and_measure(i, n)
        node_count = len(ns)
        left_size = ns.left_size if i > 1 else node_count
        ix, iy = wire_pair_indices(i, node_count, left_size)
        x = ns.floats()
        mu = cm.mass_floats()
        j = source.evaluate(i, n, x[ix], x[iy])
        if not np.all(j > 0.0):
            raise KernelBoundError("kernel is nonpositive on some wire")
        gap = np.abs(x[ix] - x[iy]) ** (-(1.0 + 2.0 * source.s))
        lam, Lam = source.lam(i), source.Lam(i)
        lo_ok = np.all(j >= lam * gap * (1.0 - kernel_bound_rtol))
        hi_ok = np.all(j <= Lam * gap * (1.0 + kernel_bound_rtol))
        if not (lo_ok and hi_ok):
            raise KernelBoundError(
                f"kernel violates its comparability bounds at stage ({i},{n})"
            )
        delta = 1.0 / (j * mu[ix] * mu[iy])
        return Network(i, n, ns, cm, ix, iy, delta, None, "kernel", source)
    raise TypeError(f"unsupported source type {type(source).__name__}")


# ---------------------------------------------------------------------------
# Wire -> path reconstruction

def _is_node_scaled(i: int, m: int, a: int, n: int) -> bool:
    """Is a/(i 2^n) a stage-m node?  Pure integer arithmetic."""
    shift = n - m
    if i == 1:
        return a % (1 << shift) == 0
    block = 1 << shift
    if a % block == 0 and a // block < (1 << m):
        return True
    b = i * (1 << n) - a  # mirrored coordinate
    return b % block == 0 and b // block < (1 << m)


def wire_to_path(i: int, n: int, x, y) -> Path:
    """Unique path labelling the wire {x, y} of the stage-(i, n) network.

    The terminal vertex is 2^n i |x - y| and the last edge follows the
    four-way rule: for odd terminal j the edge leaves (j+1)/2, primed
    exactly when the lower endpoint is not a stage-(n-1) node; for even
    j it leaves j/2 + 1 (the 2i-2 edge) when the lower endpoint is not
    a stage-(n-1) node and j/2 (the 2i edge) when it is.  Stripping the
    last edge maps the wire onto a stage-(n-1) wire, and the rule
    iterates down to the stage-0 wire {0, 1}.

    Internally the endpoints are integer numerators over the common
    denominator i 2^n, which keeps the whole reduction in exact machine
    arithmetic.
    """
    x, y = Fraction(x), Fraction(y)
    if x > y:
        x, y = y, x
    if x == y or not (is_node(i, n, x) and is_node(i, n, y)):
        raise NotAWireError(f"({x},{y}) is not a wire of stage ({i},{n})")
    if i > 1:
        gap = Fraction(1, i)
        if not (x < gap and y > 1 - gap):
            raise NotAWireError(f"({x},{y}) are on the same side; not a wire")

    denom = i * (1 << n)
    a = int(x * denom)
    span = int((y - x) * denom)

    codes: list[str] = []
    for m in range(n, 0, -1):
        block = 1 << (n - m)
        if span % block != 0:
            raise NotAWireError(f"wire span is not a stage-{m} multiple")
        j = span // block
        lower_is_older = _is_node_scaled(i, m - 1, a, n)
        if j % 2 == 1:
            src = (j + 1) // 2
            prime = not lower_is_older
            code = STEP_MID_PRIME if prime else STEP_MID
        elif lower_is_older:
            src = j // 2
            code = STEP_UP
        else:
            src = (j + 2) // 2
            code = STEP_DOWN
        codes.append(code)
        # Strip the last edge: the remaining path has span scaled by
        # 2 src / j, and shifted edges pull the left endpoint back by
        # exactly one stage-m block.
        if code in (STEP_DOWN, STEP_MID_PRIME):
            a -= block
        span = span * 2 * src // j
    if a != 0 or span != denom:
        raise NotAWireError("wire does not reduce to the stage-0 wire {0,1}")

    # codes were collected last edge first; the path object stores the
    # first-to-last order and revalidates the vertex chain.
    return Path(i, "".join(reversed(codes)))


def jump_kernel(net: Network):
    """Symmetric jump-kernel table of a built network (0 off the wires)."""
    return JumpKernelTable(net)


class JumpKernelTable:
    def __init__(self, net: Network):
        self.net = net
        self.wire_values = net.jump_values()

    def value(self, x, y) -> float:
        try:
            k = self.net.wire_index(x, y)
        except NotAWireError:
            return 0.0
        return float(self.wire_values[k])


def weighted_degree(net: Network, x) -> float:
    """Sum of conductances of the wires incident to node x."""
    return net.weighted_degree(x)


def graph_laplacian(net: Network, node_cap: int = SOLVER_NODE_CAP) -> np.ndarray:
    """Dense Laplacian: weighted degrees on the diagonal, -c off it."""
    return net.laplacian(node_cap)


# ---------------------------------------------------------------------------
# General conductance networks and reductions

class ConductanceNetwork:
    """Plain network: node labels and a symmetric conductance matrix."""

    def __init__(self, labels, C: np.ndarray):
        self.labels = tuple(labels)
        C = np.asarray(C, dtype=float)
        if C.shape != (len(self.labels), len(self.labels)):
            raise ValueError("conductance matrix shape does not match labels")
        if not np.allclose(C, C.T):
            raise ValueError("conductance matrix must be symmetric")
        self.C = C
        self._index = {label: k for k, label in enumerate(self.labels)}

    @classmethod
    def from_edges(cls, edges, labels=None) -> "ConductanceNetwork":
        """Build from (a, b, conductance) triples."""
        edges = list(edges)
        if labels is None:
            seen = []
            for a, b, _ in edges:
                for lab in (a, b):
                    if lab not in seen:
                        seen.append(lab)
            try:
                labels = sorted(seen)
            except TypeError:
                labels = seen  # mixed label types keep first-seen order
        index = {label: k for k, label in enumerate(labels)}
        C = np.zeros((len(labels), len(labels)))
        for a, b, c in edges:
            if a == b:
                raise ValueError("self-loops are not allowed")
            C[index[a], index[b]] += c
            C[index[b], index[a]] += c
        return cls(labels, C)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        return self._index[label]

    def degree(self, label) -> float:
        return float(self.C[self.index(label)].sum())

    def conductance(self, a, b) -> float:
        return float(self.C[self.index(a), self.index(b)])

    def laplacian(self) -> np.ndarray:
        return np.diag(self.C.sum(axis=1)) - self.C

    def is_connected(self) -> bool:
        n = len(self)
        if n <= 1:
            return True
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            a = stack.pop()
            for b in np.nonzero(self.C[a] > 0.0)[0]:
                if not seen[b]:
                    seen[b] = True
                    stack.append(int(b))
        return bool(seen.all())

    def to_csv(self, path) -> None:
        with open(path, "w") as handle:
            handle.write("x,y,conductance\n")
            n = len(self)
            for a in range(n):
                for b in range(a + 1, n):
                    if self.C[a, b] > 0.0:
                        handle.write(
                            f"{self.labels[a]},{self.labels[b]},"
                            f"{format(self.C[a, b], '.17g')}\n"
                        )

    @classmethod
    def from_csv(cls, path) -> "ConductanceNetwork":
        """Load an edge-list CSV written by :meth:`to_csv`.

        Labels come back as strings; they must not contain commas.
        """
        edges = []
        with open(path) as handle:
            header = handle.readline().strip()
            if header != "x,y,conductance":
                raise ValueError(f"unexpected header {header!r}")
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 3:
                    raise ValueError(f"bad edge row {line!r}")
                edges.append((parts[0], parts[1], float(parts[2])))
        return cls.from_edges(edges)


def _as_conductance_network(net) -> ConductanceNetwork:
    if isinstance(net, ConductanceNetwork):
        return net
    return net.conductance_network()


def _grounded_inverse(L: np.ndarray, ground: int) -> np.ndarray:
    """Inverse of the Laplacian with one row/column removed (SPD solve)."""
    keep = [k for k in range(L.shape[0]) if k != ground]
    reduced = L[np.ix_(keep, keep)]
    try:
        factor = scipy.linalg.cho_factor(reduced)
        inv = scipy.linalg.cho_solve(factor, np.eye(len(keep)))
    except scipy.linalg.LinAlgError as exc:
        raise DisconnectedNetworkError(
            "grounded Laplacian is singular; network is disconnected"
        ) from exc
    return inv


def _resistance_matrix(L: np.ndarray) -> np.ndarray:
    """All-pairs effective resistance from one grounded factorization."""
    n = L.shape[0]
    inv = _grounded_inverse(L, ground=0)
    R = np.zeros((n, n))
    diag = np.diag(inv)
    R[1:, 1:] = diag[:, None] + diag[None, :] - 2.0 * inv
    R[0, 1:] = diag
    R[1:, 0] = diag
    return R


def effective_resistance(net, x, y) -> float:
    """Effective resistance between two nodes via a grounded SPD solve.

    Grounds y (deletes its row and column), solves the reduced system
    for a unit current injected at x, and reads off the potential gap;
    this equals the variational definition sup |u(x)-u(y)|^2 / E(u)
    over the wire-sum energy.
    """
    cn = _as_conductance_network(net)
    a, b = cn.index(x), cn.index(y)
    if a == b:
        raise ValueError("effective resistance needs two distinct nodes")
    L = cn.laplacian()
    keep = [k for k in range(len(cn)) if k != b]
    reduced = L[np.ix_(keep, keep)]
    rhs = np.zeros(len(keep))
    rhs[keep.index(a)] = 1.0
    try:
        factor = scipy.linalg.cho_factor(reduced)
        potential = scipy.linalg.cho_solve(factor, rhs)
    except scipy.linalg.LinAlgError as exc:
        raise DisconnectedNetworkError(
            "grounded Laplacian is singular; network is disconnected"
        ) from exc
    return float(potential[keep.index(a)])


def all_pairs_resistance(net) -> np.ndarray:
    """Matrix of effective resistances, indexed like the node list."""
    cn = _as_conductance_network(net)
    return _resistance_matrix(cn.laplacian())


def star_mesh_eliminate(net, x0) -> ConductanceNetwork:
    """Remove node x0, rewiring its neighbors so resistances survive.

    Every remaining pair gains conductance c(x,x0) c(x0,y) / c(x0) on
    top of any direct wire; effective resistances among the surviving
    nodes are preserved exactly.
    """
    cn = _as_conductance_network(net)
    k = cn.index(x0)
    col = cn.C[:, k]
    deg = col.sum()
    if deg <= 0.0:
        raise ValueError(f"cannot eliminate isolated node {x0}")
    keep = [j for j in range(len(cn)) if j != k]
    C = cn.C[np.ix_(keep, keep)] + np.outer(col[keep], col[keep]) / deg
    np.fill_diagonal(C, 0.0)
    return ConductanceNetwork([cn.labels[j] for j in keep], C)


def reduce_to_pair(net, x, y) -> float:
    """Resistance between x and y by full star-mesh elimination."""
    cn = _as_conductance_network(net)
    while len(cn) > 2:
        victim = next(lab for lab in cn.labels if lab not in (x, y))
        cn = star_mesh_eliminate(cn, victim)
    c = cn.conductance(x, y)
    if c <= 0.0:
        raise DisconnectedNetworkError(f"nodes {x} and {y} are not connected")
    return 1.0 / c


def equivalence_residual(net_n: Network, net_prev: Network) -> float:
    """Max deviation of effective resistances on the coarser node set.

    Zero (to solver tolerance) exactly when the two stages are
    electrically equivalent; this is the numeric stand-in for solving
    the stage compatibility equations symbolically.
    """
    coarse = net_prev.nodes
    fine_index = []
    for x in coarse:
        try:
            fine_index.append(net_n.node_set.index(x))
        except KeyError:
            raise ValueError("node nesting violated: coarse node missing")
    R_fine = all_pairs_resistance(net_n)[np.ix_(fine_index, fine_index)]
    R_coarse = all_pairs_resistance(net_prev)
    return float(np.max(np.abs(R_fine - R_coarse)))


def nash_williams_bound(net: Network, x, y) -> float:
    """Edge-cut lower bound 1/min(deg(x), deg(y)) for a wire {x, y}."""
    if not net.is_wire(x, y):
        raise NotAWireError(f"({x},{y}) is not a wire")
    return 1.0 / min(net.weighted_degree(x), net.weighted_degree(y))


def random_connected_network(
    rng: np.random.Generator,
    n_nodes: int,
    edge_prob: float = 0.35,
    conductance_range: tuple[float, float] = (0.5, 2.0),
) -> ConductanceNetwork:
    """Random connected conductance network on integer labels."""
    lo, hi = conductance_range
    while True:
        C = np.zeros((n_nodes, n_nodes))
        iu = np.triu_indices(n_nodes, k=1)
        mask = rng.random(iu[0].size) < edge_prob
        values = rng.uniform(lo, hi, size=iu[0].size) * mask
        C[iu] = values
        C += C.T
        cn = ConductanceNetwork(range(n_nodes), C)
        if cn.is_connected():
            return cn
