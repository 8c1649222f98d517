"""Discrete Dirichlet forms, averaging operators, and seminorms.

Two summation conventions coexist and differ by an exact factor 2:

* ``"path"``     - one term per wire, sum of (1/delta) (u(y)-u(x))^2;
  this is the form the resistance machinery and the graph-directed
  recursion use.
* ``"ordered"``  - the Dirichlet-form double sum over ordered node
  pairs, j(x,y) (u(x)-u(y))^2 mu(x) mu(y); all continuum comparisons
  (Gagliardo seminorms, the local baseline 2*int |u'|^2, the 2|u(0)-u(1)|^2
  large-index limit) carry this factor and it is the default in the
  convergence experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import NotAWireError
from .functions import ContinuumFunction, PiecewiseConstantFunction
from .geometry import cells_and_measure, node_set, phi_edge
from .index_space import Edge, WeightAssignment, out_edges
from .network import KernelSpec, Network, build_network
from .quadrature import (
    adaptive_interval,
    pc_interaction_sum,
    piecewise_adaptive,
    seminorm_equal_interval,
    seminorm_separated,
    seminorm_touching,
)

CONVENTIONS = ("path", "ordered")


def _convention_factor(convention: str) -> float:
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    return 2.0 if convention == "ordered" else 1.0


@dataclass(frozen=True)
class GridFunction:
    """Real values on the stage-(i, n) nodes, ordered as the node set."""

    i: int
    n: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        expected = len(node_set(self.i, self.n))
        if values.shape != (expected,):
            raise ValueError(
                f"stage ({self.i},{self.n}) needs {expected} values, "
                f"got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "values", values)

    def nodes(self):
        return node_set(self.i, self.n)

    def masses(self) -> np.ndarray:
        return cells_and_measure(self.i, self.n).mass_floats()

    def l2_norm_sq(self) -> float:
        """Squared discrete L2 norm, sum of value^2 * mass."""
        return float(np.sum(self.values**2 * self.masses()))

    def save_csv(self, path) -> None:
        """Rows of exact node label and full-precision value."""
        from .io import fmt17, fraction_str

        with open(path, "w", newline="\n") as handle:
            handle.write(f"# stage i={self.i} n={self.n}\n")
            handle.write("node,value\n")
            for node, value in zip(self.nodes().nodes, self.values):
                handle.write(f"{fraction_str(node)},{fmt17(value)}\n")

    @classmethod
    def load_csv(cls, path) -> "GridFunction":
        from .io import parse_fraction

        with open(path) as handle:
            lines = [ln.strip() for ln in handle if ln.strip()]
        header = lines[0].lstrip("# ").split()
        i = int(header[1].split("=")[1])
        n = int(header[2].split("=")[1])
        stage_nodes = node_set(i, n)
        values = np.empty(len(stage_nodes))
        for line in lines[2:]:
            label, _, text = line.partition(",")
            values[stage_nodes.index(parse_fraction(label))] = float(text)
        return cls(i, n, values)


def energy_record(i: int, n: int, s: float | None, convention: str, value: float) -> dict:
    """JSON-ready record for an energy or moment value."""
    return {
        "i": int(i),
        "n": int(n),
        "s": None if s is None else float(s),
        "convention": convention,
        "value": float(value),
    }


def energy_stage0(values) -> float:
    """Base quadratic form on two endpoint values: (u(1) - u(0))^2."""
    values = np.asarray(values, dtype=float)
    if values.shape != (2,):
        raise ValueError("stage-0 energy takes exactly two values")
    return float((values[1] - values[0]) ** 2)


def discrete_energy(net: Network, u: GridFunction, convention: str = "path") -> float:
    """Quadratic form of the stage network in the requested convention."""
    if (u.i, u.n) != (net.i, net.n):
        raise ValueError(
            f"grid function stage ({u.i},{u.n}) does not match network "
            f"stage ({net.i},{net.n})"
        )
    v = u.values
    diff = v[net.iy] - v[net.ix]
    base = float(np.sum(net.conductance * diff * diff))
    return _convention_factor(convention) * base


def kernel_energy(
    i: int,
    n: int,
    kernel: KernelSpec,
    values: np.ndarray,
    convention: str = "ordered",
) -> float:
    """Streamed kernel-driven energy without materializing a network.

    Row-by-row accumulation in a fixed order keeps the result
    bit-stable regardless of any outer parallelism.
    """
    ns = node_set(i, n)
    cm = cells_and_measure(i, n)
    x = ns.floats()
    mu = cm.mass_floats()
    v = np.asarray(values, dtype=float)
    if v.shape != (len(ns),):
        raise ValueError("values do not match the stage node count")

    total = 0.0
    if i == 1:
        for a in range(len(ns) - 1):
            xs = x[a + 1:]
            j = kernel.evaluate(i, n, x[a], xs)
            diff = v[a + 1:] - v[a]
            total += float(np.sum(j * diff * diff * mu[a + 1:]) * mu[a])
    else:
        L = ns.left_size
        xr = x[L:]
        mur = mu[L:]
        vr = v[L:]
        for a in range(L):
            j = kernel.evaluate(i, n, x[a], xr)
            diff = vr - v[a]
            total += float(np.sum(j * diff * diff * mur) * mu[a])
    return _convention_factor(convention) * total


def kernel_kappa(i: int, n: int, kernel: KernelSpec) -> float:
    """One-sided total kernel mass sum of j(x,y) mu(x) mu(y), i > 1."""
    if i <= 1:
        raise ValueError("the kappa sum is defined for i > 1")
    ns = node_set(i, n)
    cm = cells_and_measure(i, n)
    x = ns.floats()
    mu = cm.mass_floats()
    L = ns.left_size
    total = 0.0
    for a in range(L):
        j = kernel.evaluate(i, n, x[a], x[L:])
        total += float(np.sum(j * mu[L:]) * mu[a])
    return total


# ---------------------------------------------------------------------------
# Graph-directed recursion

@lru_cache(maxsize=512)
def _edge_pullback_indices(i: int, n: int, src: int, dst: int, prime: bool):
    """Indices of phi_e(child nodes) within the stage-(i, n) node set."""
    parent = node_set(i, n)
    child = node_set(dst, n - 1)
    emap = phi_edge(Edge(src, dst, prime=prime))
    return np.array([parent.index(emap(z)) for z in child.nodes], dtype=np.int64)


def gd_recursion_check(i: int, n: int, u: GridFunction, weights: WeightAssignment) -> float:
    """Residual of the one-step graph-directed energy decomposition.

    Compares the stage-n wire-sum energy with the weighted sum of
    stage-(n-1) energies of the three target spaces composed with the
    single-edge contractions; exact up to rounding for every admissible
    weight assignment.
    """
    if n < 1:
        raise ValueError("the recursion needs n >= 1")
    if (u.i, u.n) != (i, n):
        raise ValueError("grid function does not match stage (i, n)")
    lhs = discrete_energy(build_network(i, n, weights), u, "path")
    rhs = 0.0
    for edge in out_edges(i):
        idx = _edge_pullback_indices(i, n, edge.src, edge.dst, edge.prime)
        pulled = GridFunction(edge.dst, n - 1, u.values[idx])
        child_net = build_network(edge.dst, n - 1, weights)
        rhs += discrete_energy(child_net, pulled, "path") / weights.of_edge(edge)
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# Averaging, extension, restriction

def avg(i: int, n: int, f: ContinuumFunction) -> GridFunction:
    """Cell averages of f on the stage-(i, n) cells."""
    cm = cells_and_measure(i, n)
    values = [f.cell_average(cell.lo, cell.hi) for cell in cm.cells]
    return GridFunction(i, n, np.array(values))


def ext(i: int, n: int, u: GridFunction) -> PiecewiseConstantFunction:
    """Piecewise-constant extension: u's value on each node's cell."""
    if (u.i, u.n) != (i, n):
        raise ValueError("grid function does not match stage (i, n)")
    cm = cells_and_measure(i, n)
    lows = [float(c.lo) for c in cm.cells]
    highs = [float(c.hi) for c in cm.cells]
    return PiecewiseConstantFunction(lows, highs, u.values, name=f"ext({i},{n})")


def restrict(i: int, n: int, f: ContinuumFunction) -> GridFunction:
    """Pointwise node values of f."""
    ns = node_set(i, n)
    return GridFunction(i, n, np.array([f.value_at(float(x)) for x in ns.nodes]))


# ---------------------------------------------------------------------------
# Truncated and extended energies

def truncated_energy(
    net: Network, u: GridFunction, cutoff: float, convention: str = "ordered"
) -> float:
    """Energy restricted to wires longer than ``cutoff``.

    Coincides with the full energy at cutoff 0 and vanishes once the
    cutoff exceeds the diameter; never increases with the cutoff.
    """
    if cutoff < 0.0:
        raise ValueError("cutoff must be >= 0")
    if (u.i, u.n) != (net.i, net.n):
        raise ValueError("grid function does not match the network stage")
    x = net.x_float()
    span = np.abs(x[net.iy] - x[net.ix])
    mask = span > cutoff
    v = u.values
    diff = v[net.iy[mask]] - v[net.ix[mask]]
    base = float(np.sum(net.conductance[mask] * diff * diff))
    return _convention_factor(convention) * base


def extended_energy_pc(i: int, n: int, kernel: KernelSpec, u: GridFunction) -> float:
    """Double integral of the extended kernel against the extension of u.

    Both the extended kernel and Ext u are constant on cell pairs, so
    the integral is the finite sum of j * (du)^2 * |cell| * |cell| over
    wires; it reproduces the ordered-convention discrete energy.
    """
    if (u.i, u.n) != (i, n):
        raise ValueError("grid function does not match stage (i, n)")
    ns = node_set(i, n)
    cm = cells_and_measure(i, n)
    x = ns.floats()
    widths = np.array([float(c.hi - c.lo) for c in cm.cells])
    v = u.values
    from .network import wire_pair_indices  # local to avoid import noise

    left_size = ns.left_size if i > 1 else len(ns)
    ix, iy = wire_pair_indices(i, len(ns), left_size)
    j = kernel.evaluate(i, n, x[ix], x[iy])
    diff = v[iy] - v[ix]
    return 2.0 * float(np.sum(j * diff * diff * widths[ix] * widths[iy]))


# ---------------------------------------------------------------------------
# Gagliardo seminorms

def _as_interval(A) -> tuple[float, float]:
    a, b = A
    a, b = float(a), float(b)
    if not a < b:
        raise ValueError(f"degenerate interval {A}")
    return a, b


def gagliardo_seminorm(
    f: ContinuumFunction, s: float, A1, A2, tol: float = 1e-9
) -> float:
    """Squared fractional seminorm of f over A1 x A2.

    Piecewise-constant functions use the exact cell-pair closed form
    (logarithmic branch at s = 1/2); other families go through the
    singular quadrature engines, which need a decaying modulus near the
    diagonal and report divergence otherwise.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0,1)")
    a1, b1 = _as_interval(A1)
    a2, b2 = _as_interval(A2)
    if isinstance(f, PiecewiseConstantFunction):
        lo1, hi1, v1 = f.clipped(a1, b1)
        lo2, hi2, v2 = f.clipped(a2, b2)
        return pc_interaction_sum(lo1, hi1, v1, lo2, hi2, v2, s)
    if (a1, b1) == (a2, b2):
        return seminorm_equal_interval(f, s, a1, b1, tol)
    if b1 <= a2 or b2 <= a1:
        lo, hi = ((a1, b1), (a2, b2)) if b1 <= a2 else ((a2, b2), (a1, b1))
        if lo[1] == hi[0]:
            return seminorm_touching(f, s, lo, hi, tol)
        return seminorm_separated(f, s, lo, hi, tol)
    raise ValueError("partially overlapping intervals are not supported")


# ---------------------------------------------------------------------------
# Kernel moments, sandwich, cutoff constants

def kernel_moment(net: Network, power: int) -> float:
    """Weighted kernel moment of a kernel-driven stage network.

    power = 2 (i = 1): the worst node's sum of j |x-y|^2 mu(y).
    power = 1 (i = 2): the full one-sided sum of j (y-x) mu(x) mu(y).
    """
    if net.kind != "kernel":
        raise ValueError("kernel moments need a kernel-driven network")
    x = net.x_float()
    mu = net.mu_float()
    j = net.jump_values()
    span = np.abs(x[net.iy] - x[net.ix])
    if net.i == 1 and power == 2:
        acc = np.zeros(net.node_count)
        np.add.at(acc, net.ix, j * span**2 * mu[net.iy])
        np.add.at(acc, net.iy, j * span**2 * mu[net.ix])
        return float(acc.max())
    if net.i == 2 and power == 1:
        return float(np.sum(j * span * mu[net.ix] * mu[net.iy]))
    raise ValueError("supported moments: power 2 at i = 1, power 1 at i = 2")


@dataclass(frozen=True)
class SandwichReport:
    ok: bool
    min_ratio: float
    max_ratio: float
    lam: float
    Lam: float


def ellipticity_sandwich(net: Network) -> SandwichReport:
    """Termwise comparability check of a kernel-driven network.

    Every wire's kernel value must sit between lam and Lam times the
    exact fractional weight |x-y|^-(1+2s).
    """
    if net.kind != "kernel":
        raise ValueError("the sandwich check needs a kernel-driven network")
    spec: KernelSpec = net.source
    x = net.x_float()
    span = np.abs(x[net.iy] - x[net.ix])
    ref = span ** (-(1.0 + 2.0 * spec.s))
    ratio = net.jump_values() / ref
    lam, Lam = spec.lam(net.i), spec.Lam(net.i)
    lo = float(ratio.min())
    hi = float(ratio.max())
    return SandwichReport(
        ok=bool(lo >= lam * (1.0 - 1e-12) and hi <= Lam * (1.0 + 1e-12)),
        min_ratio=lo,
        max_ratio=hi,
        lam=lam,
        Lam=Lam,
    )


def kernel_bound_b(i: int, s: float) -> float:
    """Uniform kernel bound (1 - 2/i)^-(1+2s) for the gapped spaces i > 2."""
    if i <= 2:
        raise ValueError("the uniform kernel bound only exists for i > 2")
    return (1.0 - 2.0 / i) ** (-(1.0 + 2.0 * s))


def a_delta(i: int, s: float, Lam: float, cutoff: float) -> float:
    """Truncation constant: the cutoff energy is at most a_delta ||u||^2.

    4 Lam (2/cutoff)^(1+2s) for the singular spaces i = 1, 2;
    4 Lam b_i / i (cutoff-independent) for i > 2.
    """
    if i <= 2:
        if cutoff <= 0.0:
            raise ValueError("the singular spaces need a positive cutoff")
        return 4.0 * Lam * (2.0 / cutoff) ** (1.0 + 2.0 * s)
    return 4.0 * Lam * kernel_bound_b(i, s) / i


def n0_for_cutoff(cutoff: float) -> int:
    """Smallest usable stage for a given truncation cutoff.

    Set to ceil(log2(2/cutoff)) + 1 so that node pairs separated by
    more than the cutoff stay separated by at least half of it.
    """
    if cutoff <= 0.0:
        raise ValueError("cutoff must be positive")
    return int(math.ceil(math.log2(2.0 / cutoff))) + 1


# ---------------------------------------------------------------------------
# L2 pairings

def grid_inner(u: GridFunction, v: GridFunction) -> float:
    """Discrete inner product sum of u v mu."""
    if (u.i, u.n) != (v.i, v.n):
        raise ValueError("stage mismatch")
    return float(np.sum(u.values * v.values * u.masses()))


def continuum_inner(f: ContinuumFunction, u: GridFunction, tol: float = 1e-12) -> float:
    """L2 pairing of f with Ext u: sum of u * integral of f per cell."""
    cm = cells_and_measure(u.i, u.n)
    total = 0.0
    for value, cell in zip(u.values, cm.cells):
        total += value * f.cell_average(cell.lo, cell.hi, tol) * float(cell.width)
    return total


def l2_distance_sq(f: ContinuumFunction, u: GridFunction, tol: float = 1e-11) -> float:
    """Squared L2 distance between f and the extension of u."""
    cm = cells_and_measure(u.i, u.n)
    total = 0.0
    for value, cell in zip(u.values, cm.cells):
        def gap_sq(x, value=value):
            return (f(x) - value) ** 2

        total += piecewise_adaptive(
            gap_sq, float(cell.lo), float(cell.hi), f.breakpoints, tol
        )
    return total
