"""Experiment drivers for the convergence and bound suites.

Each driver runs a parameter grid (stages n or space indices i),
records the raw sequence, extrapolates a limit (Aitken on the last
three points, reported alongside and never replacing the raw data),
and judges pass/fail against an analytic or quadrature target at the
configured tolerance.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np

from .energy import (
    GridFunction,
    avg,
    discrete_energy,
    ext,
    kernel_energy,
    kernel_kappa,
    l2_distance_sq,
    restrict,
)
from .errors import ConfigError
from .functions import ContinuumFunction, by_name
from .geometry import node_set
from .io import fmt17
from .network import (
    KernelSpec,
    Network,
    all_pairs_resistance,
    build_network,
    equivalence_residual,
    wire_pair_indices,
)
from .quadrature import adaptive_rect, rect_power_integral
from . import energy as energy_mod


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat configuration shared by all experiment drivers."""

    i: int = 1
    s: float = 0.25
    n_values: tuple[int, ...] = tuple(range(0, 11))
    i_values: tuple[int, ...] = (10, 100, 1000)
    n: int = 3
    function: str = "linear"
    kernel: str = "frac"
    scale: str = "one"
    convention: str = "ordered"
    tol: float = 2e-2
    l2_tol: float = 1e-2
    quad_tol: float = 1e-9
    decreasing_from: int = 5
    r: float = 0.5
    trials: int = 100
    seed: int = 1234
    threads: int = 1

    def kernel_spec(self) -> KernelSpec:
        if self.kernel == "frac":
            return KernelSpec.fractional(self.s, self.scale)
        if self.kernel == "perturbed":
            return KernelSpec.perturbed_fractional(self.s, scale=self.scale)
        raise ConfigError(f"unknown kernel family {self.kernel!r}")

    def function_spec(self) -> ContinuumFunction:
        try:
            return by_name(self.function)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class ConvergenceReport:
    """Raw grid data plus the verdict of one experiment."""

    experiment: str
    grid: tuple
    values: tuple
    target: float | None
    target_source: str
    extrapolated: float | None
    tol: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = asdict(self)
        out["grid"] = list(self.grid)
        out["values"] = [float(v) for v in self.values]
        return out

    def csv_rows(self) -> list[list]:
        target = self.target if self.target is not None else float("nan")
        return [
            [g, float(v), float(target), int(self.passed)]
            for g, v in zip(self.grid, self.values)
        ]

    def gnuplot_pairs(self):
        return [(float(g), float(v)) for g, v in zip(self.grid, self.values)]


def aitken(values: Sequence[float]) -> float | None:
    """Aitken delta-squared extrapolation of the last three points."""
    if len(values) < 3:
        return None
    a, b, c = values[-3], values[-2], values[-1]
    denom = (c - b) - (b - a)
    if abs(denom) < 1e-300:
        return float(c)
    return float(c - (c - b) ** 2 / denom)


def parallel_map(fn: Callable, items: Sequence, threads: int) -> list:
    """Order-preserving map; results do not depend on the thread count."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _scale_value(scale, i: int) -> float:
    if scale == "one":
        return 1.0
    if scale == "isq":
        return float(i) ** 2
    return float(scale)


def _linear_seminorm_sq(s: float, A1, A2) -> float:
    """Closed-form squared seminorm of f(x) = x."""
    (a1, b1), (a2, b2) = A1, A2
    if (a1, b1) == (a2, b2):
        width = b1 - a1
        return 2.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s)) * width ** (3.0 - 2.0 * s)
    lo, hi = ((a1, b1), (a2, b2)) if b1 <= a2 else ((a2, b2), (a1, b1))
    return rect_power_integral(lo[0], lo[1], hi[0], hi[1], 1.0 - 2.0 * s)


def energy_target(cfg: ExperimentConfig, f: ContinuumFunction) -> tuple[float | None, str]:
    """Limit value of the stage energies for the exact fractional kernel."""
    if cfg.kernel != "frac":
        return None, "no analytic target for a non-exact kernel"
    scale = _scale_value(cfg.scale, cfg.i)
    conv = 1.0 if cfg.convention == "ordered" else 0.5
    if cfg.i == 1:
        domains = ((0.0, 1.0), (0.0, 1.0))
        sided = 1.0
    else:
        gap = 1.0 / cfg.i
        domains = ((0.0, gap), (1.0 - gap, 1.0))
        sided = 2.0
    if f.name == "linear":
        base = _linear_seminorm_sq(cfg.s, *domains)
        source = "closed-form linear seminorm"
    elif f.name.startswith("constant"):
        return 0.0, "constant function"
    else:
        base = energy_mod.gagliardo_seminorm(f, cfg.s, *domains, tol=cfg.quad_tol)
        source = "quadrature seminorm"
    return conv * sided * scale * base, source


# ---------------------------------------------------------------------------
# n -> infinity energy drivers

def _stage_energy(cfg: ExperimentConfig, f, n: int, use_avg: bool) -> float:
    spec = cfg.kernel_spec()
    u = avg(cfg.i, n, f) if use_avg else restrict(cfg.i, n, f)
    return kernel_energy(cfg.i, n, spec, u.values, cfg.convention)


def finite_energy_limit(cfg: ExperimentConfig) -> ConvergenceReport:
    """Energies of nodewise restrictions along the stage grid."""
    f = cfg.function_spec()
    values = parallel_map(
        lambda n: _stage_energy(cfg, f, n, use_avg=False), cfg.n_values, cfg.threads
    )
    return _limit_report("finite_energy_limit", cfg, f, values)


def density_limit(cfg: ExperimentConfig) -> ConvergenceReport:
    """Energies of cell averages along the stage grid."""
    f = cfg.function_spec()
    values = parallel_map(
        lambda n: _stage_energy(cfg, f, n, use_avg=True), cfg.n_values, cfg.threads
    )
    return _limit_report("density_limit", cfg, f, values)


def _limit_report(name, cfg, f, values) -> ConvergenceReport:
    target, source = energy_target(cfg, f)
    extrapolated = aitken(values)
    details = {}
    passed = True
    if target is not None:
        errors = [abs(v - target) for v in values]
        details["errors"] = errors
        floor = max(abs(target) * cfg.tol, 1e-15)
        passed = errors[-1] <= floor
        tail = [e for n, e in zip(cfg.n_values, errors) if n >= cfg.decreasing_from]
        details["tail_monotone"] = all(
            b <= a * (1.0 + 1e-12) for a, b in zip(tail, tail[1:])
        )
    return ConvergenceReport(
        experiment=name,
        grid=tuple(cfg.n_values),
        values=tuple(values),
        target=target,
        target_source=source,
        extrapolated=extrapolated,
        tol=cfg.tol,
        passed=bool(passed),
        details=details,
    )


def equivalence_gap(cfg: ExperimentConfig) -> ConvergenceReport:
    """Gap between the restriction and averaging energies per stage."""
    f = cfg.function_spec()

    def one(n):
        e_restrict = _stage_energy(cfg, f, n, use_avg=False)
        e_avg = _stage_energy(cfg, f, n, use_avg=True)
        return e_restrict, abs(e_restrict - e_avg)

    pairs = parallel_map(one, cfg.n_values, cfg.threads)
    energies = [p[0] for p in pairs]
    gaps = [p[1] for p in pairs]
    tail = [g for n, g in zip(cfg.n_values, gaps) if n >= cfg.decreasing_from]
    monotone = all(b <= a * (1.0 + 1e-12) for a, b in zip(tail, tail[1:]))
    last_energy = energies[-1] if energies[-1] > 0.0 else 1.0
    passed = gaps[-1] <= cfg.tol * last_energy and monotone
    return ConvergenceReport(
        experiment="equivalence_gap",
        grid=tuple(cfg.n_values),
        values=tuple(gaps),
        target=0.0,
        target_source="restriction and averaging limits coincide",
        extrapolated=aitken(gaps),
        tol=cfg.tol,
        passed=bool(passed),
        details={"energies": energies, "tail_monotone": monotone},
    )


def gamma_limsup_probe(cfg: ExperimentConfig) -> ConvergenceReport:
    """Recovery-sequence probe: averages approach the limit from below.

    With u_n the cell averages of f, checks that the tail energies stay
    below target*(1+tol) and that Ext u_n -> f in L2.
    """
    f = cfg.function_spec()
    target, source = energy_target(cfg, f)

    def one(n):
        u = avg(cfg.i, n, f)
        e = kernel_energy(cfg.i, n, cfg.kernel_spec(), u.values, cfg.convention)
        dist = float(np.sqrt(l2_distance_sq(f, u)))
        return e, dist

    pairs = parallel_map(one, cfg.n_values, cfg.threads)
    values = [p[0] for p in pairs]
    dists = [p[1] for p in pairs]
    tail = values[-3:]
    limsup_ok = target is None or all(v <= target * (1.0 + cfg.tol) + 1e-15 for v in tail)
    dist_tail = [d for n, d in zip(cfg.n_values, dists) if n >= cfg.decreasing_from]
    l2_ok = dists[-1] <= cfg.l2_tol and all(
        b <= a * (1.0 + 1e-9) for a, b in zip(dist_tail, dist_tail[1:])
    )
    return ConvergenceReport(
        experiment="gamma_limsup_probe",
        grid=tuple(cfg.n_values),
        values=tuple(values),
        target=target,
        target_source=source,
        extrapolated=aitken(values),
        tol=cfg.tol,
        passed=bool(limsup_ok and l2_ok),
        details={"l2_distances": dists, "limsup_ok": bool(limsup_ok), "l2_ok": bool(l2_ok)},
    )


def gamma_liminf_probe(cfg: ExperimentConfig) -> ConvergenceReport:
    """Lower-bound probe along perturbed recovery sequences.

    Sequences are cell averages plus seeded noise with rapidly decaying
    amplitude, so they still converge to f in L2; their energies must
    not drop below the limit energy asymptotically.  This exercises
    concrete sequence families only; the quantifier over all weakly
    convergent sequences is out of numerical reach.
    """
    f = cfg.function_spec()
    target, source = energy_target(cfg, f)
    rng = np.random.default_rng(cfg.seed)
    spec = cfg.kernel_spec()

    values = []
    for n in cfg.n_values:
        u = avg(cfg.i, n, f)
        noise = rng.standard_normal(u.values.shape)
        perturbed = u.values + 4.0 ** (-n) * noise
        values.append(kernel_energy(cfg.i, n, spec, perturbed, cfg.convention))

    tail = values[-3:]
    passed = target is None or min(tail) >= target * (1.0 - cfg.tol) - 1e-12
    return ConvergenceReport(
        experiment="gamma_liminf_probe",
        grid=tuple(cfg.n_values),
        values=tuple(values),
        target=target,
        target_source=source,
        extrapolated=aitken(values),
        tol=cfg.tol,
        passed=bool(passed),
        details={"probe": "avg recovery + 4^-n noise", "seed": cfg.seed},
    )


def averaging_contraction_excess(
    cfg: ExperimentConfig, triples: int = 20
) -> ConvergenceReport:
    """Numeric check of the auxiliary averaging contraction.

    Samples (k, n, u) with k <= n and measures how much the square root
    of the energy of Avg_n Ext_k u exceeds that of u; the contraction
    hypothesis used by the generalized-convergence machinery would make
    the excess vanish asymptotically.  This is checked over samples,
    never assumed.
    """
    spec = cfg.kernel_spec()
    rng = np.random.default_rng(cfg.seed)
    grid = []
    excesses = []
    for _ in range(triples):
        k = int(rng.integers(min(cfg.n_values), max(cfg.n_values)))
        n = int(rng.integers(k, max(cfg.n_values) + 1))
        u = GridFunction(cfg.i, k, rng.standard_normal(len(node_set(cfg.i, k))))
        coarse = kernel_energy(cfg.i, k, spec, u.values, cfg.convention)
        pushed = avg(cfg.i, n, ext(cfg.i, k, u))
        fine = kernel_energy(cfg.i, n, spec, pushed.values, cfg.convention)
        grid.append(f"{k}:{n}")
        excesses.append(max(np.sqrt(fine) - np.sqrt(coarse), 0.0))
    return ConvergenceReport(
        experiment="averaging_contraction_excess",
        grid=tuple(grid),
        values=tuple(excesses),
        target=0.0,
        target_source="contraction hypothesis (reported, not assumed)",
        extrapolated=None,
        tol=cfg.tol,
        passed=True,  # diagnostic: the excess is reported, never asserted
        details={"max_excess": float(max(excesses)) if excesses else 0.0},
    )


def compactness_lower_bound(cfg: ExperimentConfig) -> ConvergenceReport:
    """Random-function check of the discrete-to-continuum lower bound.

    For i = 1 and s < 1/2 the stage energy dominates
    c * lam * [Ext u]^2 with c = min(6 s (1-2s)/8, 2^-(1+2s)); the
    extension seminorm is evaluated by the exact cell-pair closed form.
    """
    if cfg.i != 1 or not cfg.s < 0.5:
        raise ConfigError("the compactness bound needs i = 1 and s < 1/2")
    spec = cfg.kernel_spec()
    c = min(6.0 * cfg.s * (1.0 - 2.0 * cfg.s) / 8.0, 2.0 ** (-(1.0 + 2.0 * cfg.s)))
    lam = spec.lam(1)
    rng = np.random.default_rng(cfg.seed)
    margins = []
    violations = []
    worst = np.inf
    for n in cfg.n_values:
        count = len(node_set(1, n))
        for _ in range(cfg.trials):
            u = GridFunction(1, n, rng.normal(size=count))
            lhs = kernel_energy(1, n, spec, u.values, "ordered")
            rhs = c * lam * energy_mod.gagliardo_seminorm(
                ext(1, n, u), cfg.s, (0.0, 1.0), (0.0, 1.0)
            )
            margin = lhs - rhs
            worst = min(worst, margin / max(rhs, 1e-300))
            if margin < -1e-12 * max(lhs, 1.0):
                violations.append({"n": n, "values": [fmt17(v) for v in u.values]})
        margins.append(worst)
    return ConvergenceReport(
        experiment="compactness_lower_bound",
        grid=tuple(cfg.n_values),
        values=tuple(margins),
        target=0.0,
        target_source=f"margin floor with c={c}",
        extrapolated=None,
        tol=0.0,
        passed=not violations,
        details={"constant": c, "violations": violations, "trials": cfg.trials},
    )


# ---------------------------------------------------------------------------
# i -> infinity drivers

def i_limit_fixed_n(cfg: ExperimentConfig) -> ConvergenceReport:
    """Large-index limit of the stage energies at a fixed stage.

    Requires the i^2 kernel scaling; the energies approach
    2 |f(0)-f(1)|^2 and the one-sided kernel mass approaches 1.
    """
    if cfg.scale != "isq" or cfg.kernel != "frac":
        raise ConfigError(
            "the large-index limit needs the exact kernel with i^2 scaling"
        )
    f = cfg.function_spec()
    spec = cfg.kernel_spec()
    target = 2.0 * float((f(0.0) - f(1.0)) ** 2)

    def one(i):
        u = restrict(i, cfg.n, f)
        e = kernel_energy(i, cfg.n, spec, u.values, "ordered")
        return e, kernel_kappa(i, cfg.n, spec)

    pairs = parallel_map(one, cfg.i_values, cfg.threads)
    values = [p[0] for p in pairs]
    kappas = [p[1] for p in pairs]
    errors = [abs(v - target) for v in values]
    monotone = all(b <= a * (1.0 + 1e-12) for a, b in zip(errors, errors[1:]))
    passed = errors[-1] <= cfg.tol and abs(kappas[-1] - 1.0) <= cfg.tol and monotone
    return ConvergenceReport(
        experiment="i_limit_fixed_n",
        grid=tuple(cfg.i_values),
        values=tuple(values),
        target=target,
        target_source="2 |f(0)-f(1)|^2",
        extrapolated=aitken(values),
        tol=cfg.tol,
        passed=bool(passed),
        details={"kappa": kappas, "errors": errors, "monotone": monotone, "n": cfg.n},
    )


def i_limit_continuum(cfg: ExperimentConfig) -> ConvergenceReport:
    """Continuum analogue: scaled cross integrals over the shrinking arms."""
    if cfg.scale != "isq":
        raise ConfigError("the large-index limit needs the i^2 kernel scaling")
    f = cfg.function_spec()
    s = cfg.s
    target = 2.0 * float((f(0.0) - f(1.0)) ** 2)

    def one(i):
        gap = 1.0 / i

        def fn2(x, y):
            return (f(x) - f(y)) ** 2 * np.abs(y - x) ** (-(1.0 + 2.0 * s))

        integral = adaptive_rect(fn2, 0.0, gap, 1.0 - gap, 1.0, tol=cfg.quad_tol)
        return 2.0 * _scale_value("isq", i) * integral

    values = parallel_map(one, cfg.i_values, cfg.threads)
    errors = [abs(v - target) for v in values]
    return ConvergenceReport(
        experiment="i_limit_continuum",
        grid=tuple(cfg.i_values),
        values=tuple(values),
        target=target,
        target_source="2 |f(0)-f(1)|^2",
        extrapolated=aitken(values),
        tol=cfg.tol,
        passed=bool(errors[-1] <= cfg.tol),
        details={"errors": errors},
    )


# ---------------------------------------------------------------------------
# Local baseline (nearest-neighbor networks)

def local_chain_energy(n: int, r: float, values: np.ndarray, convention: str = "ordered") -> float:
    """Energy of the nearest-neighbor chain with per-wire resistance r^n."""
    diffs = np.diff(values)
    base = float(np.sum(diffs * diffs)) / r**n
    return (2.0 if convention == "ordered" else 1.0) * base


def local_chain_network(n: int, r: float):
    """Nearest-neighbor conductance network on the stage-n dyadic nodes."""
    from .network import ConductanceNetwork

    count = 2**n + 1
    nodes = [k / 2**n for k in range(count)]
    edges = [(nodes[k], nodes[k + 1], r**-n) for k in range(count - 1)]
    return ConductanceNetwork.from_edges(edges, labels=nodes)


def local_baseline(cfg: ExperimentConfig) -> ConvergenceReport:
    """Nearest-neighbor baseline: energies against 2 * int |f'|^2.

    With r = 1/2 the chain networks are electrically equivalent across
    stages and the energies converge to the local form.
    """
    f = cfg.function_spec()
    if f.name == "linear":
        target, source = 2.0, "2 int |f'|^2 (linear)"
    elif f.name == "quadratic":
        target, source = 8.0 / 3.0, "2 int |f'|^2 (quadratic)"
    else:
        from .quadrature import adaptive_interval

        h = 1e-6

        def deriv_sq(x):
            return ((f(x + h) - f(x - h)) / (2.0 * h)) ** 2

        target = 2.0 * adaptive_interval(deriv_sq, h, 1.0 - h, tol=1e-8)
        source = "2 int |f'|^2 (difference quotient)"

    def one(n):
        u = restrict(1, n, f)
        return local_chain_energy(n, cfg.r, u.values, cfg.convention)

    values = parallel_map(one, cfg.n_values, cfg.threads)

    residuals = []
    for n in cfg.n_values:
        if 1 <= n <= 8:
            R_fine = all_pairs_resistance(local_chain_network(n, cfg.r))
            R_coarse = all_pairs_resistance(local_chain_network(n - 1, cfg.r))
            residuals.append(float(np.max(np.abs(R_fine[::2, ::2] - R_coarse))))
    errors = [abs(v - target) for v in values]
    passed = errors[-1] <= max(cfg.tol * abs(target), 1e-12) and all(
        res <= 1e-12 for res in residuals
    )
    return ConvergenceReport(
        experiment="local_baseline",
        grid=tuple(cfg.n_values),
        values=tuple(values),
        target=target,
        target_source=source,
        extrapolated=aitken(values),
        tol=cfg.tol,
        passed=bool(passed),
        details={"equivalence_residuals": residuals, "r": cfg.r},
    )


# ---------------------------------------------------------------------------
# Resistance bound suite

def resistance_bounds_suite(cfg: ExperimentConfig) -> ConvergenceReport:
    """Per-stage verification of the resistance bounds.

    On every kernel-driven stage network: effective resistance is at
    most the direct-wire resistance, at least the edge-cut lower bound,
    and bounded by the Euclidean power (i = 1) or the best bridging
    node (i > 1).  The geometric-series upper bound is evaluated as a
    diagnostic only; its electrical-equivalence hypothesis is not
    constructible beyond the first stage.
    """
    spec = cfg.kernel_spec()
    slack = 1e-9
    stages = [(i, n) for i in cfg.i_values for n in cfg.n_values]
    violations = []
    worst_margin = np.inf
    diagnostics = {}

    for i, n in stages:
        net = build_network(i, n, spec)
        R = all_pairs_resistance(net)
        x = net.x_float()
        lam = spec.lam(i)
        span = np.abs(x[net.iy] - x[net.ix])

        r_wire = R[net.ix, net.iy]
        # (a) network beats the direct wire
        bad = r_wire > net.delta * (1.0 + slack)
        if np.any(bad):
            violations.append({"stage": (i, n), "check": "direct-wire", "count": int(bad.sum())})
        worst_margin = min(worst_margin, float(np.min(net.delta - r_wire)))

        # (b) edge-cut lower bound
        deg = np.zeros(net.node_count)
        np.add.at(deg, net.ix, net.conductance)
        np.add.at(deg, net.iy, net.conductance)
        lower = 1.0 / np.minimum(deg[net.ix], deg[net.iy])
        bad = r_wire < lower * (1.0 - slack)
        if np.any(bad):
            violations.append({"stage": (i, n), "check": "edge-cut", "count": int(bad.sum())})

        # (c)/(d) Euclidean and bridged bounds over all node pairs
        if i == 1:
            cap = (2.0 ** (n + 1)) ** 2 / lam * span ** (1.0 + 2.0 * cfg.s)
            bad = r_wire > cap * (1.0 + slack)
            if np.any(bad):
                violations.append({"stage": (i, n), "check": "euclidean", "count": int(bad.sum())})
        else:
            factor = (2.0**n * i) ** 2 / lam
            cap = factor * span ** (1.0 + 2.0 * cfg.s)
            bad = r_wire > cap * (1.0 + slack)
            if np.any(bad):
                violations.append({"stage": (i, n), "check": "cross-pair", "count": int(bad.sum())})
            L = net.node_set.left_size
            sides = (np.arange(L), np.arange(L, net.node_count))
            for side, other in (sides, sides[::-1]):
                # best bridging node for every same-side pair (min-plus)
                D = np.abs(x[side][:, None] - x[other][None, :]) ** (1.0 + 2.0 * cfg.s)
                bridge = np.min(D[:, None, :] + D[None, :, :], axis=2)
                R_side = R[np.ix_(side, side)]
                bad = R_side > factor * bridge * (1.0 + slack)
                np.fill_diagonal(bad, False)
                if np.any(bad):
                    violations.append(
                        {"stage": (i, n), "check": "bridge", "count": int(bad.sum()) // 2}
                    )
        diagnostics[f"{i}:{n}"] = {
            "max_resistance": float(R.max()),
            "geometric_diagnostic": float(2.0 * sum(cfg.r**k for k in range(n + 1))),
        }

    return ConvergenceReport(
        experiment="resistance_bounds_suite",
        grid=tuple(f"{i}:{n}" for i, n in stages),
        values=tuple(diagnostics[f"{i}:{n}"]["max_resistance"] for i, n in stages),
        target=None,
        target_source="bound suite (no single target)",
        extrapolated=None,
        tol=slack,
        passed=not violations,
        details={"violations": violations, "diagnostics": diagnostics,
                 "worst_direct_wire_margin": float(worst_margin)},
    )


DRIVERS = {
    "converge": finite_energy_limit,
    "density": density_limit,
    "gap": equivalence_gap,
    "gamma": gamma_limsup_probe,
    "gamma-liminf": gamma_liminf_probe,
    "contraction": averaging_contraction_excess,
    "compact": compactness_lower_bound,
    "ilimit": i_limit_fixed_n,
    "ilimit-continuum": i_limit_continuum,
    "local": local_baseline,
    "bounds": resistance_bounds_suite,
}
