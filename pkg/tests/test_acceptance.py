"""Acceptance suite: one test per release criterion.

Each test prints a single PASS line (visible with ``pytest -s`` or in
the captured summary); tolerances are pinned here and nowhere else.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from nel.cli import main as cli_main
from nel.convergence_lab import (
    ExperimentConfig,
    equivalence_gap,
    i_limit_continuum,
    i_limit_fixed_n,
    local_baseline,
    resistance_bounds_suite,
)
from nel.energy import (
    GridFunction,
    discrete_energy,
    ellipticity_sandwich,
    ext,
    gagliardo_seminorm,
    gd_recursion_check,
    kernel_energy,
    kernel_kappa,
    kernel_moment,
    restrict,
)
from nel.functions import linear
from nel.geometry import node_set
from nel.index_space import WeightAssignment, path_count
from nel.network import (
    KernelSpec,
    _wire_structure,
    all_pairs_resistance,
    build_network,
    effective_resistance,
    random_connected_network,
    reduce_to_pair,
    solve_matching,
    star_mesh_eliminate,
    wire_to_path,
)
from nel.quadrature import adaptive_interval, adaptive_rect


def report(number, name, detail=""):
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {number:02d} {name}: PASS{suffix}")


def test_criterion_01_graph_directed_recursion():
    """Wire-sum energies decompose exactly through the index graph."""
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    checked = 0
    worst = 0.0
    for i in range(1, 7):
        for n in range(1, 7):
            for _ in range(50):
                memo = {}

                def rule(a, b, memo=memo):
                    if (a, b) not in memo:
                        memo[(a, b)] = float(rng.uniform(0.2, 3.0))
                    return memo[(a, b)]

                w = WeightAssignment(rule=rule)
                u = GridFunction(i, n, rng.normal(size=len(node_set(i, n))))
                lhs = discrete_energy(build_network(i, n, w), u, "path")
                residual = gd_recursion_check(i, n, u, w)
                assert residual <= 1e-12 * lhs
                worst = max(worst, residual / lhs)
                checked += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"recursion suite took {elapsed:.2f}s"
    report(1, "graph-directed recursion",
           f"{checked} draws, worst rel residual {worst:.2e}, {elapsed:.2f}s")


def test_criterion_02_path_wire_combinatorics():
    """Path counts match wire counts with an endpoint-exact bijection."""
    start = time.perf_counter()
    wires = 0
    for i in range(1, 7):
        for n in range(0, 8):
            expected = (2**n + 1) * 2**n // 2 if i == 1 else 4**n
            assert path_count(i, n) == expected
            # the structure build fails if two paths hit one wire slot
            # or any slot stays empty, so it certifies the bijection
            structure = _wire_structure(i, n)
            assert len(structure.codes) == expected
            nodes = structure.ns.nodes
            for k in range(expected):
                p = wire_to_path(i, n, nodes[structure.ix[k]], nodes[structure.iy[k]])
                assert p.codes == structure.codes[k].decode()
            wires += expected
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"bijection suite took {elapsed:.2f}s"
    report(2, "path/wire combinatorics", f"{wires} wires, {elapsed:.2f}s")


def test_criterion_03_stage1_matching():
    """Matched stage-1 weights reproduce the unit wire; others do not."""
    rng = np.random.default_rng(31)
    for trial in range(20):
        if trial % 2 == 0:
            beta = float(rng.uniform(0.55, 3.0))
            gamma = solve_matching(2.0 * beta)
            w = WeightAssignment.from_table({(1, 1): beta, (1, 2): gamma})
            net = build_network(1, 1, w)
        else:
            alpha = float(rng.uniform(0.1, 2.0))
            beta = float(rng.uniform(0.5, 2.0))
            gamma = solve_matching(alpha + 2.0 * beta)
            w = WeightAssignment.from_table(
                {(3, 4): alpha, (3, 5): beta, (3, 6): gamma}
            )
            net = build_network(3, 1, w)
        assert abs(effective_resistance(net, 0, 1) - 1.0) <= 1e-12

        # breaking the matching by at least 5 percent leaves a residual
        off = gamma * float(rng.uniform(1.05, 1.5)) ** rng.choice((-1, 1))
        table = {(1, 1): beta, (1, 2): off} if trial % 2 == 0 else {
            (3, 4): alpha, (3, 5): beta, (3, 6): off
        }
        bad = build_network(net.i, 1, WeightAssignment.from_table(table))
        assert abs(effective_resistance(bad, 0, 1) - 1.0) > 1e-6
    report(3, "stage-1 matching", "20 matched + 20 violated draws")


def test_criterion_04_star_mesh():
    """Star-mesh elimination preserves and reproduces resistances."""
    rng = np.random.default_rng(42)
    full_checks = 0
    for _ in range(100):
        size = int(rng.integers(4, 51))
        cn = random_connected_network(rng, size)
        R = all_pairs_resistance(cn)

        # resistances survive a single elimination
        victim = int(rng.integers(0, size))
        reduced = star_mesh_eliminate(cn, victim)
        keep = [lab for lab in cn.labels if lab != victim]
        sel = [cn.index(lab) for lab in keep]
        after = all_pairs_resistance(reduced)
        assert np.max(np.abs(R[np.ix_(sel, sel)] - after)) <= 1e-9

        # full reduction to a pair matches the direct solve; all pairs
        # for small networks, a sample for the large ones
        if size <= 12:
            pairs = [(a, b) for a in range(size) for b in range(a + 1, size)]
        else:
            pairs = [
                tuple(sorted(rng.choice(size, size=2, replace=False)))
                for _ in range(5)
            ]
        for a, b in pairs:
            direct = reduce_to_pair(cn, int(a), int(b))
            assert abs(direct - R[a, b]) <= 1e-9
            full_checks += 1
    report(4, "star-mesh correctness", f"{full_checks} full reductions")


def test_criterion_05_energy_convergence():
    """Restriction energies approach the closed-form seminorm limit."""
    start = time.perf_counter()
    spec = KernelSpec.fractional(0.25)
    f = linear()
    target = 8.0 / 15.0
    errors = []
    for n in range(0, 13):
        u = restrict(1, n, f)
        value = kernel_energy(1, n, spec, u.values, "ordered")
        errors.append(abs(value - target))
    assert errors[-1] <= 2e-2 * target
    tail = errors[6:]
    assert all(b < a for a, b in zip(tail, tail[1:])), "errors not monotone"
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"energy sweep took {elapsed:.2f}s"
    report(5, "energy convergence",
           f"final rel err {errors[-1] / target:.2e}, {elapsed:.2f}s")


def test_criterion_06_ellipticity_sandwich():
    """The oscillating kernel stays termwise between its constants."""
    spec = KernelSpec.perturbed_fractional(0.25, amplitude=0.5, frequency=7.0)
    stages = 0
    for i in (1, 2, 5):
        for n in range(0, 11):
            result = ellipticity_sandwich(build_network(i, n, spec))
            assert result.ok
            assert result.lam == pytest.approx(0.5)
            assert result.Lam == pytest.approx(1.5)
            stages += 1
    report(6, "ellipticity sandwich", f"{stages} stages termwise")


def test_criterion_07_equivalence_gap():
    """Restriction and averaging energies meet as the stages refine."""
    cfg = ExperimentConfig(
        i=1, s=0.25, n_values=tuple(range(0, 11)), function="linear",
        tol=1e-2, decreasing_from=5,
    )
    rep = equivalence_gap(cfg)
    assert rep.passed
    gap_final = rep.values[-1]
    energy_final = rep.details["energies"][-1]
    assert gap_final <= 1e-2 * energy_final
    tail = [g for n, g in zip(rep.grid, rep.values) if n >= 5]
    assert all(b <= a for a, b in zip(tail, tail[1:]))
    report(7, "equivalence gap", f"gap/energy at n=10: {gap_final / energy_final:.2e}")


def test_criterion_08_compactness_bound():
    """Stage energies dominate the extension seminorm with the proof constant."""
    s = 0.25
    c = min(6.0 * s * (1.0 - 2.0 * s) / 8.0, 2.0 ** (-(1.0 + 2.0 * s)))
    spec = KernelSpec.fractional(s)
    rng = np.random.default_rng(88)
    checked = 0
    for n in range(1, 8):
        for _ in range(15):
            u = GridFunction(1, n, rng.normal(size=len(node_set(1, n))))
            lhs = kernel_energy(1, n, spec, u.values, "ordered")
            rhs = c * gagliardo_seminorm(ext(1, n, u), s, (0, 1), (0, 1))
            assert lhs >= rhs * (1.0 - 1e-12), f"violation at n={n}"
            checked += 1
    assert checked >= 100
    report(8, "compactness lower bound", f"{checked} random functions, c={c}")


def test_criterion_09_kernel_moments():
    """Kernel moments grow in n and stay below their continuum targets."""
    spec = KernelSpec.fractional(0.25)

    worst_moments = [kernel_moment(build_network(1, n, spec), 2) for n in range(0, 11)]
    assert all(b >= a - 1e-15 for a, b in zip(worst_moments, worst_moments[1:]))
    # quadrature target: the endpoint integral of |x-y|^(1-2s)
    target_1 = adaptive_interval(lambda y: y**0.5, 0.0, 1.0, tol=1e-12)
    assert worst_moments[-1] <= target_1

    cross_moments = [kernel_moment(build_network(2, n, spec), 1) for n in range(0, 11)]
    assert all(b >= a - 1e-15 for a, b in zip(cross_moments, cross_moments[1:]))
    target_2 = adaptive_rect(
        lambda x, y: (y - x) ** -0.5, 0.0, 0.5, 0.5, 1.0, tol=1e-8
    )
    assert cross_moments[-1] <= target_2
    report(9, "kernel moments",
           f"sup {worst_moments[-1]:.4f} <= {target_1:.4f}, "
           f"cross {cross_moments[-1]:.4f} <= {target_2:.4f}")


def test_criterion_10_large_index_limit():
    """Energies collapse onto 2 |f(0)-f(1)|^2 as the space index grows."""
    cfg = ExperimentConfig(
        scale="isq", s=0.25, i_values=(10, 100, 1000), n=3,
        function="linear", tol=1e-2,
    )
    rep = i_limit_fixed_n(cfg)
    assert rep.passed
    assert abs(rep.values[-1] - 2.0) <= 1e-2
    errors = rep.details["errors"]
    assert errors[0] >= errors[1] >= errors[2]
    kappa = kernel_kappa(1000, 3, cfg.kernel_spec())
    assert abs(kappa - 1.0) <= 1e-2

    cont = i_limit_continuum(cfg)
    assert cont.passed
    assert abs(cont.values[-1] - 2.0) <= 1e-2
    assert abs(cont.values[-1] - rep.values[-1]) <= 1e-2
    report(10, "large-index limit",
           f"|E-2|={errors[-1]:.2e}, kappa-1={kappa - 1.0:.2e}")


def test_criterion_11_local_baseline():
    """The halving-resistance chain reproduces the local energy exactly."""
    cfg = ExperimentConfig(n_values=tuple(range(0, 17)), function="linear", r=0.5)
    rep = local_baseline(cfg)
    assert all(v == 2.0 for v in rep.values)
    assert all(res <= 1e-12 for res in rep.details["equivalence_residuals"])

    cfg_sq = ExperimentConfig(n_values=tuple(range(0, 17)), function="quadratic", r=0.5)
    rep_sq = local_baseline(cfg_sq)
    for n, v in zip(rep_sq.grid, rep_sq.values):
        assert abs(v - (8.0 / 3.0 - 2.0 / (3.0 * 4.0**n))) <= 1e-12
    report(11, "local baseline", "exact through n=16, residuals <= 1e-12")


def test_criterion_12_resistance_bounds():
    """Direct-wire, edge-cut, and distance-power bounds all hold."""
    cfg = ExperimentConfig(
        s=0.25, i_values=(1, 3), n_values=tuple(range(0, 7)), kernel="frac"
    )
    rep = resistance_bounds_suite(cfg)
    assert rep.passed
    assert rep.details["violations"] == []
    report(12, "resistance bounds", f"{len(rep.grid)} stages, zero violations")


def test_criterion_13_determinism(tmp_path):
    """Identical configs and seeds give byte-identical CSV at any thread count."""
    blobs = {}
    for name, overrides in (
        ("converge", ["n_values=0,1,2,3,4,5,6,7,8"]),
        ("compact", ["n_values=1,2,3,4", "trials=20"]),
    ):
        per_thread = []
        for threads in (1, 2, 8):
            out = tmp_path / f"{name}-{threads}"
            sets = [arg for key in overrides for arg in ("--set", key)]
            code = cli_main(
                ["experiment", name, *sets, "--seed", "7",
                 "--out", str(out), "--threads", str(threads)]
            )
            assert code == 0
            per_thread.append((out / f"{name}_report.csv").read_bytes())
        assert per_thread[0] == per_thread[1] == per_thread[2]
        blobs[name] = per_thread[0]
    report(13, "determinism", "converge+compact CSV stable across 1/2/8 threads")
