"""Experiment-driver tests at small scale."""

import numpy as np
import pytest

from nel.convergence_lab import (
    ConvergenceReport,
    ExperimentConfig,
    aitken,
    compactness_lower_bound,
    density_limit,
    energy_target,
    equivalence_gap,
    finite_energy_limit,
    gamma_limsup_probe,
    i_limit_continuum,
    i_limit_fixed_n,
    local_baseline,
    local_chain_energy,
    local_chain_network,
    parallel_map,
    resistance_bounds_suite,
)
from nel.errors import ConfigError
from nel.functions import by_name
from nel.energy import kernel_bound_b, kernel_energy, restrict
from nel.network import KernelSpec, all_pairs_resistance


SMALL_NS = tuple(range(0, 9))


class TestHelpers:
    def test_aitken_accelerates_geometric(self):
        seq = [1.0 - 0.5**k for k in range(3, 9)]
        assert aitken(seq) == pytest.approx(1.0, abs=1e-12)
        assert aitken([1.0]) is None

    def test_parallel_map_order(self):
        items = list(range(30))
        assert parallel_map(lambda k: k * k, items, threads=4) == [
            k * k for k in items
        ]

    def test_energy_target_linear(self):
        cfg = ExperimentConfig(i=1, s=0.25)
        value, _ = energy_target(cfg, by_name("linear"))
        assert value == pytest.approx(8.0 / 15.0)
        cfg_path = ExperimentConfig(i=1, s=0.25, convention="path")
        half, _ = energy_target(cfg_path, by_name("linear"))
        assert half == pytest.approx(4.0 / 15.0)


class TestEnergyLimits:
    def test_linear_converges_to_closed_form(self):
        cfg = ExperimentConfig(i=1, s=0.25, n_values=SMALL_NS)
        report = finite_energy_limit(cfg)
        assert report.passed
        assert report.target == pytest.approx(8.0 / 15.0)
        errors = report.details["errors"]
        assert errors[-1] < errors[4]

    def test_constant_is_identically_zero(self):
        cfg = ExperimentConfig(i=1, function="constant:3.0", n_values=(0, 2, 4))
        report = finite_energy_limit(cfg)
        assert all(v == 0.0 for v in report.values)

    def test_density_and_finite_share_the_limit(self):
        cfg = ExperimentConfig(i=1, s=0.25, n_values=SMALL_NS)
        a = finite_energy_limit(cfg)
        b = density_limit(cfg)
        assert a.values[-1] == pytest.approx(b.values[-1], rel=1e-3)
        assert b.passed

    def test_bounded_family_on_gapped_space(self):
        # the split-space energies stay below the uniform kernel bound
        cfg = ExperimentConfig(i=3, s=0.25, n_values=tuple(range(0, 7)),
                               function="step:0.1")
        f = cfg.function_spec()
        spec = cfg.kernel_spec()
        cap = 4.0 * spec.Lam(3) * kernel_bound_b(3, 0.25) / 3.0
        for n in cfg.n_values:
            u = restrict(3, n, f)
            e = kernel_energy(3, n, spec, u.values, "ordered")
            norm = u.l2_norm_sq()
            assert e <= cap * norm * (1 + 1e-12) + 1e-15

    def test_sqrt_family_on_touching_space(self):
        cfg = ExperimentConfig(i=2, s=0.25, n_values=tuple(range(0, 9)),
                               function="sqrt", tol=0.05, quad_tol=1e-7)
        a = finite_energy_limit(cfg)
        b = density_limit(cfg)
        assert a.passed and b.passed
        assert a.values[-1] == pytest.approx(b.values[-1], rel=2e-2)


class TestEquivalenceGap:
    def test_linear_gap_decreases(self):
        cfg = ExperimentConfig(i=1, s=0.25, n_values=SMALL_NS, tol=1e-2)
        report = equivalence_gap(cfg)
        assert report.passed
        assert report.details["tail_monotone"]
        assert report.values[-1] <= 1e-2 * report.details["energies"][-1]

    def test_constant_gap_is_zero(self):
        cfg = ExperimentConfig(i=1, function="constant:2.0", n_values=(1, 3))
        report = equivalence_gap(cfg)
        assert all(v == 0.0 for v in report.values)

    def test_gapped_space_bounded_function(self):
        cfg = ExperimentConfig(i=5, s=0.25, n_values=tuple(range(0, 7)),
                               function="step:0.1", tol=5e-2)
        report = equivalence_gap(cfg)
        assert report.values[-1] <= report.values[0] + 1e-12
        assert report.values[-1] < 1e-2


class TestGammaProbe:
    def test_linear_probe(self):
        cfg = ExperimentConfig(i=1, s=0.25, n_values=SMALL_NS, tol=1e-2)
        report = gamma_limsup_probe(cfg)
        assert report.passed
        dists = report.details["l2_distances"]
        assert dists[-1] < dists[0]

    def test_step_probe_matches_quadrature_target(self):
        # the jump cell makes the energies converge like 2^(-n/2), so
        # the five-percent window needs a few more stages
        cfg = ExperimentConfig(i=1, s=0.25, n_values=tuple(range(0, 13)),
                               function="step:0.5", tol=5e-2, l2_tol=5e-2)
        report = gamma_limsup_probe(cfg)
        assert report.passed
        assert report.values[-1] == pytest.approx(report.target, rel=5e-2)
        assert report.extrapolated == pytest.approx(report.target, rel=5e-3)


class TestCompactness:
    def test_random_functions_never_violate(self):
        cfg = ExperimentConfig(i=1, s=0.25, n_values=(1, 3, 5), trials=25, seed=77)
        report = compactness_lower_bound(cfg)
        assert report.passed
        assert report.details["constant"] == pytest.approx(
            min(6 * 0.25 * 0.5 / 8, 2.0**-1.5)
        )

    def test_wrong_regime_rejected(self):
        with pytest.raises(ConfigError):
            compactness_lower_bound(ExperimentConfig(i=2, s=0.25))
        with pytest.raises(ConfigError):
            compactness_lower_bound(ExperimentConfig(i=1, s=0.7))


class TestLargeIndexLimits:
    def test_fixed_stage_limit(self):
        cfg = ExperimentConfig(scale="isq", i_values=(10, 100, 1000), n=3,
                               function="linear", tol=1e-2)
        report = i_limit_fixed_n(cfg)
        assert report.passed
        assert abs(report.values[-1] - 2.0) <= 1e-2
        assert abs(report.details["kappa"][-1] - 1.0) <= 1e-2

    def test_equal_endpoint_values_kill_the_limit(self):
        cfg = ExperimentConfig(scale="isq", i_values=(10, 100), n=2,
                               function="sine:6.283185307179586", tol=5e-2)
        report = i_limit_fixed_n(cfg)
        assert report.target == pytest.approx(0.0, abs=1e-12)

    def test_continuum_variant(self):
        cfg = ExperimentConfig(scale="isq", i_values=(10, 100, 1000),
                               function="linear", tol=1e-2)
        report = i_limit_continuum(cfg)
        assert report.passed
        assert report.values[-1] == pytest.approx(2.0, abs=1e-2)

    def test_quadratic_continuum_target(self):
        cfg = ExperimentConfig(scale="isq", i_values=(10, 100, 1000),
                               function="quadratic", tol=2e-2)
        report = i_limit_continuum(cfg)
        assert report.target == pytest.approx(2.0)
        assert report.passed

    def test_scale_one_rejected(self):
        with pytest.raises(ConfigError):
            i_limit_fixed_n(ExperimentConfig(scale="one"))


class TestLocalBaseline:
    def test_linear_is_exactly_two(self):
        cfg = ExperimentConfig(n_values=tuple(range(0, 17)), function="linear")
        report = local_baseline(cfg)
        assert all(v == 2.0 for v in report.values)
        assert report.passed

    def test_quadratic_closed_form(self):
        cfg = ExperimentConfig(n_values=tuple(range(0, 9)), function="quadratic")
        report = local_baseline(cfg)
        for n, v in zip(report.grid, report.values):
            assert v == pytest.approx(8.0 / 3.0 - 2.0 / (3.0 * 4.0**n), abs=1e-12)

    def test_chain_is_electrically_equivalent(self):
        for n in range(1, 7):
            fine = all_pairs_resistance(local_chain_network(n, 0.5))
            coarse = all_pairs_resistance(local_chain_network(n - 1, 0.5))
            assert np.max(np.abs(fine[::2, ::2] - coarse)) < 1e-12

    def test_chain_energy_convention(self):
        values = np.array([0.0, 0.5, 1.0])
        assert local_chain_energy(1, 0.5, values, "path") == pytest.approx(1.0)
        assert local_chain_energy(1, 0.5, values, "ordered") == pytest.approx(2.0)


class TestBoundsSuite:
    def test_small_sweep_has_no_violations(self):
        cfg = ExperimentConfig(s=0.25, i_values=(1, 3), n_values=tuple(range(0, 5)))
        report = resistance_bounds_suite(cfg)
        assert report.passed
        assert report.details["violations"] == []
        assert report.details["worst_direct_wire_margin"] >= -1e-12


class TestReportPlumbing:
    def test_json_round_trip_fields(self):
        cfg = ExperimentConfig(i=1, n_values=(0, 1, 2))
        report = finite_energy_limit(cfg)
        payload = report.to_json_dict()
        assert payload["experiment"] == "finite_energy_limit"
        assert len(payload["values"]) == 3
        rows = report.csv_rows()
        assert len(rows) == 3 and len(rows[0]) == 4
