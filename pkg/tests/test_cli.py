"""CLI tests: exit codes, outputs, config validation, determinism."""

import json
from pathlib import Path

import pytest

from nel.cli import main, parse_config_text, load_config
from nel.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


class TestConfigParsing:
    def test_flat_format(self):
        text = "i = 2\ns = 0.3  # comment\nn_values = 0,1,2\n\nfunction = linear\n"
        values = parse_config_text(text)
        assert values == {
            "i": 2, "s": 0.3, "n_values": (0, 1, 2), "function": "linear"
        }

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("bogus = 1\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("i = two\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("just some words\n")

    def test_overrides(self):
        cfg = load_config(None, ["i=3", "s=0.4"])
        assert (cfg.i, cfg.s) == (3, 0.4)

    def test_bad_convention(self):
        with pytest.raises(ConfigError):
            load_config(None, ["convention=sideways"])

    def test_reference_configs_parse(self):
        for path in sorted(CONFIGS.glob("*.cfg")):
            parse_config_text(path.read_text())


class TestBuildCommand:
    def test_counts(self, capsys):
        assert main(["build", "--i", "1", "--n", "2", "--kernel", "frac",
                     "--s", "0.25"]) == 0
        assert "nodes=5 wires=10" in capsys.readouterr().out

    def test_bipartite_counts(self, capsys):
        assert main(["build", "--i", "3", "--n", "1"]) == 0
        assert "nodes=4 wires=4" in capsys.readouterr().out

    def test_cap_exit_code(self, capsys):
        assert main(["build", "--i", "1", "--n", "40"]) == 2

    def test_json_export(self, tmp_path, capsys):
        out = tmp_path / "net.json"
        assert main(["build", "--i", "2", "--n", "1", "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert len(data["wires"]) == 4

    def test_bad_kernel_family(self, capsys):
        assert main(["build", "--i", "1", "--n", "1", "--kernel", "nope"]) == 4


class TestResistanceCommand:
    def test_unit_wire(self, capsys):
        code = main(["resistance", "--i", "1", "--n", "0", "--source", "weights",
                     "--weights", "constant", "--r", "1.0",
                     "--x", "0/1", "--y", "1/1"])
        assert code == 0
        assert "0/1,1/1,1" in capsys.readouterr().out

    def test_matching_stage(self, capsys):
        code = main(["resistance", "--i", "1", "--n", "1", "--source", "weights",
                     "--weights", "matching", "--alpha", "1.0", "--beta", "1.0",
                     "--x", "0/1", "--y", "1/1"])
        assert code == 0
        out = capsys.readouterr().out
        value = float(out.strip().splitlines()[-1].split(",")[-1])
        assert value == pytest.approx(1.0, abs=1e-12)

    def test_starmesh_agrees_with_solver(self, capsys):
        args = ["resistance", "--i", "1", "--n", "2", "--x", "0/1", "--y", "1/1"]
        assert main(args + ["--reduce", "solve"]) == 0
        solve = float(capsys.readouterr().out.strip().splitlines()[-1].split(",")[-1])
        assert main(args + ["--reduce", "starmesh"]) == 0
        mesh = float(capsys.readouterr().out.strip().splitlines()[-1].split(",")[-1])
        assert mesh == pytest.approx(solve, abs=1e-9)

    def test_check_flag(self, capsys):
        assert main(["resistance", "--i", "2", "--n", "2", "--all-pairs",
                     "--check"]) == 0
        out = capsys.readouterr().out
        deviation = float(out.splitlines()[0].rsplit(" ", 1)[-1])
        assert deviation < 1e-9

    def test_all_pairs_csv(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        assert main(["resistance", "--i", "1", "--n", "1", "--all-pairs",
                     "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "x,y,resistance"
        assert len(lines) == 4  # three node pairs


class TestExperimentCommand:
    def test_local_experiment_passes(self, tmp_path, capsys):
        code = main(["experiment", "local", "--config", str(CONFIGS / "local.cfg"),
                     "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "local_report.json").exists()
        assert (tmp_path / "local_report.csv").exists()
        assert (tmp_path / "local_manifest.json").exists()
        report = json.loads((tmp_path / "local_report.json").read_text())
        assert report["passed"] is True
        assert all(v == 2.0 for v in report["values"])

    def test_manifest_references_outputs(self, tmp_path, capsys):
        main(["experiment", "gap", "--set", "n_values=0,1,2,3,4,5,6",
              "--out", str(tmp_path)])
        manifest = json.loads((tmp_path / "gap_manifest.json").read_text())
        for output in manifest["outputs"]:
            assert Path(output).exists()
        assert manifest["seed"] == 1234

    def test_failing_assertion_exit_code(self, tmp_path, capsys):
        # an unreachable tolerance makes the driver report failure
        code = main(["experiment", "converge", "--set", "n_values=0,1,2",
                     "--set", "tol=1e-12", "--out", str(tmp_path)])
        assert code == 1

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("nonsense = 12\n")
        assert main(["experiment", "converge", "--config", str(bad),
                     "--out", str(tmp_path)]) == 4

    def test_thread_determinism(self, tmp_path, capsys):
        paths = []
        for threads in (1, 2, 8):
            out = tmp_path / f"t{threads}"
            code = main(["experiment", "converge",
                         "--set", "n_values=0,1,2,3,4,5,6,7",
                         "--out", str(out), "--threads", str(threads)])
            assert code == 0
            paths.append(out / "converge_report.csv")
        blobs = [p.read_bytes() for p in paths]
        assert blobs[0] == blobs[1] == blobs[2]

    def test_seed_recorded_and_csv_stable(self, tmp_path, capsys):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            main(["experiment", "compact", "--set", "n_values=1,2,3",
                  "--set", "trials=10", "--seed", "99", "--out", str(out)])
        assert (a / "compact_report.csv").read_bytes() == (
            b / "compact_report.csv"
        ).read_bytes()
        manifest = json.loads((a / "compact_manifest.json").read_text())
        assert manifest["seed"] == 99
