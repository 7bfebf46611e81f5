import json

import pytest

from cplab.cli import main


def run_cli(*argv):
    return main(list(argv))


class TestLattice:
    def test_writes_artifacts(self, tmp_path):
        out = tmp_path / "run"
        assert run_cli("lattice", "--m", "13", "--out", str(out)) == 0
        manifest = json.loads((out / "lattice_manifest.json").read_text())
        assert manifest["violations"] == 0
        assert manifest["config"]["n"] == 104
        assert (out / "lattice_points.csv").exists()

    def test_missing_required_flag_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run_cli("lattice", "--out", str(tmp_path))
        assert err.value.code == 2


class TestFamily:
    def test_build_and_audit(self, tmp_path):
        out = tmp_path / "fam"
        code = run_cli(
            "family", "--n", "8", "--c", "2", "--seed", "1",
            "--trials", "50", "--out", str(out),
        )
        assert code == 0
        manifest = json.loads((out / "family_manifest.json").read_text())
        assert manifest["vectors"] == 64
        assert manifest["violations"] == 0
        header = (out / "family.txt").read_text().splitlines()[0]
        assert header.split()[0] == "8"


class TestChronogram:
    def test_profile_csv_per_epoch(self, tmp_path):
        out = tmp_path / "chrono"
        code = run_cli(
            "chronogram", "--n", "55", "--beta", "5", "--structure", "orc2d",
            "--seed", "7", "--trials", "40", "--out", str(out),
        )
        assert code == 0
        lines = (out / "chronogram_profile.csv").read_text().strip().splitlines()
        manifest = json.loads((out / "chronogram_manifest.json").read_text())
        assert len(lines) == 1 + len(manifest["snapped_sizes"])
        assert manifest["snapped_sizes"] == [34, 5]
        assert (out / "chronogram_trace.csv").exists()


class TestEncode:
    def test_manifest_reports_exact_recovery(self, tmp_path):
        out = tmp_path / "enc"
        code = run_cli(
            "encode", "--kind", "artificial", "--n", "25", "--beta", "5",
            "--istar", "2", "--seed", "1", "--out", str(out),
        )
        assert code == 0
        manifest = json.loads((out / "encode_manifest.json").read_text())
        assert manifest["recovery"] == "exact"
        assert manifest["slack_bits"] >= 0
        assert (out / "encode_message.bin").exists()

    def test_flag0_with_overrides(self, tmp_path):
        out = tmp_path / "enc0"
        code = run_cli(
            "encode", "--kind", "artificial", "--n", "25", "--beta", "5",
            "--istar", "2", "--seed", "1", "--cell-budget", "16",
            "--probe-threshold", "12", "--tries", "8", "--out", str(out),
        )
        assert code == 0
        manifest = json.loads((out / "encode_manifest.json").read_text())
        assert manifest["flag"] == 0
        assert manifest["recovery"] == "exact"

    def test_missing_kind_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run_cli("encode", "--n", "25", "--beta", "5", "--istar", "2")
        assert err.value.code == 2


class TestGrid:
    def test_trials_and_hitting_csv(self, tmp_path):
        out = tmp_path / "grid"
        code = run_cli(
            "grid", "--n", "440", "--beta", "5", "--m", "55",
            "--trials", "20", "--out", str(out),
        )
        assert code == 0
        lines = (out / "grid_trials.csv").read_text().strip().splitlines()
        assert lines[0] == "trial,|Q|,rank,well_separated_fraction"
        assert len(lines) == 21
        manifest = json.loads((out / "grid_manifest.json").read_text())
        assert manifest["full_rank_trials"] == 20


class TestConfigFile:
    def test_flags_override_config(self, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text("m = 13\nn = 104\n# comment line\n")
        out = tmp_path / "out"
        code = run_cli("lattice", "--config", str(config), "--out", str(out))
        assert code == 0
        code = run_cli(
            "lattice", "--config", str(config), "--m", "21", "--out", str(out)
        )
        manifest = json.loads((out / "lattice_manifest.json").read_text())
        assert manifest["config"]["m"] == 21  # flag wins over file

    def test_unknown_config_key_exits_2(self, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text("bogus = 1\n")
        with pytest.raises(SystemExit) as err:
            run_cli("lattice", "--config", str(config), "--m", "13")
        assert err.value.code == 2


class TestAcceptanceCommand:
    def test_only_lattice(self, capsys):
        assert run_cli("acceptance", "--only", "lattice") == 0
        out = capsys.readouterr().out
        assert "criterion 1" in out
        assert "criterion 2" not in out

    def test_only_field(self):
        assert run_cli("acceptance", "--only", "field") == 0

    def test_unknown_only_exits_2(self):
        with pytest.raises(SystemExit) as err:
            run_cli("acceptance", "--only", "nonsense")
        assert err.value.code == 2

    def test_fault_injection_fails_round_trip(self, capsys):
        code = run_cli(
            "acceptance", "--only", "encode_decode_artificial",
            "--fault", "corrupt-message",
        )
        assert code == 1
        out = capsys.readouterr().out
        assert "encode-decode-artificial" in out
        assert "FAIL" in out
