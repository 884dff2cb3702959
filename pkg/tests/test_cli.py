import json

from obdk import read_sphere_table
from obdk.cli import cli_main


def _run(capsys, argv):
    code = cli_main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestComplexityCommand:
    def test_full_search_count(self, capsys):
        code, out, _ = _run(
            capsys, ["complexity", "--detector", "mld", "-U", "2", "-N", "8", "-K", "16", "--td", "1"]
        )
        assert code == 0
        assert out.strip() == "1792"

    def test_sphere_counts(self, capsys):
        code, out, _ = _run(
            capsys,
            ["complexity", "--detector", "osd", "-U", "2", "-N", "8", "-K", "16",
             "--td", "1", "--ns", "4", "--list-size", "2"],
        )
        assert code == 0
        assert out.split() == ["45056", "1408"]

    def test_sphere_needs_parameters(self, capsys):
        code, _, err = _run(
            capsys, ["complexity", "--detector", "osd", "-U", "2", "-N", "8", "-K", "16", "--td", "1"]
        )
        assert code == 1
        assert "n_sub" in err


class TestUsageErrors:
    def test_missing_sphere_flag(self, capsys):
        code, _, err = _run(
            capsys,
            ["ser", "-U", "2", "-N", "4", "--detectors", "osd", "--trials", "10",
             "--channels", "1", "--list-size", "2"],
        )
        assert code == 2
        assert "--ns" in err

    def test_sphere_flags_without_sphere_detector(self, capsys):
        code, _, err = _run(
            capsys,
            ["ser", "-U", "2", "-N", "4", "--detectors", "mld", "--trials", "10",
             "--channels", "1", "--ns", "4", "--list-size", "2"],
        )
        assert code == 2
        assert "--ns" in err or "--list-size" in err

    def test_unknown_flag(self, capsys):
        code, _, err = _run(capsys, ["ser", "-U", "2", "-N", "4", "--bogus", "1"])
        assert code == 2

    def test_missing_required_flag(self, capsys):
        code, _, err = _run(capsys, ["ser", "-U", "2"])
        assert code == 2
        assert "antennas" in err or "-N" in err

    def test_unknown_subcommand(self, capsys):
        code, _, _ = _run(capsys, ["frobnicate"])
        assert code == 2

    def test_help_exits_zero(self, capsys):
        code, out, _ = _run(capsys, ["--help"])
        assert code == 0
        assert "ser" in out


SMALL_SER = [
    "ser", "-U", "2", "-N", "4", "--mod", "qam4", "--snr-db", "0,6",
    "--detectors", "mld,mwd,osd", "--ns", "4", "--list-size", "2",
    "--trials", "200", "--channels", "3", "--seed", "7",
]


class TestSerCommand:
    def test_repeat_runs_are_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli_main(SMALL_SER + ["--out", str(a)]) == 0
        assert cli_main(SMALL_SER + ["--out", str(b)]) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()

    def test_worker_flag_does_not_change_output(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli_main(SMALL_SER + ["--out", str(a), "--workers", "1"]) == 0
        assert cli_main(SMALL_SER + ["--out", str(b), "--workers", "2"]) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()

    def test_env_override_controls_workers(self, capsys, tmp_path, monkeypatch):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli_main(SMALL_SER + ["--out", str(a)]) == 0
        monkeypatch.setenv("OBDK_THREADS", "3")
        assert cli_main(SMALL_SER + ["--out", str(b)]) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()

    def test_bad_env_override(self, capsys, monkeypatch):
        monkeypatch.setenv("OBDK_THREADS", "many")
        code, _, err = _run(capsys, SMALL_SER)
        assert code == 2
        assert "OBDK_THREADS" in err

    def test_stdout_csv(self, capsys):
        code, out, _ = _run(capsys, SMALL_SER)
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0].startswith("detector,snr_db,")
        assert len(lines) == 1 + 3 * 2

    def test_json_format(self, capsys):
        code, out, _ = _run(capsys, SMALL_SER + ["--format", "json"])
        assert code == 0
        data = json.loads(out)
        assert {d["detector"] for d in data} == {"mld", "mwd", "osd"}


class TestSepCommand:
    def test_rows(self, capsys):
        code, out, _ = _run(
            capsys,
            ["sep", "-U", "2", "-N", "4", "--snr-db", "3", "--ns", "4", "--list-size", "2",
             "--trials", "200", "--channels", "3", "--seed", "5"],
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert [ln.split(",")[0] for ln in lines[1:]] == ["sep", "p_loss", "bound"]

    def test_requires_sphere_params(self, capsys):
        code, _, err = _run(
            capsys, ["sep", "-U", "2", "-N", "4", "--snr-db", "3", "--trials", "10", "--channels", "1"]
        )
        assert code == 2
        assert "--ns" in err


class TestTradeoffCommand:
    def test_rows_per_list_size(self, capsys):
        code, out, _ = _run(
            capsys,
            ["tradeoff", "-U", "2", "-N", "4", "--snr-db", "0", "--ns", "4",
             "--list-sizes", "1,2", "--trials", "200", "--channels", "2", "--td", "256"],
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert [ln.split(",")[0] for ln in lines[1:]] == ["mld", "osd-l1", "osd-l2"]


class TestBoundCommand:
    def test_bound_rows(self, capsys):
        code, out, _ = _run(
            capsys,
            ["bound", "-U", "2", "-N", "4", "--snr-db", "0,5", "--ns", "4",
             "--list-size", "2", "--channels", "3", "--trials", "1"],
        )
        assert code == 0
        lines = out.strip().split("\n")
        rows = [ln.split(",") for ln in lines[1:]]
        assert [r[0] for r in rows] == ["bound", "bound"]
        assert all(0.0 <= float(r[5]) <= 1.0 for r in rows)


class TestTableBuildCommand:
    def test_writes_loadable_table(self, capsys, tmp_path):
        out = tmp_path / "table.osd"
        code = cli_main(
            ["table-build", "-U", "2", "-N", "4", "--mod", "qam4", "--snr-db", "5",
             "--seed", "3", "--ns", "4", "--list-size", "2", "--out", str(out)]
        )
        capsys.readouterr()
        assert code == 0
        table = read_sphere_table(out)
        assert table.indices.shape == (2, 16, 2)
        assert table.codebook_size == 16


class TestLlrCommand:
    BASE = ["llr", "-U", "2", "-N", "4", "--mod", "qam4", "--snr-db", "5",
            "--seed", "3", "--ns", "4", "--list-size", "2"]

    def test_outputs_one_row_per_user(self, capsys):
        y = ",".join(["1", "-1"] * 4)
        code, out, _ = _run(capsys, self.BASE + ["--y", y])
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "user,llr_odd,llr_even"
        assert len(lines) == 3
        for user, line in enumerate(lines[1:]):
            fields = line.split(",")
            assert int(fields[0]) == user
            float(fields[1]), float(fields[2])

    def test_json_output(self, capsys):
        y = ",".join(["1"] * 8)
        code, out, _ = _run(capsys, self.BASE + ["--y", y, "--format", "json"])
        assert code == 0
        rows = json.loads(out)
        assert [r["user"] for r in rows] == [0, 1]

    def test_wrong_length_observation(self, capsys):
        code, _, err = _run(capsys, self.BASE + ["--y", "1,-1,1"])
        assert code == 2
        assert "--y" in err

    def test_non_sign_entries_rejected(self, capsys):
        code, _, err = _run(capsys, self.BASE + ["--y", "1,0,1,1,1,1,1,1"])
        assert code == 2

    def test_requires_qam4(self, capsys):
        argv = [a for a in self.BASE]
        argv[argv.index("qam4")] = "bpsk"
        code, _, err = _run(capsys, argv + ["--y", ",".join(["1"] * 8)])
        assert code == 2
        assert "qam4" in err
