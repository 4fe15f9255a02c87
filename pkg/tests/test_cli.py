"""
Tests for the qam-index command line.
"""

import json

import pytest

from app.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestEval:
    """Tests for `qam-index eval`."""

    def test_qam16_code(self, capsys):
        code, out, _ = run(capsys, "eval", "-M", "4", "--row", "1,-2")
        assert code == 0
        assert out.splitlines()[-1].split() == ["4", "2", "(1,-2)", "6.02"]

    def test_identity(self, capsys):
        code, out, _ = run(capsys, "eval", "-M", "4", "--row", "1,0,0")
        assert code == 0
        assert out.splitlines()[-1].split()[-1] == "0.00"

    def test_full_matrix(self, capsys):
        code, out, _ = run(capsys, "eval", "-M", "4", "--matrix", "1,-2;-2,1", "--verify")
        assert code == 0
        assert "6.02" in out

    def test_invalid_code(self, capsys):
        code, _, err = run(capsys, "eval", "-M", "4", "--row", "2,2")
        assert code == 2
        assert "not a unit" in err

    def test_missing_code(self, capsys):
        code, _, err = run(capsys, "eval", "-M", "4")
        assert code == 4
        assert err.startswith("error:")

    def test_json_round_trip(self, capsys, tmp_path):
        code, out, _ = run(capsys, "eval", "-M", "8", "--row", "1,2", "--json")
        assert code == 0
        record = json.loads(out)
        assert record["code"]["first_row"] == [1, 2]
        assert record["gamma_db"] == pytest.approx(4.65, abs=0.01)

        path = tmp_path / "eval.json"
        path.write_text(out)
        code, again, _ = run(capsys, "eval", "--json-in", str(path), "--json")
        assert code == 0
        assert json.loads(again) == record

    def test_brute_force(self, capsys):
        code, out, _ = run(capsys, "eval", "-M", "8", "--row", "1,2", "--brute-force")
        assert code == 0
        assert "brute_force" in out


class TestSearch:
    """Tests for `qam-index search`."""

    def test_qam16_search(self, capsys):
        code, out, _ = run(capsys, "search", "-M", "4", "-K", "2")
        assert code == 0
        assert out.splitlines()[-1].split() == ["4", "2", "(-2,-1)", "6.02"]

    def test_all_ties(self, capsys):
        code, out, _ = run(capsys, "search", "-M", "4", "-K", "2", "--all-ties")
        assert code == 0
        assert "(1,-2)" in out

    def test_budget_exceeded(self, capsys):
        code, _, err = run(capsys, "search", "-M", "4", "-K", "3", "--budget", "10")
        assert code == 3
        assert "exceeds budget" in err

    def test_checkpoint_and_resume(self, capsys, tmp_path):
        path = str(tmp_path / "search.json")
        code, out, _ = run(capsys, "search", "-M", "4", "-K", "3", "--budget", "30", "--checkpoint", path)
        assert code == 0
        assert "partial (30/48)" in out
        code, out, _ = run(capsys, "search", "-M", "4", "-K", "3", "--budget", "30", "--resume", path)
        assert code == 0
        assert "complete" in out
        assert out.splitlines()[-1].split()[-1] == "4.52"

    def test_resume_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "search", "-M", "4", "-K", "2", "--resume", str(tmp_path / "none.json"))
        assert code == 4

    def test_search_feeds_eval(self, capsys, tmp_path):
        _, out, _ = run(capsys, "search", "-M", "8", "-K", "2", "--json")
        path = tmp_path / "best.json"
        path.write_text(out)
        code, table, _ = run(capsys, "eval", "--json-in", str(path))
        assert code == 0
        assert table.splitlines()[-1].split()[-1] == "4.66"

    def test_missing_required(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["search", "-M", "4"])
        assert excinfo.value.code == 4


class TestSimulate:
    """Tests for `qam-index simulate`."""

    ARGS = ("simulate", "-M", "4", "--row", "1,-2", "--seed", "5", "--snr", "4:8:2", "--trials", "300")

    def test_same_seed_same_csv(self, capsys):
        _, first, _ = run(capsys, *self.ARGS, "--subset", "", "--subset", "1")
        _, second, _ = run(capsys, *self.ARGS, "--subset", "", "--subset", "1")
        assert first == second
        lines = first.splitlines()
        assert lines[0].startswith("# rng=numpy.random.Philox seed=5")
        assert lines[1] == "S,snr_db,trials,errors,rate,stderr"
        assert len(lines) == 2 + 6

    def test_csv_file(self, capsys, tmp_path):
        path = tmp_path / "curve.csv"
        code, out, _ = run(capsys, *self.ARGS, "--threads", "2", "--csv", str(path))
        assert code == 0
        assert out == ""
        assert [line.split(",")[1] for line in path.read_text().splitlines()[1:]] == ["4", "6", "8"]

    def test_json(self, capsys):
        code, out, _ = run(capsys, *self.ARGS, "--json")
        assert code == 0
        record = json.loads(out)
        assert record["rng"] == "numpy.random.Philox"
        assert record["config"]["seed"] == 5
        assert [p["snr_db"] for p in record["points"]] == [4.0, 6.0, 8.0]

    def test_seed_required(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["simulate", "-M", "4", "--row", "1,-2", "--snr", "4"])
        assert excinfo.value.code == 4

    def test_bad_snr_range(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["simulate", "-M", "4", "--row", "1,-2", "--seed", "1", "--snr", "8:4:0"])
        assert excinfo.value.code == 4

    def test_zero_trials(self, capsys):
        code, _, _ = run(capsys, "simulate", "-M", "4", "--row", "1,-2", "--seed", "1", "--snr", "4", "--trials", "0")
        assert code == 4


class TestCodec:
    """Tests for `qam-index codec`."""

    def test_encode(self, capsys):
        code, out, _ = run(capsys, "codec", "encode", "-M", "4", "--row", "1,-2", "--message", "1,0")
        assert code == 0
        assert out.strip() == "(1,-2)"

    def test_decode_with_side_info(self, capsys):
        code, out, _ = run(
            capsys,
            "codec", "decode", "-M", "4", "--row", "1,-2",
            "--received=-0.9,0.6", "--subset", "1", "--side-values", "0",
        )
        assert code == 0
        assert out.strip() == "(0,0)"

    def test_decode_with_unreduced_side_value(self, capsys):
        """--side-values 3 is -1 in Z_4."""
        code, out, _ = run(
            capsys,
            "codec", "decode", "-M", "4", "--row", "1,-2",
            "--received=-0.9,0.6", "--subset", "1", "--side-values", "3",
        )
        assert code == 0
        assert out.strip() == "(-1,-2)"

    def test_decode_without_side_info(self, capsys):
        code, out, _ = run(capsys, "codec", "decode", "-M", "4", "--row", "1,-2", "--received", "1.1,-1.9")
        assert code == 0
        assert out.strip() == "(1,0)"

    def test_labels(self, capsys):
        code, out, _ = run(capsys, "codec", "labels", "-M", "4", "--row", "1,-2")
        assert code == 0
        assert len(out.splitlines()) == 16

    def test_labels_over_budget(self, capsys, settings_env):
        settings_env(subcode_budget=1000)
        code, _, err = run(capsys, "codec", "labels", "-M", "64", "--row", "1,16,18,-9,21")
        assert code == 3
        assert "constellation labels" in err

    def test_wrong_message_length(self, capsys):
        code, _, _ = run(capsys, "codec", "encode", "-M", "4", "--row", "1,-2", "--message", "1,0,0")
        assert code == 4


class TestCapacity:
    """Tests for `qam-index capacity`."""

    def test_no_side_information(self, capsys):
        code, out, _ = run(capsys, "capacity", "--rates", "0.5,0.5")
        assert code == 0
        assert out.strip() == "S={}: 4.77 dB"

    def test_zero_db(self, capsys):
        _, out, _ = run(capsys, "capacity", "--rates", "0.5,0.5", "--subset", "1")
        assert out.strip() == "S={1}: 0.00 dB"

    def test_no_minimum(self, capsys):
        _, out, _ = run(capsys, "capacity", "--rates", "0.5,0.5", "--subset", "1,2")
        assert out.strip() == "S={1,2}: no minimum SNR"

    def test_json(self, capsys):
        _, out, _ = run(capsys, "capacity", "-K", "2", "--rates", "0.5,0.5", "--subset", "1,2", "--json")
        assert json.loads(out)["min_snr_db"] is None

    def test_rate_count_mismatch(self, capsys):
        code, _, _ = run(capsys, "capacity", "-K", "3", "--rates", "0.5,0.5")
        assert code == 4
