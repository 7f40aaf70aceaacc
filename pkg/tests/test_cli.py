"""CLI surface: subcommands, exit codes, output documents."""

import csv
import io
import json

import pytest

from stopgame import GameSpec
from stopgame.cli import main

EXAMPLE_SPEC = {
    "horizon": 5,
    "delta": 0.8,
    "f": {"kind": "power", "coeff": 1.0, "exponent": 2.0},
    "g": {"kind": "power", "coeff": 1.0, "exponent": 1.0},
}


@pytest.fixture
def spec_path(tmp_path):
    path = tmp_path / "game.json"
    path.write_text(json.dumps(EXAMPLE_SPEC))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def read_csv(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def manifest_lines(text):
    return [l for l in text.splitlines() if l.startswith("# manifest:")]


class TestSolve:
    def test_json_document(self, capsys, spec_path):
        code, out, _ = run(capsys, "solve", "--game", spec_path)
        assert code == 0
        doc = json.loads(out)
        assert doc["horizon"] == 5
        assert doc["thresholds"][0] == pytest.approx(0.62281, abs=1e-5)
        assert doc["manifest"]["subcommand"] == "solve"

    def test_csv_document(self, capsys, spec_path):
        code, out, _ = run(capsys, "solve", "--game", spec_path, "--format", "csv", "--horizon", "1")
        assert code == 0
        rows = read_csv(out)
        assert len(rows) == 1
        assert rows[0]["period"] == "1"
        assert float(rows[0]["threshold"]) == 0.0
        assert manifest_lines(out)

    def test_undiscounted_warning(self, capsys, spec_path):
        code, out, err = run(capsys, "solve", "--game", spec_path, "--horizon", "inf", "--delta", "1.0")
        assert code == 0
        assert "warning" in err.lower()
        doc = json.loads(out)
        assert doc["thresholds"] == [1.0]
        assert "not an equilibrium" in doc["warning"]

    def test_output_files(self, capsys, spec_path, tmp_path):
        base = tmp_path / "sol"
        code, _, _ = run(capsys, "solve", "--game", spec_path, "--out", str(base))
        assert code == 0
        doc = json.loads((tmp_path / "sol.json").read_text())
        assert doc["manifest"]["outputs"] == [str(base) + ".json", str(base) + ".csv"]
        rows = read_csv((tmp_path / "sol.csv").read_text())
        assert len(rows) == 5

    def test_inline_spec(self, capsys):
        code, out, _ = run(capsys, "solve", "--game", json.dumps(EXAMPLE_SPEC), "--horizon", "2")
        assert code == 0
        doc = json.loads(out)
        assert doc["thresholds"][0] == pytest.approx(0.51640, abs=1e-5)

    def test_json_reparses_to_equal_values(self, capsys, spec_path):
        from stopgame import RegularProfile, solve_finite

        code, out, _ = run(capsys, "solve", "--game", spec_path)
        assert code == 0
        doc = json.loads(out)
        doc.pop("manifest")
        assert RegularProfile.from_dict(doc) == solve_finite(GameSpec.from_dict(EXAMPLE_SPEC))
        assert GameSpec.from_dict(EXAMPLE_SPEC) == GameSpec.from_dict(json.loads(json.dumps(EXAMPLE_SPEC)))


class TestBounds:
    def test_two_period(self, capsys, spec_path):
        code, out, _ = run(capsys, "bounds", "--game", spec_path, "--horizon", "2")
        assert code == 0
        doc = json.loads(out)
        assert doc["value"] == pytest.approx(1 / 3, abs=1e-6)
        assert doc["grid_step"] == 1e-3

    def test_infinite(self, capsys, spec_path):
        code, out, _ = run(capsys, "bounds", "--game", spec_path, "--horizon", "inf")
        assert code == 0
        assert json.loads(out)["value"] == pytest.approx(0.36603, abs=5e-5)

    def test_cubic_receiver_zero(self, capsys):
        spec = dict(EXAMPLE_SPEC, g={"kind": "power", "coeff": 1.0, "exponent": 3.0})
        code, out, _ = run(capsys, "bounds", "--game", json.dumps(spec))
        assert code == 0
        assert json.loads(out)["value"] == 0.0


class TestVerify:
    def test_equilibrium_exit_zero(self, capsys, spec_path):
        code, out, _ = run(capsys, "verify", "--game", spec_path, "--horizon", "2", "--delta", "0.5")
        assert code == 0
        assert "IsPBE" in out

    def test_nonequilibrium_exit_three(self, capsys, spec_path):
        code, out, _ = run(capsys, "verify", "--game", spec_path, "--horizon", "2", "--delta", "0.2")
        assert code == 3
        doc = json.loads(out)
        assert doc["verdict"] == "NotPBE"
        assert doc["worst_site"] == {"period": 1, "player": "receiver", "site": "message continue"}

    def test_table_written_alongside_json_file(self, capsys, spec_path, tmp_path):
        out_path = tmp_path / "report.json"
        code, out, _ = run(capsys, "verify", "--game", spec_path, "--horizon", "2",
                           "--delta", "0.2", "--out", str(out_path))
        assert code == 3
        assert "worst site: period 1, receiver" in out
        doc = json.loads(out_path.read_text())
        assert doc["verdict"] == "NotPBE"
        assert len(doc["sender"][0]["states"]) == 1000

    def test_malformed_profile_exit_two(self, capsys, spec_path, tmp_path):
        bad = tmp_path / "profile.json"
        bad.write_text(json.dumps({"receiver": []}))
        code, _, err = run(capsys, "verify", "--game", spec_path, "--profile", str(bad))
        assert code == 2
        assert "error" in err

    def test_json_format(self, capsys, spec_path):
        code, out, _ = run(
            capsys, "verify", "--game", spec_path, "--horizon", "2", "--delta", "0.2",
            "--format", "json",
        )
        assert code == 3
        doc = json.loads(out)
        assert doc["verdict"] == "NotPBE"
        assert doc["worst_site"]["period"] == 1


class TestSimulate:
    def test_deterministic_payload(self, capsys, spec_path):
        def payload():
            code, out, _ = run(capsys, "simulate", "--game", spec_path, "--reps", "500", "--seed", "11")
            assert code == 0
            doc = json.loads(out)
            doc.pop("manifest")
            return doc

        assert payload() == payload()

    def test_single_replication_echoes_playout(self, capsys, spec_path):
        code, out, _ = run(capsys, "simulate", "--game", spec_path, "--reps", "1", "--seed", "4")
        assert code == 0
        doc = json.loads(out)
        assert doc["playout"]["stop_time"] is not None
        assert doc["playout"]["sender_payoff"] == doc["mean_sender"]

    def test_histogram_csv(self, capsys, spec_path, tmp_path):
        base = tmp_path / "sim"
        code, _, _ = run(capsys, "simulate", "--game", spec_path, "--reps", "200", "--seed", "3",
                         "--out", str(base))
        assert code == 0
        rows = read_csv((tmp_path / "sim.csv").read_text())
        assert sum(int(r["count"]) for r in rows) == 200

    def test_json_reparses_to_equal_result(self, capsys, spec_path):
        from stopgame import SimulationResult, from_regular, simulate, solve_finite

        code, out, _ = run(capsys, "simulate", "--game", spec_path, "--reps", "300", "--seed", "8")
        assert code == 0
        doc = json.loads(out)
        doc.pop("manifest")
        game = GameSpec.from_dict(EXAMPLE_SPEC)
        direct = simulate(game, from_regular(solve_finite(game)), 300, seed=8)
        assert SimulationResult.from_dict(doc) == direct


class TestSweep:
    def test_reference_table(self, capsys, spec_path):
        code, out, _ = run(capsys, "sweep", "--game", spec_path, "--values", "1,2,3,4,5,10",
                           "--format", "csv")
        assert code == 0
        rows = read_csv(out)
        expected = {
            "1": 0.0, "2": 0.51640, "3": 0.58319, "4": 0.61029, "5": 0.62281, "10": 0.63460,
            "inf": 0.63500,
        }
        assert [r["param"] for r in rows] == list(expected)
        for row in rows:
            assert float(row["threshold"]) == pytest.approx(expected[row["param"]], abs=1e-5)
            assert row["threshold_5dp"] == f"{expected[row['param']]:.5f}"

    def test_delta_sweep_verdicts(self, capsys, spec_path):
        code, out, _ = run(capsys, "sweep", "--game", spec_path, "--horizon", "2",
                           "--param", "delta", "--values", "0.2,0.4", "--format", "csv")
        assert code == 0
        rows = read_csv(out)
        assert [r["pbe_verdict"] for r in rows] == ["NotPBE", "IsPBE"]
        assert [r["regime"] for r in rows] == ["NoResponsivePBE", "UniqueResponsivePBE"]

    def test_empty_range_exit_two(self, capsys, spec_path):
        code, _, err = run(capsys, "sweep", "--game", spec_path, "--values", "")
        assert code == 2
        assert "error" in err

    def test_range_flag(self, capsys, spec_path):
        code, out, _ = run(capsys, "sweep", "--game", spec_path, "--range", "1:3:1",
                           "--no-infinite", "--format", "csv")
        assert code == 0
        assert [r["param"] for r in read_csv(out)] == ["1", "2", "3"]


class TestTransform:
    def test_uniform_game_document(self, capsys, tmp_path):
        spec = dict(EXAMPLE_SPEC, f={"kind": "power", "coeff": 1.0, "exponent": 1.0},
                    distribution={"kind": "cdf", "map": {"kind": "power", "coeff": 1.0, "exponent": 2.0}})
        base = tmp_path / "tg"
        code, _, _ = run(capsys, "transform", "--game", json.dumps(spec), "--out", str(base))
        assert code == 0
        doc = json.loads((tmp_path / "tg.json").read_text())
        assert doc["uniform_game"]["f"] == {"kind": "power", "coeff": 1.0, "exponent": 0.5}
        assert doc["uniform_game"]["distribution"] == {"kind": "uniform"}
        rows = read_csv((tmp_path / "tg.csv").read_text())
        mid = [r for r in rows if r["original_threshold"] == "0.5"][0]
        assert float(mid["uniform_threshold"]) == pytest.approx(0.25, abs=1e-12)


class TestReport:
    def test_writes_figures_and_csv(self, capsys, spec_path, tmp_path):
        base = tmp_path / "rep"
        code, out, _ = run(capsys, "report", "--game", spec_path, "--out", str(base),
                           "--max-horizon", "6")
        assert code == 0
        for suffix in ("_threshold_map.png", "_convergence.png", "_sweep.csv"):
            path = tmp_path / f"rep{suffix}"
            assert path.exists() and path.stat().st_size > 0
        rows = read_csv((tmp_path / "rep_sweep.csv").read_text())
        assert [r["horizon"] for r in rows] == ["1", "2", "3", "4", "5", "6", "inf"]

    def test_requires_out(self, capsys, spec_path):
        code, _, err = run(capsys, "report", "--game", spec_path)
        assert code == 2


class TestInputErrors:
    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "solve", "--game", "/nonexistent/game.json")
        assert code == 2
        assert "not found" in err

    def test_invalid_json_diagnostic(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"horizon": 5,,}')
        code, _, err = run(capsys, "solve", "--game", str(bad))
        assert code == 2
        assert "line 1" in err

    def test_missing_field_diagnostic(self, capsys):
        code, _, err = run(capsys, "solve", "--game", json.dumps({"horizon": 3, "delta": 0.5}))
        assert code == 2
        assert "missing fields" in err

    def test_bad_field_diagnostic(self, capsys):
        spec = dict(EXAMPLE_SPEC, f={"kind": "power", "coeff": -1.0, "exponent": 2.0})
        code, _, err = run(capsys, "solve", "--game", json.dumps(spec))
        assert code == 2
        assert "'f'" in err
