import json
import subprocess
import sys
from pathlib import Path

import pytest

from loopline import cli, scenarios
from loopline.errors import InvariantBreach

GOLDEN = Path(__file__).parent / "golden"


def invoke(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, _ = invoke(capsys, "run", *argv, "--json")
    assert code == 0
    return json.loads(out)


@pytest.fixture
def empty_scenario(tmp_path):
    d = json.loads(scenarios.serialize(scenarios.builtin("fig1a")))
    d["name"] = "empty"
    d["schedule"] = {}
    p = tmp_path / "empty.json"
    p.write_text(json.dumps(d), encoding="utf-8")
    return str(p)


class TestRun:
    def test_fig1a_report(self, capsys):
        r = report(capsys, "fig1a", "--seed", "7")
        assert r["algorithm"] == "numpy.random.PCG64/inverse-cdf-v1"
        assert len(r["events"]) == 1
        ev = r["events"][0]
        assert ev["verdict"] == "EVENT" and ev["version"] == "STRONG"
        assert ev["cut"] == "A,B|C" and ev["probability"] == 0.5
        assert set(r["expected"]) == {"E[A,B]=↓↓", "E[A,B]=↑↑"}

    def test_fig1b_no_events(self, capsys):
        r = report(capsys, "fig1b", "--seed", "7")
        assert r["events"] == []
        basis = sorted(row["basis"] for row in r["final_ket"])
        assert basis == ["↑↑↑", "↓↓↑"]

    def test_weak_flag(self, capsys):
        r = report(capsys, "fig1b", "--version", "weak", "--a-max", "1")
        assert [e["version"] for e in r["events"]] == ["WEAK(1)"]

    def test_repeat_histogram_sums(self, capsys):
        r = report(capsys, "fig1a", "--seed", "3", "--repeat", "200")
        assert sum(r["histogram"].values()) == 200
        assert r["chi_square"]["p_value"] > 0.001

    def test_fig2b_three_way(self, capsys):
        r = report(capsys, "fig2b", "--seed", "1", "--repeat", "3000")
        assert set(r["histogram"]) <= {"b", "c", "b+c@e"}
        assert sum(r["histogram"].values()) == 3000
        assert r["chi_square"]["p_value"] > 0.001

    def test_seed_from_environment(self, capsys, monkeypatch):
        monkeypatch.setenv("LOOPLINE_SEED", "41")
        assert report(capsys, "fig1a")["seed"] == 41
        monkeypatch.setenv("LOOPLINE_SEED", "nope")
        assert invoke(capsys, "run", "fig1a")[0] == 2

    def test_scenario_seed_fallback(self, capsys, monkeypatch):
        monkeypatch.delenv("LOOPLINE_SEED", raising=False)
        assert report(capsys, "fig1a")["seed"] == scenarios.builtin("fig1a").seed

    def test_out_and_log_files(self, capsys, tmp_path):
        out, log = tmp_path / "r.json", tmp_path / "e.jsonl"
        code, stdout, _ = invoke(capsys, "run", "fig1a", "--seed", "7", "--out", str(out), "--log", str(log))
        assert code == 0 and "fig1a" in stdout
        assert json.loads(out.read_text(encoding="utf-8"))["scenario"] == "fig1a"
        lines = log.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1 and json.loads(lines[0])["node"] == "E"

    def test_table_output(self, capsys):
        code, out, _ = invoke(capsys, "run", "fig1a", "--seed", "7")
        assert code == 0 and out.startswith("scenario fig1a")


class TestExitCodes:
    def test_unknown_scenario(self, capsys):
        code, out, err = invoke(capsys, "run", "no-such-scenario")
        assert code == 2 and out == "" and "error" in err

    def test_bad_file(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"name": "x"', encoding="utf-8")
        assert invoke(capsys, "run", str(p))[0] == 2

    def test_a_max_with_strong(self, capsys):
        assert invoke(capsys, "run", "fig1b", "--version", "strong", "--a-max", "3")[0] == 2

    def test_invariant_breach(self, capsys, monkeypatch):
        def boom(*a, **k):
            raise InvariantBreach("forced")
        monkeypatch.setattr(cli, "run_report", boom)
        code, _, err = invoke(capsys, "run", "fig1a")
        assert code == 3 and "invariant" in err

    def test_unknown_format(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["diagram", "fig1a", "--format", "png"])
        assert exc.value.code == 2


class TestDiagram:
    def test_fig1a_golden(self, capsys):
        code, out, _ = invoke(capsys, "diagram", "fig1a")
        assert code == 0
        assert out == (GOLDEN / "fig1a.txt").read_text(encoding="utf-8")

    def test_fig1b_marks_loop(self, capsys):
        out = invoke(capsys, "diagram", "fig1b")[1]
        assert "@" in out

    def test_fig2b_svg_single_third_order_offer(self, capsys):
        out = invoke(capsys, "diagram", "fig2b", "--format", "svg")[1]
        assert out.startswith("<svg") or out.startswith("<?xml")
        assert out.count('class="ow order-3"') == 1
        assert 'class="cw order-3"' not in out

    def test_fig2a_svg_no_third_order(self, capsys):
        out = invoke(capsys, "diagram", "fig2a", "--format", "svg")[1]
        assert "order-3" not in out

    def test_empty_scenario_header_only(self, capsys, empty_scenario):
        out = invoke(capsys, "diagram", empty_scenario)[1]
        assert out.splitlines() == ["# empty: graph, 3 subsystems, horizon 10", "tick A     B     C"]

    def test_deterministic_bytes(self, capsys):
        a = invoke(capsys, "diagram", "eq5-measurement", "--format", "svg")[1]
        b = invoke(capsys, "diagram", "eq5-measurement", "--format", "svg")[1]
        assert a == b


class TestOracle:
    def oracle(self, capsys, *argv):
        code, out, _ = invoke(capsys, "oracle", *argv, "--json")
        assert code == 0
        return json.loads(out)

    def test_fig1a(self, capsys):
        r = self.oracle(capsys, "fig1a", "--cut", "A,B|C")
        assert (r["topological_loop"], r["phase_observable"], r["strong"]) == (False, False, "EVENT")

    def test_fig1b(self, capsys):
        r = self.oracle(capsys, "fig1b", "--cut", "A,B|C")
        assert (r["topological_loop"], r["phase_observable"], r["strong"]) == (True, True, "NO_EVENT")
        assert r["loop_area"] == 12

    def test_fig1b_weak_small_a_max(self, capsys):
        r = self.oracle(capsys, "fig1b", "--cut", "A,B|C", "--a-max", "11.5")
        verdicts = {w["a_max"]: w["verdict"] for w in r["weak"]}
        assert verdicts[1.0] == verdicts[11.5] == "EVENT"
        assert verdicts[16.0] == "NO_EVENT"

    @pytest.mark.parametrize("cut", ["A,Z|C", "A|A", "A,B", "|C"])
    def test_invalid_cut(self, capsys, cut):
        assert invoke(capsys, "oracle", "fig1a", "--cut", cut)[0] == 2

    def test_table_lists_sweep(self, capsys):
        out = invoke(capsys, "oracle", "fig1b", "--cut", "A,B|C")[1]
        assert "STRONG verdict NO_EVENT" in out
        assert "WEAK(a_max=16) verdict NO_EVENT" in out


def test_module_entry_point_is_deterministic(tmp_path):
    cmd = [sys.executable, "-m", "loopline", "run", "fig1a", "--seed", "7", "--repeat", "50", "--json"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a
