"""Scenario files, built-in suites, and the four CLI subcommands."""

import subprocess
import sys
from fractions import Fraction

import pytest

from splitfed import Method, ScenarioError, Winner, efficiency_ratio
from splitfed.cli import main
from splitfed.scenarios import (
    BUILTIN_SUITES,
    builtin_names,
    load_scenario,
    load_suite,
    parse_scenario_text,
)

RAW_TEXT = """
# raw-parameter scenario
name = demo
K = 100
N = 1_000_000
p = 1_000_000
q = 100
eta = 0.1
variant = sync
epochs = 2
"""

MODEL_TEXT = """
name = tiny
layer_widths = 4, 3, 2
cut_index = 1
K = 2
p = 6
seed = 42
"""


# --- parsing -----------------------------------------------------------------

def test_parse_raw_scenario():
    sc = parse_scenario_text(RAW_TEXT)
    assert sc.name == "demo" and sc.variant == "sync" and sc.epochs == 2
    params = sc.params()
    assert (params.clients, params.model_params) == (100, 1_000_000)
    assert params.client_fraction == 0.1


def test_parse_model_scenario():
    sc = parse_scenario_text(MODEL_TEXT)
    assert sc.is_model_form
    params = sc.params()
    assert params.model_params == 23
    assert params.smashed_size == 3
    assert params.client_fraction == Fraction(15, 23)


def test_parse_eta_as_exact_rational():
    sc = parse_scenario_text("K = 2\np = 6\nN = 23\nq = 3\neta = 15/23\n")
    assert sc.params().client_fraction == Fraction(15, 23)


def test_parse_rejects_mixed_forms():
    with pytest.raises(ScenarioError):
        parse_scenario_text(RAW_TEXT + "layer_widths = 4,3,2\ncut_index = 1\n")


def test_parse_rejects_incomplete_forms():
    with pytest.raises(ScenarioError):
        parse_scenario_text("K = 2\np = 6\n")  # neither form
    with pytest.raises(ScenarioError):
        parse_scenario_text("K = 2\np = 6\nN = 10\nq = 2\n")  # eta missing
    with pytest.raises(ScenarioError):
        parse_scenario_text("K = 2\np = 6\nlayer_widths = 4,3,2\n")  # cut missing


def test_parse_rejects_bad_lines():
    with pytest.raises(ScenarioError):
        parse_scenario_text("K 2\n")
    with pytest.raises(ScenarioError):
        parse_scenario_text("K = 2\nK = 3\n")
    with pytest.raises(ScenarioError):
        parse_scenario_text("flux = 9\n")
    with pytest.raises(ScenarioError):
        parse_scenario_text("K = two\n")
    with pytest.raises(ScenarioError):
        parse_scenario_text(RAW_TEXT + "variant = fancy\n")


def test_parse_grids():
    sc = parse_scenario_text(RAW_TEXT + "grid.K = 1, 10, 100\ngrid.eta = 0.1, 0.5\n")
    assert sc.grids["grid.K"] == [1, 10, 100]
    assert sc.grids["grid.eta"] == [0.1, 0.5]
    axes = sc.grid()
    assert axes["clients"] == [1, 10, 100]
    assert axes["model_params"] == 1_000_000


# --- built-ins ---------------------------------------------------------------

def test_builtin_names_resolve():
    for name in builtin_names():
        assert load_scenario(name).name


def test_suite_alias_points_at_first_case():
    assert load_scenario("biobank").name == "biobank-case-1"
    assert load_scenario("smartwatch").name == "smartwatch-case-1"


def test_builtin_regimes():
    expected = {
        "biobank": Winner.SPLIT,
        "smartwatch-case-1": Winner.SPLIT,
        "hospital-case-3": Winner.FEDERATED,
        "smartwatch-case-3": Winner.FEDERATED,
    }
    for name, winner in expected.items():
        params = load_scenario(name).params()
        assert efficiency_ratio(params, Method.SPLIT_SYNC).winner is winner, name


def test_suites_have_three_cases():
    for suite, cases in BUILTIN_SUITES.items():
        assert len(cases) == 3
        assert len(load_suite(suite)) == 3


def test_unknown_scenario_is_config_error():
    with pytest.raises(ScenarioError):
        load_scenario("no-such-scenario")


# --- analyze -----------------------------------------------------------------

def test_analyze_builtin_stdout(capsys):
    assert main(["analyze", "--scenario", "hospital-case-3"]) == 0
    out = capsys.readouterr().out
    assert "winner: Federated" in out
    assert "SplitSync" in out and "Federated" in out


def test_analyze_csv_golden(tmp_path, capsys):
    scenario = tmp_path / "s.txt"
    scenario.write_text(MODEL_TEXT)
    csv_path = tmp_path / "out.csv"
    assert main(["analyze", "--scenario", str(scenario), "--csv", str(csv_path)]) == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("method,K,N,p,q,eta,epochs")
    assert lines[1].startswith("SplitSync,2,23,6,3,0.652173913043,1,33,66,132,264,")
    assert lines[2].startswith("SplitNoSync,2,23,6,3,0.652173913043,1,18,36,72,144,")
    assert lines[3].startswith("Federated,2,23,6,3,0.652173913043,1,46,92,184,368,")


def test_analyze_csv_byte_stable(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["analyze", "--scenario", "smartwatch-case-2", "--csv", str(a)]) == 0
    assert main(["analyze", "--scenario", "smartwatch-case-2", "--csv", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_analyze_missing_scenario_exits_2(capsys):
    assert main(["analyze", "--scenario", "nowhere.conf"]) == 2


def test_analyze_divisibility_exits_3(tmp_path, capsys):
    scenario = tmp_path / "odd.txt"
    scenario.write_text("K = 2\np = 7\nN = 10\nq = 1\neta = 0.5\n")
    assert main(["analyze", "--scenario", str(scenario)]) == 3
    assert main(["analyze", "--scenario", str(scenario), "--lenient-shards"]) == 0


# --- simulate ----------------------------------------------------------------

def test_simulate_golden_exact_match(tmp_path, capsys):
    ledger = tmp_path / "ledger.csv"
    losses = tmp_path / "loss.csv"
    code = main(["simulate", "--scenario", "tiny-dense",
                 "--csv", str(ledger), "--loss-csv", str(losses)])
    assert code == 0
    out = capsys.readouterr().out
    assert "verification: exact match" in out
    assert ledger.read_text().splitlines()[0] == "epoch,sender,receiver,kind,scalar_count"
    assert losses.read_text().splitlines()[0] == "epoch,loss"


def test_simulate_all_variants_verify(tmp_path, capsys):
    for variant in ("sync", "nosync"):
        assert main(["simulate", "--scenario", "tiny-dense", "--variant", variant]) == 0
    # sync_batch and federated ride in via the scenario file
    for extra in ("variant = sync_batch", "variant = federated"):
        scenario = tmp_path / "v.txt"
        scenario.write_text(MODEL_TEXT + extra + "\n")
        assert main(["simulate", "--scenario", str(scenario)]) == 0


def test_simulate_injected_fault_exits_4(capsys):
    assert main(["simulate", "--scenario", "tiny-dense", "--inject-fault"]) == 4
    assert "mismatch" in capsys.readouterr().out


def test_simulate_guard_exits_3(tmp_path, capsys):
    big = tmp_path / "big.txt"
    big.write_text("layer_widths = 4, 3, 2\ncut_index = 1\nK = 2\np = 200_000\n")
    assert main(["simulate", "--scenario", str(big)]) == 3


def test_simulate_raw_scenario_exits_2(tmp_path, capsys):
    raw = tmp_path / "raw.txt"
    raw.write_text(RAW_TEXT)
    assert main(["simulate", "--scenario", str(raw)]) == 2


def test_simulate_ledger_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--scenario", "tiny-dense", "--csv", str(a)]) == 0
    assert main(["simulate", "--scenario", "tiny-dense", "--csv", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_env_seed_override(tmp_path, monkeypatch, capsys):
    default_loss = tmp_path / "default.csv"
    assert main(["simulate", "--scenario", "tiny-dense", "--loss-csv", str(default_loss)]) == 0
    override_loss = tmp_path / "override.csv"
    monkeypatch.setenv("SPLITFED_SEED", "7")
    assert main(["simulate", "--scenario", "tiny-dense", "--loss-csv", str(override_loss)]) == 0
    assert default_loss.read_bytes() != override_loss.read_bytes()
    monkeypatch.setenv("SPLITFED_SEED", "not-a-number")
    assert main(["simulate", "--scenario", "tiny-dense"]) == 2


# --- breakeven ---------------------------------------------------------------

def test_breakeven_csv_values(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    code = main(["breakeven", "--p", "1000", "--q", "10", "--eta", "1",
                 "--k-range", "1:100:x10", "--csv", str(out)])
    assert code == 0
    assert out.read_text() == "K,N_break_even\n1,20000\n10,2000\n100,200\n"

    nosync = tmp_path / "nosync.csv"
    assert main(["breakeven", "--p", "1000", "--q", "10", "--eta", "1",
                 "--variant", "nosync", "--k-range", "1,10,100", "--csv", str(nosync)]) == 0
    assert nosync.read_text() == "K,N_break_even\n1,10000\n10,1000\n100,100\n"


def test_breakeven_linear_in_q(tmp_path, capsys):
    single = tmp_path / "q10.csv"
    double = tmp_path / "q20.csv"
    base = ["breakeven", "--p", "1000", "--eta", "0.5", "--k-range", "1:5:1"]
    assert main(base + ["--q", "10", "--csv", str(single)]) == 0
    assert main(base + ["--q", "20", "--csv", str(double)]) == 0
    ns1 = [float(line.split(",")[1]) for line in single.read_text().splitlines()[1:]]
    ns2 = [float(line.split(",")[1]) for line in double.read_text().splitlines()[1:]]
    # CSV carries 12 significant digits, so compare at that quantization
    assert ns2 == pytest.approx([2 * n for n in ns1], rel=1e-11)


def test_breakeven_scenario_source(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["breakeven", "--scenario", "biobank", "--k-range", "10:1000:x10",
                 "--csv", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 4


def test_breakeven_svg(tmp_path, capsys):
    svg = tmp_path / "curve.svg"
    assert main(["breakeven", "--p", "1000", "--q", "10", "--eta", "1",
                 "--k-range", "1:10000:x10", "--svg", str(svg)]) == 0
    text = svg.read_text()
    assert text.startswith("<svg") and "<polyline" in text
    assert "split learning cheaper" in text and "federated learning cheaper" in text


def test_breakeven_bad_range_exits_3(capsys):
    assert main(["breakeven", "--p", "10", "--q", "1", "--eta", "0", "--k-range", "5:1:1"]) == 3
    assert main(["breakeven", "--p", "10", "--q", "1", "--eta", "0", "--k-range", "0,3"]) == 3
    assert main(["breakeven", "--p", "10", "--q", "1", "--eta", "0", "--k-range", "a:b:c"]) == 3


def test_breakeven_missing_params_exits_2(capsys):
    assert main(["breakeven", "--k-range", "1:10:1"]) == 2


# --- sweep -------------------------------------------------------------------

def test_sweep_single_cell_matches_analyze(tmp_path, capsys):
    scenario = tmp_path / "s.txt"
    scenario.write_text(MODEL_TEXT)
    a, b = tmp_path / "analyze.csv", tmp_path / "sweep.csv"
    assert main(["analyze", "--scenario", str(scenario), "--csv", str(a)]) == 0
    assert main(["sweep", "--scenario", str(scenario), "--csv", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_grid_rows(tmp_path, capsys):
    scenario = tmp_path / "grid.txt"
    scenario.write_text(RAW_TEXT + "grid.K = 1, 10, 100\ngrid.N = 1000, 1_000_000\n")
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--scenario", str(scenario), "--csv", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 6 * 3  # 6 cells, one row per method


def test_sweep_smartwatch_suite_winner_progression(tmp_path, capsys):
    out = tmp_path / "suite.csv"
    assert main(["sweep", "--scenario", "smartwatch", "--csv", str(out)]) == 0
    lines = out.read_text().splitlines()[1:]
    assert len(lines) == 9
    winners = [line.split(",")[-1] for line in lines]
    per_cell = [winners[i] for i in range(0, 9, 3)]
    assert per_cell[0] == "Split"
    assert per_cell[1] in ("Split", "Tie")
    assert per_cell[2] == "Federated"
    # N and K shrink across the cases
    ks = [int(line.split(",")[1]) for line in lines[::3]]
    ns = [int(line.split(",")[2]) for line in lines[::3]]
    assert ks == sorted(ks, reverse=True) and ns == sorted(ns, reverse=True)


def test_sweep_error_rows_marked(tmp_path, capsys):
    scenario = tmp_path / "odd.txt"
    scenario.write_text("K = 2\nN = 10\nq = 1\neta = 0.5\np = 4\ngrid.p = 4, 7\n")
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--scenario", str(scenario), "--csv", str(out)]) == 0
    lines = out.read_text().splitlines()[1:]
    assert len(lines) == 4  # 3 method rows + 1 error row
    assert sum(1 for line in lines if line.startswith("Error,")) == 1


def test_sweep_empty_grid_exits_2(tmp_path, capsys):
    scenario = tmp_path / "empty.txt"
    scenario.write_text(RAW_TEXT + "grid.K =\n")
    assert main(["sweep", "--scenario", str(scenario)]) == 2


# --- console entry point -----------------------------------------------------

def test_module_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "splitfed.cli", "analyze", "--scenario", "biobank"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "winner: Split" in proc.stdout
