import json

import pytest

from treasurehunt.cli import main, parse_grid, UsageError
from treasurehunt.engine import parse_log  # noqa: F401  (used in docs example)
from treasurehunt.hexmap import parse_map, validate_map


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_grid_parsing():
    assert parse_grid("5:35:5") == (5, 10, 15, 20, 25, 30, 35)
    assert parse_grid("5,20,35") == (5, 20, 35)
    with pytest.raises(UsageError):
        parse_grid("5:35")
    with pytest.raises(UsageError):
        parse_grid("bogus")


def test_genmap_writes_valid_map(tmp_path, capsys):
    out = tmp_path / "m.json"
    code, stdout, _ = run(capsys, "genmap", "--seed", "1", "--out", str(out))
    assert code == 0
    assert "mines=35" in stdout and "violations=0" in stdout
    tmap = parse_map(out.read_text())
    assert validate_map(tmap) == []


def test_genmap_zero_mines(tmp_path, capsys):
    out = tmp_path / "empty.json"
    code, stdout, _ = run(capsys, "genmap", "--mines", "0", "--out", str(out))
    assert code == 0
    assert parse_map(out.read_text()).mines == []


def test_genmap_infeasible_exits_2(tmp_path, capsys):
    code, _, stderr = run(
        capsys, "genmap", "--mines", "700", "--out", str(tmp_path / "x.json")
    )
    assert code == 2
    assert "failed" in stderr


def test_solve_game_prints_golden_numbers(capsys):
    code, stdout, _ = run(capsys, "solve", "--model", "game")
    assert code == 0
    report = json.loads(stdout)
    assert abs(report["protection"]["C"] - 20.42) < 0.01
    assert abs(report["protection"]["x"] - 3.96) < 0.01


def test_solve_bounds(capsys):
    code, stdout, _ = run(capsys, "solve", "--model", "bounds")
    report = json.loads(stdout)["no_protection"]
    assert abs(report["sequential_lower"] - 21.28) < 0.02
    assert abs(report["third_threshold"] - 20.263) < 0.01
    assert abs(report["info_gain"] - 4.97) < 0.02
    assert abs(report["sequential_upper"] - 25.1) < 0.05
    assert abs(report["total_payoff_upper"] - 10.07) < 0.05
    assert report["first_lower"] == 16.0
    assert abs(report["first_upper"] - 16.5) < 0.01


def test_solve_abstract_closed_forms(capsys):
    code, stdout, _ = run(
        capsys, "solve", "--model", "abstract", "--Rr", "16", "--Ra", "26",
        "--n", "4", "--beta", "2", "--alpha", "0.5",
    )
    report = json.loads(stdout)["abstract"]
    # with alpha = 0.5, 2*alpha = 1, so the efforts equal the closed forms
    assert abs(report["protected_r"] - 21.0) < 1e-9
    assert abs(report["equilibrium_r"] - 17.625) < 1e-9


def test_solve_two_stage(capsys):
    code, stdout, _ = run(capsys, "solve", "--model", "two-stage", "--R", "100", "--A", "100")
    report = json.loads(stdout)["two_stage"]
    assert report == {"c1": 50.0, "c2": 50.0, "x": 12.5}


def test_sweep_writes_csv_and_manifest(tmp_path, capsys):
    out = tmp_path / "sweep"
    code, stdout, _ = run(
        capsys, "sweep", "--condition", "protection", "--reps", "2",
        "--grid", "20,30", "--seed", "4", "--out", str(out),
    )
    assert code == 0
    assert (out / "sweep.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "sweep"
    assert manifest["options"]["reps"] == 2
    assert "argmax" in json.loads((out / "summary.json").read_text())


def test_sweep_deterministic_output(tmp_path, capsys):
    args = ["sweep", "--condition", "no_protection", "--reps", "2",
            "--grid", "15,25", "--seed", "9"]
    run(capsys, *args, "--out", str(tmp_path / "a"))
    run(capsys, *args, "--out", str(tmp_path / "b"))
    assert (tmp_path / "a" / "sweep.csv").read_text() == (
        tmp_path / "b" / "sweep.csv"
    ).read_text()


def test_analyze_recovers_bot_thresholds(tmp_path, capsys):
    # four games per player so every cost level shows up in both contexts
    from treasurehunt.agents import Strategy, make_agents
    from treasurehunt.engine import Condition, GameConfig, run_game, write_log
    from treasurehunt.hexmap import generate_map

    records = []
    for game_index in range(1, 5):
        records += run_game(
            GameConfig(condition=Condition.SINGLETON, seed=8, game_index=game_index),
            generate_map(seed=8 + game_index),
            make_agents(Strategy(20, 25), 4),
        )
    log = tmp_path / "log.csv"
    write_log(records, log)
    out = tmp_path / "analysis"
    code, stdout, _ = run(capsys, "analyze", "--log", str(log), "--out", str(out))
    assert code == 0
    fits = (out / "threshold_fits.csv").read_text().strip().splitlines()[1:]
    assert len(fits) == 8  # 4 players x 2 contexts
    for line in fits:
        player, context, threshold, quality, n = line.split(",")
        assert float(quality) == 1.0
        assert float(threshold) == (20 if context == "initial" else 25)


def test_analyze_exclude_last_zero_keeps_everything(tmp_path, capsys):
    from treasurehunt.agents import Strategy, make_agents
    from treasurehunt.engine import Condition, GameConfig, run_game, write_log
    from treasurehunt.hexmap import generate_map

    records = run_game(
        GameConfig(condition=Condition.PROTECTION, seed=2),
        generate_map(seed=2),
        make_agents(Strategy(25, 25), 4),
    )
    log = tmp_path / "log.csv"
    write_log(records, log)
    out = tmp_path / "a0"
    code, _, _ = run(capsys, "analyze", "--log", str(log), "--out", str(out),
                     "--exclude-last", "0")
    assert code == 0
    labeled = (out / "labeled.csv").read_text()
    last_rounds = [line for line in labeled.splitlines() if ",50," in line]
    assert any(not line.endswith("excluded") for line in last_rounds)


def test_analyze_empty_log_ok(tmp_path, capsys):
    from treasurehunt.engine import LOG_COLUMNS

    log = tmp_path / "empty.csv"
    log.write_text(",".join(LOG_COLUMNS) + "\n")
    code, stdout, _ = run(capsys, "analyze", "--log", str(log), "--out", str(tmp_path / "out"))
    assert code == 0
    assert "analyzed 0 records" in stdout


def test_analyze_malformed_log_exits_2(tmp_path, capsys):
    log = tmp_path / "bad.csv"
    log.write_text("not,a,log\n1,2,3\n")
    code, _, stderr = run(capsys, "analyze", "--log", str(log), "--out", str(tmp_path / "o"))
    assert code == 2
    assert "line 1" in stderr


def test_config_file_provides_defaults_flags_override(tmp_path, capsys):
    config = tmp_path / "conf.json"
    config.write_text(json.dumps({"genmap": {"mines": 10, "seed": 77}}))
    out = tmp_path / "m.json"
    code, stdout, _ = run(
        capsys, "--config", str(config), "genmap", "--out", str(out), "--mines", "5"
    )
    assert code == 0
    tmap = parse_map(out.read_text())
    assert len(tmap.mines) == 5  # flag beats config
    assert tmap.seed == 77  # config beats default


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["solve", "--model", "nonsense"])
    assert excinfo.value.code == 2


def test_output_root_env_var(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("TREASUREHUNT_OUT_ROOT", str(tmp_path))
    code, _, _ = run(capsys, "genmap", "--seed", "3", "--out", "maps/m.json")
    assert code == 0
    assert (tmp_path / "maps" / "m.json").exists()
