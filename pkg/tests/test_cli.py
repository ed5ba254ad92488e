import json

from mlsd.cli import main


def run(args):
    return main(args)


def test_gen_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["gen", "random", "--n", "3", "--tau-max", "3", "--tau-min", "-2",
                "--seed", "7", "--out", str(a)]) == 0
    assert run(["gen", "random", "--n", "3", "--tau-max", "3", "--tau-min", "-2",
                "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_named_instances(tmp_path):
    c2 = tmp_path / "c2.json"
    run(["gen", "appendix-c2", "--out", str(c2)])
    d = json.loads(c2.read_text())
    assert d["n"] == 1 and d["k"] == 1 and d["payoffs"] == [[0.0, 1.0, 1.0]]

    c1 = tmp_path / "c1.json"
    run(["gen", "appendix-c1", "--k", "2", "--m", "5", "--out", str(c1)])
    d = json.loads(c1.read_text())
    assert d["n"] == 10 and d["k"] == 2 and d["tau_max"] == 5


def test_oracle_prints_opt(tmp_path, capsys):
    inst = tmp_path / "c2.json"
    run(["gen", "appendix-c2", "--out", str(inst)])
    capsys.readouterr()
    assert run(["oracle", "--instance", str(inst), "--T", "3"]) == 0
    assert capsys.readouterr().out.strip() == "OPT=2"


def test_plan_epsilon_sets_cutoff(tmp_path):
    inst = tmp_path / "c2.json"
    plan = tmp_path / "plan.json"
    run(["gen", "appendix-c2", "--out", str(inst)])
    assert run(["plan", "--instance", str(inst), "--epsilon", "0.5",
                "--seed", "3", "--out", str(plan)]) == 0
    d = json.loads(plan.read_text())
    assert d["tau_L"] == -2
    assert d["arms"][0]["interval"] == {"u": 1, "l": -2}


def test_simulate_trace_columns_and_determinism(tmp_path):
    inst = tmp_path / "i.json"
    run(["gen", "random", "--n", "3", "--k", "2", "--seed", "1", "--out", str(inst)])
    t1, t2 = tmp_path / "t1.csv", tmp_path / "t2.csv"
    common = ["simulate", "--instance", str(inst), "--T", "25",
              "--epsilon", "0.5", "--seed", "9"]
    assert run(common + ["--out", str(t1)]) == 0
    assert run(common + ["--out", str(t2)]) == 0
    assert t1.read_bytes() == t2.read_bytes()
    header = t1.read_text().splitlines()[0]
    assert header == "t,nu_0,nu_1,nu_2,candidates,played,virtual_payoff,actual_payoff"


def test_learn_csv_columns_and_determinism(tmp_path):
    inst = tmp_path / "c2.json"
    out = tmp_path / "reg.csv"
    out2 = tmp_path / "reg2.csv"
    run(["gen", "appendix-c2", "--out", str(inst)])
    args = ["learn", "--instance", str(inst), "--T", "512", "--epsilon", "0.25",
            "--seed", "1", "--seeds", "2"]
    assert run(args + ["--out", str(out)]) == 0
    assert run(args + ["--out", str(out2)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "seed,T,exploration_length,R,Reg"
    assert len(lines) == 3
    assert out.read_bytes() == out2.read_bytes()


def test_missing_file_error(capsys):
    assert run(["oracle", "--instance", "/nonexistent.json", "--T", "3"]) == 1
    assert "missing file" in capsys.readouterr().err


def test_oracle_budget_error(tmp_path, capsys):
    inst = tmp_path / "i.json"
    run(["gen", "random", "--n", "4", "--tau-max", "3", "--out", str(inst)])
    capsys.readouterr()
    assert run(["oracle", "--instance", str(inst), "--T", "100",
                "--budget", "10"]) == 1
    assert "oracle budget exceeded" in capsys.readouterr().err


def test_learn_horizon_too_small(tmp_path, capsys):
    inst = tmp_path / "c2.json"
    run(["gen", "appendix-c2", "--out", str(inst)])
    capsys.readouterr()
    assert run(["learn", "--instance", str(inst), "--T", "10",
                "--epsilon", "0.25", "--out", str(tmp_path / "r.csv")]) == 1
    assert "minimum viable T" in capsys.readouterr().err


def test_plot_data_ratio_vs_m(tmp_path):
    out = tmp_path / "plot.csv"
    assert run(["plot-data", "ratio-vs-m", "--k", "1", "--m-list", "2,4",
                "--T", "300", "--seeds", "5", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "series,x,y"
    assert len(lines) == 5  # ratio and gamma reference rows for both m values


def test_solve_lp_prints_value(tmp_path, capsys):
    inst = tmp_path / "c2.json"
    run(["gen", "appendix-c2", "--out", str(inst)])
    capsys.readouterr()
    assert run(["solve-lp", "--instance", str(inst), "--epsilon", "0.5"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("LP*=0.666666666667")
