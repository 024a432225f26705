import csv
import io
import json
import math
import warnings

import numpy as np
import pytest

from netdesign.cli import main
from netdesign.design import ExperimentConfig, read_partition, read_treatment
from netdesign.graph import IsolatedVertexWarning, cycle_graph, read_edgelist, write_edgelist
from netdesign.interference import Linear
from netdesign.oracle import exact_moments_crd
from netdesign.outcome import sample_gaussian_model
from netdesign.simulate import (
    CSV_COLUMNS,
    ConfigError,
    RunConfig,
    SweepConfig,
    load_config,
    make_spec,
    rows_to_csv,
    run_experiment,
    sweep,
)


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_zero_interference_mse_is_design_variance(tmp_path):
    g = cycle_graph(10)
    write_edgelist(g, tmp_path / "g.txt")
    cfg = RunConfig(family="file", graph_file=str(tmp_path / "g.txt"), N=10, gamma=0.0,
                    designs=("crd",), replications=6000, model_seed=3)
    (row,) = run_experiment(cfg)
    model = sample_gaussian_model(g, Linear(0.0), 3)
    ex = exact_moments_crd(g, ExperimentConfig.for_graph(g), model)
    assert ex.mean_xi == 0
    assert abs(row["mse"] - ex.var_t_ideal) <= 4 * row["se"]
    assert math.isfinite(row["log_mse"])


def test_section_nine_behaviour():
    er = run_experiment(RunConfig(family="er", N=100, density=0.1, replications=2000, designs=("crd", "pbd"), graph_seed=4))
    assert abs(er[0]["log_mse"] - er[1]["log_mse"]) <= 0.7
    pa = run_experiment(RunConfig(family="pa", N=100, pow=1.0, m=2, replications=2000, designs=("crd", "pbd")))
    assert pa[1]["log_mse"] <= pa[0]["log_mse"]


def test_sweep_shapes_and_determinism():
    base = RunConfig(family="pa", N=20, replications=200, designs=("crd", "pbd", "pbd-random"))
    sc = SweepConfig(base=base, pow=(0.5, 1.5), m=(1, 2), gamma=(0.5, 2.0))
    rows = sweep(sc)
    assert len(rows) == 8 * 3
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert rows_to_csv(sweep(sc, workers=4)) == text
    one = SweepConfig(base=base)
    assert sweep(one) == run_experiment(base)


def test_sweep_grid_cap():
    with pytest.raises(ConfigError):
        SweepConfig(N=(10, 20), density=(0.1, 0.2), gamma=(1.0, 2.0), max_cells=4).cells()


def test_isolated_vertices_leave_bound_columns_empty():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IsolatedVertexWarning)
        rows = run_experiment(RunConfig(family="er", N=30, density=0.02, replications=50, designs=("crd",)))
    assert rows[0]["bound_bias"] is None
    assert _rows(rows_to_csv(rows))[0]["bound_bias"] == ""


def test_redraw_and_repeats():
    cfg = RunConfig(family="pa", N=16, replications=100, designs=("crd",), redraw_model=True, graph_repeats=3)
    rows = run_experiment(cfg)
    assert [r["seed"] for r in rows] == [0, 1, 2]
    assert rows_to_csv(run_experiment(cfg)) == rows_to_csv(rows)


@pytest.mark.parametrize(
    "kw",
    [dict(N=11), dict(family="file", graph_file="/no/such/file"), dict(replications=1),
     dict(designs=("bogus",)), dict(p=2, r=2), dict(density=1.5), dict(interference="wavy")],
)
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        run_experiment(RunConfig(**{"N": 10, "replications": 10, **kw}))


def test_make_spec(tmp_path):
    assert make_spec("threshold-count:3", 0.5).k == 3
    (tmp_path / "t.txt").write_text("1 0 2.0\n")
    assert make_spec(f"table:{tmp_path / 't.txt'}", 0.5).f(1, 0) == 1.0


def test_load_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"family": "pa", "N": 12, "designs": ["crd"], "replications": 20}))
    cfg = load_config(path, replications=30)
    assert (cfg.family, cfg.designs, cfg.replications) == ("pa", ("crd",), 30)
    path.write_text(json.dumps({"nodes": 12}))
    with pytest.raises(ConfigError):
        load_config(path)


# -- command line -------------------------------------------------------------

def test_cli_graph_design_qc(tmp_path, capsys):
    g = tmp_path / "g.txt"
    assert main(["gen-graph", "--family", "pa", "--N", "12", "--m", "2", "--seed", "1", "--out", str(g)]) == 0
    graph = read_edgelist(g)
    assert graph.num_vertices == 12
    t, p = tmp_path / "t.txt", tmp_path / "p.txt"
    assert main(["design", "--graph", str(g), "--design", "pbd-random", "--seed", "5",
                 "--out", str(t), "--partition-out", str(p)]) == 0
    T = read_treatment(t, ExperimentConfig.for_graph(graph))
    for block in read_partition(p).blocks:
        assert len(T.treated & set(block)) == 1
    assert main(["qc-check", "--graph", str(g), "--treated", str(t)]) == 0
    assert capsys.readouterr().out.split("\n")[0] in ("PERFECT", "NOT PERFECT")


def test_cli_qc_on_cycles(tmp_path, capsys):
    for N, expect in [(6, "NONE"), (4, "0 1")]:
        path = tmp_path / f"c{N}.txt"
        main(["gen-graph", "--family", "cycle", "--N", str(N), "--out", str(path)])
        assert main(["qc-find", "--graph", str(path)]) == 0
        assert capsys.readouterr().out.strip() == expect
    (tmp_path / "diag.txt").write_text("0\n2\n")
    assert main(["qc-check", "--graph", str(tmp_path / "c4.txt"), "--treated", str(tmp_path / "diag.txt")]) == 0
    assert capsys.readouterr().out.splitlines() == ["NOT PERFECT", "0 2 1.0", "2 0 -1.0"]
    assert main(["qc-check", "--strict", "--graph", str(tmp_path / "c4.txt"), "--treated", str(tmp_path / "diag.txt")]) == 1


def test_cli_bounds(tmp_path, capsys):
    g = tmp_path / "g.txt"
    main(["gen-graph", "--family", "pa", "--N", "12", "--seed", "2", "--out", str(g)])
    out = tmp_path / "b.csv"
    assert main(["bounds", "--graph", str(g), "--interference", "normalized", "--gamma", "1",
                 "--designs", "crd", "pbd", "pbd-random", "typed", "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert [r["design"] for r in rows] == ["crd", "pbd", "pbd-random", "typed"]
    assert all(float(r["lip_norm"]) == pytest.approx(1.0) for r in rows)


def test_cli_simulate_and_sweep(tmp_path, capsys):
    assert main(["simulate", "--family", "pa", "--N", "20", "--replications", "50", "--designs", "crd", "pbd"]) == 0
    assert len(_rows(capsys.readouterr().out)) == 2
    conf = tmp_path / "s.json"
    conf.write_text(json.dumps({"family": "er", "N": [20], "density": [0.3, 0.6], "gamma": [1.0],
                                "designs": ["crd", "pbd"], "replications": 60}))
    outs = []
    for w in ("1", "4", "8"):
        out = tmp_path / f"s{w}.csv"
        assert main(["sweep", "--config", str(conf), "--workers", w, "--output", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert len(_rows(outs[0].decode())) == 4
    assert main(["sweep", "--config", str(conf), "--gamma", "0.5", "2.0"]) == 0
    assert [r["gamma"] for r in _rows(capsys.readouterr().out)] == ["0.5", "0.5", "2.0", "2.0"] * 2


def test_cli_validation_errors(tmp_path, capsys):
    assert main(["simulate", "--N", "11", "--replications", "10"]) == 2
    assert main(["qc-find", "--graph", str(tmp_path / "missing.txt")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"bogus": 1}')
    assert main(["simulate", "--config", str(bad)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["design", "--graph", "x", "--design", "nope"])
    assert exc.value.code == 2
    assert "error" in capsys.readouterr().err
