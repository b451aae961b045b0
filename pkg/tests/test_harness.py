import json

import pytest

from zealot import cli, harness
from zealot.harness import ConfigError, ExperimentConfig, crossing, discrepancy_report, run, sweep, sweep_rows
from zealot.model import Estimate
from zealot.thresholds import p_crit


def cfg(**kw):
    base = {"schema": harness.SCHEMA, "kind": "thresholds", "seed": 1,
            "tree": {"type": "regular", "d": 3, "depth": 4}, "params": {"2": 1.0}}
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown config keys"):
        cfg(bogus=1)
    with pytest.raises(ConfigError):
        cfg(tree={"type": "regular", "d": 3, "depth": 4, "extra": 1})


@pytest.mark.parametrize("change", [
    {"schema": "zealot-experiment/0"},
    {"kind": "nope"},
    {"seed": -1},
    {"seed": 1.5},
    {"replicas": 0},
    {"horizon": 0.0},
    {"window": 0.0},
    {"params": {"0": 0.5, "2": 0.6}},
    {"tree": {"type": "gw", "dist": {"3": 0.4, "4": 0.4}, "depth": 3}},
    {"tree": {"type": "star", "depth": 3}},
])
def test_invalid_configs(change):
    with pytest.raises(ConfigError):
        cfg(**change)


def test_missing_seed():
    with pytest.raises(ConfigError, match="seed"):
        ExperimentConfig.from_dict({"schema": harness.SCHEMA, "kind": "pc-scan"})


def test_forward_needs_params_and_horizon():
    with pytest.raises(ConfigError):
        cfg(kind="forward")


def test_digest():
    a, b = cfg(), cfg()
    assert a.digest() == b.digest()
    assert a.digest() == cfg(out="x.csv").digest()
    assert a.digest() != cfg(seed=2).digest()


def test_thresholds_interval():
    (rec,) = run(cfg(params={"2": 1.0}))
    d = rec.value.to_dict()
    lo, hi = d["local_interval"]
    assert lo == pytest.approx(1.0607, abs=1e-4) and hi == pytest.approx(1.2426, abs=1e-4)
    assert d["mu"] == 2.0


def test_atomic_outputs_byte_identical(tmp_path):
    c = cfg(kind="forward", horizon=2.0, replicas=20, params={"0": 0.3, "2": 0.7}, out=str(tmp_path / "a.csv"))
    run(c)
    first = (tmp_path / "a.csv").read_bytes()
    summary = json.loads((tmp_path / "a.json").read_text())
    run(c)
    assert (tmp_path / "a.csv").read_bytes() == first
    assert summary["digest"] == c.digest()
    assert first.decode().splitlines()[0] == "t,mean_count,survival_fraction,root_fraction"
    assert not [p for p in tmp_path.iterdir() if p.name.endswith(".tmp")]


def test_config_file_round_trip(tmp_path):
    c = cfg(kind="cobra", horizon=1.0, replicas=5, params={"0": 0.2, "2": 0.8})
    path = tmp_path / "c.json"
    path.write_text(json.dumps(c.to_dict()))
    assert ExperimentConfig.from_file(path) == c
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(path)


def test_each_kind_runs():
    tree = {"type": "regular", "d": 3, "depth": 4}
    gw = {"type": "gw", "dist": {"3": 0.5, "4": 0.5}, "depth": 4}
    configs = [
        cfg(kind="forward", tree=tree, horizon=1.0, replicas=5),
        cfg(kind="cobra", tree=gw, horizon=1.0, replicas=5),
        cfg(kind="duality-check", tree=gw, params=None, replicas=10),
        cfg(kind="thresholds", tree=gw, params={"1": 0.4, "2": 0.6}),
        cfg(kind="nu0-scan", tree=None, params=None, mu=[1.9], q3=[0.8, 0.85]),
        cfg(kind="pc-scan", tree=None, params=None),
        cfg(kind="table-43", tree=None, params=None, q3=[0.9]),
    ]
    for c in configs:
        records, header, rows = harness.execute(c)
        assert records and header and rows
        assert all(r.digest == c.digest() for r in records)


def test_duality_check_all_pass():
    c = cfg(kind="duality-check", tree={"type": "regular", "d": 4, "depth": 5}, params=None, replicas=100)
    recs = {r.metric: r.value for r in run(c)}
    assert recs["duality_pass"] == {"passed": 100, "instances": 100}
    assert recs["additivity_pass"] == {"passed": 100, "instances": 100}


def test_truncation_flag():
    c = cfg(kind="forward", tree={"type": "regular", "d": 3, "depth": 2}, params={"3": 1.0},
            horizon=5.0, replicas=10)
    (rec,) = run(c)
    assert "truncation-dominated" in rec.flags


def test_sweep_cells_and_seeds():
    base = cfg(kind="forward", horizon=1.0, replicas=10, params={"0": 0.3, "2": 0.7})
    grid = sweep(base, "horizon", [0.5, 1.0])
    assert [g[0].cell["horizon"] for g in grid] == [0.5, 1.0]
    assert all(isinstance(g[0].value, Estimate) for g in grid)
    assert grid[0][0].value.seed != grid[1][0].value.seed
    header, rows = sweep_rows(grid)
    assert header == ["horizon", "metric", "point", "half_width"] and len(rows) == 2
    assert sweep(base, "horizon", []) == []
    with pytest.raises(ConfigError):
        sweep(base, "colour", [1])
    p_grid = sweep(base, "p2", [0.7])
    assert p_grid[0][0].cell == {"p2": 0.7}
    with pytest.raises(ConfigError):
        sweep(base, "p2", [0.9])


def test_q3_sweep_crosses_at_mu_19():
    base = cfg(kind="nu0-scan", tree=None, params=None, mu=[1.9])
    q3s = [round(0.8 + 0.001 * i, 3) for i in range(200)]
    grid = sweep(base, "q3", q3s)
    flags = [g[0].value is not None for g in grid]
    first = q3s[flags.index(True)]
    assert 0.81 < first <= 0.82
    assert crossing(q3s, 1.9) == first


def test_pc_sweep_monotone():
    base = cfg(kind="pc-scan", tree=None, params=None)
    mus = [1.55 + 0.05 * i for i in range(10)]
    values = [g[0].value for g in sweep(base, "mu", mus)]
    assert values == [p_crit(m) for m in mus]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_discrepancy_report():
    report = discrepancy_report()
    bad = {(r["q3"], r["mu"]) for r in report if r["status"] == "mismatch"}
    assert {(q, 1.8) for q, mu in harness.REFERENCE_NU0 if mu == 1.8} <= bad
    assert (0.82, 1.9) in bad
    assert len(bad) == 17


def test_table_has_four_columns():
    records, header, rows = harness.execute(cfg(kind="table-43", tree=None, params=None))
    assert header == ["q3", "mu_1.6", "mu_1.7", "mu_1.8", "mu_1.9"]
    assert len(rows) == len(harness.TABLE_Q3)
    assert [r[0] for r in rows][:2] == [0.8, 0.81]
    assert rows[0][1] == pytest.approx(2.2)


def test_cli_prints_records(capsys):
    assert cli.main(["scan-pc", "--seed", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4
    assert json.loads(lines[0])["metric"] == "p_crit"


def test_cli_writes_files(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"schema": harness.SCHEMA, "kind": "duality-check", "seed": 7,
                                  "tree": {"type": "regular", "d": 3, "depth": 5}, "replicas": 20}))
    out = tmp_path / "out" / "dual.csv"
    assert cli.main(["check-duality", "--config", str(config), "--out", str(out)]) == 0
    first = out.read_bytes()
    assert cli.main(["check-duality", "--config", str(config), "--out", str(out)]) == 0
    assert out.read_bytes() == first
    assert json.loads(out.with_suffix(".json").read_text())["config"]["seed"] == 7


def test_cli_errors(tmp_path, capsys):
    assert cli.main(["simulate-forward", "--seed", "1"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError"
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"schema": harness.SCHEMA, "kind": "pc-scan", "seed": 1}))
    assert cli.main(["table-43", "--config", str(config)]) == 2
    config.write_text(json.dumps({"schema": harness.SCHEMA, "kind": "pc-scan", "seed": 1, "extra": 0}))
    assert cli.main(["scan-pc", "--config", str(config)]) == 2
    assert cli.main(["scan-pc", "--config", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit):
        cli.main(["no-such-command"])
