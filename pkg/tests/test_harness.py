import dataclasses
import json
import math

import numpy as np
import pytest

from fou_drift import MemoryBudgetExceeded, Scheme
from fou_drift import harness
from fou_drift.harness import (
    PUBLISHED_TABLES,
    CellFailure,
    ExperimentConfig,
    ExperimentReport,
    PartialExperiment,
    cell_seed,
    published_means,
    reproduce_table,
    run_cell,
    run_experiment,
    table_config,
)


def small_config(**kw):
    base = dict(theta=2.0, h_list=(0.45,), n_list=(10,), m=2.0, replications=20, seed=42)
    base.update(kw)
    return ExperimentConfig(**base)


def strip_time(report):
    d = report.to_dict()
    d["provenance"].pop("created")
    return json.dumps(d, sort_keys=True)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(n_list=(1, 5))
    with pytest.raises(ValueError):
        small_config(m=1.0)
    with pytest.raises(ValueError):
        small_config(replications=0)
    with pytest.raises(ValueError):
        small_config(h_list=(1.2,))
    with pytest.raises(ValueError):
        small_config(estimator="mle")
    with pytest.raises(ValueError):
        small_config(seed=-1)


def test_config_json_roundtrip():
    c = small_config(scheme=Scheme("euler", 3), common_random_numbers=True)
    assert ExperimentConfig.from_dict(json.loads(json.dumps(c.to_dict()))) == c
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({**c.to_dict(), "threads": 2})


def test_single_replication_deterministic():
    c = small_config(replications=1)
    assert run_cell(c, 0.45, 10) == run_cell(c, 0.45, 10)


def test_table1_cell_n10():
    cell = run_cell(table_config(1, 42), 0.45, 10)
    assert cell.count == 20 and math.isfinite(cell.sd)
    assert abs(cell.mean - 2.21281) <= 0.02


def test_table4_cell_n10():
    cell = run_cell(table_config(4, 42), 0.45, 10)
    assert abs(cell.mean - -3.12058) <= 0.35


def test_empty_n_list():
    report = run_experiment(small_config(n_list=()))
    assert report.cells == []


def test_table1_shape_and_published_column(monkeypatch):
    monkeypatch.setattr(harness, "_one", lambda config, params, grid, base, r: 1.0)
    report = reproduce_table(1, 7)
    assert len(report.cells) == 18
    assert report.provenance["table"] == 1
    c = next(c for c in report.cells if (c.h, c.n) == (0.45, 5))
    assert c.paper_mean == 2.45794 and c.sd == 0.0


def test_published_values():
    assert published_means(2)[(0.25, 20)] == 2.10231
    assert published_means(5)[(0.45, 6)] == -2.72538
    assert published_means(3)[(0.45, 15)] == 2.13566
    # the first column of the m=3 and m=4 tables repeats the m=2 value
    assert published_means(3)[(0.05, 5)] == published_means(1)[(0.05, 5)] == 2.45763
    assert sum(len(t["h_list"]) * len(t["n_list"]) for t in PUBLISHED_TABLES.values()) == 18 + 12 + 15 + 5 + 5


def test_presets():
    t4 = table_config(4, 1)
    assert (t4.theta, t4.m, t4.h_list, t4.x0, t4.replications) == (-3.0, 4.0, (0.45,), 1.0, 20)
    assert table_config(1, 1).common_random_numbers and not table_config(2, 1).common_random_numbers
    with pytest.raises(ValueError):
        table_config(6, 1)


def test_common_random_numbers_share_seed_across_h():
    crn = small_config(h_list=(0.05, 0.45), common_random_numbers=True)
    assert cell_seed(crn, 0.05, 10) == cell_seed(crn, 0.45, 10)
    plain = dataclasses.replace(crn, common_random_numbers=False)
    assert cell_seed(plain, 0.05, 10) != cell_seed(plain, 0.45, 10)


def test_adding_cells_keeps_existing_seeds():
    a = small_config(n_list=(10,))
    b = small_config(n_list=(5, 10, 20))
    assert cell_seed(a, 0.45, 10) == cell_seed(b, 0.45, 10)
    first = run_cell(a, 0.45, 10)
    assert run_experiment(dataclasses.replace(b, n_list=(5, 10))).cells[1] == first


def test_thread_count_does_not_change_report():
    c = small_config(n_list=(5, 10), h_list=(0.25, 0.45), replications=12)
    one = run_experiment(c, threads=1)
    many = run_experiment(c, threads=8)
    assert strip_time(one) == strip_time(many)


def test_report_json_roundtrip_byte_identical():
    report = run_experiment(small_config(n_list=(5,), replications=3), published={(0.45, 5): 2.45794})
    text = report.to_json()
    assert ExperimentReport.from_json(text).to_json() == text
    assert "paper_mean" in text


def test_csv_rows():
    report = run_experiment(small_config(n_list=(5, 10), replications=2))
    lines = report.to_csv().splitlines()
    assert lines[0] == "theta,h,n,m,mean,sd,count,paper_mean"
    assert len(lines) == 3 and lines[1].endswith(",2,")


def test_failure_names_cell_and_keeps_completed():
    c = small_config(n_list=(5, 40), replications=2, max_points=500)  # n=40: 12801 points
    with pytest.raises(PartialExperiment) as info:
        run_experiment(c)
    err = info.value
    assert [cell.n for cell in err.report.cells] == [5]
    assert isinstance(err.cause, CellFailure)
    assert (err.cause.h, err.cause.n, err.cause.replication) == (0.45, 40, 0)
    assert isinstance(err.cause.cause, MemoryBudgetExceeded)


def test_replication_seeds_follow_spawn_key():
    c = small_config(replications=3)
    base = cell_seed(c, 0.45, 10)
    vals = [harness._one(c, harness.FouParams(2.0, 1.0, 0.45), harness.GridSpec(10, 2), base, r) for r in range(3)]
    cell = run_cell(c, 0.45, 10)
    assert cell.mean == math.fsum(vals) / 3
    assert cell.seed_base == base


def test_other_estimators_run():
    cell = run_cell(small_config(estimator="terminal", replications=3), 0.45, 10)
    assert cell.mean > 0
    hs = run_cell(small_config(theta=-2.0, estimator="hu-song", replications=3), 0.45, 10)
    assert hs.mean < 0
