#!/usr/bin/env python3
#
# 8888888b.   .d8888b.  888b    888  .d8888b.  8888888 888b     d888 
# 888  "Y88b d88P  Y88b 8888b   888 d88P  Y88b   888   8888b   d8888 
# 888    888 888    888 88888b  888 Y88b.        888   88888b.d88888 
# 888    888 888        888Y88b 888  "Y888b.     888   888Y88888P888 
# 888    888 888        888 Y88b888     "Y88b.   888   888 Y888P 888 
# 888    888 888    888 888  Y88888       "888   888   888  Y8P  888 
# 888  .d88P Y88b  d88P 888   Y8888 Y88b  d88P   888   888   "   888 
# 8888888P"   "Y8888P"  888    Y888  "Y8888P"  8888888 888       888 
#
# Copyright (c) 2025, Abe Mishler
# Licensed under the Universal Permissive License v 1.0
# as shown at https://oss.oracle.com/licenses/upl/. 
# 

"""
Tests for the experiment runner, trace files and run comparison
"""

import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from dcnsim.base import ArgumentError, ConfigError, RunOptions, SuiteSpec, TopologySpec
from dcnsim.harness import PARAMS_FILE, SUITE_FILE, TRACE_FILE, compare, run_experiment
from dcnsim.metrics import COLUMNS, MetricsTrace
from dcnsim.objectives import load_suite


def _options(tmp_path, **changes):
    options = RunOptions(
        suite=SuiteSpec(family="quadratic", m=5, d=4),
        topology=TopologySpec(kind="static", graph="ring"),
        algorithm="dcn-sc", eps=1e-6, out_dir=str(tmp_path / "run"),
    )
    return replace(options, **changes)


def _row(iteration, cum=0):
    return dict(iteration=iteration, gap=1.0, f_value=1.0, delta_x=0.0, delta_g=0.0,
                delta_h=0.0, rounds_x=0, rounds_g=0, rounds_h=0,
                cum_rounds=cum, cum_scalars=cum)


def test_run_writes_files(tmp_path):
    result = run_experiment(_options(tmp_path, save_suite=True))
    out = tmp_path / "run"
    assert sorted(p.name for p in result.files) == sorted([TRACE_FILE, PARAMS_FILE, SUITE_FILE])
    with open(out / PARAMS_FILE) as f:
        params = json.load(f)
    for key in ("schema_version", "algorithm", "schedule", "network", "reference", "suite", "result"):
        assert key in params
    assert params["algorithm"] == "dcn-sc"
    assert params["result"]["iterations"] == len(result.trace) - 1
    assert params["result"]["target_met"] is True

    frame = pd.read_csv(out / TRACE_FILE)
    assert list(frame.columns) == list(COLUMNS)
    assert frame["iteration"].tolist() == list(range(len(result.trace)))

    back = MetricsTrace.from_csv(out / TRACE_FILE)
    assert len(back) == len(result.trace)
    assert back.final_gap == result.trace.final_gap
    assert back.column("cum_scalars") == result.trace.column("cum_scalars")
    assert load_suite(out / SUITE_FILE).m == 5


def test_runs_are_deterministic(tmp_path):
    first = run_experiment(_options(tmp_path, algorithm="adcn"), write=False).trace.to_frame()
    again = run_experiment(_options(tmp_path, algorithm="adcn"), write=False).trace.to_frame()
    threaded = run_experiment(_options(tmp_path, algorithm="adcn", workers=3),
                              write=False).trace.to_frame()
    pd.testing.assert_frame_equal(first, again)
    pd.testing.assert_frame_equal(first, threaded)


def test_timing_column(tmp_path):
    trace = run_experiment(_options(tmp_path, timing=True, max_iterations=2), write=False).trace
    times = trace.column("wall_time")
    assert len(times) == 3
    assert times == sorted(times)


def test_invalid_run_settings(tmp_path):
    with pytest.raises(ConfigError):
        run_experiment(_options(tmp_path, topology=TopologySpec(kind="per-step-connected",
                                                                chebyshev="auto")), write=False)
    with pytest.raises(ConfigError):
        run_experiment(_options(tmp_path, topology=TopologySpec(chebyshev="many")), write=False)
    with pytest.raises(ConfigError):
        run_experiment(_options(tmp_path, x0=[0.0, 1.0]), write=False)
    with pytest.raises(ConfigError):
        run_experiment(_options(tmp_path, algorithm="gradient-descent"), write=False)


def test_chebyshev_run(tmp_path):
    result = run_experiment(_options(tmp_path, topology=TopologySpec(graph="ring", chebyshev=2)),
                            write=False)
    assert result.params["network"]["chebyshev_K"] == 2
    assert result.trace.target_met


def test_glm_matches_dense_with_fewer_scalars(tmp_path):
    """Same fixed rounds: identical gaps, far less traffic after replication"""
    suite = SuiteSpec(family="logistic", m=4, d=50, samples=5)
    common = dict(suite=suite, mode="analytic", fixed_rounds=3, max_iterations=2, eps=1e-4)
    dense = run_experiment(_options(tmp_path, **common), write=False)
    glm = run_experiment(_options(tmp_path, backend="glm", **common), write=False)

    np.testing.assert_allclose(glm.trace.column("gap"), dense.trace.column("gap"),
                               rtol=0, atol=1e-10)
    assert glm.params["replication"]["steps"] >= 1
    assert glm.params["replication"]["cost"] > 0
    assert "replication" not in dense.params
    assert glm.trace.column("cum_scalars")[0] == glm.params["replication"]["cost"]
    assert glm.trace.last["cum_scalars"] < dense.trace.last["cum_scalars"]


def test_compare_run_directories(tmp_path):
    a = run_experiment(_options(tmp_path, out_dir=str(tmp_path / "dcn")))
    b = run_experiment(_options(tmp_path, algorithm="adcn", out_dir=str(tmp_path / "adcn")))
    comparison = compare([tmp_path / "dcn", tmp_path / "adcn" / TRACE_FILE], eps=1e-6)

    summary = comparison.summary
    assert summary["name"].tolist() == ["dcn", "adcn"]
    assert summary["algorithm"].tolist() == ["dcn-sc", "adcn"]
    assert summary["predicted_iterations"].tolist() == [
        a.params["schedule"]["N"] + 1, b.params["schedule"]["N"] + 1]
    assert summary["iterations_to_eps"].notna().all()
    assert {"gap_dcn", "gap_adcn"} <= set(comparison.by_iteration.columns)
    assert comparison.by_cost["cum_scalars"].is_monotonic_increasing

    paths = comparison.save(tmp_path / "cmp")
    assert [p.name for p in paths] == ["by_iteration.csv", "by_cost.csv", "summary.csv"]


def test_compare_in_memory_and_empty():
    trace = MetricsTrace("x")
    trace.append(**_row(0))
    trace.append(**_row(1, 10))
    same = compare({"a": trace, "b": trace}, eps=2.0)
    assert same.summary["iterations_to_eps"].tolist() == [0, 0]
    assert len(same.by_cost) == 2
    assert compare([]).summary.empty


def test_trace_rejects_bad_rows(tmp_path):
    trace = MetricsTrace("x")
    trace.append(**_row(0, 5))
    with pytest.raises(ArgumentError):
        trace.append(**_row(0, 5))
    with pytest.raises(ArgumentError):
        trace.append(**_row(1, 4))
    with pytest.raises(ArgumentError):
        trace.append(**_row(1, 5), speed=3.0)
    with pytest.raises(ArgumentError):
        trace.append(iteration=1, gap=0.5)
    assert trace.last["bound_ok"] is True

    bogus = tmp_path / "bogus.csv"
    bogus.write_text("a,b\n1,2\n")
    with pytest.raises(ArgumentError):
        MetricsTrace.from_csv(bogus)
