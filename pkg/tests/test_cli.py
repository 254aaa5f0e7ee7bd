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
Tests for the command-line interface
"""

import sys
from pathlib import Path

import yaml
from click.testing import CliRunner

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from dcnsim.cli import cli

SMALL = {"suite": {"m": 4, "d": 3}, "eps": 1e-5}


def _config(tmp_path, data=SMALL):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(data))
    return str(path)


def test_help_and_version():
    runner = CliRunner()
    result = runner.invoke(cli, ["-h"])
    assert result.exit_code == 0
    assert "Decentralized Cubic Newton" in result.output
    for command in ("run", "compare", "check", "algorithms"):
        assert command in result.output
    assert runner.invoke(cli, ["--version"]).exit_code == 0


def test_algorithms_listing():
    result = CliRunner().invoke(cli, ["algorithms"])
    assert result.exit_code == 0
    for name in ("dcn-convex", "dcn-sc", "adcn", "dense", "glm-topk:K"):
        assert name in result.output


def test_run_writes_outputs(tmp_path):
    out = tmp_path / "out"
    result = CliRunner().invoke(cli, ["run", "-c", _config(tmp_path), "--out", str(out),
                                      "--algo", "adcn"])
    assert result.exit_code == 0, result.output
    assert "✓ Final gap" in result.output
    assert (out / "trace.csv").exists()
    assert (out / "params.json").exists()


def test_run_missed_target_exits_one(tmp_path):
    data = dict(SMALL, run={"max_iterations": 0})
    result = CliRunner().invoke(cli, ["run", "-c", _config(tmp_path, data),
                                      "--out", str(tmp_path / "out")])
    assert result.exit_code == 1
    assert "misses" in result.output


def test_run_configuration_errors(tmp_path):
    runner = CliRunner()
    bad = runner.invoke(cli, ["run", "-c", _config(tmp_path, {"sute": {}})])
    assert bad.exit_code == 2
    assert "Configuration error" in bad.output
    missing = runner.invoke(cli, ["run", "-c", str(tmp_path / "nope.yaml")])
    assert missing.exit_code == 2
    algo = runner.invoke(cli, ["run", "-c", _config(tmp_path), "--algo", "sgd",
                               "--out", str(tmp_path / "o")])
    assert algo.exit_code == 2


def test_compare_runs(tmp_path):
    runner = CliRunner()
    config = _config(tmp_path)
    for algo in ("dcn-sc", "adcn"):
        result = runner.invoke(cli, ["run", "-c", config, "--algo", algo,
                                     "--out", str(tmp_path / algo)])
        assert result.exit_code == 0, result.output
    result = runner.invoke(cli, ["compare", str(tmp_path / "dcn-sc"), str(tmp_path / "adcn"),
                                 "--eps", "1e-5", "--out", str(tmp_path / "cmp")])
    assert result.exit_code == 0, result.output
    assert "adcn" in result.output
    assert (tmp_path / "cmp" / "summary.csv").exists()
    assert runner.invoke(cli, ["compare"]).output.strip() == "No traces given."


def test_check_passes():
    result = CliRunner().invoke(cli, ["check"])
    assert result.exit_code == 0, result.output
    assert "All 7 checks passed" in result.output
