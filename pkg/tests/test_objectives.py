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
Tests for local objectives, suites and the reference solve
"""

import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from dcnsim.base import (ArgumentError, ConfigError, DomainError, OracleFailureError,
                         SolverOptions, SuiteSpec)
from dcnsim.checks import check_finite_differences
from dcnsim.objectives import (LogisticObjective, ProblemSuite, QuadraticObjective,
                               finite_difference_check, load_suite, make_suite,
                               reference_solve, save_suite)


def _logistic(seed=0, n=12, d=4, mu_reg=0.1):
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, d))
    labels = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    return LogisticObjective(features, labels, mu_reg)


def test_quadratic_constants():
    """Constants come from the spectrum of A"""
    obj = QuadraticObjective(np.diag([1.0, 4.0]), [0.0, 1.0], 2.0)
    assert obj.mu == pytest.approx(1.0)
    assert obj.L1 == pytest.approx(4.0)
    assert obj.L2 == 0.0
    value, grad, hess = obj.eval([1.0, 1.0], order=2)
    assert value == pytest.approx(0.5 * (1 + 4) + 1 + 2)
    assert np.allclose(grad, [1.0, 5.0])
    assert np.allclose(hess, np.diag([1.0, 4.0]))


def test_quadratic_rejects_bad_matrices():
    with pytest.raises(ArgumentError):
        QuadraticObjective([[1.0, 2.0], [0.0, 1.0]], [0.0, 0.0])
    with pytest.raises(ArgumentError):
        QuadraticObjective(np.diag([1.0, -1.0]), [0.0, 0.0])
    with pytest.raises(ArgumentError):
        QuadraticObjective(np.eye(3), [0.0, 0.0])


def test_eval_validates_points():
    obj = QuadraticObjective(np.eye(2), [0.0, 0.0])
    with pytest.raises(ArgumentError):
        obj.value([1.0, 2.0, 3.0])
    with pytest.raises(DomainError):
        obj.gradient([np.nan, 0.0])
    with pytest.raises(ArgumentError):
        obj.eval([0.0, 0.0], order=3)
    value, grad, hess = obj.eval([0.0, 0.0])
    assert grad is None and hess is None


def test_logistic_finite_differences():
    obj = _logistic()
    report = finite_difference_check(obj, np.random.default_rng(1).standard_normal(obj.dim))
    assert report.grad_rel_err <= 1e-5
    assert report.hess_rel_err <= 1e-5


def test_logistic_curvature_rebuilds_hessian():
    """F' diag(h) F + mu_reg I is the Hessian"""
    obj = _logistic(mu_reg=0.3)
    x = np.linspace(-1.0, 1.0, obj.dim)
    h = obj.curvature(x)
    assert h.shape == (obj.samples,)
    assert np.all(h > 0) and np.all(h <= 0.25)
    rebuilt = obj.features.T @ np.diag(h) @ obj.features + 0.3 * np.eye(obj.dim)
    assert np.allclose(rebuilt, obj.hessian(x), atol=1e-12)


def test_logistic_rejects_bad_labels():
    with pytest.raises(ArgumentError):
        LogisticObjective(np.ones((2, 2)), [1.0, 0.0])
    with pytest.raises(ArgumentError):
        LogisticObjective(np.ones((2, 2)), [1.0])
    with pytest.raises(ArgumentError):
        LogisticObjective(np.ones((2, 2)), [1.0, -1.0], mu_reg=-1.0)


def test_logistic_large_margins_stay_finite():
    obj = LogisticObjective([[1.0]], [1.0])
    assert np.isfinite(obj.value([-800.0]))
    assert np.isfinite(obj.gradient([800.0])).all()


def test_suite_aggregates():
    objs = [QuadraticObjective(np.diag([1.0, 2.0]), [0.0, 0.0]),
            QuadraticObjective(np.diag([3.0, 6.0]), [1.0, 0.0])]
    suite = ProblemSuite(objs)
    assert suite.L1_bar == pytest.approx(4.0)
    assert suite.L1_max == pytest.approx(6.0)
    assert suite.mu_bar == pytest.approx(2.0)
    assert suite.mu_hat == pytest.approx(1.0)
    assert not suite.is_glm
    x = np.array([1.0, 1.0])
    assert suite.value(x) == pytest.approx(np.mean([o.value(x) for o in objs]))


def test_suite_rejects_mixed_dimensions():
    with pytest.raises(ArgumentError):
        ProblemSuite([QuadraticObjective(np.eye(2), [0, 0]), QuadraticObjective(np.eye(3), [0, 0, 0])])
    with pytest.raises(ArgumentError):
        ProblemSuite([])


def test_make_suite_is_deterministic():
    spec = SuiteSpec(family="quadratic", m=4, d=5)
    a, b = make_suite(spec, 7), make_suite(spec, 7)
    for oa, ob in zip(a.objectives, b.objectives):
        assert np.array_equal(oa.A, ob.A)
        assert np.array_equal(oa.b, ob.b)
    c = make_suite(spec, 8)
    assert not np.array_equal(a.objectives[0].A, c.objectives[0].A)


def test_make_suite_quadratic_spectrum():
    suite = make_suite(SuiteSpec(family="quadratic", m=5, d=10, mu=1e-2, L=10.0), 0)
    for obj in suite.objectives:
        assert obj.mu >= 1e-2 * (1 - 1e-9)
        assert obj.L1 <= 10.0 * (1 + 1e-9)


def test_make_suite_logistic_rows_have_requested_norm():
    suite = make_suite(SuiteSpec(family="logistic", m=3, d=6, samples=7, feature_norm=0.5), 0)
    assert suite.is_glm
    for obj in suite.objectives:
        assert obj.samples == 7
        assert np.allclose(np.linalg.norm(obj.features, axis=1), 0.5)


def test_make_suite_rejects_bad_specs():
    with pytest.raises(ConfigError):
        make_suite(SuiteSpec(family="cubic"), 0)
    with pytest.raises(ConfigError):
        make_suite(SuiteSpec(m=1), 0)
    with pytest.raises(ConfigError):
        make_suite(SuiteSpec(mu=20.0, L=10.0), 0)


def test_reference_solve_quadratic():
    suite = make_suite(SuiteSpec(family="quadratic", m=4, d=6), 0)
    x0 = np.zeros(suite.dim)
    ref = reference_solve(suite, 1e-10, x0)
    assert np.linalg.norm(suite.gradient(ref.x_star)) <= 1e-10
    assert ref.R0 == pytest.approx(np.linalg.norm(ref.x_star))
    assert ref.D >= 2.0 * ref.R0 * (1 - 1e-12)
    assert ref.R_bar >= 2.0 * ref.R0 * (1 - 1e-12)
    assert ref.gap0 == pytest.approx(suite.value(x0) - ref.f_star)
    assert ref.zeta_g > 0 and ref.zeta_H > 0


def test_reference_solve_logistic_without_regularization():
    suite = make_suite(SuiteSpec(family="logistic", m=4, d=5, mu_reg=0.0, feature_norm=0.5), 2)
    ref = reference_solve(suite, 1e-9, np.zeros(suite.dim))
    assert np.linalg.norm(suite.gradient(ref.x_star)) <= 1e-9
    assert "x_star" not in ref.scalars()


def test_reference_solve_failures():
    suite = make_suite(SuiteSpec(family="quadratic", m=2, d=3), 0)
    with pytest.raises(ArgumentError):
        reference_solve(suite, 0.0, np.zeros(3))
    with pytest.raises(OracleFailureError):
        reference_solve(suite, 1e-12, np.zeros(3), SolverOptions(ref_max_iter=0))


def test_suite_file_roundtrip(tmp_path):
    suite = make_suite(SuiteSpec(family="logistic", m=3, d=4, samples=5), 1)
    path = save_suite(suite, tmp_path / "suite.npz")
    loaded = load_suite(path)
    x = np.full(4, 0.3)
    assert loaded.m == 3 and loaded.spec == suite.spec
    assert loaded.value(x) == pytest.approx(suite.value(x), rel=1e-15)


def _suites():
    return [make_suite(SuiteSpec(family="quadratic", m=4, d=5, heterogeneity=1.0), 3),
            make_suite(SuiteSpec(family="logistic", m=4, d=5, samples=8, mu_reg=0.1), 3)]


@pytest.mark.parametrize("index", [0, 1])
def test_local_lipschitz_constants_on_sampled_pairs(index):
    suite = _suites()[index]
    rng = np.random.default_rng(7)
    for obj in suite.objectives:
        for _ in range(50):
            x, y = 2.0 * rng.standard_normal((2, suite.dim))
            dist = np.linalg.norm(x - y)
            grad_gap = np.linalg.norm(obj.gradient(x) - obj.gradient(y))
            hess_gap = np.linalg.norm(obj.hessian(x) - obj.hessian(y), 2)
            assert grad_gap <= (1 + 1e-9) * obj.L1 * dist + 1e-12
            assert hess_gap <= (1 + 1e-9) * obj.L2 * dist + 1e-12


@pytest.mark.parametrize("index", [0, 1])
def test_aggregate_constants_on_sampled_pairs(index):
    """Mean L1 bounds the aggregate gradient, mean mu its strong convexity"""
    suite = _suites()[index]
    rng = np.random.default_rng(8)
    for _ in range(50):
        x, y = 2.0 * rng.standard_normal((2, suite.dim))
        dist = np.linalg.norm(x - y)
        gx = suite.gradient(x)
        assert np.linalg.norm(gx - suite.gradient(y)) <= (1 + 1e-9) * suite.L1_bar * dist + 1e-12
        lower = suite.value(x) + gx @ (y - x) + 0.5 * suite.mu_bar * dist ** 2
        assert suite.value(y) >= lower - 1e-9 * max(1.0, abs(suite.value(y)))


def test_finite_difference_step_range():
    obj = _logistic()
    x = np.full(obj.dim, 0.5)
    size = 1.0 + np.linalg.norm(x)
    report = finite_difference_check(obj, x, h=1e-4 * size)
    assert report.grad_rel_err <= 1e-5
    for h in (1e-8 * size, 1e-2 * size):
        with pytest.raises(ArgumentError):
            finite_difference_check(obj, x, h=h)


def test_finite_difference_check_covers_50_points():
    result = check_finite_differences(0)
    assert result.passed, result.detail
    assert "50 points" in result.detail
