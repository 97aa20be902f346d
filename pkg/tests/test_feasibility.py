import math

import numpy as np
import pytest
from scipy import stats

from fpphe.errors import InvalidParameterError
from fpphe.feasibility import (FeasibilityProblem, GraphFamily, RateConstants,
                               estimate_rate_constants, h_coefficient,
                               lambda_zero, solve_hl)

HALF_TWO = RateConstants(0.5, 0.5, 0.5, 2.0, 2.0, 2.0)


def test_lambda_zero_example():
    assert lambda_zero(HALF_TWO) == 0.25 / 7.75


def test_lambda_zero_monotone_in_cind():
    prev = 0.0
    for cind in np.linspace(0.1, 0.9, 9):
        c = RateConstants(0.5, 0.5, float(cind), 2.0, 2.0, 2.0)
        cur = lambda_zero(c)
        assert cur > prev
        prev = cur


def test_h_coefficient_sign_matches_lambda_zero():
    rng = np.random.default_rng(4)
    for _ in range(50):
        c = RateConstants(*(rng.uniform(0.05, 0.95, 3).tolist()
                            + rng.uniform(1.05, 5.0, 3).tolist()))
        lz = lambda_zero(c)
        assert h_coefficient(c, lz * 0.9) > 0
        assert h_coefficient(c, lz * 1.1) < 0


def test_solve_hl_worked_instance():
    p = FeasibilityProblem(lam=0.01, constants=HALF_TWO, frak_c=10.0, R=100)
    sol = solve_hl(p)
    assert sol.feasible
    assert sol.H == 4356 and sol.L == 57448
    # direct substitution of both inequalities, independent arithmetic
    lhs1 = (sol.H + 1) / 0.5 + 100 / (0.01 * 0.5) + 10
    rhs1 = (sol.L + 1) / 2.0
    lhs2 = (sol.H / 2) / 2.0 + (sol.H / 2 + 1) / (0.01 * 2.0) + 100 / (0.01 * 2.0)
    rhs2 = 2 * 10 + (sol.L + 1) / 0.5
    assert lhs1 < rhs1 and lhs2 > rhs2
    assert sol.lhs1 == pytest.approx(lhs1) and sol.rhs1 == pytest.approx(rhs1)
    assert sol.lhs2 == pytest.approx(lhs2) and sol.rhs2 == pytest.approx(rhs2)
    # independently re-derived L interval for H = 4356
    low = 2.0 * lhs1
    up = 0.5 * (lhs2 - 20)
    assert math.floor(low) == 57448 and math.ceil(up) - 2 == 57508


def test_solve_hl_even_h():
    p = FeasibilityProblem(lam=0.02, constants=HALF_TWO, frak_c=5.0, R=10)
    sol = solve_hl(p)
    assert sol.feasible and sol.H % 2 == 0


def test_solve_hl_infeasible_above_lambda_zero():
    p = FeasibilityProblem(lam=0.05, constants=HALF_TWO, frak_c=10.0, R=100)
    sol = solve_hl(p)
    assert not sol.feasible
    assert "lambda_zero" in sol.diagnostics


def test_solve_hl_doubling_r_keeps_feasibility():
    for R in (100, 200, 400):
        p = FeasibilityProblem(lam=0.01, constants=HALF_TWO, frak_c=10.0, R=R)
        assert solve_hl(p).feasible


def test_solution_serialization():
    p = FeasibilityProblem(lam=0.01, constants=HALF_TWO, frak_c=10.0, R=100)
    d = solve_hl(p).to_dict()
    assert d["feasible"] and d["H"] == 4356


def test_rate_constants_validation():
    with pytest.raises(InvalidParameterError):
        RateConstants(1.5, 0.5, 0.5, 2.0, 2.0, 2.0)
    with pytest.raises(InvalidParameterError):
        RateConstants(0.5, 0.5, 0.5, 0.9, 2.0, 2.0)
    with pytest.raises(InvalidParameterError):
        FeasibilityProblem(lam=0.0, constants=HALF_TWO, frak_c=1.0, R=1)
    with pytest.raises(InvalidParameterError):
        FeasibilityProblem(lam=0.1, constants=HALF_TWO, frak_c=1.0, R=0)


def test_graph_family_validation():
    with pytest.raises(InvalidParameterError):
        GraphFamily("ring")
    with pytest.raises(InvalidParameterError):
        GraphFamily("tree", d=1)


def test_estimate_rate_constants_path():
    est = estimate_rate_constants(GraphFamily("path"), 1.0, range(1, 9),
                                  trials=3000, target_exponent=0.1,
                                  master_seed=31)
    assert 0.0 < est.cin_hat < 1.0
    assert est.cout_hat > 1.0
    # Gamma CDF oracle: the certified cout keeps the fast tail under the target
    for k in est.k_values:
        exact = stats.gamma.cdf(k / est.cout_hat, k)
        assert exact <= math.exp(-0.1 * k) + 3 * math.sqrt(exact / 3000) + 1e-3


def test_estimate_rate_constants_tree():
    est = estimate_rate_constants(GraphFamily("tree", d=2), 1.0, range(1, 7),
                                  trials=2000, target_exponent=0.1,
                                  master_seed=32)
    assert est.cout_hat > 1.0
    assert 0.0 < est.cin_hat < 1.0


def test_estimate_rate_constants_monotone_in_k_range():
    wide = estimate_rate_constants(GraphFamily("path"), 1.0, range(1, 11),
                                   trials=2000, target_exponent=0.1,
                                   master_seed=33)
    narrow = estimate_rate_constants(GraphFamily("path"), 1.0, range(1, 6),
                                     trials=2000, target_exponent=0.1,
                                     master_seed=33)
    assert wide.cin_hat <= narrow.cin_hat
    assert wide.cout_hat >= narrow.cout_hat


def test_estimate_rate_constants_warning_and_validation():
    with pytest.raises(InvalidParameterError):
        estimate_rate_constants(GraphFamily("path"), 1.0, range(1, 5),
                                trials=100, target_exponent=0.1, master_seed=1)
    est = estimate_rate_constants(GraphFamily("path"), 1.0, range(1, 100),
                                  trials=1000, target_exponent=0.5,
                                  master_seed=34)
    assert est.warning is not None and "estimate-unstable" in est.warning
