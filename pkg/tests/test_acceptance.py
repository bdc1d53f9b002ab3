"""Acceptance suite: one test per criterion, at the stated tolerances.

A per-criterion PASS/FAIL line is printed in the terminal summary (see conftest).
"""

import json
import math
import subprocess
import sys
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from geoproj.apps import decompose_columns
from geoproj.cli import main
from geoproj.core import LearningFunction, ProjectionProblem, RunConfig, objective, run_A, step_A
from geoproj.geometry import (
    Connection,
    _kl,
    fisher_e_pair,
    fisher_m_pair,
    log_ratio,
    pencil_fisher,
    pencil_point,
)
from geoproj.oracle import make_interior_problem, oracle, pythagorean_residuals, random_basis, random_interior_weights
from geoproj.stability import bound_e_projection, bound_k2_at_optimum, bound_m_projection
from geoproj.variants import (
    divergence_gradient,
    run_A_rescaled,
    run_Ba,
    run_C,
    run_Cb,
    run_gradient,
    step_Cb,
    step_update_rule1,
    step_update_rule2,
)

FIXTURES = Path(__file__).parent / "fixtures"
N_K2, N_K3 = 100, 50


@lru_cache(maxsize=None)
def interior_instances(connection: Connection):
    """100 K=2 and 50 K=3 problems with known interior optima, plus their oracle solutions."""
    rng = np.random.default_rng(2024 if connection is Connection.E_AS_NABLA else 2025)
    out = []
    for K, n in ((2, N_K2), (3, N_K3)):
        for _ in range(n):
            d = int(rng.integers(K + 1, 11))
            problem, w_true = make_interior_problem(rng, d, K, connection)
            out.append((problem, w_true, oracle(problem)))
    return out


def test_criterion_01_pythagorean_identity(connection):
    worst = 0.0
    for problem, w_true, sol in interior_instances(connection):
        assert np.all(sol.w_star > 1e-3), "oracle optimum should be interior"
        worst = max(worst, float(np.max(np.abs(pythagorean_residuals(problem, sol.w_star)))))
    assert worst < 1e-6


RUNNERS = {
    "A": run_A,
    "Ba": run_Ba,
    "C": run_C,
    "Cb": run_Cb,
    "grad": run_gradient,
    "rescaled": run_A_rescaled,
}


@pytest.mark.parametrize("algorithm", list(RUNNERS))
def test_criterion_02_oracle_equivalence(connection, algorithm):
    runner = RUNNERS[algorithm]
    config = RunConfig(record_trace=False)
    for i, (problem, _, sol) in enumerate(interior_instances(connection)):
        w, trace = runner(problem, config)
        assert trace.converged, f"instance {i}: {trace.reason}"
        np.testing.assert_allclose(w, sol.w_star, rtol=0, atol=1e-4, err_msg=f"instance {i}")


def _one_step_ratio(problem, w_star, slope, sign):
    w0 = w_star + sign * np.array([1e-4, -1e-4])
    w1 = step_A(problem, w0, LearningFunction.from_slope(slope))
    return abs(w1[0] - w_star[0]) / abs(w0[0] - w_star[0])


def test_criterion_03_k2_stability_threshold(connection):
    rng = np.random.default_rng(7)
    stable, unstable = [], []
    for _ in range(50):
        d = int(rng.integers(3, 11))
        problem, _ = make_interior_problem(rng, d, 2, connection)
        w_star = oracle(problem).w_star
        g = pencil_fisher(problem.basis[0], problem.basis[1], w_star[0], connection)
        bound = bound_k2_at_optimum(w_star[0], g)
        for sign in (1.0, -1.0):
            stable.append(_one_step_ratio(problem, w_star, 0.9 * bound, sign))
            unstable.append(_one_step_ratio(problem, w_star, 1.5 * bound, sign))
    stable, unstable = np.array(stable), np.array(unstable)
    assert np.all(stable < 1.0)
    np.testing.assert_allclose(stable, 0.8, atol=0.1)
    assert np.all(unstable > 1.0)
    np.testing.assert_allclose(unstable, 2.0, atol=0.2)


def test_criterion_04_closed_form_bounds():
    assert bound_e_projection((0.9, 0.1), (0.1, 0.9)) == 2.5
    expected = 32.0 / math.log(3.0) ** 2
    assert abs(bound_m_projection((0.5, 0.5), (0.25, 0.75)) - expected) <= 1e-12 * expected

    rng = np.random.default_rng(11)
    bounds = []
    for _ in range(1000):
        d = int(rng.integers(2, 11))
        p1, p2 = rng.dirichlet(np.full(d, 0.5), size=2)
        p1, p2 = np.maximum(p1, 1e-9), np.maximum(p2, 1e-9)
        bounds.append(bound_e_projection(p1 / p1.sum(), p2 / p2.sum()))
    bounds = np.array(bounds)
    assert np.all(bounds >= 1.0)
    # monitored only: how often the stronger sqrt(2) floor holds on this sample
    print(f"bound_e_projection >= sqrt(2) on {np.mean(bounds >= math.sqrt(2)):.1%} of pairs, min {bounds.min():.4f}")


def test_criterion_05_gradient_identity(connection):
    rng = np.random.default_rng(5)
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 7))
        K = int(rng.integers(2, 5))
        problem = ProjectionProblem(random_basis(rng, d, 1)[0], random_basis(rng, d, K), connection)
        w = random_interior_weights(rng, K)
        analytic = divergence_gradient(problem, w)
        for k in range(K - 1):
            e = np.zeros(K)
            e[k], e[-1] = 1.0, -1.0
            fd = (objective(problem, w + h * e) - objective(problem, w - h * e)) / (2 * h)
            worst = max(worst, abs(fd - analytic[k]))
    assert worst < 1e-8


def test_criterion_06_A_Cb_first_order_equivalence(connection):
    rng = np.random.default_rng(6)
    ratios = []
    for _ in range(50):
        K = int(rng.integers(2, 5))
        d = int(rng.integers(K + 1, 9))
        problem, w_star = make_interior_problem(rng, d, K, connection)
        lf = LearningFunction.from_slope(0.5)
        v = rng.standard_normal(K)
        v -= v.mean()
        v /= np.linalg.norm(v)
        diffs = []
        for eps in (1e-3, 5e-4):
            w = w_star + eps * v
            diffs.append(np.linalg.norm(step_A(problem, w, lf) - step_Cb(problem, w, lf)))
        ratios.append(diffs[0] / diffs[1])
    ratios = np.array(ratios)
    assert np.all((ratios >= 3.5) & (ratios <= 4.5)), ratios


def test_criterion_07_update_rule_factor():
    rng = np.random.default_rng(8)
    for _ in range(100):
        K = int(rng.integers(2, 7))
        w = random_interior_weights(rng, K, floor=0.05)
        k = int(rng.integers(K))
        delta = float(rng.choice([-1, 1]) * 10 ** rng.uniform(-3, -1.5))

        def scaled_gap(dl):
            gap = step_update_rule2(w, k, dl) - step_update_rule1(w, k, (1.0 - w[k]) * dl)
            return np.linalg.norm(gap) / dl**2

        r1, r2 = scaled_gap(delta), scaled_gap(delta / 2)
        assert r1 <= 2.0
        assert abs(r1 / r2 - 1.0) <= abs(delta)


def test_criterion_08_fisher_information():
    rng = np.random.default_rng(9)
    h = 1e-4
    for _ in range(100):
        d = int(rng.integers(2, 11))
        p1, p2 = random_basis(rng, d, 2)
        w0 = float(rng.uniform(0.05, 0.9))
        for fisher, conn in ((fisher_m_pair, Connection.E_AS_NABLA), (fisher_e_pair, Connection.M_AS_NABLA)):
            a = pencil_point(p1, p2, w0, conn)
            b = pencil_point(p1, p2, w0 + h, conn)
            fd = 2.0 * _kl(a, b) / h**2
            exact = fisher(p1, p2, w0)
            assert abs(fd - exact) / exact < 1e-3
        a = log_ratio(p1, p2)
        for w in np.linspace(0.0, 1.0, 11):
            assert fisher_e_pair(p1, p2, w) <= (a.max() - a.min()) ** 2 / 4.0


def test_criterion_09_decomposition_recovery():
    rng = np.random.default_rng(10)
    for i in range(20):
        P = random_basis(rng, 8, 3).T
        assert np.linalg.matrix_rank(P) == 3
        W = np.column_stack([random_interior_weights(rng, 3) for _ in range(10)])
        res = decompose_columns(P @ W, P)
        np.testing.assert_allclose(res.W, W, rtol=0, atol=1e-4, err_msg=f"instance {i}")
        assert res.divergences.max() < 1e-8


MALFORMED = json.loads((FIXTURES / "malformed" / "expected.json").read_text())


def test_criterion_10_cli_determinism_and_validation(tmp_path, capsys):
    rng = np.random.default_rng(4)
    for K, conn in ((2, Connection.E_AS_NABLA), (3, Connection.M_AS_NABLA)):
        problem, _ = make_interior_problem(rng, 6, K, conn)
        path = tmp_path / f"p{K}.json"
        path.write_text(json.dumps({"target": problem.target.tolist(), "basis": problem.basis.tolist(),
                                    "connection": conn.value}))
        for algo in ("A", "B", "Cb", "adaptive"):
            traces = []
            for rep in range(2):
                out = tmp_path / f"t{K}_{algo}_{rep}.csv"
                proc = subprocess.run(
                    [sys.executable, "-m", "geoproj", "project", str(path), "-a", algo, "--trace", str(out)],
                    capture_output=True,
                )
                assert proc.returncode == 0, proc.stderr
                traces.append(out.read_bytes())
            assert traces[0] == traces[1]

    for name, expected in MALFORMED.items():
        code = main(["project", str(FIXTURES / "malformed" / name)])
        err = capsys.readouterr().err
        assert code == 1, name
        assert expected in err, f"{name}: {err!r}"
