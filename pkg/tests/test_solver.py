import dataclasses

import numpy as np
import pytest

from fdcr.channel import SystemConfig
from fdcr.problem import Block, ConicProblem, RobustInstance, Variable, build_relaxed, hbasis, hvec
from fdcr.solver import SolverSettings, kkt_residuals, solve

from conftest import crandn, make_realization, random_hermitian

cp = pytest.importorskip("cvxpy")


def scalar_problem(bound=3.0):
    blk = Block("low", np.array([[-bound]], dtype=complex), {"tau": np.ones((1, 1, 1), dtype=complex)})
    return ConicProblem(variables=(Variable("tau"),), objective={"tau": np.array([1.0])}, blocks=(blk,))


def clip_problem(A):
    """min Tr W s.t. W >= A, W >= 0."""
    n = A.shape[0]
    blocks = (Block("dom", -np.asarray(A, dtype=complex), {"W": hbasis(n)}),
              Block("psd", np.zeros((n, n), dtype=complex), {"W": hbasis(n)}))
    return ConicProblem(variables=(Variable("W", n),), objective={"W": hvec(np.eye(n))}, blocks=blocks)


def single_user(l_vec, h=None, gamma=10.0):
    h = np.array([1.0, 0.5j, -0.25]) * 1e-4 if h is None else h
    cfg = SystemConfig(K=1, J=0, R=1, N_T=len(h), kappa2=0.0, gamma_DL=gamma)
    chan = make_realization(h, l=np.atleast_2d(l_vec))
    return RobustInstance.from_realization(chan, cfg), cfg


def test_scalar_lp():
    rep = solve(scalar_problem())
    assert rep.optimal
    assert rep.values["tau"] == pytest.approx(3.0, rel=1e-9)
    assert rep.duals["low"][0, 0].real == pytest.approx(1.0, rel=1e-7)


def test_scalar_kkt_exact_pair():
    problem = scalar_problem()
    rep = solve(problem)
    exact = dataclasses.replace(rep, values={"tau": 3.0}, duals={"low": np.array([[1.0 + 0j]])})
    assert kkt_residuals(problem, exact).worst <= 1e-14


def test_multiplier_perturbation_detected():
    problem = scalar_problem()
    rep = solve(problem)
    bumped = dataclasses.replace(rep, duals={"low": rep.duals["low"] * (1 + 1e-3)})
    assert kkt_residuals(problem, bumped).stationarity >= 1e-4


def test_clip_negative_part():
    U, _ = np.linalg.qr(crandn(np.random.default_rng(1), 2, 2))
    A = U @ np.diag([-1.0, 2.0]) @ U.conj().T
    rep = solve(clip_problem(A))
    assert rep.optimal
    assert rep.primal_objective == pytest.approx(2.0, rel=1e-8)
    Apos = U @ np.diag([0.0, 2.0]) @ U.conj().T
    np.testing.assert_allclose(rep.values["W"], Apos, atol=1e-7)


def test_infeasible_status():
    # tau >= 1 and -tau >= 0
    blocks = (
        Block("a", np.array([[-1.0 + 0j]]), {"tau": np.ones((1, 1, 1), dtype=complex)}),
        Block("b", np.zeros((1, 1), dtype=complex), {"tau": -np.ones((1, 1, 1), dtype=complex)}),
    )
    problem = ConicProblem((Variable("tau"),), {"tau": np.array([1.0])}, blocks)
    assert solve(problem).status == "infeasible"


def test_orthogonal_single_user_zero():
    inst, _ = single_user(np.array([0, 0, 0.3e-3]), h=np.array([1.0, 0.5j, 0]) * 1e-4)
    rep = solve(build_relaxed(inst))
    assert rep.optimal and abs(rep.values["tau"]) <= 1e-20


def test_aligned_single_user_closed_form():
    h = np.array([1.0, 0.5j, -0.25]) * 1e-4
    c = 0.3 - 0.2j
    inst, cfg = single_user(np.conj(c) * h, h=h)
    rep = solve(build_relaxed(inst))
    expected = abs(c) ** 2 * cfg.gamma_DL[0] * cfg.sigma2_DL[0]
    assert rep.optimal
    assert rep.values["tau"] == pytest.approx(expected, rel=1e-6)
    # brute force over beam directions at the minimum feasible power
    rng = np.random.default_rng(0)
    best = np.inf
    for _ in range(20_000):
        w = crandn(rng, 3)
        w = w / abs(np.vdot(h, w)) * np.sqrt(cfg.gamma_DL[0] * cfg.sigma2_DL[0])
        best = min(best, abs(np.vdot(np.conj(c) * h, w)) ** 2)
    assert best >= expected * (1 - 1e-9)


def test_certified_report_has_small_kkt(solved9):
    problem, rep = solved9["problem"], solved9["report"]
    assert rep.rel_gap <= 1e-7 and rep.primal_infeasibility <= 1e-8
    assert rep.dual_objective <= rep.primal_objective * (1 + 1e-7)
    assert kkt_residuals(problem, rep).worst <= 1e-6


def test_relaxed_multiplier_perturbation_detected(solved9):
    problem, rep = solved9["problem"], solved9["report"]
    duals = dict(rep.duals)
    duals["C1[0]"] = duals["C1[0]"] * (1 + 1e-3)
    bumped = dataclasses.replace(rep, duals=duals)
    assert kkt_residuals(problem, bumped).stationarity >= 1e-4


def test_deterministic():
    A = random_hermitian(np.random.default_rng(3), 4)
    a, b = solve(clip_problem(A)), solve(clip_problem(A))
    np.testing.assert_array_equal(a.values["W"], b.values["W"])


def test_settings_iteration_cap():
    A = random_hermitian(np.random.default_rng(4), 8) * 1e3
    rep = solve(clip_problem(A), SolverSettings(max_iters=1, polish_steps=0))
    assert rep.status == "numerical-failure"
    assert rep.values  # best iterate attached


def _direct_complex(problem):
    """Same problem stated in cvxpy with complex Hermitian variables."""
    xs, coords, cons = {}, {}, []
    for v in problem.variables:
        if v.dim is None:
            xs[v.name] = cp.Variable()
            coords[v.name] = [xs[v.name]]
        else:
            X = cp.Variable((v.dim, v.dim), hermitian=True)
            xs[v.name] = X
            n = v.dim
            c = [cp.real(X[i, i]) for i in range(n)]
            for i in range(n):
                for j in range(i + 1, n):
                    c += [cp.real(X[i, j]), cp.imag(X[i, j])]
            coords[v.name] = c
    for b in problem.blocks:
        expr = b.const
        for name, coef in b.coefs.items():
            for t, x in enumerate(coords[name]):
                if np.any(coef[t]):
                    expr = expr + x * coef[t]
        if b.dim == 1:
            cons.append(cp.real(expr[0, 0]) >= 0)
        else:
            cons.append((expr + cp.conj(expr).T) / 2 >> 0)
    obj = sum(coords[n][t] * float(c[t]) for n, c in problem.objective.items()
              for t in range(len(c)) if c[t])
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12,
               max_iter=500)
    return prob.value


def test_complex_path_agrees():
    rng = np.random.default_rng(11)
    for n in (2, 3, 4):
        A = random_hermitian(rng, n)
        B = random_hermitian(rng, n)
        blocks = (
            Block("dom", -A.astype(complex), {"W": hbasis(n)}),
            Block("cap", (10.0 * np.eye(n)).astype(complex), {"W": -hbasis(n)}),
        )
        problem = ConicProblem((Variable("W", n),), {"W": hvec(B + 3 * np.eye(n))}, blocks)
        ours = solve(problem)
        assert ours.optimal
        ref = _direct_complex(problem)
        assert ours.primal_objective == pytest.approx(ref, rel=1e-8)
