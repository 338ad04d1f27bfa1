import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdcr.channel import SystemConfig
from fdcr.oracle import (
    audit, leakage_batch_loops, leakage_batch_numpy, perturbed_leakage, quad_forms_loops,
    quad_forms_numpy, sampled_lower_bound, worst_case_dl_leakage, worst_case_quadratic,
    worst_case_ul_leakage,
)
from fdcr.recovery import BeamformingSolution

from conftest import crandn, random_psd, seeded_realization


def test_pure_radius():
    wc = worst_case_quadratic(np.eye(3), np.zeros(3), 0.7)
    assert wc.value == pytest.approx(0.49)
    assert np.linalg.norm(wc.delta) == pytest.approx(0.7)


def test_diag_example():
    wc = worst_case_quadratic(np.diag([2.0, 1.0]), np.array([1.0, 0.0]), 1.0)
    assert wc.value == pytest.approx(8.0, rel=1e-12)
    np.testing.assert_allclose(wc.delta, [1.0, 0.0], atol=1e-9)


def test_diag_example_dense_grid():
    # real and imaginary parts of both coordinates on the unit 3-sphere
    rng = np.random.default_rng(0)
    g = rng.standard_normal((200_000, 4))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    d = g[:, :2] + 1j * g[:, 2:]
    y = np.array([1.0, 0.0]) + d
    vals = 2 * np.abs(y[:, 0]) ** 2 + np.abs(y[:, 1]) ** 2
    assert vals.max() <= 8.0 + 1e-12
    assert vals.max() >= 8.0 - 1e-2


def test_zero_radius():
    A = random_psd(np.random.default_rng(1), 4)
    x = crandn(np.random.default_rng(2), 4)
    assert worst_case_quadratic(A, x, 0.0).value == pytest.approx(np.vdot(x, A @ x).real)
    with pytest.raises(ValueError):
        worst_case_quadratic(A, x, -1.0)


def test_dl_leakage_trivial_cases(rng):
    l = crandn(rng, 4)
    assert worst_case_dl_leakage(np.zeros((4, 4)), l, 0.3) == 0.0
    w = crandn(rng, 4)
    l_perp = l - np.vdot(w, l) / np.vdot(w, w) * w
    assert worst_case_dl_leakage(np.outer(w, w.conj()), l_perp, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_ul_leakage_closed_forms():
    e = np.array([0.3 - 0.4j])
    assert worst_case_ul_leakage(np.zeros(1), e, 0.2) == 0.0
    assert worst_case_ul_leakage(np.array([2.0]), e, 0.2) == pytest.approx(2.0 * (0.5 + 0.2) ** 2)


def test_hard_case():
    # x_hat has no component on the top eigenvector
    A = np.diag([3.0, 1.0])
    wc = worst_case_quadratic(A, np.array([0.0, 0.1]), 1.0)
    assert wc.hard_case
    # maximum: d_2 = 0.1 * 1 / (3 - 1) = 0.05 then fill the top direction
    d2 = 0.05
    expected = 3.0 * (1.0 - d2 ** 2) + (0.1 + d2) ** 2
    assert wc.value == pytest.approx(expected, rel=1e-12)
    assert np.linalg.norm(wc.delta) == pytest.approx(1.0)


def test_maximizer_attains_value(rng):
    for _ in range(200):
        n = int(rng.integers(1, 10))
        A = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
        x = crandn(rng, n)
        eps = float(rng.uniform(0.01, 2.0))
        wc = worst_case_quadratic(A, x, eps)
        y = x + wc.delta
        assert np.vdot(y, A @ y).real == pytest.approx(wc.value, rel=1e-12)
        assert wc.residual <= 1e-9


def test_sampled_bound_below_exact():
    rng = np.random.default_rng(3)
    for _ in range(10_000):
        n = int(rng.integers(1, 6))
        A = random_psd(rng, n)
        x = crandn(rng, n)
        eps = float(rng.uniform(0.0, 1.5))
        exact = worst_case_quadratic(A, x, eps).value
        assert sampled_lower_bound(A, x, eps, 8, rng) <= exact * (1 + 1e-12) + 1e-300


def test_sampled_bound_converges_on_diag_example():
    rng = np.random.default_rng(4)
    A, x = np.diag([2.0, 1.0]), np.array([1.0, 0.0])
    lows = [sampled_lower_bound(A, x, 1.0, n, rng) for n in (10, 1000, 100_000)]
    assert all(v <= 8.0 for v in lows)
    assert lows[-1] >= 8.0 - 5e-3
    assert sampled_lower_bound(A, x, 0.0, 1, rng) == 2.0


def test_kernels_agree(rng):
    A = random_psd(rng, 6)
    x = crandn(rng, 6)
    D = crandn(rng, 300, 6)
    np.testing.assert_allclose(quad_forms_loops(A, x, D), quad_forms_numpy(A, x, D), rtol=1e-12)
    w, P = crandn(rng, 3, 6), rng.uniform(size=4)
    L, E = crandn(rng, 300, 6), crandn(rng, 300, 4)
    np.testing.assert_allclose(leakage_batch_loops(w, P, L, E), leakage_batch_numpy(w, P, L, E), rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 2**31), eps_frac=st.floats(0.0, 1.0))
def test_oracle_dominates_samples(n, seed, eps_frac):
    rng = np.random.default_rng(seed)
    A = random_psd(rng, n)
    x = crandn(rng, n)
    eps = eps_frac * float(np.linalg.norm(x))
    exact = worst_case_quadratic(A, x, eps).value
    D = crandn(rng, 200, n)
    D = eps * D / np.linalg.norm(D, axis=1, keepdims=True)
    assert np.max(quad_forms_numpy(A, x, D)) <= exact * (1 + 1e-10) + 1e-300


def _solution(w, P, tau, cfg):
    R = cfg.R
    return BeamformingSolution(W=tuple(np.outer(v, v.conj()) for v in w), w=np.asarray(w), P=np.asarray(P),
                               tau=tau, delta=np.zeros(R), alpha=np.zeros(R), beta=np.zeros(R),
                               provenance="direct")


def test_audit_flags_switched_off_solution():
    cfg = SystemConfig()
    chan = seeded_realization(cfg, 0)
    sol = _solution(np.zeros((cfg.K, cfg.N_T), dtype=complex), np.zeros(cfg.J), 0.0, cfg)
    rep = audit(sol, chan, cfg)
    assert not rep.ok
    bad = rep.failures()
    assert {f"C1[{k}]" for k in range(cfg.K)} <= set(bad)
    assert {f"C2[{j}]" for j in range(cfg.J)} <= set(bad)
    assert "leakage" not in bad


def test_audit_of_recovered_solution(solved9):
    sol, chan = solved9["solution"], solved9["chan"]
    rep = audit(sol, chan, solved9["inst"].cfg)
    assert rep.ok, rep.failures()
    assert rep.worst_leakage <= sol.tau * (1 + 1e-6)
    assert np.max(rep.true_leakage) <= sol.tau * (1 + 1e-6)
    assert rep.worst_leakage == pytest.approx(sol.tau, rel=1e-6)


def test_audit_kappa_zero_truth_equals_worst_case():
    cfg = SystemConfig(kappa2=0.0)
    chan = seeded_realization(cfg, 5)
    rng = np.random.default_rng(0)
    w = crandn(rng, cfg.K, cfg.N_T) * 1e-2
    P = rng.uniform(0, 1e-2, cfg.J)
    rep = audit(_solution(w, P, 1.0, cfg), chan, cfg)
    np.testing.assert_allclose(rep.true_leakage, rep.dl_leakage + rep.ul_leakage, rtol=1e-12)


def test_perturbed_leakage_bounded_by_worst_case(solved9):
    sol, chan = solved9["solution"], solved9["chan"]
    cfg = solved9["inst"].cfg
    vals = perturbed_leakage(sol.w, sol.P, chan.l_hat, chan.e_hat, chan.eps_dl, chan.eps_ul_jr,
                             1000, np.random.default_rng(0))
    assert vals.shape == (1000,)
    assert np.max(vals) <= sol.tau + 1e-9
    # a solution claiming less than its nominal leakage is caught
    cheat = dataclasses.replace(sol, tau=sol.tau * 0.5)
    assert "leakage" in audit(cheat, chan, cfg).failures()
