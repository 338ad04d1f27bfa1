"""Quick self-check suite behind ``fdcr verify``.

Each check returns ``(name, value, limit, passed)`` with ``passed`` meaning
``value <= limit``.
"""

import numpy as np

from .channel import SystemConfig, lin_to_db
from .experiments import draw_trial
from .linalg import JACOBI_MAX_SWEEPS, JACOBI_TOL, eigvalsh, jacobi_eig_loops, jacobi_eig_numpy
from .oracle import (
    audit, leakage_batch_loops, leakage_batch_numpy, perturbed_leakage, quad_forms_loops,
    quad_forms_numpy, sampled_lower_bound, worst_case_dl_leakage, worst_case_ul_leakage,
)
from .problem import RobustInstance, build_relaxed, c5a_min_delta, c5b_min_gap, hd_sinr_target
from .recovery import recover
from .solver import kkt_residuals, solve

__all__ = ["run_checks"]


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _sprocedure(rng, n_tuples):
    dl = ul = 0.0
    for _ in range(n_tuples):
        n = int(rng.integers(2, 10))
        X = _crandn(rng, n, n)
        W = X @ X.conj().T
        l = _crandn(rng, n)
        eps = float(rng.uniform(0.0, 1.0)) * float(np.linalg.norm(l))
        ref = worst_case_dl_leakage(W, l, eps)
        dl = max(dl, abs(c5a_min_delta(W, l, eps) - ref) / ref)
        J = int(rng.integers(1, 6))
        P = rng.uniform(0.1, 1.0, size=J)
        e = _crandn(rng, J)
        eps = float(rng.uniform(0.0, 1.0)) * float(np.linalg.norm(e))
        ref = worst_case_ul_leakage(P, e, eps)
        ul = max(ul, abs(c5b_min_gap(P, e, eps) - ref) / ref)
    return dl, ul


def _kernels(rng):
    X = _crandn(rng, 7, 7)
    A = X + X.conj().T
    lam_a = jacobi_eig_loops(A.copy(), JACOBI_TOL, JACOBI_MAX_SWEEPS)[0]
    lam_b = jacobi_eig_numpy(A.copy(), JACOBI_TOL, JACOBI_MAX_SWEEPS)[0]
    err = float(np.max(np.abs(np.sort(lam_a) - np.sort(lam_b)))) / float(np.max(np.abs(lam_b)))
    x = _crandn(rng, 7)
    D = _crandn(rng, 64, 7)
    H = A @ A.conj().T
    qa, qb = quad_forms_loops(H, x, D), quad_forms_numpy(H, x, D)
    err = max(err, float(np.max(np.abs(qa - qb) / np.abs(qb))))
    w = _crandn(rng, 3, 7)
    P = rng.uniform(size=4)
    L, E = _crandn(rng, 64, 7), _crandn(rng, 64, 4)
    la, lb = leakage_batch_loops(w, P, L, E), leakage_batch_numpy(w, P, L, E)
    return max(err, float(np.max(np.abs(la - lb) / np.abs(lb))))


def _sampling(rng):
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 8))
        X = _crandn(rng, n, n)
        A = X @ X.conj().T
        x = _crandn(rng, n)
        eps = float(rng.uniform(0.1, 1.0))
        exact = worst_case_dl_leakage(A, x, eps)
        lower = sampled_lower_bound(A, x, eps, 2000, rng)
        worst = max(worst, (lower - exact) / exact)
    return max(worst, 0.0)


def _trial_checks(seed, max_tries=10):
    cfg = SystemConfig(N_T=9)
    for trial in range(max_tries):
        chan = draw_trial(cfg, seed, trial)
        inst = RobustInstance.from_realization(chan, cfg)
        problem = build_relaxed(inst)
        rep = solve(problem)
        if rep.optimal:
            break
    else:
        return [("seeded trial solved", 1.0, 0.0, False)]
    kkt = kkt_residuals(problem, rep)
    sol = recover(rep, inst, problem)
    ratio = max(float(eigvalsh(W)[-2] / eigvalsh(W)[-1]) for W in sol.W)
    aud = audit(sol, chan, cfg)
    rng = np.random.default_rng(seed)
    real = perturbed_leakage(sol.w, sol.P, chan.l_hat, chan.e_hat[: cfg.J], chan.eps_dl,
                             chan.eps_ul_jr[: cfg.J], 1000, rng)
    excess = max(float(np.max(real)) - sol.tau, 0.0)
    return [
        ("solver duality gap (rel)", rep.rel_gap, 1e-7, rep.rel_gap <= 1e-7),
        ("solver infeasibility (scaled)", rep.primal_infeasibility, 1e-8, rep.primal_infeasibility <= 1e-8),
        ("KKT residuals", kkt.worst, 1e-6, kkt.worst <= 1e-6),
        ("rank-one eigenvalue ratio", ratio, 1e-6, ratio <= 1e-6),
        ("audit violation (scaled)", aud.max_violation, 1e-6, aud.ok),
        ("perturbed leakage - tau (W)", excess, 1e-9, excess <= 1e-9),
    ]


def run_checks(seed=0, n_tuples=40):
    rng = np.random.default_rng(seed)
    dl, ul = _sprocedure(rng, n_tuples)
    hd = abs(float(lin_to_db(hd_sinr_target(10 ** 0.6))) - 13.77)
    kern = _kernels(rng)
    samp = _sampling(rng)
    rows = [
        (f"S-procedure DL vs oracle ({n_tuples})", dl, 1e-6, dl <= 1e-6),
        (f"S-procedure UL vs oracle ({n_tuples})", ul, 1e-6, ul <= 1e-6),
        ("HD target at 6 dB - 13.77 dB", hd, 1e-2, hd <= 1e-2),
        ("compiled vs numpy kernels (rel)", kern, 1e-10, kern <= 1e-10),
        ("sampled max above exact (rel)", samp, 1e-12, samp <= 1e-12),
    ]
    return rows + _trial_checks(seed)
