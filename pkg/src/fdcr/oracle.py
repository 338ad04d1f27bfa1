"""Ground-truth checks that do not go through the conic solver.

``worst_case_quadratic`` solves ``max_{||d|| <= eps} (x + d)^H A (x + d)``
for ``A >= 0`` exactly. Because the objective is convex the maximiser lies
on the sphere and satisfies ``A (x + d) = mu d`` with ``mu >= lambda_max``;
in eigen-coordinates ``d_i = lambda_i c_i / (mu - lambda_i)`` and
``||d(mu)||`` is strictly decreasing, so ``mu`` is found by bisection.
"""

from dataclasses import dataclass, field

import numpy as np

from ._accel import USE_NUMBA, njit
from .linalg import as_hermitian, hermitian_eig
from .receivers import evaluate_dl_sinr, evaluate_ul_sinr, zf_receivers

__all__ = [
    "BISECTION_RTOL",
    "HARD_CASE_TOL",
    "AuditReport",
    "WorstCase",
    "worst_case_quadratic",
    "worst_case_dl_leakage",
    "worst_case_ul_leakage",
    "sampled_lower_bound",
    "sphere_samples",
    "quad_forms_loops",
    "quad_forms_numpy",
    "leakage_batch_loops",
    "leakage_batch_numpy",
    "perturbed_leakage",
    "realized_leakage",
    "audit",
]

BISECTION_RTOL = 1e-10  # stop when | ||d(mu)|| - eps | <= BISECTION_RTOL * eps
HARD_CASE_TOL = 1e-12  # top-eigenspace weight of x below this * ||x|| -> hard case
AUDIT_TOL = 1e-6


@dataclass(frozen=True)
class WorstCase:
    value: float
    delta: np.ndarray  # maximising perturbation, ||delta|| = eps
    mu: float  # multiplier; nan in the hard case or for eps = 0
    hard_case: bool
    residual: float  # | ||delta|| - eps | / eps  (0 for eps = 0)


# --------------------------------------------------------------------------
# secular equation
# --------------------------------------------------------------------------
@njit
def _secular_bisect(gap, b2, eps, t_hi, rtol):
    """Root of ``sum b2_i / (t + gap_i)^2 = eps^2`` over ``t`` in ``(0, t_hi]``.

    ``gap_i = lambda_max - lambda_i >= 0``. Geometric bisection while the
    bracket spans orders of magnitude, arithmetic afterwards.
    """
    target = eps * eps
    lo = t_hi * 1e-300
    hi = t_hi
    t = hi
    for _ in range(4000):
        if hi > 4.0 * lo:
            t = np.sqrt(lo) * np.sqrt(hi)
        else:
            t = 0.5 * (lo + hi)
        s = 0.0
        for i in range(gap.shape[0]):
            den = t + gap[i]
            s += b2[i] / (den * den)
        norm = np.sqrt(s)
        if abs(norm - eps) <= rtol * eps:
            return t
        if s > target:
            lo = t
        else:
            hi = t
        if hi - lo <= 1e-17 * hi:
            return 0.5 * (lo + hi)
    return t


def worst_case_quadratic(A, x_hat, eps):
    """Exact ``max_{||d|| <= eps} (x_hat + d)^H A (x_hat + d)`` for PSD ``A``.

    Returns a :class:`WorstCase`; ``value`` is also checked against the
    objective evaluated at the returned maximiser.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    A = as_hermitian(A)
    x = np.asarray(x_hat, dtype=np.complex128).ravel()
    n = x.shape[0]
    if eps == 0.0:
        return WorstCase(float(np.real(np.vdot(x, A @ x))), np.zeros(n, dtype=complex), np.nan, False, 0.0)
    lam, U = hermitian_eig(A, check=False)
    lam = np.maximum(lam, 0.0)  # A is PSD up to rounding
    lmax = lam[-1]
    c = U.conj().T @ x
    gap = lmax - lam
    top = gap <= 1e-12 * max(lmax, 1e-300)
    xnorm = float(np.linalg.norm(x))
    b = lam * c  # eigen-coordinates of A x
    ax_norm = float(np.linalg.norm(b))

    hard = lmax == 0.0 or float(np.linalg.norm(c[top])) <= HARD_CASE_TOL * xnorm
    if hard:
        d = np.zeros(n, dtype=np.complex128)
        rest = ~top
        d[rest] = b[rest] / gap[rest]
        dn = float(np.linalg.norm(d))
        if dn < eps:
            # lift along a top eigenvector to reach the sphere
            i = int(np.flatnonzero(top)[0])
            phase = c[i] / abs(c[i]) if abs(c[i]) > 0 else 1.0
            d[i] = phase * np.sqrt(eps * eps - dn * dn)
            mu = np.nan
        else:
            hard = False
    if not hard:
        t_hi = ax_norm / eps
        if t_hi > 1e200:
            # radius negligible against every eigen-gap: step along A x_hat
            t = t_hi
            d = b * (eps / ax_norm)
        else:
            t = _secular_bisect(gap, np.abs(b) ** 2, float(eps), t_hi, BISECTION_RTOL)
            d = b / (t + gap)
            d *= eps / np.linalg.norm(d)  # land exactly on the sphere
        mu = float(lmax + t)
    delta = U @ d
    y = x + delta
    value = float(np.real(np.vdot(y, A @ y)))
    residual = abs(float(np.linalg.norm(delta)) - eps) / eps
    return WorstCase(value, delta, mu, bool(hard), residual)


def worst_case_dl_leakage(W_sum, l_hat, eps):
    """Worst DL leakage ``max l^H (sum_k W_k) l`` over ``||l - l_hat|| <= eps``."""
    return worst_case_quadratic(W_sum, l_hat, eps).value


def worst_case_ul_leakage(P, e_hat, eps):
    """Worst UL leakage ``max sum_j P_j |e_j|^2`` over ``||e - e_hat|| <= eps``
    (stacked ball)."""
    P = np.asarray(P, dtype=float)
    if P.size == 0:
        return 0.0
    return worst_case_quadratic(np.diag(P).astype(complex), e_hat, eps).value


# --------------------------------------------------------------------------
# sampling kernels
# --------------------------------------------------------------------------
@njit
def quad_forms_loops(A, x, D):
    """``(x + D[s])^H A (x + D[s])`` for every row ``s`` of ``D``."""
    ns, n = D.shape
    out = np.empty(ns)
    y = np.empty(n, dtype=np.complex128)
    for s in range(ns):
        for i in range(n):
            y[i] = x[i] + D[s, i]
        acc = 0.0
        for i in range(n):
            row = 0.0 + 0.0j
            for j in range(n):
                row += A[i, j] * y[j]
            acc += (y[i].conjugate() * row).real
        out[s] = acc
    return out


def quad_forms_numpy(A, x, D):
    Y = x[None, :] + D
    return np.real(np.einsum("si,ij,sj->s", Y.conj(), A, Y))


_quad_forms = quad_forms_loops if USE_NUMBA else quad_forms_numpy


def sphere_samples(rng, n_dim, n_samples, eps):
    """``n_samples`` points uniform on the complex sphere of radius ``eps``."""
    g = rng.standard_normal((n_samples, n_dim)) + 1j * rng.standard_normal((n_samples, n_dim))
    return eps * g / np.linalg.norm(g, axis=1, keepdims=True)


def sampled_lower_bound(A, x_hat, eps, n_samples, rng):
    """Max of the quadratic over ``n_samples`` uniform points on the sphere."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    A = as_hermitian(A)
    x = np.asarray(x_hat, dtype=np.complex128).ravel()
    if eps == 0.0:
        return float(np.real(np.vdot(x, A @ x)))
    best = -np.inf
    chunk = 65536
    left = int(n_samples)
    while left > 0:
        m = min(chunk, left)
        D = sphere_samples(rng, x.shape[0], m, eps)
        best = max(best, float(np.max(_quad_forms(A, x, D))))
        left -= m
    return best


@njit
def leakage_batch_loops(w, P, L, E):
    """Realised leakage ``sum_k |l^H w_k|^2 + sum_j P_j |e_j|^2`` for every
    sampled channel pair ``(L[s], E[s])``."""
    ns = L.shape[0]
    K, n = w.shape
    J = P.shape[0]
    out = np.empty(ns)
    for s in range(ns):
        acc = 0.0
        for k in range(K):
            z = 0.0 + 0.0j
            for i in range(n):
                z += L[s, i].conjugate() * w[k, i]
            acc += z.real * z.real + z.imag * z.imag
        for j in range(J):
            e = E[s, j]
            acc += P[j] * (e.real * e.real + e.imag * e.imag)
        out[s] = acc
    return out


def leakage_batch_numpy(w, P, L, E):
    dl = np.sum(np.abs(L.conj() @ w.T) ** 2, axis=1) if w.size else np.zeros(L.shape[0])
    ul = np.abs(E) ** 2 @ P if P.size else np.zeros(L.shape[0])
    return dl + ul


_leakage_batch = leakage_batch_loops if USE_NUMBA else leakage_batch_numpy


def realized_leakage(w, P, l, e):
    """Leakage at one PU for concrete channels ``l`` (N_T,) and ``e`` (J,)."""
    w = np.asarray(w, dtype=np.complex128).reshape(-1, np.size(l))
    return float(np.sum(np.abs(w.conj() @ l) ** 2) + np.sum(np.asarray(P) * np.abs(e) ** 2))


def perturbed_leakage(w, P, l_hat, e_hat, eps_dl, eps_ul_jr, n_samples, rng):
    """Max over PUs of the realised leakage for ``n_samples`` channels drawn
    uniformly from the uncertainty sets (DL ball and per-user UL disks).

    Returns an ``(n_samples,)`` array.
    """
    from .channel import uniform_ball

    w = np.ascontiguousarray(np.asarray(w, dtype=np.complex128))
    P = np.ascontiguousarray(np.asarray(P, dtype=float))
    R, N = l_hat.shape
    J = e_hat.shape[0]
    worst = np.full(n_samples, -np.inf)
    for r in range(R):
        L = l_hat[r][None, :] + eps_dl[r] * uniform_ball(rng, N, size=n_samples)
        if J:
            E = e_hat[:, r][None, :] + eps_ul_jr[:, r][None, :] * uniform_ball(rng, 1, size=n_samples * J).reshape(n_samples, J)
        else:
            E = np.zeros((n_samples, 0), dtype=np.complex128)
        vals = _leakage_batch(w, P, np.ascontiguousarray(L), np.ascontiguousarray(E))
        worst = np.maximum(worst, vals)
    return worst


# --------------------------------------------------------------------------
# audit
# --------------------------------------------------------------------------
@dataclass
class AuditReport:
    dl_leakage: np.ndarray  # (R,) worst case over the DL ball
    ul_leakage: np.ndarray  # (R,) worst case over the stacked UL ball
    worst_leakage: float  # max_r (dl + ul)
    tau: float
    leakage_slack: float  # tau - worst_leakage
    true_leakage: np.ndarray  # (R,) at the true PU channels
    dl_sinr: np.ndarray
    ul_sinr: np.ndarray
    margins: dict = field(default_factory=dict)  # scaled, >= 0 means satisfied
    passed: dict = field(default_factory=dict)
    max_violation: float = 0.0

    @property
    def ok(self):
        return all(self.passed.values())

    def failures(self):
        return sorted(k for k, v in self.passed.items() if not v)


def audit(solution, realization, cfg, *, bank=None, gamma_dl=None, gamma_ul=None,
          serve_dl=True, serve_ul=True, tol=AUDIT_TOL):
    """Recheck a beamforming solution from scratch.

    SINRs are evaluated in scalar form on the perfectly known secondary
    channels, worst-case leakage with :func:`worst_case_quadratic` over the
    estimated balls, and the realised leakage at the true primary channels.
    Every margin is scaled (relative to its target or budget) and passes
    when ``>= -tol``.

    ``serve_dl`` / ``serve_ul`` switch off the SINR checks of a direction
    that the solution does not serve (half-duplex phases); ``gamma_*``
    override the targets from ``cfg``.
    """
    chan = realization
    w = np.asarray(solution.w, dtype=np.complex128).reshape(-1, cfg.N_T)
    P = np.asarray(solution.P, dtype=float)
    K, J = w.shape[0], P.shape[0]
    tau = float(solution.tau)
    bank = bank if bank is not None else (getattr(solution, "bank", None) or zf_receivers(chan.g))
    gdl = np.asarray(cfg.gamma_DL if gamma_dl is None else gamma_dl, dtype=float)
    gul = np.asarray(cfg.gamma_UL if gamma_ul is None else gamma_ul, dtype=float)
    Wlist = [np.outer(wk, wk.conj()) for wk in w]
    margins = {}

    dl_sinr = np.array([evaluate_dl_sinr(k, w, P, chan, cfg) for k in range(K)]) if K else np.zeros(0)
    ul_sinr = np.array([evaluate_ul_sinr(j, bank, P, Wlist, chan, cfg) for j in range(J)]) if J else np.zeros(0)
    if serve_dl:
        for k in range(K):
            margins[f"C1[{k}]"] = dl_sinr[k] / gdl[k] - 1.0
    if serve_ul:
        for j in range(J):
            margins[f"C2[{j}]"] = ul_sinr[j] / gul[j] - 1.0
    margins["C3"] = (cfg.P_DL_max - float(np.sum(np.abs(w) ** 2))) / cfg.P_DL_max
    for j in range(J):
        margins[f"C4lo[{j}]"] = P[j] / cfg.P_UL_max[j]
        margins[f"C4hi[{j}]"] = (cfg.P_UL_max[j] - P[j]) / cfg.P_UL_max[j]

    est = chan.estimated()
    R = est.l_hat.shape[0]
    W_sum = sum(Wlist) if Wlist else np.zeros((cfg.N_T, cfg.N_T), dtype=complex)
    dl_leak = np.array([worst_case_dl_leakage(W_sum, est.l_hat[r], float(est.eps_dl[r])) for r in range(R)])
    ul_leak = np.array([worst_case_ul_leakage(P, est.e_hat[:J, r], float(est.eps_ul[r])) for r in range(R)])
    worst = float(np.max(dl_leak + ul_leak)) if R else 0.0
    true_leak = np.array([realized_leakage(w, P, chan.l_true[r], chan.e_true[:J, r]) for r in range(R)])
    # leakage far below the receiver noise floor is immaterial
    scale = max(abs(tau), 1e-3 * min(cfg.sigma2_DL))
    margins["leakage"] = (tau - worst) / scale
    margins["true_leakage"] = (tau - float(np.max(true_leak, initial=0.0))) / scale

    passed = {name: bool(m >= -tol) for name, m in margins.items()}
    max_violation = max(0.0, -min(margins.values()))
    return AuditReport(
        dl_leakage=dl_leak, ul_leakage=ul_leak, worst_leakage=worst, tau=tau,
        leakage_slack=tau - worst, true_leakage=true_leak,
        dl_sinr=dl_sinr, ul_sinr=ul_sinr, margins=margins, passed=passed,
        max_violation=max_violation,
    )
