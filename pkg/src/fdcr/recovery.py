"""Rank-one recovery of the DL covariances and beamformer extraction.

The relaxed problem drops the rank constraint on ``W_k``. When an optimal
``W_k`` comes back with rank above one, the UL powers and the epigraph /
S-procedure variables are frozen and ``sum_k Tr(W_k)`` is minimised over
the same feasible set; every optimum of that auxiliary problem is rank one
as long as the matrix ``Pi_k`` (objective gradient minus every multiplier
term other than the PSD and own-SINR ones) is positive definite. ``Pi_k`` is
checked numerically for each auxiliary solve.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import as_hermitian, hermitian_eig
from .problem import block_scaling, build_auxiliary, build_relaxed
from .solver import SolverSettings, coords_to_gradient, gradient_contributions, solve

__all__ = [
    "AUX_ITER_CAPS",
    "RANK_TOL",
    "VIOLATION_TOL",
    "RankError",
    "RecoveryError",
    "BeamformingSolution",
    "numeric_rank",
    "extract_beamformer",
    "pi_matrices",
    "covariances",
    "recover",
]

RANK_TOL = 1e-6
VIOLATION_TOL = 1e-6
# With everything but W frozen at an optimum the auxiliary feasible set has
# no interior (often it is a single point); every block is loosened by this
# much of its own magnitude (the PSD cones excepted) so the interior-point method has a Slater point.
AUX_MARGIN = 1e-8
# Iteration caps tried in turn for the auxiliary solve, until one gives a
# certified rank-one optimum. On these thin sets CVXOPT can reach a
# certifiable point and then drift while chasing its inner tolerances, so a
# long run may end worse than a short one (and a short one may stop before
# the spurious eigenvalues have died out).
AUX_ITER_CAPS = (40, 60, 25, 100)


class RankError(ValueError):
    """A rank-one input was required but the matrix has rank > 1."""


class RecoveryError(RuntimeError):
    """The rank-one solution could not be produced or failed re-verification.

    ``reports`` holds every solver report produced on the way.
    """

    def __init__(self, message, reports=None):
        super().__init__(message)
        self.reports = dict(reports or {})


@dataclass
class BeamformingSolution:
    W: tuple  # Hermitian PSD covariances, rank one
    w: np.ndarray  # (K, N_T) beamformers, w[k] w[k]^H = W[k]
    P: np.ndarray  # (J,) UL powers in watts
    tau: float
    delta: np.ndarray  # (R,)
    alpha: np.ndarray  # (R,), nan where the DL ball has zero radius
    beta: np.ndarray  # (R,), nan where the UL ball has zero radius
    provenance: str  # "direct" | "via-auxiliary"
    reports: dict = field(default_factory=dict, repr=False)
    pi_min_eig: tuple = None  # relative lambda_min(Pi_k), auxiliary path only
    max_violation: float = 0.0
    bank: object = field(default=None, repr=False)  # UL receivers the solution assumes
    aux_problem: object = field(default=None, repr=False)  # loosened auxiliary problem, if solved

    @property
    def K(self):
        return len(self.W)

    def values(self):
        """Problem variable values with each ``W_k`` replaced by ``w_k w_k^H``."""
        out = {f"W[{k}]": np.outer(wk, wk.conj()) for k, wk in enumerate(self.w)}
        out.update({f"P[{j}]": float(p) for j, p in enumerate(self.P)})
        out["tau"] = float(self.tau)
        for name, arr in (("delta", self.delta), ("alpha", self.alpha), ("beta", self.beta)):
            for r, val in enumerate(arr):
                if np.isfinite(val):
                    out[f"{name}[{r}]"] = float(val)
        return out


def numeric_rank(W, tol=RANK_TOL):
    """Number of eigenvalues above ``tol * lambda_max``; 0 for ``W = 0``."""
    w = hermitian_eig(W)[0]
    top = w[-1]
    if top <= 0.0:
        return 0
    return int(np.sum(w > tol * top))


def extract_beamformer(W, tol=RANK_TOL):
    """``w`` with ``w w^H = W`` for a rank-one PSD ``W``.

    ``w = sqrt(lambda_max) u_max`` with the phase fixed so that the entry of
    largest magnitude is real and positive.
    """
    W = as_hermitian(W)
    vals, vecs = hermitian_eig(W, check=False)
    n = W.shape[0]
    if vals[-1] <= 0.0:
        return np.zeros(n, dtype=np.complex128)
    if int(np.sum(vals > tol * vals[-1])) > 1:
        raise RankError(f"rank {int(np.sum(vals > tol * vals[-1]))} matrix has no single beamformer")
    w = np.sqrt(vals[-1]) * vecs[:, -1]
    i = int(np.argmax(np.abs(w)))
    w = w * (abs(w[i]) / w[i])
    w[i] = abs(w[i])
    return w


def covariances(problem, values):
    """``[W_0, ..., W_{K-1}]`` from solver values, for either DL
    parametrisation (full ``W[k]`` or fixed-direction powers ``p[k]``)."""
    K = problem.meta.get("K", 0)
    out = []
    for k in range(K):
        if f"W[{k}]" in values:
            out.append(as_hermitian(values[f"W[{k}]"], check=False))
        else:
            d = problem.meta["directions"][k]
            out.append(float(values[f"p[{k}]"]) * np.outer(d, d.conj()))
    return out


def pi_matrices(problem, report):
    """``Pi_k`` for every ``W[k]`` variable of an auxiliary-problem solve.

    ``Pi_k`` is the objective gradient minus every dual contribution except
    those of ``C6[k]`` (the PSD constraint) and ``C1[k]`` (the own-SINR
    constraint), so that stationarity reads ``Y_k = Pi_k - (C1[k] term)``.
    """
    out = []
    for v in problem.variables:
        if not v.name.startswith("W[") or v.dim is None:
            continue
        k = v.name[2:-1]
        grad = np.asarray(problem.objective.get(v.name, np.zeros(v.size)), dtype=float).copy()
        for blk, contrib in gradient_contributions(problem, report.duals, v.name).items():
            if blk not in (f"C6[{k}]", f"C1[{k}]"):
                grad -= contrib
        out.append(coords_to_gradient(grad, v.dim))
    return out


def _loosen(problem, values, margin):
    """Loosen every block except the ``W_k >= 0`` ones (those keep an
    interior) by ``margin`` in the equilibrated metric of
    :meth:`ConicProblem.violations`, i.e. add
    ``margin * scale * diag(1 / s**2)`` measured at ``values``."""
    parts = problem.block_parts(values)
    blocks = []
    for b in problem.blocks:
        if b.name.startswith("C6["):
            blocks.append(b)
            continue
        s, scale = block_scaling(parts[b.name])
        blocks.append(replace(b, const=b.const + margin * scale * np.diag(1.0 / s ** 2)))
    return replace(problem, blocks=tuple(blocks))


def _frozen_aux(values):
    keys = ("tau", "delta[", "alpha[", "beta[")
    return {n: float(v) for n, v in values.items() if n.startswith(keys)}


def _slack_arrays(values, R):
    def arr(prefix):
        return np.array([float(values.get(f"{prefix}[{r}]", np.nan)) for r in range(R)])
    return arr("delta"), arr("alpha"), arr("beta")


def recover(relaxed_report, instance, problem=None, *, settings=None, rank_tol=RANK_TOL,
            force_auxiliary=False, aux_margin=AUX_MARGIN):
    """Rank-one beamforming solution from an optimal relaxed solve.

    Parameters
    ----------
    relaxed_report : SolveReport
        Optimal report of ``problem``.
    instance : RobustInstance
    problem : ConicProblem, optional
        The problem that produced the report; defaults to
        ``build_relaxed(instance)``.
    force_auxiliary : bool
        Take the auxiliary route even when the relaxed ``W_k`` are already
        rank one (used to exercise the construction).
    aux_margin : float
        Relative loosening of the auxiliary blocks; the recovered point is
        re-verified against the unloosened relaxed problem in any case.

    Raises
    ------
    ValueError
        If ``relaxed_report`` is not optimal.
    RecoveryError
        If the auxiliary solve is not optimal, still returns rank > 1, or
        the recovered rank-one point violates a constraint by more than
        ``VIOLATION_TOL`` (scaled).
    """
    if not relaxed_report.optimal:
        raise ValueError("recover() needs an optimal relaxed report")
    problem = problem if problem is not None else build_relaxed(instance)
    values = problem.full_values(relaxed_report.values)
    reports = {"relaxed": relaxed_report}
    J = problem.meta.get("J", 0)
    R = problem.meta.get("R", 0)
    P_star = np.array([float(values[f"P[{j}]"]) for j in range(J)])

    Ws = covariances(problem, values)
    ranks = [numeric_rank(W, rank_tol) for W in Ws]
    pi_min = None
    full_W = all(f"W[{k}]" in values for k in range(len(Ws)))
    if all(r <= 1 for r in ranks) and not (force_auxiliary and full_W):
        provenance = "direct"
    else:
        aux = build_auxiliary(instance, P_star, _frozen_aux(values), relaxed=problem)
        if aux_margin > 0:
            aux = _loosen(aux, {n: values[n] for n in aux.var_names}, aux_margin)
        base = settings or SolverSettings()
        for cap in AUX_ITER_CAPS:
            rep = solve(aux, replace(base, max_iters=min(cap, base.max_iters)))
            if not rep.optimal:
                continue
            aux_values = aux.full_values(rep.values)
            Ws = covariances(aux, aux_values)
            ranks = [numeric_rank(W, rank_tol) for W in Ws]
            if all(r <= 1 for r in ranks):
                break
        reports["auxiliary"] = rep
        if not rep.optimal:
            raise RecoveryError(f"auxiliary problem not solved ({rep.status})", reports)
        if any(r > 1 for r in ranks):
            raise RecoveryError(f"auxiliary solution still has ranks {ranks}", reports)
        pis = pi_matrices(aux, rep)
        pi_min = tuple(float(hermitian_eig(Pi)[0][0]) / max(float(np.linalg.norm(Pi)), 1e-300)
                       for Pi in pis)
        provenance = "via-auxiliary"

    n_t = instance.csi.H_SI.shape[0]
    w = np.zeros((len(Ws), n_t), dtype=np.complex128)
    for k, W in enumerate(Ws):
        w[k] = extract_beamformer(W, rank_tol)
    delta, alpha, beta = _slack_arrays(values, R)
    sol = BeamformingSolution(
        W=tuple(Ws), w=w, P=P_star, tau=float(values["tau"]),
        delta=delta, alpha=alpha, beta=beta, provenance=provenance,
        reports=reports, pi_min_eig=pi_min, bank=instance.bank,
        aux_problem=aux if provenance == "via-auxiliary" else None,
    )
    check = dict(values)
    for k, wk in enumerate(w):
        W1 = np.outer(wk, wk.conj())
        if f"W[{k}]" in check:
            check[f"W[{k}]"] = W1
    check = {n: check[n] for n in problem.var_names}
    viol = problem.violations(check)
    sol.max_violation = max(viol.values(), default=0.0)
    if sol.max_violation > VIOLATION_TOL:
        worst = max(viol, key=viol.get)
        raise RecoveryError(f"rank-one point violates {worst} by {sol.max_violation:.2e}", reports)
    return sol

