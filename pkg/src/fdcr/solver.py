"""Interior-point solution of :class:`~fdcr.problem.ConicProblem` instances.

The problem is preconditioned (variables scaled by their magnitude hints,
every block divided by its Frobenius norm, objective normalised), complex
blocks are mapped to real symmetric ones with :func:`~fdcr.linalg.real_embed`
and the result is handed to CVXOPT's homogeneous self-dual cone solver.
Optimality is then re-certified here from the returned primal/dual pair,
independently of the solver's own stopping test.

Dual multipliers are reported per block as Hermitian matrices ``D_b`` in
physical units, normalised so that the Lagrangian reads::

    L(x, D) = c(x) - sum_b Re Tr(D_b M_b(x))
"""

import time
from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix, solvers

from .linalg import as_hermitian, eigvalsh, real_embed, real_unembed
from .problem import hbasis, hmat

__all__ = ["SolverSettings", "SolveReport", "KKTResiduals", "solve", "kkt_residuals",
           "gradient_contributions", "coords_to_gradient"]


@dataclass(frozen=True)
class SolverSettings:
    gap_tol: float = 1e-7  # relative duality gap accepted as optimal
    feas_tol: float = 1e-8  # scaled primal infeasibility accepted as optimal
    max_iters: int = 100
    # inner CVXOPT stopping rules, tighter than the certification
    abstol: float = 1e-10
    reltol: float = 1e-9
    feastol: float = 1e-9
    kktsolver: str = "chol"
    # Newton steps on the mu = 0 complementarity system after the IPM stops
    polish_steps: int = 3


@dataclass
class SolveReport:
    status: str  # optimal | infeasible | numerical-failure
    values: dict  # physical primal values for the free variables
    duals: dict  # block name -> Hermitian multiplier (physical units)
    primal_objective: float
    dual_objective: float
    rel_gap: float
    primal_infeasibility: float
    iterations: int
    wall_time: float
    solver_status: str = ""
    scaled: dict = field(default_factory=dict, repr=False)

    @property
    def optimal(self):
        return self.status == "optimal"


@dataclass(frozen=True)
class KKTResiduals:
    stationarity: float
    complementarity: float
    dual_sign: float
    primal_sign: float
    per_variable: dict
    per_block: dict

    @property
    def worst(self):
        return max(self.stationarity, self.complementarity, self.dual_sign, self.primal_sign)


# --------------------------------------------------------------------------
# Preconditioned real form
# --------------------------------------------------------------------------
def _equilibrate(C, A, sweeps=6):
    """Diagonal ``s`` such that ``diag(s) M diag(s)`` has rows of comparable
    magnitude for every ``M`` in the block's span (symmetric Ruiz)."""
    m = C.shape[0]
    s = np.ones(m)
    mag = np.maximum(np.abs(C), np.max(np.abs(A), axis=0) if A.shape[0] else 0.0)
    for _ in range(sweeps):
        scaled = mag * np.outer(s, s)
        r = np.max(scaled, axis=1)
        r[r == 0] = 1.0
        s = s / np.sqrt(r)
    return s / np.max(s)


class _Layout:
    def __init__(self, problem):
        self.problem = problem
        self.offsets = {}
        n = 0
        for v in problem.variables:
            self.offsets[v.name] = (n, n + v.size)
            n += v.size
        self.n = n
        self.d = np.empty(n)
        for v in problem.variables:
            a, b = self.offsets[v.name]
            self.d[a:b] = v.scale if v.scale > 0 else 1.0

        self.c = np.zeros(n)
        for name, coef in problem.objective.items():
            a, b = self.offsets[name]
            self.c[a:b] = coef
        c_scaled = self.c * self.d
        self.obj_norm = float(np.linalg.norm(c_scaled)) or 1.0
        self.c_scaled = c_scaled / self.obj_norm

        # per block: constant and dense (n, m, m) coefficient stack, scaled
        self.blocks = []
        for blk in problem.blocks:
            m = blk.dim
            A = np.zeros((n, m, m), dtype=np.complex128)
            for name, coef in blk.coefs.items():
                a, b = self.offsets[name]
                A[a:b] = coef
            A *= self.d[:, None, None]
            C = blk.const.astype(np.complex128)
            s = _equilibrate(C, A) if m > 1 else np.ones(1)
            C = C * np.outer(s, s)
            A = A * np.outer(s, s)[None]
            norm = np.sqrt(np.linalg.norm(C) ** 2 + np.sum(np.abs(A) ** 2))
            norm = float(norm) or 1.0
            self.blocks.append((blk, C / norm, A / norm, norm, s))

    def split(self, x):
        return {v.name: x[slice(*self.offsets[v.name])] for v in self.problem.variables}


def _cvx_data(layout):
    lin = [(i, b) for i, b in enumerate(layout.blocks) if b[0].dim == 1]
    sdp = [(i, b) for i, b in enumerate(layout.blocks) if b[0].dim > 1]
    rows_G, rows_h = [], []
    for _, (_, C, A, _, _) in lin:
        rows_h.append(np.array([C[0, 0].real]))
        rows_G.append(-A[:, 0, 0].real[None, :])
    for _, (_, C, A, _, _) in sdp:
        E = real_embed(C)
        rows_h.append(E.ravel(order="F"))
        emb = np.concatenate(
            [np.concatenate([A.real, -A.imag], axis=2), np.concatenate([A.imag, A.real], axis=2)],
            axis=1,
        )  # (n, 2m, 2m)
        rows_G.append(-emb.transpose(0, 2, 1).reshape(layout.n, -1).T)
    G = np.vstack(rows_G) if rows_G else np.zeros((0, layout.n))
    h = np.concatenate(rows_h) if rows_h else np.zeros(0)
    dims = {"l": len(lin), "q": [], "s": [2 * b[0].dim for _, b in sdp]}
    order = [i for i, _ in lin] + [i for i, _ in sdp]
    return G, h, dims, order


def _unpack_z(z, dims, order, layout):
    """Map CVXOPT's stacked dual vector to complex scaled multipliers."""
    out = {}
    pos = 0
    for k in range(dims["l"]):
        out[order[k]] = np.array([[complex(z[pos])]])
        pos += 1
    for k, size in enumerate(dims["s"]):
        Z = np.asarray(z[pos:pos + size * size]).reshape(size, size, order="F")
        Z = 0.5 * (Z + Z.T)
        # trace(Z embed(M)) = 2 Re Tr(unembed(Z) M)
        out[order[dims["l"] + k]] = 2.0 * real_unembed(Z)
        pos += size * size
    return out


def _hvec_stack(X):
    """:func:`~fdcr.problem.hvec` applied to a stack ``(t, m, m)`` -> ``(m*m, t)``."""
    m = X.shape[-1]
    iu = np.triu_indices(m, 1)
    out = np.empty((m * m, X.shape[0]))
    out[:m] = np.diagonal(X, axis1=1, axis2=2).real.T
    up = X[:, iu[0], iu[1]]
    out[m::2] = up.real.T
    out[m + 1::2] = up.imag.T
    return out


def _kkt_merit(layout, x_s, Zs):
    stat = layout.c_scaled.copy()
    comp = 0.0
    pmin = dmin = np.inf
    for (blk, C, A, norm, s), Z in zip(layout.blocks, Zs):
        stat -= np.real(np.einsum("ij,tji->t", Z, A))
        M = as_hermitian(C + np.tensordot(x_s, A, axes=1), check=False)
        comp = max(comp, float(np.linalg.norm(M @ Z)) / max(1.0, float(np.linalg.norm(M) * np.linalg.norm(Z))))
        pmin = min(pmin, _min_eig(M))
        dmin = min(dmin, _min_eig(Z) / max(1.0, float(np.linalg.norm(Z))))
    return max(float(np.max(np.abs(stat), initial=0.0)), comp), pmin, dmin


def _polish(layout, x_s, Zs, steps, feas_tol):
    """Newton iterations on ``c = A^*(Z)``, ``(M Z + Z M)/2 = 0`` from the
    interior-point end point.

    The IPM stops a distance ``O(sqrt(mu))`` from exact complementarity;
    near a strictly complementary solution this square system is regular and
    a couple of steps recover it to rounding level. A step is kept only if
    it lowers the residual and leaves both sides PSD to ``feas_tol``.
    """
    n = layout.n
    sizes = [b[0].dim ** 2 for b in layout.blocks]
    size = n + sum(sizes)
    best, _, _ = _kkt_merit(layout, x_s, Zs)
    done = 0
    for _ in range(steps):
        jac = np.zeros((size, size))
        F = np.zeros(size)
        F[:n] = layout.c_scaled
        pos = n
        for (blk, C, A, norm, s), Z, sz in zip(layout.blocks, Zs, sizes):
            m = blk.dim
            E = hbasis(m)
            F[:n] -= np.real(np.einsum("ij,tji->t", Z, A))
            jac[:n, pos:pos + sz] = -np.real(np.einsum("eij,tji->te", E, A))
            M = C + np.tensordot(x_s, A, axes=1)
            F[pos:pos + sz] = _hvec_stack((0.5 * (M @ Z + Z @ M))[None])[:, 0]
            AZ = A @ Z
            jac[pos:pos + sz, :n] = _hvec_stack(0.5 * (AZ + AZ.conj().transpose(0, 2, 1)))
            ME = M[None] @ E
            jac[pos:pos + sz, pos:pos + sz] = _hvec_stack(0.5 * (ME + ME.conj().transpose(0, 2, 1)))
            pos += sz
        try:
            d = np.linalg.solve(jac, -F)
        except np.linalg.LinAlgError:
            break
        x_new = x_s + d[:n]
        Z_new = []
        pos = n
        for (blk, *_), Z, sz in zip(layout.blocks, Zs, sizes):
            Z_new.append(as_hermitian(Z + hmat(d[pos:pos + sz], blk.dim), check=False))
            pos += sz
        merit, pmin, dmin = _kkt_merit(layout, x_new, Z_new)
        if not np.isfinite(merit) or merit >= best or pmin < -feas_tol or dmin < -feas_tol:
            break
        x_s, Zs, best = x_new, Z_new, merit
        done += 1
        if merit < 1e-13:
            break
    return x_s, Zs, done


def _min_eig(M):
    if M.shape[0] == 1:
        return float(M[0, 0].real)
    return float(eigvalsh(M, check=False)[0])


def solve(problem, settings=None):
    """Solve ``problem`` and certify the result.

    Never raises on infeasible or ill-conditioned input: the outcome is in
    ``SolveReport.status``.
    """
    settings = settings or SolverSettings()
    t0 = time.perf_counter()
    layout = _Layout(problem)
    G, h, dims, order = _cvx_data(layout)
    c, G, h = matrix(layout.c_scaled), matrix(G), matrix(h)
    report = None
    # second attempt only if the tight run is not certified; the
    # certification is the same for both
    for loosen in (1.0, 10.0):
        opts = {
            "show_progress": False,
            "maxiters": settings.max_iters,
            "abstol": settings.abstol * loosen,
            "reltol": settings.reltol * loosen,
            "feastol": settings.feastol * loosen,
            "refinement": 2,
            "kktsolver": settings.kktsolver,
        }
        try:
            sol = solvers.conelp(c, G, h, dims, options=opts)
        except (ArithmeticError, ValueError) as exc:
            sol = {"status": f"error: {exc}", "x": None, "z": None, "iterations": 0}
        report = _report(problem, layout, sol, dims, order, settings, t0)
        if report.status in ("optimal", "infeasible"):
            break
    report.wall_time = time.perf_counter() - t0
    return report


def _report(problem, layout, sol, dims, order, settings, t0):
    """Polish and certify one CVXOPT result."""
    cvx_status = sol["status"]
    iters = int(sol.get("iterations", 0) or 0)
    if cvx_status == "primal infeasible":
        return SolveReport("infeasible", {}, {}, np.inf, np.inf, np.nan, np.nan,
                           iters, time.perf_counter() - t0, solver_status=cvx_status)
    if sol["x"] is None or sol["z"] is None:
        return SolveReport("numerical-failure", {}, {}, np.nan, np.nan, np.inf, np.inf,
                           iters, time.perf_counter() - t0, solver_status=cvx_status)

    x_s = np.asarray(sol["x"]).ravel()
    z_cplx = _unpack_z(np.asarray(sol["z"]).ravel(), dims, order, layout)
    Zs = [as_hermitian(z_cplx[i], check=False) for i in range(len(layout.blocks))]
    polished = 0
    if settings.polish_steps > 0 and layout.blocks:
        x_s, Zs, polished = _polish(layout, x_s, Zs, settings.polish_steps, settings.feas_tol)

    coords_s = layout.split(x_s)
    values = {v.name: v.from_coords(coords_s[v.name] * v.scale if v.scale > 0 else coords_s[v.name])
              for v in problem.variables}

    duals = {}
    dual_obj_s = 0.0
    infeas = 0.0
    scaled_blocks = {}
    for i, (blk, C, A, norm, s) in enumerate(layout.blocks):
        Z = Zs[i]
        M = as_hermitian(C + np.tensordot(x_s, A, axes=1), check=False)
        scaled_blocks[blk.name] = (M, Z)
        duals[blk.name] = Z * np.outer(s, s) * layout.obj_norm / norm
        dual_obj_s -= float(np.real(np.sum(Z * C.T)))
        infeas = max(infeas, -_min_eig(M))
    primal_obj_s = float(layout.c_scaled @ x_s)
    scale_obj = max(1.0, abs(primal_obj_s), abs(dual_obj_s))
    rel_gap = abs(primal_obj_s - dual_obj_s) / scale_obj
    primal_obj = primal_obj_s * layout.obj_norm + problem.objective_const
    dual_obj = dual_obj_s * layout.obj_norm + problem.objective_const

    certified = rel_gap <= settings.gap_tol and infeas <= settings.feas_tol
    status = "optimal" if certified else "numerical-failure"
    return SolveReport(
        status=status,
        values=values,
        duals=duals,
        primal_objective=primal_obj,
        dual_objective=dual_obj,
        rel_gap=rel_gap,
        primal_infeasibility=infeas,
        iterations=iters,
        wall_time=time.perf_counter() - t0,
        solver_status=cvx_status,
        scaled={"x": x_s, "blocks": scaled_blocks, "obj_norm": layout.obj_norm,
                "polish_steps": polished},
    )


# --------------------------------------------------------------------------
# KKT diagnostics
# --------------------------------------------------------------------------
def coords_to_gradient(r, n):
    """Hermitian ``G`` with ``Re Tr(G E_t) = r[t]`` for every basis element."""
    G = np.zeros((n, n), dtype=np.complex128)
    G[np.diag_indices(n)] = r[:n]
    iu = np.triu_indices(n, 1)
    G[iu] = 0.5 * (np.asarray(r[n::2]) - 1j * np.asarray(r[n + 1::2]))
    return G + np.triu(G, 1).conj().T


def gradient_contributions(problem, duals, var_name):
    """``{block: adjoint_b(D_b)}`` restricted to coordinates of ``var_name``.

    Each entry is the vector ``t -> Re Tr(D_b A_{b,t})`` over the variable's
    coordinates.
    """
    out = {}
    for blk in problem.blocks:
        if var_name in blk.coefs and blk.name in duals:
            D = duals[blk.name]
            coef = blk.coefs[var_name]
            out[blk.name] = np.real(np.einsum("ij,tji->t", D, coef))
    return out


def kkt_residuals(problem, report):
    """Scaled KKT residuals of a primal/dual pair.

    Stationarity is measured on the preconditioned objective (unit norm),
    complementarity as ``||M_b Z_b||_F / max(1, ||M_b||_F ||Z_b||_F)`` on
    normalised blocks, and the sign
    conditions as the most negative eigenvalue of each block / multiplier.
    """
    if report.status != "optimal" and not report.duals:
        raise ValueError("report carries no primal/dual pair")
    obj_norm = report.scaled.get("obj_norm", 1.0)
    per_var = {}
    stat = 0.0
    for v in problem.variables:
        c = np.asarray(problem.objective.get(v.name, np.zeros(v.size)), dtype=float)
        grad = c - sum(gradient_contributions(problem, report.duals, v.name).values())
        scaled = np.abs(grad) * (v.scale if v.scale > 0 else 1.0) / obj_norm
        per_var[v.name] = float(np.max(scaled, initial=0.0))
        stat = max(stat, per_var[v.name])
    comp = dual_sign = primal_sign = 0.0
    per_block = {}
    # rebuild scaled blocks from the (possibly perturbed) physical duals
    layout = _Layout(problem)
    x_s = np.concatenate([problem.var(v.name).to_coords(report.values[v.name]) / layout.d[slice(*layout.offsets[v.name])]
                          for v in problem.variables]) if problem.variables else np.zeros(0)
    for blk, C, A, norm, s in layout.blocks:
        M = as_hermitian(C + np.tensordot(x_s, A, axes=1), check=False)
        Z = as_hermitian(report.duals[blk.name] / np.outer(s, s) * norm / obj_norm, check=False)
        c_res = float(np.linalg.norm(M @ Z)) / max(1.0, float(np.linalg.norm(M) * np.linalg.norm(Z)))
        d_res = max(0.0, -_min_eig(Z))
        p_res = max(0.0, -_min_eig(M))
        per_block[blk.name] = (c_res, d_res, p_res)
        comp, dual_sign, primal_sign = max(comp, c_res), max(dual_sign, d_res), max(primal_sign, p_res)
    return KKTResiduals(stat, comp, dual_sign, primal_sign, per_var, per_block)
