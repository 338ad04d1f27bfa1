"""Conic programs for robust min-max leakage beamforming.

A :class:`ConicProblem` is a linear objective over real scalar and
Hermitian matrix variables, subject to a list of affine Hermitian blocks that
must be positive semidefinite. A ``1 x 1`` block is an ordinary scalar
inequality ``expr >= 0``.

Hermitian variables are parametrised by ``n*n`` real coordinates (see
:func:`hbasis`). Each block stores, per variable, the image of every basis
element, so evaluating a block is a single ``tensordot``.

The uncertainty of the BS -> primary-receiver channel is a ball of radius
``eps_dl[r]`` around ``l_hat[r]``. The per-user UL disks are replaced by the
enclosing Euclidean ball on the stacked error vector (radius
``sqrt(sum_j eps_jr^2)``), which contains their product and is therefore
conservative.
"""

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .linalg import as_hermitian, eigvalsh
from .receivers import DegenerateChannelError, ReceiverBank, zf_receivers

__all__ = [
    "Variable",
    "Block",
    "ConicProblem",
    "RobustInstance",
    "hbasis",
    "hvec",
    "hmat",
    "c5a_lmi",
    "c5b_lmi",
    "c5a_min_delta",
    "c5b_min_gap",
    "build_relaxed",
    "build_nominal",
    "build_auxiliary",
    "build_baseline1",
    "build_baseline2",
    "build_hd_ul",
    "zf_dl_directions",
    "hd_sinr_target",
]


# --------------------------------------------------------------------------
# Hermitian coordinates
# --------------------------------------------------------------------------
@lru_cache(maxsize=None)
def _hbasis_cached(n):
    basis = np.zeros((n * n, n, n), dtype=np.complex128)
    for i in range(n):
        basis[i, i, i] = 1.0
    t = n
    for i in range(n):
        for j in range(i + 1, n):
            basis[t, i, j] = basis[t, j, i] = 1.0
            basis[t + 1, i, j] = 1j
            basis[t + 1, j, i] = -1j
            t += 2
    basis.setflags(write=False)
    return basis


def hbasis(n):
    """Real basis of ``n x n`` Hermitian matrices, shape ``(n*n, n, n)``:
    ``n`` diagonal units, then for every ``i < j`` the symmetric and the
    skew (imaginary) unit."""
    return _hbasis_cached(int(n))


def hvec(W):
    """Coordinates of Hermitian ``W`` in :func:`hbasis`."""
    W = np.asarray(W, dtype=np.complex128)
    n = W.shape[0]
    iu = np.triu_indices(n, 1)
    upper = W[iu]
    out = np.empty(n * n)
    out[:n] = W.diagonal().real
    out[n::2] = upper.real
    out[n + 1::2] = upper.imag
    return out


def hmat(x, n):
    """Inverse of :func:`hvec`."""
    return np.tensordot(np.asarray(x, dtype=float), hbasis(n), axes=1)


# --------------------------------------------------------------------------
# Problem container
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class Variable:
    """``dim is None`` -> real scalar; otherwise ``dim x dim`` Hermitian.

    ``scale`` is the expected magnitude, used only to precondition solvers.
    """

    name: str
    dim: int = None
    scale: float = 1.0

    @property
    def size(self):
        return 1 if self.dim is None else self.dim * self.dim

    def to_coords(self, value):
        if self.dim is None:
            return np.array([float(np.real(value))])
        return hvec(value)

    def from_coords(self, x):
        if self.dim is None:
            return float(x[0])
        return hmat(x, self.dim)


@dataclass(frozen=True)
class Block:
    """Affine map ``const + sum_v sum_t x_v[t] * coefs[v][t]`` required PSD."""

    name: str
    const: np.ndarray
    coefs: dict

    @property
    def dim(self):
        return self.const.shape[0]

    def evaluate(self, coords):
        out = self.const.copy()
        for v, c in self.coefs.items():
            out = out + np.tensordot(coords[v], c, axes=1)
        return out


def block_scaling(parts, sweeps=8):
    """Diagonal congruence ``s`` and normaliser for a block given as a list
    of additive parts.

    ``s`` is a symmetric Ruiz equilibration of the entrywise magnitude
    ``max_p |part_p|`` (rows of ``diag(s) |.| diag(s)`` peak at 1); the
    normaliser is ``sum_p ||diag(s) part_p diag(s)||_F``.
    """
    mag = np.max(np.abs(np.stack(parts)), axis=0)
    m = mag.shape[0]
    s = np.ones(m)
    for _ in range(sweeps):
        r = np.max(mag * np.outer(s, s), axis=1)
        r[r == 0] = 1.0
        s = s / np.sqrt(r)
    S = np.outer(s, s)
    scale = sum(float(np.linalg.norm(p * S)) for p in parts) or 1.0
    return s, scale


@dataclass(frozen=True)
class ConicProblem:
    variables: tuple
    objective: dict  # name -> real coefficient vector over coordinates
    blocks: tuple
    objective_const: float = 0.0
    fixed: dict = field(default_factory=dict)  # frozen variable values
    meta: dict = field(default_factory=dict)

    def var(self, name):
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def var_names(self):
        return [v.name for v in self.variables]

    def block(self, name):
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def block_names(self, prefix=""):
        return [b.name for b in self.blocks if b.name.startswith(prefix)]

    def coords(self, values):
        return {v.name: v.to_coords(values[v.name]) for v in self.variables}

    def objective_value(self, values):
        c = self.coords(values)
        return self.objective_const + float(
            sum(np.dot(self.objective[n], c[n]) for n in self.objective)
        )

    def evaluate(self, values):
        """Numeric value of every block, keyed by block name."""
        c = self.coords(values)
        return {b.name: as_hermitian(b.evaluate(c), check=False) for b in self.blocks}

    def block_parts(self, values):
        """``{block: [const, term_v1, term_v2, ...]}`` evaluated at ``values``."""
        c = self.coords(values)
        return {b.name: [b.const] + [np.tensordot(c[v], coef, axes=1) for v, coef in b.coefs.items()]
                for b in self.blocks}

    def violations(self, values):
        """Scaled violation of every block at ``values``.

        Each block ``M = sum(parts)`` is first equilibrated, ``S M S`` with
        ``S`` from :func:`block_scaling`, so that rows whose entries live at
        1e-12 W are judged against their own magnitude and not against the
        largest entry of the block. The figure is
        ``max(0, -lambda_min(S M S)) / scale``.
        """
        out = {}
        allparts = self.block_parts(values)
        for b in self.blocks:
            parts = allparts[b.name]
            s, scale = block_scaling(parts)
            M = as_hermitian(sum(parts) * np.outer(s, s), check=False)
            low = float(M[0, 0].real) if b.dim == 1 else float(eigvalsh(M, check=False)[0])
            out[b.name] = max(0.0, -low) / scale
        return out

    def counts(self):
        """``{'psd': {dim: count}, 'scalar': count}`` over the blocks."""
        psd, scalar = {}, 0
        for b in self.blocks:
            if b.dim == 1:
                scalar += 1
            else:
                psd[b.dim] = psd.get(b.dim, 0) + 1
        return {"psd": psd, "scalar": scalar}

    def substitute(self, values):
        """Freeze the listed variables at ``values``.

        Blocks that no longer depend on any variable are removed; their
        frozen values are kept in ``meta['dropped']``.
        """
        frozen = {n: self.var(n) for n in values}
        keep_vars = tuple(v for v in self.variables if v.name not in frozen)
        coords = {n: frozen[n].to_coords(values[n]) for n in frozen}
        blocks, dropped = [], {}
        for b in self.blocks:
            const = b.const.copy()
            coefs = {}
            for v, c in b.coefs.items():
                if v in coords:
                    const = const + np.tensordot(coords[v], c, axes=1)
                else:
                    coefs[v] = c
            if coefs:
                blocks.append(Block(b.name, const, coefs))
            else:
                dropped[b.name] = as_hermitian(const, check=False)
        obj_const = self.objective_const + sum(
            float(np.dot(self.objective[n], coords[n])) for n in self.objective if n in coords
        )
        objective = {n: c for n, c in self.objective.items() if n not in coords}
        meta = dict(self.meta)
        meta["dropped"] = {**self.meta.get("dropped", {}), **dropped}
        return replace(
            self,
            variables=keep_vars,
            objective=objective,
            blocks=tuple(blocks),
            objective_const=obj_const,
            fixed={**self.fixed, **{n: values[n] for n in values}},
            meta=meta,
        )

    def with_objective(self, objective, const=0.0):
        return replace(self, objective=dict(objective), objective_const=const)

    def full_values(self, values):
        """Merge solver output with frozen variables."""
        return {**self.fixed, **values}


@dataclass(frozen=True)
class RobustInstance:
    """Builder input. Holds only estimated primary-network CSI."""

    csi: object  # EstimatedCSI
    bank: ReceiverBank
    cfg: object  # SystemConfig

    @classmethod
    def from_realization(cls, realization, cfg, bank=None):
        csi = realization.estimated()
        if bank is None:
            bank = zf_receivers(csi.g)
        return cls(csi=csi, bank=bank, cfg=cfg)


# --------------------------------------------------------------------------
# Numeric S-procedure blocks
# --------------------------------------------------------------------------
def _lmi(A, center, eps, mult, corner):
    """``[[mult I, 0], [0, corner - mult eps^2]] - B^H A B`` with ``B = [I center]``."""
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    B = np.hstack([np.eye(n), np.asarray(center, dtype=np.complex128).reshape(n, 1)])
    top = np.zeros((n + 1, n + 1), dtype=np.complex128)
    top[:n, :n] = mult * np.eye(n)
    top[n, n] = corner - mult * eps ** 2
    return as_hermitian(top - B.conj().T @ A @ B, check=False)


def c5a_lmi(W_sum, l_hat, eps, alpha, delta):
    """Numeric DL leakage LMI for one primary receiver."""
    return _lmi(W_sum, l_hat, eps, alpha, delta)


def c5b_lmi(P, e_hat, eps, beta, delta, tau):
    """Numeric UL leakage LMI; ``P`` is the vector of UL powers."""
    return _lmi(np.diag(np.asarray(P, dtype=float)), e_hat, eps, beta, tau - delta)


def _min_corner(lmi_at, A, center, eps):
    """Smallest corner value making the LMI feasible for some multiplier
    ``m >= 0``; found by a bounded line search over ``m`` with the corner
    eliminated through its Schur complement."""
    A = np.asarray(A, dtype=np.complex128)
    center = np.asarray(center, dtype=np.complex128)
    n = A.shape[0]
    if eps == 0:
        return float(np.vdot(center, A @ center).real)
    if not np.any(A):
        return 0.0
    lam_top = float(np.linalg.eigvalsh(A)[-1])
    reach = float(np.linalg.norm(A @ center)) / eps

    def phi(t):
        M = lmi_at(lam_top + t)
        X, y, z = M[:n, :n], M[:n, n], M[n, n].real
        return float(np.vdot(y, np.linalg.solve(X, y)).real - z)

    lo = 1e-13 * max(lam_top, 1e-300)
    hi = max(2.0 * reach, 4.0 * lo)
    res = minimize_scalar(phi, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13 * hi, "maxiter": 500})
    return float(min(res.fun, phi(lo), phi(hi)))


def c5a_min_delta(W_sum, l_hat, eps):
    """``min delta`` such that ``c5a_lmi(W_sum, l_hat, eps, alpha, delta)``
    is PSD for some ``alpha >= 0``."""
    return _min_corner(lambda a: c5a_lmi(W_sum, l_hat, eps, a, 0.0), W_sum, l_hat, eps)


def c5b_min_gap(P, e_hat, eps):
    """``min (tau - delta)`` such that the UL LMI is PSD for some ``beta >= 0``."""
    return _min_corner(lambda b: c5b_lmi(P, e_hat, eps, b, 0.0, 0.0), np.diag(P), e_hat, eps)


# --------------------------------------------------------------------------
# Builder
# --------------------------------------------------------------------------
def hd_sinr_target(gamma):
    """Half-duplex SINR target with the same rate: ``(1 + gamma)^2 - 1``."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0):
        raise ValueError("gamma must be positive")
    out = (1.0 + gamma) ** 2 - 1.0
    return float(out) if out.ndim == 0 else out


def zf_dl_directions(h):
    """Unit beam directions, each orthogonal to every other user's channel."""
    h = np.atleast_2d(np.asarray(h, dtype=np.complex128))
    K, N = h.shape
    if N < K:
        raise DegenerateChannelError(f"need N_T >= K, got N_T={N}, K={K}")
    if np.linalg.cond(h.T) > 1e12:
        raise DegenerateChannelError("DL channels are linearly dependent")
    out = np.empty_like(h)
    for k in range(K):
        others = np.delete(h, k, axis=0).T  # columns h_m, m != k
        x = h[k]
        if others.shape[1]:
            x = x - others @ np.linalg.solve(others.conj().T @ others, others.conj().T @ x)
        out[k] = x / np.linalg.norm(x)
    return out


class _Terms:
    """Accumulates one block: constant plus per-variable basis images."""

    def __init__(self, dim):
        self.const = np.zeros((dim, dim), dtype=np.complex128)
        self.coefs = {}

    def add(self, name, images):
        images = np.asarray(images, dtype=np.complex128)
        if name in self.coefs:
            self.coefs[name] = self.coefs[name] + images
        else:
            self.coefs[name] = images

    def block(self, name):
        return Block(name, as_hermitian(self.const, check=False), self.coefs)


def _scalar(value):
    return np.full((1, 1, 1), value, dtype=np.complex128)


def _trace_images(M, E):
    """``Tr(M E_t)`` for a stack ``E`` -> shape ``(T, 1, 1)``."""
    return np.einsum("ij,tji->t", M, E)[:, None, None]


class _DLParam:
    """How the DL covariances enter: free Hermitian ``W_k`` or ``p_k * D_k``."""

    def __init__(self, K, N, directions=None):
        self.K, self.N = K, N
        self.directions = directions

    def name(self, k):
        return f"W[{k}]" if self.directions is None else f"p[{k}]"

    def stack(self, k):
        if self.directions is None:
            return hbasis(self.N)
        d = self.directions[k]
        return np.outer(d, d.conj())[None]

    def variable(self, k, scale):
        if self.directions is None:
            return Variable(self.name(k), self.N, scale)
        return Variable(self.name(k), None, scale)


def _build(inst, *, gamma_dl, gamma_ul, dl=True, ul=True, si=True, cci=True,
           directions=None, tag="relaxed", nominal=False):
    """Generic epigraph builder shared by the proposed scheme and baselines."""
    csi, cfg, bank = inst.csi, inst.cfg, inst.bank
    h, g, f = csi.h, csi.g, csi.f
    N = csi.H_SI.shape[0]
    K = h.shape[0] if dl else 0
    J = g.shape[0] if ul else 0
    R = csi.l_hat.shape[0]
    l_hat, e_hat = csi.l_hat, csi.e_hat[:J] if J else np.zeros((0, R), dtype=complex)
    eps_dl = np.zeros(R) if nominal else np.asarray(csi.eps_dl, dtype=float)
    eps_ul = np.zeros(R) if nominal or J == 0 else np.asarray(csi.eps_ul, dtype=float)
    param = _DLParam(K, N, directions)
    v = bank.v if J else np.zeros((0, N), dtype=complex)

    # preconditioning hints: single-user noise-limited powers
    w0 = np.empty(K)
    for k in range(K):
        gain = np.vdot(h[k], h[k]).real if directions is None else abs(np.vdot(h[k], directions[k])) ** 2
        w0[k] = gamma_dl[k] * cfg.sigma2_DL[k] / max(gain, 1e-300)
    p0 = np.empty(J)
    for j in range(J):
        gain = abs(np.vdot(g[j], v[j])) ** 2
        p0[j] = min(gamma_ul[j] * cfg.sigma2_UL * np.vdot(v[j], v[j]).real / max(gain, 1e-300),
                    cfg.P_UL_max[j])
    tau0 = 0.0
    for r in range(R):
        dl_part = float(np.sum(w0)) * (eps_dl[r] ** 2 + 1e-4 * np.vdot(l_hat[r], l_hat[r]).real)
        ul_part = float(np.sum(p0 * (np.abs(e_hat[:, r]) ** 2))) + float(np.max(p0, initial=0.0)) * eps_ul[r] ** 2
        tau0 = max(tau0, dl_part + ul_part)
    tau0 = max(tau0, 1e-30)

    variables = [param.variable(k, w0[k]) for k in range(K)]
    variables += [Variable(f"P[{j}]", None, p0[j]) for j in range(J)]
    variables.append(Variable("tau", None, tau0))
    if K:
        variables += [Variable(f"delta[{r}]", None, tau0) for r in range(R)]
    use_alpha = [K > 0 and eps_dl[r] > 0 for r in range(R)]
    use_beta = [J > 0 and eps_ul[r] > 0 for r in range(R)]
    for r in range(R):
        if use_alpha[r]:
            variables.append(Variable(f"alpha[{r}]", None, float(np.sum(w0))))
        if use_beta[r]:
            variables.append(Variable(f"beta[{r}]", None, float(np.max(p0))))

    blocks = []
    Hk = [np.outer(h[k], h[k].conj()) for k in range(K)]

    # C1: DL SINR
    for k in range(K):
        t = _Terms(1)
        for m in range(K):
            weight = 1.0 / gamma_dl[k] if m == k else -1.0
            t.add(param.name(m), weight * _trace_images(Hk[k], param.stack(m)))
        if cci:
            for j in range(J):
                t.add(f"P[{j}]", _scalar(-abs(f[j, k]) ** 2))
        t.const[0, 0] = -cfg.sigma2_DL[k]
        blocks.append(t.block(f"C1[{k}]"))

    # C2: UL SINR for the given receive bank
    for j in range(J):
        t = _Terms(1)
        for n in range(J):
            gain = abs(np.vdot(g[n], v[j])) ** 2
            t.add(f"P[{n}]", _scalar(gain / gamma_ul[j] if n == j else -gain))
        if si and K:
            Mj = (csi.H_SI.conj().T * (cfg.rho * np.abs(v[j]) ** 2)) @ csi.H_SI
            for k in range(K):
                t.add(param.name(k), -_trace_images(Mj, param.stack(k)))
        t.const[0, 0] = -cfg.sigma2_UL * np.vdot(v[j], v[j]).real
        blocks.append(t.block(f"C2[{j}]"))

    # C3: DL power budget
    if K:
        t = _Terms(1)
        eye = np.eye(N)
        for k in range(K):
            t.add(param.name(k), -_trace_images(eye, param.stack(k)))
        t.const[0, 0] = cfg.P_DL_max
        blocks.append(t.block("C3"))

    # C4: UL power box
    for j in range(J):
        lo = _Terms(1)
        lo.add(f"P[{j}]", _scalar(1.0))
        blocks.append(lo.block(f"C4lo[{j}]"))
        hi = _Terms(1)
        hi.add(f"P[{j}]", _scalar(-1.0))
        hi.const[0, 0] = cfg.P_UL_max[j]
        blocks.append(hi.block(f"C4hi[{j}]"))

    # C5a: worst-case DL leakage <= delta_r
    for r in range(R):
        if not K:
            continue
        if use_alpha[r]:
            B = np.hstack([np.eye(N), l_hat[r].reshape(N, 1)])
            t = _Terms(N + 1)
            for k in range(K):
                t.add(param.name(k), -np.einsum("ai,tij,jb->tab", B.conj().T, param.stack(k), B))
            a_img = np.zeros((1, N + 1, N + 1), dtype=complex)
            a_img[0, :N, :N] = np.eye(N)
            a_img[0, N, N] = -eps_dl[r] ** 2
            t.add(f"alpha[{r}]", a_img)
            d_img = np.zeros((1, N + 1, N + 1), dtype=complex)
            d_img[0, N, N] = 1.0
            t.add(f"delta[{r}]", d_img)
        else:
            L = np.outer(l_hat[r], l_hat[r].conj())
            t = _Terms(1)
            for k in range(K):
                t.add(param.name(k), -_trace_images(L, param.stack(k)))
            t.add(f"delta[{r}]", _scalar(1.0))
        blocks.append(t.block(f"C5a[{r}]"))

    # C5b: delta_r + worst-case UL leakage <= tau
    for r in range(R):
        if use_beta[r]:
            t = _Terms(J + 1)
            for j in range(J):
                u = np.zeros(J + 1, dtype=complex)
                u[j] = 1.0
                u[J] = np.conj(e_hat[j, r])
                t.add(f"P[{j}]", -np.outer(u, u.conj())[None])
            b_img = np.zeros((1, J + 1, J + 1), dtype=complex)
            b_img[0, :J, :J] = np.eye(J)
            b_img[0, J, J] = -eps_ul[r] ** 2
            t.add(f"beta[{r}]", b_img)
            corner = np.zeros((1, J + 1, J + 1), dtype=complex)
            corner[0, J, J] = 1.0
            t.add("tau", corner)
            if K:
                t.add(f"delta[{r}]", -corner)
        else:
            t = _Terms(1)
            for j in range(J):
                t.add(f"P[{j}]", _scalar(-abs(e_hat[j, r]) ** 2))
            t.add("tau", _scalar(1.0))
            if K:
                t.add(f"delta[{r}]", _scalar(-1.0))
        blocks.append(t.block(f"C5b[{r}]"))

    # C6: PSD covariances (scalar p_k >= 0 for fixed directions)
    for k in range(K):
        if directions is None:
            t = _Terms(N)
            t.add(param.name(k), hbasis(N))
        else:
            t = _Terms(1)
            t.add(param.name(k), _scalar(1.0))
        blocks.append(t.block(f"C6[{k}]"))

    # C8: nonnegative slacks and multipliers
    for r in range(R):
        if K:
            t = _Terms(1)
            t.add(f"delta[{r}]", _scalar(1.0))
            blocks.append(t.block(f"C8delta[{r}]"))
        if use_alpha[r]:
            t = _Terms(1)
            t.add(f"alpha[{r}]", _scalar(1.0))
            blocks.append(t.block(f"C8alpha[{r}]"))
        if use_beta[r]:
            t = _Terms(1)
            t.add(f"beta[{r}]", _scalar(1.0))
            blocks.append(t.block(f"C8beta[{r}]"))

    return ConicProblem(
        variables=tuple(variables),
        objective={"tau": np.array([1.0])},
        blocks=tuple(blocks),
        meta={"kind": tag, "K": K, "J": J, "R": R, "N_T": N},
    )


def _targets(cfg):
    return np.asarray(cfg.gamma_DL, dtype=float), np.asarray(cfg.gamma_UL, dtype=float)


def build_relaxed(inst):
    """Rank-relaxed robust problem: ``min tau`` over ``W_k, P_j`` and the
    S-procedure multipliers."""
    gdl, gul = _targets(inst.cfg)
    return _build(inst, gamma_dl=gdl, gamma_ul=gul, tag="relaxed")


def build_nominal(inst):
    """Same problem with zero-radius uncertainty (non-robust reference)."""
    gdl, gul = _targets(inst.cfg)
    return _build(inst, gamma_dl=gdl, gamma_ul=gul, tag="nominal", nominal=True)


def build_auxiliary(inst, P_star, aux_star, relaxed=None):
    """Trace-minimisation problem with ``P`` and ``tau, delta, alpha, beta``
    frozen at a previous optimum; only the ``W_k`` remain free.

    ``aux_star`` maps variable names (``'tau'``, ``'delta[0]'``, ...) to
    values; ``P_star`` is the UL power vector.
    """
    problem = relaxed if relaxed is not None else build_relaxed(inst)
    names = set(problem.var_names)
    frozen = {f"P[{j}]": float(p) for j, p in enumerate(P_star) if f"P[{j}]" in names}
    frozen.update({n: float(v) for n, v in aux_star.items() if n in names})
    reduced = problem.substitute(frozen)
    objective = {}
    for v in reduced.variables:
        if v.dim is not None:
            objective[v.name] = hvec(np.eye(v.dim))
    out = reduced.with_objective(objective)
    return replace(out, meta={**out.meta, "kind": "auxiliary"})


def build_baseline1(inst, directions=None):
    """Fixed ZF DL directions; only their powers and the UL powers are free."""
    if directions is None:
        directions = zf_dl_directions(inst.csi.h)
    gdl, gul = _targets(inst.cfg)
    problem = _build(inst, gamma_dl=gdl, gamma_ul=gul, directions=directions, tag="baseline1")
    return replace(problem, meta={**problem.meta, "directions": directions})


def build_hd_ul(inst, bank, gamma_ul):
    """Half-duplex UL phase for a fixed receive bank: no DL, no SI."""
    sub = replace(inst, bank=bank)
    K = inst.csi.h.shape[0]
    return _build(sub, gamma_dl=np.ones(K), gamma_ul=np.asarray(gamma_ul, dtype=float),
                  dl=False, si=False, tag="hd_ul")


def build_baseline2(inst, ul_bank=None):
    """Half-duplex reference: separate DL and UL problems with rate-matched
    targets. The UL problem uses ``ul_bank`` (ZF by default); the MMSE
    fixed point is driven by :func:`fdcr.schemes.solve_baseline2`."""
    gdl, gul = _targets(inst.cfg)
    dl_problem = _build(inst, gamma_dl=hd_sinr_target(gdl), gamma_ul=gul,
                        ul=False, cci=False, tag="hd_dl")
    bank = ul_bank if ul_bank is not None else inst.bank
    ul_problem = build_hd_ul(inst, bank, hd_sinr_target(gul)) if inst.csi.g.shape[0] else None
    return dl_problem, ul_problem
