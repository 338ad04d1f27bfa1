"""Uplink receive beamformers and SINR / self-interference evaluators.

Channel containers only need ``h``, ``g``, ``f`` and ``H_SI`` attributes, so
both :class:`~fdcr.channel.ChannelRealization` and
:class:`~fdcr.channel.EstimatedCSI` work. Vectors are stored as rows:
``h[k]`` is the DL channel of user ``k`` and ``v[j]`` the receiver of UL
user ``j``.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegenerateChannelError",
    "ReceiverBank",
    "zf_receivers",
    "mmse_receivers",
    "si_power",
    "si_weight",
    "evaluate_dl_sinr",
    "evaluate_ul_sinr",
    "dl_sinr_trace",
    "ul_sinr_trace",
]

MAX_CONDITION = 1e12


class DegenerateChannelError(ValueError):
    """Channel matrix is (numerically) rank deficient."""


@dataclass(frozen=True)
class ReceiverBank:
    v: np.ndarray  # (J, N_T)
    flavor: str  # "zero-forcing" | "mmse"

    @property
    def J(self):
        return self.v.shape[0]


def _stack(vectors):
    arr = np.asarray(vectors, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


def zf_receivers(g):
    """Zero-forcing bank ``V = G (G^H G)^-1`` with ``G = [g_1 ... g_J]``."""
    g = _stack(g)
    J, N = g.shape
    if J == 0:
        return ReceiverBank(np.zeros((0, N), dtype=np.complex128), "zero-forcing")
    if N < J:
        raise DegenerateChannelError(f"need N_T >= J, got N_T={N}, J={J}")
    G = g.T
    if np.linalg.cond(G) > MAX_CONDITION:
        raise DegenerateChannelError("UL channel matrix is rank deficient")
    V = G @ np.linalg.inv(G.conj().T @ G)
    return ReceiverBank(V.T.copy(), "zero-forcing")


def mmse_receivers(g, P, sigma2_ul):
    """MMSE bank ``v_j = (sum_n P_n g_n g_n^H + sigma^2 I)^-1 g_j``."""
    g = _stack(g)
    P = np.asarray(P, dtype=float)
    if sigma2_ul <= 0:
        raise ValueError("sigma2_ul must be positive")
    if np.any(P < 0):
        raise ValueError("UL powers must be nonnegative")
    J, N = g.shape
    cov = (g.T * P) @ g.conj() + sigma2_ul * np.eye(N)
    V = np.linalg.solve(cov, g.T)
    return ReceiverBank(V.T.copy(), "mmse")


def si_weight(v_j, H_SI, rho):
    """Hermitian ``M`` with ``Tr(rho V_j diag(H W H^H)) = Re Tr(M W)``.

    ``diag(.)`` keeps only the main diagonal, so the trace collapses to
    ``sum_i |v_i|^2 (H W H^H)_ii = Tr(H^H diag(|v|^2) H W)``.
    """
    H = np.asarray(H_SI)
    d = np.abs(np.asarray(v_j)) ** 2
    return rho * (H.conj().T * d) @ H


def si_power(v_j, H_SI, W, rho):
    """Residual self-interference ``Tr(rho V_j diag(sum_k H W_k H^H))``."""
    H = np.asarray(H_SI)
    v_j = np.asarray(v_j)
    total = np.zeros(H.shape, dtype=np.complex128)
    for Wk in W:
        total = total + H @ Wk @ H.conj().T
    val = rho * np.sum(np.abs(v_j) ** 2 * np.diag(total).real)
    return float(max(val, 0.0))


def evaluate_dl_sinr(k, w, P, chan, cfg):
    """Scalar-form DL SINR of user ``k`` for beamformers ``w`` (rows)."""
    w = _stack(w)
    P = np.asarray(P, dtype=float)
    hk = chan.h[k]
    gains = np.abs(w.conj() @ hk) ** 2  # |h_k^H w_m|^2
    cci = float(np.sum(P * np.abs(chan.f[:, k]) ** 2)) if P.size else 0.0
    interf = np.sum(gains) - gains[k]
    return float(gains[k] / (interf + cci + cfg.sigma2_DL[k]))


def evaluate_ul_sinr(j, bank, P, W, chan, cfg):
    """Scalar-form UL SINR of user ``j``; ``W`` is the list of DL covariances."""
    P = np.asarray(P, dtype=float)
    v = bank.v[j]
    gains = np.abs(chan.g.conj() @ v) ** 2  # |g_n^H v_j|^2
    interf = np.sum(P * gains) - P[j] * gains[j]
    si = si_power(v, chan.H_SI, W, cfg.rho)
    return float(P[j] * gains[j] / (interf + si + cfg.sigma2_UL * np.vdot(v, v).real))


def dl_sinr_trace(k, W, P, chan, cfg):
    """DL SINR written with ``H_k = h_k h_k^H`` and covariance matrices."""
    Hk = np.outer(chan.h[k], chan.h[k].conj())
    num = np.trace(Hk @ W[k]).real
    interf = sum(np.trace(Hk @ W[m]).real for m in range(len(W)) if m != k)
    cci = sum(P[j] * abs(chan.f[j, k]) ** 2 for j in range(len(P)))
    return float(num / (interf + cci + cfg.sigma2_DL[k]))


def ul_sinr_trace(j, bank, P, W, chan, cfg):
    """UL SINR written with ``G_n``, ``V_j`` and the full (non-reduced) SI
    expression ``Tr(rho V_j diag(sum_k H W_k H^H))``."""
    Vj = np.outer(bank.v[j], bank.v[j].conj())
    G = [np.outer(gn, gn.conj()) for gn in chan.g]
    S = sum(chan.H_SI @ Wk @ chan.H_SI.conj().T for Wk in W)
    si = np.trace(cfg.rho * Vj @ np.diag(np.diag(S))).real
    interf = sum(P[n] * np.trace(G[n] @ Vj).real for n in range(len(P)) if n != j)
    return float(P[j] * np.trace(Vj @ G[j]).real / (interf + si + cfg.sigma2_UL * np.trace(Vj).real))
