"""Dense Hermitian linear algebra shared by the whole package.

Matrices are plain ``numpy`` arrays. ``as_hermitian`` is the single entry
point that validates and symmetrises user input; everything downstream may
assume exact Hermitian symmetry with a real diagonal.

The eigensolver is a cyclic complex Jacobi method. It is accurate to a few
ulps on the tiny blocks used here (N <= 24) and needs nothing beyond numpy.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "EigenError",
    "as_hermitian",
    "hermitian_eig",
    "eigvalsh",
    "is_psd",
    "real_embed",
    "real_unembed",
    "jacobi_eig_loops",
    "jacobi_eig_numpy",
]

JACOBI_TOL = 1e-15
JACOBI_MAX_SWEEPS = 60


class EigenError(RuntimeError):
    """Raised when the Jacobi sweeps fail to converge."""


def as_hermitian(a, *, check=True, atol=1e-9):
    """Return ``a`` as an exactly Hermitian complex128 array.

    The strict upper triangle is kept and mirrored; the diagonal is forced
    real. With ``check`` the input must already be Hermitian up to
    ``atol * max(1, ||a||_F)``.
    """
    a = np.array(a, dtype=np.complex128, copy=True)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if check:
        scale = max(1.0, np.linalg.norm(a))
        if np.max(np.abs(a - a.conj().T), initial=0.0) > atol * scale:
            raise ValueError("matrix is not Hermitian")
    upper = np.triu(a, 1)
    out = upper + upper.conj().T
    out[np.diag_indices_from(out)] = a.diagonal().real
    return out


# --------------------------------------------------------------------------
# Jacobi kernels
# --------------------------------------------------------------------------
@njit
def jacobi_eig_loops(a, tol, max_sweeps):
    """Cyclic complex Jacobi, explicit loops (numba target).

    Returns ``(eigenvalues, eigenvectors, sweeps)``; ``sweeps == -1`` signals
    non-convergence. ``a`` is overwritten.
    """
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += a[i, j].real ** 2 + a[i, j].imag ** 2
    fro = np.sqrt(fro)
    if fro == 0.0:
        return np.zeros(n), v, 0
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += a[i, j].real ** 2 + a[i, j].imag ** 2
        off = np.sqrt(2.0 * off)
        if off <= tol * fro:
            w = np.empty(n)
            for i in range(n):
                w[i] = a[i, i].real
            return w, v, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                b = abs(apq)
                if b == 0.0:
                    continue
                ph = (apq / b).conjugate()
                # phase on column q / row q makes a[p, q] real positive
                for k in range(n):
                    a[k, q] = a[k, q] * ph
                    v[k, q] = v[k, q] * ph
                for k in range(n):
                    a[q, k] = a[q, k] * ph.conjugate()
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * b)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    return np.zeros(n), v, -1


def jacobi_eig_numpy(a, tol, max_sweeps):
    """Same rotation sequence as :func:`jacobi_eig_loops`, row/column ops
    vectorised with numpy."""
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    fro = np.linalg.norm(a)
    if fro == 0.0:
        return np.zeros(n), v, 0
    iu = np.triu_indices(n, 1)
    for sweep in range(max_sweeps):
        off = np.sqrt(2.0) * np.linalg.norm(a[iu])
        if off <= tol * fro:
            return a.diagonal().real.copy(), v, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                b = abs(apq)
                if b == 0.0:
                    continue
                ph = np.conj(apq / b)
                a[:, q] *= ph
                v[:, q] *= ph
                a[q, :] *= np.conj(ph)
                theta = (a[q, q].real - a[p, p].real) / (2.0 * b)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    return np.zeros(n), v, -1


_jacobi = jacobi_eig_loops if USE_NUMBA else jacobi_eig_numpy


def hermitian_eig(h, *, check=True):
    """Eigen-decomposition of a Hermitian matrix.

    Parameters
    ----------
    h : array_like, shape (N, N)
        Hermitian matrix.

    Returns
    -------
    w : ndarray, shape (N,)
        Eigenvalues in ascending order.
    u : ndarray, shape (N, N)
        Unitary matrix whose columns are the matching eigenvectors, so that
        ``h = u @ diag(w) @ u.conj().T``.

    Raises
    ------
    EigenError
        If the sweep cap is hit before the off-diagonal mass vanishes.
    """
    a = as_hermitian(h, check=check)
    w, u, sweeps = _jacobi(a, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise EigenError(
            f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (N={a.shape[0]})"
        )
    order = np.argsort(w, kind="stable")
    return w[order], u[:, order]


def eigvalsh(h, *, check=True):
    return hermitian_eig(h, check=check)[0]


def is_psd(h, tol=0.0):
    """True iff the smallest eigenvalue is >= ``-tol * max(1, ||h||_F)``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    h = as_hermitian(h, check=False)
    w = eigvalsh(h, check=False)
    return bool(w[0] >= -tol * max(1.0, np.linalg.norm(h)))


def real_embed(h):
    """``[[Re H, -Im H], [Im H, Re H]]``; symmetric when ``h`` is Hermitian."""
    h = np.asarray(h, dtype=np.complex128)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def real_unembed(s):
    """Project a real symmetric ``2N x 2N`` matrix onto the embedded-complex
    subspace and return the Hermitian ``N x N`` it represents.

    For any Hermitian ``M``: ``trace(s @ real_embed(M)) ==
    2 * Re trace(real_unembed(s) @ M)``.
    """
    s = np.asarray(s, dtype=float)
    n = s.shape[0] // 2
    a = 0.5 * (s[:n, :n] + s[n:, n:])
    b = 0.5 * (s[n:, :n] - s[:n, n:])
    return as_hermitian(a + 1j * b, check=False)
