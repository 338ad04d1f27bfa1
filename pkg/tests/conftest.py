import numpy as np
import pytest

from fdcr.channel import ChannelRealization, SystemConfig, draw_geometry, draw_realization


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_hermitian(rng, n):
    X = crandn(rng, n, n)
    return (X + X.conj().T) / 2


def random_psd(rng, n, rank=None):
    X = crandn(rng, n, rank or n)
    return X @ X.conj().T


def make_realization(h, g=None, f=None, H_SI=None, l=None, e=None, eps_dl=None, eps_ul_jr=None):
    """Hand-built realization with estimates equal to the truth."""
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    K, N = h.shape
    g = np.zeros((0, N), dtype=complex) if g is None else np.atleast_2d(np.asarray(g, dtype=complex))
    J = g.shape[0]
    l = np.atleast_2d(np.asarray(l, dtype=complex))
    R = l.shape[0]
    f = np.zeros((J, K), dtype=complex) if f is None else np.asarray(f, dtype=complex)
    H_SI = np.zeros((N, N), dtype=complex) if H_SI is None else np.asarray(H_SI, dtype=complex)
    e = np.zeros((J, R), dtype=complex) if e is None else np.asarray(e, dtype=complex)
    eps_dl = np.zeros(R) if eps_dl is None else np.asarray(eps_dl, dtype=float)
    eps_ul_jr = np.zeros((J, R)) if eps_ul_jr is None else np.asarray(eps_ul_jr, dtype=float)
    return ChannelRealization(h=h, g=g, f=f, H_SI=H_SI, l_true=l, l_hat=l.copy(),
                              e_true=e, e_hat=e.copy(), eps_dl=eps_dl, eps_ul_jr=eps_ul_jr)


def seeded_realization(cfg, seed):
    rng = np.random.default_rng(seed)
    geo = draw_geometry(cfg, rng)
    return draw_realization(cfg, geo, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cfg9():
    return SystemConfig(N_T=9)


@pytest.fixture(scope="session")
def solved9(cfg9):
    """A feasible N_T = 9 realization with its relaxed solve and recovery."""
    from fdcr.problem import RobustInstance, build_relaxed
    from fdcr.recovery import recover
    from fdcr.solver import solve

    for seed in range(20):
        chan = seeded_realization(cfg9, seed)
        inst = RobustInstance.from_realization(chan, cfg9)
        problem = build_relaxed(inst)
        rep = solve(problem)
        if rep.optimal:
            sol = recover(rep, inst, problem)
            return {"chan": chan, "inst": inst, "problem": problem, "report": rep, "solution": sol}
    raise RuntimeError("no feasible seed found")
