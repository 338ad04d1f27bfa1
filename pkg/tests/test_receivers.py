import numpy as np
import pytest

from fdcr.channel import SystemConfig
from fdcr.receivers import (
    DegenerateChannelError, ReceiverBank, dl_sinr_trace, evaluate_dl_sinr, evaluate_ul_sinr,
    mmse_receivers, si_power, si_weight, ul_sinr_trace, zf_receivers,
)

from conftest import crandn, make_realization, random_psd, seeded_realization

CFG = SystemConfig()


def test_zf_orthonormal_is_identity_map(rng):
    Q, _ = np.linalg.qr(crandn(rng, 6, 3))
    bank = zf_receivers(Q.T)
    np.testing.assert_allclose(bank.v, Q.T, atol=1e-12)


def test_zf_single_user():
    g = np.array([1.0 + 1j, 2.0, -0.5j])
    bank = zf_receivers(g)
    np.testing.assert_allclose(bank.v[0], g / np.vdot(g, g).real)


def test_zf_identity_residual():
    for seed in range(50):
        chan = seeded_realization(CFG, seed)
        V = zf_receivers(chan.g).v
        assert np.max(np.abs(chan.g.conj() @ V.T - np.eye(CFG.J))) <= 1e-10


def test_zf_rejects_dependent_channels(rng):
    g = crandn(rng, 2, 4)
    with pytest.raises(DegenerateChannelError):
        zf_receivers(np.vstack([g, g[0] * 2.0]))
    with pytest.raises(DegenerateChannelError):
        zf_receivers(crandn(rng, 5, 3))


def test_mmse_zero_power_is_matched_filter(rng):
    g = crandn(rng, 3, 5)
    bank = mmse_receivers(g, np.zeros(3), 1e-3)
    np.testing.assert_allclose(bank.v, g / 1e-3, rtol=1e-12)


def test_mmse_validates_inputs(rng):
    g = crandn(rng, 2, 4)
    with pytest.raises(ValueError):
        mmse_receivers(g, [1.0, -1.0], 1.0)
    with pytest.raises(ValueError):
        mmse_receivers(g, [1.0, 1.0], 0.0)


def test_mmse_not_worse_than_zf():
    cfg = CFG.with_(rho=0.0)
    P = np.array(cfg.P_UL_max)
    for seed in range(20):
        chan = seeded_realization(cfg, seed)
        zf, mm = zf_receivers(chan.g), mmse_receivers(chan.g, P, cfg.sigma2_UL)
        for j in range(cfg.J):
            a = evaluate_ul_sinr(j, mm, P, [], chan, cfg)
            b = evaluate_ul_sinr(j, zf, P, [], chan, cfg)
            assert a >= b * (1 - 1e-9)


def test_si_power_examples(rng):
    W = [np.diag([1.0, 2.0]).astype(complex)]
    assert si_power([1.0, 0.0], np.eye(2), W, 0.3) == pytest.approx(0.3)
    assert si_power([1.0, 0.0], np.eye(2), [np.zeros((2, 2))], 0.3) == 0.0
    H = crandn(rng, 4, 4)
    assert si_power(crandn(rng, 4), H, [random_psd(rng, 4)], 0.0) == 0.0


def test_si_weight_matches_si_power(rng):
    for _ in range(20):
        H, v = crandn(rng, 5, 5), crandn(rng, 5)
        W = [random_psd(rng, 5) for _ in range(3)]
        M = si_weight(v, H, 1e-8)
        lhs = sum(np.trace(M @ Wk).real for Wk in W)
        assert lhs == pytest.approx(si_power(v, H, W, 1e-8), rel=1e-12)


def test_dl_sinr_single_user():
    h = np.array([1.0, 1j, 0.5])
    chan = make_realization(h, l=np.zeros(3))
    cfg = SystemConfig(K=1, J=0, R=1, N_T=3)
    p = 0.7
    w = np.sqrt(p) * h / np.linalg.norm(h)
    expected = np.vdot(h, h).real * p / cfg.sigma2_DL[0]
    assert evaluate_dl_sinr(0, w, [], chan, cfg) == pytest.approx(expected, rel=1e-12)
    assert evaluate_dl_sinr(0, np.array([1j, 1.0, 0.0]), [], chan, cfg) == pytest.approx(0.0, abs=1e-20)


def test_ul_sinr_single_user_zf():
    g = np.array([[0.3, 1j, 0.1]])
    chan = make_realization(np.array([1.0, 0, 0]), g=g, l=np.zeros(3))
    cfg = SystemConfig(K=1, J=1, R=1, N_T=3)
    bank = zf_receivers(g)
    v = bank.v[0]
    got = evaluate_ul_sinr(0, bank, [0.01], [np.zeros((3, 3))], chan, cfg)
    assert got == pytest.approx(0.01 / (cfg.sigma2_UL * np.vdot(v, v).real), rel=1e-12)


def test_ul_sinr_zf_removes_cross_terms():
    chan = seeded_realization(CFG, 1)
    bank = zf_receivers(chan.g)
    P = np.array(CFG.P_UL_max)
    W = [np.zeros((CFG.N_T,) * 2)] * CFG.K
    for j in range(CFG.J):
        v = bank.v[j]
        ref = P[j] / (CFG.sigma2_UL * np.vdot(v, v).real)
        assert evaluate_ul_sinr(j, bank, P, W, chan, CFG) == pytest.approx(ref, rel=1e-9)


def test_scalar_and_trace_forms_agree(rng):
    for seed in range(30):
        chan = seeded_realization(CFG, seed)
        w = crandn(rng, CFG.K, CFG.N_T) * 1e-2
        W = [np.outer(wk, wk.conj()) for wk in w]
        P = rng.uniform(0, 1e-2, CFG.J)
        for k in range(CFG.K):
            a, b = evaluate_dl_sinr(k, w, P, chan, CFG), dl_sinr_trace(k, W, P, chan, CFG)
            assert abs(a - b) <= 1e-10 * abs(b)
        for bank in (zf_receivers(chan.g), mmse_receivers(chan.g, P, CFG.sigma2_UL)):
            for j in range(CFG.J):
                a = evaluate_ul_sinr(j, bank, P, W, chan, CFG)
                b = ul_sinr_trace(j, bank, P, W, chan, CFG)
                assert abs(a - b) <= 1e-10 * abs(b)
                assert np.isfinite(a) and a >= 0


def test_bank_shape():
    bank = ReceiverBank(np.zeros((2, 4), dtype=complex), "mmse")
    assert bank.J == 2
    assert zf_receivers(np.zeros((0, 4))).J == 0
