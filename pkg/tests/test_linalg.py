import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdcr.linalg import (
    EigenError, as_hermitian, eigvalsh, hermitian_eig, is_psd, jacobi_eig_loops,
    jacobi_eig_numpy, real_embed, real_unembed,
)

from conftest import random_hermitian, random_psd


def test_eig_identity():
    lam, U = hermitian_eig(np.eye(2))
    np.testing.assert_allclose(lam, [1.0, 1.0])
    np.testing.assert_allclose(U, np.eye(2))


def test_eig_diagonal_sorted():
    lam, _ = hermitian_eig(np.diag([3.0, -1.0]))
    np.testing.assert_allclose(lam, [-1.0, 3.0])


def test_eig_two_by_two_symmetric():
    lam, _ = hermitian_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(lam, [1.0, 3.0], atol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 5, 10, 20])
def test_eig_reconstruction_and_unitarity(rng, n):
    for _ in range(20):
        H = random_hermitian(rng, n) * 10.0 ** rng.uniform(-12, 3)
        lam, U = hermitian_eig(H)
        scale = np.linalg.norm(H)
        assert np.linalg.norm(U @ np.diag(lam) @ U.conj().T - H) <= 1e-10 * scale
        assert np.linalg.norm(U.conj().T @ U - np.eye(n)) <= 1e-10
        assert np.all(np.diff(lam) >= 0)


def test_eig_matches_lapack(rng):
    for n in range(1, 12):
        H = random_hermitian(rng, n)
        np.testing.assert_allclose(eigvalsh(H), np.linalg.eigvalsh(H), atol=1e-12)


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValueError):
        hermitian_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_eig_rejects_nan():
    with pytest.raises(ValueError):
        hermitian_eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_eig_iteration_cap_reported():
    H = random_hermitian(np.random.default_rng(0), 6)
    lam, U, sweeps = jacobi_eig_numpy(H.copy(), 1e-15, 0)
    assert sweeps == -1
    assert issubclass(EigenError, RuntimeError)


def test_jacobi_kernels_agree(rng):
    for n in (2, 4, 7, 10):
        H = random_hermitian(rng, n)
        a = jacobi_eig_loops(H.copy(), 1e-15, 60)
        b = jacobi_eig_numpy(H.copy(), 1e-15, 60)
        np.testing.assert_allclose(np.sort(a[0]), np.sort(b[0]), atol=1e-13)


def test_as_hermitian_real_diagonal():
    A = np.array([[1 + 1e-14j, 2 - 1j], [2 + 1j, 3.0]])
    H = as_hermitian(A)
    assert np.all(H.diagonal().imag == 0)
    assert np.array_equal(H, H.conj().T)


def test_is_psd_examples(rng):
    assert is_psd(np.eye(3), 0.0)
    assert not is_psd(np.diag([1.0, -1e-3]), 1e-9)
    v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    assert is_psd(np.outer(v, v.conj()), 1e-12)


def test_is_psd_tolerance_relative():
    # -1e-10 against a norm of 1e4: within 1e-12 * max(1, ||H||) = 1e-8
    assert is_psd(np.diag([1e4, -1e-10]), 1e-12)
    assert not is_psd(np.diag([1e4, -1e-7]), 1e-12)


def test_real_embed_identity():
    np.testing.assert_array_equal(real_embed(np.eye(3)), np.eye(6))


def test_real_embed_pauli_y():
    Y = np.array([[0, -1j], [1j, 0]])
    expected = np.array([[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, 0]], dtype=float)
    np.testing.assert_array_equal(real_embed(Y), expected)


def test_real_embed_spectrum_doubles(rng):
    for n in (1, 3, 6):
        H = random_hermitian(rng, n)
        lam = eigvalsh(H)
        lam2 = np.linalg.eigvalsh(real_embed(H))
        np.testing.assert_allclose(lam2, np.sort(np.repeat(lam, 2)), atol=1e-12)


def test_real_embed_round_trip(rng):
    H = random_hermitian(rng, 5)
    np.testing.assert_allclose(real_unembed(real_embed(H)), H)


def test_psd_equivalence_under_embedding():
    rng = np.random.default_rng(7)
    for i in range(1000):
        n = int(rng.integers(1, 13))
        H = random_hermitian(rng, n)
        if i % 2:
            H = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
        assert is_psd(H, 1e-10) == is_psd(real_embed(H), 1e-10)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 12), seed=st.integers(0, 2**32 - 1), logscale=st.floats(-14, 4))
def test_trace_identity(n, seed, logscale):
    rng = np.random.default_rng(seed)
    H = random_hermitian(rng, n) * 10.0 ** logscale
    t = np.trace(H).real
    t2 = np.trace(real_embed(H))
    assert abs(t2 - 2 * t) <= 1e-12 * max(abs(t2), np.linalg.norm(H))
