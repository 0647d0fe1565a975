import numpy as np
import pytest
from scipy import integrate, signal
from scipy.linalg import expm

from auvgnc.lti import (
    LtiSystem, NotHurwitz, balanced_minreal, block_diag, expm_integral, identity, inf_norm,
    l1_norm, l1_norm_entries, parallel, series, staircase_minreal, zoh,
)

from conftest import random_stable

FREQS = [0.0, 0.1j, 1j, 3.7j, 0.5 + 2j]


def tf_value(num, den, s):
    return np.polyval(num, s) / np.polyval(den, s)


def rand_sys(rng, n, m, p, D=False):
    return LtiSystem(random_stable(rng, n), rng.normal(size=(n, m)), rng.normal(size=(p, n)),
                     rng.normal(size=(p, m)) if D else None)


def test_from_tf_matches_polynomial_ratio():
    num, den = [2.0, 3.0], [1.0, 4.0, 5.0, 6.0]
    g = LtiSystem.from_tf(num, den)
    for s in FREQS:
        assert g.freqresp(s)[0, 0] == pytest.approx(tf_value(num, den, s), rel=1e-12)
    w, h = signal.freqs(num, den, worN=[0.3, 2.0])
    np.testing.assert_allclose([g.freqresp(1j * x)[0, 0] for x in w], h, rtol=1e-12)


def test_gain_and_identity():
    K = np.array([[1.0, 2.0], [3.0, 4.0]])
    g = LtiSystem.gain(K)
    assert g.n == 0 and (g.p, g.m) == (2, 2)
    np.testing.assert_array_equal(g.freqresp(1j), K)
    np.testing.assert_array_equal(identity(3).dcgain(), np.eye(3))


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        LtiSystem(np.eye(2), np.ones((2, 1)), np.ones((1, 2)), np.ones((2, 2)))


def test_series_parallel_are_products_and_sums(rng):
    g1 = rand_sys(rng, 3, 2, 2, D=True)
    g2 = rand_sys(rng, 2, 2, 2, D=True)
    for s in FREQS:
        np.testing.assert_allclose(series(g2, g1).freqresp(s), g2.freqresp(s) @ g1.freqresp(s),
                                   rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose((g2 @ g1).freqresp(s), g2.freqresp(s) @ g1.freqresp(s),
                                   rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(parallel(g1, g2).freqresp(s), g1.freqresp(s) + g2.freqresp(s),
                                   rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose((g1 - g2).freqresp(s), g1.freqresp(s) - g2.freqresp(s),
                                   rtol=1e-10, atol=1e-12)
    with pytest.raises(ValueError):
        series(g1, rand_sys(rng, 2, 1, 3))
    with pytest.raises(ValueError):
        parallel(g1, rand_sys(rng, 2, 1, 2))


def test_scalar_and_matrix_multiplication(rng):
    g = rand_sys(rng, 3, 2, 2, D=True)
    K = rng.normal(size=(2, 2))
    for s in FREQS:
        np.testing.assert_allclose((2.5 * g).freqresp(s), 2.5 * g.freqresp(s), rtol=1e-12)
        np.testing.assert_allclose(g.premul(K).freqresp(s), K @ g.freqresp(s), rtol=1e-10)
        np.testing.assert_allclose(g.postmul(K).freqresp(s), g.freqresp(s) @ K, rtol=1e-10)


def test_block_diag(rng):
    a, b = rand_sys(rng, 2, 1, 1), rand_sys(rng, 3, 1, 1, D=True)
    g = block_diag(a, b)
    for s in FREQS:
        G = g.freqresp(s)
        assert G[0, 0] == pytest.approx(a.freqresp(s)[0, 0])
        assert G[1, 1] == pytest.approx(b.freqresp(s)[0, 0])
        assert G[0, 1] == 0 and G[1, 0] == 0


def test_inverse(rng):
    g = rand_sys(rng, 3, 2, 2, D=True)
    for s in FREQS:
        np.testing.assert_allclose(g.inverse().freqresp(s), np.linalg.inv(g.freqresp(s)),
                                   rtol=1e-9, atol=1e-11)
    with pytest.raises(ValueError):
        rand_sys(rng, 2, 1, 2, D=True).inverse()


def test_times_s(rng):
    g = rand_sys(rng, 3, 2, 2)
    for s in FREQS:
        np.testing.assert_allclose(g.times_s(1.5).freqresp(s), (s + 1.5) * g.freqresp(s),
                                   rtol=1e-10, atol=1e-12)
    with pytest.raises(ValueError):
        rand_sys(rng, 2, 1, 1, D=True).times_s()


@pytest.mark.parametrize("reduce", [staircase_minreal, balanced_minreal])
def test_minreal_removes_hidden_modes(rng, reduce):
    g = rand_sys(rng, 3, 2, 2, D=True)
    hidden = rand_sys(rng, 2, 2, 2)
    # uncontrollable and unobservable copies: B and C zeroed
    pad = LtiSystem(hidden.A, np.zeros((2, 2)), hidden.C)
    pad2 = LtiSystem(hidden.A, hidden.B, np.zeros((2, 2)))
    big = g + pad + pad2
    red = reduce(big)
    assert red.n == 3
    for s in FREQS:
        np.testing.assert_allclose(red.freqresp(s), g.freqresp(s), rtol=1e-7, atol=1e-9)


def test_minreal_pole_zero_cancellation():
    # (s+1)/((s+1)(s+2)) reduces to one state
    g = LtiSystem.from_tf([1.0, 1.0], np.polymul([1.0, 1.0], [1.0, 2.0]))
    assert g.minreal().n == 1
    assert balanced_minreal(g).n == 1


def test_balanced_minreal_needs_stability():
    with pytest.raises(NotHurwitz):
        balanced_minreal(LtiSystem([[1.0]], [[1.0]], [[1.0]]))


@pytest.mark.parametrize("a", [0.1, 1.0, 10.0])
def test_l1_first_order(a):
    assert l1_norm(LtiSystem.from_tf([1.0], [1.0, a])) == pytest.approx(1 / a, rel=1e-6)


def test_l1_includes_feedthrough():
    g = LtiSystem([[-1.0]], [[1.0]], [[1.0]], [[-0.5]])
    assert l1_norm(g) == pytest.approx(1.5, rel=1e-6)


def test_l1_oscillatory_against_quadrature():
    # impulse response 2 e^{-t/2} sin(3t) changes sign repeatedly
    g = LtiSystem.from_tf([6.0], [1.0, 1.0, 9.25])
    ref, _ = integrate.quad(lambda t: abs(2 * np.exp(-0.5 * t) * np.sin(3 * t)), 0, 80,
                            limit=2000)
    assert l1_norm(g) == pytest.approx(ref, rel=1e-6)


def test_l1_mimo_is_max_row_sum(rng):
    chans = [(1.0, 0.5), (3.0, 2.0), (1.0, 0.2)]
    g = LtiSystem.diag_tf([([k], [1.0, a]) for k, a in chans])
    assert l1_norm(g) == pytest.approx(max(k / a for k, a in chans), rel=1e-6)
    ent = l1_norm_entries(g)
    assert ent[0, 1] == 0 and ent[1, 0] == 0


def test_l1_rejects_unstable():
    with pytest.raises(NotHurwitz):
        l1_norm(LtiSystem([[0.0]], [[1.0]], [[1.0]]))


def test_inf_norm():
    assert inf_norm([[1.0, -2.0], [0.5, 0.5]]) == 3.0
    assert inf_norm(np.zeros((0, 0))) == 0.0


def test_expm_integral_against_quadrature(rng):
    A = random_stable(rng, 4)
    h = 0.37
    E, G = expm_integral(A, h)
    np.testing.assert_allclose(E, expm(A * h), rtol=1e-12, atol=1e-14)
    ref = integrate.quad_vec(lambda s: expm(A * s), 0, h, epsabs=1e-14)[0]
    np.testing.assert_allclose(G, ref, rtol=1e-10, atol=1e-13)


def test_zoh_matches_scipy(rng):
    A = random_stable(rng, 3)
    B = rng.normal(size=(3, 2))
    Ad, Bd = zoh(A, B, 0.05)
    ref = signal.cont2discrete((A, B, np.eye(3), np.zeros((3, 2))), 0.05, method="zoh")
    np.testing.assert_allclose(Ad, ref[0], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(Bd, ref[1], rtol=1e-12, atol=1e-14)
