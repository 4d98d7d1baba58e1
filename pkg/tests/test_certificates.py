import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import random_stable_matrix
from etcsim.certificates import (make_certificate, sigma_bound,
                                 solve_lyapunov, tau1_estimate, tau3_estimate,
                                 v_value)
from etcsim.errors import CertificateError


def kron_lyapunov_oracle(A_K, Q):
    """Dense vectorized solve of A_K' P + P A_K = -Q (column-stacked)."""
    n = A_K.shape[0]
    M = np.kron(np.eye(n), A_K.T) + np.kron(A_K.T, np.eye(n))
    vec = np.linalg.solve(M, -Q.flatten(order="F"))
    return vec.reshape((n, n), order="F")


def test_lyapunov_scalar():
    P = solve_lyapunov(np.array([[-1.0]]), np.array([[2.0]]))
    assert P[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_lyapunov_example2_hand_value():
    # hand oracle: for A_K = [[0, 1], [-1, -1]] and Q = I the 3x3 linear
    # system in (p11, p12, p22) gives P = [[1.5, 0.5], [0.5, 1.0]]
    A_K = np.array([[0.0, 1.0], [-1.0, -1.0]])
    P = solve_lyapunov(A_K, np.eye(2))
    assert np.max(np.abs(P - [[1.5, 0.5], [0.5, 1.0]])) < 1e-10


def test_lyapunov_diagonal():
    P = solve_lyapunov(np.diag([-1.0, -2.0]), np.diag([2.0, 4.0]))
    assert np.max(np.abs(P - np.eye(2))) < 1e-12


def test_lyapunov_rejects_non_hurwitz():
    with pytest.raises(CertificateError) as exc:
        solve_lyapunov(np.array([[1.0]]), np.array([[1.0]]))
    assert "eigenvalue" in str(exc.value)


def test_lyapunov_rejects_bad_q():
    A = np.array([[-1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(CertificateError):
        solve_lyapunov(A, np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(CertificateError):
        solve_lyapunov(A, -np.eye(2))


def test_lyapunov_against_kron_oracle():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(1, 6))
        A_K = random_stable_matrix(rng, n)
        M = rng.normal(size=(n, n))
        Q = M @ M.T + np.eye(n)
        P = solve_lyapunov(A_K, Q)
        assert np.max(np.abs(P - kron_lyapunov_oracle(A_K, Q))) < 1e-10


def test_sigma_bound_example1_reference_pair():
    # identity P/Q pair of the first example reproduces 1/16 exactly
    sig = sigma_bound(np.array([[1.0]]), np.array([[1.0]]),
                      np.array([[1.0]]), np.array([[0.0, -2.0]]), s_f=0.75)
    assert sig == 1.0 / 16.0


def test_sigma_bound_example2(ex2, ex2_cert):
    assert ex2_cert.sigma_max == pytest.approx(0.03351759903175122, abs=1e-12)
    assert 0.03 <= ex2_cert.sigma_max <= 0.04


def test_sigma_bound_relative_full_variant():
    sig = sigma_bound(np.array([[1.0]]), np.array([[2.0]]),
                      np.array([[1.0]]), np.array([[-2.0]]),
                      variant="relative_full")
    assert sig == pytest.approx(2.0 / (4.0 * 2.0))


def test_sigma_bound_zero_gain_warns():
    with pytest.warns(RuntimeWarning):
        sig = sigma_bound(np.eye(2), np.eye(2), np.zeros((2, 1)),
                          np.zeros((1, 2)))
    assert sig == np.inf


def test_sigma_bound_monotonicity():
    P = np.array([[1.5, 0.5], [0.5, 1.0]])
    Q = np.eye(2)
    B2 = np.array([[0.0], [1.0]])
    K1 = np.array([[0.0, 1.0, -4.0]])[:, 1:]
    vals = [sigma_bound(P, Q, B2, K1, s_f=s) for s in (0.1, 0.3, 0.5, 0.7, 0.9)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    # scaling Q with P held fixed scales the bound up
    scaled = [sigma_bound(P, c * Q, B2, K1, s_f=0.5) for c in (0.5, 1.0, 2.0)]
    assert scaled[0] < scaled[1] < scaled[2]


def test_v_value_cases():
    assert v_value([0.0], [0.0], np.eye(1)) == 0.0
    assert v_value([1.0], [0.0], np.eye(1)) == 1.0
    P = np.array([[1.5, 0.5], [0.5, 1.0]])
    assert v_value([0.0], [1.0, 0.0], P) == pytest.approx(np.sqrt(1.5))


def test_v_value_dimension_guard():
    with pytest.raises(CertificateError):
        v_value([1.0], [1.0, 0.0], np.eye(1))


def test_tau1_degenerate_discriminant():
    est = tau1_estimate(1.0, 1.0, 1.0, 1.0, 0.1)
    assert est.degenerate and est.value > 0


def test_tau1_hand_value():
    est = tau1_estimate(2.0, 1.0, 1.0, 1.0, 0.5)
    want = np.arctan(1.5) - np.arctan(1.0)
    assert not est.degenerate
    assert est.value == pytest.approx(want, abs=1e-12)
    assert est.value == pytest.approx(0.1974, abs=5e-5)


def test_tau1_zero_sigma():
    assert tau1_estimate(2.0, 1.0, 1.0, 1.0, 0.0).value == 0.0


def tau1_ode_oracle(a1, a2, a3, a4, sigma):
    """Integrate phi' = a1 + (a2+a3) phi + a4 phi^2 until phi = sigma."""
    def rhs(t, y):
        return a1 + (a2 + a3) * y[0] + a4 * y[0] ** 2

    def hit(t, y):
        return y[0] - sigma
    hit.terminal = True
    hit.direction = 1
    sol = solve_ivp(rhs, (0.0, 1e3), [0.0], events=hit,
                    rtol=1e-12, atol=1e-14, max_step=1e-2)
    return float(sol.t_events[0][0])


def test_tau1_against_ode_oracle():
    rng = np.random.default_rng(9)
    n_ok = 0
    while n_ok < 100:
        a1, a2, a3, a4 = rng.uniform(0.2, 4.0, size=4)
        sigma = rng.uniform(0.02, 1.0)
        if 4 * a1 * a4 <= (a2 + a3) ** 2:
            continue
        est = tau1_estimate(a1, a2, a3, a4, sigma)
        assert abs(est.value - tau1_ode_oracle(a1, a2, a3, a4, sigma)) < 1e-6
        n_ok += 1


def test_tau3_values():
    L1 = 3.0
    sigma_l = (np.e - 1.0) / L1    # sigma_l * L1 / delta = e - 1
    assert tau3_estimate(sigma_l, L1, 1.0) == pytest.approx(1.0 / L1)
    assert tau3_estimate(0.5, 2.0, 1.0) == pytest.approx(0.5 * np.log(2.0))
    assert tau3_estimate(0.0, 2.0, 1.0) == 0.0


def test_make_certificate_paths(ex2):
    cert = make_certificate(ex2.A_K, ex2.B2, ex2.K1, Q=np.eye(2))
    assert cert.p_solved and cert.lyapunov_residual < 1e-12
    ref = make_certificate(np.array([[-1.0]]), np.array([[1.0]]),
                           np.array([[0.0, -2.0]]), Q=np.array([[1.0]]),
                           P=np.array([[1.0]]), s_f=0.75)
    assert not ref.p_solved
    assert ref.sigma_max == 1.0 / 16.0
    assert ref.lyapunov_residual > 0.5   # the reference pair is not consistent
