"""Lyapunov certificates, admissible trigger thresholds and timing bounds.

For a Hurwitz closed-loop block ``A_K`` and chosen ``Q > 0`` the matrix ``P``
solves ``A_K' P + P A_K + Q = 0``.  The scalar composite Lyapunov function

    V(y, w) = ||y|| + sqrt(w' P w)

admits relative trigger thresholds whose admissible slope ``sigma`` has the
closed forms implemented in :func:`sigma_bound`.  The analytic inter-event
floors :func:`tau1_estimate` and :func:`tau3_estimate` are conservative
estimates driven by Lipschitz-type constants supplied by the caller.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CertificateError

__all__ = [
    "Certificate", "Tau1Estimate", "solve_lyapunov", "sigma_bound",
    "v_value", "tau1_estimate", "tau3_estimate", "make_certificate",
]

VARIANTS = ("relative_full", "manifold_weighted")


@dataclass(frozen=True)
class Certificate:
    """Lyapunov data plus the admissible threshold slope it certifies."""

    P: np.ndarray
    Q: np.ndarray
    s_f: float
    s_y: float
    sigma_max: float
    variant: str
    lyapunov_residual: float
    p_solved: bool = True   # False when P was supplied instead of solved

    def validate(self, A_K: np.ndarray, tol: float = 1e-10):
        """Check P > 0 and, for solver-produced P, the Lyapunov identity."""
        eigP = np.linalg.eigvalsh(self.P)
        if eigP[0] <= 0:
            raise CertificateError(f"P is not positive definite: lambda_min={eigP[0]:.3e}")
        if self.sigma_max <= 0:
            raise CertificateError("certified sigma bound must be positive")
        if self.p_solved:
            resid = np.linalg.norm(A_K.T @ self.P + self.P @ A_K + self.Q)
            if resid > tol * max(1.0, np.linalg.norm(self.Q)):
                raise CertificateError(f"Lyapunov residual too large: {resid:.3e}")
        return True

    def as_dict(self):
        return {
            "P": self.P.tolist(), "Q": self.Q.tolist(),
            "s_f": self.s_f, "s_y": self.s_y,
            "sigma_max": self.sigma_max, "variant": self.variant,
            "lyapunov_residual": self.lyapunov_residual,
            "p_solved": self.p_solved,
        }


@dataclass(frozen=True)
class Tau1Estimate:
    """Inter-event floor from the quadratic comparison equation.

    ``degenerate`` marks parameter sets with a non-positive discriminant,
    where the arctangent form does not apply and the linear comparison bound
    is returned instead (still a valid lower bound).
    """

    value: float
    degenerate: bool = False


def solve_lyapunov(A_K: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Solve ``A_K' P + P A_K = -Q`` for symmetric positive definite ``P``."""
    A_K = np.atleast_2d(np.asarray(A_K, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    eig = np.linalg.eigvals(A_K)
    if np.max(eig.real) >= 0:
        raise CertificateError(
            "Lyapunov solve requires a Hurwitz matrix; offending eigenvalues: "
            f"{[complex(v) for v in eig[eig.real >= 0]]}")
    if np.linalg.norm(Q - Q.T) > 1e-12 * max(1.0, np.linalg.norm(Q)):
        raise CertificateError("Q must be symmetric")
    if np.linalg.eigvalsh(Q)[0] <= 0:
        raise CertificateError("Q must be positive definite")
    P = scipy.linalg.solve_continuous_lyapunov(A_K.T, -Q)
    P = 0.5 * (P + P.T)
    resid = np.linalg.norm(A_K.T @ P + P @ A_K + Q)
    if resid > 1e-10 * max(1.0, np.linalg.norm(Q)):
        raise CertificateError(f"Lyapunov residual too large: {resid:.3e}")
    return P


def sigma_bound(P: np.ndarray, Q: np.ndarray, B2: np.ndarray, K1: np.ndarray,
                s_f: float = 0.5, variant: str = "manifold_weighted") -> float:
    """Closed-form admissible threshold slope for the selected rule family.

    * ``relative_full``:      lam_min(Q) / (4 ||P B2 K1||) * sqrt(lam_min(P)/lam_max(P))
    * ``manifold_weighted``:  (1 - s_f) lam_min(Q) / (2 ||P B2 K1||) * sqrt(lam_min(P)/lam_max(P))

    Norms are induced 2-norms.  A zero error gain makes the threshold
    unconstrained; ``inf`` is returned with a warning in that case.
    """
    if variant not in VARIANTS:
        raise CertificateError(f"unknown bound variant {variant!r}")
    if not 0 < s_f < 1:
        raise CertificateError("s_f must lie in (0, 1)")
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    eigP = np.linalg.eigvalsh(P)
    eigQ = np.linalg.eigvalsh(Q)
    if eigP[0] <= 0 or eigQ[0] <= 0:
        raise CertificateError("P and Q must be positive definite")
    gain = np.linalg.norm(P @ np.atleast_2d(B2) @ np.atleast_2d(K1), 2)
    if gain == 0.0:
        warnings.warn("error gain P B2 K1 vanishes; the threshold slope is "
                      "unconstrained (trigger degenerates)", RuntimeWarning)
        return np.inf
    shape_ratio = np.sqrt(eigP[0] / eigP[-1])
    if variant == "relative_full":
        return float(eigQ[0] / (4.0 * gain) * shape_ratio)
    return float((1.0 - s_f) * eigQ[0] / (2.0 * gain) * shape_ratio)


def v_value(y, w, P: np.ndarray) -> float:
    """Composite Lyapunov value ``||y|| + sqrt(w' P w)``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape != (len(w), len(w)):
        raise CertificateError(f"P shape {P.shape} does not match w length {len(w)}")
    quad = float(w @ P @ w)
    return float(np.linalg.norm(y) + np.sqrt(max(quad, 0.0)))


def tau1_estimate(a1: float, a2: float, a3: float, a4: float,
                  sigma: float) -> Tau1Estimate:
    """Time for the comparison ratio to climb from 0 to ``sigma``.

    The ratio obeys ``phi' = a1 + (a2 + a3) phi + a4 phi**2`` with
    ``phi(0) = 0``; when ``4 a1 a4 > (a2 + a3)**2`` the crossing time is

        (2/b) * (atan((2 a4 sigma + a2 + a3)/b) - atan((a2 + a3)/b)),
        b = sqrt(4 a1 a4 - (a2 + a3)**2).

    Otherwise the quadratic term is majorized by ``a4 sigma phi`` on the
    relevant range and the logarithmic linear-comparison time is returned
    with the ``degenerate`` flag set.
    """
    for name, val in (("a1", a1), ("a2", a2), ("a3", a3), ("a4", a4)):
        if val <= 0:
            raise CertificateError(f"comparison constant {name} must be positive")
    if sigma < 0:
        raise CertificateError("sigma must be non-negative")
    if sigma == 0.0:
        return Tau1Estimate(0.0, degenerate=False)
    s = a2 + a3
    disc = 4.0 * a1 * a4 - s * s
    if disc > 0:
        b = np.sqrt(disc)
        tau = (2.0 / b) * (np.arctan((2.0 * a4 * sigma + s) / b) - np.arctan(s / b))
        return Tau1Estimate(float(tau), degenerate=False)
    L = s + a4 * sigma
    tau = np.log1p(sigma * L / a1) / L
    return Tau1Estimate(float(tau), degenerate=True)


def tau3_estimate(sigma_l: float, L1: float, delta: float) -> float:
    """Dead-zone inter-event floor ``ln(1 + sigma_l L1 / delta) / L1``."""
    if L1 <= 0 or delta <= 0 or sigma_l < 0:
        raise CertificateError("tau3 requires L1, delta > 0 and sigma_l >= 0")
    return float(np.log1p(sigma_l * L1 / delta) / L1)


def make_certificate(A_K: np.ndarray, B2: np.ndarray, K1: np.ndarray,
                     Q: np.ndarray | None = None, P: np.ndarray | None = None,
                     s_f: float = 0.5, s_y: float = 0.5,
                     variant: str = "manifold_weighted") -> Certificate:
    """Assemble a certificate, solving for ``P`` unless one is supplied.

    A supplied ``P`` is used verbatim (``p_solved=False``); this is how the
    reference constants of the first example are reproduced, where the
    norm-type Lyapunov function fixes ``P`` to the identity independently of
    ``Q``.  The Lyapunov residual is recorded either way.
    """
    A_K = np.atleast_2d(np.asarray(A_K, dtype=float))
    nz = A_K.shape[0]
    Q = np.eye(nz) if Q is None else np.atleast_2d(np.asarray(Q, dtype=float))
    if P is None:
        P = solve_lyapunov(A_K, Q)
        p_solved = True
    else:
        P = np.atleast_2d(np.asarray(P, dtype=float))
        p_solved = False
    resid = float(np.linalg.norm(A_K.T @ P + P @ A_K + Q))
    sigma_max = sigma_bound(P, Q, B2, K1, s_f=s_f, variant=variant)
    cert = Certificate(P=P, Q=Q, s_f=s_f, s_y=s_y, sigma_max=sigma_max,
                       variant=variant, lyapunov_residual=resid,
                       p_solved=p_solved)
    cert.validate(A_K)
    return cert
