"""Coupling solve, polynomial invariant-manifold approximation and oracles.

The stable/center cross coupling is removed by the matrix ``E`` solving

    A_K E - E A1 + B2 K12 = 0.

In the resulting ``(y, v)`` coordinates the closed loop reads

    dy/dt = A1 y + G1(y, v),       dv/dt = A_K v + G2(y, v),

and an invariant manifold ``v = h(y)`` satisfies the functional equation

    A_K h(y) + G2(y, h(y)) - h'(y) (A1 y + G1(y, h(y))) = 0.

``solve_series`` matches powers of ``y`` degree by degree (scalar ``y``),
solving one linear system per degree.  ``pde_residual`` re-expands the
equation by an independent route (pointwise evaluation plus a Chebyshev fit)
so the two can be checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CertificateError, UnsupportedModelError
from .models import PlantModel
from .series import circle_coefficients, polyder_ascending, polyval_ascending

__all__ = [
    "PolyManifold", "ReducedDynamics",
    "solve_coupling", "solve_series", "pde_residual", "reduced_dynamics",
]

_RESIDUAL_TOL = 1e-9       # invariance residual allowed up to the fit order
_EXACT_TOL = 1e-12         # threshold for flagging a manifold as exact


@dataclass(frozen=True)
class PolyManifold:
    """Polynomial map ``y -> h(y)`` with no constant or linear part.

    ``coeffs[i, d]`` is the degree-``d`` coefficient of component ``i``
    (ascending degree, columns 0 and 1 identically zero).
    """

    coeffs: np.ndarray
    order: int
    exact: bool = False

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if c.shape[1] < self.order + 1:
            c = np.pad(c, ((0, 0), (0, self.order + 1 - c.shape[1])))
        object.__setattr__(self, "coeffs", c)
        if np.max(np.abs(c[:, :2]), initial=0.0) > 0:
            raise CertificateError(
                "manifold approximation must have h(0) = 0 and h'(0) = 0")

    @property
    def nz(self) -> int:
        return self.coeffs.shape[0]

    @staticmethod
    def _scalarize(y):
        """Accept a scalar sample, an (N,) sample batch, a (1,) state vector
        or a (1, N) curve; return plain sample values."""
        y = np.asarray(y)
        if y.ndim == 2:
            return y[0]
        if y.ndim == 1 and y.shape == (1,):
            return y[0]
        return y

    def __call__(self, y):
        return polyval_ascending(self.coeffs, self._scalarize(y))

    def derivative(self, y):
        return polyval_ascending(polyder_ascending(self.coeffs), self._scalarize(y))

    def degree_table(self):
        """List of ``(component, degree, coefficient)`` for nonzero entries."""
        rows = []
        for i in range(self.nz):
            for d in range(2, self.coeffs.shape[1]):
                c = self.coeffs[i, d]
                if c != 0.0:
                    rows.append((i, d, float(c)))
        return rows

    def as_dict(self):
        return {"order": self.order, "exact": self.exact,
                "coefficients": [row.tolist() for row in self.coeffs]}


@dataclass(frozen=True)
class ReducedDynamics:
    """Polynomial restriction of the center dynamics to the manifold."""

    coeffs: np.ndarray    # ascending-degree coefficients of dy/dt
    p: float              # leading degree (decay exponent)
    k5: float             # |g1| <= k5 |y|^p on the reference interval
    k6: float | None      # y*g1 <= -k6 |y|^(p+1), None when not certifiable
    interval_radius: float

    @property
    def leading_coefficient(self) -> float:
        return float(self.coeffs[int(self.p)])

    def __call__(self, y):
        return polyval_ascending(self.coeffs, np.asarray(y))


def solve_coupling(A_K: np.ndarray, A1: np.ndarray, C: np.ndarray,
                   resolvent_tol: float = 1e-9) -> np.ndarray:
    """Solve ``A_K E - E A1 + C = 0`` for the decoupling matrix ``E``.

    Unique when no eigenvalue of ``A_K`` equals an eigenvalue of ``A1``
    (guaranteed for Hurwitz ``A_K`` and ``A1`` with zero real parts).
    """
    A_K = np.atleast_2d(np.asarray(A_K, dtype=float))
    A1 = np.atleast_2d(np.asarray(A1, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    lam_k = np.linalg.eigvals(A_K)
    lam_1 = np.linalg.eigvals(A1)
    gaps = np.abs(lam_k[:, None] - lam_1[None, :])
    if gaps.min() < resolvent_tol:
        raise CertificateError(
            "coupling equation is singular: eigenvalue separation "
            f"{gaps.min():.3e} between A_K and A1")
    E = scipy.linalg.solve_sylvester(A_K, -A1, -C)
    resid = np.linalg.norm(A_K @ E - E @ A1 + C)
    if resid > 1e-10 * (1.0 + np.linalg.norm(C)):
        raise CertificateError(f"coupling solve residual too large: {resid:.3e}")
    return E


def _closed_loop_samples(model: PlantModel, E: np.ndarray, hcoef: np.ndarray):
    """Return ``fn(t) -> stacked (G1; G2)(t)`` along the curve ``v = h(t)``.

    ``G1``/``G2`` are the closed-loop nonlinearities in ``(y, v)`` coordinates;
    the control on the curve is ``K11 z + K12 y + Kn(y)`` with ``z = v + E y``.
    """
    def fn(t):
        y = t[None, :]
        v = polyval_ascending(hcoef, t)
        z = v + E @ y
        u = model.K11 @ z + model.K12 @ y
        kn = model.Kn
        if kn is not None:
            u = u + np.asarray(kn(y))
        g1, g2 = model.g_nl(y, z, u)
        g1 = np.atleast_2d(g1)
        g2 = np.atleast_2d(g2)
        if kn is not None:
            g2 = g2 + model.B2 @ np.asarray(kn(y))
        g2 = g2 - E @ g1
        return np.vstack([g1, g2])
    return fn


def _series_degree_bound(model: PlantModel, r: int) -> int | None:
    """Maximum degree of the invariance residual for a polynomial model."""
    if model.poly is None:
        return None
    dmax = max(model.poly[0].max_total_degree(), model.poly[1].max_total_degree())
    if model.Kn is not None:
        return None
    # curve degree is r, so a total-degree-d monomial reaches degree d*r;
    # the h'(y) * G1 term adds r - 1 on top of the composite degree
    return dmax * r + (r - 1)


def solve_series(model: PlantModel, r: int, E: np.ndarray | None = None,
                 radius: float | None = None) -> PolyManifold:
    """Polynomial manifold approximation of order ``r`` by power matching.

    At each degree ``d`` the coefficient vector solves
    ``(A_K - d a1 I) c_d = -(residual of the current truncation at degree d)``.
    Requires a scalar center state and an analytic (complex-safe) nonlinear
    remainder; models whose remainder cannot be sampled off the real axis are
    rejected.
    """
    if model.k != 1:
        raise UnsupportedModelError("series solver requires a scalar center state")
    if r < 2:
        raise UnsupportedModelError("manifold order must be at least 2")
    rho = radius or model.series_radius
    if E is None:
        E = solve_coupling(model.A_K, model.A1, model.B2 @ model.K12)
    A_K = model.A_K
    a1 = float(np.atleast_2d(model.A1)[0, 0])
    nz = model.nz

    try:
        model.g_nl(np.zeros((1, 1), dtype=complex), np.zeros((nz, 1), dtype=complex),
                   np.zeros((model.m, 1), dtype=complex))
    except TypeError as exc:  # pragma: no cover - defensive
        raise UnsupportedModelError(
            "model nonlinearity is not complex-safe; provide a polynomial "
            "term table or an analytic implementation") from exc

    hcoef = np.zeros((nz, r + 1))
    for d in range(2, r + 1):
        comp = circle_coefficients(_closed_loop_samples(model, E, hcoef),
                                   order=d, radius=rho)
        G1 = comp[:1]
        G2 = comp[1:]
        hprime = polyder_ascending(hcoef)
        # degree-d coefficient of h'(y) * (a1 y + G1(y))
        inner = G1[0].copy()
        if inner.shape[0] < 2:
            inner = np.pad(inner, (0, 2 - inner.shape[0]))
        inner[1] += a1
        transport = np.zeros(nz)
        for j in range(min(hprime.shape[1], d + 1)):
            dd = d - j
            if 0 <= dd < inner.shape[0]:
                transport += hprime[:, j] * inner[dd]
        known = G2[:, d] - transport     # A_K h term has no degree-d part yet
        op = A_K - d * a1 * np.eye(nz)
        sv = np.linalg.svd(op, compute_uv=False)
        if sv.min() < 1e-12 * max(1.0, sv.max()):
            raise CertificateError(
                f"degree-{d} matching operator is singular (A_K shifted by "
                f"{d} * a1)")
        hcoef[:, d] = np.linalg.solve(op, -known)

    # snap roundoff noise from the coefficient extraction to exact zeros
    snap = 1e-11 * max(1.0, np.max(np.abs(hcoef)))
    hcoef[np.abs(hcoef) < snap] = 0.0

    manifold = PolyManifold(coeffs=hcoef, order=r)
    check_order = _series_degree_bound(model, r)
    exact = False
    if check_order is not None:
        r_check = max(r, min(check_order, 4 * r + 4))
        resid = pde_residual(model, manifold, r_check=r_check, E=E, radius=rho)
        exact = bool(np.max(np.abs(resid)) < _EXACT_TOL)
    return PolyManifold(coeffs=hcoef, order=r, exact=exact)


def pde_residual(model: PlantModel, h: PolyManifold, r_check: int,
                 E: np.ndarray | None = None,
                 radius: float | None = None) -> np.ndarray:
    """Coefficient table of the invariance residual up to degree ``r_check``.

    Evaluates ``A_K h(y) + G2(y, h(y)) - h'(y)(A1 y + G1(y, h(y)))`` at scaled
    Chebyshev nodes and fits a polynomial — a route independent of the
    degree-matching solver, usable as its oracle.  The fit degree extends
    past ``r_check`` (to the exact residual degree for polynomial models) so
    higher-order content cannot alias into the returned coefficients.
    """
    if model.k != 1:
        raise UnsupportedModelError("residual expansion requires a scalar center state")
    if r_check < h.order:
        raise UnsupportedModelError("r_check must be at least the manifold order")
    rho = radius or model.series_radius
    if E is None:
        E = solve_coupling(model.A_K, model.A1, model.B2 @ model.K12)
    A_K = model.A_K
    a1 = float(np.atleast_2d(model.A1)[0, 0])

    bound = _series_degree_bound(model, max(h.order, h.coeffs.shape[1] - 1))
    fit_deg = bound if bound is not None else r_check + 16
    fit_deg = max(fit_deg, r_check)

    n_nodes = max(4 * (fit_deg + 1), 64)
    nodes = rho * np.cos(np.pi * (2 * np.arange(n_nodes) + 1) / (2 * n_nodes))

    fn = _closed_loop_samples(model, E, h.coeffs)
    comp = fn(nodes.astype(complex)).real
    G1 = comp[0]
    G2 = comp[1:]
    hy = h(nodes)
    hp = h.derivative(nodes)
    resid = A_K @ hy + G2 - hp * (a1 * nodes + G1)

    cheb = np.polynomial.chebyshev.chebfit(nodes / rho, resid.T, fit_deg)
    scale = rho ** np.arange(fit_deg + 1)
    table = np.zeros((model.nz, fit_deg + 1))
    for i in range(model.nz):
        table[i] = np.polynomial.chebyshev.cheb2poly(cheb[:, i]) / scale
    return table[:, : r_check + 1]


def reduced_dynamics(model: PlantModel, h: PolyManifold,
                     E: np.ndarray | None = None,
                     interval_radius: float = 0.1,
                     radius: float | None = None,
                     coeff_tol: float = 1e-9) -> ReducedDynamics:
    """Polynomial center dynamics ``dy/dt`` on the manifold approximation.

    Also bounds the decay constants on ``|y| <= interval_radius`` by summing
    coefficient magnitudes: ``k5`` bounds ``|g1|/|y|^p`` and ``k6`` lower
    bounds the decrement ``-y g1 / |y|^(p+1)`` (``None`` when the leading term
    does not certify a decrement).
    """
    if model.k != 1:
        raise UnsupportedModelError("reduced dynamics requires a scalar center state")
    rho = radius or model.series_radius
    if E is None:
        E = solve_coupling(model.A_K, model.A1, model.B2 @ model.K12)
    deg_nl = 2
    if model.poly is not None:
        deg_nl = max(2, model.poly[0].max_total_degree())
    order = h.order + deg_nl
    comp = circle_coefficients(_closed_loop_samples(model, E, h.coeffs),
                               order=order, radius=rho)
    coeffs = comp[0]
    coeffs[1] += float(np.atleast_2d(model.A1)[0, 0])

    mags = np.abs(coeffs)
    nonzero = np.flatnonzero(mags > coeff_tol * max(1.0, mags.max()))
    if len(nonzero) == 0:
        return ReducedDynamics(coeffs=coeffs, p=np.inf, k5=0.0, k6=None,
                               interval_radius=interval_radius)
    p = int(nonzero[0])
    R = interval_radius
    scale = R ** (np.arange(len(coeffs)) - p)
    k5 = float(np.sum(mags[p:] * scale[p:]))
    k6 = None
    if p % 2 == 1 and coeffs[p] < 0:
        slack = float(-coeffs[p] - np.sum(mags[p + 1:] * scale[p + 1:]))
        if slack > 0:
            k6 = slack
    return ReducedDynamics(coeffs=coeffs, p=float(p), k5=k5, k6=k6,
                           interval_radius=interval_radius)
