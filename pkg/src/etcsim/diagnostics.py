"""Empirical diagnostics: region constants, timing floors, decrement checks.

The analytic inter-event floors need Lipschitz-type constants of the
closed-loop remainder terms on a chosen validity ball.  Those constants are
not computable symbolically for general plants, so they are estimated by
sampling; everything derived from them is a conservative estimate and is
labeled as such in the CLI output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificates import Certificate, tau1_estimate, tau3_estimate
from .errors import FitError
from .manifold import PolyManifold, reduced_dynamics, solve_coupling
from .models import PlantModel
from .sim import SimResult
from .trigger import dead_zone_radius

__all__ = ["RegionConstants", "estimate_constants", "tau_estimates",
           "decrement_check", "DecrementReport"]


@dataclass(frozen=True)
class RegionConstants:
    """Sampled bounds valid on the ball ||(y; w)|| <= radius."""

    radius: float
    k1: float      # ||N1|| <= k1 (||w|| + ||e||)
    k2: float      # ||N2|| <= k2 (||w|| + ||e||)
    k5: float      # ||reduced g1|| <= k5 |y|**p
    k6: float | None
    k7: float      # ||h(y)|| <= k7 y**2
    k8: float      # ||h'(y)|| <= k8 |y|
    L1: float      # ||(dy; dw)|| <= L1 ||(y; w; e)||
    p: float


def _closed_loop_parts(model: PlantModel, E: np.ndarray, h: PolyManifold):
    """Return g1cl/g2cl evaluated at (y, v) with the held-error control."""
    def parts(y, v, e_y, e_v):
        z = v + E @ y
        y_h = y + e_y
        v_h = v + e_v
        u = model.K11 @ (v_h + E @ y_h) + model.K12 @ y_h
        if model.Kn is not None:
            u = u + np.asarray(model.Kn(y_h))
        g1, g2 = model.g_nl(y, z, u)
        g1 = np.atleast_1d(g1)
        g2 = np.atleast_1d(g2)
        if model.Kn is not None:
            g2 = g2 + model.B2 @ np.asarray(model.Kn(y_h))
        return g1, g2 - E @ g1
    return parts


def estimate_constants(model: PlantModel, h: PolyManifold,
                       radius: float = 0.1, n_samples: int = 4000,
                       seed: int = 0,
                       E: np.ndarray | None = None) -> RegionConstants:
    """Sample the remainder terms on the validity ball and bound the ratios."""
    if E is None:
        E = solve_coupling(model.A_K, model.A1, model.B2 @ model.K12)
    rng = np.random.default_rng(seed)
    k, nz, m = model.k, model.nz, model.m
    parts = _closed_loop_parts(model, E, h)
    red = reduced_dynamics(model, h, E=E, interval_radius=radius)

    A_K = model.A_K

    k1 = k2 = L1 = 0.0
    for _ in range(n_samples):
        raw = rng.normal(size=k + nz)
        raw *= radius * rng.uniform() ** (1.0 / (k + nz)) / np.linalg.norm(raw)
        y, w = raw[:k], raw[k:]
        e = rng.normal(size=k + nz)
        e *= radius * rng.uniform() / max(np.linalg.norm(e), 1e-300)
        e_y, e_v = e[:k], e[k:]
        hy = h(y)
        hpy = h.derivative(y)
        g1, g2 = parts(y, w + hy, e_y, e_v)
        g1_ref, g2_ref = parts(y, hy, np.zeros(k), np.zeros(nz))
        n1 = g1 - g1_ref
        n2 = (g2 - g2_ref) - hpy * (g1 - g1_ref)[0]
        scale = np.linalg.norm(w) + np.linalg.norm(e)
        if scale > 1e-12:
            k1 = max(k1, np.linalg.norm(n1) / scale)
            k2 = max(k2, np.linalg.norm(n2) / scale)
        dy = model.A1 @ y + g1
        dw = A_K @ w + model.B2 @ (model.K11 @ (e_v + E @ e_y)
                                   + model.K12 @ e_y) + n2
        denom = np.linalg.norm(np.concatenate([y, w, e]))
        if denom > 1e-12:
            L1 = max(L1, np.linalg.norm(np.concatenate([dy, dw])) / denom)

    ys = np.linspace(-radius, radius, 201)
    ys = ys[ys != 0.0]
    k7 = float(np.max(np.linalg.norm(h(ys), axis=0) / ys ** 2))
    k8 = float(np.max(np.linalg.norm(h.derivative(ys), axis=0) / np.abs(ys)))
    return RegionConstants(radius=radius, k1=float(k1), k2=float(k2),
                           k5=red.k5, k6=red.k6, k7=k7, k8=k8,
                           L1=float(L1), p=red.p)


def tau_estimates(model: PlantModel, cert: Certificate, c: RegionConstants,
                  sigma: float, r_s: float | None = None):
    """Conservative analytic inter-event floors from sampled constants.

    Returns ``(tau1, tau3)``; ``tau3`` is None unless a target ultimate-bound
    radius ``r_s`` is given.
    """
    nAK = float(np.linalg.norm(model.A_K, 2))
    nBK = float(np.linalg.norm(model.B2 @ model.K11, 2))
    d = c.radius
    p = c.p if np.isfinite(c.p) else model.p
    a1 = max(nAK + c.k2 + c.k8 * c.k1 * d, c.k8 * c.k5)
    a2 = nBK + c.k2 + d * c.k1 * c.k8
    a3 = max(nAK + c.k2 + (p + 1) * d ** p * c.k1, d ** (p - 1) * c.k5)
    a4 = nBK + c.k2 + (p + 1) * d ** p * c.k1
    tau1 = tau1_estimate(a1, a2, a3, a4, sigma)
    tau3 = None
    if r_s is not None:
        r1 = dead_zone_radius(r_s, cert.P)
        sigma_l = sigma * (r1 + r1 ** (p + 1))
        delta = c.L1 * d
        tau3 = tau3_estimate(sigma_l, c.L1, delta)
    return tau1, tau3


@dataclass(frozen=True)
class DecrementReport:
    n_checked: int
    n_inside: int
    max_violation: float
    passed: bool


def decrement_check(result: SimResult, margin, region_radius: float,
                    tol: float = 1e-6) -> DecrementReport:
    """Check ``(V(t+dt) - V(t))/dt <= margin(y, w) + tol`` along a run.

    ``margin`` maps the left-sample ``(y, w)`` to the required decrement
    bound; samples outside the ball ``||(y; w)|| <= region_radius`` are
    skipped.  The trace must be recorded at stride 1.
    """
    if len(result.t) < 2:
        raise FitError("decrement check needs at least two samples")
    dt = np.diff(result.t)
    dV = np.diff(result.V)
    rate = dV / dt
    worst = -np.inf
    n_inside = 0
    for i in range(len(rate)):
        y = result.y[i]
        w = result.w[i]
        if np.hypot(np.linalg.norm(y), np.linalg.norm(w)) > region_radius:
            continue
        n_inside += 1
        viol = rate[i] - float(margin(y, w))
        if viol > worst:
            worst = viol
    return DecrementReport(n_checked=len(rate), n_inside=n_inside,
                           max_violation=float(worst),
                           passed=bool(worst <= tol))
