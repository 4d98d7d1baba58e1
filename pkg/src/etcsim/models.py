"""Plant models in decomposed coordinates and the associated transforms.

A plant is stored directly in split form: a center state ``y`` whose linear
part ``A1`` has purely imaginary (here: zero) eigenvalues, and a stable state
``z`` with controllable linear part ``(A2, B2)``.  The feedback
``u = K11 z + K12 y + Kn(y)`` closes the loop, and the coordinates

    v = z - E y          (decoupled stable coordinate)
    w = v - h(y)         (distance to an invariant-manifold approximation)

are derived views used by the trigger rules and the diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, NumericOverflowError

__all__ = [
    "PolyField", "PlantModel", "StatePoint",
    "eval_dynamics", "held_control", "to_v", "to_w", "from_w",
    "validate_model",
]


@dataclass(frozen=True)
class PolyField:
    """Polynomial map ``(y, z, u) -> R^n_out`` stored as a monomial table.

    ``powers[t]`` holds the exponents of term ``t`` on the concatenated
    variable vector ``(y, z, u)``; ``comps[t]`` is the output component the
    term belongs to.  Evaluation is complex-safe and vectorized over a
    trailing sample axis.
    """

    n_out: int
    coefs: np.ndarray    # (T,) float
    comps: np.ndarray    # (T,) int
    powers: np.ndarray   # (T, k + nz + m) int

    @classmethod
    def from_terms(cls, n_out, terms, k, nz, m):
        """Build from an iterable of ``(component, coef, y_pow, z_pow, u_pow)``.

        ``y_pow``, ``z_pow`` and ``u_pow`` are exponent sequences of lengths
        ``k``, ``nz`` and ``m``.
        """
        rows = []
        coefs = []
        comps = []
        for comp, coef, ypow, zpow, upow in terms:
            ypow, zpow, upow = (np.atleast_1d(a).astype(int)
                                for a in (ypow, zpow, upow))
            if len(ypow) != k or len(zpow) != nz or len(upow) != m:
                raise ConfigurationError(
                    "polynomial term exponents do not match (k, nz, m)="
                    f"({k}, {nz}, {m})")
            rows.append(np.concatenate([ypow, zpow, upow]))
            coefs.append(float(coef))
            comps.append(int(comp))
        if not rows:
            rows = np.zeros((0, k + nz + m), dtype=np.int64)
        return cls(n_out=n_out,
                   coefs=np.asarray(coefs, dtype=float),
                   comps=np.asarray(comps, dtype=np.int64),
                   powers=np.asarray(rows, dtype=np.int64))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate at ``x = (y; z; u)`` of shape ``(n_in,)`` or ``(n_in, N)``."""
        x = np.asarray(x)
        trailing = x.shape[1:]
        out = np.zeros((self.n_out,) + trailing, dtype=x.dtype)
        for t in range(len(self.coefs)):
            term = np.full(trailing, self.coefs[t], dtype=x.dtype)
            for i, p in enumerate(self.powers[t]):
                if p:
                    term = term * x[i] ** int(p)
            out[self.comps[t]] += term
        return out

    def max_total_degree(self) -> int:
        if len(self.coefs) == 0:
            return 0
        return int(self.powers.sum(axis=1).max())


@dataclass(frozen=True, eq=False)
class PlantModel:
    """Immutable plant description in decomposed ``(y, z)`` coordinates.

    ``g_nl(y, z, u) -> (dy_nl, dz_nl)`` is the nonlinear remainder of the
    vector field; it must vanish with zero Jacobian at the origin, accept
    complex input and broadcast over a trailing sample axis.  ``poly`` holds
    the same map as an exact monomial table when one exists (used by the
    compiled kernels and by the series solver).
    """

    name: str
    k: int
    nz: int
    m: int
    A1: np.ndarray
    A2: np.ndarray
    B2: np.ndarray
    K11: np.ndarray
    K12: np.ndarray
    p: float
    g_nl: Callable
    Kn: Callable | None = None
    poly: tuple[PolyField, PolyField] | None = None
    V1: Callable | None = None
    series_radius: float = 0.25
    kernel_id: int = 0
    kernel_params: np.ndarray = field(default_factory=lambda: np.zeros(0))
    domain_check: Callable | None = None

    @property
    def n(self) -> int:
        return self.k + self.nz

    @property
    def A_K(self) -> np.ndarray:
        return self.A2 + self.B2 @ self.K11

    @property
    def K1(self) -> np.ndarray:
        """Error gain ``[K12 + K11 E, K11]`` for E solving the coupling equation."""
        from .manifold import solve_coupling
        E = solve_coupling(self.A_K, self.A1, self.B2 @ self.K12)
        return np.hstack([self.K12 + self.K11 @ E, self.K11])

    def kn_value(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y)
        if self.Kn is None:
            return np.zeros((self.m,) + y.shape[1:])
        return np.asarray(self.Kn(y))


@dataclass(frozen=True)
class StatePoint:
    """Plain state value in raw decomposed coordinates."""

    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.atleast_1d(np.asarray(self.y, dtype=float)))
        object.__setattr__(self, "z", np.atleast_1d(np.asarray(self.z, dtype=float)))

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.y, self.z])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.z)))


def _check_dims(model: PlantModel, s: StatePoint, u=None):
    if s.y.shape != (model.k,) or s.z.shape != (model.nz,):
        raise ConfigurationError(
            f"state dimensions {s.y.shape}/{s.z.shape} do not match model "
            f"(k={model.k}, nz={model.nz})")
    if u is not None and np.shape(np.atleast_1d(u)) != (model.m,):
        raise ConfigurationError(
            f"input dimension {np.shape(u)} does not match m={model.m}")


def eval_dynamics(model: PlantModel, s: StatePoint, u) -> tuple[np.ndarray, np.ndarray]:
    """Open-loop vector field ``(dy, dz)`` at state ``s`` with input ``u``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    _check_dims(model, s, u)
    g1, g2 = model.g_nl(s.y, s.z, u)
    dy = model.A1 @ s.y + g1
    dz = model.A2 @ s.z + model.B2 @ u + g2
    for label, vec in (("dy", dy), ("dz", dz)):
        bad = ~np.isfinite(vec)
        if bad.any():
            raise NumericOverflowError(
                f"non-finite {label} component(s) {np.flatnonzero(bad).tolist()} "
                f"at y={s.y.tolist()}, z={s.z.tolist()}")
    return dy, dz


def held_control(model: PlantModel, s_held: StatePoint) -> np.ndarray:
    """Control value computed from the most recently sampled state."""
    _check_dims(model, s_held)
    u = model.K11 @ s_held.z + model.K12 @ s_held.y + model.kn_value(s_held.y)
    return np.atleast_1d(u)


def to_v(model: PlantModel, E: np.ndarray, s: StatePoint) -> np.ndarray:
    _check_dims(model, s)
    return s.z - E @ s.y


def to_w(model: PlantModel, E: np.ndarray, h, s: StatePoint):
    """Map a raw state to ``(y, w)`` with ``w = (z - E y) - h(y)``."""
    v = to_v(model, E, s)
    hy = h(s.y) if h is not None else np.zeros(model.nz)
    if np.shape(hy) != (model.nz,):
        raise ConfigurationError(
            f"manifold dimension {np.shape(hy)} does not match nz={model.nz}")
    return s.y.copy(), v - hy


def from_w(model: PlantModel, E: np.ndarray, h, y, w) -> StatePoint:
    """Inverse of :func:`to_w`: reconstruct the raw state from ``(y, w)``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    hy = h(y) if h is not None else np.zeros(model.nz)
    return StatePoint(y=y, z=w + hy + E @ y)


def validate_model(model: PlantModel, fd_step: float = 1e-6,
                   jac_tol: float = 1e-6, hurwitz_margin: float = 1e-9):
    """Check the structural invariants of a plant model.

    Verifies that the nonlinear remainder vanishes at the origin with zero
    Jacobian (central finite differences) and that ``A2 + B2 K11`` is
    Hurwitz.  Raises :class:`ConfigurationError` on violation.
    """
    k, nz, m = model.k, model.nz, model.m
    y0, z0, u0 = np.zeros(k), np.zeros(nz), np.zeros(m)
    g1, g2 = model.g_nl(y0, z0, u0)
    g0 = np.concatenate([np.atleast_1d(g1), np.atleast_1d(g2)])
    if np.max(np.abs(g0)) > jac_tol:
        raise ConfigurationError(
            f"nonlinear remainder does not vanish at the origin: |g(0)| = "
            f"{np.max(np.abs(g0)):.3e}")

    def g_full(x):
        g1, g2 = model.g_nl(x[:k], x[k:k + nz], x[k + nz:])
        return np.concatenate([np.atleast_1d(g1), np.atleast_1d(g2)])

    ntot = k + nz + m
    for i in range(ntot):
        e = np.zeros(ntot)
        e[i] = fd_step
        col = (g_full(e) - g_full(-e)) / (2 * fd_step)
        if np.max(np.abs(col)) > jac_tol:
            raise ConfigurationError(
                f"nonlinear remainder has non-zero Jacobian column {i} at the "
                f"origin: {np.max(np.abs(col)):.3e}")

    eig = np.linalg.eigvals(model.A_K)
    if np.max(eig.real) >= -hurwitz_margin:
        raise ConfigurationError(
            f"A2 + B2 K11 is not Hurwitz: eigenvalues {np.sort_complex(eig)}")
    return True
