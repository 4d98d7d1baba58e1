"""Trigger rules: predicates deciding when the control loop must close.

Every rule compares a measurement-error magnitude against a state-dependent
threshold; the loop closes (an event fires) when the error reaches the
threshold.  Firing uses ``>=`` so equality triggers, except that a zero error
against a zero threshold is suppressed — re-sampling at the equilibrium is a
no-op and would otherwise fire on every step.

Coordinates: ``y`` center state, ``v = z - E y``, ``w = v - h(y)`` for the
rule's manifold approximation, ``e_y``/``e_v`` the held-minus-current errors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError
from .manifold import PolyManifold

__all__ = [
    "TriggerRule", "RelativeFull", "ManifoldWeighted", "RawCoordinates",
    "RelativeYV", "DeadZone", "ClassKPair", "dead_zone_radius",
]

# codes shared with the compiled kernels
CODE_RELATIVE_FULL = 1
CODE_MANIFOLD_WEIGHTED = 2
CODE_RAW_COORDINATES = 3
CODE_RELATIVE_YV_V = 4
CODE_RELATIVE_YV_W = 5


def _norm(x) -> float:
    return float(np.linalg.norm(np.atleast_1d(x)))


@dataclass(frozen=True)
class TriggerRule:
    """Base class; concrete rules implement :meth:`threshold`."""

    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ConfigurationError("trigger slope sigma must be positive")

    @property
    def manifold(self) -> PolyManifold | None:
        return None

    def threshold(self, y, v, w) -> float:
        raise NotImplementedError

    def error_norm(self, e_y, e_v) -> float:
        """Magnitude of the error the rule compares against its threshold."""
        return float(np.sqrt(_norm(e_y) ** 2 + _norm(e_v) ** 2))

    def should_fire(self, e_y, e_v, y, v, w) -> bool:
        err = self.error_norm(e_y, e_v)
        thr = self.threshold(y, v, w)
        if err == 0.0 and thr == 0.0:
            return False
        return err >= thr

    def encode(self):
        """(code, sigma, y_exponent, r1) for the compiled kernels; None when
        the rule needs Python callables."""
        return None


@dataclass(frozen=True)
class RelativeFull(TriggerRule):
    """Fire when ``||(e_y; e_v)|| >= sigma ||(y; w)||``."""

    h: PolyManifold | None = None

    @property
    def manifold(self):
        return self.h

    def threshold(self, y, v, w) -> float:
        return self.sigma * float(np.sqrt(_norm(y) ** 2 + _norm(w) ** 2))

    def encode(self):
        return (CODE_RELATIVE_FULL, self.sigma, 1.0, -1.0)


@dataclass(frozen=True)
class ManifoldWeighted(TriggerRule):
    """Fire when ``||e_v|| >= sigma (||w|| + ||y||**(p + p_e))``.

    ``h`` may be an exact manifold or a series approximation; ``p_e`` is an
    experimental exponent knob (the supported rule is ``p_e = 1``; values
    tending to infinity reduce the threshold to ``sigma ||w||``, which is
    known to produce event accumulation).
    """

    p: float = 3.0
    h: PolyManifold | None = None
    p_e: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.h is None:
            raise ConfigurationError("manifold-weighted rule needs a manifold")

    @property
    def manifold(self):
        return self.h

    @property
    def y_exponent(self) -> float:
        return self.p + self.p_e

    def error_norm(self, e_y, e_v) -> float:
        return _norm(e_v)

    def threshold(self, y, v, w) -> float:
        return self.sigma * (_norm(w) + _norm(y) ** self.y_exponent)

    def encode(self):
        return (CODE_MANIFOLD_WEIGHTED, self.sigma, self.y_exponent, -1.0)


@dataclass(frozen=True)
class RawCoordinates(TriggerRule):
    """Fire when ``||e_v|| >= sigma (||v|| + ||y||**(p + 1))`` (no manifold)."""

    p: float = 3.0

    @property
    def y_exponent(self) -> float:
        return self.p + 1.0

    def error_norm(self, e_y, e_v) -> float:
        return _norm(e_v)

    def threshold(self, y, v, w) -> float:
        return self.sigma * (_norm(v) + _norm(y) ** self.y_exponent)

    def encode(self):
        return (CODE_RAW_COORDINATES, self.sigma, self.y_exponent, -1.0)


@dataclass(frozen=True)
class RelativeYV(TriggerRule):
    """Fire when ``||e|| >= sigma (||y|| + ||v||)`` or, with a manifold,
    ``||e|| >= sigma (||y|| + ||w||)``."""

    h: PolyManifold | None = None

    @property
    def manifold(self):
        return self.h

    def threshold(self, y, v, w) -> float:
        tail = _norm(w) if self.h is not None else _norm(v)
        return self.sigma * (_norm(y) + tail)

    def encode(self):
        code = CODE_RELATIVE_YV_W if self.h is not None else CODE_RELATIVE_YV_V
        return (code, self.sigma, 1.0, -1.0)


@dataclass(frozen=True)
class DeadZone(TriggerRule):
    """Suppress the inner rule inside the ball ``||(y; w)|| < r1``.

    Inside the ball the threshold is infinite (controls stay frozen, or zero
    before the first event when the run starts inside).  The inner rule
    decides firing outside.
    """

    sigma: float = 1.0      # unused; the inner rule carries the slope
    inner: TriggerRule = None
    r1: float = 0.0

    def __post_init__(self):
        if self.inner is None or self.r1 <= 0:
            raise ConfigurationError("dead-zone rule needs an inner rule and r1 > 0")

    @property
    def manifold(self):
        return self.inner.manifold

    def in_dead_zone(self, y, w) -> bool:
        return float(np.sqrt(_norm(y) ** 2 + _norm(w) ** 2)) < self.r1

    def error_norm(self, e_y, e_v) -> float:
        return self.inner.error_norm(e_y, e_v)

    def threshold(self, y, v, w) -> float:
        if self.in_dead_zone(y, w):
            return np.inf
        return self.inner.threshold(y, v, w)

    def should_fire(self, e_y, e_v, y, v, w) -> bool:
        if self.in_dead_zone(y, w):
            return False
        return self.inner.should_fire(e_y, e_v, y, v, w)

    def encode(self):
        inner = self.inner.encode()
        if inner is None:
            return None
        code, sigma, yexp, _ = inner
        return (code, sigma, yexp, self.r1)


@dataclass(frozen=True)
class ClassKPair(TriggerRule):
    """Fire when ``beta_G(||e||) >= sigma * alpha_D(||(y; w)||)``.

    ``alpha_D`` and ``beta_G`` are caller-supplied monotone scalar functions
    (class-K comparison pair).  Only available on the interpreted simulation
    path.
    """

    alpha_D: Callable[[float], float] = None
    beta_G: Callable[[float], float] = None
    h: PolyManifold | None = None

    def __post_init__(self):
        super().__post_init__()
        if self.alpha_D is None or self.beta_G is None:
            raise ConfigurationError("class-K rule needs alpha_D and beta_G")

    @property
    def manifold(self):
        return self.h

    def threshold(self, y, v, w) -> float:
        return self.sigma * float(self.alpha_D(
            float(np.sqrt(_norm(y) ** 2 + _norm(w) ** 2))))

    def should_fire(self, e_y, e_v, y, v, w) -> bool:
        err = float(self.beta_G(self.error_norm(e_y, e_v)))
        thr = self.threshold(y, v, w)
        if err == 0.0 and thr == 0.0:
            return False
        return err >= thr


def dead_zone_radius(r_s: float, P: np.ndarray) -> float:
    """Radius ``r1`` of the suppression ball for a target ultimate bound.

    Uses the norm equivalence of ``V = ||y|| + sqrt(w' P w)``:
    ``alpha_1(s) = min(1, sqrt(lam_min P)) s`` and
    ``alpha_2(s) = sqrt(2) max(1, sqrt(lam_max P)) s``, giving
    ``r1 = alpha_2^{-1}(alpha_1(r_s))``.
    """
    if r_s <= 0:
        raise ConfigurationError("target radius r_s must be positive")
    eig = np.linalg.eigvalsh(np.atleast_2d(P))
    a1 = min(1.0, np.sqrt(eig[0]))
    a2 = np.sqrt(2.0) * max(1.0, np.sqrt(eig[-1]))
    return float(a1 * r_s / a2)
