"""Sample-and-hold closed-loop simulation with event logging.

The integrator is classical fixed-step RK4; trigger predicates are checked
once per grid step and the event time is the grid time of the first
satisfied check (a digital implementation; the step size adds a bias of at
most one step to the measured inter-event floor).  Runs terminate at the
horizon or on one of three guards: consecutive events closer than
``zeno_guard_min``, a non-finite state, or leaving the configured validity
ball in ``(y; w)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .certificates import Certificate, v_value
from .errors import ConfigurationError, FitError
from .manifold import PolyManifold
from .models import PlantModel, StatePoint, held_control
from .trigger import ClassKPair, DeadZone, TriggerRule

__all__ = [
    "SimConfig", "EventLog", "SimResult", "BatchResult",
    "simulate_event_triggered", "simulate_time_triggered", "batch_run",
    "decay_fit", "circle_initial_conditions",
]

STATUS_NAMES = {
    kernels.STATUS_COMPLETED: "completed",
    kernels.STATUS_ZENO: "zeno-guard",
    kernels.STATUS_OVERFLOW: "overflow",
    kernels.STATUS_LEFT_REGION: "left-validity-region",
}


@dataclass(frozen=True)
class SimConfig:
    """Run settings; ``x0`` is the raw initial state ``(y; z)``."""

    t_final: float
    x0: Sequence[float] | StatePoint
    dt: float = 1e-4
    zeno_guard_min: float | None = None     # default: 2 * dt
    record_stride: int = 1
    validity_radius: float = np.inf

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigurationError("dt must be positive")
        if self.t_final < self.dt:
            raise ConfigurationError("t_final must be at least dt")
        guard = self.zeno_guard_min if self.zeno_guard_min is not None else 2 * self.dt
        if guard < self.dt:
            raise ConfigurationError("zeno_guard_min must be at least dt")
        if self.record_stride < 1:
            raise ConfigurationError("record_stride must be >= 1")

    @property
    def guard(self) -> float:
        return self.zeno_guard_min if self.zeno_guard_min is not None else 2 * self.dt

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass(frozen=True)
class EventLog:
    """Ordered event times with the derived inter-event statistics."""

    times: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))

    @property
    def count(self) -> int:
        return len(self.times)

    @property
    def intervals(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def miet(self) -> float:
        d = self.intervals
        return float(d.min()) if len(d) else np.nan

    @property
    def mean_iet(self) -> float:
        d = self.intervals
        return float(d.mean()) if len(d) else np.nan


@dataclass(frozen=True)
class SimResult:
    """Recorded trajectory in raw and derived coordinate views."""

    model_name: str
    t: np.ndarray
    y: np.ndarray            # (N, k)
    z: np.ndarray            # (N, nz)
    v: np.ndarray            # (N, nz)
    w: np.ndarray            # (N, nz)
    u: np.ndarray            # (N, m)
    V: np.ndarray            # (N,) composite Lyapunov trace
    event_flag: np.ndarray   # (N,) 1 at samples where an event fired
    events: EventLog
    status: str
    dt: float
    sigma: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def completed(self) -> bool:
        return self.status == "completed"


@dataclass(frozen=True)
class BatchResult:
    runs: tuple
    miet: float
    mean_iet: float
    mean_iet_early: float
    mean_iet_late: float
    split_time: float

    @property
    def statuses(self):
        return [r.status for r in self.runs]


def _state_from(x0, model: PlantModel) -> StatePoint:
    if isinstance(x0, StatePoint):
        return x0
    arr = np.asarray(x0, dtype=float).ravel()
    if arr.shape != (model.n,):
        raise ConfigurationError(
            f"initial state has length {arr.shape[0]}, expected {model.n}")
    return StatePoint(y=arr[:model.k], z=arr[model.k:])


def _coupling(model: PlantModel) -> np.ndarray:
    from .manifold import solve_coupling
    return solve_coupling(model.A_K, model.A1, model.B2 @ model.K12)


def _encode_model(model: PlantModel):
    """Kernel tables for the model, or None when it needs the object path."""
    if model.Kn is not None:
        return None
    if model.kernel_id == kernels.KIND_MIP:
        return (kernels.KIND_MIP, model.kernel_params.astype(float),
                np.zeros(0), np.zeros(0, dtype=np.int64),
                np.zeros((0, model.n + model.m), dtype=np.int64))
    if model.poly is None:
        return None
    g1, g2 = model.poly
    coefs = np.concatenate([g1.coefs, g2.coefs])
    comps = np.concatenate([g1.comps, g2.comps + model.k]).astype(np.int64)
    if len(coefs):
        powers = np.vstack([g1.powers, g2.powers]).astype(np.int64)
    else:
        powers = np.zeros((0, model.n + model.m), dtype=np.int64)
    return (kernels.KIND_POLY, np.zeros(0), coefs, comps, powers)


def _manifold_coeffs(h: PolyManifold | None, nz: int) -> np.ndarray:
    if h is None:
        return np.zeros((nz, 0))
    return np.asarray(h.coeffs, dtype=float)


def _run_encoded(model, cert, rule_enc, manifold, cfg, periodic_steps):
    enc = _encode_model(model)
    kind, params, coefs, comps, powers = enc
    rule_code, sigma, yexp, r1 = rule_enc
    P = cert.P if cert is not None else np.eye(model.nz)
    x0 = _state_from(cfg.x0, model).x
    status, ev, rec = kernels.sim_loop(
        kind, params, coefs, comps, powers, model.k, model.nz, model.m,
        np.ascontiguousarray(model.A1, dtype=float),
        np.ascontiguousarray(model.A2, dtype=float),
        np.ascontiguousarray(model.B2, dtype=float),
        np.ascontiguousarray(model.K11, dtype=float),
        np.ascontiguousarray(model.K12, dtype=float),
        np.ascontiguousarray(_coupling(model), dtype=float),
        np.ascontiguousarray(_manifold_coeffs(manifold, model.nz)),
        np.ascontiguousarray(P, dtype=float),
        rule_code, sigma, yexp, r1, periodic_steps,
        x0, cfg.dt, cfg.n_steps, cfg.guard, cfg.validity_radius,
        cfg.record_stride)
    return status, ev, rec


def _run_object(model, cert, rule, manifold, cfg, periodic_steps):
    """Interpreted loop for rules/models the kernels cannot encode."""
    E = _coupling(model)
    h = manifold
    P = cert.P if cert is not None else np.eye(model.nz)
    k, nz = model.k, model.nz
    x = _state_from(cfg.x0, model).x.copy()
    dt, n_steps = cfg.dt, cfg.n_steps

    def views(xv):
        y = xv[:k]
        z = xv[k:]
        v = z - E @ y
        w = v - h(y) if h is not None else v.copy()
        return y, z, v, w

    def deriv(xv, u):
        y, z = xv[:k], xv[k:]
        g1, g2 = model.g_nl(y, z, u)
        return np.concatenate([model.A1 @ y + g1,
                               model.A2 @ z + model.B2 @ u + g2])

    y, z, v, w = views(x)
    dead = isinstance(rule, DeadZone)
    held = x.copy()
    events = []
    event_radii = []
    waiting = False
    if (dead and periodic_steps <= 0
            and np.hypot(np.linalg.norm(y), np.linalg.norm(w)) < rule.r1):
        u = np.zeros(model.m)
        waiting = True
    else:
        events.append(0.0)
        event_radii.append(float(np.hypot(np.linalg.norm(y), np.linalg.norm(w))))
        u = held_control(model, StatePoint(y=x[:k], z=x[k:]))
    last_event_step = 0 if events else -1

    rec = {key: [] for key in ("t", "x", "u", "v", "w", "V", "event_flag")}

    def record(step, flag):
        rec["t"].append(step * dt)
        rec["x"].append(x.copy())
        rec["u"].append(np.asarray(u, dtype=float).copy())
        rec["v"].append(v.copy())
        rec["w"].append(w.copy())
        rec["V"].append(v_value(x[:k], w, P))
        rec["event_flag"].append(flag)

    record(0, 1 if events else 0)
    status = kernels.STATUS_COMPLETED
    for step in range(1, n_steps + 1):
        k1 = deriv(x, u)
        k2 = deriv(x + 0.5 * dt * k1, u)
        k3 = deriv(x + 0.5 * dt * k2, u)
        k4 = deriv(x + dt * k3, u)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            status = kernels.STATUS_OVERFLOW
            break
        y, z, v, w = views(x)
        nyw = np.hypot(np.linalg.norm(y), np.linalg.norm(w))
        if np.isfinite(cfg.validity_radius) and nyw > cfg.validity_radius:
            status = kernels.STATUS_LEFT_REGION
            break
        if periodic_steps > 0:
            fire = step % periodic_steps == 0 and step < n_steps
        elif waiting:
            fire = nyw >= rule.r1
        else:
            e_y = held[:k] - y
            vh = held[k:] - E @ held[:k]
            e_v = vh - v
            fire = rule.should_fire(e_y, e_v, y, v, w)
        flag = 0
        if fire:
            events.append(step * dt)
            event_radii.append(float(nyw))
            flag = 1
            if (periodic_steps <= 0 and last_event_step >= 0
                    and (step - last_event_step) * dt < cfg.guard):
                status = kernels.STATUS_ZENO
            last_event_step = step
            waiting = False
            held = x.copy()
            u = held_control(model, StatePoint(y=x[:k], z=x[k:]))
        if (step % cfg.record_stride == 0 or step == n_steps
                or status != kernels.STATUS_COMPLETED):
            record(step, flag)
        if status != kernels.STATUS_COMPLETED:
            break
    out = {
        "t": np.asarray(rec["t"]), "x": np.asarray(rec["x"]),
        "u": np.asarray(rec["u"]), "v": np.asarray(rec["v"]),
        "w": np.asarray(rec["w"]), "V": np.asarray(rec["V"]),
        "event_flag": np.asarray(rec["event_flag"], dtype=np.int64),
        "event_radii": np.asarray(event_radii),
    }
    return status, np.asarray(events), out


def _build_result(model, cfg, status, ev, rec, sigma, meta) -> SimResult:
    k = model.k
    meta = dict(meta or {})
    if "event_radii" in rec:
        meta["event_radii"] = rec["event_radii"]
    return SimResult(
        model_name=model.name, t=rec["t"],
        y=rec["x"][:, :k], z=rec["x"][:, k:], v=rec["v"], w=rec["w"],
        u=rec["u"], V=rec["V"], event_flag=rec["event_flag"],
        events=EventLog(times=ev), status=STATUS_NAMES[status],
        dt=cfg.dt, sigma=sigma, meta=meta)


def simulate_event_triggered(model: PlantModel, cert: Certificate | None,
                             rule: TriggerRule, cfg: SimConfig) -> SimResult:
    """Run the event-triggered closed loop on the configured grid."""
    eff_sigma = rule.inner.sigma if isinstance(rule, DeadZone) else rule.sigma
    if cert is not None and eff_sigma > cert.sigma_max * (1 + 1e-12):
        raise ConfigurationError(
            f"trigger slope {eff_sigma} exceeds the certified bound "
            f"{cert.sigma_max}")
    if not _state_from(cfg.x0, model).is_finite():
        raise ConfigurationError("initial state must be finite")
    manifold = rule.manifold
    rule_enc = rule.encode()
    use_kernel = rule_enc is not None and _encode_model(model) is not None \
        and not isinstance(rule, ClassKPair)
    if use_kernel:
        status, ev, rec = _run_encoded(model, cert, rule_enc, manifold, cfg, 0)
    else:
        status, ev, rec = _run_object(model, cert, rule, manifold, cfg, 0)
    return _build_result(model, cfg, status, ev, rec, eff_sigma,
                         {"rule": type(rule).__name__})


def simulate_time_triggered(model: PlantModel, period: float, cfg: SimConfig,
                            cert: Certificate | None = None,
                            manifold: PolyManifold | None = None) -> SimResult:
    """Periodic sample-and-hold baseline with the same integrator."""
    if period < cfg.dt:
        raise ConfigurationError("period must be at least dt")
    steps = int(np.ceil(period / cfg.dt))
    if _encode_model(model) is not None:
        status, ev, rec = _run_encoded(model, cert, (0, 1.0, 1.0, -1.0),
                                       manifold, cfg, steps)
    else:
        status, ev, rec = _run_object(model, cert, None, manifold, cfg, steps)
    return _build_result(model, cfg, status, ev, rec, None,
                         {"period": period})


def circle_initial_conditions(radius: float, count: int, n: int,
                              seed: int | None = None) -> np.ndarray:
    """Evenly spaced points on a circle in the first two state coordinates.

    The remaining coordinates are zero.  ``seed`` is accepted for interface
    symmetry with random protocols; the circle itself is deterministic.
    """
    ics = np.zeros((count, n))
    ang = 2 * np.pi * np.arange(count) / count
    ics[:, 0] = radius * np.cos(ang)
    ics[:, 1] = radius * np.sin(ang)
    return ics


def batch_run(model: PlantModel, cert: Certificate | None, rule: TriggerRule,
              initial_conditions, cfg: SimConfig,
              split_time: float | None = None) -> BatchResult:
    """Simulate a set of initial conditions and pool the event statistics.

    ``miet`` is the smallest interval over all runs; the mean statistics pool
    every interval, with the early/late split assigning an interval to the
    phase containing its start.  Guard trips are reported per run and do not
    abort the batch.
    """
    ics = np.atleast_2d(np.asarray(initial_conditions, dtype=float))
    if len(ics) == 0:
        raise ConfigurationError("batch needs at least one initial condition")
    runs = []
    for x0 in ics:
        run_cfg = SimConfig(t_final=cfg.t_final, x0=x0, dt=cfg.dt,
                            zeno_guard_min=cfg.zeno_guard_min,
                            record_stride=cfg.record_stride,
                            validity_radius=cfg.validity_radius)
        runs.append(simulate_event_triggered(model, cert, rule, run_cfg))
    split = split_time if split_time is not None else cfg.t_final / 2
    all_iet, early, late = [], [], []
    for r in runs:
        times = r.events.times
        d = np.diff(times)
        all_iet.extend(d.tolist())
        early.extend(d[times[:-1] < split].tolist())
        late.extend(d[times[:-1] >= split].tolist())
    all_iet = np.asarray(all_iet)
    return BatchResult(
        runs=tuple(runs),
        miet=float(all_iet.min()) if len(all_iet) else np.nan,
        mean_iet=float(all_iet.mean()) if len(all_iet) else np.nan,
        mean_iet_early=float(np.mean(early)) if early else np.nan,
        mean_iet_late=float(np.mean(late)) if late else np.nan,
        split_time=split)


def decay_fit(result: SimResult, t_start: float = 0.0,
              t_end: float | None = None, floor: float = 1e-14):
    """Least-squares fit ``||w(t)|| ~ C1 exp(-mu t)`` on a time window.

    Returns ``(C1, mu, r_squared)``.  Raises :class:`FitError` when the
    window contains fewer than two usable samples or ``||w||`` hits the
    numerical floor inside it.
    """
    t_end = t_end if t_end is not None else float(result.t[-1])
    mask = (result.t >= t_start) & (result.t <= t_end)
    if mask.sum() < 8:
        raise FitError("decay-fit window contains too few samples")
    wn = np.linalg.norm(result.w[mask], axis=1)
    if np.any(wn <= floor):
        raise FitError("||w|| is below the numerical floor inside the window")
    tt = result.t[mask]
    logw = np.log(wn)
    A = np.vstack([np.ones_like(tt), -tt]).T
    coef, *_ = np.linalg.lstsq(A, logw, rcond=None)
    fit = A @ coef
    ss_res = float(np.sum((logw - fit) ** 2))
    ss_tot = float(np.sum((logw - logw.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(np.exp(coef[0])), float(coef[1]), r2
