import numpy as np
import pytest

from etcsim.errors import ConfigurationError, FitError
from etcsim.manifold import PolyManifold, solve_series
from etcsim.models import PlantModel, PolyField
from etcsim.sim import (EventLog, SimConfig, SimResult, batch_run,
                        circle_initial_conditions, decay_fit,
                        simulate_event_triggered, simulate_time_triggered)
from etcsim.trigger import ClassKPair, ManifoldWeighted, RawCoordinates


@pytest.fixture(scope="module")
def ex1_rule(ex1_manifold):
    return ManifoldWeighted(sigma=1 / 16, p=3.0, h=ex1_manifold)


def short_cfg(x0, t_final=2.0, dt=1e-3, **kw):
    return SimConfig(t_final=t_final, x0=x0, dt=dt, **kw)


def test_equilibrium_run(ex1, ex1_cert, ex1_rule):
    r = simulate_event_triggered(ex1, ex1_cert, ex1_rule,
                                 short_cfg([0.0, 0.0]))
    assert r.completed
    assert r.events.count == 1 and r.events.times[0] == 0.0
    assert np.max(np.abs(r.y)) == 0.0 and np.max(np.abs(r.z)) == 0.0


def test_determinism(ex1, ex1_cert, ex1_rule):
    cfg = short_cfg([0.1, 0.0])
    a = simulate_event_triggered(ex1, ex1_cert, ex1_rule, cfg)
    b = simulate_event_triggered(ex1, ex1_cert, ex1_rule, cfg)
    assert np.array_equal(a.events.times, b.events.times)
    assert np.array_equal(a.y, b.y) and np.array_equal(a.z, b.z)
    assert np.array_equal(a.V, b.V)


def test_hold_correctness(ex1, ex1_cert, ex1_rule):
    r = simulate_event_triggered(ex1, ex1_cert, ex1_rule,
                                 short_cfg([0.1, 0.0], t_final=5.0))
    changes = np.flatnonzero(np.any(np.diff(r.u, axis=0) != 0.0, axis=1)) + 1
    assert np.all(r.event_flag[changes] == 1)


def test_trigger_safety_between_events(ex1, ex1_cert, ex1_rule):
    # re-evaluate the predicate along the recorded stride-1 trajectory: it
    # may hold only at logged event samples
    r = simulate_event_triggered(ex1, ex1_cert, ex1_rule,
                                 short_cfg([0.1, 0.0], t_final=3.0))
    held = None
    for i in range(len(r.t)):
        if r.event_flag[i]:
            held = (r.y[i], r.v[i])
            continue
        if held is None:
            continue
        fires = ex1_rule.should_fire(held[0] - r.y[i], held[1] - r.v[i],
                                     r.y[i], r.v[i], r.w[i])
        assert not fires, f"predicate holds at non-event sample {r.t[i]}"


def test_vector_field_equivalence():
    # raw (y, v) simulation transformed pointwise must match the flow of the
    # transformed field (y, w): dy = -y(w + y^2), dw = -w - 2 w (w + y^2)
    def raw(s):
        y, v = s
        return np.array([-y * v, -v + y * y - 2 * v * v])

    def transformed(s):
        y, w = s
        return np.array([-y * (w + y * y), -w - 2 * w * (w + y * y)])

    def rk4(field, s0, dt, n):
        out = [np.asarray(s0, dtype=float)]
        s = out[0]
        for _ in range(n):
            k1 = field(s)
            k2 = field(s + dt / 2 * k1)
            k3 = field(s + dt / 2 * k2)
            k4 = field(s + dt * k3)
            s = s + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            out.append(s)
        return np.asarray(out)

    dt, n = 1e-3, 5000
    a = rk4(raw, [0.1, 0.05], dt, n)
    b = rk4(transformed, [0.1, 0.05 - 0.1 ** 2], dt, n)
    a_w = a[:, 1] - a[:, 0] ** 2
    assert np.max(np.abs(a[:, 0] - b[:, 0])) < 1e-9
    assert np.max(np.abs(a_w - b[:, 1])) < 1e-9


def test_zeno_guard_trips_on_degenerate_exponent(ex1, ex1_cert, ex1_manifold):
    # a large exponent knob collapses the threshold toward sigma * ||w||;
    # starting on the manifold this accumulates events and must trip the guard
    rule = ManifoldWeighted(sigma=1 / 16, p=3.0, h=ex1_manifold, p_e=30.0)
    r = simulate_event_triggered(ex1, ex1_cert, rule,
                                 short_cfg([0.1, 0.01], t_final=5.0, dt=1e-4))
    assert r.status == "zeno-guard"
    d = np.diff(r.events.times)
    assert len(d) and d[-1] < 2e-4


def test_time_triggered_open_loop_hold(ex1, ex1_cert):
    cfg = short_cfg([0.1, 0.0], t_final=2.0)
    r = simulate_time_triggered(ex1, 2.0, cfg, cert=ex1_cert)
    assert r.events.count == 1


def test_time_triggered_period_counts(ex1, ex1_cert):
    cfg = short_cfg([0.1, 0.0], t_final=1.0, dt=1e-2)
    r = simulate_time_triggered(ex1, 0.1, cfg, cert=ex1_cert)
    assert r.events.count == 10    # updates at 0.0, 0.1, ..., 0.9
    assert np.allclose(np.diff(r.events.times), 0.1)


def test_time_triggered_rejects_small_period(ex1):
    with pytest.raises(ConfigurationError):
        simulate_time_triggered(ex1, 1e-5, short_cfg([0.1, 0.0], dt=1e-3))


def test_degenerate_horizon_single_update(ex1, ex1_cert, ex1_rule):
    cfg = SimConfig(t_final=1e-3, x0=[0.1, 0.0], dt=1e-3)
    ev = simulate_event_triggered(ex1, ex1_cert, ex1_rule, cfg)
    tt = simulate_time_triggered(ex1, 1e-3, cfg, cert=ex1_cert)
    assert ev.events.count == 1
    assert tt.events.count == 1


def test_sigma_above_certificate_rejected(ex1, ex1_cert, ex1_manifold):
    rule = ManifoldWeighted(sigma=0.5, p=3.0, h=ex1_manifold)
    with pytest.raises(ConfigurationError):
        simulate_event_triggered(ex1, ex1_cert, rule, short_cfg([0.1, 0.0]))


def test_refinement_stability(ex1, ex1_cert, ex1_rule):
    miets = []
    for dt in (1e-4, 5e-5):
        cfg = SimConfig(t_final=10.0, x0=[0.1, 0.0], dt=dt,
                        record_stride=100)
        r = simulate_event_triggered(ex1, ex1_cert, ex1_rule, cfg)
        miets.append(r.events.miet)
    assert abs(miets[1] - miets[0]) / miets[0] < 0.10


def test_validity_region_exit(ex1, ex1_cert, ex1_rule):
    cfg = SimConfig(t_final=2.0, x0=[0.1, 0.3], dt=1e-3,
                    validity_radius=0.05)
    r = simulate_event_triggered(ex1, ex1_cert, ex1_rule, cfg)
    assert r.status == "left-validity-region"


def test_overflow_termination():
    # unstable center dynamics dy = +y^3 blows up in finite time
    g1 = PolyField.from_terms(1, [(0, 1.0, [3], [0], [0])], 1, 1, 1)
    g2 = PolyField.from_terms(1, [], 1, 1, 1)

    def g_nl(y, z, u):
        x = np.concatenate([np.atleast_1d(y), np.atleast_1d(z),
                            np.atleast_1d(u)], axis=0)
        return g1(x), g2(x)

    model = PlantModel(name="blowup", k=1, nz=1, m=1, A1=np.zeros((1, 1)),
                       A2=np.array([[-1.0]]), B2=np.array([[1.0]]),
                       K11=np.zeros((1, 1)), K12=np.zeros((1, 1)), p=3.0,
                       g_nl=g_nl, poly=(g1, g2))
    rule = RawCoordinates(sigma=0.1, p=3.0)
    r = simulate_event_triggered(model, None, rule,
                                 SimConfig(t_final=2.0, x0=[2.0, 0.0],
                                           dt=1e-3))
    assert r.status == "overflow"


def test_class_k_pair_object_path(ex1, ex1_cert, ex1_manifold):
    rule = ClassKPair(sigma=1 / 32, alpha_D=lambda s: s, beta_G=lambda s: s,
                      h=ex1_manifold)
    r = simulate_event_triggered(ex1, ex1_cert, rule,
                                 short_cfg([0.1, 0.0], t_final=1.0))
    assert r.completed and r.events.count >= 1


def test_variant_agreement_exact_vs_series(ex1, ex1_cert):
    # the order-2 series equals the exact manifold here; the event sequences
    # must be identical
    h_series = solve_series(ex1, 2)
    h_literal = PolyManifold(coeffs=np.array([[0.0, 0.0, 1.0]]), order=2,
                             exact=True)
    cfg = short_cfg([0.1, 0.0], t_final=5.0, dt=1e-4)
    r1 = simulate_event_triggered(
        ex1, ex1_cert, ManifoldWeighted(sigma=1 / 16, p=3.0, h=h_series), cfg)
    r2 = simulate_event_triggered(
        ex1, ex1_cert, ManifoldWeighted(sigma=1 / 16, p=3.0, h=h_literal), cfg)
    assert np.array_equal(r1.events.times, r2.events.times)


def test_event_log_invariants(ex1, ex1_cert, ex1_rule):
    r = simulate_event_triggered(ex1, ex1_cert, ex1_rule,
                                 short_cfg([0.1, 0.0], t_final=5.0, dt=1e-4))
    d = np.diff(r.events.times)
    assert np.all(d > 0)
    assert np.all(d >= r.dt - 1e-12)
    assert r.events.miet == pytest.approx(d.min())
    assert r.events.mean_iet == pytest.approx(d.mean())


def test_batch_single_run_aggregates(ex1, ex1_cert, ex1_rule):
    cfg = short_cfg([0.1, 0.0], t_final=5.0, dt=1e-4)
    batch = batch_run(ex1, ex1_cert, ex1_rule, [[0.1, 0.0]], cfg,
                      split_time=2.5)
    run = batch.runs[0]
    assert batch.miet == pytest.approx(run.events.miet)
    assert batch.mean_iet == pytest.approx(run.events.mean_iet)


def test_batch_requires_initial_conditions(ex1, ex1_cert, ex1_rule):
    with pytest.raises(ConfigurationError):
        batch_run(ex1, ex1_cert, ex1_rule, np.zeros((0, 2)),
                  short_cfg([0.1, 0.0]))


def test_circle_initial_conditions():
    ics = circle_initial_conditions(0.1, 10, 3)
    assert ics.shape == (10, 3)
    assert np.allclose(np.linalg.norm(ics[:, :2], axis=1), 0.1)
    assert np.allclose(ics[:, 2], 0.0)
    assert np.allclose(ics[0], [0.1, 0.0, 0.0])


def _synthetic_result(t, w):
    n = len(t)
    z = np.zeros((n, 1))
    return SimResult(model_name="synth", t=t, y=z, z=z, v=z,
                     w=w.reshape(-1, 1), u=z, V=np.zeros(n),
                     event_flag=np.zeros(n, dtype=int),
                     events=EventLog(times=np.array([0.0])),
                     status="completed", dt=float(t[1] - t[0]))


def test_decay_fit_exact_exponential():
    t = np.linspace(0.0, 3.0, 400)
    r = _synthetic_result(t, 2.0 * np.exp(-3.0 * t))
    c1, mu, r2 = decay_fit(r)
    assert abs(c1 - 2.0) < 1e-6 and abs(mu - 3.0) < 1e-6
    assert r2 > 1.0 - 1e-12


def test_decay_fit_zero_signal_errors():
    t = np.linspace(0.0, 1.0, 50)
    r = _synthetic_result(t, np.zeros_like(t))
    with pytest.raises(FitError):
        decay_fit(r)


def test_decay_fit_degenerate_window_errors():
    t = np.linspace(0.0, 1.0, 50)
    r = _synthetic_result(t, np.exp(-t))
    with pytest.raises(FitError):
        decay_fit(r, 0.9999, 1.0)
