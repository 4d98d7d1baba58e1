"""Hot numeric kernels: fixed-step RK4 sample-and-hold loop.

The loop below is compiled with numba when available.  Setting the
environment variable ``ETCSIM_NO_NUMBA=1`` (or any value other than ``0``)
selects a pure-Python/numpy execution of the *same source*, so both paths
produce bit-identical trajectories; ``benchmarks/bench_kernels.py`` compares
their throughput.

Models are encoded for the kernel as either a monomial table (``KIND_POLY``)
or the dedicated inverted-pendulum-robot field (``KIND_MIP``).  Trigger rules
are encoded as ``(code, sigma, y_exponent, dead_zone_r1)``.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = ["NUMBA_ENABLED", "sim_loop", "KIND_POLY", "KIND_MIP",
           "STATUS_COMPLETED", "STATUS_ZENO", "STATUS_OVERFLOW",
           "STATUS_LEFT_REGION"]

KIND_POLY = 0
KIND_MIP = 1

STATUS_COMPLETED = 0
STATUS_ZENO = 1
STATUS_OVERFLOW = 2
STATUS_LEFT_REGION = 3

_flag = os.environ.get("ETCSIM_NO_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false")

NUMBA_ENABLED = False
if not _disabled:
    try:
        from numba import njit as _njit
        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if NUMBA_ENABLED:
    def _jit(fn):
        return _njit(cache=True)(fn)
else:
    def _jit(fn):
        return fn


def _deriv_impl(kind, params, coefs, comps, powers,
                k, nz, m, A1, A2, B2, x, u, xall, out):
    n = k + nz
    if kind == KIND_MIP:
        b1 = params[0]; b2 = params[1]; b3 = params[2]; b4 = params[3]
        b5 = params[4]; b = params[5]; r = params[6]; a_g = params[7]
        x1 = x[0]; x2 = x[1]; x3 = x[2]; x4 = x[3]; x5 = x[4]; x6 = x[5]
        u1 = u[0]; u2 = u[1]
        s3 = math.sin(x3); c3 = math.cos(x3); s23 = math.sin(2.0 * x3)
        m1 = 2.0 * (b2 * b3 - b5 * b5 * c3 * c3)
        m2 = b4 + b1 * s3 * s3
        out[0] = (1.0 - x1 * x1) * math.atanh(x2) * x6
        out[1] = (1.0 - x2 * x2) * (-math.atanh(x1) * x6 + x5)
        out[2] = x4
        out[3] = (s23 * (b3 * b1 * x6 * x6 - b5 * b5 * x4 * x4)
                  + 2.0 * b5 * b3 * a_g * s3) / m1 \
            + (-2.0 * (b3 * r + b5 * c3) / m1) * u1
        out[4] = (s23 * (-b1 * b5 * x5 * x5 * c3 - b5 * b5 * a_g)
                  + 2.0 * b2 * b5 * x4 * x4 * s3) / m1 \
            + (2.0 * (b2 + b5 * r * c3) / m1) * u1
        out[5] = -b1 * x4 * x6 * s23 / m2 + (b / (m2 * r)) * u2
        return
    # generic: linear part plus monomial table
    for i in range(k):
        acc = 0.0
        for j in range(k):
            acc += A1[i, j] * x[j]
        out[i] = acc
    for i in range(nz):
        acc = 0.0
        for j in range(nz):
            acc += A2[i, j] * x[k + j]
        for j in range(m):
            acc += B2[i, j] * u[j]
        out[k + i] = acc
    for i in range(n):
        xall[i] = x[i]
    for j in range(m):
        xall[n + j] = u[j]
    for t in range(coefs.shape[0]):
        val = coefs[t]
        for i in range(powers.shape[1]):
            p = powers[t, i]
            for _ in range(p):
                val *= xall[i]
        out[comps[t]] += val


def _sim_loop_impl(kind, params, coefs, comps, powers,
                   k, nz, m, A1, A2, B2, K11, K12, E, hcoef, P,
                   rule_code, sigma, yexp, r1, periodic_steps,
                   x0, dt, n_steps, zeno_min, validity_radius,
                   record_stride,
                   ev_times, ev_radii, rec_t, rec_x, rec_u, rec_v, rec_w,
                   rec_vlyap, rec_flag):
    n = k + nz
    x = x0.copy()
    held = x0.copy()
    u = np.zeros(m)
    xall = np.zeros(n + m)
    k1 = np.zeros(n); k2 = np.zeros(n); k3 = np.zeros(n); k4 = np.zeros(n)
    xtmp = np.zeros(n)
    v = np.zeros(nz)
    w = np.zeros(nz)
    vh = np.zeros(nz)   # held-state view
    hord = hcoef.shape[1] - 1

    def_zone = r1 > 0.0

    # views at the initial state
    for i in range(nz):
        acc = x[k + i]
        for j in range(k):
            acc -= E[i, j] * x[j]
        v[i] = acc
    ny = 0.0
    for j in range(k):
        ny += x[j] * x[j]
    ny = math.sqrt(ny)
    if hord >= 0 and k == 1:
        t0v = x[0]
        for i in range(nz):
            acc = 0.0
            for d in range(hord, -1, -1):
                acc = acc * t0v + hcoef[i, d]
            w[i] = v[i] - acc
    else:
        for i in range(nz):
            w[i] = v[i]
    nw = 0.0
    for i in range(nz):
        nw += w[i] * w[i]
    nw = math.sqrt(nw)

    n_events = 0
    last_event_step = -1
    waiting_first_exit = False
    if def_zone and math.sqrt(ny * ny + nw * nw) < r1 and periodic_steps <= 0:
        # start inside the suppression ball: zero control until first exit
        for j in range(m):
            u[j] = 0.0
        waiting_first_exit = True
    else:
        ev_times[n_events] = 0.0
        ev_radii[n_events] = math.sqrt(ny * ny + nw * nw)
        n_events += 1
        last_event_step = 0
        for i in range(n):
            held[i] = x[i]
        for j in range(m):
            acc = 0.0
            for i in range(nz):
                acc += K11[j, i] * held[k + i]
            for i in range(k):
                acc += K12[j, i] * held[i]
            u[j] = acc

    status = STATUS_COMPLETED
    n_rec = 0
    # record initial sample
    rec_t[n_rec] = 0.0
    for i in range(n):
        rec_x[n_rec, i] = x[i]
    for j in range(m):
        rec_u[n_rec, j] = u[j]
    for i in range(nz):
        rec_v[n_rec, i] = v[i]
        rec_w[n_rec, i] = w[i]
    acc = 0.0
    for i in range(nz):
        for j in range(nz):
            acc += w[i] * P[i, j] * w[j]
    if acc < 0.0:
        acc = 0.0
    rec_vlyap[n_rec] = ny + math.sqrt(acc)
    rec_flag[n_rec] = 1 if last_event_step == 0 else 0
    n_rec += 1

    for step in range(1, n_steps + 1):
        # classical RK4 with the held input
        _deriv(kind, params, coefs, comps, powers, k, nz, m, A1, A2, B2,
               x, u, xall, k1)
        for i in range(n):
            xtmp[i] = x[i] + 0.5 * dt * k1[i]
        _deriv(kind, params, coefs, comps, powers, k, nz, m, A1, A2, B2,
               xtmp, u, xall, k2)
        for i in range(n):
            xtmp[i] = x[i] + 0.5 * dt * k2[i]
        _deriv(kind, params, coefs, comps, powers, k, nz, m, A1, A2, B2,
               xtmp, u, xall, k3)
        for i in range(n):
            xtmp[i] = x[i] + dt * k3[i]
        _deriv(kind, params, coefs, comps, powers, k, nz, m, A1, A2, B2,
               xtmp, u, xall, k4)
        for i in range(n):
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

        finite = True
        for i in range(n):
            if not math.isfinite(x[i]):
                finite = False
        if not finite:
            status = STATUS_OVERFLOW
            break

        # views
        for i in range(nz):
            acc2 = x[k + i]
            for j in range(k):
                acc2 -= E[i, j] * x[j]
            v[i] = acc2
        ny = 0.0
        for j in range(k):
            ny += x[j] * x[j]
        ny = math.sqrt(ny)
        if hord >= 0 and k == 1:
            tv = x[0]
            for i in range(nz):
                acc2 = 0.0
                for d in range(hord, -1, -1):
                    acc2 = acc2 * tv + hcoef[i, d]
                w[i] = v[i] - acc2
        else:
            for i in range(nz):
                w[i] = v[i]
        nw = 0.0
        for i in range(nz):
            nw += w[i] * w[i]
        nw = math.sqrt(nw)
        nyw = math.sqrt(ny * ny + nw * nw)

        if math.isfinite(validity_radius) and nyw > validity_radius:
            status = STATUS_LEFT_REGION
            break

        # trigger evaluation
        fire = False
        if periodic_steps > 0:
            # a re-sample at the final instant cannot affect the trajectory
            fire = step % periodic_steps == 0 and step < n_steps
        elif waiting_first_exit:
            fire = nyw >= r1
        elif def_zone and nyw < r1:
            fire = False
        else:
            # error views against the held state
            ney = 0.0
            for j in range(k):
                d0 = held[j] - x[j]
                ney += d0 * d0
            ney = math.sqrt(ney)
            for i in range(nz):
                acc2 = held[k + i]
                for j in range(k):
                    acc2 -= E[i, j] * held[j]
                vh[i] = acc2
            nev = 0.0
            for i in range(nz):
                d0 = vh[i] - v[i]
                nev += d0 * d0
            nev = math.sqrt(nev)
            nv = 0.0
            for i in range(nz):
                nv += v[i] * v[i]
            nv = math.sqrt(nv)
            if rule_code == 1:
                err = math.sqrt(ney * ney + nev * nev)
                thr = sigma * nyw
            elif rule_code == 2:
                err = nev
                thr = sigma * (nw + ny ** yexp)
            elif rule_code == 3:
                err = nev
                thr = sigma * (nv + ny ** yexp)
            elif rule_code == 4:
                err = math.sqrt(ney * ney + nev * nev)
                thr = sigma * (ny + nv)
            else:
                err = math.sqrt(ney * ney + nev * nev)
                thr = sigma * (ny + nw)
            fire = err >= thr and not (err == 0.0 and thr == 0.0)

        flag = 0
        if fire:
            tnow = step * dt
            ev_times[n_events] = tnow
            ev_radii[n_events] = nyw
            n_events += 1
            flag = 1
            if (periodic_steps <= 0 and last_event_step >= 0
                    and (step - last_event_step) * dt < zeno_min):
                status = STATUS_ZENO
            last_event_step = step
            waiting_first_exit = False
            for i in range(n):
                held[i] = x[i]
            for j in range(m):
                acc2 = 0.0
                for i in range(nz):
                    acc2 += K11[j, i] * held[k + i]
                for i in range(k):
                    acc2 += K12[j, i] * held[i]
                u[j] = acc2

        if (step % record_stride == 0 or step == n_steps
                or status != STATUS_COMPLETED):
            rec_t[n_rec] = step * dt
            for i in range(n):
                rec_x[n_rec, i] = x[i]
            for j in range(m):
                rec_u[n_rec, j] = u[j]
            for i in range(nz):
                rec_v[n_rec, i] = v[i]
                rec_w[n_rec, i] = w[i]
            acc2 = 0.0
            for i in range(nz):
                for j in range(nz):
                    acc2 += w[i] * P[i, j] * w[j]
            if acc2 < 0.0:
                acc2 = 0.0
            rec_vlyap[n_rec] = ny + math.sqrt(acc2)
            rec_flag[n_rec] = flag
            n_rec += 1

        if status != STATUS_COMPLETED:
            break

    return status, n_events, n_rec


_deriv = _jit(_deriv_impl)
_sim_loop = _jit(_sim_loop_impl)


def sim_loop(kind, params, coefs, comps, powers, k, nz, m,
             A1, A2, B2, K11, K12, E, hcoef, P,
             rule_code, sigma, yexp, r1, periodic_steps,
             x0, dt, n_steps, zeno_min, validity_radius, record_stride):
    """Allocate buffers, run the loop, and trim outputs.

    Returns ``(status, event_times, rec)`` where ``rec`` is a dict of the
    recorded trajectory arrays.
    """
    n = k + nz
    cap_rec = n_steps // record_stride + 3
    ev_times = np.empty(n_steps + 2)
    ev_radii = np.empty(n_steps + 2)
    rec_t = np.empty(cap_rec)
    rec_x = np.empty((cap_rec, n))
    rec_u = np.empty((cap_rec, m))
    rec_v = np.empty((cap_rec, nz))
    rec_w = np.empty((cap_rec, nz))
    rec_vlyap = np.empty(cap_rec)
    rec_flag = np.empty(cap_rec, dtype=np.int64)
    status, n_events, n_rec = _sim_loop(
        int(kind), params, coefs, comps, powers,
        int(k), int(nz), int(m), A1, A2, B2, K11, K12, E, hcoef, P,
        int(rule_code), float(sigma), float(yexp), float(r1),
        int(periodic_steps), x0, float(dt), int(n_steps), float(zeno_min),
        float(validity_radius), int(record_stride),
        ev_times, ev_radii, rec_t, rec_x, rec_u, rec_v, rec_w, rec_vlyap,
        rec_flag)
    rec = {
        "t": rec_t[:n_rec].copy(), "x": rec_x[:n_rec].copy(),
        "u": rec_u[:n_rec].copy(), "v": rec_v[:n_rec].copy(),
        "w": rec_w[:n_rec].copy(), "V": rec_vlyap[:n_rec].copy(),
        "event_flag": rec_flag[:n_rec].copy(),
        "event_radii": ev_radii[:n_events].copy(),
    }
    return int(status), ev_times[:n_events].copy(), rec
