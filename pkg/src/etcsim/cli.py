"""Command-line entry point.

Subcommands::

    etcsim manifold  (--preset NAME | --config FILE) [--order R] [--out DIR]
    etcsim certify   (--preset NAME | --config FILE) [--out DIR]
    etcsim simulate  (--preset NAME | --config FILE) [--sigma --dt --t-final]
    etcsim batch     (--preset NAME | --config FILE) [--seed N]
    etcsim compare   (--preset NAME | --config FILE)

Every run writes a ``manifest.yaml`` capturing the fully-resolved settings;
re-running with ``--config manifest.yaml`` reproduces the outputs exactly.

Exit codes: 0 success, 2 configuration error, 3 zeno-guard termination,
4 numeric overflow, 5 left the validity region, 6 certificate error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .certificates import Certificate
from .config import RunSetup, load_config, setup_from_dict, setup_from_preset
from .diagnostics import estimate_constants, tau_estimates
from .errors import CertificateError, ConfigurationError, EtcsimError
from .manifold import pde_residual
from .output import (summary_dict, write_events_csv, write_summary_json,
                     write_trajectory_csv)
from .sim import (SimConfig, batch_run, circle_initial_conditions,
                  simulate_event_triggered, simulate_time_triggered)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ZENO = 3
EXIT_OVERFLOW = 4
EXIT_LEFT_REGION = 5
EXIT_CERTIFICATE = 6

_STATUS_EXIT = {
    "completed": EXIT_OK,
    "zeno-guard": EXIT_ZENO,
    "overflow": EXIT_OVERFLOW,
    "left-validity-region": EXIT_LEFT_REGION,
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="etcsim",
        description="Event-triggered stabilization with center manifolds: "
                    "manifold approximation, certificates and closed-loop "
                    "simulation.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, doc in (
            ("manifold", "solve the invariant-manifold series and print it"),
            ("certify", "compute the Lyapunov certificate and timing floors"),
            ("simulate", "run one event-triggered closed loop"),
            ("batch", "run the preset's batch protocol and pool statistics"),
            ("compare", "event-triggered vs time-triggered at the measured "
                        "inter-event floor")):
        p = sub.add_parser(name, help=doc)
        p.add_argument("preset_pos", nargs="?", metavar="PRESET",
                       help="preset name (shorthand for --preset)")
        p.add_argument("--preset", help="built-in preset name")
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--order", type=int, help="manifold order override")
        p.add_argument("--sigma", type=float, help="trigger slope override")
        p.add_argument("--dt", type=float, help="step-size override")
        p.add_argument("--t-final", dest="t_final", type=float,
                       help="horizon override")
        p.add_argument("--seed", type=int, help="batch seed override")
        p.add_argument("--out", default=None,
                       help="output directory (default: runs/<command>-<name>)")
    return ap


def _resolve(args) -> RunSetup:
    overrides = {"order": args.order, "sigma": args.sigma, "dt": args.dt,
                 "t_final": args.t_final, "seed": args.seed}
    preset = args.preset or args.preset_pos
    if preset and args.config:
        raise ConfigurationError("give either a preset or a config file, not both")
    if preset:
        return setup_from_preset(preset, overrides)
    if args.config:
        return setup_from_dict(load_config(args.config), overrides)
    raise ConfigurationError("a preset name or --config file is required")


def _outdir(args, setup: RunSetup) -> Path:
    out = Path(args.out) if args.out else Path("runs") / f"{args.command}-{setup.name}"
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(setup: RunSetup, out: Path):
    (out / "manifest.yaml").write_text(
        yaml.safe_dump(setup.config, sort_keys=True))


def _cmd_manifold(args) -> int:
    setup = _resolve(args)
    h = setup.manifold
    out = _outdir(args, setup)
    resid = pde_residual(setup.model, h, r_check=h.order)
    print(f"invariant-manifold approximation, order {h.order}"
          f"{' (exact)' if h.exact else ''}")
    print("component  degree  coefficient")
    for comp, deg, coef in h.degree_table():
        print(f"{comp + 1:9d}  {deg:6d}  {coef: .12g}")
    for i in range(h.nz):
        terms = [f"({c:.6g}) y^{d}" for cc, d, c in h.degree_table() if cc == i]
        print(f"h_{i + 1}(y) = " + (" + ".join(terms) if terms else "0"))
    payload = {**h.as_dict(),
               "max_residual_coefficient": float(np.max(np.abs(resid)))}
    (out / "manifold.json").write_text(json.dumps(payload, indent=2) + "\n")
    _write_manifest(setup, out)
    print(f"written: {out / 'manifold.json'}")
    return EXIT_OK


def _cmd_certify(args) -> int:
    setup = _resolve(args)
    out = _outdir(args, setup)
    cert: Certificate = setup.certificate
    sigma = setup.rule.inner.sigma if hasattr(setup.rule, "inner") \
        else setup.rule.sigma
    consts = estimate_constants(setup.model, setup.manifold,
                                radius=min(0.2, setup.sim.validity_radius))
    tau1, tau3 = tau_estimates(setup.model, cert, consts, sigma,
                               r_s=setup.config.get("trigger", {}).get("r_s"))
    payload = {
        "certificate": cert.as_dict(),
        "sigma": sigma,
        "conservative_estimates": {
            "note": "constants sampled on the validity ball; the timing "
                    "floors below are conservative analytic estimates",
            "region_radius": consts.radius,
            "k1": consts.k1, "k2": consts.k2, "k5": consts.k5,
            "k6": consts.k6, "k7": consts.k7, "k8": consts.k8,
            "L1": consts.L1,
            "tau1": tau1.value, "tau1_degenerate": tau1.degenerate,
            "tau3": None if tau3 is None else tau3,
        },
    }
    text = json.dumps(payload, indent=2)
    print(text)
    (out / "certificate.json").write_text(text + "\n")
    _write_manifest(setup, out)
    return EXIT_OK


def _run_and_write(setup: RunSetup, out: Path, extra=None) -> int:
    result = simulate_event_triggered(setup.model, setup.certificate,
                                      setup.rule, setup.sim)
    write_trajectory_csv(result, out / "trajectory.csv")
    write_events_csv(result, out / "events.csv")
    write_summary_json(result, out / "summary.json",
                       certificate=setup.certificate, extra=extra)
    _write_manifest(setup, out)
    log = result.events
    print(f"status={result.status} events={log.count} "
          f"miet={log.miet * 1e3:.4g} ms mean_iet={log.mean_iet * 1e3:.4g} ms")
    print(f"written: {out}")
    return _STATUS_EXIT[result.status]


def _cmd_simulate(args) -> int:
    setup = _resolve(args)
    return _run_and_write(setup, _outdir(args, setup))


def _cmd_batch(args) -> int:
    setup = _resolve(args)
    out = _outdir(args, setup)
    spec = dict(setup.batch)
    protocol = spec.get("protocol", "circle")
    count = int(spec.get("count", 10))
    radius = float(spec.get("radius", 0.1))
    seed = int(spec.get("seed", 0))
    if protocol == "circle":
        ics = circle_initial_conditions(radius, count, setup.model.n, seed)
    elif protocol == "mip_circle":
        from .presets import mip_initial_state
        rng = np.random.default_rng(seed)
        ics = []
        for _ in range(count):
            ang = rng.uniform(0, 2 * np.pi)
            rr = radius * np.sqrt(rng.uniform())
            theta = rng.uniform(0, 2 * np.pi)
            ics.append(mip_initial_state(rr * np.cos(ang), rr * np.sin(ang),
                                         theta))
        ics = np.asarray(ics)
    else:
        raise ConfigurationError(f"unknown batch protocol {protocol!r}")
    batch = batch_run(setup.model, setup.certificate, setup.rule, ics,
                      setup.sim, split_time=spec.get("split_time"))
    payload = {
        "protocol": protocol, "count": count, "radius": radius, "seed": seed,
        "miet": batch.miet, "mean_iet": batch.mean_iet,
        "mean_iet_early": batch.mean_iet_early,
        "mean_iet_late": batch.mean_iet_late,
        "split_time": batch.split_time,
        "statuses": batch.statuses,
        "runs": [summary_dict(r) for r in batch.runs],
    }
    (out / "batch.json").write_text(json.dumps(payload, indent=2) + "\n")
    for i, run in enumerate(batch.runs):
        write_events_csv(run, out / f"events_{i:02d}.csv")
    _write_manifest(setup, out)
    print(f"batch miet={batch.miet * 1e3:.4g} ms "
          f"mean={batch.mean_iet * 1e3:.4g} ms "
          f"early={batch.mean_iet_early * 1e3:.4g} ms "
          f"late={batch.mean_iet_late * 1e3:.4g} ms")
    print(f"written: {out}")
    bad = [s for s in batch.statuses if s != "completed"]
    if bad:
        return _STATUS_EXIT[bad[0]]
    return EXIT_OK


def _aligned_deviation(res_a, res_b, stride_steps: int, dt: float) -> float:
    """Sup-norm state deviation on the shared record grid."""
    def grid(res):
        steps = np.rint(res.t / dt).astype(int)
        mask = steps % stride_steps == 0
        return {int(s): np.concatenate([res.y[i], res.z[i]])
                for i, s in zip(np.flatnonzero(mask), steps[mask])}
    ga, gb = grid(res_a), grid(res_b)
    common = sorted(set(ga) & set(gb))
    return max(float(np.linalg.norm(ga[s] - gb[s])) for s in common)


def _cmd_compare(args) -> int:
    setup = _resolve(args)
    out = _outdir(args, setup)
    stride = max(1, int(round(1e-3 / setup.sim.dt)))
    cfg = SimConfig(t_final=setup.sim.t_final, x0=setup.sim.x0,
                    dt=setup.sim.dt, zeno_guard_min=setup.sim.zeno_guard_min,
                    record_stride=stride,
                    validity_radius=setup.sim.validity_radius)
    ev = simulate_event_triggered(setup.model, setup.certificate, setup.rule,
                                  cfg)
    if not ev.completed:
        print(f"event-triggered run did not complete: {ev.status}")
        return _STATUS_EXIT[ev.status]
    # with fewer than two events there is no measured inter-event floor;
    # fall back to an open-loop hold over the whole horizon
    period = ev.events.miet if ev.events.count >= 2 else cfg.t_final
    tt = simulate_time_triggered(setup.model, period, cfg,
                                 cert=setup.certificate,
                                 manifold=setup.manifold)
    x0n = float(np.linalg.norm(np.asarray(cfg.x0, dtype=float)))
    dev = _aligned_deviation(ev, tt, stride, cfg.dt)
    ratio = tt.events.count / ev.events.count
    payload = {
        "event_triggered": summary_dict(ev),
        "time_triggered": summary_dict(tt),
        "period": period,
        "update_count_ratio": ratio,
        "sup_norm_deviation": dev,
        "sup_norm_deviation_relative": dev / x0n if x0n else None,
    }
    (out / "compare.json").write_text(json.dumps(payload, indent=2) + "\n")
    write_trajectory_csv(ev, out / "trajectory_event.csv")
    write_trajectory_csv(tt, out / "trajectory_time.csv")
    _write_manifest(setup, out)
    print(f"event-triggered: {ev.events.count} updates; time-triggered at "
          f"period {period * 1e3:.4g} ms: {tt.events.count} updates")
    print(f"update-count ratio={ratio:.3g} sup-norm deviation="
          f"{dev:.4g} ({(dev / x0n if x0n else 0) * 100:.3g}% of |x0|)")
    print(f"written: {out}")
    if not tt.completed:
        return _STATUS_EXIT[tt.status]
    return EXIT_OK


_COMMANDS = {
    "manifold": _cmd_manifold,
    "certify": _cmd_certify,
    "simulate": _cmd_simulate,
    "batch": _cmd_batch,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertificateError as exc:
        print(f"certificate error: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE
    except EtcsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
