"""CSV/JSON writers for simulation artifacts."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .sim import SimResult

__all__ = ["write_trajectory_csv", "write_events_csv", "write_summary_json",
           "summary_dict"]


def write_trajectory_csv(result: SimResult, path) -> Path:
    """Columns: t, y*, z*, v*, w*, u*, V, event_flag."""
    path = Path(path)
    k = result.y.shape[1]
    nz = result.z.shape[1]
    m = result.u.shape[1]
    header = (["t"]
              + [f"y{i+1}" for i in range(k)]
              + [f"z{i+1}" for i in range(nz)]
              + [f"v{i+1}" for i in range(nz)]
              + [f"w{i+1}" for i in range(nz)]
              + [f"u{i+1}" for i in range(m)]
              + ["V", "event_flag"])
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(result.t)):
            row = ([f"{result.t[i]:.10g}"]
                   + [f"{v:.12g}" for v in result.y[i]]
                   + [f"{v:.12g}" for v in result.z[i]]
                   + [f"{v:.12g}" for v in result.v[i]]
                   + [f"{v:.12g}" for v in result.w[i]]
                   + [f"{v:.12g}" for v in result.u[i]]
                   + [f"{result.V[i]:.12g}", str(int(result.event_flag[i]))])
            writer.writerow(row)
    return path


def write_events_csv(result: SimResult, path) -> Path:
    """Columns: index, time, inter_event_time (blank for the first event)."""
    path = Path(path)
    times = result.events.times
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "time", "inter_event_time"])
        for i, t in enumerate(times):
            iet = "" if i == 0 else f"{times[i] - times[i-1]:.10g}"
            writer.writerow([i, f"{t:.10g}", iet])
    return path


def _json_safe(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def summary_dict(result: SimResult, certificate=None) -> dict:
    log = result.events
    out = {
        "model": result.model_name,
        "status": result.status,
        "dt": result.dt,
        "sigma": result.sigma,
        "event_count": log.count,
        "miet": None if np.isnan(log.miet) else log.miet,
        "mean_iet": None if np.isnan(log.mean_iet) else log.mean_iet,
        "t_final": float(result.t[-1]) if len(result.t) else None,
        "meta": _json_safe(result.meta),
    }
    if certificate is not None:
        out["certificate"] = certificate.as_dict()
    return out


def write_summary_json(result: SimResult, path, certificate=None,
                       extra: dict | None = None) -> Path:
    path = Path(path)
    payload = summary_dict(result, certificate)
    if extra:
        payload.update(extra)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path
