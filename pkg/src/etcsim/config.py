"""YAML run configuration: model, certificate, trigger and simulation keys.

A config file either names a preset (``model: {preset: example1}``, with any
key overridable) or spells out a polynomial plant in full::

    model:
      k: 1
      nz: 1
      m: 1
      A1: [[0.0]]
      A2: [[1.0]]
      B2: [[1.0]]
      K11: [[-2.0]]
      K12: [[0.0]]
      p: 3.0
      g1_terms:                # component, coef, y/z/u exponent lists
        - {component: 0, coef: -1.0, y: [1], z: [1], u: [0]}
      g2_terms:
        - {component: 0, coef: 1.0, y: [2], z: [0], u: [0]}

The non-polynomial robot model is reachable only through its preset (its
trigonometric remainder is not expressible as a term table); the preset's
physical constants are still plain config keys.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .certificates import Certificate, make_certificate
from .errors import ConfigurationError
from .manifold import PolyManifold, solve_series
from .models import PlantModel, PolyField
from .presets import (MipConstants, PresetBundle, get_preset, make_mip,
                      preset_names)
from .sim import SimConfig
from .trigger import (DeadZone, ManifoldWeighted, RawCoordinates,
                      RelativeFull, RelativeYV, TriggerRule,
                      dead_zone_radius)

__all__ = ["RunSetup", "load_config", "setup_from_preset", "setup_from_dict",
           "manifest_dict"]


def _plain(obj):
    """Recursively convert numpy scalars/arrays so YAML/JSON can emit them."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj

TRIGGER_VARIANTS = ("manifold_weighted", "relative_full", "raw_coordinates",
                    "relative_yv", "dead_zone")


@dataclass
class RunSetup:
    """Everything one run needs, resolved and validated."""

    name: str
    model: PlantModel
    manifold: PolyManifold | None
    certificate: Certificate | None
    rule: TriggerRule | None
    sim: SimConfig
    batch: dict[str, Any]
    config: dict[str, Any]      # the fully-resolved config (manifest)


def _matrix(value, shape, key) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise ConfigurationError(f"{key} must have shape {shape}, got {arr.shape}")
    return arr


def _terms(raw, k, nz, m):
    out = []
    for item in raw or []:
        try:
            out.append((item["component"], item["coef"],
                        item.get("y", [0] * k), item.get("z", [0] * nz),
                        item.get("u", [0] * m)))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed polynomial term {item!r}") from exc
    return out


def _model_from_dict(spec: dict) -> PlantModel:
    if "preset" in spec:
        name = spec["preset"]
        if name == "mip":
            const_keys = ("b1", "b2", "b3", "b4", "b5", "b", "r", "a_g")
            overrides = {kk: float(spec[kk]) for kk in const_keys if kk in spec}
            if overrides:
                base = MipConstants()
                merged = {kk: overrides.get(kk, getattr(base, kk))
                          for kk in const_keys}
                return make_mip(MipConstants(**merged))
        return get_preset(name).model
    try:
        k, nz, m = int(spec["k"]), int(spec["nz"]), int(spec["m"])
    except KeyError as exc:
        raise ConfigurationError("model needs k, nz, m (or a preset name)") from exc
    g1 = PolyField.from_terms(k, _terms(spec.get("g1_terms"), k, nz, m), k, nz, m)
    g2 = PolyField.from_terms(nz, _terms(spec.get("g2_terms"), k, nz, m), k, nz, m)

    def g_nl(y, z, u):
        x = np.concatenate([np.atleast_1d(y), np.atleast_1d(z),
                            np.atleast_1d(u)], axis=0)
        return g1(x), g2(x)

    return PlantModel(
        name=str(spec.get("name", "custom")), k=k, nz=nz, m=m,
        A1=_matrix(spec["A1"], (k, k), "A1"),
        A2=_matrix(spec["A2"], (nz, nz), "A2"),
        B2=_matrix(spec["B2"], (nz, m), "B2"),
        K11=_matrix(spec["K11"], (m, nz), "K11"),
        K12=_matrix(spec["K12"], (m, k), "K12"),
        p=float(spec.get("p", 3.0)), g_nl=g_nl, poly=(g1, g2),
        series_radius=float(spec.get("series_radius", 0.25)))


def _build_rule(spec: dict, model: PlantModel, manifold, cert) -> TriggerRule:
    variant = spec.get("variant", "manifold_weighted")
    if variant not in TRIGGER_VARIANTS:
        raise ConfigurationError(
            f"unknown trigger variant {variant!r}; choose from {TRIGGER_VARIANTS}")
    sigma = spec.get("sigma")
    if sigma is None:
        if cert is None:
            raise ConfigurationError("trigger needs sigma or a certificate")
        sigma = cert.sigma_max
    sigma = float(sigma)
    p = float(spec.get("p", model.p))
    if variant == "relative_full":
        rule = RelativeFull(sigma=sigma, h=manifold)
    elif variant == "raw_coordinates":
        rule = RawCoordinates(sigma=sigma, p=p)
    elif variant == "relative_yv":
        use_manifold = bool(spec.get("use_manifold", manifold is not None))
        rule = RelativeYV(sigma=sigma, h=manifold if use_manifold else None)
    else:
        rule = ManifoldWeighted(sigma=sigma, p=p, h=manifold,
                                p_e=float(spec.get("p_e", 1.0)))
    if variant == "dead_zone" or spec.get("r_s") is not None:
        if variant == "dead_zone" and spec.get("inner"):
            rule = _build_rule(spec["inner"], model, manifold, cert)
        r1 = spec.get("r1")
        if r1 is None:
            r_s = spec.get("r_s")
            if r_s is None:
                raise ConfigurationError("dead-zone trigger needs r1 or r_s")
            P = cert.P if cert is not None else np.eye(model.nz)
            r1 = dead_zone_radius(float(r_s), P)
        rule = DeadZone(inner=rule, r1=float(r1))
    return rule


def setup_from_dict(cfg: dict, overrides: dict | None = None) -> RunSetup:
    """Resolve a config dictionary into a ready-to-run setup."""
    cfg = dict(cfg or {})
    model_spec = dict(cfg.get("model") or {})
    preset: PresetBundle | None = None
    if "preset" in model_spec:
        preset = get_preset(model_spec["preset"])

    cert_spec = dict(preset.certificate if preset else {})
    cert_spec.update(cfg.get("certificate") or {})
    trig_spec = dict(preset.trigger if preset else {})
    trig_spec.update(cfg.get("trigger") or {})
    sim_spec = dict(preset.sim if preset else {})
    sim_spec.update(cfg.get("sim") or {})
    batch_spec = dict(preset.batch if preset else {})
    batch_spec.update(cfg.get("batch") or {})
    order = int(cfg.get("manifold_order",
                        preset.manifold_order if preset else 2))

    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key == "order":
            order = int(val)
        elif key == "sigma":
            trig_spec["sigma"] = float(val)
        elif key in ("dt", "t_final"):
            sim_spec[key] = float(val)
        elif key == "seed":
            batch_spec["seed"] = int(val)
        else:
            raise ConfigurationError(f"unknown override {key!r}")

    model = _model_from_dict(model_spec)

    q = cert_spec.get("Q")
    p_mat = cert_spec.get("P")
    cert = make_certificate(
        model.A_K, model.B2, model.K1,
        Q=None if q is None else np.asarray(q, dtype=float),
        P=None if p_mat is None else np.asarray(p_mat, dtype=float),
        s_f=float(cert_spec.get("s_f", 0.5)),
        s_y=float(cert_spec.get("s_y", 0.5)),
        variant=str(cert_spec.get("variant", "manifold_weighted")))

    manifold = solve_series(model, order) if model.k == 1 else None
    rule = _build_rule(trig_spec, model, manifold, cert)

    sim = SimConfig(
        t_final=float(sim_spec.get("t_final", 25.0)),
        x0=sim_spec.get("x0", [0.0] * model.n),
        dt=float(sim_spec.get("dt", 1e-4)),
        zeno_guard_min=sim_spec.get("zeno_guard_min"),
        record_stride=int(sim_spec.get("record_stride", 1)),
        validity_radius=float(sim_spec.get("validity_radius", np.inf)))

    resolved = _plain({
        "model": model_spec if "preset" in model_spec else
        {**model_spec, "name": model.name},
        "manifold_order": order,
        "certificate": cert_spec,
        "trigger": trig_spec,
        "sim": {**sim_spec,
                "x0": np.asarray(sim_spec.get("x0", [0.0] * model.n),
                                 dtype=float)},
        "batch": batch_spec,
    })
    name = model_spec.get("preset", model.name)
    return RunSetup(name=name, model=model, manifold=manifold,
                    certificate=cert, rule=rule, sim=sim, batch=batch_spec,
                    config=resolved)


def setup_from_preset(name: str, overrides: dict | None = None) -> RunSetup:
    if name not in preset_names():
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return setup_from_dict({"model": {"preset": name}}, overrides)


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"config root must be a mapping: {path}")
    return data


def manifest_dict(setup: RunSetup) -> dict:
    return setup.config
