"""Event-triggered stabilization of nonlinear systems with center manifolds.

The package decomposes a plant into center and stable coordinates, computes
polynomial invariant-manifold approximations with a residual oracle, derives
Lyapunov certificates and admissible trigger thresholds, and simulates the
sample-and-hold closed loop under a family of relative trigger rules.
"""

from .certificates import (Certificate, make_certificate, sigma_bound,
                           solve_lyapunov, tau1_estimate, tau3_estimate,
                           v_value)
from .errors import (CertificateError, ConfigurationError, EtcsimError,
                     FitError, NumericOverflowError, UnsupportedModelError)
from .manifold import (PolyManifold, pde_residual, reduced_dynamics,
                       solve_coupling, solve_series)
from .models import (PlantModel, PolyField, StatePoint, eval_dynamics,
                     from_w, held_control, to_v, to_w, validate_model)
from .presets import get_preset, preset_names
from .sim import (BatchResult, EventLog, SimConfig, SimResult, batch_run,
                  circle_initial_conditions, decay_fit,
                  simulate_event_triggered, simulate_time_triggered)
from .trigger import (ClassKPair, DeadZone, ManifoldWeighted, RawCoordinates,
                      RelativeFull, RelativeYV, TriggerRule, dead_zone_radius)

__version__ = "0.1.0"

__all__ = [
    "Certificate", "make_certificate", "sigma_bound", "solve_lyapunov",
    "tau1_estimate", "tau3_estimate", "v_value",
    "CertificateError", "ConfigurationError", "EtcsimError", "FitError",
    "NumericOverflowError", "UnsupportedModelError",
    "PolyManifold", "pde_residual", "reduced_dynamics", "solve_coupling",
    "solve_series",
    "PlantModel", "PolyField", "StatePoint", "eval_dynamics", "from_w",
    "held_control", "to_v", "to_w", "validate_model",
    "get_preset", "preset_names",
    "BatchResult", "EventLog", "SimConfig", "SimResult", "batch_run",
    "circle_initial_conditions", "decay_fit", "simulate_event_triggered",
    "simulate_time_triggered",
    "ClassKPair", "DeadZone", "ManifoldWeighted", "RawCoordinates",
    "RelativeFull", "RelativeYV", "TriggerRule", "dead_zone_radius",
    "__version__",
]
