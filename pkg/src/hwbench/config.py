"""Campaign configuration: one JSON object mirroring the domain types.

Sections map one-to-one onto the dataclasses they configure; validation
failures are reported with the dotted path of the offending field, e.g.
``steady_state.nw_s``. A handful of named presets ship with the package
and can be used anywhere a config path is accepted.
"""

from __future__ import annotations

import copy
import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .core import CellGeometry, DomainError, ReferenceAtmosphere
from .cellsim import ElectrometerModel, GroundTruthCell, HeaterModel
from .acquisition import (
    InvalidParams,
    PlanError,
    ScanPlan,
    SteadyStateParams,
    TemperatureLoopParams,
)


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"config error at {path}: {message}")
        self.field_path = path


_SECTIONS = {
    "geometry": CellGeometry,
    "reference": ReferenceAtmosphere,
    "cell": GroundTruthCell,
    "heater": HeaterModel,
    "electrometer": ElectrometerModel,
    "steady_state": SteadyStateParams,
    "scan": ScanPlan,
    "temperature_loop": TemperatureLoopParams,
}


@dataclass(frozen=True)
class CampaignConfig:
    geometry: CellGeometry
    reference: ReferenceAtmosphere
    cell: GroundTruthCell
    heater: HeaterModel
    electrometer: ElectrometerModel
    steady_state: SteadyStateParams
    scan: ScanPlan
    temperature_loop: TemperatureLoopParams
    seed: int = 0
    apply_latency_s: float = 0.4
    output_dir: str = "out"


def _build_section(name: str, cls, data: dict):
    if not isinstance(data, dict):
        raise ConfigError(name, f"expected an object, got {type(data).__name__}")
    known = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown field")
    try:
        return cls(**data)
    except (DomainError, InvalidParams, PlanError) as e:
        msg = str(e)
        first = msg.split()[0] if msg else ""
        path = f"{name}.{first}" if first in known else name
        raise ConfigError(path, msg) from None


def config_from_dict(raw: dict) -> CampaignConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    known = set(_SECTIONS) | {"seed", "apply_latency_s", "output_dir"}
    for key in raw:
        if key not in known:
            raise ConfigError(key, "unknown field")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        kwargs[name] = _build_section(name, cls, raw.get(name, {}))

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) \
            or not (0 <= seed < 2 ** 64):
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    kwargs["seed"] = seed

    latency = raw.get("apply_latency_s", 0.4)
    if not isinstance(latency, (int, float)) or latency < 0:
        raise ConfigError("apply_latency_s", "must be a number >= 0")
    kwargs["apply_latency_s"] = float(latency)

    out = raw.get("output_dir", "out")
    if not isinstance(out, str) or not out:
        raise ConfigError("output_dir", "must be a non-empty string")
    kwargs["output_dir"] = out
    return CampaignConfig(**kwargs)


def config_to_dict(cfg: CampaignConfig, include_output_dir: bool = False) -> dict:
    """Resolved config as a plain dict. output_dir is omitted by default so
    that runs into different directories still produce identical trees."""
    d = {}
    for name in _SECTIONS:
        d[name] = dataclasses.asdict(getattr(cfg, name))
    d["seed"] = cfg.seed
    d["apply_latency_s"] = cfg.apply_latency_s
    if include_output_dir:
        d["output_dir"] = cfg.output_dir
    return d


def load_config(path_or_preset: str) -> CampaignConfig:
    """Read a config from a JSON file, or from a named preset."""
    if path_or_preset in PRESETS:
        return config_from_dict(preset(path_or_preset))
    p = Path(path_or_preset)
    if not p.exists():
        raise ConfigError("<file>",
                          f"{path_or_preset!r} is neither a file nor one of "
                          f"the presets {sorted(PRESETS)}")
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"invalid JSON: {e}") from None
    return config_from_dict(raw)


# -- presets -------------------------------------------------------------------

# noise-free round-trip campaign over the full +-0.6 V window; the slope
# analysis of this run recovers the -1/6 and +1/6 exponents
_YSZ_700C = {
    "geometry": {"contact_radius_m": 100e-6,
                 "reversible_electrode_radius_m": 5e-3,
                 "electrolyte_thickness_m": 2e-3},
    "reference": {"a_o2_reversible": 0.21, "temperature_k": 973.15},
    "cell": {"sigma_n_ref": 1e-4, "sigma_p_ref": 1e-4,
             "slope_n": -1.0 / 6.0, "slope_p": 1.0 / 6.0, "a_ref": 0.21,
             "tau_relax_s": 2.0, "gaussian_noise_a": 0.0},
    "heater": {"cycle_time_s": 2.0, "duty_fraction": 0.5,
               "disturbance_amp_a": 0.0, "disturbance_sign": 1,
               "oven_tau_s": 1200.0, "cell_tau_s": 120.0,
               "gain_c_per_unit_power": 1000.0, "ambient_c": 25.0,
               "couple_offset_c": 15.0, "proportional_band_c": 1.0},
    "electrometer": {"sampling_period_s": 0.2, "median_rank": 5},
    "steady_state": {"np_s": 5, "nw_s": 5, "threshold_a": 3e-9,
                     "nm_s": 5, "timeout_s": 7200.0},
    "scan": {"v_start": 0.0, "v_min": -0.6, "v_max": 0.6, "v_end": 0.0,
             "v_step": 0.01, "mode": "dud"},
    "temperature_loop": {"sp_cell_c": 700.0, "ki": 0.8, "tol_c": 0.8,
                         "drift_c": 0.15, "adjust_period_s": 300.0,
                         "initial_sp_offset_c": 0.0,
                         "stabilization_timeout_s": 86400.0},
    "seed": 42,
    "apply_latency_s": 0.4,
}

# the historic setup: 10 s controller cycle, 100 nA pickup, sensor noise;
# its heater ON time (3 s) violates the filter condition on purpose
_LLTO_LEGACY = {
    **copy.deepcopy(_YSZ_700C),
    "cell": {"sigma_n_ref": 2e-4, "sigma_p_ref": 2e-4,
             "slope_n": -1.0 / 6.0, "slope_p": 1.0 / 6.0, "a_ref": 0.21,
             "tau_relax_s": 60.0, "gaussian_noise_a": 0.2e-9},
    "heater": {"cycle_time_s": 10.0, "duty_fraction": 0.3,
               "disturbance_amp_a": 100e-9, "disturbance_sign": 1,
               "oven_tau_s": 1200.0, "cell_tau_s": 120.0,
               "gain_c_per_unit_power": 1000.0, "ambient_c": 25.0,
               "couple_offset_c": 15.0, "proportional_band_c": 1.0},
    "reference": {"a_o2_reversible": 0.21, "temperature_k": 910.15},
    "scan": {"v_start": 0.0, "v_min": -0.3, "v_max": 0.3, "v_end": 0.0,
             "v_step": 0.05, "mode": "dud"},
    "temperature_loop": {"sp_cell_c": 637.0, "ki": 0.8, "tol_c": 0.8,
                         "drift_c": 0.15, "adjust_period_s": 300.0,
                         "initial_sp_offset_c": 0.0,
                         "stabilization_timeout_s": 86400.0},
    "seed": 1,
}

# starts at thermal equilibrium and uses second-scale settling: a campaign
# that finishes in a few virtual minutes, for live steering and tests
_BENCH_QUICK = {
    **copy.deepcopy(_YSZ_700C),
    "cell": {"sigma_n_ref": 1e-4, "sigma_p_ref": 1e-4,
             "slope_n": -1.0 / 6.0, "slope_p": 1.0 / 6.0, "a_ref": 0.21,
             "tau_relax_s": 0.5, "gaussian_noise_a": 0.0},
    "heater": {"cycle_time_s": 2.0, "duty_fraction": 0.5,
               "disturbance_amp_a": 0.0, "disturbance_sign": 1,
               "oven_tau_s": 1200.0, "cell_tau_s": 120.0,
               "gain_c_per_unit_power": 1000.0, "ambient_c": 700.0,
               "couple_offset_c": 0.0, "proportional_band_c": 1.0},
    "steady_state": {"np_s": 2, "nw_s": 2, "threshold_a": 1e-9,
                     "nm_s": 2, "timeout_s": 120.0},
    "scan": {"v_start": 0.0, "v_min": -0.1, "v_max": 0.1, "v_end": 0.0,
             "v_step": 0.05, "mode": "dud"},
    "temperature_loop": {"sp_cell_c": 700.0, "ki": 0.8, "tol_c": 0.8,
                         "drift_c": 0.15, "adjust_period_s": 300.0,
                         "initial_sp_offset_c": 0.0,
                         "stabilization_timeout_s": 86400.0},
    "seed": 7,
}

PRESETS = {
    "ysz-700c": _YSZ_700C,
    "llto-legacy": _LLTO_LEGACY,
    "bench-quick": _BENCH_QUICK,
}


def preset(name: str) -> dict:
    """Deep copy of a named preset dict, ready to tweak and pass to
    config_from_dict."""
    if name not in PRESETS:
        raise ConfigError("<preset>", f"unknown preset {name!r}; "
                                      f"available: {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name])
