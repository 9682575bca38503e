"""Deterministic discrete-time simulation of the measurement hardware.

One VirtualRig instance stands in for the physical chain: the cell's
electrical response, the oven and its PWM temperature controller, and the
electrometer with its running median filter. Everything advances on a
single virtual clock in steps of the electrometer sampling period; the
same seed and config always reproduce the same sample stream bit for bit.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    CONSTANTS,
    CellGeometry,
    DomainError,
    PhysicalConstants,
    ReferenceAtmosphere,
)

# Samples landing exactly on a PWM edge must not flap on float dust; the
# heater output is treated as ON strictly inside (0, T_on) of each cycle.
_EDGE_TOL_S = 1e-9


@dataclass(frozen=True)
class GroundTruthCell:
    """Hidden electron/hole conductivity model the campaign tries to recover.

    sigma_e(a) = sigma_n_ref * (a / a_ref)**slope_n
               + sigma_p_ref * (a / a_ref)**slope_p
    """

    sigma_n_ref: float = 1e-4     # S/m at a = a_ref
    sigma_p_ref: float = 1e-4
    slope_n: float = -1.0 / 6.0
    slope_p: float = 1.0 / 6.0
    a_ref: float = 0.21
    tau_relax_s: float = 60.0
    gaussian_noise_a: float = 0.2e-9

    def __post_init__(self):
        if self.sigma_n_ref < 0 or self.sigma_p_ref < 0:
            raise DomainError("reference conductivities must be >= 0")
        if self.sigma_n_ref + self.sigma_p_ref <= 0:
            raise DomainError("at least one carrier conductivity must be > 0")
        if not (self.slope_n < 0 < self.slope_p):
            raise DomainError("need slope_n < 0 < slope_p")
        if not (self.a_ref > 0):
            raise DomainError("a_ref must be > 0")
        if not (self.tau_relax_s > 0):
            raise DomainError("tau_relax_s must be > 0")
        if self.gaussian_noise_a < 0:
            raise DomainError("gaussian_noise_a must be >= 0")


@dataclass(frozen=True)
class HeaterModel:
    """PWM heater, first-order oven/cell thermal plant, and the magnetic
    pickup the heating current injects into the electrometer."""

    cycle_time_s: float = 2.0
    duty_fraction: float = 0.5
    disturbance_amp_a: float = 100e-9
    disturbance_sign: int = 1
    oven_tau_s: float = 1200.0
    cell_tau_s: float = 120.0
    gain_c_per_unit_power: float = 1000.0
    ambient_c: float = 25.0
    couple_offset_c: float = 15.0
    proportional_band_c: float = 50.0

    def __post_init__(self):
        if not (self.cycle_time_s > 0):
            raise DomainError("cycle_time_s must be > 0")
        if not (0.0 <= self.duty_fraction <= 1.0):
            raise DomainError("duty_fraction must be in [0, 1]")
        if self.disturbance_sign not in (1, -1):
            raise DomainError("disturbance_sign must be +1 or -1")
        for name in ("oven_tau_s", "cell_tau_s", "proportional_band_c"):
            if not (getattr(self, name) > 0):
                raise DomainError(f"{name} must be > 0")

    @property
    def t_on_s(self) -> float:
        return self.duty_fraction * self.cycle_time_s


def legacy_heater(**overrides) -> HeaterModel:
    """The 10 s duty-cycle controller that caused the original noise problem."""
    return replace(HeaterModel(cycle_time_s=10.0, duty_fraction=0.3), **overrides)


def fixed_heater(**overrides) -> HeaterModel:
    """The 2 s cycle that pairs with the 2.2 s median window."""
    return replace(HeaterModel(cycle_time_s=2.0, duty_fraction=0.5), **overrides)


@dataclass(frozen=True)
class ElectrometerModel:
    sampling_period_s: float = 0.2
    median_rank: int = 5

    def __post_init__(self):
        if not (self.sampling_period_s > 0):
            raise DomainError("sampling_period_s must be > 0")
        if self.median_rank < 0 or self.median_rank != int(self.median_rank):
            raise DomainError("median_rank must be a non-negative integer")

    @property
    def window_len(self) -> int:
        return 2 * self.median_rank + 1

    @property
    def t_win_s(self) -> float:
        return self.window_len * self.sampling_period_s


@dataclass(frozen=True)
class CurrentSample:
    t_s: float            # virtual time since voltage application
    raw_a: float
    filtered_a: float
    cell_temp_c: float
    heater_on: bool


def steady_current(e_app_v: float, cell: GroundTruthCell,
                   ref: ReferenceAtmosphere, geom: CellGeometry,
                   consts: PhysicalConstants = CONSTANTS) -> float:
    """Steady-state current of the ground-truth cell at an applied voltage.

    I_ss(E) = 2 pi a * integral_0^E sigma_e(a1(E')) dE'. Each power-law
    term of sigma_e integrates in closed form, so this is exact for any
    slope pair, not just the default -1/6 / +1/6.
    """
    beta = (consts.z_electrons * consts.faraday
            / (consts.gas_constant * ref.temperature_k))
    if abs(beta * e_app_v) > 700.0:
        raise DomainError(
            f"voltage {e_app_v} V overflows the activity mapping")
    total = 0.0
    for sigma_ref, slope in ((cell.sigma_n_ref, cell.slope_n),
                             (cell.sigma_p_ref, cell.slope_p)):
        if sigma_ref == 0.0:
            continue
        prefactor = sigma_ref * (ref.a_o2_reversible / cell.a_ref) ** slope
        k = beta * slope
        total += prefactor * math.expm1(k * e_app_v) / k
    return 2.0 * math.pi * geom.contact_radius_m * total


def electron_conductivity(a_o2: float, cell: GroundTruthCell) -> float:
    """Ground-truth sigma_e at an oxygen activity (for oracles and demos)."""
    r = a_o2 / cell.a_ref
    return (cell.sigma_n_ref * r ** cell.slope_n
            + cell.sigma_p_ref * r ** cell.slope_p)


def transient_current(t_s: float, e_prev_v: float, e_new_v: float,
                      cell: GroundTruthCell, ref: ReferenceAtmosphere,
                      geom: CellGeometry,
                      consts: PhysicalConstants = CONSTANTS) -> float:
    """Single-exponential relaxation from I_ss(e_prev) toward I_ss(e_new)."""
    if t_s < 0:
        raise DomainError("t_s must be >= 0")
    i_new = steady_current(e_new_v, cell, ref, geom, consts)
    i_prev = steady_current(e_prev_v, cell, ref, geom, consts)
    return i_new + (i_prev - i_new) * math.exp(-t_s / cell.tau_relax_s)


def _pwm_gate(t_s: float, heater: HeaterModel) -> bool:
    if heater.duty_fraction <= 0.0:
        return False
    if heater.duty_fraction >= 1.0:
        return True
    r = math.fmod(t_s, heater.cycle_time_s)
    if r < 0.0:
        r += heater.cycle_time_s
    return _EDGE_TOL_S < r < heater.t_on_s - _EDGE_TOL_S


def heater_disturbance(t_s: float, heater: HeaterModel) -> float:
    """Additive current offset while the heater output is on; zero otherwise.

    The sign never changes within a run: the magnetic pickup always shifts
    the reading the same way.
    """
    if _pwm_gate(t_s, heater):
        return heater.disturbance_sign * heater.disturbance_amp_a
    return 0.0


@dataclass(frozen=True)
class ThermalState:
    t_oven_c: float
    t_cell_c: float
    duty: float = 0.0
    time_to_duty_update_s: float = 0.0


def thermal_step(state: ThermalState, heater: HeaterModel,
                 sp_oven_c: float, dt_s: float) -> ThermalState:
    """One explicit-Euler step of the oven/cell plant.

    The proportional controller recomputes the duty only at PWM cycle
    boundaries, so within a cycle the heating power is constant. The cell
    relaxes toward the oven temperature minus the static couple offset.
    """
    if not (dt_s > 0):
        raise DomainError("dt_s must be > 0")
    duty = state.duty
    ttl = state.time_to_duty_update_s
    if ttl <= _EDGE_TOL_S:
        duty = (sp_oven_c - state.t_oven_c) / heater.proportional_band_c
        duty = min(1.0, max(0.0, duty))
        ttl = heater.cycle_time_s
    t_oven = state.t_oven_c + dt_s * (
        heater.ambient_c + heater.gain_c_per_unit_power * duty - state.t_oven_c
    ) / heater.oven_tau_s
    t_cell = state.t_cell_c + dt_s * (
        (state.t_oven_c - heater.couple_offset_c) - state.t_cell_c
    ) / heater.cell_tau_s
    return ThermalState(t_oven, t_cell, duty, ttl - dt_s)


class _MedianFilter:
    """Running median over the last (2R+1) raw samples.

    During startup, when fewer samples exist, the median is taken over
    whatever is available (lower middle for even counts) so early readings
    are unbiased rather than zero-padded.
    """

    def __init__(self, rank: int):
        self._window = deque(maxlen=2 * rank + 1)

    def reset(self):
        self._window.clear()

    def push(self, value: float) -> float:
        self._window.append(value)
        ordered = sorted(self._window)
        return ordered[(len(ordered) - 1) // 2]


class VirtualRig:
    """The simulated oven + cell + electrometer chain, advanced tick by tick.

    One tick = one electrometer sampling period. All mutation happens in
    step() and apply_voltage(); callers on other threads may only read the
    snapshot properties.
    """

    def __init__(self, cell: GroundTruthCell, heater: HeaterModel,
                 electrometer: ElectrometerModel, geometry: CellGeometry,
                 reference: ReferenceAtmosphere, seed: int = 0,
                 consts: PhysicalConstants = CONSTANTS):
        self.cell = cell
        self.heater = heater
        self.electrometer = electrometer
        self.geometry = geometry
        self.reference = reference
        self.consts = consts

        self._tick = 0
        self._dt = electrometer.sampling_period_s
        self._filter = _MedianFilter(electrometer.median_rank)
        self._rng = np.random.default_rng(seed)
        self._noise_buf = np.empty(0)
        self._noise_idx = 0

        self.thermal = ThermalState(t_oven_c=heater.ambient_c,
                                    t_cell_c=heater.ambient_c)
        self.sp_oven_c = heater.ambient_c

        self.applied_v = 0.0
        self.previous_v = 0.0
        self._t_apply_s = 0.0
        self._i_ss_new = 0.0
        self._i_ss_prev = 0.0
        self._inv_tau = 1.0 / cell.tau_relax_s
        # no trace is kept until the first voltage is applied
        self.trace_enabled = False
        self.trace: list[CurrentSample] = []

    # -- inputs ------------------------------------------------------------

    def set_oven_setpoint(self, sp_c: float):
        self.sp_oven_c = sp_c

    def apply_voltage(self, e_v: float):
        """Switch the applied DC voltage; restarts the trace and the
        electrometer filter, and re-anchors the relaxation transient."""
        self.previous_v = self.applied_v
        self.applied_v = e_v
        self._t_apply_s = self.now_s
        self._i_ss_new = steady_current(e_v, self.cell, self.reference,
                                        self.geometry, self.consts)
        self._i_ss_prev = steady_current(self.previous_v, self.cell,
                                         self.reference, self.geometry,
                                         self.consts)
        self._filter.reset()
        self.trace_enabled = True
        self.trace = []

    # -- clock -------------------------------------------------------------

    @property
    def now_s(self) -> float:
        return self._tick * self._dt

    @property
    def t_oven_c(self) -> float:
        return self.thermal.t_oven_c

    @property
    def t_cell_c(self) -> float:
        return self.thermal.t_cell_c

    def _noise(self) -> float:
        if self._noise_idx >= len(self._noise_buf):
            self._noise_buf = self._rng.standard_normal(4096)
            self._noise_idx = 0
        v = self._noise_buf[self._noise_idx]
        self._noise_idx += 1
        return float(v)

    def step(self) -> CurrentSample:
        """Advance one sampling period and read the electrometer."""
        self.thermal = thermal_step(self.thermal, self.heater,
                                    self.sp_oven_c, self._dt)
        self._tick += 1
        now = self.now_s
        t_since = now - self._t_apply_s

        decay = math.exp(-t_since * self._inv_tau)
        i_clean = self._i_ss_new + (self._i_ss_prev - self._i_ss_new) * decay
        raw = i_clean + heater_disturbance(now, self.heater)
        if self.cell.gaussian_noise_a > 0.0:
            raw += self.cell.gaussian_noise_a * self._noise()
        filtered = self._filter.push(raw)

        sample = CurrentSample(
            t_s=t_since,
            raw_a=raw,
            filtered_a=filtered,
            cell_temp_c=self.thermal.t_cell_c,
            heater_on=_pwm_gate(now, self.heater),
        )
        if self.trace_enabled:
            self.trace.append(sample)
        return sample
