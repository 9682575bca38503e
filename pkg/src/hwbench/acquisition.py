"""The automated measurement campaign.

Drives a VirtualRig through oven and cell temperature stabilization, the
chained voltage sweeps, per-voltage steady-state detection and averaging,
and incremental persistence. One campaign runs at a time on one thread;
other threads may only queue commands (abort, live parameter patches) and
take state snapshots.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Sequence

from .cellsim import CurrentSample, VirtualRig, ElectrometerModel

__all__ = [
    "SteadyStateParams", "ScanPlan", "TemperatureLoopParams", "IVPoint",
    "Phase", "CampaignState", "InvalidParams", "PlanError", "CampaignError",
    "steady_state_check", "window_mean_difference", "measure_steady_current",
    "generate_sweep", "plan_voltages", "pi_regulate_step",
    "check_filter_condition", "Campaign", "NullSink",
]


class InvalidParams(ValueError):
    pass


class PlanError(ValueError):
    pass


class CampaignError(RuntimeError):
    pass


class _AbortRequested(Exception):
    pass


@dataclass(frozen=True)
class SteadyStateParams:
    """User-tunable detection parameters; all durations in whole seconds."""

    np_s: int = 5           # interval between threshold checks
    nw_s: int = 5           # averaging window for each check
    threshold_a: float = 3e-9
    nm_s: int = 5           # integration duration for the steady value
    timeout_s: float = 7200.0

    def __post_init__(self):
        if self.np_s < 1:
            raise InvalidParams("np_s must be >= 1")
        if self.nw_s < 1:
            raise InvalidParams("nw_s must be >= 1")
        if not (self.threshold_a > 0):
            raise InvalidParams("threshold_a must be > 0")
        if self.nm_s < 1:
            raise InvalidParams("nm_s must be >= 1")
        if not (self.timeout_s > self.np_s + self.nw_s):
            raise InvalidParams("timeout_s must exceed np_s + nw_s")


@dataclass(frozen=True)
class ScanPlan:
    v_start: float = 0.0
    v_min: float = -0.6
    v_max: float = 0.6
    v_end: float = 0.0
    v_step: float = 0.01
    mode: str = "dud"       # "dud" or "udu"

    def __post_init__(self):
        if self.mode not in ("dud", "udu"):
            raise PlanError(f"mode must be 'dud' or 'udu', got {self.mode!r}")
        if not (self.v_step > 0):
            raise PlanError("v_step must be > 0")
        if self.v_min > self.v_max:
            raise PlanError("v_min must be <= v_max")
        for name in ("v_start", "v_end"):
            v = getattr(self, name)
            if not (self.v_min - 1e-12 <= v <= self.v_max + 1e-12):
                raise PlanError(f"{name} must lie within [v_min, v_max]")
        # every sweep leg starts and ends on the v_min-anchored grid
        for name, span in (("v_start - v_min", self.v_start - self.v_min),
                           ("v_max - v_min", self.v_max - self.v_min),
                           ("v_end - v_min", self.v_end - self.v_min)):
            n = round(span / self.v_step)
            if abs(span - n * self.v_step) > 1e-9:
                raise PlanError(f"{name} = {span} is not a multiple of v_step")


@dataclass(frozen=True)
class TemperatureLoopParams:
    sp_cell_c: float = 700.0
    ki: float = 0.8
    tol_c: float = 0.8
    drift_c: float = 0.15
    adjust_period_s: float = 300.0
    initial_sp_offset_c: float = 0.0
    stabilization_timeout_s: float = 86400.0

    def __post_init__(self):
        if not (self.tol_c > self.drift_c > 0):
            raise InvalidParams("need tol_c > drift_c > 0")
        if not (self.adjust_period_s > 0):
            raise InvalidParams("adjust_period_s must be > 0")


@dataclass(frozen=True)
class IVPoint:
    index: int
    e_app_v: float
    i_ss_a: float
    branch: str
    t_settled_s: float
    flags: str = "ok"       # "ok" or "timeout"


class Phase(str, Enum):
    IDLE = "idle"
    OVEN_STABILIZING = "oven-stabilizing"
    CELL_STABILIZING = "cell-stabilizing"
    SCANNING = "scanning"
    ANALYZING = "analyzing"
    DONE = "done"
    ABORTED = "aborted"


@dataclass(frozen=True)
class CampaignState:
    phase: Phase
    live_params: SteadyStateParams
    current_voltage: float
    points_done: int
    sp_oven_c: float
    t_oven_c: float
    t_cell_c: float
    now_s: float


# -- pure operations ---------------------------------------------------------

def window_mean_difference(samples: Sequence[float], p: SteadyStateParams,
                           k: int) -> float:
    """|mean of the Nw samples ending at k - mean ending at k - Np|.

    samples[i] is the reading taken i+1 seconds after voltage application;
    k counts seconds, so the window ending at k is samples[k-Nw:k].
    """
    a = samples[k - p.nw_s:k]
    b = samples[k - p.np_s - p.nw_s:k - p.np_s]
    return abs(sum(a) / p.nw_s - sum(b) / p.nw_s)


def steady_state_check(samples: Sequence[float], p: SteadyStateParams,
                       k: int) -> Optional[bool]:
    """True when the current is steady at check time k, False when it is
    still moving, None when not enough samples exist yet."""
    if k > len(samples) or k - p.np_s - p.nw_s < 0:
        return None
    return window_mean_difference(samples, p, k) <= p.threshold_a


def measure_steady_current(samples_after_detection: Sequence[float],
                           p: SteadyStateParams) -> float:
    """Arithmetic mean of the Nm readings collected after detection."""
    if len(samples_after_detection) < p.nm_s:
        raise InvalidParams(
            f"need {p.nm_s} post-detection samples, "
            f"got {len(samples_after_detection)}")
    chunk = samples_after_detection[:p.nm_s]
    return sum(chunk) / p.nm_s


def generate_sweep(from_v: float, to_v: float, v_step: float,
                   direction: str) -> list[float]:
    """Inclusive arithmetic sequence from from_v toward to_v."""
    if direction not in ("up", "down"):
        raise PlanError(f"direction must be 'up' or 'down', got {direction!r}")
    if not (v_step > 0):
        raise PlanError("v_step must be > 0")
    span = to_v - from_v
    if direction == "up" and span < -1e-12:
        raise PlanError(f"up sweep cannot go from {from_v} to {to_v}")
    if direction == "down" and span > 1e-12:
        raise PlanError(f"down sweep cannot go from {from_v} to {to_v}")
    n = round(abs(span) / v_step)
    if abs(abs(span) - n * v_step) > 1e-9:
        raise PlanError(f"|{to_v} - {from_v}| is not a multiple of v_step")
    signed = v_step if direction == "up" else -v_step
    return [from_v + i * signed for i in range(n + 1)]


def plan_voltages(plan: ScanPlan) -> list[tuple[str, float]]:
    """Branch-labelled voltage list for the whole campaign, with shared
    endpoints between consecutive sweeps visited once."""
    if plan.mode == "dud":
        legs = [
            ("descending-1", generate_sweep(plan.v_start, plan.v_min, plan.v_step, "down")),
            ("ascending", generate_sweep(plan.v_min, plan.v_max, plan.v_step, "up")),
            ("descending-2", generate_sweep(plan.v_max, plan.v_end, plan.v_step, "down")),
        ]
    else:
        legs = [
            ("ascending-1", generate_sweep(plan.v_start, plan.v_max, plan.v_step, "up")),
            ("descending", generate_sweep(plan.v_max, plan.v_min, plan.v_step, "down")),
            ("ascending-2", generate_sweep(plan.v_min, plan.v_end, plan.v_step, "up")),
        ]
    out: list[tuple[str, float]] = []
    for i, (branch, vs) in enumerate(legs):
        if i > 0:
            vs = vs[1:]
        out.extend((branch, v) for v in vs)
    return out


def pi_regulate_step(sp_oven_c: float, sp_cell_c: float, t_cell_c: float,
                     ki: float) -> float:
    """One integral step of the oven-setpoint correction, clamped to the
    controller's 0..1000 C input range."""
    sp = sp_oven_c + ki * (sp_cell_c - t_cell_c)
    return min(1000.0, max(0.0, sp))


def check_filter_condition(t_on_s: float,
                           electrometer: ElectrometerModel) -> tuple[bool, float]:
    """Whether the heater ON time fits inside half the median window.

    Returns (ok, margin) with margin = (2R+1)*Ts/2 - T_on.
    """
    margin = electrometer.t_win_s / 2.0 - t_on_s
    return t_on_s < electrometer.t_win_s / 2.0, margin


# -- the campaign engine -----------------------------------------------------

class NullSink:
    """Sink that drops everything; useful for in-memory campaigns."""

    def open_trace(self, index: int, e_app_v: float):
        pass

    def trace_sample(self, sample: CurrentSample):
        pass

    def close_trace(self):
        pass

    def iv_point(self, point: IVPoint):
        pass

    def event(self, t_s: float, kind: str, **fields):
        pass


class Campaign:
    """Executes one measurement campaign on the caller's thread.

    Other threads steer through request_abort() and submit_params(), and
    observe through snapshot(), iv_rows() and the observer callback. The
    observer receives (event_name, payload_dict) and must not block.
    """

    def __init__(self, rig: VirtualRig, plan: ScanPlan,
                 params: SteadyStateParams, loop: TemperatureLoopParams,
                 sink=None, observer: Optional[Callable[[str, dict], None]] = None,
                 apply_latency_s: float = 0.4, time_ratio: float = 0.0,
                 analyzer: Optional[Callable[[list[IVPoint]], None]] = None):
        self.rig = rig
        self.plan = plan
        self.loop = loop
        self.sink = sink if sink is not None else NullSink()
        self.observer = observer
        self.analyzer = analyzer
        self.time_ratio = time_ratio

        dt = rig.electrometer.sampling_period_s
        self._ticks_per_read = round(1.0 / dt)
        if abs(self._ticks_per_read * dt - 1.0) > 1e-9:
            raise InvalidParams(
                "sampling_period_s must divide the 1 s read cadence")
        self._latency_ticks = round(apply_latency_s / dt)
        if abs(self._latency_ticks * dt - apply_latency_s) > 1e-9:
            raise InvalidParams(
                "apply_latency_s must be a multiple of sampling_period_s")
        self.apply_latency_s = apply_latency_s

        self._lock = threading.Lock()
        self._abort = threading.Event()
        self._pending_patches: list[dict] = []
        self.live_params = params
        self.curve: list[IVPoint] = []
        self.phase = Phase.IDLE
        self.sp_oven_c = rig.sp_oven_c
        self._current_voltage = 0.0
        self._tracing = False

    # -- cross-thread API ----------------------------------------------------

    def request_abort(self):
        self._abort.set()

    def submit_params(self, patch: dict) -> SteadyStateParams:
        """Validate a parameter patch now; it takes effect at the next
        Np-boundary check. Returns the params that would result."""
        with self._lock:
            merged = self.live_params
            for p in self._pending_patches:
                merged = replace(merged, **p)
            candidate = replace(merged, **patch)  # raises InvalidParams
            if patch:
                self._pending_patches.append(dict(patch))
            return candidate

    def snapshot(self) -> CampaignState:
        with self._lock:
            return CampaignState(
                phase=self.phase,
                live_params=self.live_params,
                current_voltage=self._current_voltage,
                points_done=len(self.curve),
                sp_oven_c=self.sp_oven_c,
                t_oven_c=self.rig.t_oven_c,
                t_cell_c=self.rig.t_cell_c,
                now_s=self.rig.now_s,
            )

    def iv_rows(self) -> list[IVPoint]:
        with self._lock:
            return list(self.curve)

    # -- internals -----------------------------------------------------------

    def _emit(self, name: str, payload: dict):
        if self.observer is not None:
            self.observer(name, payload)

    def _set_phase(self, phase: Phase):
        with self._lock:
            self.phase = phase
        self.sink.event(self.rig.now_s, "STATE", phase=phase.value)
        self._emit("state", {"t_s": self.rig.now_s, "phase": phase.value})

    def _check_abort(self):
        if self._abort.is_set():
            raise _AbortRequested()

    def _tick(self) -> CurrentSample:
        s = self.rig.step()
        if self._tracing:
            self.sink.trace_sample(s)
        if self.time_ratio > 0:
            time.sleep(self.time_ratio * self.rig.electrometer.sampling_period_s)
        return s

    def _advance_ticks(self, n: int) -> CurrentSample:
        s = None
        for _ in range(n):
            s = self._tick()
        return s

    def _advance_seconds(self, n: int) -> CurrentSample:
        """Advance n virtual seconds; emits one sample event per second and
        honours abort requests at second boundaries."""
        s = None
        for _ in range(n):
            s = self._advance_ticks(self._ticks_per_read)
            self._emit("sample", {
                "t_s": self.rig.now_s,
                "trace_t_s": s.t_s,
                "raw_a": s.raw_a,
                "filtered_a": s.filtered_a,
                "cell_temp_c": s.cell_temp_c,
                "heater_on": int(s.heater_on),
                "e_app_v": self.rig.applied_v,
                "phase": self.phase.value,
            })
            self._check_abort()
        return s

    def _apply_pending_patches(self, k: int):
        with self._lock:
            if not self._pending_patches:
                return
            params = self.live_params
            for patch in self._pending_patches:
                params = replace(params, **patch)
            self._pending_patches.clear()
            self.live_params = params
        self.sink.event(self.rig.now_s, "PARAMS",
                        np_s=params.np_s, nw_s=params.nw_s,
                        threshold_a=params.threshold_a, nm_s=params.nm_s,
                        timeout_s=params.timeout_s, boundary_k_s=k)
        self._emit("params", {
            "t_s": self.rig.now_s, "boundary_k_s": k,
            "np_s": params.np_s, "nw_s": params.nw_s,
            "threshold_a": params.threshold_a, "nm_s": params.nm_s,
            "timeout_s": params.timeout_s,
        })

    # -- phases --------------------------------------------------------------

    def _stabilize_oven(self):
        lp = self.loop
        with self._lock:
            self.sp_oven_c = lp.sp_cell_c + lp.initial_sp_offset_c
        self.rig.set_oven_setpoint(self.sp_oven_c)
        self.sink.event(self.rig.now_s, "SP_OVEN", sp_oven_c=self.sp_oven_c)
        deadline = self.rig.now_s + lp.stabilization_timeout_s
        while True:
            if abs(self.rig.t_oven_c - self.sp_oven_c) <= lp.tol_c:
                return
            if self.rig.now_s >= deadline:
                raise CampaignError(
                    f"oven did not reach {self.sp_oven_c} C within "
                    f"{lp.stabilization_timeout_s} s")
            self._advance_seconds(60)

    def _stabilize_cell(self):
        lp = self.loop
        deadline = self.rig.now_s + lp.stabilization_timeout_s
        prev = None
        while True:
            t_cell = self.rig.t_cell_c
            in_tol = abs(t_cell - lp.sp_cell_c) <= lp.tol_c
            settled = prev is None or abs(t_cell - prev) < lp.drift_c
            if in_tol and settled:
                return
            if self.rig.now_s >= deadline:
                raise CampaignError(
                    f"cell did not reach {lp.sp_cell_c} C within "
                    f"{lp.stabilization_timeout_s} s")
            with self._lock:
                self.sp_oven_c = pi_regulate_step(
                    self.sp_oven_c, lp.sp_cell_c, t_cell, lp.ki)
            self.rig.set_oven_setpoint(self.sp_oven_c)
            self.sink.event(self.rig.now_s, "SP_OVEN",
                            sp_oven_c=self.sp_oven_c, t_cell_c=t_cell)
            prev = t_cell
            self._advance_seconds(int(round(lp.adjust_period_s)))

    def _measure_point(self, index: int, branch: str, e_v: float):
        self.rig.apply_voltage(e_v)
        with self._lock:
            self._current_voltage = e_v
        self.sink.open_trace(index, e_v)
        self._tracing = True
        self.sink.event(self.rig.now_s, "APPLY", index=index,
                        e_app_v=e_v, branch=branch)
        try:
            self._advance_ticks(self._latency_ticks)
            samples: list[float] = []
            k = 0
            while True:
                p = self.live_params
                elapsed = self.apply_latency_s + k
                if elapsed >= p.timeout_s:
                    point = IVPoint(index, e_v, math.nan, branch,
                                    elapsed, "timeout")
                    self._persist_point(point)
                    self.sink.event(self.rig.now_s, "TIMEOUT", index=index,
                                    e_app_v=e_v, elapsed_s=elapsed)
                    return
                s = self._advance_seconds(1)
                k += 1
                samples.append(s.filtered_a)
                first_check = max(p.np_s, p.nw_s) + p.np_s
                if k >= first_check and k % p.np_s == 0:
                    self._apply_pending_patches(k)
                    p = self.live_params
                    if steady_state_check(samples, p, k):
                        break
            self.sink.event(self.rig.now_s, "DETECT", index=index,
                            e_app_v=e_v, k_s=k)
            self._emit("detection", {"t_s": self.rig.now_s, "index": index,
                                     "e_app_v": e_v, "k_s": k})
            settle = self.apply_latency_s + k
            post: list[float] = []
            for _ in range(p.nm_s):
                s = self._advance_seconds(1)
                post.append(s.filtered_a)
            i_ss = measure_steady_current(post, p)
            self._persist_point(IVPoint(index, e_v, i_ss, branch, settle, "ok"))
        finally:
            self._tracing = False
            self.sink.close_trace()

    def _persist_point(self, point: IVPoint):
        # durable write first, then the in-memory row, then the stream event
        self.sink.iv_point(point)
        with self._lock:
            self.curve.append(point)
        self.sink.event(self.rig.now_s, "POINT", index=point.index,
                        e_app_v=point.e_app_v, i_ss_a=point.i_ss_a,
                        branch=point.branch, flags=point.flags)
        self._emit("iv_point", {
            "t_s": self.rig.now_s, "index": point.index,
            "e_app_v": point.e_app_v,
            # NaN is not valid JSON; gaps travel as null
            "i_ss_a": None if math.isnan(point.i_ss_a) else point.i_ss_a,
            "branch": point.branch, "t_settled_s": point.t_settled_s,
            "flags": point.flags,
        })

    def _scan(self):
        ok, margin = check_filter_condition(self.rig.heater.t_on_s,
                                            self.rig.electrometer)
        self.sink.event(self.rig.now_s, "FILTER_CONDITION",
                        ok=int(ok), margin_s=margin)
        if not ok:
            self._emit("warning", {
                "t_s": self.rig.now_s,
                "message": "heater ON time exceeds half the median window",
                "margin_s": margin,
            })
        for index, (branch, v) in enumerate(plan_voltages(self.plan)):
            self._measure_point(index, branch, v)

    def run(self) -> list[IVPoint]:
        """Execute the whole campaign; returns the recorded I-V points.

        On abort the partial outputs remain valid and the phase ends at
        ABORTED instead of DONE.
        """
        try:
            self._set_phase(Phase.OVEN_STABILIZING)
            self._stabilize_oven()
            self._set_phase(Phase.CELL_STABILIZING)
            self._stabilize_cell()
            self._set_phase(Phase.SCANNING)
            self._scan()
            self._set_phase(Phase.ANALYZING)
            if self.analyzer is not None:
                self.analyzer(self.iv_rows())
            self._set_phase(Phase.DONE)
            self._emit("done", {"t_s": self.rig.now_s,
                                "points": len(self.curve)})
        except _AbortRequested:
            self._set_phase(Phase.ABORTED)
            self._emit("aborted", {"t_s": self.rig.now_s,
                                   "points": len(self.curve)})
        except CampaignError as err:
            self.sink.event(self.rig.now_s, "ERROR", message=str(err))
            self._set_phase(Phase.ABORTED)
            self._emit("aborted", {"t_s": self.rig.now_s,
                                   "points": len(self.curve),
                                   "error": str(err)})
            raise
        return self.iv_rows()
