import { describe, expect, it } from "vitest";

import { DashboardState, validateParamsPatch } from "../src/state.js";
import type { IVRow, SamplePayload, SteadyParams } from "../src/types.js";

const PARAMS: SteadyParams = {
  np_s: 5, nw_s: 5, threshold_a: 3e-9, nm_s: 5, timeout_s: 7200,
};

function sample(t: number): SamplePayload {
  return {
    t_s: t, trace_t_s: t, raw_a: 1e-9, filtered_a: 1e-9,
    cell_temp_c: 700, heater_on: 0, e_app_v: 0.1, phase: "scanning",
  };
}

function ivRow(index: number): IVRow {
  return {
    index, e_app_v: index * 0.1, i_ss_a: index * 1e-9,
    branch: "descending-1", t_settled_s: 10, flags: "ok",
  };
}

describe("sample buffer", () => {
  it("holds min(k, bufferSize) points", () => {
    const s = new DashboardState(600);
    for (let i = 0; i < 50; i++) s.applyEvent("sample", sample(i));
    expect(s.samples.length).toBe(50);
    for (let i = 50; i < 1000; i++) s.applyEvent("sample", sample(i));
    expect(s.samples.length).toBe(600);
    expect(s.samples[0].t_s).toBe(400); // oldest dropped first
    expect(s.samples[599].t_s).toBe(999);
  });
});

describe("iv accumulation", () => {
  it("appends new points and replaces same-index points", () => {
    const s = new DashboardState();
    s.applyEvent("iv_point", ivRow(0));
    s.applyEvent("iv_point", ivRow(1));
    expect(s.ivPoints.map((p) => p.index)).toEqual([0, 1]);
    s.applyEvent("iv_point", { ...ivRow(1), flags: "timeout" });
    expect(s.ivPoints.length).toBe(2);
    expect(s.ivPoints[1].flags).toBe("timeout");
  });

  it("resync from the server replaces the table wholesale", () => {
    const s = new DashboardState();
    s.applyEvent("iv_point", ivRow(7));
    s.resyncIv([ivRow(0), ivRow(1), ivRow(2)]);
    expect(s.ivPoints.map((p) => p.index)).toEqual([0, 1, 2]);
  });
});

describe("stream lifecycle", () => {
  it("records detections and terminal state", () => {
    const s = new DashboardState();
    s.applyEvent("state", { phase: "scanning" });
    expect(s.phase).toBe("scanning");
    s.applyEvent("detection", { t_s: 22, index: 0, e_app_v: 0, k_s: 10 });
    expect(s.detections.length).toBe(1);
    s.applyEvent("aborted", { t_s: 30, points: 1 });
    expect(s.terminal).toBe("aborted");
    expect(s.phase).toBe("aborted");
  });

  it("params events update the live values and the boundary stamp", () => {
    const s = new DashboardState();
    s.applyEvent("params", {
      t_s: 40, boundary_k_s: 15, ...PARAMS, threshold_a: 1e-8,
    });
    expect(s.params?.threshold_a).toBe(1e-8);
    expect(s.lastParamsBoundary?.boundary_k_s).toBe(15);
  });

  it("an acknowledged pending edit clears once the boundary applies it", () => {
    const s = new DashboardState();
    s.pendingEdit = { patch: { threshold_a: 1e-8 }, status: "acknowledged" };
    s.applyEvent("params", { t_s: 40, boundary_k_s: 15, ...PARAMS });
    expect(s.pendingEdit).toBeNull();
  });
});

describe("snapshot resync", () => {
  it("is authoritative for phase, params and filter condition", () => {
    const s = new DashboardState();
    s.resyncSnapshot({
      phase: "aborted", running: false, points_done: 3,
      live_params: PARAMS,
      filter_condition: { ok: false, margin_s: -0.1 },
    });
    expect(s.phase).toBe("aborted");
    expect(s.terminal).toBe("aborted");
    expect(s.params).toEqual(PARAMS);
    expect(s.filterOk).toBe(false);
    expect(s.filterMargin).toBeCloseTo(-0.1);
  });
});

describe("validateParamsPatch (mirror of the server invariants)", () => {
  it("rejects nw_s = 0 locally, so no request is sent", () => {
    const errors = validateParamsPatch({ nw_s: 0 }, PARAMS);
    expect(errors.nw_s).toBeTruthy();
  });

  it("accepts a plain threshold change", () => {
    expect(validateParamsPatch({ threshold_a: 1e-8 }, PARAMS)).toEqual({});
  });

  it("rejects non-integer windows and bad timeouts", () => {
    expect(validateParamsPatch({ np_s: 2.5 }, PARAMS).np_s).toBeTruthy();
    expect(validateParamsPatch({ timeout_s: 8 }, PARAMS).timeout_s)
      .toBeTruthy();
    expect(validateParamsPatch({ threshold_a: 0 }, PARAMS).threshold_a)
      .toBeTruthy();
  });

  it("validates the merged result, not the patch alone", () => {
    // raising np+nw past the current timeout must flag timeout_s
    const errors = validateParamsPatch({ np_s: 4000, nw_s: 4000 }, PARAMS);
    expect(errors.timeout_s).toBeTruthy();
  });
});
