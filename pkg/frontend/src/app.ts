// Dashboard wiring: one event-stream subscription feeding DashboardState,
// API commands on user actions, SVG charts rebuilt on change.

import { ApiClient, ApiError } from "./api.js";
import {
  branchColor,
  el,
  extent,
  formatAmps,
  formatSlope,
  linearScale,
  pathFrom,
  slopeSegment,
} from "./charts.js";
import { DashboardState, validateParamsPatch } from "./state.js";
import type { SteadyParams } from "./types.js";

const api = new ApiClient("");
const state = new DashboardState(600);

const $ = (id: string) => document.getElementById(id)!;

let showRaw = false;
const hiddenBranches = new Set<string>();
let stream: EventSource | null = null;
let retryTimer: number | null = null;

function connectStream(): void {
  stream?.close();
  stream = new EventSource("/api/stream");
  const names = ["sample", "state", "detection", "iv_point", "params",
                 "warning", "done", "aborted"];
  for (const name of names) {
    stream.addEventListener(name, (ev) => {
      state.applyEvent(name, JSON.parse((ev as MessageEvent).data));
      if (name === "iv_point") {
        void refreshConductivity();
      }
      if (name === "params") {
        void refreshParamsForm();
      }
      render();
    });
  }
  stream.onopen = () => {
    state.markLive();
    void resync();
  };
  stream.onerror = () => {
    state.markStale();
    render();
    if (retryTimer === null) {
      retryTimer = window.setTimeout(() => {
        retryTimer = null;
        connectStream();
      }, 2000);
    }
  };
}

async function resync(): Promise<void> {
  try {
    const snap = await api.getCampaign();
    state.resyncSnapshot(snap);
    if (snap.phase !== "idle") {
      state.resyncIv(await api.getIv());
      state.resyncTrace(await api.getTrace());
      const cond = await api.getConductivity();
      state.resyncConductivity(cond.points, cond.slopes);
      await refreshParamsForm();
    }
  } catch {
    state.markStale();
  }
  render();
}

async function refreshConductivity(): Promise<void> {
  try {
    const cond = await api.getConductivity();
    state.resyncConductivity(cond.points, cond.slopes);
  } catch {
    // transient; next point refreshes again
  }
}

async function refreshParamsForm(): Promise<void> {
  try {
    const params = await api.getParams();
    state.params = params;
    for (const key of Object.keys(params) as (keyof SteadyParams)[]) {
      const input = document.getElementById(`param-${key}`) as
        HTMLInputElement | null;
      if (input && document.activeElement !== input) {
        input.value = String(params[key]);
      }
    }
  } catch {
    // no campaign yet
  }
}

// -- charts -------------------------------------------------------------------

const W = 520;
const H = 240;
const PAD = 36;

function clearSvg(id: string): SVGSVGElement {
  const svg = $(id) as unknown as SVGSVGElement;
  while (svg.firstChild) svg.removeChild(svg.firstChild);
  return svg;
}

function renderTrace(): void {
  const svg = clearSvg("trace-chart");
  const doc = document;
  const samples = state.samples;
  if (samples.length === 0) {
    svg.appendChild(el(doc, "text", { x: W / 2, y: H / 2, class: "empty" }))
      .textContent = "waiting for samples";
    return;
  }
  const ts = samples.map((s) => s.t_s);
  const filtered = samples.map((s) => s.filtered_a);
  const raw = samples.map((s) => s.raw_a);
  const ys = showRaw ? filtered.concat(raw) : filtered;
  const x = linearScale(extent(ts), [PAD, W - 8]);
  const y = linearScale(extent(ys), [H - PAD, 10]);

  for (const det of state.detections) {
    if (det.t_s < x.domain[0] || det.t_s > x.domain[1]) continue;
    svg.appendChild(el(doc, "line", {
      x1: x(det.t_s), x2: x(det.t_s), y1: 10, y2: H - PAD,
      class: "detection-marker",
    }));
    const nm = state.params?.nm_s ?? 0;
    if (nm > 0) {
      const x2 = Math.min(x(det.t_s + nm), W - 8);
      svg.appendChild(el(doc, "rect", {
        x: x(det.t_s), y: 10, width: Math.max(0, x2 - x(det.t_s)),
        height: H - PAD - 10, class: "nm-window",
      }));
    }
  }
  if (showRaw) {
    svg.appendChild(el(doc, "path", {
      d: pathFrom(ts, raw, x, y), class: "raw-line",
    }));
  }
  svg.appendChild(el(doc, "path", {
    d: pathFrom(ts, filtered, x, y), class: "filtered-line",
  }));
  svg.appendChild(el(doc, "text", { x: PAD, y: H - 8, class: "axis-label" }))
    .textContent = `t: ${ts[0].toFixed(0)} .. ${ts[ts.length - 1].toFixed(0)} s, ` +
      `I: ${formatAmps(Math.min(...ys))} .. ${formatAmps(Math.max(...ys))}`;
}

function renderIv(): void {
  const svg = clearSvg("iv-chart");
  const doc = document;
  const pts = state.ivPoints.filter(
    (p) => p.i_ss_a !== null && !hiddenBranches.has(p.branch));
  if (pts.length === 0) {
    svg.appendChild(el(doc, "text", { x: W / 2, y: H / 2, class: "empty" }))
      .textContent = "no I-V points yet";
    return;
  }
  const x = linearScale(extent(pts.map((p) => p.e_app_v)), [PAD, W - 8]);
  const y = linearScale(extent(pts.map((p) => p.i_ss_a as number)),
                        [H - PAD, 10]);
  for (const p of pts) {
    svg.appendChild(el(doc, "circle", {
      cx: x(p.e_app_v), cy: y(p.i_ss_a as number), r: 3,
      fill: branchColor(p.branch),
    }));
  }
}

function renderConductivity(): void {
  const svg = clearSvg("cond-chart");
  const doc = document;
  const pts = state.conductivity.filter((p) => !hiddenBranches.has(p.branch));
  if (pts.length === 0) {
    svg.appendChild(el(doc, "text", { x: W / 2, y: H / 2, class: "empty" }))
      .textContent = "no conductivity points yet";
    return;
  }
  const logs = pts.map((p) => Math.log10(p.sigma_s_per_m));
  const x = linearScale(extent(pts.map((p) => p.log10_a_o2)), [PAD, W - 8]);
  const y = linearScale(extent(logs), [H - PAD, 10]);
  for (const p of pts) {
    svg.appendChild(el(doc, "circle", {
      cx: x(p.log10_a_o2), cy: y(Math.log10(p.sigma_s_per_m)),
      r: p.repaired ? 4 : 2.5,
      fill: p.repaired ? "none" : branchColor(p.branch),
      stroke: branchColor(p.branch),
      class: p.repaired ? "repaired-point" : "",
    }));
  }
  for (const s of state.slopes) {
    if (hiddenBranches.has(s.branch)) continue;
    const seg = slopeSegment(s.slope, s.intercept, Math.log10(s.a_lo),
                             Math.log10(s.a_hi), x, y);
    svg.appendChild(el(doc, "line", { ...seg, class: "slope-overlay" }));
    svg.appendChild(el(doc, "text", {
      x: seg.x2 + 2, y: seg.y2, class: "slope-label",
    })).textContent = formatSlope(s.slope);
  }
}

function renderIvTable(): void {
  const tbody = $("iv-rows");
  tbody.innerHTML = "";
  for (const p of state.ivPoints) {
    const tr = document.createElement("tr");
    tr.innerHTML =
      `<td>${p.index}</td><td>${(p.e_app_v * 1000).toFixed(0)} mV</td>` +
      `<td>${formatAmps(p.i_ss_a)}</td><td>${p.branch}</td>` +
      `<td>${p.t_settled_s.toFixed(0)} s</td><td>${p.flags}</td>`;
    tbody.appendChild(tr);
  }
}

function renderStatus(): void {
  $("connection").textContent = state.connection;
  $("connection").className = `badge ${state.connection}`;
  $("phase").textContent = state.phase;
  const snap = state.snapshot;
  $("temps").textContent = snap && snap.t_cell_c !== undefined
    ? `cell ${snap.t_cell_c.toFixed(1)} C / oven ${snap.t_oven_c!.toFixed(1)} C`
    : "-";
  if (state.filterMargin !== null) {
    $("filter-margin").textContent =
      `${state.filterOk ? "ok" : "VIOLATED"} (margin ${state.filterMargin.toFixed(2)} s)`;
    $("filter-margin").className = state.filterOk ? "ok" : "bad";
  }
  if (state.lastParamsBoundary) {
    $("params-applied-at").textContent =
      `applied at t=${state.lastParamsBoundary.t_s.toFixed(1)} s ` +
      `(check boundary ${state.lastParamsBoundary.boundary_k_s} s)`;
  }
  const pending = state.pendingEdit;
  $("params-status").textContent = pending
    ? `${pending.status}${pending.error ? ": " + pending.error : ""}`
    : "";
  ($("retry-edit") as HTMLButtonElement).hidden =
    !(pending && pending.status === "failed");
}

function render(): void {
  renderStatus();
  renderTrace();
  renderIv();
  renderConductivity();
  renderIvTable();
}

// -- user actions ---------------------------------------------------------------

function readPatch(): Partial<SteadyParams> {
  const patch: Partial<SteadyParams> = {};
  const fields: (keyof SteadyParams)[] =
    ["np_s", "nw_s", "threshold_a", "nm_s", "timeout_s"];
  for (const key of fields) {
    const input = document.getElementById(`param-${key}`) as HTMLInputElement;
    if (input.value === "" || !state.params) continue;
    const value = Number(input.value);
    if (value !== state.params[key]) patch[key] = value;
  }
  return patch;
}

function showFieldErrors(errors: Record<string, string>): void {
  for (const field of ["np_s", "nw_s", "threshold_a", "nm_s", "timeout_s"]) {
    const span = $(`error-${field}`);
    span.textContent = errors[field] ?? "";
  }
}

async function submitEdit(): Promise<void> {
  if (!state.params) return;
  const patch = readPatch();
  if (Object.keys(patch).length === 0) return;
  const errors = validateParamsPatch(patch, state.params);
  showFieldErrors(errors);
  if (Object.keys(errors).length > 0) return; // no request sent
  state.pendingEdit = { patch, status: "queued" };
  render();
  try {
    await api.patchParams(patch);
    state.pendingEdit = { patch, status: "acknowledged" };
  } catch (err) {
    if (err instanceof ApiError && err.status === 422) {
      const body = err.body as { errors?: Record<string, string> };
      showFieldErrors(body.errors ?? {});
      state.pendingEdit = null; // server refused; no local change
    } else {
      state.pendingEdit = { patch, status: "failed",
                            error: "network failure" };
    }
  }
  render();
}

function wire(): void {
  $("start").addEventListener("click", () => {
    void api.startCampaign().catch(() => undefined).then(() => resync());
  });
  $("abort").addEventListener("click", () => {
    void api.abortCampaign().catch(() => undefined);
  });
  $("apply-params").addEventListener("click", () => void submitEdit());
  $("retry-edit").addEventListener("click", () => void submitEdit());
  ($("show-raw") as HTMLInputElement).addEventListener("change", (ev) => {
    showRaw = (ev.target as HTMLInputElement).checked;
    render();
  });
  for (const box of document.querySelectorAll<HTMLInputElement>(".branch-toggle")) {
    box.addEventListener("change", () => {
      if (box.checked) hiddenBranches.delete(box.value);
      else hiddenBranches.add(box.value);
      render();
    });
  }
}

wire();
connectStream();
void resync();
