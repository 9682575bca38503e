// Dashboard state: everything rendered comes from API responses and stream
// events; nothing is recomputed from raw physics on the client.

import type {
  CampaignSnapshot,
  ConductivityRow,
  DetectionPayload,
  IVRow,
  ParamsEventPayload,
  SamplePayload,
  SlopeRow,
  SteadyParams,
} from "./types.js";

export type Connection = "connecting" | "live" | "stale";

export interface PendingEdit {
  patch: Partial<SteadyParams>;
  status: "queued" | "acknowledged" | "failed";
  error?: string;
}

export class DashboardState {
  connection: Connection = "connecting";
  phase = "idle";
  samples: SamplePayload[] = [];
  ivPoints: IVRow[] = [];
  conductivity: ConductivityRow[] = [];
  slopes: SlopeRow[] = [];
  detections: DetectionPayload[] = [];
  params: SteadyParams | null = null;
  lastParamsBoundary: ParamsEventPayload | null = null;
  pendingEdit: PendingEdit | null = null;
  filterMargin: number | null = null;
  filterOk: boolean | null = null;
  snapshot: CampaignSnapshot | null = null;
  terminal: "done" | "aborted" | null = null;

  constructor(readonly bufferSize = 600) {}

  applyEvent(name: string, payload: unknown): void {
    switch (name) {
      case "sample": {
        this.samples.push(payload as SamplePayload);
        if (this.samples.length > this.bufferSize) {
          this.samples.splice(0, this.samples.length - this.bufferSize);
        }
        break;
      }
      case "state": {
        this.phase = (payload as { phase: string }).phase;
        break;
      }
      case "detection": {
        this.detections.push(payload as DetectionPayload);
        break;
      }
      case "iv_point": {
        const row = payload as IVRow;
        const at = this.ivPoints.findIndex((p) => p.index === row.index);
        if (at >= 0) this.ivPoints[at] = row;
        else this.ivPoints.push(row);
        break;
      }
      case "params": {
        const ev = payload as ParamsEventPayload;
        this.lastParamsBoundary = ev;
        this.params = {
          np_s: ev.np_s,
          nw_s: ev.nw_s,
          threshold_a: ev.threshold_a,
          nm_s: ev.nm_s,
          timeout_s: ev.timeout_s,
        };
        if (this.pendingEdit && this.pendingEdit.status === "acknowledged") {
          this.pendingEdit = null; // now live on the server
        }
        break;
      }
      case "done":
      case "aborted": {
        this.terminal = name;
        this.phase = name;
        break;
      }
      default:
        break; // warnings and future events are display-only elsewhere
    }
  }

  // Server snapshots are authoritative: a reload or reconnect that resyncs
  // through these produces the identical display.
  resyncSnapshot(snap: CampaignSnapshot): void {
    this.snapshot = snap;
    this.phase = snap.phase;
    if (snap.live_params) this.params = snap.live_params;
    this.filterOk = snap.filter_condition.ok;
    this.filterMargin = snap.filter_condition.margin_s;
    if (snap.phase === "done" || snap.phase === "aborted") {
      this.terminal = snap.phase;
    }
  }

  resyncIv(rows: IVRow[]): void {
    this.ivPoints = rows.slice();
  }

  resyncConductivity(points: ConductivityRow[], slopes: SlopeRow[]): void {
    this.conductivity = points.slice();
    this.slopes = slopes.slice();
  }

  resyncTrace(samples: SamplePayload[]): void {
    this.samples = samples.slice(-this.bufferSize);
  }

  markStale(): void {
    this.connection = "stale";
  }

  markLive(): void {
    this.connection = "live";
  }
}

// Mirrors the server-side SteadyStateParams invariants so obviously bad
// edits never leave the form; the server remains the authority on 422.
export function validateParamsPatch(
  patch: Partial<SteadyParams>,
  current: SteadyParams,
): Record<string, string> {
  const merged = { ...current, ...patch };
  const errors: Record<string, string> = {};
  if (!Number.isInteger(merged.np_s) || merged.np_s < 1) {
    errors.np_s = "must be an integer >= 1";
  }
  if (!Number.isInteger(merged.nw_s) || merged.nw_s < 1) {
    errors.nw_s = "must be an integer >= 1";
  }
  if (!(merged.threshold_a > 0)) {
    errors.threshold_a = "must be > 0";
  }
  if (!Number.isInteger(merged.nm_s) || merged.nm_s < 1) {
    errors.nm_s = "must be an integer >= 1";
  }
  if (!(merged.timeout_s > merged.np_s + merged.nw_s)) {
    errors.timeout_s = "must exceed np_s + nw_s";
  }
  return errors;
}
