// Wire types, field names exactly as the service serializes them.

export interface SteadyParams {
  np_s: number;
  nw_s: number;
  threshold_a: number;
  nm_s: number;
  timeout_s: number;
}

export interface SamplePayload {
  t_s: number;
  trace_t_s: number;
  raw_a: number;
  filtered_a: number;
  cell_temp_c: number;
  heater_on: number;
  e_app_v: number;
  phase: string;
}

export interface IVRow {
  index: number;
  e_app_v: number;
  i_ss_a: number | null;
  branch: string;
  t_settled_s: number;
  flags: string;
}

export interface DetectionPayload {
  t_s: number;
  index: number;
  e_app_v: number;
  k_s: number;
}

export interface ParamsEventPayload extends SteadyParams {
  t_s: number;
  boundary_k_s: number;
}

export interface CampaignSnapshot {
  phase: string;
  running: boolean;
  points_done: number;
  live_params?: SteadyParams;
  current_voltage?: number;
  sp_oven_c?: number;
  t_oven_c?: number;
  t_cell_c?: number;
  now_s?: number;
  filter_condition: { ok: boolean; margin_s: number };
}

export interface ConductivityRow {
  branch: string;
  e_mid_v: number;
  log10_a_o2: number;
  sigma_s_per_m: number;
  repaired: boolean;
}

export interface SlopeRow {
  branch: string;
  a_lo: number;
  a_hi: number;
  slope: number;
  intercept: number;
  n_points: number;
  rms_residual: number;
}

export interface ConductivityResponse {
  points: ConductivityRow[];
  slopes: SlopeRow[];
}

export type StreamEventName =
  | "sample"
  | "state"
  | "detection"
  | "iv_point"
  | "params"
  | "warning"
  | "done"
  | "aborted";
