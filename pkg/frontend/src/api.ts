// Thin client over the service API. Every user action in the dashboard maps
// to exactly one of these calls.

import type {
  CampaignSnapshot,
  ConductivityResponse,
  IVRow,
  SamplePayload,
  SteadyParams,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, readonly body: unknown) {
    super(`API error ${status}`);
  }
}

async function request<T>(base: string, method: string, path: string,
                          body?: unknown): Promise<T> {
  const res = await fetch(base + path, {
    method,
    headers: body !== undefined ? { "Content-Type": "application/json" } : {},
    body: body !== undefined ? JSON.stringify(body) : undefined,
  });
  const text = await res.text();
  const parsed = text ? JSON.parse(text) : null;
  if (!res.ok) throw new ApiError(res.status, parsed);
  return parsed as T;
}

export class ApiClient {
  constructor(readonly base = "") {}

  getCampaign(): Promise<CampaignSnapshot> {
    return request(this.base, "GET", "/api/campaign");
  }

  getParams(): Promise<SteadyParams> {
    return request(this.base, "GET", "/api/params");
  }

  patchParams(patch: Partial<SteadyParams>):
      Promise<{ accepted: boolean; pending: SteadyParams;
                applied: SteadyParams }> {
    return request(this.base, "PATCH", "/api/params", patch);
  }

  getIv(): Promise<IVRow[]> {
    return request(this.base, "GET", "/api/iv");
  }

  getConductivity(): Promise<ConductivityResponse> {
    return request(this.base, "GET", "/api/conductivity");
  }

  getTrace(): Promise<SamplePayload[]> {
    return request(this.base, "GET", "/api/trace/current");
  }

  startCampaign(): Promise<{ started: boolean }> {
    return request(this.base, "POST", "/api/campaign");
  }

  abortCampaign(): Promise<{ aborting: boolean }> {
    return request(this.base, "POST", "/api/campaign/abort");
  }
}
