// Thin fetch wrapper over the run API. The base URL is the single piece of
// client configuration.

import type { ExpansionDto, RunArtifactDto, RunSummaryDto } from './types.js';

let baseUrl = '';

export function setApiBase(url: string): void {
  baseUrl = url.replace(/\/+$/, '');
}

export function apiBase(): string {
  return baseUrl;
}

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
    this.name = 'ApiError';
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(`${baseUrl}${path}`, init);
  } catch (err) {
    throw new ApiError(`network error: ${err instanceof Error ? err.message : err}`);
  }
  let body: unknown = null;
  try {
    body = await resp.json();
  } catch {
    // non-JSON body; fall through to the status check
  }
  if (!resp.ok) {
    const detail = (body as { error?: string } | null)?.error;
    throw new ApiError(detail ?? `HTTP ${resp.status}`, resp.status);
  }
  return body as T;
}

export function health(): Promise<{ status: string }> {
  return request('/api/health');
}

export function listRuns(): Promise<RunSummaryDto[]> {
  return request('/api/runs');
}

export function getRun(runId: string): Promise<RunArtifactDto> {
  return request(`/api/runs/${encodeURIComponent(runId)}`);
}

export function createRun(config: Record<string, unknown>): Promise<{ run_id: string }> {
  return request('/api/runs', {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(config),
  });
}

export function expandCluster(
  runId: string,
  clusterId: number,
  k: number,
): Promise<ExpansionDto & { cluster_id: number }> {
  return request(`/api/runs/${encodeURIComponent(runId)}/clusters/${clusterId}/expand`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({ k }),
  });
}
