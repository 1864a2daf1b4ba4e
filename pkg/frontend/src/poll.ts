// Poll a run until it reaches DONE or FAILED. Transient network errors are
// retried with exponential backoff and surfaced only after repeated failures.

import { getRun } from './api.js';
import type { RunArtifactDto } from './types.js';

export interface PollOptions {
  intervalMs?: number;
  maxFailures?: number;
  onUpdate?: (artifact: RunArtifactDto) => void;
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export async function pollRun(runId: string, options: PollOptions = {}): Promise<RunArtifactDto> {
  const interval = options.intervalMs ?? 1000;
  const maxFailures = options.maxFailures ?? 3;
  let consecutiveFailures = 0;
  for (;;) {
    try {
      const artifact = await getRun(runId);
      consecutiveFailures = 0;
      options.onUpdate?.(artifact);
      if (artifact.status === 'DONE' || artifact.status === 'FAILED') {
        return artifact;
      }
    } catch (err) {
      consecutiveFailures += 1;
      if (consecutiveFailures >= maxFailures) {
        throw err;
      }
      await sleep(interval * 2 ** consecutiveFailures);
      continue;
    }
    await sleep(interval);
  }
}
