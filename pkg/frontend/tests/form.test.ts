import { beforeEach, describe, expect, it, vi } from 'vitest';

import { ApiError } from '../src/api.js';
import { createRunForm } from '../src/form.js';
import type { RunArtifactDto } from '../src/types.js';
import artifactJson from '../fixtures/artifact.json';

const artifact = artifactJson as unknown as RunArtifactDto;

function fillAndSubmit(form: HTMLFormElement): void {
  form.querySelector<HTMLInputElement>('input[name=topic]')!.value = 'tool use in animals';
  form.dispatchEvent(new Event('submit', { cancelable: true }));
}

describe('createRunForm', () => {
  let container: HTMLDivElement;

  beforeEach(() => {
    container = document.createElement('div');
    document.body.replaceChildren(container);
  });

  it('submits, polls to DONE, and reports progress stages', async () => {
    const create = vi.fn().mockResolvedValue({ run_id: 'run-demo' });
    const updates = [
      { ...artifact, status: 'PENDING' as const, stage: null },
      { ...artifact, status: 'RUNNING' as const, stage: 'read_clusters' },
      { ...artifact, status: 'DONE' as const, stage: null },
    ];
    const poll = vi.fn().mockImplementation(async (_runId, options) => {
      for (const update of updates) options?.onUpdate?.(update);
      return updates[updates.length - 1];
    });
    const finished = vi.fn();
    const form = createRunForm(container, finished, { create, poll, intervalMs: 1 });

    fillAndSubmit(form);
    await vi.waitFor(() => expect(finished).toHaveBeenCalledTimes(1));

    expect(create).toHaveBeenCalledWith({ topic: 'tool use in animals', llm_mode: 'replay' });
    expect(poll).toHaveBeenCalledWith('run-demo', expect.objectContaining({ intervalMs: 1 }));
    expect(container.querySelector('.run-progress')!.textContent).toBe('Run run-demo: DONE');
    expect(finished.mock.calls[0][0].status).toBe('DONE');
  });

  it('surfaces API validation errors verbatim', async () => {
    const create = vi.fn().mockRejectedValue(new ApiError('REPLAY mode requires a transcript path', 400));
    const form = createRunForm(container, vi.fn(), { create, poll: vi.fn(), intervalMs: 1 });
    fillAndSubmit(form);
    await vi.waitFor(() => {
      expect(container.querySelector('.run-progress')!.textContent).toBe(
        'Error: REPLAY mode requires a transcript path',
      );
    });
    expect(form.querySelector<HTMLButtonElement>('button[type=submit]')!.disabled).toBe(false);
  });

  it('reports a failed run with its failing stage', async () => {
    const failed = { ...artifact, status: 'FAILED' as const, failed_stage: 'embed' };
    const create = vi.fn().mockResolvedValue({ run_id: 'run-x' });
    const poll = vi.fn().mockResolvedValue(failed);
    const finished = vi.fn();
    const form = createRunForm(container, finished, { create, poll, intervalMs: 1 });
    fillAndSubmit(form);
    await vi.waitFor(() => expect(finished).toHaveBeenCalled());
    expect(container.querySelector('.run-progress')!.textContent).toBe('Run run-x: FAILED at embed');
  });

  it('server down: the poller error reaches the progress line', async () => {
    const create = vi.fn().mockResolvedValue({ run_id: 'run-x' });
    const poll = vi.fn().mockRejectedValue(new ApiError('network error: offline'));
    const form = createRunForm(container, vi.fn(), { create, poll, intervalMs: 1 });
    fillAndSubmit(form);
    await vi.waitFor(() => {
      expect(container.querySelector('.run-progress')!.textContent).toContain('network error');
    });
  });
});
