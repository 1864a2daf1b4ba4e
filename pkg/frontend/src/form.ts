// Create-run form: submit a config, then poll until the run finishes,
// surfacing the pipeline stage as it progresses.

import { createRun } from './api.js';
import { pollRun } from './poll.js';
import type { RunArtifactDto } from './types.js';

export interface FormDeps {
  create: typeof createRun;
  poll: typeof pollRun;
  intervalMs: number;
}

const DEFAULT_DEPS: FormDeps = { create: createRun, poll: pollRun, intervalMs: 1000 };

export function createRunForm(
  container: HTMLElement,
  onFinished: (artifact: RunArtifactDto) => void,
  deps: Partial<FormDeps> = {},
): HTMLFormElement {
  const { create, poll, intervalMs } = { ...DEFAULT_DEPS, ...deps };

  const form = document.createElement('form');
  form.className = 'run-form';
  form.innerHTML = `
    <label>Topic <input name="topic" required placeholder="tool use in animals"></label>
    <label>Corpus file <input name="corpus_path" placeholder="fixtures/tool_use_in_animals/corpus.jsonl"></label>
    <label>LLM mode
      <select name="llm_mode">
        <option value="replay">replay</option>
        <option value="record">record</option>
        <option value="live">live</option>
      </select>
    </label>
    <label>Transcript <input name="transcript_path" placeholder="fixtures/tool_use_in_animals/transcript.jsonl"></label>
    <button type="submit">Start run</button>
    <p class="run-progress" role="status"></p>
  `;
  const progress = form.querySelector<HTMLParagraphElement>('.run-progress')!;
  const submit = form.querySelector<HTMLButtonElement>('button[type=submit]')!;

  form.addEventListener('submit', async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const config: Record<string, unknown> = { topic: data.get('topic') };
    for (const key of ['corpus_path', 'llm_mode', 'transcript_path']) {
      const value = data.get(key);
      if (value) config[key] = value;
    }
    submit.disabled = true;
    progress.textContent = 'Submitting...';
    try {
      const { run_id } = await create(config);
      progress.textContent = `Run ${run_id}: submitted`;
      const artifact = await poll(run_id, {
        intervalMs,
        onUpdate: (update) => {
          const stage = update.stage ? ` (${update.stage})` : '';
          progress.textContent = `Run ${run_id}: ${update.status}${stage}`;
        },
      });
      progress.textContent =
        artifact.status === 'DONE'
          ? `Run ${run_id}: DONE`
          : `Run ${run_id}: FAILED at ${artifact.failed_stage ?? 'unknown stage'}`;
      onFinished(artifact);
    } catch (err) {
      // Validation errors from the API are shown verbatim; network loss ends
      // up here too, after the poller's retries are exhausted.
      progress.textContent = `Error: ${err instanceof Error ? err.message : err}`;
    } finally {
      submit.disabled = false;
    }
  });

  container.appendChild(form);
  return form;
}
