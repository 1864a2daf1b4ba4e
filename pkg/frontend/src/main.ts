// Application entry point: runs list on the left, outline tree in the
// middle, subtopic detail on the right.

import { getRun, health, listRuns, setApiBase } from './api.js';
import { renderDetail } from './detail.js';
import { createRunForm } from './form.js';
import { renderError, renderOutline } from './outline.js';
import type { RunArtifactDto } from './types.js';

declare global {
  interface Window {
    KNAV_API_BASE?: string;
  }
}

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

let currentArtifact: RunArtifactDto | null = null;

function showArtifact(artifact: RunArtifactDto): void {
  currentArtifact = artifact;
  const tree = el('outline');
  const detail = el('detail');
  detail.replaceChildren();
  if (artifact.status === 'FAILED') {
    renderError(artifact, tree);
    return;
  }
  if (artifact.status !== 'DONE') {
    tree.textContent = `Run ${artifact.run_id} is ${artifact.status}...`;
    return;
  }
  renderOutline(artifact, tree, (clusterId) => {
    if (currentArtifact) renderDetail(currentArtifact, clusterId, detail);
  });
}

async function refreshRuns(): Promise<void> {
  const listing = el('runs');
  try {
    const runs = await listRuns();
    listing.replaceChildren();
    for (const run of runs.slice().reverse()) {
      const item = document.createElement('li');
      const link = document.createElement('a');
      link.href = '#';
      link.textContent = `${run.topic} [${run.status}]`;
      link.addEventListener('click', async (event) => {
        event.preventDefault();
        showArtifact(await getRun(run.run_id));
      });
      item.appendChild(link);
      listing.appendChild(item);
    }
  } catch (err) {
    listing.textContent = `Could not list runs: ${err instanceof Error ? err.message : err}`;
  }
}

async function boot(): Promise<void> {
  setApiBase(window.KNAV_API_BASE ?? '');
  const status = el('api-status');
  try {
    await health();
    status.textContent = 'API: ok';
  } catch {
    status.textContent = 'API: unreachable';
  }
  createRunForm(el('form-slot'), (artifact) => {
    void refreshRuns();
    showArtifact(artifact);
  });
  await refreshRuns();
}

document.addEventListener('DOMContentLoaded', () => {
  void boot();
});
