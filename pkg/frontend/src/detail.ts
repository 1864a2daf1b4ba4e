// Subtopic detail pane: description, member papers, and expansion trigger.
//
// The expand button is disabled while a request is in flight so a double
// click issues exactly one POST; it is absent entirely for filtered
// clusters. An API error surfaces as an inline message and leaves the
// previously rendered state untouched.

import { expandCluster } from './api.js';
import type { DocumentRecord, ExpansionDto, RunArtifactDto } from './types.js';

export interface DetailDeps {
  expand: typeof expandCluster;
  expansionK: number;
}

const DEFAULT_DEPS: DetailDeps = { expand: expandCluster, expansionK: 100 };

function paperItem(doc: DocumentRecord, duplicate = false): HTMLLIElement {
  const item = document.createElement('li');
  item.className = duplicate ? 'paper duplicate' : 'paper';
  if (doc.url) {
    const link = document.createElement('a');
    link.href = doc.url;
    link.target = '_blank';
    link.rel = 'noopener';
    link.textContent = doc.title;
    item.appendChild(link);
  } else {
    item.textContent = doc.title;
  }
  if (duplicate) {
    const tag = document.createElement('span');
    tag.className = 'badge duplicate-tag';
    tag.textContent = 'already in cluster';
    item.appendChild(tag);
  }
  return item;
}

function renderExpansion(expansion: ExpansionDto, container: HTMLElement): void {
  container.replaceChildren();

  const query = document.createElement('p');
  query.className = 'expansion-query';
  query.textContent = expansion.query.rendered;
  container.appendChild(query);

  const duplicates = new Set(expansion.duplicates);
  const list = document.createElement('ol');
  list.className = 'expansion-results';
  for (const doc of expansion.documents) {
    list.appendChild(paperItem(doc, duplicates.has(doc.id)));
  }
  container.appendChild(list);
}

export function renderDetail(
  artifact: RunArtifactDto,
  clusterId: number,
  container: HTMLElement,
  deps: Partial<DetailDeps> = {},
): void {
  const { expand, expansionK } = { ...DEFAULT_DEPS, ...deps };
  const cluster = artifact.clusters.find((c) => c.cluster_id === clusterId);
  if (!cluster) throw new Error(`unknown cluster ${clusterId}`);
  const filtered = artifact.filtered_cluster_ids.includes(clusterId);
  const docsById = new Map(artifact.documents.map((d) => [d.id, d]));

  container.replaceChildren();

  const heading = document.createElement('h2');
  heading.textContent = cluster.report?.subtopic_title ?? `Cluster ${clusterId}`;
  container.appendChild(heading);

  if (cluster.report) {
    const meta = document.createElement('p');
    meta.className = 'subtopic-meta';
    meta.textContent =
      `relatedness ${cluster.report.relatedness}/5 - ` +
      `${cluster.doc_ids.length} papers` +
      (filtered ? ' - filtered out' : '');
    container.appendChild(meta);

    const description = document.createElement('p');
    description.className = 'subtopic-description';
    description.textContent = cluster.report.description;
    container.appendChild(description);
  }

  const papersHeading = document.createElement('h3');
  papersHeading.textContent = 'Papers';
  container.appendChild(papersHeading);
  const papers = document.createElement('ul');
  papers.className = 'paper-list';
  for (const docId of cluster.doc_ids) {
    const doc = docsById.get(docId);
    papers.appendChild(paperItem(doc ?? { id: docId, title: docId }));
  }
  container.appendChild(papers);

  const expansionHeading = document.createElement('h3');
  expansionHeading.textContent = 'Expansion';
  container.appendChild(expansionHeading);

  const message = document.createElement('p');
  message.className = 'expansion-message';
  const results = document.createElement('div');
  results.className = 'expansion-pane';

  if (filtered) {
    // Filtered subtopics cannot be expanded; the action is not offered.
    message.textContent = 'This cluster was filtered as unrelated; expansion is unavailable.';
    container.appendChild(message);
    return;
  }

  const button = document.createElement('button');
  button.className = 'expand-button';
  button.textContent = `Expand (${expansionK} papers)`;
  let inFlight = false;
  button.addEventListener('click', async () => {
    if (inFlight) return;
    inFlight = true;
    button.disabled = true;
    message.textContent = 'Expanding...';
    try {
      const expansion = await expand(artifact.run_id, clusterId, expansionK);
      renderExpansion(expansion, results);
      message.textContent = `Retrieved ${expansion.doc_ids.length} papers.`;
    } catch (err) {
      message.textContent = `Expansion failed: ${err instanceof Error ? err.message : err}`;
    } finally {
      inFlight = false;
      button.disabled = false;
    }
  });
  container.appendChild(button);
  container.appendChild(message);
  container.appendChild(results);

  const existing = artifact.expansions[String(clusterId)];
  if (existing) {
    renderExpansion(existing, results);
    message.textContent = `Retrieved ${existing.doc_ids.length} papers (stored).`;
  }
}
