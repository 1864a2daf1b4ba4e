// Outline view model and tree rendering.
//
// toOutlineView is a pure function of the artifact; the rendered tree is
// isomorphic to the artifact's outline (one node per theme, one leaf per
// retained subtopic, ordered by theme id then cluster id). Filtered clusters
// appear only in a separate drawer.

import type { ClusterDto, RunArtifactDto } from './types.js';

export interface SubtopicNode {
  clusterId: number;
  title: string;
  relatedness: number;
  docCount: number;
}

export interface ThemeNode {
  themeId: number;
  title: string;
  description: string;
  subtopics: SubtopicNode[];
}

export interface OutlineView {
  topic: string;
  themes: ThemeNode[];
  filtered: SubtopicNode[];
}

function subtopicNode(cluster: ClusterDto): SubtopicNode {
  return {
    clusterId: cluster.cluster_id,
    title: cluster.report?.subtopic_title ?? `cluster ${cluster.cluster_id}`,
    relatedness: cluster.report?.relatedness ?? 0,
    docCount: cluster.doc_ids.length,
  };
}

export function toOutlineView(artifact: RunArtifactDto): OutlineView {
  if (artifact.status !== 'DONE' || !artifact.outline) {
    throw new Error(`run ${artifact.run_id} is ${artifact.status}, not DONE`);
  }
  const clustersById = new Map(artifact.clusters.map((c) => [c.cluster_id, c]));
  const members = new Map<number, number[]>();
  for (const [clusterId, themeId] of Object.entries(artifact.outline.assignment)) {
    const list = members.get(themeId) ?? [];
    list.push(Number(clusterId));
    members.set(themeId, list);
  }
  const themes = [...artifact.outline.themes]
    .sort((a, b) => a.theme_id - b.theme_id)
    .map((theme) => ({
      themeId: theme.theme_id,
      title: theme.title,
      description: theme.description,
      subtopics: (members.get(theme.theme_id) ?? [])
        .sort((a, b) => a - b)
        .map((clusterId) => {
          const cluster = clustersById.get(clusterId);
          if (!cluster) throw new Error(`outline references unknown cluster ${clusterId}`);
          return subtopicNode(cluster);
        }),
    }));
  const filteredIds = new Set(artifact.filtered_cluster_ids);
  const filtered = artifact.clusters
    .filter((c) => filteredIds.has(c.cluster_id))
    .sort((a, b) => a.cluster_id - b.cluster_id)
    .map(subtopicNode);
  return { topic: artifact.config.topic, themes, filtered };
}

function subtopicItem(node: SubtopicNode, onSelect: (clusterId: number) => void): HTMLLIElement {
  const item = document.createElement('li');
  item.className = 'subtopic';
  item.dataset.clusterId = String(node.clusterId);

  const link = document.createElement('a');
  link.href = '#';
  link.className = 'subtopic-title';
  link.textContent = node.title;
  link.addEventListener('click', (event) => {
    event.preventDefault();
    onSelect(node.clusterId);
  });
  item.appendChild(link);

  const badge = document.createElement('span');
  badge.className = 'badge relatedness';
  badge.title = 'relatedness (1-5)';
  badge.textContent = `${node.relatedness}/5`;
  item.appendChild(badge);

  const count = document.createElement('span');
  count.className = 'badge doc-count';
  count.textContent = `${node.docCount} papers`;
  item.appendChild(count);
  return item;
}

export function renderError(artifact: RunArtifactDto, container: HTMLElement): void {
  container.replaceChildren();
  const banner = document.createElement('div');
  banner.className = 'error-banner';
  banner.textContent =
    `Run ${artifact.run_id} failed` +
    (artifact.failed_stage ? ` at stage '${artifact.failed_stage}'` : '') +
    (artifact.error ? `: ${artifact.error}` : '');
  container.appendChild(banner);
}

export function renderOutline(
  artifact: RunArtifactDto,
  container: HTMLElement,
  onSelect: (clusterId: number) => void,
): OutlineView {
  if (artifact.status === 'FAILED') {
    renderError(artifact, container);
    throw new Error(`cannot render FAILED run ${artifact.run_id}`);
  }
  const view = toOutlineView(artifact);
  container.replaceChildren();

  const heading = document.createElement('h2');
  heading.className = 'outline-topic';
  heading.textContent = view.topic;
  container.appendChild(heading);

  for (const theme of view.themes) {
    const details = document.createElement('details');
    details.className = 'theme';
    details.open = true;
    details.dataset.themeId = String(theme.themeId);

    const summary = document.createElement('summary');
    summary.textContent = theme.title;
    summary.title = theme.description;
    details.appendChild(summary);

    const list = document.createElement('ul');
    for (const node of theme.subtopics) {
      list.appendChild(subtopicItem(node, onSelect));
    }
    details.appendChild(list);
    container.appendChild(details);
  }

  if (view.filtered.length > 0) {
    const drawer = document.createElement('details');
    drawer.className = 'filtered-drawer';
    const summary = document.createElement('summary');
    summary.textContent = `Filtered clusters (${view.filtered.length})`;
    drawer.appendChild(summary);
    const list = document.createElement('ul');
    for (const node of view.filtered) {
      const item = document.createElement('li');
      item.className = 'subtopic filtered';
      item.dataset.clusterId = String(node.clusterId);
      item.textContent = `${node.title} (${node.docCount} papers)`;
      list.appendChild(item);
    }
    drawer.appendChild(list);
    container.appendChild(drawer);
  }
  return view;
}
