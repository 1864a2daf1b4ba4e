// DTOs mirroring the run-API JSON payloads.

export interface DocumentRecord {
  id: string;
  title: string;
  abstract?: string;
  snippet?: string;
  url?: string;
  year?: number;
}

export interface SubtopicReportDto {
  cluster_id: number;
  description: string;
  subtopic_title: string;
  relatedness: number;
  is_related: 'RELATED' | 'NOT_RELATED';
  doc_ids: string[];
}

export interface ClusterDto {
  cluster_id: number;
  doc_ids: string[];
  report: SubtopicReportDto | null;
}

export interface ThemeDto {
  theme_id: number;
  title: string;
  description: string;
}

export interface OutlineDto {
  themes: ThemeDto[];
  // subtopic cluster id (as a string key) -> theme id
  assignment: Record<string, number>;
}

export interface ExpansionQueryDto {
  subtopic_title: string;
  terms: string[];
  justification: string;
  form: string;
  rendered: string;
}

export interface ExpansionDto {
  query: ExpansionQueryDto;
  doc_ids: string[];
  documents: DocumentRecord[];
  duplicates: string[];
}

export type RunStatus = 'PENDING' | 'RUNNING' | 'DONE' | 'FAILED';

export interface RunArtifactDto {
  schema_version: number;
  run_id: string;
  status: RunStatus;
  stage: string | null;
  failed_stage: string | null;
  error: string | null;
  config: { topic: string; [key: string]: unknown };
  corpus_summary: { doc_count?: number; topic?: string; query_string?: string };
  documents: DocumentRecord[];
  model_selection: { k: number; silhouette: number }[];
  selected_k: number | null;
  clusters: ClusterDto[];
  filtered_cluster_ids: number[];
  outline: OutlineDto | null;
  expansions: Record<string, ExpansionDto>;
  created_at: string;
  finished_at: string | null;
}

export interface RunSummaryDto {
  run_id: string;
  topic: string;
  status: string;
  created_at: string;
  doc_count: number;
  cluster_count: number;
}
