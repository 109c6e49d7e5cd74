// Mirrors of the service's /api/v1 JSON schemas. The console performs no
// scoring math: every number rendered comes from one of these payloads.

export type JobStateName =
  | "created"
  | "queued"
  | "transcribing"
  | "refining"
  | "evaluating"
  | "scoring"
  | "done"
  | "failed";

export interface Progress {
  indicators_done: number;
  indicators_flagged: number;
  indicators_total: number | null;
}

export interface StatusResponse {
  session_id: string;
  state: JobStateName;
  failed_stage: string | null;
  failure_reason: string | null;
  transitions: { state: string; at_ms: number }[];
  stage_ms: Record<string, number>;
  retry_count: Record<string, number>;
  progress: Progress;
}

export interface EvidenceRef {
  segment_id: string;
  quote: string;
  start_ms: number | null;
  end_ms: number | null;
}

export interface IndicatorEntry {
  indicator_id: string;
  level: number;
  description: string;
  observed: boolean;
  validation: string;
  needs_expert_review: boolean;
  evidence: EvidenceRef[];
  rationale: string;
  suggestion: string | null;
  overridden_by: string | null;
}

export interface ReportItem {
  item_id: string;
  title: string;
  dimension: string;
  score: number;
  satisfied_levels: number[];
  next_level_fraction: number;
  provisional: boolean;
  indicators: IndicatorEntry[];
}

export interface ScaleReport {
  scale: string;
  rubric_version: string;
  items: ReportItem[];
  per_dimension: Record<string, number>;
  overall_mean: number;
}

export interface EfficiencyBlock {
  traditional_min: Record<string, number>;
  automated_observed_min: Record<string, number>;
  speedup: number | null;
  speedup_label: string | null;
  note?: string;
}

export interface ReportDoc {
  session_id: string;
  transcript_provenance: string;
  scales: Record<string, ScaleReport>;
  flags: { needs_expert_review: number; overridden: number };
  efficiency: EfficiencyBlock;
}

export interface Segment {
  id: string;
  speaker: string;
  start_ms: number;
  end_ms: number;
  text: string;
}

export interface TranscriptDoc {
  session_id: string;
  provenance: string;
  segments: Segment[];
  source_meta?: Record<string, string>;
}

export interface SessionSummary {
  session_id: string;
  state: JobStateName;
}

export interface AuditEntry {
  type: string;
  at_ms: number;
  [key: string]: unknown;
}

export interface OverrideRequest {
  new_observed: boolean;
  expert_id: string;
  note?: string;
}

export interface RunOptions {
  rubrics?: string[];
  llm?: Record<string, unknown>;
  asr?: Record<string, unknown>;
}
