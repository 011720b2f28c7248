// Wire types mirroring the control-plane JSON documents.

export type TrialStatus = "complete" | "incomplete";

export interface TrialStats {
  mean_s: number;
  min_s: number;
  max_s: number;
  count: number;
}

export interface TrialRecord {
  kind?: string;
  trial_id: number;
  baseline: boolean;
  config_index: number;
  configuration: Record<string, unknown>;
  status: TrialStatus;
  reason: string | null;
  stats: TrialStats | null;
  started_at: string;
  finished_at: string;
  elapsed_s: number;
}

export interface RunProgress {
  trials_done: number;
  budget: number;
}

export interface IncumbentSummary {
  config_index: number;
  configuration: Record<string, unknown>;
  mean_s: number;
  improvement_percent?: number;
}

export interface RunHandle {
  run_id: string;
  status: string;
  progress: RunProgress;
  incumbent: IncumbentSummary | null;
  stop_cause: string | null;
}

export interface RunReportDoc {
  run_id: string;
  baseline_mean_s: number;
  improvement_percent: number | null;
  counts: { complete: number; incomplete: number };
  best: { config_index: number; configuration: Record<string, unknown>; mean_s: number } | null;
}

export interface SpaceSummary {
  file: string;
  name: string;
  parameters: number;
  cardinality: number;
}

export interface RenderRuleDoc {
  target: string;
  template?: string | null;
  on_template?: string | null;
  off_template?: string | null;
}

export interface ParameterDoc {
  name: string;
  kind: string;
  values: unknown[];
  default: unknown;
  enabled: boolean;
  render: RenderRuleDoc;
}

export interface SpaceDoc {
  name: string;
  parameters: ParameterDoc[];
}

export interface TrialsPage {
  trials: TrialRecord[];
  cursor: number;
}
