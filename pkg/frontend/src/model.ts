// Pure view-model logic. Everything here is a function of API responses;
// the dashboard never invents numbers of its own beyond sorting/formatting.

import type { TrialRecord } from "./types.js";

/** Merge a cursor page into the trial list; duplicates by trial_id are dropped. */
export function mergeTrials(existing: TrialRecord[], page: TrialRecord[]): TrialRecord[] {
  const seen = new Set(existing.map((t) => t.trial_id));
  const merged = existing.slice();
  for (const trial of page) {
    if (!seen.has(trial.trial_id)) {
      seen.add(trial.trial_id);
      merged.push(trial);
    }
  }
  merged.sort((a, b) => a.trial_id - b.trial_id);
  return merged;
}

export interface ChartPoint {
  rank: number;
  mean: number;
  configIndex: number;
  trialId: number;
}

export interface ChartModel {
  points: ChartPoint[];
  incompleteCount: number;
  baselineMean: number | null;
  yMin: number;
  yMax: number;
}

/**
 * The sorted-latency chart model: complete candidate trials ascending by mean
 * (ties by trial_id), incomplete ones counted as the trailing shaded segment.
 * The baseline trial is the horizontal marker, never part of the curve.
 */
export function buildChartModel(
  trials: TrialRecord[],
  baselineMean: number | null,
): ChartModel {
  const candidates = trials.filter((t) => !t.baseline);
  const complete = candidates
    .filter((t) => t.status === "complete" && t.stats !== null)
    .sort((a, b) => a.stats!.mean_s - b.stats!.mean_s || a.trial_id - b.trial_id);
  const points = complete.map((t, i) => ({
    rank: i + 1,
    mean: t.stats!.mean_s,
    configIndex: t.config_index,
    trialId: t.trial_id,
  }));
  const means = points.map((p) => p.mean);
  if (baselineMean !== null) {
    means.push(baselineMean);
  }
  const yMin = means.length ? Math.min(...means) : 0;
  const yMax = means.length ? Math.max(...means) : 1;
  return {
    points,
    incompleteCount: candidates.length - complete.length,
    baselineMean,
    yMin,
    yMax,
  };
}

export function baselineOf(trials: TrialRecord[]): TrialRecord | null {
  return trials.find((t) => t.baseline) ?? null;
}

/** Best complete candidate (minimal mean, earliest trial on ties). */
export function incumbentOf(trials: TrialRecord[]): TrialRecord | null {
  let best: TrialRecord | null = null;
  for (const trial of trials) {
    if (trial.baseline || trial.status !== "complete" || trial.stats === null) {
      continue;
    }
    if (
      best === null ||
      trial.stats.mean_s < best.stats!.mean_s ||
      (trial.stats.mean_s === best.stats!.mean_s && trial.trial_id < best.trial_id)
    ) {
      best = trial;
    }
  }
  return best;
}

export function improvementPercent(baselineMean: number, bestMean: number): number {
  return (100 * (baselineMean - bestMean)) / baselineMean;
}

/** 177147 -> "177,147" */
export function formatCardinality(n: number): string {
  return n.toLocaleString("en-US");
}

export function formatSeconds(v: number): string {
  return `${v.toFixed(6)} s`;
}

export function formatConfiguration(configuration: Record<string, unknown>): string {
  return Object.entries(configuration)
    .map(([k, v]) => `${k}=${v}`)
    .join(" ");
}
