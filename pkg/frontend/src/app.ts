// Dashboard wiring: space selection with live cardinality, run launch,
// cursor-polled monitor view with the sorted-latency chart, stop control.

import { ApiClient, ApiError } from "./api.js";
import { renderChartSvg } from "./chart.js";
import {
  baselineOf,
  buildChartModel,
  formatCardinality,
  formatConfiguration,
  formatSeconds,
  improvementPercent,
  incumbentOf,
  mergeTrials,
} from "./model.js";
import type { ParameterDoc, TrialRecord } from "./types.js";

const POLL_INTERVAL_MS = 500;
const TERMINAL_STATUSES = new Set(["stopped", "exhausted", "finished"]);

declare global {
  interface Window {
    MICROTUNE_API?: string;
  }
}

const api = new ApiClient(window.MICROTUNE_API ?? "");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

// --- space selection ---------------------------------------------------

interface SelectionState {
  file: string | null;
  parameters: ParameterDoc[];
  enabled: Set<string>;
}

const selection: SelectionState = { file: null, parameters: [], enabled: new Set() };

async function loadSpaces(): Promise<void> {
  const { spaces } = await api.listSpaces();
  const select = el<HTMLSelectElement>("space-select");
  select.innerHTML = "";
  for (const space of spaces) {
    const option = document.createElement("option");
    option.value = space.file;
    option.textContent = `${space.name} (${formatCardinality(space.cardinality)} configs)`;
    select.appendChild(option);
  }
  if (spaces.length > 0) {
    await selectSpace(spaces[0]!.file);
  }
  select.onchange = () => void selectSpace(select.value);
}

async function selectSpace(file: string): Promise<void> {
  const { space } = await api.getSpace(file);
  selection.file = file;
  selection.parameters = space.parameters;
  selection.enabled = new Set(
    space.parameters.filter((p) => p.enabled).map((p) => p.name),
  );
  renderParameterTable();
  await refreshCardinality();
}

function renderParameterTable(): void {
  const tbody = el<HTMLTableSectionElement>("parameter-rows");
  tbody.innerHTML = "";
  for (const param of selection.parameters) {
    const row = document.createElement("tr");

    const toggleCell = document.createElement("td");
    const toggle = document.createElement("input");
    toggle.type = "checkbox";
    toggle.checked = selection.enabled.has(param.name);
    toggle.onchange = () => {
      if (toggle.checked) {
        selection.enabled.add(param.name);
      } else {
        selection.enabled.delete(param.name);
      }
      void refreshCardinality();
    };
    toggleCell.appendChild(toggle);
    row.appendChild(toggleCell);

    for (const text of [
      param.name,
      param.kind,
      param.values.map(String).join(", "),
      String(param.default),
    ]) {
      const cell = document.createElement("td");
      cell.textContent = text;
      row.appendChild(cell);
    }
    tbody.appendChild(row);
  }
}

async function refreshCardinality(): Promise<void> {
  if (selection.file === null) {
    return;
  }
  // the readout is always the server's number for the same selection
  const cardinality = await api.cardinalityFor(selection.file, [...selection.enabled]);
  el("cardinality-readout").textContent = formatCardinality(cardinality);
  const budget = el<HTMLInputElement>("budget-input");
  budget.placeholder = `<= ${cardinality}`;
}

// --- launch -------------------------------------------------------------

function launchError(message: string | null): void {
  const box = el("launch-error");
  box.textContent = message ?? "";
  box.classList.toggle("hidden", message === null);
}

async function launchRun(): Promise<void> {
  if (selection.file === null) {
    return;
  }
  launchError(null);
  const strategyType = el<HTMLSelectElement>("strategy-select").value;
  const seed = Number(el<HTMLInputElement>("seed-input").value || "0");
  const budgetRaw = el<HTMLInputElement>("budget-input").value;
  const spec: Record<string, unknown> = {
    space: `spaces/${selection.file}.json`,
    enabled_parameters: [...selection.enabled],
    strategy: strategyType === "random" ? { type: "random", seed } : { type: "grid" },
    protocol: {
      requests: Number(el<HTMLInputElement>("requests-input").value || "50"),
      warmup: Number(el<HTMLInputElement>("warmup-input").value || "5"),
    },
    evaluator: {
      type: "sim",
      scenario: el<HTMLInputElement>("scenario-input").value || "scenarios/chain_demo.json",
      seed,
    },
  };
  if (budgetRaw) {
    spec.budget = Number(budgetRaw);
  }
  try {
    const handle = await api.createRun(spec);
    monitor.start(handle.run_id);
  } catch (err) {
    // 400/409 diagnostics surface verbatim
    launchError(err instanceof ApiError ? err.message : String(err));
  }
}

// --- monitor ------------------------------------------------------------

class Monitor {
  private runId: string | null = null;
  private trials: TrialRecord[] = [];
  private cursor = 0;
  private timer: number | null = null;
  private polling = false;

  start(runId: string): void {
    this.runId = runId;
    this.trials = [];
    this.cursor = 0;
    el("monitor-panel").classList.remove("hidden");
    el("run-id-label").textContent = runId;
    this.setBanner(null);
    if (this.timer !== null) {
      window.clearInterval(this.timer);
    }
    this.timer = window.setInterval(() => void this.poll(), POLL_INTERVAL_MS);
    void this.poll();
  }

  private setBanner(message: string | null): void {
    const banner = el("connection-banner");
    banner.textContent = message ?? "";
    banner.classList.toggle("hidden", message === null);
  }

  private async poll(): Promise<void> {
    if (this.runId === null || this.polling) {
      return; // one in-flight poll at a time
    }
    this.polling = true;
    try {
      const page = await api.listTrials(this.runId, this.cursor);
      this.trials = mergeTrials(this.trials, page.trials);
      this.cursor = page.cursor;
      const { run } = await api.getRun(this.runId);
      this.setBanner(null);
      this.render(run.status, run.progress.trials_done, run.progress.budget);
      if (TERMINAL_STATUSES.has(run.status) && page.trials.length === 0) {
        if (this.timer !== null) {
          window.clearInterval(this.timer);
          this.timer = null;
        }
      }
    } catch (err) {
      // degraded connection: keep the cursor, resume on the next tick
      this.setBanner(`connection degraded: ${err instanceof Error ? err.message : err}`);
    } finally {
      this.polling = false;
    }
  }

  private render(status: string, done: number, budget: number): void {
    const chip = el("status-chip");
    chip.textContent = status;
    chip.dataset.status = status;
    el("progress-label").textContent = `${done} / ${budget} trials`;

    const baseline = baselineOf(this.trials);
    const baselineMean = baseline?.stats?.mean_s ?? null;
    if (baselineMean !== null) {
      el("baseline-label").textContent = formatSeconds(baselineMean);
    }

    const model = buildChartModel(this.trials, baselineMean);
    el("chart-container").innerHTML = renderChartSvg(model);

    const best = incumbentOf(this.trials);
    const card = el("incumbent-card");
    if (best !== null && best.stats !== null) {
      card.classList.remove("hidden");
      el("incumbent-config").textContent =
        `#${best.config_index}: ${formatConfiguration(best.configuration)}`;
      el("incumbent-mean").textContent = formatSeconds(best.stats.mean_s);
      el("incumbent-improvement").textContent =
        baselineMean !== null
          ? `${improvementPercent(baselineMean, best.stats.mean_s).toFixed(4)}% vs baseline`
          : "";
    } else {
      card.classList.add("hidden");
    }
  }

  async stop(): Promise<void> {
    if (this.runId === null) {
      return;
    }
    try {
      await api.stopRun(this.runId); // idempotent server-side
    } catch (err) {
      this.setBanner(`stop failed, retry: ${err instanceof Error ? err.message : err}`);
    }
  }
}

const monitor = new Monitor();

// --- boot ---------------------------------------------------------------

window.addEventListener("DOMContentLoaded", () => {
  el<HTMLButtonElement>("launch-button").onclick = () => void launchRun();
  el<HTMLButtonElement>("stop-button").onclick = () => void monitor.stop();
  loadSpaces().catch((err) => launchError(`cannot reach server: ${err}`));
});
