// Wizard state. A single store drives the five phases; navigation guards
// live here (not in the DOM layer) so they can be tested headlessly.

import type { RawReport } from "./api";
import type {
  DatasetInfo,
  ExperimentConfig,
  ParserOptions,
  PreprocessStep,
  RunEvent,
  Selection,
  Validation,
} from "./types";

export const PHASES = ["load", "preprocess", "features", "learning", "report"] as const;
export type Phase = (typeof PHASES)[number];

export const PHASE_LABELS: Record<Phase, string> = {
  load: "Load data",
  preprocess: "Preprocess",
  features: "Feature selection",
  learning: "Learning",
  report: "Report",
};

export interface Draft {
  options: ParserOptions;
  preprocess: PreprocessStep[];
  selection: Selection;
  learner: { kind: string } & Record<string, unknown>;
  validation: Validation;
  seed: number;
}

export interface RunState {
  jobId: string;
  state: "queued" | "running" | "done" | "failed" | "cancelled";
  phase: string | null;
  percent: number;
  console: RunEvent[];
  report: RawReport | null;
  error: string | null;
}

export interface WizardState {
  phase: Phase;
  dataset: DatasetInfo | null;
  draft: Draft;
  run: RunState | null;
  /** True when the draft changed after the last run finished. */
  stale: boolean;
  uploadError: string | null;
}

export function defaultDraft(): Draft {
  return {
    options: { has_header: true, higher_is_better: true },
    preprocess: [],
    selection: null,
    learner: { kind: "ranksvm" },
    validation: { mode: { kind: "kfold", k: 3, seed: 0 }, metric: "pairwise_accuracy" },
    seed: 0,
  };
}

export function initialState(): WizardState {
  return {
    phase: "load",
    dataset: null,
    draft: defaultDraft(),
    run: null,
    stale: false,
    uploadError: null,
  };
}

type Listener = (state: WizardState) => void;

export class Store {
  private state: WizardState;
  private listeners: Listener[] = [];

  constructor(state: WizardState = initialState()) {
    this.state = state;
  }

  get(): WizardState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    listener(this.state);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  update(patch: Partial<WizardState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of [...this.listeners]) listener(this.state);
  }
}

/** A phase is reachable once everything upstream of it exists. */
export function canEnter(phase: Phase, state: WizardState): boolean {
  switch (phase) {
    case "load":
      return true;
    case "preprocess":
    case "features":
    case "learning":
      return state.dataset !== null;
    case "report":
      return state.run !== null;
  }
}

export function gotoPhase(store: Store, phase: Phase): boolean {
  if (!canEnter(phase, store.get())) return false;
  store.update({ phase });
  return true;
}

export function setDataset(store: Store, dataset: DatasetInfo): void {
  // A new dataset invalidates everything downstream of the load phase.
  store.update({
    dataset,
    uploadError: null,
    draft: { ...store.get().draft, preprocess: [], selection: null },
    run: null,
    stale: false,
  });
}

/** Any draft edit after a finished run marks the report stale until rerun. */
export function editDraft(store: Store, patch: Partial<Draft>): void {
  const state = store.get();
  store.update({
    draft: { ...state.draft, ...patch },
    stale: state.run !== null,
  });
}

export function startRun(store: Store, jobId: string): void {
  store.update({
    run: {
      jobId,
      state: "queued",
      phase: null,
      percent: 0,
      console: [],
      report: null,
      error: null,
    },
    stale: false,
    phase: "report",
  });
}

export function applyEvent(store: Store, event: RunEvent): void {
  const run = store.get().run;
  if (!run) return;
  if (run.console.some((seen) => seen.seq === event.seq)) return;
  store.update({
    run: {
      ...run,
      state: event.state,
      phase: event.phase ?? run.phase,
      percent: event.percent ?? run.percent,
      console: [...run.console, event],
      error: event.error ?? run.error,
    },
  });
}

export function attachReport(store: Store, report: RawReport): void {
  const run = store.get().run;
  if (!run) return;
  store.update({ run: { ...run, report } });
}

/** Assemble the experiment document exactly as the service expects it. */
export function buildConfig(state: WizardState): ExperimentConfig {
  if (!state.dataset) throw new Error("no dataset loaded");
  return {
    dataset: {
      kind: "uploaded",
      dataset_id: state.dataset.dataset_id,
      options: state.draft.options,
    },
    learner: state.draft.learner,
    preprocess: state.draft.preprocess,
    selection: state.draft.selection,
    validation: state.draft.validation,
    seed: state.draft.seed,
  };
}
