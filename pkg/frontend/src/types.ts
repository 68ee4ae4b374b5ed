// JSON shapes returned by the training service. These mirror the documented
// HTTP API; the UI never computes metrics, it only renders these fields.

export interface FeatureInfo {
  name: string;
  kind: "numeric" | "nominal";
}

export interface NumericFeatureStats {
  kind: "numeric";
  min: number;
  max: number;
  mean: number;
  std: number;
  distinct: number;
}

export interface NominalFeatureStats {
  kind: "nominal";
  frequencies: Record<string, number>;
  distinct: number;
}

export type FeatureStats = NumericFeatureStats | NominalFeatureStats;

export interface DatasetInfo {
  dataset_id: string;
  kind: "single_file" | "dual_file";
  schema: FeatureInfo[];
  stats: { row_count: number; features: Record<string, FeatureStats> };
  counts: { objects: number; orders: number; pairs: number };
}

export type JobState = "queued" | "running" | "done" | "failed" | "cancelled";

export interface JobView {
  job_id: string;
  state: JobState;
  phase: string | null;
  percent: number;
  log: string[];
  error: string | null;
}

export interface RunEvent {
  seq: number;
  state: JobState;
  phase?: string;
  phase_index?: number;
  percent?: number;
  message?: string | null;
  error?: string | null;
}

export interface PhaseSummary {
  name: string;
  summary: string;
  details: Record<string, unknown>;
  duration_s: number;
}

export interface FoldBlock {
  values: number[];
  durations_s: number[];
  mean: number;
  std: number;
}

export interface SelectionBlock {
  features: string[];
  scores: number[];
  trace: { round: number; feature: string; score: number }[];
}

export interface Report {
  version: string;
  timestamp: string;
  status: "done" | "failed" | "cancelled";
  config: ExperimentConfig;
  phases: PhaseSummary[];
  selection: SelectionBlock | null;
  folds: FoldBlock | null;
  mean: number | null;
  error: string | null;
}

// ---- experiment config (the document POST /experiments accepts) ----

export interface ParserOptions {
  separator?: string;
  skip_lines?: number;
  has_header?: boolean;
  label_column?: string | null;
  id_column?: string | null;
  group_column?: string | null;
  higher_is_better?: boolean;
}

export type DatasetRef =
  | { kind: "uploaded"; dataset_id: string; options?: ParserOptions }
  | { kind: "synthetic"; spec: Record<string, unknown> };

export type PreprocessStep =
  | { op: "include"; features: string[] }
  | { op: "min_max"; feature: string }
  | { op: "z_score"; feature: string }
  | { op: "nominal_to_binary"; feature: string }
  | { op: "numeric_to_nominal"; feature: string; bins: number };

export type Selection =
  | { kind: "n_best"; n: number }
  | { kind: "sfs"; max_features: number; min_improvement: number }
  | null;

export interface Validation {
  mode: { kind: "kfold"; k: number; seed: number | null } | { kind: "training_set" };
  metric: "pairwise_accuracy" | "spearman_rho";
}

export interface ExperimentConfig {
  dataset: DatasetRef;
  learner: { kind: string } & Record<string, unknown>;
  preprocess: PreprocessStep[];
  selection: Selection;
  validation: Validation;
  seed: number;
}

// ---- parameter catalog served at /meta/parameters ----

export interface ParameterInfo {
  name: string;
  type: "int" | "float" | "bool" | "string" | "choice" | "int_list";
  default: unknown;
  help: string;
  min?: number;
  max?: number;
  choices?: string[];
}

export interface CatalogSection {
  label: string;
  help: string;
  parameters: ParameterInfo[];
}

export interface ParameterCatalog {
  version: string;
  learners: Record<string, CatalogSection>;
  selection: Record<string, CatalogSection>;
  validation: { parameters: ParameterInfo[] };
  preprocess: { steps: { op: string; label: string; help: string }[] };
  experiment: { parameters: ParameterInfo[] };
}
