// Five-phase wizard: Load data, Preprocess, Feature selection, Learning,
// Report. Each phase renders into the content pane; the nav exposes every
// phase but disables the ones whose prerequisites are missing. All training
// happens server-side — this layer only assembles the experiment document
// and renders what the service sends back.

import { Api, ApiError, extractMeanToken } from "./api";
import type { Watcher } from "./events";
import { watchJob } from "./events";
import { controlFor, getPath, setPath } from "./help";
import {
  PHASES,
  PHASE_LABELS,
  Store,
  applyEvent,
  attachReport,
  buildConfig,
  canEnter,
  editDraft,
  gotoPhase,
  setDataset,
  startRun,
} from "./state";
import type { Phase } from "./state";
import type {
  DatasetInfo,
  FeatureStats,
  ParameterCatalog,
  ParameterInfo,
  PreprocessStep,
  Selection,
} from "./types";

interface Ctx {
  api: Api;
  store: Store;
  catalog: ParameterCatalog;
  /** Follow a submitted job's event feed and attach its report when done. */
  watch: (jobId: string) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function button(label: string, onClick: () => void): HTMLButtonElement {
  const b = el("button", "", label);
  b.type = "button";
  b.addEventListener("click", onClick);
  return b;
}

function readFileText(file: File): Promise<string> {
  if (typeof file.text === "function") return file.text();
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve(String(reader.result));
    reader.onerror = () => reject(reader.error);
    reader.readAsText(file);
  });
}

// ------------------------------------------------------------------ load

// Parser options are dataset-plumbing rather than training parameters, so
// they are not part of the service catalog; the help texts mirror the file
// format documentation.
const PARSER_PARAMS: ParameterInfo[] = [
  {
    name: "separator",
    type: "string",
    default: ",",
    help: "Column separator of both files.",
  },
  {
    name: "has_header",
    type: "bool",
    default: true,
    help: "First line of the objects file names the columns (order files never have headers).",
  },
  {
    name: "skip_lines",
    type: "int",
    default: 0,
    help: "Lines to drop from the top of each file before parsing.",
    min: 0,
  },
  {
    name: "label_column",
    type: "string",
    default: null,
    help: "Single-file layout: column holding the rating that orders the objects.",
  },
  {
    name: "id_column",
    type: "string",
    default: null,
    help: "Column holding object ids; empty numbers the rows.",
  },
  {
    name: "group_column",
    type: "string",
    default: null,
    help: "Single-file layout: integer column separating independent rankings (one per user or query).",
  },
  {
    name: "higher_is_better",
    type: "bool",
    default: true,
    help: "Whether larger labels mean more preferred.",
  },
];

function statsCell(stats: FeatureStats | undefined): string {
  if (!stats) return "";
  if (stats.kind === "numeric") {
    return (
      `min ${stats.min}, max ${stats.max}, mean ${stats.mean.toFixed(4)}, ` +
      `std ${stats.std.toFixed(4)}, ${stats.distinct} distinct`
    );
  }
  const top = Object.entries(stats.frequencies)
    .sort((a, b) => b[1] - a[1])
    .slice(0, 4)
    .map(([value, count]) => `${value}: ${count}`)
    .join(", ");
  return `${stats.distinct} categories (${top})`;
}

function datasetCard(dataset: DatasetInfo): HTMLElement {
  const card = el("div", "dataset-card");
  card.appendChild(el("h3", "", `Dataset ${dataset.dataset_id}`));
  card.appendChild(
    el(
      "p",
      "counts",
      `${dataset.kind} · ${dataset.counts.objects} objects · ` +
        `${dataset.counts.orders} orders · ${dataset.counts.pairs} preference pairs`,
    ),
  );
  const table = el("table", "stats");
  const head = el("tr");
  for (const title of ["feature", "kind", "summary"]) head.appendChild(el("th", "", title));
  table.appendChild(head);
  for (const feature of dataset.schema) {
    const row = el("tr");
    row.appendChild(el("td", "", feature.name));
    row.appendChild(el("td", "", feature.kind));
    row.appendChild(el("td", "", statsCell(dataset.stats.features[feature.name])));
    table.appendChild(row);
  }
  card.appendChild(table);
  return card;
}

function renderLoad(container: HTMLElement, ctx: Ctx): void {
  const state = ctx.store.get();
  container.appendChild(el("h2", "", PHASE_LABELS.load));
  container.appendChild(
    el(
      "p",
      "phase-help",
      "Upload an objects file, plus an orders file when rankings live separately. " +
        "A single file needs a label column (and a group column when it holds several rankings).",
    ),
  );

  const form = el("div", "upload-form");
  const objectsInput = el("input");
  objectsInput.type = "file";
  objectsInput.id = "objects-file";
  const objectsLabel = el("label", "", "Objects file");
  objectsLabel.htmlFor = objectsInput.id;
  const ordersInput = el("input");
  ordersInput.type = "file";
  ordersInput.id = "orders-file";
  const ordersLabel = el("label", "", "Orders file (optional)");
  ordersLabel.htmlFor = ordersInput.id;
  form.append(objectsLabel, objectsInput, ordersLabel, ordersInput);

  for (const param of PARSER_PARAMS) {
    const value = getPath(state.draft.options as Record<string, unknown>, param.name);
    form.appendChild(
      controlFor(param, value, (v) => {
        editDraft(ctx.store, {
          options: { ...ctx.store.get().draft.options, [param.name]: v },
        });
      }).root,
    );
  }

  const errorBox = el("p", "error");
  errorBox.id = "upload-error";
  if (state.uploadError) errorBox.textContent = state.uploadError;

  const upload = button("Upload", async () => {
    const objectsFile = objectsInput.files && objectsInput.files[0];
    if (!objectsFile) {
      ctx.store.update({ uploadError: "choose an objects file first" });
      return;
    }
    const ordersFile = ordersInput.files && ordersInput.files[0];
    try {
      const objects = { name: objectsFile.name, text: await readFileText(objectsFile) };
      const orders = ordersFile
        ? { name: ordersFile.name, text: await readFileText(ordersFile) }
        : null;
      const info = await ctx.api.uploadDataset(objects, orders, ctx.store.get().draft.options);
      setDataset(ctx.store, info);
    } catch (err) {
      const message = err instanceof ApiError ? err.detail : String(err);
      ctx.store.update({ uploadError: message });
    }
  });
  upload.id = "upload-button";
  form.append(upload, errorBox);
  container.appendChild(form);

  if (state.dataset) container.appendChild(datasetCard(state.dataset));
}

// ------------------------------------------------------------- preprocess

function includeStep(steps: PreprocessStep[]): string[] | null {
  for (const step of steps) if (step.op === "include") return step.features;
  return null;
}

function transformOf(steps: PreprocessStep[], feature: string): PreprocessStep | null {
  for (const step of steps) {
    if (step.op !== "include" && step.feature === feature) return step;
  }
  return null;
}

function rebuildSteps(
  dataset: DatasetInfo,
  included: Set<string>,
  transforms: Map<string, PreprocessStep>,
): PreprocessStep[] {
  const steps: PreprocessStep[] = [];
  if (included.size < dataset.schema.length) {
    steps.push({
      op: "include",
      features: dataset.schema.map((f) => f.name).filter((n) => included.has(n)),
    });
  }
  for (const feature of dataset.schema) {
    const transform = transforms.get(feature.name);
    if (transform && included.has(feature.name)) steps.push(transform);
  }
  return steps;
}

function renderPreprocess(container: HTMLElement, ctx: Ctx): void {
  const state = ctx.store.get();
  const dataset = state.dataset!;
  container.appendChild(el("h2", "", PHASE_LABELS.preprocess));
  container.appendChild(
    el(
      "p",
      "phase-help",
      "Pick the features the learner sees and normalize or recode them. " +
        "Normalization statistics are fitted on each training split, never on held-out data.",
    ),
  );

  const opHelp = new Map(ctx.catalog.preprocess.steps.map((s) => [s.op, s]));
  const included = new Set(includeStep(state.draft.preprocess) ?? dataset.schema.map((f) => f.name));
  const transforms = new Map<string, PreprocessStep>();
  for (const feature of dataset.schema) {
    const t = transformOf(state.draft.preprocess, feature.name);
    if (t) transforms.set(feature.name, t);
  }

  const apply = () =>
    editDraft(ctx.store, { preprocess: rebuildSteps(dataset, included, transforms) });

  const table = el("table", "preprocess");
  const head = el("tr");
  for (const title of ["use", "feature", "statistics", "transform"]) {
    head.appendChild(el("th", "", title));
  }
  table.appendChild(head);

  for (const feature of dataset.schema) {
    const row = el("tr");

    const useCell = el("td");
    const box = el("input");
    box.type = "checkbox";
    box.checked = included.has(feature.name);
    box.dataset.feature = feature.name;
    box.addEventListener("change", () => {
      if (box.checked) included.add(feature.name);
      else included.delete(feature.name);
      apply();
    });
    useCell.appendChild(box);
    row.appendChild(useCell);

    row.appendChild(el("td", "", feature.name));
    row.appendChild(el("td", "", statsCell(dataset.stats.features[feature.name])));

    const transformCell = el("td");
    const select = el("select");
    select.dataset.feature = feature.name;
    const ops =
      feature.kind === "numeric"
        ? ["none", "min_max", "z_score", "numeric_to_nominal"]
        : ["none", "nominal_to_binary"];
    const current = transforms.get(feature.name);
    for (const op of ops) {
      const option = el("option", "", op === "none" ? "none" : opHelp.get(op)?.label ?? op);
      option.value = op;
      if (op === (current?.op ?? "none")) option.selected = true;
      if (op !== "none") option.title = opHelp.get(op)?.help ?? "";
      select.appendChild(option);
    }
    const bins = el("input");
    bins.type = "number";
    bins.min = "2";
    bins.value = String(current?.op === "numeric_to_nominal" ? current.bins : 5);
    bins.title = "Number of equal-width bins.";
    bins.style.display = current?.op === "numeric_to_nominal" ? "" : "none";
    const set = () => {
      const op = select.value;
      if (op === "none") transforms.delete(feature.name);
      else if (op === "numeric_to_nominal") {
        transforms.set(feature.name, {
          op,
          feature: feature.name,
          bins: Math.max(2, Number(bins.value) || 5),
        });
      } else {
        transforms.set(feature.name, { op, feature: feature.name } as PreprocessStep);
      }
      bins.style.display = op === "numeric_to_nominal" ? "" : "none";
      apply();
    };
    select.addEventListener("change", set);
    bins.addEventListener("change", set);
    transformCell.append(select, bins);
    row.appendChild(transformCell);
    table.appendChild(row);
  }
  container.appendChild(table);
}

// ------------------------------------------------------- feature selection

function renderFeatures(container: HTMLElement, ctx: Ctx): void {
  const state = ctx.store.get();
  container.appendChild(el("h2", "", PHASE_LABELS.features));
  container.appendChild(
    el(
      "p",
      "phase-help",
      "Optionally let a wrapper strategy pick a feature subset before training; " +
        "it scores candidate subsets with the same validation set-up as the final run.",
    ),
  );

  const kinds: { value: string; label: string; help: string }[] = [
    { value: "none", label: "No selection", help: "Train on every included feature." },
  ];
  for (const [value, section] of Object.entries(ctx.catalog.selection)) {
    kinds.push({ value, label: section.label, help: section.help });
  }

  const current = state.draft.selection;
  const field = el("div", "field");
  const label = el("label", "", "strategy");
  const select = el("select");
  select.id = "selection-kind";
  label.htmlFor = select.id;
  for (const kind of kinds) {
    const option = el("option", "", kind.label);
    option.value = kind.value;
    if (kind.value === (current?.kind ?? "none")) option.selected = true;
    select.appendChild(option);
  }
  const note = el("small", "help");
  note.textContent = kinds.find((k) => k.value === (current?.kind ?? "none"))?.help ?? "";
  select.addEventListener("change", () => {
    let selection: Selection = null;
    if (select.value === "n_best") selection = { kind: "n_best", n: 1 };
    if (select.value === "sfs") selection = { kind: "sfs", max_features: 1, min_improvement: 0.0 };
    editDraft(ctx.store, { selection });
  });
  field.append(label, select, note);
  container.appendChild(field);

  if (current) {
    const section = ctx.catalog.selection[current.kind];
    for (const param of section.parameters) {
      const value = getPath(current as unknown as Record<string, unknown>, param.name);
      container.appendChild(
        controlFor(param, value, (v) => {
          const next = setPath(
            ctx.store.get().draft.selection as unknown as Record<string, unknown>,
            param.name,
            v,
          ) as unknown as Selection;
          editDraft(ctx.store, { selection: next });
        }).root,
      );
    }
  }
}

// --------------------------------------------------------------- learning

function renderLearning(container: HTMLElement, ctx: Ctx): void {
  const state = ctx.store.get();
  container.appendChild(el("h2", "", PHASE_LABELS.learning));

  const learnerKind = state.draft.learner.kind;
  const section = ctx.catalog.learners[learnerKind];

  const field = el("div", "field");
  const label = el("label", "", "learner");
  const select = el("select");
  select.id = "learner-kind";
  label.htmlFor = select.id;
  for (const [value, info] of Object.entries(ctx.catalog.learners)) {
    const option = el("option", "", info.label);
    option.value = value;
    if (value === learnerKind) option.selected = true;
    select.appendChild(option);
  }
  select.addEventListener("change", () => {
    editDraft(ctx.store, { learner: { kind: select.value } });
  });
  const note = el("small", "help");
  note.textContent = section.help;
  field.append(label, select, note);
  container.appendChild(field);

  const params = el("div", "learner-params");
  for (const param of section.parameters) {
    const value = getPath(state.draft.learner, param.name);
    params.appendChild(
      controlFor(param, value, (v) => {
        editDraft(ctx.store, {
          learner: setPath(ctx.store.get().draft.learner, param.name, v) as {
            kind: string;
          } & Record<string, unknown>,
        });
      }).root,
    );
  }
  container.appendChild(params);

  container.appendChild(el("h3", "", "Validation"));
  const byName = new Map(ctx.catalog.validation.parameters.map((p) => [p.name, p]));
  const validation = state.draft.validation;

  const modeParam = byName.get("mode.kind")!;
  container.appendChild(
    controlFor(modeParam, validation.mode.kind, (v) => {
      const mode =
        v === "training_set"
          ? ({ kind: "training_set" } as const)
          : ({ kind: "kfold", k: 3, seed: 0 } as const);
      editDraft(ctx.store, { validation: { ...ctx.store.get().draft.validation, mode } });
    }).root,
  );
  if (validation.mode.kind === "kfold") {
    container.appendChild(
      controlFor(byName.get("mode.k")!, validation.mode.k, (v) => {
        const current = ctx.store.get().draft.validation;
        if (current.mode.kind !== "kfold") return;
        editDraft(ctx.store, {
          validation: { ...current, mode: { ...current.mode, k: Number(v) || 2 } },
        });
      }).root,
    );
    container.appendChild(
      controlFor(byName.get("mode.seed")!, validation.mode.seed, (v) => {
        const current = ctx.store.get().draft.validation;
        if (current.mode.kind !== "kfold") return;
        editDraft(ctx.store, {
          validation: {
            ...current,
            mode: { ...current.mode, seed: v === null ? null : Number(v) },
          },
        });
      }).root,
    );
  }
  container.appendChild(
    controlFor(byName.get("metric")!, validation.metric, (v) => {
      editDraft(ctx.store, {
        validation: {
          ...ctx.store.get().draft.validation,
          metric: v as "pairwise_accuracy" | "spearman_rho",
        },
      });
    }).root,
  );

  container.appendChild(el("h3", "", "Experiment"));
  for (const param of ctx.catalog.experiment.parameters) {
    container.appendChild(
      controlFor(param, getPath(state.draft as unknown as Record<string, unknown>, param.name), (v) => {
        editDraft(ctx.store, { seed: Number(v) || 0 });
      }).root,
    );
  }

  const errorBox = el("p", "error");
  errorBox.id = "submit-error";
  const start = button("Start training", async () => {
    errorBox.textContent = "";
    try {
      const config = buildConfig(ctx.store.get());
      const { job_id } = await ctx.api.submitExperiment(config);
      startRun(ctx.store, job_id);
      ctx.watch(job_id);
    } catch (err) {
      errorBox.textContent = err instanceof ApiError ? err.detail : String(err);
    }
  });
  start.id = "start-button";
  container.append(start, errorBox);
}

// ----------------------------------------------------------------- report

function consoleLine(event: { phase?: string; percent?: number; message?: string | null; state: string }): string {
  const phase = event.phase ?? event.state;
  const percent = event.percent === undefined ? "" : ` ${event.percent}%`;
  const message = event.message ? ` ${event.message}` : "";
  return `[${phase}]${percent}${message}`;
}

function renderReport(container: HTMLElement, ctx: Ctx): void {
  const state = ctx.store.get();
  const run = state.run!;
  container.appendChild(el("h2", "", PHASE_LABELS.report));

  if (state.stale) {
    const badge = el(
      "p",
      "stale-badge",
      "Configuration changed since this run — results below reflect the previous settings. Start a new run to refresh them.",
    );
    badge.id = "stale-badge";
    container.appendChild(badge);
  }

  const status = el("p", "run-status", `Job ${run.jobId} · ${run.state}`);
  status.id = "run-state";
  container.appendChild(status);

  const progressRow = el("div", "progress-row");
  const bar = el("progress") as HTMLProgressElement;
  bar.max = 100;
  bar.value = run.percent;
  progressRow.appendChild(bar);
  progressRow.appendChild(
    el("span", "progress-label", `${run.phase ?? "waiting"} · ${run.percent}%`),
  );
  container.appendChild(progressRow);

  if (run.state === "queued" || run.state === "running") {
    const cancel = button("Cancel", async () => {
      try {
        await ctx.api.cancel(run.jobId);
      } catch {
        // already terminal; the event feed will say so
      }
    });
    cancel.id = "cancel-button";
    container.appendChild(cancel);
  }

  const consoleBox = el("pre", "console");
  consoleBox.id = "run-console";
  consoleBox.textContent = run.console.map(consoleLine).join("\n");
  container.appendChild(consoleBox);

  if (run.error) container.appendChild(el("p", "error", run.error));

  if (run.report) {
    const { raw, report } = run.report;
    const summary = el("div", "report-summary");

    if (report.mean !== null) {
      const meanRow = el("p", "mean-row");
      meanRow.appendChild(
        el("span", "", `Mean ${report.config.validation.metric}: `),
      );
      const meanValue = el("strong");
      meanValue.id = "report-mean";
      // Shown exactly as serialized by the service; see extractMeanToken.
      meanValue.textContent = extractMeanToken(raw);
      meanRow.appendChild(meanValue);
      summary.appendChild(meanRow);
    }

    if (report.folds) {
      summary.appendChild(el("p", "", `Std over folds: ${report.folds.std}`));
      const table = el("table", "folds");
      table.id = "folds-table";
      const head = el("tr");
      for (const title of ["fold", report.config.validation.metric, "seconds"]) {
        head.appendChild(el("th", "", title));
      }
      table.appendChild(head);
      report.folds.values.forEach((value, i) => {
        const row = el("tr");
        row.appendChild(el("td", "", String(i + 1)));
        row.appendChild(el("td", "", String(value)));
        row.appendChild(el("td", "", report.folds!.durations_s[i].toFixed(2)));
        table.appendChild(row);
      });
      summary.appendChild(table);
    }

    if (report.selection) {
      summary.appendChild(
        el("p", "", `Selected features: ${report.selection.features.join(", ")}`),
      );
    }

    const phases = el("table", "phases");
    const head = el("tr");
    for (const title of ["phase", "summary", "seconds"]) head.appendChild(el("th", "", title));
    phases.appendChild(head);
    for (const phase of report.phases) {
      const row = el("tr");
      row.appendChild(el("td", "", phase.name));
      row.appendChild(el("td", "", phase.summary));
      row.appendChild(el("td", "", phase.duration_s.toFixed(2)));
      phases.appendChild(row);
    }
    summary.appendChild(phases);

    if (report.error) summary.appendChild(el("p", "error", report.error));

    const model = el("a", "model-link", "Download trained model");
    model.id = "model-link";
    model.href = ctx.api.modelUrl(run.jobId);
    model.setAttribute("download", `model-${run.jobId}.json`);
    summary.appendChild(model);

    container.appendChild(summary);
  }
}

// -------------------------------------------------------------------- nav

const VIEWS: Record<Phase, (container: HTMLElement, ctx: Ctx) => void> = {
  load: renderLoad,
  preprocess: renderPreprocess,
  features: renderFeatures,
  learning: renderLearning,
  report: renderReport,
};

export function mountWizard(
  root: HTMLElement,
  api: Api,
  catalog: ParameterCatalog,
  store: Store = new Store(),
): Store {
  const container = el("div", "wizard");
  const nav = el("nav", "wizard-nav");
  const content = el("section", "wizard-content");
  container.append(nav, content);
  root.appendChild(container);

  let watcher: Watcher | null = null;
  const ctx: Ctx = {
    api,
    store,
    catalog,
    watch: (jobId: string) => {
      watcher?.stop();
      watcher = watchJob(api, jobId, (event) => applyEvent(store, event));
      watcher.done.then(async (terminal) => {
        if (terminal !== "done") return;
        try {
          attachReport(store, await api.fetchReport(jobId));
        } catch {
          // report endpoint briefly 404s if polled between state flips; the
          // next sync retries via the job view
        }
      });
    },
  };

  function sync(): void {
    const state = store.get();
    nav.innerHTML = "";
    PHASES.forEach((phase, index) => {
      const b = el("button", "", `${index + 1}. ${PHASE_LABELS[phase]}`);
      b.type = "button";
      b.dataset.phase = phase;
      b.disabled = !canEnter(phase, state);
      if (phase === state.phase) b.classList.add("active");
      b.addEventListener("click", () => gotoPhase(store, phase));
      nav.appendChild(b);
    });

    content.innerHTML = "";
    VIEWS[state.phase](content, ctx);

    const index = PHASES.indexOf(state.phase);
    const next = PHASES[index + 1];
    if (next && state.phase !== "learning") {
      const forward = el("button", "continue", `Continue to ${PHASE_LABELS[next]}`);
      forward.type = "button";
      forward.dataset.next = next;
      forward.disabled = !canEnter(next, state);
      forward.addEventListener("click", () => gotoPhase(store, next));
      content.appendChild(forward);
    }
  }

  store.subscribe(sync);
  return store;
}
