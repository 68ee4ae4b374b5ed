// Form controls generated from the service's parameter catalog. Labels,
// help sentences, defaults and ranges all come from /meta/parameters so the
// UI never hard-codes training knowledge.

import type { ParameterInfo } from "./types";

/** "kernel.gamma" reads doc.kernel.gamma; missing segments yield undefined. */
export function getPath(doc: Record<string, unknown>, path: string): unknown {
  let cur: unknown = doc;
  for (const part of path.split(".")) {
    if (cur === null || typeof cur !== "object") return undefined;
    cur = (cur as Record<string, unknown>)[part];
  }
  return cur;
}

/** Immutable set along a dotted path, creating intermediate objects. */
export function setPath(
  doc: Record<string, unknown>,
  path: string,
  value: unknown,
): Record<string, unknown> {
  const parts = path.split(".");
  const out = { ...doc };
  let cur = out;
  for (const part of parts.slice(0, -1)) {
    const next = cur[part];
    cur[part] =
      next !== null && typeof next === "object" ? { ...(next as object) } : {};
    cur = cur[part] as Record<string, unknown>;
  }
  cur[parts[parts.length - 1]] = value;
  return out;
}

export function formatValue(value: unknown): string {
  if (value === null || value === undefined) return "empty";
  if (Array.isArray(value)) return value.join(", ");
  return String(value);
}

/** One-line "default / range" note rendered under every control. */
export function describeParameter(p: ParameterInfo): string {
  const parts = [`default: ${formatValue(p.default)}`];
  if (p.choices) parts.push(`one of: ${p.choices.join(", ")}`);
  if (p.min !== undefined && p.max !== undefined) {
    parts.push(`range: ${p.min} to ${p.max}`);
  } else if (p.min !== undefined) {
    parts.push(`minimum: ${p.min}`);
  } else if (p.max !== undefined) {
    parts.push(`maximum: ${p.max}`);
  }
  return parts.join(" · ");
}

/** Turn a raw input string back into the catalog's value type. */
export function parseValue(p: ParameterInfo, text: string): unknown {
  const trimmed = text.trim();
  if (trimmed === "") return null;
  switch (p.type) {
    case "int": {
      const n = Number(trimmed);
      return Number.isFinite(n) ? Math.trunc(n) : null;
    }
    case "float": {
      const n = Number(trimmed);
      return Number.isFinite(n) ? n : null;
    }
    case "int_list":
      return trimmed
        .split(",")
        .map((part) => Math.trunc(Number(part.trim())))
        .filter((n) => Number.isFinite(n));
    case "bool":
      return trimmed === "true";
    default:
      return trimmed;
  }
}

export interface ControlHandle {
  root: HTMLElement;
  input: HTMLInputElement | HTMLSelectElement;
}

/** Labelled control with inline help; reports edits through onChange. */
export function controlFor(
  p: ParameterInfo,
  value: unknown,
  onChange: (value: unknown) => void,
): ControlHandle {
  const root = document.createElement("div");
  root.className = "field";
  root.dataset.param = p.name;

  const label = document.createElement("label");
  label.textContent = p.name;
  root.appendChild(label);

  let input: HTMLInputElement | HTMLSelectElement;
  if (p.type === "choice") {
    const select = document.createElement("select");
    for (const choice of p.choices ?? []) {
      const option = document.createElement("option");
      option.value = choice;
      option.textContent = choice;
      if (choice === (value ?? p.default)) option.selected = true;
      select.appendChild(option);
    }
    select.addEventListener("change", () => onChange(select.value));
    input = select;
  } else if (p.type === "bool") {
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = Boolean(value ?? p.default);
    box.addEventListener("change", () => onChange(box.checked));
    input = box;
  } else {
    const text = document.createElement("input");
    text.type = "text";
    const current = value === undefined ? p.default : value;
    text.value = current === null || current === undefined ? "" : formatValue(current);
    text.placeholder = formatValue(p.default);
    text.addEventListener("change", () => onChange(parseValue(p, text.value)));
    input = text;
  }
  input.id = `param-${p.name.replace(/\./g, "-")}`;
  label.htmlFor = input.id;
  root.appendChild(input);

  const note = document.createElement("small");
  note.className = "help";
  note.textContent = `${p.help} (${describeParameter(p)})`;
  root.appendChild(note);

  return { root, input };
}
