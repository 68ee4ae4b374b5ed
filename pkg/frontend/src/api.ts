// Thin typed client for the training service. Every call is a plain fetch;
// the client never post-processes numbers so that whatever the service
// serialized is what the UI shows.

import type {
  DatasetInfo,
  ExperimentConfig,
  JobView,
  ParameterCatalog,
  ParserOptions,
  Report,
  RunEvent,
} from "./types";

export interface UploadFile {
  name: string;
  text: string;
}

export interface RawReport {
  /** Raw response body, exactly as the service serialized it. */
  raw: string;
  report: Report;
}

export class ApiError extends Error {
  status: number;
  detail: string;

  constructor(status: number, detail: string) {
    super(`${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

async function raise(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

/**
 * Extract the raw JSON token for the top-level "mean" key from a report
 * body. The scanner walks the text once, tracking string/escape state and
 * brace depth, so nested keys (e.g. folds.mean, per-feature stats) are
 * ignored. Returning the untouched token is what lets the UI display the
 * mean exactly as the service wrote it, with no float round-trip.
 */
export function extractMeanToken(raw: string): string {
  let depth = 0;
  let inString = false;
  let escaped = false;
  let stringStart = -1;
  for (let i = 0; i < raw.length; i++) {
    const ch = raw[i];
    if (inString) {
      if (escaped) {
        escaped = false;
      } else if (ch === "\\") {
        escaped = true;
      } else if (ch === '"') {
        inString = false;
        if (depth === 1 && raw.slice(stringStart, i) === "mean") {
          let j = i + 1;
          while (j < raw.length && /\s/.test(raw[j])) j++;
          if (raw[j] !== ":") continue; // a string value, not a key
          j++;
          while (j < raw.length && /\s/.test(raw[j])) j++;
          let end = j;
          while (end < raw.length && !/[,}\s]/.test(raw[end])) end++;
          return raw.slice(j, end);
        }
      }
      continue;
    }
    if (ch === '"') {
      inString = true;
      escaped = false;
      stringStart = i + 1;
    } else if (ch === "{" || ch === "[") {
      depth++;
    } else if (ch === "}" || ch === "]") {
      depth--;
    }
  }
  throw new Error("report has no top-level mean");
}

/** Parse one NDJSON chunk; tolerates a trailing partial line by returning it. */
export function splitNdjson(buffer: string): { events: RunEvent[]; rest: string } {
  const events: RunEvent[] = [];
  const lines = buffer.split("\n");
  const rest = lines.pop() ?? "";
  for (const line of lines) {
    const trimmed = line.trim();
    if (trimmed) events.push(JSON.parse(trimmed) as RunEvent);
  }
  return { events, rest };
}

const CRLF = "\r\n";

/** Hand-rolled multipart body so uploads behave identically in the browser
 * and in node-based tests (no reliance on a host FormData implementation). */
export function multipartBody(
  boundary: string,
  fields: Record<string, string>,
  files: Record<string, UploadFile>,
): string {
  let body = "";
  for (const [name, value] of Object.entries(fields)) {
    body += `--${boundary}${CRLF}`;
    body += `Content-Disposition: form-data; name="${name}"${CRLF}${CRLF}`;
    body += `${value}${CRLF}`;
  }
  for (const [name, file] of Object.entries(files)) {
    body += `--${boundary}${CRLF}`;
    body += `Content-Disposition: form-data; name="${name}"; filename="${file.name}"${CRLF}`;
    body += `Content-Type: text/csv${CRLF}${CRLF}`;
    body += `${file.text}${CRLF}`;
  }
  body += `--${boundary}--${CRLF}`;
  return body;
}

export class Api {
  baseUrl: string;

  constructor(baseUrl = "") {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async uploadDataset(
    objects: UploadFile,
    orders: UploadFile | null,
    options: ParserOptions,
  ): Promise<DatasetInfo> {
    const boundary = `preflearn-${Math.random().toString(36).slice(2)}`;
    const files: Record<string, UploadFile> = { objects };
    if (orders) files.orders = orders;
    const body = multipartBody(boundary, { options: JSON.stringify(options) }, files);
    const response = await fetch(this.url("/datasets"), {
      method: "POST",
      headers: { "Content-Type": `multipart/form-data; boundary=${boundary}` },
      body,
    });
    if (!response.ok) await raise(response);
    return (await response.json()) as DatasetInfo;
  }

  async datasetStats(datasetId: string): Promise<DatasetInfo> {
    const response = await fetch(this.url(`/datasets/${datasetId}/stats`));
    if (!response.ok) await raise(response);
    return (await response.json()) as DatasetInfo;
  }

  async submitExperiment(config: ExperimentConfig): Promise<{ job_id: string }> {
    const response = await fetch(this.url("/experiments"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
    if (!response.ok) await raise(response);
    return (await response.json()) as { job_id: string };
  }

  async jobView(jobId: string): Promise<JobView> {
    const response = await fetch(this.url(`/experiments/${jobId}`));
    if (!response.ok) await raise(response);
    return (await response.json()) as JobView;
  }

  /** One long-poll turn of the event feed; returns every event with seq > since. */
  async fetchEvents(jobId: string, since: number): Promise<RunEvent[]> {
    const response = await fetch(this.url(`/experiments/${jobId}/events?since=${since}`));
    if (!response.ok) await raise(response);
    const text = await response.text();
    const { events, rest } = splitNdjson(text);
    if (rest.trim()) events.push(JSON.parse(rest) as RunEvent);
    return events;
  }

  /** Report body kept raw alongside the parsed document (see extractMeanToken). */
  async fetchReport(jobId: string): Promise<RawReport> {
    const response = await fetch(this.url(`/experiments/${jobId}/report`));
    if (!response.ok) await raise(response);
    const raw = await response.text();
    return { raw, report: JSON.parse(raw) as Report };
  }

  modelUrl(jobId: string): string {
    return this.url(`/experiments/${jobId}/model`);
  }

  async cancel(jobId: string): Promise<JobView> {
    const response = await fetch(this.url(`/experiments/${jobId}/cancel`), { method: "POST" });
    if (!response.ok) await raise(response);
    return (await response.json()) as JobView;
  }

  async parameterCatalog(): Promise<ParameterCatalog> {
    const response = await fetch(this.url("/meta/parameters"));
    if (!response.ok) await raise(response);
    return (await response.json()) as ParameterCatalog;
  }

  async version(): Promise<string> {
    const response = await fetch(this.url("/meta/version"));
    if (!response.ok) await raise(response);
    const body = (await response.json()) as { version: string };
    return body.version;
  }
}
