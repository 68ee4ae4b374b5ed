import { afterEach, describe, expect, it, vi } from "vitest";

import {
  Api,
  ApiError,
  extractMeanToken,
  multipartBody,
  splitNdjson,
} from "../src/api";
import { isMonotone } from "../src/events";
import type { RunEvent } from "../src/types";

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("extractMeanToken", () => {
  it("returns the serialized token, not a re-formatted number", () => {
    // A mean of exactly 1 serializes as "1.0" on the service side; parsing
    // and re-stringifying in JS would print "1". The raw token must survive.
    const raw = '{"folds": {"mean": 0.5}, "mean": 1.0, "error": null}';
    expect(extractMeanToken(raw)).toBe("1.0");
  });

  it("ignores nested mean keys", () => {
    const raw = JSON.stringify({
      stats: { mean: 0.1 },
      folds: { values: [0.2], mean: 0.25 },
      mean: 0.9833333333333333,
    });
    expect(extractMeanToken(raw)).toBe("0.9833333333333333");
  });

  it("ignores 'mean' appearing as a string value or inside strings", () => {
    const raw = '{"note": "mean", "other": "the \\"mean\\" label", "mean": 0.75}';
    expect(extractMeanToken(raw)).toBe("0.75");
  });

  it("handles null means and whitespace around the colon", () => {
    expect(extractMeanToken('{"mean" :  null }')).toBe("null");
    expect(extractMeanToken('{\n  "mean": 0.5\n}')).toBe("0.5");
  });

  it("throws when there is no top-level mean", () => {
    expect(() => extractMeanToken('{"folds": {"mean": 0.5}}')).toThrow(/mean/);
  });
});

describe("splitNdjson", () => {
  it("parses complete lines and keeps the partial tail", () => {
    const { events, rest } = splitNdjson(
      '{"seq":0,"state":"running"}\n{"seq":1,"state":"running"}\n{"seq":2,"sta',
    );
    expect(events.map((e) => e.seq)).toEqual([0, 1]);
    expect(rest).toBe('{"seq":2,"sta');
  });

  it("skips blank lines", () => {
    const { events, rest } = splitNdjson('\n{"seq":0,"state":"done"}\n\n');
    expect(events).toHaveLength(1);
    expect(rest).toBe("");
  });
});

describe("multipartBody", () => {
  it("encodes fields and files with the boundary framing", () => {
    const body = multipartBody(
      "XYZ",
      { options: '{"has_header":true}' },
      { objects: { name: "items.csv", text: "id,f0\na,1\n" } },
    );
    expect(body).toContain('Content-Disposition: form-data; name="options"');
    expect(body).toContain('name="objects"; filename="items.csv"');
    expect(body).toContain("id,f0\na,1\n");
    expect(body.trimEnd().endsWith("--XYZ--")).toBe(true);
  });
});

describe("Api", () => {
  it("raises ApiError carrying the service detail", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () =>
        new Response(JSON.stringify({ detail: "objects file: line 2: bad row" }), {
          status: 400,
        }),
      ),
    );
    const api = new Api("http://service");
    await expect(
      api.uploadDataset({ name: "a.csv", text: "x" }, null, {}),
    ).rejects.toMatchObject({ status: 400, detail: "objects file: line 2: bad row" });
  });

  it("passes the since cursor to the events endpoint and parses NDJSON", async () => {
    const fetchMock = vi.fn(async (url: string) => {
      expect(url).toBe("http://service/experiments/j1/events?since=4");
      return new Response('{"seq":5,"state":"running","percent":10}\n{"seq":6,"state":"done"}\n');
    });
    vi.stubGlobal("fetch", fetchMock);
    const api = new Api("http://service");
    const events = await api.fetchEvents("j1", 4);
    expect(events.map((e) => e.seq)).toEqual([5, 6]);
    expect(fetchMock).toHaveBeenCalledTimes(1);
  });

  it("keeps the raw report body alongside the parsed document", async () => {
    const raw = '{"mean": 0.9750000000000001, "folds": {"mean": 0.97}}';
    vi.stubGlobal("fetch", vi.fn(async () => new Response(raw)));
    const api = new Api("");
    const { raw: got, report } = await api.fetchReport("j1");
    expect(got).toBe(raw);
    expect(report.mean).toBeCloseTo(0.975);
    expect(extractMeanToken(got)).toBe("0.9750000000000001");
  });

  it("builds model URLs under the experiment", () => {
    expect(new Api("http://h:9").modelUrl("abc")).toBe("http://h:9/experiments/abc/model");
  });

  it("wraps non-JSON error bodies in the status text", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => new Response("boom", { status: 500, statusText: "Internal Server Error" })),
    );
    const api = new Api("");
    await expect(api.jobView("nope")).rejects.toBeInstanceOf(ApiError);
  });
});

describe("isMonotone", () => {
  it("accepts non-decreasing (phase_index, percent) sequences", () => {
    const events: RunEvent[] = [
      { seq: 0, state: "running", phase_index: 0, percent: 0 },
      { seq: 1, state: "running", phase_index: 0, percent: 40 },
      { seq: 2, state: "running", phase_index: 1, percent: 40 },
      { seq: 3, state: "running", phase_index: 1, percent: 100 },
    ];
    expect(isMonotone(events)).toBe(true);
  });

  it("rejects a percent drop inside a phase", () => {
    const events: RunEvent[] = [
      { seq: 0, state: "running", phase_index: 1, percent: 50 },
      { seq: 1, state: "running", phase_index: 1, percent: 20 },
    ];
    expect(isMonotone(events)).toBe(false);
  });

  it("rejects a phase index going backwards", () => {
    const events: RunEvent[] = [
      { seq: 0, state: "running", phase_index: 2, percent: 10 },
      { seq: 1, state: "running", phase_index: 1, percent: 90 },
    ];
    expect(isMonotone(events)).toBe(false);
  });

  it("ignores terminal events without a phase index", () => {
    const events: RunEvent[] = [
      { seq: 0, state: "running", phase_index: 3, percent: 100 },
      { seq: 1, state: "done", percent: 100 },
    ];
    expect(isMonotone(events)).toBe(true);
  });
});
