// Live progress feed. The service exposes an NDJSON long-poll endpoint
// (?since=<seq> blocks until newer events exist or the job ends); repeating
// that call with the last seen cursor is both the live stream and the
// fallback polling path — there is no separate mechanism to degrade to.

import type { Api } from "./api";
import type { JobState, RunEvent } from "./types";

const TERMINAL: JobState[] = ["done", "failed", "cancelled"];
const RETRY_DELAY_MS = 500;
// The service blocks empty polls server-side, but a proxy (or a test stub)
// may answer immediately; pausing between empty batches keeps this loop from
// hammering the endpoint either way.
const EMPTY_POLL_DELAY_MS = 150;

export interface Watcher {
  /** Resolves with the terminal state once the job ends. */
  done: Promise<JobState>;
  stop: () => void;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export function watchJob(
  api: Api,
  jobId: string,
  onEvent: (event: RunEvent) => void,
): Watcher {
  let stopped = false;

  const done = (async (): Promise<JobState> => {
    let since = -1;
    while (!stopped) {
      let events: RunEvent[];
      try {
        events = await api.fetchEvents(jobId, since);
      } catch {
        await sleep(RETRY_DELAY_MS); // transient network error; retry with same cursor
        continue;
      }
      let terminal: JobState | null = null;
      for (const event of events) {
        if (event.seq > since) since = event.seq;
        onEvent(event);
        if (TERMINAL.includes(event.state)) terminal = event.state;
      }
      if (terminal) return terminal;
      // An empty body means the long poll timed out; pause briefly, ask again.
      if (events.length === 0) await sleep(EMPTY_POLL_DELAY_MS);
    }
    return "cancelled";
  })();

  return {
    done,
    stop: () => {
      stopped = true;
    },
  };
}

/** True when (phase_index, percent) never decreases lexicographically. */
export function isMonotone(events: RunEvent[]): boolean {
  const keyed = events.filter((e) => e.phase_index !== undefined);
  for (let i = 1; i < keyed.length; i++) {
    const prev = keyed[i - 1];
    const cur = keyed[i];
    const prevKey: [number, number] = [prev.phase_index ?? 0, prev.percent ?? 0];
    const curKey: [number, number] = [cur.phase_index ?? 0, cur.percent ?? 0];
    if (
      curKey[0] < prevKey[0] ||
      (curKey[0] === prevKey[0] && curKey[1] < prevKey[1])
    ) {
      return false;
    }
  }
  return true;
}
