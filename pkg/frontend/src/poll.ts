import type { StatusResponse } from "./types.js";

export interface PollOptions {
  intervalMs?: number;
  maxBackoffMs?: number;
}

const TERMINAL = new Set(["done", "failed"]);

// Poll the status endpoint every two seconds, stop on a terminal state,
// and back off exponentially while the service is unreachable.
export function pollStatus(
  fetchStatus: () => Promise<StatusResponse>,
  onUpdate: (status: StatusResponse) => void,
  onError: (error: unknown) => void = () => undefined,
  options: PollOptions = {},
): () => void {
  const interval = options.intervalMs ?? 2000;
  const maxBackoff = options.maxBackoffMs ?? 30000;
  let delay = interval;
  let timer: ReturnType<typeof setTimeout> | null = null;
  let cancelled = false;

  const tick = async () => {
    if (cancelled) {
      return;
    }
    try {
      const status = await fetchStatus();
      delay = interval;
      onUpdate(status);
      if (TERMINAL.has(status.state)) {
        return;
      }
    } catch (error) {
      onError(error);
      delay = Math.min(delay * 2, maxBackoff);
    }
    if (!cancelled) {
      timer = setTimeout(tick, delay);
    }
  };

  void tick();
  return () => {
    cancelled = true;
    if (timer !== null) {
      clearTimeout(timer);
    }
  };
}
