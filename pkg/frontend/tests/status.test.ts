import { describe, expect, it, vi } from "vitest";

import { renderStatusView } from "../src/views/status.js";
import type { StatusResponse } from "../src/types.js";

import statusDoneRaw from "../fixtures/status_done.json";
import statusFlaggedRaw from "../fixtures/status_flagged_done.json";

const statusDone = statusDoneRaw as unknown as StatusResponse;
const statusFlagged = statusFlaggedRaw as unknown as StatusResponse;

const handlers = () => ({ onRetry: vi.fn(), onOpenReport: vi.fn() });

describe("status view", () => {
  it("renders a fully green timeline for a done session", () => {
    const view = renderStatusView(statusDone, handlers());
    const stages = [...view.querySelectorAll(".timeline .stage")];
    expect(stages.length).toBe(4);
    expect(stages.every((s) => s.classList.contains("done"))).toBe(true);
    expect(view.querySelector(".open-report")).toBeTruthy();
  });

  it("shows indicator counters from the service payload", () => {
    const view = renderStatusView(statusDone, handlers());
    expect(view.querySelector(".progress")?.textContent).toBe(
      `indicators: ${statusDone.progress.indicators_done} / ` +
        `${statusDone.progress.indicators_total}`,
    );
  });

  it("badges sessions with flagged indicators", () => {
    const view = renderStatusView(statusFlagged, handlers());
    expect(view.querySelector(".flag-badge")?.textContent).toBe(
      `${statusFlagged.progress.indicators_flagged} flagged for review`,
    );
  });

  it("offers a retry that re-runs a failed session", () => {
    const failed: StatusResponse = {
      ...statusDone,
      state: "failed",
      failed_stage: "evaluating",
      failure_reason: "SessionEvalFailed: all hard-failed",
      stage_ms: { transcribing: 5, refining: 9 },
    };
    const h = handlers();
    const view = renderStatusView(failed, h);
    const stages = [...view.querySelectorAll(".timeline .stage")];
    expect(stages[2].classList.contains("failed")).toBe(true);
    expect(view.querySelector(".failure")?.textContent).toContain("evaluating");
    (view.querySelector(".retry") as HTMLButtonElement).click();
    expect(h.onRetry).toHaveBeenCalledOnce();
  });

  it("matches the done-status snapshot", () => {
    const view = renderStatusView(statusDone, handlers());
    // stage timings vary run to run; structure and counters are the contract
    for (const p of view.querySelectorAll(".timing")) p.remove();
    expect(view.innerHTML).toMatchSnapshot();
  });
});
