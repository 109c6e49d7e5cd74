import { el } from "../dom.js";
import type { StatusResponse } from "../types.js";

const STAGES = ["transcribing", "refining", "evaluating", "scoring"] as const;

export interface StatusHandlers {
  onRetry(): void;
  onOpenReport(): void;
}

function stageClass(stage: string, status: StatusResponse): string {
  if (status.state === "failed" && status.failed_stage === stage) {
    return "stage failed";
  }
  if (stage in status.stage_ms) {
    return "stage done";
  }
  if (status.state === stage) {
    return "stage active";
  }
  return "stage pending";
}

export function renderStatusView(
  status: StatusResponse,
  handlers: StatusHandlers,
): HTMLElement {
  const timeline = el("ol", { class: "timeline" });
  for (const stage of STAGES) {
    timeline.append(el("li", { class: stageClass(stage, status) }, [stage]));
  }

  const children: (Node | string)[] = [
    el("h2", {}, [`Session ${status.session_id}`]),
    el("p", { class: `state state-${status.state}` }, [`state: ${status.state}`]),
    timeline,
  ];

  const progress = status.progress;
  if (progress.indicators_total !== null) {
    children.push(el("p", { class: "progress" }, [
      `indicators: ${progress.indicators_done} / ${progress.indicators_total}`,
    ]));
  }
  if (progress.indicators_flagged > 0) {
    children.push(el("p", { class: "flag-badge" }, [
      `${progress.indicators_flagged} flagged for review`,
    ]));
  }

  if (status.state === "failed") {
    children.push(el("p", { class: "failure" }, [
      `failed at ${status.failed_stage}: ${status.failure_reason ?? "unknown"}`,
    ]));
    const retry = el("button", { class: "retry", type: "button" }, ["Retry"]);
    retry.addEventListener("click", () => handlers.onRetry());
    children.push(retry);
  }

  if (status.state === "done") {
    const open = el("button", { class: "open-report", type: "button" },
                    ["Open report"]);
    open.addEventListener("click", () => handlers.onOpenReport());
    children.push(open);
  }

  return el("section", { class: "view status-view" }, children);
}
