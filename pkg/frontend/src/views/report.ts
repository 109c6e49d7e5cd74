import { el, mmss } from "../dom.js";
import { highlightQuote } from "../highlight.js";
import type {
  AuditEntry,
  IndicatorEntry,
  ReportDoc,
  Segment,
  TranscriptDoc,
} from "../types.js";

export interface ReportHandlers {
  onOverride(indicatorId: string, newObserved: boolean, expertId: string,
             note: string): Promise<void>;
  onDownloadText(): void;
}

export function renderReportView(
  report: ReportDoc,
  transcript: TranscriptDoc,
  audit: AuditEntry[],
  handlers: ReportHandlers,
): HTMLElement {
  const segmentsById = new Map(transcript.segments.map((s) => [s.id, s]));

  const scaleSections: Node[] = [];
  for (const key of Object.keys(report.scales).sort()) {
    const scale = report.scales[key];
    const dims = el("ul", { class: "dimension-means" });
    for (const dim of Object.keys(scale.per_dimension).sort()) {
      dims.append(el("li", {}, [`${dim}: ${scale.per_dimension[dim].toFixed(2)}`]));
    }
    const items = scale.items.map((item) =>
      renderItem(item, segmentsById, handlers));
    scaleSections.push(el("section", { class: "scale" }, [
      el("h3", {}, [`${scale.scale} — overall ${scale.overall_mean.toFixed(2)}`]),
      dims,
      ...items,
    ]));
  }

  const flagsLine = report.flags.needs_expert_review > 0
    ? el("p", { class: "flag-badge" }, [
        `${report.flags.needs_expert_review} flagged for review`,
      ])
    : el("p", { class: "flags-clear" }, ["no indicators awaiting review"]);

  const download = el("button", { class: "download-text", type: "button" },
                      ["Download plain-text report"]);
  download.addEventListener("click", () => handlers.onDownloadText());

  return el("section", { class: "view report-view" }, [
    el("h2", {}, [`Report — session ${report.session_id}`]),
    flagsLine,
    download,
    el("div", { class: "panes" }, [
      el("div", { class: "report-pane" }, scaleSections),
      renderTranscriptPane(transcript.segments),
    ]),
    renderAuditTrail(audit),
  ]);
}

function renderItem(
  item: import("../types.js").ReportItem,
  segmentsById: Map<string, Segment>,
  handlers: ReportHandlers,
): HTMLElement {
  const headline = `${item.item_id} — ${item.title}: score ${item.score}`;
  const summary = el("summary", { class: "item-headline" }, [
    headline,
    ...(item.provisional
      ? [el("span", { class: "provisional-tag" }, ["provisional"])]
      : []),
  ]);
  const body: Node[] = [summary];
  for (const ind of item.indicators) {
    body.push(renderIndicator(ind, segmentsById, handlers));
  }
  return el("details", {
    class: `item${item.provisional ? " provisional" : ""}`,
    "data-item": item.item_id,
  }, body);
}

function renderIndicator(
  ind: IndicatorEntry,
  segmentsById: Map<string, Segment>,
  handlers: ReportHandlers,
): HTMLElement {
  const verdict = ind.needs_expert_review
    ? "needs expert review"
    : ind.observed
      ? "observed"
      : "not observed";
  const children: Node[] = [
    el("p", { class: "indicator-head" }, [
      el("strong", {}, [ind.indicator_id]),
      ` (level ${ind.level}) — `,
      el("span", { class: `verdict verdict-${ind.validation}` }, [verdict]),
      ...(ind.overridden_by
        ? [el("span", { class: "overridden-by" },
              [` overridden by ${ind.overridden_by}`])]
        : []),
    ]),
    el("p", { class: "indicator-description" }, [ind.description]),
  ];

  for (const ev of ind.evidence) {
    children.push(renderEvidence(ev, segmentsById));
  }
  if (ind.rationale) {
    children.push(el("p", { class: "rationale" }, [ind.rationale]));
  }
  if (ind.suggestion) {
    children.push(el("p", { class: "suggestion" }, [`suggestion: ${ind.suggestion}`]));
  }
  if (ind.needs_expert_review) {
    children.push(renderReviewPanel(ind, handlers));
  }

  return el("div", {
    class: `indicator${ind.needs_expert_review ? " flagged" : ""}`,
    "data-indicator": ind.indicator_id,
  }, children);
}

function renderEvidence(
  ev: import("../types.js").EvidenceRef,
  segmentsById: Map<string, Segment>,
): HTMLElement {
  const segment = segmentsById.get(ev.segment_id);
  if (!segment) {
    return el("blockquote", { class: "evidence missing-segment" }, [
      el("span", { class: "highlight-warning" },
         [`cited segment ${ev.segment_id} not in transcript`]),
      ` "${ev.quote}"`,
    ]);
  }
  const { nodes, matched } = highlightQuote(segment.text, ev.quote);
  const stamp = ev.start_ms !== null ? mmss(ev.start_ms) : mmss(segment.start_ms);
  const link = el("button", {
    class: "segment-link",
    type: "button",
    "data-segment": ev.segment_id,
  }, [`${ev.segment_id} @ ${stamp}`]);
  link.addEventListener("click", () => {
    const target = document.getElementById(`segment-${ev.segment_id}`);
    target?.scrollIntoView?.({ behavior: "smooth", block: "center" });
    target?.classList.add("pinged");
  });
  const quoteLine = el("span", { class: "evidence-text" }, []);
  for (const node of nodes) {
    quoteLine.append(node);
  }
  const children: Node[] = [link, quoteLine];
  if (!matched) {
    children.push(el("span", { class: "highlight-warning" }, [
      "quote does not match the segment verbatim",
    ]));
  }
  return el("blockquote", { class: "evidence" }, children);
}

function renderReviewPanel(
  ind: IndicatorEntry,
  handlers: ReportHandlers,
): HTMLElement {
  const expertInput = el("input", {
    type: "text",
    class: "expert-id",
    placeholder: "expert id",
  });
  const noteInput = el("input", {
    type: "text",
    class: "override-note",
    placeholder: "note (optional)",
  });
  const errorBox = el("span", { class: "review-error", hidden: "hidden" });

  const decide = async (observed: boolean) => {
    errorBox.hidden = true;
    try {
      await handlers.onOverride(ind.indicator_id, observed,
                                expertInput.value, noteInput.value);
    } catch (error) {
      errorBox.hidden = false;
      const detail = (error as { detail?: unknown }).detail ?? String(error);
      errorBox.textContent =
        typeof detail === "string" ? detail : JSON.stringify(detail);
    }
  };

  const confirm = el("button", { class: "confirm", type: "button" },
                     [`Confirm ${ind.observed ? "observed" : "not observed"}`]);
  confirm.addEventListener("click", () => void decide(ind.observed));
  const flip = el("button", { class: "override", type: "button" },
                  [`Override to ${ind.observed ? "not observed" : "observed"}`]);
  flip.addEventListener("click", () => void decide(!ind.observed));

  return el("div", { class: "review-panel" }, [
    el("span", { class: "review-label" }, ["expert review:"]),
    expertInput,
    noteInput,
    confirm,
    flip,
    errorBox,
  ]);
}

function renderTranscriptPane(segments: Segment[]): HTMLElement {
  const list = segments.map((segment) =>
    el("p", {
      class: `segment speaker-${segment.speaker}`,
      id: `segment-${segment.id}`,
    }, [
      el("span", { class: "segment-meta" },
         [`[${segment.id} | ${segment.speaker} | ${mmss(segment.start_ms)}] `]),
      segment.text,
    ]));
  return el("div", { class: "transcript-pane" }, [
    el("h3", {}, ["Transcript"]),
    ...list,
  ]);
}

function renderAuditTrail(audit: AuditEntry[]): HTMLElement {
  const overrides = audit.filter((entry) => entry.type === "override");
  if (overrides.length === 0) {
    return el("section", { class: "audit-trail empty" }, []);
  }
  const rows = overrides.map((entry) =>
    el("li", {}, [
      `${entry["indicator_id"]} set to ${
        entry["new_observed"] ? "observed" : "not observed"
      } by ${entry["expert_id"]}`,
      ...(entry["note"] ? [` — ${entry["note"]}`] : []),
    ]));
  return el("section", { class: "audit-trail" }, [
    el("h3", {}, ["Override history"]),
    el("ul", {}, rows),
  ]);
}
