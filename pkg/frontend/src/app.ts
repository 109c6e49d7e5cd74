import { ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import { pollStatus } from "./poll.js";
import { renderReportView } from "./views/report.js";
import { renderStatusView } from "./views/status.js";
import { renderUploadView } from "./views/upload.js";

// Hash routes: #/ (upload), #/sessions (list), #/sessions/{id} (status),
// #/sessions/{id}/report.

export function startApp(root: HTMLElement, client: ApiClient): () => void {
  let cancelPoll: (() => void) | null = null;
  let routedHash: string | null = null;

  const navigate = (hash: string) => {
    window.location.hash = hash;
  };

  const route = async () => {
    if (cancelPoll) {
      cancelPoll();
      cancelPoll = null;
    }
    routedHash = window.location.hash;
    clear(root);
    const hash = window.location.hash.replace(/^#\/?/, "");
    const parts = hash.split("/").filter(Boolean);
    try {
      if (parts.length === 0) {
        root.append(renderUpload());
      } else if (parts[0] === "sessions" && parts.length === 1) {
        root.append(await renderSessionList());
      } else if (parts[0] === "sessions" && parts.length === 2) {
        root.append(renderStatus(parts[1]));
      } else if (parts[0] === "sessions" && parts[2] === "report") {
        root.append(await renderReport(parts[1]));
      } else {
        root.append(el("p", {}, ["unknown route"]));
      }
    } catch (error) {
      root.append(el("p", { class: "error-box" }, [String(error)]));
    }
  };

  const renderUpload = () =>
    renderUploadView({
      submit: async (file, kind, meta, key) => {
        const { session_id } = await client.uploadSession(file, kind, meta, key);
        await client.run(session_id).catch((error) => {
          // an already-running duplicate upload just navigates to it
          if ((error as { status?: number }).status !== 409) {
            throw error;
          }
        });
        return session_id;
      },
      onCreated: (sessionId) => navigate(`#/sessions/${sessionId}`),
    });

  const renderStatus = (sessionId: string): HTMLElement => {
    const holder = el("div", { class: "status-holder" });
    cancelPoll = pollStatus(
      () => client.status(sessionId),
      (status) => {
        clear(holder);
        holder.append(renderStatusView(status, {
          onRetry: () => {
            void client.run(sessionId).then(() => route());
          },
          onOpenReport: () => navigate(`#/sessions/${sessionId}/report`),
        }));
      },
      (error) => {
        clear(holder);
        holder.append(el("p", { class: "error-box" }, [String(error)]));
      },
    );
    return holder;
  };

  const renderReport = async (sessionId: string): Promise<HTMLElement> => {
    const [report, transcript, audit] = await Promise.all([
      client.report(sessionId),
      client.transcript(sessionId),
      client.audit(sessionId),
    ]);
    return renderReportView(report, transcript, audit, {
      onOverride: async (indicatorId, newObserved, expertId, note) => {
        await client.override(sessionId, indicatorId, {
          new_observed: newObserved,
          expert_id: expertId,
          note,
        });
        await route(); // re-fetch: scores come from the service only
      },
      onDownloadText: () => {
        void client.reportText(sessionId).then((text) => {
          const blob = new Blob([text], { type: "text/plain;charset=utf-8" });
          const link = el("a", {
            href: URL.createObjectURL(blob),
            download: `report-${sessionId}.txt`,
          });
          link.click();
          URL.revokeObjectURL(link.href);
        });
      },
    });
  };

  const renderSessionList = async (): Promise<HTMLElement> => {
    const sessions = await client.sessions();
    const rows = sessions.map((s) => {
      const link = el("a", { href: `#/sessions/${s.session_id}` },
                      [`${s.session_id} — ${s.state}`]);
      return el("li", {}, [link]);
    });
    return el("section", { class: "view session-list" }, [
      el("h2", {}, ["Sessions"]),
      el("ul", {}, rows),
    ]);
  };

  // re-route only on a real hash change; some environments fire the
  // event for no-op assignments, which must not blow away a live view
  const onHashChange = () => {
    if (window.location.hash !== routedHash) {
      void route();
    }
  };
  window.addEventListener("hashchange", onHashChange);
  void route();
  return () => {
    window.removeEventListener("hashchange", onHashChange);
    if (cancelPoll) {
      cancelPoll();
    }
  };
}

declare global {
  interface Window {
    I2E_TOKEN?: string;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const client = new ApiClient("", window.I2E_TOKEN ?? null);
  startApp(document.getElementById("app") as HTMLElement, client);
}
