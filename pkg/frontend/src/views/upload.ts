import { el } from "../dom.js";

export interface UploadHandlers {
  // resolves to the created session id; throws ApiError on rejection
  submit(file: File, kind: "transcript" | "audio", meta: Record<string, unknown>,
         idempotencyKey: string | undefined): Promise<string>;
  onCreated(sessionId: string): void;
}

function pickKind(file: File): "transcript" | "audio" {
  return file.name.endsWith(".json") ? "transcript" : "audio";
}

export function renderUploadView(handlers: UploadHandlers): HTMLElement {
  const errorBox = el("div", { class: "error-box", hidden: "hidden" });
  const fileInput = el("input", { type: "file", id: "upload-file" });
  const sessionIdInput = el("input", {
    type: "text", id: "meta-session-id", placeholder: "session id (optional)",
  });
  const durationInput = el("input", {
    type: "number", id: "meta-duration", placeholder: "duration ms (audio only)",
  });
  const keyInput = el("input", {
    type: "text", id: "idempotency-key", placeholder: "idempotency key (optional)",
  });
  const submitButton = el("button", { type: "submit" }, ["Upload & run"]);

  const showError = (detail: unknown) => {
    errorBox.hidden = false;
    errorBox.textContent =
      typeof detail === "string" ? detail : JSON.stringify(detail, null, 2);
  };

  const submit = async (file: File) => {
    errorBox.hidden = true;
    const meta: Record<string, unknown> = {};
    if (sessionIdInput.value) {
      meta["session_id"] = sessionIdInput.value;
    }
    if (durationInput.value) {
      meta["duration_ms"] = Number(durationInput.value);
    }
    try {
      const sessionId = await handlers.submit(
        file, pickKind(file), meta, keyInput.value || undefined);
      handlers.onCreated(sessionId);
    } catch (error) {
      showError((error as { detail?: unknown }).detail ?? String(error));
    }
  };

  const dropZone = el("div", { class: "drop-zone", id: "drop-zone" }, [
    "Drop a session recording or transcript JSON here, or pick a file below.",
  ]);
  dropZone.addEventListener("dragover", (event) => {
    event.preventDefault();
    dropZone.classList.add("armed");
  });
  dropZone.addEventListener("dragleave", () => dropZone.classList.remove("armed"));
  dropZone.addEventListener("drop", (event) => {
    event.preventDefault();
    dropZone.classList.remove("armed");
    const file = event.dataTransfer?.files?.[0];
    if (file) {
      void submit(file);
    }
  });

  const form = el("form", { class: "upload-form" }, [
    el("label", { for: "upload-file" }, ["Session file"]),
    fileInput,
    el("label", { for: "meta-session-id" }, ["Session id"]),
    sessionIdInput,
    el("label", { for: "meta-duration" }, ["Duration (ms)"]),
    durationInput,
    el("label", { for: "idempotency-key" }, ["Idempotency key"]),
    keyInput,
    submitButton,
  ]);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const file = fileInput.files?.[0];
    if (!file) {
      showError("pick a file first");
      return;
    }
    void submit(file);
  });

  return el("section", { class: "view upload-view" }, [
    el("h2", {}, ["New session"]),
    dropZone,
    form,
    errorBox,
  ]);
}
