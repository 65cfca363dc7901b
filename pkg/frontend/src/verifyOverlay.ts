import { ApiError, VerificationSummary } from "./api";
import { Strings, StringKey } from "./i18n";
import { formatInstant } from "./format";
import { openOverlay } from "./overlay";

const FIELD_NAMES: Record<string, StringKey> = {
  train_car_id: "train_car",
  train_id: "train",
  entered_at: "entered",
  exited_at: "exited",
  occurred_at: "time",
  location: "location",
};

const CONTEXT_NAMES: Record<string, StringKey> = {
  fault_found: "faults_found",
  repair_done: "repairs_done",
  rail_event: "rail_labels",
};

// Shows exactly what would be persisted and submits only on an explicit
// confirm. Back and close resolve "dismissed" with the draft untouched; a
// failed submit keeps the overlay open with the error shown.
export function verificationOverlay(options: {
  strings: Strings;
  timezone: string;
  summary: VerificationSummary;
  submit: () => Promise<unknown>;
}): Promise<"confirmed" | "dismissed"> {
  const { strings, timezone, summary, submit } = options;
  return new Promise((resolve) => {
    let settled = false;
    const settle = (value: "confirmed" | "dismissed") => {
      if (settled) return;
      settled = true;
      resolve(value);
    };

    const handle = openOverlay(
      strings.t("verify_title"),
      strings.t("close"),
      () => settle("dismissed"),
    );

    const hint = document.createElement("p");
    hint.textContent = strings.t("verify_hint");

    const facts = document.createElement("dl");
    facts.className = "event-facts";
    for (const [field, value] of Object.entries(summary.event)) {
      const key = FIELD_NAMES[field];
      if (key === undefined) continue;
      const term = document.createElement("dt");
      term.textContent = strings.t(key);
      const detail = document.createElement("dd");
      detail.textContent = renderValue(field, value, timezone);
      const cell = document.createElement("div");
      cell.append(term, detail);
      facts.appendChild(cell);
    }

    const labelsCaption = document.createElement("h3");
    labelsCaption.textContent = strings.t("selected_labels");
    const labels = document.createElement("dl");
    labels.className = "summary-labels";
    for (const [context, names] of Object.entries(summary.labels)) {
      if (names.length === 0) continue;
      const term = document.createElement("dt");
      const key = CONTEXT_NAMES[context];
      term.textContent = key === undefined ? context : strings.t(key);
      labels.appendChild(term);
      for (const name of names) {
        const detail = document.createElement("dd");
        detail.textContent = name;
        labels.appendChild(detail);
      }
    }

    const error = document.createElement("div");
    error.className = "inline-error";
    error.hidden = true;

    handle.body.append(hint, facts, labelsCaption, labels, error);

    const backButton = document.createElement("button");
    backButton.type = "button";
    backButton.textContent = strings.t("back");
    backButton.addEventListener("click", () => handle.dismiss());

    const confirmButton = document.createElement("button");
    confirmButton.type = "button";
    confirmButton.className = "primary";
    confirmButton.textContent = strings.t("confirm");
    confirmButton.addEventListener("click", () => void confirm());

    handle.footer.append(backButton, confirmButton);

    async function confirm(): Promise<void> {
      confirmButton.disabled = true;
      try {
        await submit();
        settle("confirmed");
        handle.dismiss();
      } catch (cause) {
        const detail =
          cause instanceof ApiError ? cause.message : String(cause);
        error.textContent = `${strings.t("submit_failed")}: ${detail}`;
        error.hidden = false;
      } finally {
        confirmButton.disabled = false;
      }
    }
  });
}

function renderValue(field: string, value: unknown, timezone: string): string {
  if (field === "location") {
    const point = value as { latitude: number; longitude: number };
    return `${point.latitude.toFixed(4)}, ${point.longitude.toFixed(4)}`;
  }
  if (field.endsWith("_at")) {
    return formatInstant(String(value), timezone);
  }
  return String(value);
}
