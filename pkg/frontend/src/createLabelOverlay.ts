import { ApiError, Label } from "./api";
import { Strings } from "./i18n";
import { openOverlay } from "./overlay";

// The create-label overlay lists what already exists for the context, takes
// one name, and resolves with the created label or null when dismissed.
// A rejected name (duplicate, too long) shows the service's message inline
// and keeps the overlay open; back and close never call the API.
export function createLabelOverlay(options: {
  strings: Strings;
  existing: Label[];
  create: (name: string) => Promise<Label>;
}): Promise<Label | null> {
  const { strings, existing, create } = options;
  return new Promise((resolve) => {
    let settled = false;
    const settle = (value: Label | null) => {
      if (settled) return;
      settled = true;
      resolve(value);
    };

    const handle = openOverlay(
      strings.t("create_label_title"),
      strings.t("close"),
      () => settle(null),
    );

    const existingBox = document.createElement("div");
    existingBox.className = "existing";
    if (existing.length === 0) {
      existingBox.textContent = strings.t("no_labels_yet");
    } else {
      const list = document.createElement("ul");
      for (const label of existing) {
        const item = document.createElement("li");
        item.textContent = label.name;
        list.appendChild(item);
      }
      existingBox.appendChild(list);
    }

    const caption = document.createElement("div");
    caption.textContent = strings.t("existing_labels");

    const input = document.createElement("input");
    input.type = "text";
    input.maxLength = 120;
    input.placeholder = strings.t("label_name");

    const error = document.createElement("div");
    error.className = "inline-error";
    error.hidden = true;

    handle.body.append(caption, existingBox, input, error);

    const backButton = document.createElement("button");
    backButton.type = "button";
    backButton.textContent = strings.t("back");
    backButton.addEventListener("click", () => handle.dismiss());

    const confirmButton = document.createElement("button");
    confirmButton.type = "button";
    confirmButton.className = "primary";
    confirmButton.textContent = strings.t("confirm");
    confirmButton.addEventListener("click", () => void submit());

    input.addEventListener("keydown", (event) => {
      if (event.key === "Enter") void submit();
    });

    handle.footer.append(backButton, confirmButton);
    input.focus();

    async function submit(): Promise<void> {
      const name = input.value.trim();
      if (name === "") return;
      confirmButton.disabled = true;
      try {
        const label = await create(name);
        settle(label);
        handle.dismiss();
      } catch (cause) {
        error.textContent =
          cause instanceof ApiError ? cause.message : String(cause);
        error.hidden = false;
      } finally {
        confirmButton.disabled = false;
      }
    }
  });
}
