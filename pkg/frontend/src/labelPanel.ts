import { Label } from "./api";

// One multi-select label list with a create button underneath. Selection
// state lives with the caller; the panel re-renders from (labels, selected)
// and reports toggles upward.
export interface LabelPanel {
  root: HTMLElement;
  render(labels: Label[], selected: ReadonlySet<string>): void;
}

export function labelPanel(options: {
  title: string;
  emptyText: string;
  createText: string;
  onToggle: (labelId: string, checked: boolean) => void;
  onCreate: () => void;
}): LabelPanel {
  const root = document.createElement("section");
  root.className = "label-list";

  const heading = document.createElement("h3");
  heading.textContent = options.title;

  const list = document.createElement("div");
  list.className = "options";

  const createRow = document.createElement("div");
  createRow.className = "create-row";
  const createButton = document.createElement("button");
  createButton.type = "button";
  createButton.className = "linkish";
  createButton.textContent = `+ ${options.createText}`;
  createButton.addEventListener("click", options.onCreate);
  createRow.appendChild(createButton);

  root.append(heading, list, createRow);

  return {
    root,
    render(labels: Label[], selected: ReadonlySet<string>): void {
      list.replaceChildren();
      if (labels.length === 0) {
        const empty = document.createElement("div");
        empty.className = "empty";
        empty.textContent = options.emptyText;
        list.appendChild(empty);
        return;
      }
      for (const label of labels) {
        const row = document.createElement("label");
        const checkbox = document.createElement("input");
        checkbox.type = "checkbox";
        checkbox.value = label.label_id;
        checkbox.checked = selected.has(label.label_id);
        checkbox.addEventListener("change", () =>
          options.onToggle(label.label_id, checkbox.checked),
        );
        const text = document.createElement("span");
        text.textContent = label.name;
        row.append(checkbox, text);
        list.appendChild(row);
      }
    },
  };
}
