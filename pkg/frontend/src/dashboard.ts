import {
  AnyEvent,
  ApiClient,
  Label,
  UiConfig,
  isUnauthorized,
} from "./api";
import { createLabelOverlay } from "./createLabelOverlay";
import { Strings, StringKey } from "./i18n";
import { ActionSink } from "./interactions";
import { labelPanel, LabelPanel } from "./labelPanel";
import { verificationOverlay } from "./verifyOverlay";

export interface DashboardContext {
  api: ApiClient;
  strings: Strings;
  ui: UiConfig;
  who: string;
  sink: ActionSink;
  onExpired: () => void;
  onLogout: () => void;
}

export function topBar(
  strings: Strings,
  who: string,
  onLogout: () => void,
): HTMLElement {
  const bar = document.createElement("header");
  bar.className = "topbar";
  const logo = document.createElement("div");
  logo.className = "logo";
  logo.textContent = strings.t("appName");
  const right = document.createElement("div");
  const whoSpan = document.createElement("span");
  whoSpan.className = "who";
  whoSpan.textContent = who;
  const logoutButton = document.createElement("button");
  logoutButton.type = "button";
  logoutButton.textContent = strings.t("logout");
  logoutButton.addEventListener("click", onLogout);
  right.append(whoSpan, logoutButton);
  bar.append(logo, right);
  return bar;
}

// Common shape of both annotator dashboards: event list on the left, event
// facts plus label panels plus send button in the main view. Subclasses say
// which label contexts exist, how an event is titled in the list, and what
// the facts section shows. All selection state is per event and volatile;
// everything else comes from the server on every refresh.
export abstract class Dashboard {
  protected events: AnyEvent[] = [];
  protected selectedId: string | null = null;
  protected labels = new Map<string, Label[]>();
  private readonly selections = new Map<string, Map<string, Set<string>>>();
  private readonly panels = new Map<string, LabelPanel>();

  protected readonly listBox: HTMLElement;
  protected readonly mainBox: HTMLElement;
  protected readonly factsBox: HTMLElement;
  protected readonly panelsBox: HTMLElement;
  private readonly noticeBox: HTMLElement;
  private readonly hintBox: HTMLElement;

  protected constructor(
    readonly root: HTMLElement,
    protected readonly ctx: DashboardContext,
    private readonly eventContext: "train_car" | "rail",
  ) {
    root.replaceChildren();
    root.appendChild(topBar(ctx.strings, ctx.who, () => this.logout()));

    const layout = document.createElement("div");
    layout.className = "dashboard";

    const side = document.createElement("nav");
    side.className = "event-list";
    const heading = document.createElement("h2");
    heading.textContent = ctx.strings.t("events");
    this.listBox = document.createElement("div");
    side.append(heading, this.listBox);

    this.mainBox = document.createElement("main");
    this.mainBox.className = "main-view";
    this.factsBox = document.createElement("div");
    this.panelsBox = document.createElement("div");
    this.panelsBox.className = "label-panels";
    this.noticeBox = document.createElement("div");
    this.noticeBox.hidden = true;

    const sendRow = document.createElement("div");
    sendRow.className = "send-row";
    const sendButton = document.createElement("button");
    sendButton.type = "button";
    sendButton.className = "primary send";
    sendButton.textContent = ctx.strings.t("send");
    sendButton.addEventListener("click", () => void this.send());
    this.hintBox = document.createElement("span");
    this.hintBox.className = "hint";
    this.hintBox.hidden = true;
    sendRow.append(sendButton, this.hintBox);

    this.mainBox.append(
      this.noticeBox,
      this.factsBox,
      this.panelsBox,
      sendRow,
    );
    layout.append(side, this.mainBox);
    root.appendChild(layout);

    for (const [context, titleKey] of this.contexts()) {
      const panel = labelPanel({
        title: ctx.strings.t(titleKey),
        emptyText: ctx.strings.t("no_labels_yet"),
        createText: ctx.strings.t("create_label"),
        onToggle: (labelId, checked) =>
          this.toggleSelection(context, labelId, checked),
        onCreate: () => void this.openCreateLabel(context),
      });
      this.panels.set(context, panel);
      this.panelsBox.appendChild(panel.root);
    }
  }

  protected abstract contexts(): Array<[string, StringKey]>;
  protected abstract entryText(event: AnyEvent): string;
  protected abstract renderFacts(event: AnyEvent | null): void;

  async init(): Promise<void> {
    await this.refreshLabels();
    await this.refreshEvents();
  }

  async refreshEvents(): Promise<void> {
    try {
      this.events = await this.ctx.api.listEvents({
        context: this.eventContext,
        status: "unlabeled",
      });
    } catch (error) {
      this.fail(error);
      return;
    }
    if (!this.events.some((e) => e.event_id === this.selectedId)) {
      this.selectedId =
        this.events.length > 0 ? this.events[0].event_id : null;
    }
    this.renderList();
    this.renderMain();
  }

  async refreshLabels(): Promise<void> {
    for (const [context] of this.contexts()) {
      try {
        this.labels.set(context, await this.ctx.api.listLabels(context));
        this.ctx.sink.report("success", `list_labels ${context}`);
      } catch (error) {
        this.ctx.sink.report("error", `list_labels ${context}`);
        this.fail(error);
        return;
      }
    }
    this.renderPanels();
  }

  selectEvent(eventId: string): void {
    if (this.selectedId === eventId) return;
    this.selectedId = eventId;
    this.ctx.sink.report("success", `select_event ${eventId}`);
    this.renderList();
    this.renderMain();
  }

  protected selectedEvent(): AnyEvent | null {
    return this.events.find((e) => e.event_id === this.selectedId) ?? null;
  }

  protected selectionFor(eventId: string): Map<string, Set<string>> {
    let byContext = this.selections.get(eventId);
    if (byContext === undefined) {
      byContext = new Map();
      for (const [context] of this.contexts()) {
        byContext.set(context, new Set());
      }
      this.selections.set(eventId, byContext);
    }
    return byContext;
  }

  private toggleSelection(
    context: string,
    labelId: string,
    checked: boolean,
  ): void {
    if (this.selectedId === null) return;
    const chosen = this.selectionFor(this.selectedId).get(context);
    if (chosen === undefined) return;
    if (checked) chosen.add(labelId);
    else chosen.delete(labelId);
    this.hintBox.hidden = true;
  }

  private renderList(): void {
    this.listBox.replaceChildren();
    if (this.events.length === 0) {
      const empty = document.createElement("div");
      empty.className = "empty";
      empty.textContent = this.ctx.strings.t("no_events");
      this.listBox.appendChild(empty);
      return;
    }
    for (const event of this.events) {
      const entry = document.createElement("button");
      entry.type = "button";
      entry.className = "event-entry";
      if (event.event_id === this.selectedId) entry.classList.add("selected");
      entry.dataset.eventId = event.event_id;
      entry.textContent = this.entryText(event);
      entry.addEventListener("click", () => this.selectEvent(event.event_id));
      this.listBox.appendChild(entry);
    }
  }

  protected renderMain(): void {
    this.renderFacts(this.selectedEvent());
    this.renderPanels();
  }

  private renderPanels(): void {
    const byContext =
      this.selectedId === null
        ? null
        : this.selectionFor(this.selectedId);
    for (const [context] of this.contexts()) {
      const panel = this.panels.get(context);
      if (panel === undefined) continue;
      panel.render(
        this.labels.get(context) ?? [],
        byContext?.get(context) ?? new Set(),
      );
    }
  }

  private async openCreateLabel(context: string): Promise<void> {
    const created = await createLabelOverlay({
      strings: this.ctx.strings,
      existing: this.labels.get(context) ?? [],
      create: async (name) => {
        try {
          const label = await this.ctx.api.createLabel(name, context);
          this.ctx.sink.report("success", `create_label ${context} ${name}`);
          return label;
        } catch (error) {
          this.ctx.sink.report("error", `create_label ${context} ${name}`);
          if (isUnauthorized(error)) this.ctx.onExpired();
          throw error;
        }
      },
    });
    if (created === null) return;
    const known = this.labels.get(context) ?? [];
    known.push(created);
    this.labels.set(context, known);
    if (this.selectedId !== null) {
      // the annotator made this label to use it right now
      this.selectionFor(this.selectedId).get(context)?.add(created.label_id);
    }
    this.renderPanels();
  }

  private async send(): Promise<void> {
    const event = this.selectedEvent();
    if (event === null) return;
    this.noticeBox.hidden = true;
    this.hintBox.hidden = true;

    const selections: Record<string, string[]> = {};
    for (const [context, ids] of this.selectionFor(event.event_id)) {
      selections[context] = [...ids];
    }

    try {
      await this.ctx.api.stageDraft(event.event_id, selections);
      this.ctx.sink.report("success", `stage_draft ${event.event_id}`);
    } catch (error) {
      this.ctx.sink.report("error", `stage_draft ${event.event_id}`);
      this.fail(error);
      return;
    }

    let summary;
    try {
      summary = await this.ctx.api.draftSummary(event.event_id);
      this.ctx.sink.report(
        "success",
        `verification_summary ${event.event_id}`,
      );
    } catch (error) {
      this.ctx.sink.report("error", `verification_summary ${event.event_id}`);
      if (hasCode(error, "empty_draft")) {
        this.hintBox.textContent = this.ctx.strings.t("nothing_selected");
        this.hintBox.hidden = false;
        return;
      }
      this.fail(error);
      return;
    }

    const outcome = await verificationOverlay({
      strings: this.ctx.strings,
      timezone: this.ctx.ui.display_timezone,
      summary,
      submit: async () => {
        try {
          const result = await this.ctx.api.submitDraft(event.event_id);
          this.ctx.sink.report("success", `submit ${event.event_id}`);
          return result;
        } catch (error) {
          this.ctx.sink.report("error", `submit ${event.event_id}`);
          if (isUnauthorized(error)) this.ctx.onExpired();
          throw error;
        }
      },
    });

    if (outcome === "confirmed") {
      this.selections.delete(event.event_id);
      this.showNotice(this.ctx.strings.t("submitted_ok"));
      await this.refreshEvents();
    }
  }

  private showNotice(text: string): void {
    this.noticeBox.className = "notice";
    this.noticeBox.textContent = text;
    this.noticeBox.hidden = false;
  }

  private fail(error: unknown): void {
    if (isUnauthorized(error)) {
      this.ctx.onExpired();
      return;
    }
    this.noticeBox.className = "notice error";
    this.noticeBox.textContent = String(
      error instanceof Error ? error.message : error,
    );
    this.noticeBox.hidden = false;
  }

  private logout(): void {
    this.ctx.api.logout();
    this.ctx.onLogout();
  }
}

export function appendFact(
  box: HTMLElement,
  term: string,
  detail: string,
): void {
  const cell = document.createElement("div");
  const dt = document.createElement("dt");
  dt.textContent = term;
  const dd = document.createElement("dd");
  dd.textContent = detail;
  cell.append(dt, dd);
  box.appendChild(cell);
}

function hasCode(error: unknown, code: string): boolean {
  return (
    typeof error === "object" &&
    error !== null &&
    "code" in error &&
    (error as { code: unknown }).code === code
  );
}
