import {
  ApiClient,
  LoginResponse,
  StudyRoundInfo,
  StudySession,
  UiConfig,
} from "./api";
import { topBar } from "./dashboard";
import { formatCountdown } from "./format";
import { Strings } from "./i18n";
import { ActionSink, InteractionReporter, OutcomeKind } from "./interactions";
import { RailsDashboard } from "./rails";
import { WorkshopDashboard } from "./workshop";

export const ROUND_CAP_SECONDS = 600;
const COUNTDOWN_WINDOW_SECONDS = 60;

export interface ScenarioTask {
  task_id: string;
  round: string;
  instruction: string;
  creates_labels?: Array<{ context: string; name: string }>;
  expected: Record<string, Record<string, string[]>>;
}

export interface ScenarioDoc {
  name: string;
  accounts: Record<string, { username: string; password: string }>;
  fixtures: {
    train_car_events: Array<{
      key: string;
      train_car_id: string;
      entered_at: string;
      exited_at: string;
    }>;
    ride_events: Array<{
      key: string;
      train_id: string;
      occurred_at: string;
      location: { latitude: number; longitude: number };
    }>;
  };
  tasks: ScenarioTask[];
}

export function parseScenario(raw: string): ScenarioDoc {
  const doc = JSON.parse(raw) as ScenarioDoc;
  if (typeof doc !== "object" || doc === null) {
    throw new Error("scenario must be a JSON object");
  }
  if (!Array.isArray(doc.tasks)) throw new Error("scenario has no tasks");
  if (
    typeof doc.fixtures !== "object" ||
    doc.fixtures === null ||
    !Array.isArray(doc.fixtures.train_car_events) ||
    !Array.isArray(doc.fixtures.ride_events)
  ) {
    throw new Error("scenario has no fixtures");
  }
  if (typeof doc.accounts !== "object" || doc.accounts === null) {
    throw new Error("scenario has no accounts");
  }
  return doc;
}

// matches how the service deduplicates label names
export function foldName(name: string): string {
  return name.trim().toLowerCase();
}

// FileReader instead of File.text(): same result, wider runtime support
function readFileText(file: File): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve(String(reader.result));
    reader.onerror = () =>
      reject(reader.error ?? new Error("file unreadable"));
    reader.readAsText(file);
  });
}

// One study round: instruction bar with countdown on top, the round's
// regular dashboard below, every dashboard action forwarded as an
// interaction record. Tasks complete when the expected annotations are
// visible through the export endpoint; the round closes when all tasks are
// done or the cap runs out, whichever comes first.
export class RoundRunner implements ActionSink {
  private taskIndex = 0;
  private startedAtMs = 0;
  private ticker: number | null = null;
  private closed = false;
  private checking = false;

  private readonly instruction: HTMLElement;
  private readonly countdown: HTMLElement;
  private readonly frame: HTMLElement;

  constructor(
    private readonly options: {
      root: HTMLElement;
      participant: ApiClient;
      experimenter: ApiClient;
      strings: Strings;
      ui: UiConfig;
      who: string;
      sessionId: string;
      round: "workshop" | "rails";
      tasks: ScenarioTask[];
      eventIds: Record<string, string>;
      reporter: InteractionReporter;
      capSeconds?: number;
      now?: () => number;
      onClosed: (round: StudyRoundInfo) => void;
      onExpired: () => void;
    },
  ) {
    this.instruction = document.createElement("div");
    this.instruction.className = "instruction";
    this.countdown = document.createElement("div");
    this.countdown.className = "countdown";
    this.countdown.hidden = true;
    this.frame = document.createElement("div");
    this.frame.className = "round-frame";
  }

  get currentTask(): ScenarioTask | null {
    return this.options.tasks[this.taskIndex] ?? null;
  }

  private get capSeconds(): number {
    return this.options.capSeconds ?? ROUND_CAP_SECONDS;
  }

  private now(): number {
    return (this.options.now ?? Date.now)();
  }

  start(): void {
    const { root, strings } = this.options;
    root.replaceChildren();

    const bar = document.createElement("div");
    bar.className = "task-bar";
    const caption = document.createElement("strong");
    caption.textContent = `${strings.t("task")}:`;
    bar.append(caption, this.instruction, this.countdown);
    root.append(bar, this.frame);
    this.showTask();

    const dashboard =
      this.options.round === "workshop"
        ? new WorkshopDashboard(this.frame, this.dashboardContext())
        : new RailsDashboard(this.frame, this.dashboardContext());
    void dashboard.init();

    this.startedAtMs = this.now();
    this.options.reporter.report("success", `round_start ${this.options.round}`);
    this.ticker = window.setInterval(() => this.tick(), 1000);
  }

  report(kind: OutcomeKind, action: string): void {
    this.options.reporter.report(kind, action);
    if (kind === "success" && action.startsWith("submit ")) {
      void this.checkProgress();
    }
  }

  // exposed so tests and impatient experimenters can force the check
  async checkProgress(): Promise<void> {
    if (this.checking || this.closed) return;
    this.checking = true;
    try {
      const task = this.currentTask;
      if (task === null) return;
      const annotated = await this.annotatedLabels();
      while (this.currentTask !== null && this.satisfied(this.currentTask, annotated)) {
        this.options.reporter.report(
          "success",
          `task_complete ${this.currentTask.task_id}`,
        );
        this.taskIndex += 1;
        this.showTask();
      }
      if (this.currentTask === null) {
        await this.close();
      }
    } finally {
      this.checking = false;
    }
  }

  async close(): Promise<void> {
    if (this.closed) return;
    this.closed = true;
    if (this.ticker !== null) window.clearInterval(this.ticker);
    await this.options.reporter.flush();
    const round = await this.options.experimenter.closeRound(
      this.options.sessionId,
      this.options.round,
      new Date(this.now()).toISOString(),
    );
    this.options.onClosed(round);
  }

  stop(): void {
    this.closed = true;
    if (this.ticker !== null) window.clearInterval(this.ticker);
  }

  private dashboardContext() {
    const { participant, strings, ui, who, onExpired } = this.options;
    return {
      api: participant,
      strings,
      ui,
      who,
      sink: this as ActionSink,
      onExpired,
      onLogout: onExpired,
    };
  }

  private showTask(): void {
    const { strings } = this.options;
    const task = this.currentTask;
    this.instruction.textContent =
      task === null ? strings.t("all_tasks_done") : task.instruction;
  }

  private tick(): void {
    if (this.closed) return;
    const elapsed = (this.now() - this.startedAtMs) / 1000;
    const remaining = this.capSeconds - elapsed;
    if (remaining <= COUNTDOWN_WINDOW_SECONDS) {
      this.countdown.hidden = false;
      this.countdown.textContent = `${this.options.strings.t("remaining")}: ${formatCountdown(remaining)}`;
    } else {
      this.countdown.hidden = true;
    }
    if (remaining <= 0) {
      this.close().catch((error) => console.warn("round close failed:", error));
    }
  }

  private async annotatedLabels(): Promise<Map<string, Map<string, Set<string>>>> {
    const records = await this.options.experimenter.exportRecords();
    const byEvent = new Map<string, Map<string, Set<string>>>();
    for (const record of records) {
      let byContext = byEvent.get(record.event.event_id);
      if (byContext === undefined) {
        byContext = new Map();
        byEvent.set(record.event.event_id, byContext);
      }
      for (const [context, names] of Object.entries(record.labels)) {
        let folded = byContext.get(context);
        if (folded === undefined) {
          folded = new Set();
          byContext.set(context, folded);
        }
        for (const name of names) folded.add(foldName(name));
      }
    }
    return byEvent;
  }

  private satisfied(
    task: ScenarioTask,
    annotated: Map<string, Map<string, Set<string>>>,
  ): boolean {
    for (const [key, byContext] of Object.entries(task.expected)) {
      const eventId = this.options.eventIds[key];
      if (eventId === undefined) return false;
      const have = annotated.get(eventId);
      if (have === undefined) return false;
      for (const [context, names] of Object.entries(byContext)) {
        const folded = have.get(context);
        if (folded === undefined) return false;
        for (const name of names) {
          if (!folded.has(foldName(name))) return false;
        }
      }
    }
    return true;
  }
}

// Experimenter-facing page: start a session from a participant form plus a
// scenario file, then walk both rounds with the device handed to the
// participant, then show the session metrics.
export class StudyPage {
  activeRunner: RoundRunner | null = null;
  private scenario: ScenarioDoc | null = null;
  private session: StudySession | null = null;
  private eventIds: Record<string, string> = {};

  constructor(
    private readonly root: HTMLElement,
    private readonly ctx: {
      api: ApiClient;
      baseUrl: string;
      strings: Strings;
      ui: UiConfig;
      who: string;
      onExpired: () => void;
      onLogout: () => void;
    },
  ) {}

  render(): void {
    const { strings } = this.ctx;
    this.root.replaceChildren();
    this.root.appendChild(
      topBar(strings, this.ctx.who, () => {
        this.ctx.api.logout();
        this.ctx.onLogout();
      }),
    );

    const page = document.createElement("div");
    page.className = "study-page";
    const card = document.createElement("form");
    card.className = "study-card";
    card.innerHTML = `
      <h2></h2>
      <div class="notice error" hidden></div>
      <div class="form-grid">
        <label for="participant-id"></label>
        <input id="participant-id" name="participant_id" required />
        <label for="participant-age"></label>
        <input id="participant-age" name="age" type="number" min="1" required />
        <label for="participant-gender"></label>
        <input id="participant-gender" name="gender" />
        <label for="participant-occupation"></label>
        <input id="participant-occupation" name="occupation" />
        <label for="session-notes"></label>
        <input id="session-notes" name="notes" />
        <label for="scenario-file"></label>
        <input id="scenario-file" name="scenario" type="file" accept=".json,application/json" required />
      </div>
      <div><button type="submit" class="primary"></button></div>
    `;
    (card.querySelector("h2") as HTMLElement).textContent =
      strings.t("study_title");
    const fieldKeys = [
      "participant_id",
      "age",
      "gender",
      "occupation",
      "notes",
      "scenario_file",
    ] as const;
    card.querySelectorAll(".form-grid > label").forEach((element, index) => {
      element.textContent = strings.t(fieldKeys[index]);
    });
    (card.querySelector("button") as HTMLElement).textContent =
      strings.t("start_session");

    const errorBox = card.querySelector(".notice") as HTMLElement;
    card.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.startSession(card, errorBox);
    });

    page.appendChild(card);
    this.root.appendChild(page);
  }

  private async startSession(
    form: HTMLFormElement,
    errorBox: HTMLElement,
  ): Promise<void> {
    const { strings } = this.ctx;
    const value = (name: string) =>
      (form.elements.namedItem(name) as HTMLInputElement).value;
    const fileInput = form.elements.namedItem("scenario") as HTMLInputElement;
    const file = fileInput.files?.[0];
    try {
      if (file === undefined) throw new Error(strings.t("scenario_invalid"));
      this.scenario = parseScenario(await readFileText(file));
    } catch (cause) {
      errorBox.textContent = `${strings.t("scenario_invalid")}: ${String(
        cause instanceof Error ? cause.message : cause,
      )}`;
      errorBox.hidden = false;
      return;
    }

    try {
      this.session = await this.ctx.api.startSession(
        {
          participant_id: value("participant_id"),
          age: Number(value("age")),
          gender: value("gender"),
          occupation: value("occupation"),
        },
        value("notes"),
      );
      await this.ingestFixtures();
    } catch (cause) {
      errorBox.textContent = String(
        cause instanceof Error ? cause.message : cause,
      );
      errorBox.hidden = false;
      return;
    }
    this.showHandOver(0);
  }

  private async ingestFixtures(): Promise<void> {
    if (this.scenario === null) return;
    for (const entry of this.scenario.fixtures.train_car_events) {
      const event = await this.ctx.api.ingestWorkshopVisit({
        train_car_id: entry.train_car_id,
        entered_at: entry.entered_at,
        exited_at: entry.exited_at,
        external_key: entry.key,
      });
      this.eventIds[entry.key] = event.event_id;
    }
    for (const entry of this.scenario.fixtures.ride_events) {
      const event = await this.ctx.api.ingestButtonPress({
        train_id: entry.train_id,
        occurred_at: entry.occurred_at,
        location: entry.location,
        external_key: entry.key,
      });
      this.eventIds[entry.key] = event.event_id;
    }
  }

  private showHandOver(roundIndex: number): void {
    const { strings } = this.ctx;
    const session = this.session;
    const scenario = this.scenario;
    if (session === null || scenario === null) return;
    if (roundIndex >= session.round_order.length) {
      void this.showDone();
      return;
    }
    const kind = session.round_order[roundIndex] as "workshop" | "rails";
    const account = scenario.accounts[kind];

    this.root.replaceChildren();
    const page = document.createElement("div");
    page.className = "study-page";
    const card = document.createElement("form");
    card.className = "study-card";
    const roundName = strings.t(
      kind === "workshop" ? "round_workshop" : "round_rails",
    );
    card.innerHTML = `
      <h2>${strings.t("round")} ${roundIndex + 1}: ${roundName}</h2>
      <p>${strings.t("hand_over")}</p>
      <div class="notice error" hidden></div>
      <div class="form-grid">
        <label for="round-username"></label>
        <input id="round-username" name="username" required />
        <label for="round-password"></label>
        <input id="round-password" name="password" type="password" required />
      </div>
      <div><button type="submit" class="primary"></button></div>
    `;
    (card.querySelectorAll(".form-grid > label")[0] as HTMLElement).textContent =
      strings.t("login_username");
    (card.querySelectorAll(".form-grid > label")[1] as HTMLElement).textContent =
      strings.t("login_password");
    (card.querySelector("button") as HTMLElement).textContent =
      strings.t("start_round");
    const username = card.elements.namedItem("username") as HTMLInputElement;
    const password = card.elements.namedItem("password") as HTMLInputElement;
    if (account !== undefined) {
      username.value = account.username;
      password.value = account.password;
    }

    const errorBox = card.querySelector(".notice") as HTMLElement;
    card.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.startRound(
        kind,
        roundIndex,
        username.value.trim(),
        password.value,
        errorBox,
      );
    });

    page.appendChild(card);
    this.root.appendChild(page);
  }

  private async startRound(
    kind: "workshop" | "rails",
    roundIndex: number,
    username: string,
    password: string,
    errorBox: HTMLElement,
  ): Promise<void> {
    const session = this.session;
    const scenario = this.scenario;
    if (session === null || scenario === null) return;

    const participant = new ApiClient(this.ctx.baseUrl);
    let login: LoginResponse;
    try {
      login = await participant.login(username, password);
    } catch (cause) {
      errorBox.textContent = String(
        cause instanceof Error ? cause.message : cause,
      );
      errorBox.hidden = false;
      return;
    }

    this.root.replaceChildren();
    const frame = document.createElement("div");
    frame.className = "study-page";
    this.root.appendChild(frame);

    const runner = new RoundRunner({
      root: frame,
      participant,
      experimenter: this.ctx.api,
      strings: this.ctx.strings,
      ui: this.ctx.ui,
      who: login.annotator.display_name,
      sessionId: session.session_id,
      round: kind,
      tasks: scenario.tasks.filter((t) => t.round === kind),
      eventIds: this.eventIds,
      reporter: new InteractionReporter(
        participant,
        session.session_id,
        kind,
      ),
      onClosed: (round) => {
        this.activeRunner = null;
        this.showRoundClosed(round, roundIndex);
      },
      onExpired: this.ctx.onExpired,
    });
    this.activeRunner = runner;
    runner.start();
  }

  private showRoundClosed(round: StudyRoundInfo, roundIndex: number): void {
    const { strings } = this.ctx;
    this.root.replaceChildren();
    const page = document.createElement("div");
    page.className = "study-page";
    const card = document.createElement("div");
    card.className = "study-card";
    const heading = document.createElement("h2");
    heading.textContent = strings.t("round_closed");
    const reason = document.createElement("p");
    reason.textContent = `${strings.t("round")}: ${round.kind}, ${
      round.end_reason === "completed"
        ? strings.t("reason_completed")
        : strings.t("reason_timeout")
    }`;
    const nextButton = document.createElement("button");
    nextButton.type = "button";
    nextButton.className = "primary";
    nextButton.textContent = strings.t("next_round");
    nextButton.addEventListener("click", () =>
      this.showHandOver(roundIndex + 1),
    );
    card.append(heading, reason, nextButton);
    page.appendChild(card);
    this.root.appendChild(page);
  }

  private async showDone(): Promise<void> {
    const { strings } = this.ctx;
    const session = this.session;
    if (session === null) return;
    let metrics: Record<string, unknown>;
    try {
      metrics = await this.ctx.api.sessionMetrics(session.session_id);
    } catch (cause) {
      metrics = { error: String(cause) };
    }
    this.root.replaceChildren();
    const page = document.createElement("div");
    page.className = "study-page";
    const card = document.createElement("div");
    card.className = "study-card";
    const heading = document.createElement("h2");
    heading.textContent = strings.t("study_done");
    const pre = document.createElement("pre");
    pre.className = "report";
    pre.textContent = JSON.stringify(metrics, null, 2);
    card.append(heading, pre);
    page.appendChild(card);
    this.root.appendChild(page);
  }
}
