import { AnyEvent, TrainCarEvent } from "./api";
import { appendFact, Dashboard, DashboardContext } from "./dashboard";
import { formatInstant } from "./format";
import { StringKey } from "./i18n";

export class WorkshopDashboard extends Dashboard {
  constructor(root: HTMLElement, ctx: DashboardContext) {
    super(root, ctx, "train_car");
  }

  protected contexts(): Array<[string, StringKey]> {
    return [
      ["fault_found", "faults_found"],
      ["repair_done", "repairs_done"],
    ];
  }

  protected entryText(event: AnyEvent): string {
    return (event as TrainCarEvent).train_car_id;
  }

  protected renderFacts(event: AnyEvent | null): void {
    this.factsBox.replaceChildren();
    if (event === null) {
      const empty = document.createElement("p");
      empty.className = "empty";
      empty.textContent = this.ctx.strings.t("no_event_selected");
      this.factsBox.appendChild(empty);
      return;
    }
    const visit = event as TrainCarEvent;
    const timezone = this.ctx.ui.display_timezone;
    const facts = document.createElement("dl");
    facts.className = "event-facts";
    appendFact(facts, this.ctx.strings.t("train_car"), visit.train_car_id);
    appendFact(
      facts,
      this.ctx.strings.t("entered"),
      formatInstant(visit.entered_at, timezone),
    );
    appendFact(
      facts,
      this.ctx.strings.t("exited"),
      formatInstant(visit.exited_at, timezone),
    );
    this.factsBox.appendChild(facts);
  }
}
