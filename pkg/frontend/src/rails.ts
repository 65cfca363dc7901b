import { AnyEvent, RideEvent } from "./api";
import { appendFact, Dashboard, DashboardContext } from "./dashboard";
import { formatDate, formatTime } from "./format";
import { StringKey } from "./i18n";
import { TileMap } from "./map";

const EVENT_ZOOM = 13;

export class RailsDashboard extends Dashboard {
  readonly map: TileMap;
  private readonly factList: HTMLElement;

  constructor(root: HTMLElement, ctx: DashboardContext) {
    super(root, ctx, "rail");
    this.factList = document.createElement("dl");
    this.factList.className = "event-facts";
    const mapBox = document.createElement("div");
    this.map = new TileMap(mapBox, {
      tileUrlTemplate: ctx.ui.map_tile_url,
      attribution: "© OpenStreetMap contributors",
      fallbackText: ctx.strings.t("map_fallback"),
    });
    this.factsBox.append(this.factList, mapBox);
  }

  protected contexts(): Array<[string, StringKey]> {
    return [["rail_event", "rail_labels"]];
  }

  protected entryText(event: AnyEvent): string {
    const ride = event as RideEvent;
    const timezone = this.ctx.ui.display_timezone;
    return `${formatDate(ride.occurred_at, timezone)} ${formatTime(ride.occurred_at, timezone)}`;
  }

  protected renderFacts(event: AnyEvent | null): void {
    this.factList.replaceChildren();
    if (event === null) {
      const empty = document.createElement("dt");
      empty.className = "empty";
      empty.textContent = this.ctx.strings.t("no_events");
      this.factList.appendChild(empty);
      this.map.clearPin();
      return;
    }
    const ride = event as RideEvent;
    const timezone = this.ctx.ui.display_timezone;
    appendFact(
      this.factList,
      this.ctx.strings.t("date"),
      formatDate(ride.occurred_at, timezone),
    );
    appendFact(
      this.factList,
      this.ctx.strings.t("time"),
      formatTime(ride.occurred_at, timezone),
    );
    appendFact(this.factList, this.ctx.strings.t("train"), ride.train_id);
    appendFact(
      this.factList,
      this.ctx.strings.t("location"),
      `${ride.location.latitude.toFixed(4)}, ${ride.location.longitude.toFixed(4)}`,
    );
    this.map.setView(ride.location.latitude, ride.location.longitude, EVENT_ZOOM);
    this.map.setPin(ride.location.latitude, ride.location.longitude);
  }
}

