import "./style.css";
import { Annotator, ApiClient, LoginResponse, UiConfig } from "./api";
import { DashboardContext } from "./dashboard";
import { asLocale, Strings } from "./i18n";
import { nullSink } from "./interactions";
import { renderLogin } from "./login";
import { RailsDashboard } from "./rails";
import { StudyPage } from "./study";
import { WorkshopDashboard } from "./workshop";

const SAVE_KEY = "railabel.session";

interface SavedSession {
  token: string;
  route: string;
  annotator: Annotator;
  ui: UiConfig;
}

function loadSaved(): SavedSession | null {
  try {
    const raw = window.sessionStorage.getItem(SAVE_KEY);
    return raw ? (JSON.parse(raw) as SavedSession) : null;
  } catch {
    return null;
  }
}

function boot(): void {
  const root = document.getElementById("app");
  if (root === null) return;
  const api = new ApiClient("");
  const saved = loadSaved();
  if (saved !== null) {
    api.token = saved.token;
    showRoute(root, api, saved.route, saved.annotator, saved.ui);
  } else {
    showLogin(root, api);
  }
}

function showLogin(root: HTMLElement, api: ApiClient, notice?: string): void {
  window.sessionStorage.removeItem(SAVE_KEY);
  const strings = new Strings("de");
  history.replaceState({}, "", "/");
  renderLogin(
    root,
    api,
    strings,
    (login: LoginResponse) => {
      const saved: SavedSession = {
        token: login.token,
        route: login.dashboard_route,
        annotator: login.annotator,
        ui: login.ui,
      };
      window.sessionStorage.setItem(SAVE_KEY, JSON.stringify(saved));
      showRoute(root, api, login.dashboard_route, login.annotator, login.ui);
    },
    notice,
  );
}

function showRoute(
  root: HTMLElement,
  api: ApiClient,
  route: string,
  annotator: Annotator,
  ui: UiConfig,
): void {
  const strings = new Strings(asLocale(ui.locale));
  history.replaceState({}, "", route);
  const ctx: DashboardContext = {
    api,
    strings,
    ui,
    who: annotator.display_name,
    sink: nullSink,
    onExpired: () => showLogin(root, api, strings.t("session_expired")),
    onLogout: () => showLogin(root, api),
  };
  if (route === "/workshop") {
    void new WorkshopDashboard(root, ctx).init();
  } else if (route === "/rails") {
    void new RailsDashboard(root, ctx).init();
  } else if (route === "/study") {
    new StudyPage(root, {
      api,
      baseUrl: "",
      strings,
      ui,
      who: annotator.display_name,
      onExpired: ctx.onExpired,
      onLogout: ctx.onLogout,
    }).render();
  } else {
    showLogin(root, api);
  }
}

boot();
