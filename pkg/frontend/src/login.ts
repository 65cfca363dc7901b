import { ApiClient, ApiError, LoginResponse } from "./api";
import { Strings } from "./i18n";

export function renderLogin(
  root: HTMLElement,
  api: ApiClient,
  strings: Strings,
  onLoggedIn: (login: LoginResponse) => void,
  notice?: string,
): void {
  root.replaceChildren();
  const page = document.createElement("div");
  page.className = "login-page";
  const card = document.createElement("form");
  card.className = "login-card";
  card.innerHTML = `
    <h1></h1>
    <div class="notice error" hidden></div>
    <label>
      <span class="username-label"></span>
      <input name="username" autocomplete="username" required />
    </label>
    <label>
      <span class="password-label"></span>
      <input name="password" type="password" autocomplete="current-password" required />
    </label>
    <button type="submit" class="primary"></button>
  `;
  (card.querySelector("h1") as HTMLElement).textContent =
    strings.t("appName");
  (card.querySelector(".username-label") as HTMLElement).textContent =
    strings.t("login_username");
  (card.querySelector(".password-label") as HTMLElement).textContent =
    strings.t("login_password");
  (card.querySelector("button") as HTMLElement).textContent =
    strings.t("login_submit");

  const error = card.querySelector(".notice") as HTMLElement;
  if (notice) {
    error.textContent = notice;
    error.hidden = false;
  }

  card.addEventListener("submit", (event) => {
    event.preventDefault();
    const username = (
      card.elements.namedItem("username") as HTMLInputElement
    ).value.trim();
    const password = (card.elements.namedItem("password") as HTMLInputElement)
      .value;
    void api
      .login(username, password)
      .then(onLoggedIn)
      .catch((cause) => {
        error.textContent =
          cause instanceof ApiError
            ? cause.message
            : strings.t("login_failed");
        error.hidden = false;
      });
  });

  page.appendChild(card);
  root.appendChild(page);
  (card.elements.namedItem("username") as HTMLInputElement).focus();
}
