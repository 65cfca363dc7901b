// Shared overlay plumbing. At most one overlay is ever mounted; opening a
// new one dismisses the previous. Escape and backdrop clicks dismiss and
// never submit anything.

let activeDismiss: (() => void) | null = null;

export interface OverlayHandle {
  root: HTMLElement;
  body: HTMLElement;
  footer: HTMLElement;
  dismiss(): void;
}

export function openOverlay(
  title: string,
  closeLabel: string,
  onDismiss: () => void,
): OverlayHandle {
  activeDismiss?.();

  const backdrop = document.createElement("div");
  backdrop.className = "overlay-backdrop";
  backdrop.innerHTML = `
    <div class="overlay" role="dialog" aria-modal="true">
      <header>
        <h2></h2>
        <button type="button" class="linkish close-btn"></button>
      </header>
      <div class="body"></div>
      <footer></footer>
    </div>
  `;
  const overlay = backdrop.querySelector(".overlay") as HTMLElement;
  (overlay.querySelector("h2") as HTMLElement).textContent = title;
  const closeButton = overlay.querySelector(".close-btn") as HTMLButtonElement;
  closeButton.textContent = "✕";
  closeButton.setAttribute("aria-label", closeLabel);

  let open = true;
  const dismiss = () => {
    if (!open) return;
    open = false;
    document.removeEventListener("keydown", onKey);
    backdrop.remove();
    if (activeDismiss === dismiss) activeDismiss = null;
    onDismiss();
  };
  const onKey = (event: KeyboardEvent) => {
    if (event.key === "Escape") dismiss();
  };

  closeButton.addEventListener("click", dismiss);
  backdrop.addEventListener("click", (event) => {
    if (event.target === backdrop) dismiss();
  });
  document.addEventListener("keydown", onKey);
  document.body.appendChild(backdrop);
  activeDismiss = dismiss;

  return {
    root: backdrop,
    body: overlay.querySelector(".body") as HTMLElement,
    footer: overlay.querySelector("footer") as HTMLElement,
    dismiss,
  };
}

export function overlayOpen(): boolean {
  return activeDismiss !== null;
}
