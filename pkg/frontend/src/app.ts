import { ReviewApi } from "./api.js";
import { actionForKey } from "./keyboard.js";
import { ReviewSession, startStatsPolling, type SessionView } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? (window as { TAMPERLAB_API_BASE?: string }).TAMPERLAB_API_BASE ?? "";
}

function reviewerName(): string {
  const stored = window.localStorage.getItem("reviewer");
  if (stored) return stored;
  const name = window.prompt("Reviewer name?", "reviewer") || "reviewer";
  window.localStorage.setItem("reviewer", name);
  return name;
}

export function boot(): void {
  const api = new ReviewApi(apiBase());
  const originalImg = el<HTMLImageElement>("original");
  const tamperedImg = el<HTMLImageElement>("tampered");
  const rightLabel = el<HTMLElement>("right-label");
  const description = el<HTMLElement>("description");
  const progress = el<HTMLElement>("progress");
  const statsPanel = el<HTMLElement>("stats");
  const errorBanner = el<HTMLElement>("error");
  const emptyBanner = el<HTMLElement>("empty");
  const scoreButtons = Array.from(
    document.querySelectorAll<HTMLButtonElement>("button[data-score]"),
  );

  const render = (view: SessionView): void => {
    errorBanner.textContent = view.error ?? "";
    errorBanner.hidden = view.error === null;
    emptyBanner.hidden = !view.queueEmpty;

    const item = view.item;
    const scoringBlocked = view.busy || view.imageBroken || item === null;
    for (const button of scoreButtons) button.disabled = scoringBlocked;

    if (item === null) {
      originalImg.removeAttribute("src");
      tamperedImg.removeAttribute("src");
      description.textContent = "";
      progress.textContent = "";
    } else {
      originalImg.src = api.imageUrl(item, "original");
      tamperedImg.src = api.imageUrl(item, view.overlayVisible ? "overlay" : "tampered");
      rightLabel.textContent = view.overlayVisible ? "tampered + label overlay" : "tampered";
      description.textContent = `${item.manipulation}: ${item.description || "(no description)"}`;
      progress.textContent = `${view.queuePosition + 1} / ${view.queueLength} pending`;
    }
    originalImg.classList.toggle("broken", view.imageBroken);
    tamperedImg.classList.toggle("broken", view.imageBroken);

    if (view.stats) {
      const rates = Object.entries(view.stats.pass_rate_by_type)
        .map(([t, r]) => `${t}: ${r === null ? "—" : (100 * r).toFixed(0) + "%"}`)
        .join("  ");
      statsPanel.textContent =
        `pending ${view.stats.pending} · scored ${view.stats.scored}` +
        ` · retained ${view.stats.retained}  ${rates}`;
    }
  };

  const session = new ReviewSession(api, reviewerName(), render);

  for (const img of [originalImg, tamperedImg]) {
    img.addEventListener("error", () => {
      const current = session.view.item;
      if (current && img.getAttribute("src")) session.markImageBroken(current.id);
    });
  }

  for (const button of scoreButtons) {
    button.addEventListener("click", () => {
      void session.submitScore(Number(button.dataset.score));
    });
  }
  el<HTMLButtonElement>("overlay-toggle").addEventListener("click", () =>
    session.toggleOverlay(),
  );
  el<HTMLButtonElement>("reload").addEventListener("click", () => {
    void session.refresh();
  });

  window.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) return;
    const action = actionForKey(event.key);
    if (!action) return;
    event.preventDefault();
    switch (action.kind) {
      case "score":
        void session.submitScore(action.value);
        break;
      case "toggle-overlay":
        session.toggleOverlay();
        break;
      case "next":
        session.next();
        break;
      case "prev":
        session.prev();
        break;
    }
  });

  startStatsPolling(session);
  void session.refresh();
}

boot();
