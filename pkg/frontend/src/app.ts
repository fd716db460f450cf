// Hash-routed shell: #/log, #/heatmap, #/whatif.

import { ApiClient } from "./api.js";
import { clear, h } from "./dom.js";
import { SessionState } from "./state.js";
import { renderHeatmap } from "./views/heatmap.js";
import { renderLog } from "./views/log.js";
import { renderWhatIf } from "./views/whatif.js";

const ROUTES: Record<string, (root: HTMLElement, state: SessionState) => void> = {
  "#/log": renderLog,
  "#/heatmap": renderHeatmap,
  "#/whatif": renderWhatIf,
};

export function boot(root: HTMLElement, state: SessionState): void {
  const nav = h("nav", {},
    h("a", { href: "#/log" }, "log"),
    " · ",
    h("a", { href: "#/heatmap" }, "patterns"),
    " · ",
    h("a", { href: "#/whatif" }, "what if"),
    h("span", { class: "user-badge" }, ` ${state.api.userId}`),
  );
  const outlet = h("main", { id: "outlet" });
  clear(root);
  root.append(h("header", {}, h("h1", {}, "personal food model"), nav), outlet);

  function route(): void {
    const view = ROUTES[window.location.hash] ?? renderLog;
    view(outlet, state);
  }

  window.addEventListener("hashchange", route);
  route();
}

export function main(): void {
  const params = new URLSearchParams(window.location.search);
  const user = params.get("user") ?? "demo";
  const state = new SessionState(new ApiClient("", user));
  const root = document.getElementById("app");
  if (root) boot(root, state);
}
