// What-if screen: assemble a hypothetical meal from the catalog, set the
// context, and watch the ranking respond. Every edit re-queries the server;
// the list shown is exactly the API's ranked order with the API's numbers.

import { ApiError } from "../api.js";
import { clear, fmt, h } from "../dom.js";
import type { SessionState } from "../state.js";
import type {
  CandidatePick,
  CatalogPayload,
  RecommendationPayload,
  RecommendationRequestDoc,
  ScoredItem,
} from "../types.js";

export function renderWhatIf(root: HTMLElement, state: SessionState): void {
  clear(root);

  const picks: CandidatePick[] = [];
  const picker = h("select", { id: "catalog-picker" });
  const portion = h("input", { id: "pick-portion", type: "number", value: "100" });
  const weekpart = h("select", { id: "ctx-weekpart" },
    h("option", { value: "weekday" }, "weekday"),
    h("option", { value: "weekend" }, "weekend"));
  const exercised = h("select", { id: "ctx-exercised" },
    h("option", { value: "no" }, "no exercise today"),
    h("option", { value: "yes" }, "exercised today"));
  const place = h("input", { id: "ctx-place", value: "home" });
  const wPref = h("input", { id: "w-pref", type: "number", value: "0.5",
                             step: "0.1", min: "0", max: "1" });
  const picksList = h("ul", { id: "picks" });
  const status = h("p", { id: "whatif-status", class: "muted" });
  const results = h("div", { id: "whatif-results" });

  function buildRequest(): RecommendationRequestDoc {
    const w = Math.min(1, Math.max(0, Number(wPref.value)));
    return {
      context: {
        timestamp: state.now(),
        tz_offset_min: 0,
        place: place.value.trim() || "home",
        confounders: { weekpart: weekpart.value, exercised: exercised.value },
      },
      candidates: picks.map((p) => ({ dish_id: p.dish_id, portion_g: p.portion_g })),
      goals: [{ metric: "sleep_quality", direction: "increase", weight: 1.0 }],
      weights: { w_pref: w, w_health: Number((1 - w).toFixed(10)) },
    };
  }

  function renderPicks(catalog: CatalogPayload): void {
    clear(picksList);
    picks.forEach((pick, index) => {
      const swap = h("select", { class: "pick-swap", "data-index": String(index) });
      for (const option of catalogOptions(catalog)) {
        swap.append(h("option", {
          value: option,
          ...(option === pick.dish_id ? { selected: "selected" } : {}),
        }, option));
      }
      swap.addEventListener("change", () => {
        picks[index] = { ...picks[index], dish_id: swap.value };
        renderPicks(catalog);
        void query();
      });
      picksList.append(
        h("li", { class: "pick-row", "data-dish": pick.dish_id },
          swap,
          ` ${pick.portion_g} g `,
          h("button", {
            class: "pick-remove",
            onclick: () => {
              picks.splice(index, 1);
              renderPicks(catalog);
              void query();
            },
          }, "remove")),
      );
    });
  }

  function catalogOptions(catalog: CatalogPayload): string[] {
    return [
      ...catalog.dishes.map((d) => d.dish_id),
      ...catalog.items.map((i) => i.item_id),
    ];
  }

  function explanationLine(item: ScoredItem): string {
    if (!item.explanation.length) return "no applicable rules";
    return item.explanation
      .map((entry) => {
        const rules = entry.contributing
          .map(([rule, delta]) => `${rule} ${fmt(delta, 2)}`)
          .join(", ");
        return `${entry.metric}: ${fmt(entry.delta, 2)} (${rules})`;
      })
      .join("; ");
  }

  function renderResults(payload: RecommendationPayload): void {
    state.lastRecommendation = payload;
    clear(results);
    const list = h("ol", { id: "ranking" });
    for (const item of payload.ranked) {
      list.append(
        h("li", { class: "ranked-item", "data-dish": item.dish_id },
          h("b", {}, item.dish_id),
          h("span", { "data-field": "total" }, ` total ${fmt(item.total)}`),
          h("span", { "data-field": "preference" }, ` · taste ${fmt(item.preference)}`),
          h("span", { "data-field": "health" }, ` · health ${fmt(item.health)}`),
          h("p", { class: "explanation muted" }, explanationLine(item))),
      );
    }
    results.append(h("h3", {}, "ranked for this context"), list);
    if (payload.blocked.length) {
      const blockedList = h("ul", { id: "blocked" });
      for (const item of payload.blocked) {
        blockedList.append(
          h("li", { class: "blocked-item", "data-dish": item.dish_id },
            `${item.dish_id} — blocked by ${item.blocked_by.join(", ")}`),
        );
      }
      results.append(h("h3", {}, "never recommended"), blockedList);
    }
  }

  async function query(): Promise<void> {
    if (!picks.length) {
      clear(results);
      status.textContent = "add a candidate to see a ranking";
      return;
    }
    status.textContent = "asking…";
    try {
      const payload = await state.api.recommend(buildRequest());
      status.textContent = "";
      renderResults(payload);
    } catch (exc) {
      status.textContent =
        exc instanceof ApiError ? `${exc.code}: ${exc.message}` : String(exc);
      clear(results);
    }
  }

  async function boot(): Promise<void> {
    const catalog = await state.api.catalog();
    clear(picker);
    for (const option of catalogOptions(catalog)) {
      picker.append(h("option", { value: option }, option));
    }
    root.append(
      h("h2", {}, "what if I ate…"),
      h("div", { class: "form-grid" },
        h("label", {}, "candidate ", picker),
        h("label", {}, "portion (g) ", portion),
        h("button", {
          id: "pick-add",
          onclick: () => {
            picks.push({ dish_id: picker.value, portion_g: Number(portion.value) || 100 });
            renderPicks(catalog);
            void query();
          },
        }, "add"),
      ),
      picksList,
      h("div", { class: "form-grid" },
        h("label", {}, "day ", weekpart),
        h("label", {}, "activity ", exercised),
        h("label", {}, "place ", place),
        h("label", {}, "taste weight ", wPref),
      ),
      status,
      results,
    );
    weekpart.addEventListener("change", () => void query());
    exercised.addEventListener("change", () => void query());
    wPref.addEventListener("change", () => void query());
  }

  void boot();
}
