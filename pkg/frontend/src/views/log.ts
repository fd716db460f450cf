// Log screen: capture a meal as it happens (typed dish or barcode), submit
// it, show what the server resolved for it, then prompt for the enjoyment
// rating. The timeline below is refreshed straight from the chronicle
// endpoint so what you see is exactly what got stored.

import { ApiError } from "../api.js";
import { clear, fmt, h } from "../dom.js";
import type { SessionState } from "../state.js";
import type { EventRecord, LogResponse } from "../types.js";

export function renderLog(root: HTMLElement, state: SessionState): void {
  clear(root);

  const dish = h("input", { id: "log-dish", placeholder: "dish name" });
  const barcode = h("input", { id: "log-barcode", placeholder: "barcode (8-14 digits)" });
  const portion = h("input", { id: "log-portion", type: "number", value: "250" });
  const companions = h("input", { id: "log-companions", type: "number", value: "0" });
  const place = h("input", { id: "log-place", value: "home" });
  const error = h("p", { id: "log-error", class: "form-error", hidden: "hidden" });
  const result = h("div", { id: "log-result" });
  const timeline = h("ul", { id: "timeline" });

  async function refreshTimeline(): Promise<void> {
    const chronicle = await state.api.chronicle();
    clear(timeline);
    const recent = chronicle.events.slice(-15).reverse();
    for (const event of recent) {
      timeline.append(renderTimelineRow(event));
    }
  }

  function renderTimelineRow(event: EventRecord): HTMLElement {
    const label =
      event.type === "food"
        ? event.what?.dish || `barcode ${event.barcode ?? "?"}`
        : `${event.stream}`;
    const stamp = new Date(
      event.type === "food" ? (event.when?.eaten_at ?? 0) : (event.start ?? 0),
    ).toISOString();
    const rating = event.rating !== undefined ? ` · rated ${event.rating}` : "";
    return h(
      "li",
      { class: "timeline-row", "data-event-id": event.event_id },
      `${stamp.slice(0, 16)} — ${label}${rating}`,
    );
  }

  function nutritionPanel(response: LogResponse): HTMLElement {
    const facts = response.event.nutrition;
    if (!facts) {
      return h("p", { id: "nutrition-panel", class: "muted" },
               `no nutrition resolved (${response.enrichment})`);
    }
    return h(
      "div",
      { id: "nutrition-panel" },
      h("h3", {}, "resolved nutrition"),
      h("ul", {},
        h("li", { "data-field": "kcal" }, `energy: ${fmt(facts.kcal, 1)} kcal`),
        h("li", { "data-field": "sugar_g" }, `sugar: ${fmt(facts.sugar_g, 1)} g`),
        h("li", { "data-field": "protein_g" }, `protein: ${fmt(facts.protein_g, 1)} g`),
        h("li", { "data-field": "caffeine_mg" }, `caffeine: ${fmt(facts.caffeine_mg, 1)} mg`),
      ),
    );
  }

  function ratingPrompt(eventId: string): HTMLElement {
    const container = h("div", { id: "rating-prompt" }, h("span", {}, "how was it? "));
    for (let value = 1; value <= 5; value += 1) {
      container.append(
        h(
          "button",
          {
            class: "rating-btn",
            "data-rating": String(value),
            onclick: async () => {
              const response = await state.api.rateEvent(eventId, value);
              container.replaceChildren(
                h("span", { id: "rating-done" },
                  `thanks — rated ${response.event.rating}/5`),
              );
              await refreshTimeline();
            },
          },
          String(value),
        ),
      );
    }
    return container;
  }

  async function submit(): Promise<void> {
    error.hidden = true;
    error.textContent = "";
    const dishName = dish.value.trim();
    const code = barcode.value.trim();
    if (!dishName && !code) {
      error.textContent = "enter a dish name or a barcode first";
      error.hidden = false;
      return; // no request leaves the browser
    }
    const eaten = state.now();
    const record: EventRecord = {
      type: "food",
      event_id: state.makeId(),
      what: { dish: dishName, ingredients: [], total_g: Number(portion.value) || 0 },
      when: {
        eaten_at: eaten,
        logged_at: eaten,
        tz_offset_min: -new Date(eaten).getTimezoneOffset(),
      },
      where: { place: place.value.trim() || "unknown" },
      who: { companions: Number(companions.value) || 0 },
      how: code && !dishName ? "barcode" : "ui",
    };
    if (code) record.barcode = code;
    try {
      const response = await state.api.logEvent(record, true);
      state.pendingEventId = response.event.event_id;
      clear(result);
      result.append(
        h("p", { id: "log-status" },
          `${response.status}: ${response.event.event_id}`),
        nutritionPanel(response),
        ratingPrompt(response.event.event_id),
      );
      dish.value = "";
      barcode.value = "";
      await refreshTimeline();
    } catch (exc) {
      error.textContent = exc instanceof ApiError
        ? `${exc.code}: ${exc.message}`
        : String(exc);
      error.hidden = false;
    }
  }

  root.append(
    h("h2", {}, "log a meal"),
    h("div", { class: "form-grid" },
      h("label", {}, "dish ", dish),
      h("label", {}, "barcode ", barcode),
      h("label", {}, "portion (g) ", portion),
      h("label", {}, "companions ", companions),
      h("label", {}, "place ", place),
    ),
    h("button", { id: "log-submit", onclick: () => void submit() }, "log it"),
    error,
    result,
    h("h2", {}, "timeline"),
    h("button", { id: "timeline-refresh", onclick: () => void refreshTimeline() },
      "refresh"),
    timeline,
  );

  void refreshTimeline();
}
