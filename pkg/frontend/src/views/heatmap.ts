// Heatmap screen: co-occurrence grid between two event axes. Clicking a cell
// opens the promote dialog, where the person picks confounders and the
// follow window; confirming posts the composed hypothesis for verification
// and renders the returned per-context results. This is the human-in-the-loop
// step: nothing is verified until someone promotes it.

import { ApiError } from "../api.js";
import { clear, fmt, h } from "../dom.js";
import type { SessionState } from "../state.js";
import type { HeatmapPayload, HypothesisDoc, VerifiedRulePayload } from "../types.js";

const CONFOUNDER_CHOICES = [
  {
    key: "weekpart",
    label: "weekday vs weekend",
    doc: { name: "weekpart", kind: "categorical", selector: "weekday_weekend" },
  },
  {
    key: "exercised",
    label: "exercised that day",
    doc: { name: "exercised", kind: "categorical", selector: "daily_any", stream: "exercise" },
  },
  {
    key: "daily_steps",
    label: "daily step count",
    doc: { name: "daily_steps", kind: "numeric", selector: "daily_sum",
           stream: "steps", metric: "count" },
  },
];

function composeHypothesis(axisA: string, axisB: string, row: string,
                           confounderKeys: string[], withinHours: number): HypothesisDoc {
  const [streamA, byA] = axisA.includes(":") ? axisA.split(":", 2) : [axisA, "presence"];
  const [streamB, byB] = axisB.includes(":") ? axisB.split(":", 2) : [axisB, "presence"];
  const where =
    byA === "ingredient"
      ? [{ attr: "ingredient", op: "contains", value: row }]
      : byA === "dish"
        ? [{ attr: "dish", op: "==", value: row }]
        : [];
  const metric = byB === "presence" ? "sleep_quality" : byB;
  return {
    name: `promoted:${row} -> ${metric}`,
    input: { steps: [{ stream: streamA, where }], max_gap_minutes: [] },
    outcome: { stream: streamB, metric, within_hours: withinHours },
    confounders: CONFOUNDER_CHOICES.filter((c) => confounderKeys.includes(c.key))
      .map((c) => c.doc),
  };
}

export function renderHeatmap(root: HTMLElement, state: SessionState): void {
  clear(root);

  const axisA = h("select", { id: "axis-a" },
    h("option", { value: "food:dish" }, "food by dish"),
    h("option", { value: "food:ingredient" }, "food by ingredient"),
  );
  const axisB = h("select", { id: "axis-b" },
    h("option", { value: "sleep:sleep_quality" }, "sleep quality (binned)"),
    h("option", { value: "sleep" }, "sleep (presence)"),
  );
  const windowInput = h("input", { id: "heatmap-window", type: "number", value: "720" });
  const grid = h("div", { id: "heatmap-grid" });
  const dialog = h("div", { id: "promote-dialog", hidden: "hidden" });
  const verdict = h("div", { id: "verify-result" });

  function renderGrid(payload: HeatmapPayload): void {
    clear(grid);
    const maxCount = Math.max(1, ...payload.counts.flat());
    const table = h("table", { class: "heatmap" });
    const header = h("tr", {}, h("th", {}, ""));
    for (const col of payload.cols) header.append(h("th", {}, col));
    table.append(header);
    payload.rows.forEach((row, i) => {
      const tr = h("tr", {}, h("th", {}, row));
      payload.cols.forEach((col, j) => {
        const count = payload.counts[i][j];
        const shade = Math.round((count / maxCount) * 80);
        tr.append(
          h(
            "td",
            {
              class: "heat-cell",
              "data-row": row,
              "data-col": col,
              style: `background: rgba(194, 84, 33, ${shade / 100})`,
              onclick: () => openDialog(payload, row, col, count),
            },
            String(count),
          ),
        );
      });
      table.append(tr);
    });
    grid.append(table);
  }

  function openDialog(payload: HeatmapPayload, row: string, col: string,
                      count: number): void {
    state.selectedCell = { row, col, count, axisA: payload.axis_a, axisB: payload.axis_b };
    clear(dialog);
    dialog.hidden = false;
    const checkboxes = CONFOUNDER_CHOICES.map((choice) =>
      h("label", { class: "confounder-choice" },
        h("input", { type: "checkbox", "data-confounder": choice.key }),
        ` ${choice.label}`),
    );
    const hours = h("input", { id: "promote-window", type: "number", value: "12" });
    dialog.append(
      h("h3", {}, `promote "${row}" × "${col}" (count ${count})`),
      h("p", { class: "muted" },
        "pick the confounders to match on before testing this relationship"),
      ...checkboxes,
      h("label", {}, "outcome window (hours) ", hours),
      h("button", {
        id: "promote-confirm",
        onclick: () => void promote(payload, row, Number(hours.value)),
      }, "verify it"),
      h("button", { id: "promote-cancel", onclick: () => { dialog.hidden = true; } },
        "cancel"),
    );
  }

  async function promote(payload: HeatmapPayload, row: string,
                         withinHours: number): Promise<void> {
    const picked = Array.from(
      dialog.querySelectorAll<HTMLInputElement>("input[data-confounder]"),
    ).filter((box) => box.checked).map((box) => box.dataset.confounder as string);
    const hypothesis = composeHypothesis(payload.axis_a, payload.axis_b, row,
                                         picked, withinHours);
    clear(verdict);
    verdict.append(h("p", { class: "muted" }, "verifying…"));
    try {
      const result = await state.api.verify(hypothesis);
      dialog.hidden = true;
      renderVerdict(result);
    } catch (exc) {
      clear(verdict);
      verdict.append(h("p", { class: "form-error" },
        exc instanceof ApiError ? `${exc.code}: ${exc.message}` : String(exc)));
    }
  }

  function renderVerdict(result: VerifiedRulePayload): void {
    clear(verdict);
    const table = h("table", { class: "contexts" },
      h("tr", {},
        h("th", {}, "context"), h("th", {}, "effect"), h("th", {}, "p"),
        h("th", {}, "adjusted p"), h("th", {}, "validity"),
        h("th", {}, "treated"), h("th", {}, "control")),
    );
    for (const ctx of result.contexts) {
      const signature = ctx.signature.map(([name, label]) => `${name}=${label}`)
        .join(", ") || "(all)";
      table.append(
        h("tr", { class: "context-row" },
          h("td", {}, signature + (ctx.low_power ? " [low power]" : "")),
          h("td", { "data-field": "effect" }, fmt(ctx.effect)),
          h("td", { "data-field": "p_value" }, fmt(ctx.p_value, 4)),
          h("td", { "data-field": "adjusted_p" }, fmt(ctx.adjusted_p, 4)),
          h("td", { "data-field": "validity" }, fmt(ctx.validity, 2)),
          h("td", {}, String(ctx.n_treated)),
          h("td", {}, String(ctx.n_control))),
      );
    }
    verdict.append(
      h("h3", {}, `verification: ${result.hypothesis.name}`),
      h("p", { id: "verify-overall" },
        `overall: ${result.overall_direction}, effect `,
        h("b", { "data-field": "overall_effect" }, fmt(result.overall_effect)),
        ", p ",
        h("b", { "data-field": "overall_p" }, fmt(result.overall_p, 4))),
      table,
    );
  }

  async function load(): Promise<void> {
    const payload = await state.api.heatmap(axisA.value, axisB.value,
                                            Number(windowInput.value));
    renderGrid(payload);
  }

  root.append(
    h("h2", {}, "event co-occurrence"),
    h("div", { class: "form-grid" },
      h("label", {}, "rows ", axisA),
      h("label", {}, "columns ", axisB),
      h("label", {}, "window (minutes) ", windowInput),
    ),
    h("button", { id: "heatmap-load", onclick: () => void load() }, "load"),
    grid,
    dialog,
    verdict,
  );
}
