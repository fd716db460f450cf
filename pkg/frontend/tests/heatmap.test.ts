import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { fmt } from "../src/dom.js";
import { SessionState } from "../src/state.js";
import { renderHeatmap } from "../src/views/heatmap.js";

import heatmap from "./recorded/heatmap.json";
import verifyPromoted from "./recorded/verify_promoted.json";

import { installFetchMock, mount, waitFor, type RecordedCall } from "./mockfetch.js";

const USER_PATH = "/v1/users/demo";

type HeatmapPayload = { rows: string[]; cols: string[]; counts: number[][] };
type VerifyPayload = {
  hypothesis: unknown;
  contexts: { effect: number | null; p_value: number | null; validity: number }[];
  overall_effect: number | null;
  overall_p: number | null;
};

const recordedHeatmap = heatmap as HeatmapPayload;
const recordedVerify = verifyPromoted as VerifyPayload;

describe("heatmap screen", () => {
  let calls: RecordedCall[];
  let root: HTMLElement;

  beforeEach(() => {
    root = mount();
    calls = installFetchMock([
      { method: "GET", path: `${USER_PATH}/heatmap`, payload: recordedHeatmap },
      { method: "POST", path: `${USER_PATH}/hypotheses/verify`, payload: recordedVerify },
    ]);
    renderHeatmap(root, new SessionState(new ApiClient("", "demo")));
  });

  async function loadGrid(): Promise<void> {
    (root.querySelector("#heatmap-load") as HTMLButtonElement).click();
    await waitFor(() => root.querySelector("td.heat-cell") !== null);
  }

  it("renders the recorded grid cell for cell", async () => {
    await loadGrid();
    const rowIndex = recordedHeatmap.rows.indexOf("roast feast");
    expect(rowIndex).toBeGreaterThanOrEqual(0);
    for (const [colIndex, col] of recordedHeatmap.cols.entries()) {
      const cell = root.querySelector(
        `td.heat-cell[data-row="roast feast"][data-col="${col}"]`,
      );
      expect(cell!.textContent).toBe(String(recordedHeatmap.counts[rowIndex][colIndex]));
    }
  });

  it("promotes a cell to a hypothesis and renders the verification", async () => {
    await loadGrid();
    const cell = root.querySelector(
      `td.heat-cell[data-row="roast feast"][data-col="${recordedHeatmap.cols[0]}"]`,
    ) as HTMLTableCellElement;
    cell.click();
    await waitFor(() => !(root.querySelector("#promote-dialog") as HTMLElement).hidden);

    const weekpart = root.querySelector(
      'input[data-confounder="weekpart"]',
    ) as HTMLInputElement;
    weekpart.checked = true;
    (root.querySelector("#promote-window") as HTMLInputElement).value = "12";
    (root.querySelector("#promote-confirm") as HTMLButtonElement).click();
    await waitFor(() => root.querySelector("#verify-overall") !== null);

    // the posted hypothesis is exactly the one the recorded verification echoes
    const posted = calls.find((c) => c.url.endsWith("/hypotheses/verify"));
    expect(posted!.body).toEqual(recordedVerify.hypothesis);

    // displayed numbers are the recorded response fields, reformatted only
    const overallEffect = root.querySelector('[data-field="overall_effect"]');
    expect(overallEffect!.textContent).toBe(fmt(recordedVerify.overall_effect));
    const overallP = root.querySelector('[data-field="overall_p"]');
    expect(overallP!.textContent).toBe(fmt(recordedVerify.overall_p, 4));

    const rows = root.querySelectorAll("tr.context-row");
    expect(rows.length).toBe(recordedVerify.contexts.length);
    rows.forEach((row, i) => {
      const ctx = recordedVerify.contexts[i];
      expect(row.querySelector('[data-field="effect"]')!.textContent).toBe(fmt(ctx.effect));
      expect(row.querySelector('[data-field="p_value"]')!.textContent).toBe(
        fmt(ctx.p_value, 4),
      );
      expect(row.querySelector('[data-field="validity"]')!.textContent).toBe(
        fmt(ctx.validity, 2),
      );
    });
  });
});
