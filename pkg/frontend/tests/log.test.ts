import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { fmt } from "../src/dom.js";
import { SessionState } from "../src/state.js";
import { renderLog } from "../src/views/log.js";

import chronicleAfterLog from "./recorded/chronicle_after_log.json";
import logPostBarcode from "./recorded/log_post_barcode.json";
import logPostMeal from "./recorded/log_post_meal.json";
import ratingResponse from "./recorded/rating_response.json";

import { installFetchMock, mount, waitFor, type RecordedCall } from "./mockfetch.js";

const USER_PATH = "/v1/users/demo";

function makeState(): SessionState {
  const state = new SessionState(new ApiClient("", "demo"));
  state.makeId = () => "ui-0001";
  state.now = () => 1708119000000;
  return state;
}

describe("log screen", () => {
  let calls: RecordedCall[];
  let root: HTMLElement;

  beforeEach(() => {
    root = mount();
  });

  it("refuses to submit with neither dish nor barcode, sending nothing", async () => {
    calls = installFetchMock([
      { method: "GET", path: `${USER_PATH}/chronicle`, payload: { user_id: "demo", events: [] } },
    ]);
    renderLog(root, makeState());
    await waitFor(() => root.querySelector("#log-submit") !== null);
    const before = calls.length;

    (root.querySelector("#log-submit") as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 20));

    const error = root.querySelector("#log-error") as HTMLElement;
    expect(error.hidden).toBe(false);
    expect(error.textContent).toContain("dish name or a barcode");
    expect(calls.length).toBe(before); // no request left the browser
  });

  it("logs a meal, prompts for a rating, and shows it in the timeline", async () => {
    calls = installFetchMock([
      { method: "POST", path: `${USER_PATH}/events`, payload: logPostMeal, status: 201 },
      { method: "POST", path: `${USER_PATH}/events/ui-0001/rating`, payload: ratingResponse },
      { method: "GET", path: `${USER_PATH}/chronicle`, payload: chronicleAfterLog },
    ]);
    renderLog(root, makeState());
    await waitFor(() => root.querySelector("#timeline li") !== null);

    (root.querySelector("#log-dish") as HTMLInputElement).value = "oatmeal";
    (root.querySelector("#log-portion") as HTMLInputElement).value = "250";
    (root.querySelector("#log-submit") as HTMLButtonElement).click();
    await waitFor(() => root.querySelector("#log-status") !== null);

    const posted = calls.find((c) => c.method === "POST" && c.url.includes("/events?"));
    expect(posted).toBeDefined();
    const body = posted!.body as { what: { dish: string; total_g: number }; event_id: string };
    expect(body.event_id).toBe("ui-0001");
    expect(body.what.dish).toBe("oatmeal");
    expect(body.what.total_g).toBe(250);

    // the timeline row comes straight from the chronicle endpoint (API echo)
    const row = root.querySelector('#timeline li[data-event-id="ui-0001"]');
    expect(row).not.toBeNull();
    expect(row!.textContent).toContain("oatmeal");

    // rating prompt appears after submission; clicking posts the rating
    const four = root.querySelector('button[data-rating="4"]') as HTMLButtonElement;
    expect(four).not.toBeNull();
    four.click();
    await waitFor(() => root.querySelector("#rating-done") !== null);
    const rated = calls.find((c) => c.url.endsWith("/events/ui-0001/rating"));
    expect(rated!.body).toEqual({ rating: 4 });
    expect(root.querySelector("#rating-done")!.textContent).toContain(
      `rated ${(ratingResponse as { event: { rating: number } }).event.rating}/5`,
    );
  });

  it("populates the nutrition panel from a fixture barcode", async () => {
    calls = installFetchMock([
      { method: "POST", path: `${USER_PATH}/events`, payload: logPostBarcode, status: 201 },
      { method: "GET", path: `${USER_PATH}/chronicle`, payload: chronicleAfterLog },
    ]);
    const state = makeState();
    state.makeId = () => "ui-0002";
    renderLog(root, state);
    await waitFor(() => root.querySelector("#log-submit") !== null);

    (root.querySelector("#log-barcode") as HTMLInputElement).value = "0049000006346";
    (root.querySelector("#log-portion") as HTMLInputElement).value = "330";
    (root.querySelector("#log-submit") as HTMLButtonElement).click();
    await waitFor(() => root.querySelector("#nutrition-panel") !== null);

    // every displayed number is the recorded response's field, reformatted only
    const recorded = (logPostBarcode as { event: { nutrition: { kcal: number; sugar_g: number } } })
      .event.nutrition;
    const kcal = root.querySelector('#nutrition-panel [data-field="kcal"]');
    expect(kcal!.textContent).toBe(`energy: ${fmt(recorded.kcal, 1)} kcal`);
    const sugar = root.querySelector('#nutrition-panel [data-field="sugar_g"]');
    expect(sugar!.textContent).toBe(`sugar: ${fmt(recorded.sugar_g, 1)} g`);
  });
});
